#pragma once

// Smoothed-functional (SF) gradient estimation with q-Gaussian perturbations.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "qsf/qgauss.hpp"
#include "qsf/rng.hpp"

namespace qsf {

/// Objective observed through perturbations. May be noisy: it is called
/// samples_per_perturbation times per perturbation and the calls are averaged.
using Objective = std::function<double(std::span<const double>)>;

struct GradEstimatorConfig {
  double q = 1.0;
  double beta = 0.1;
  int dim = 1;
  std::size_t num_perturbations = 1000;       ///< M
  std::size_t samples_per_perturbation = 1;   ///< L
  unsigned threads = 1;  ///< result does not depend on this

  void validate() const;
};

/// Estimate of Lambda_q * grad J (the 1/Lambda_q factor is not applied;
/// divide by lambda_q() for the unscaled gradient).
struct GradEstimate {
  Vector value;
  Vector standard_error;  ///< per component, over the M perturbation terms
  bool lambda_scaled = true;
};

/// 1/(1 - (1-q)/(3-q) |eta|^2). Exactly 1 for q = 1. Throws std::domain_error
/// when q < 1 and eta is not strictly inside the support ball.
double sf_weight(std::span<const double> eta, double q);

/// Monte Carlo estimate of the smoothed functional E[f(theta - beta z)],
/// z a vector of i.i.d. standard q-Gaussian components.
double smoothed_value(const Objective& f, std::span<const double> theta, double q, double beta,
                      std::size_t num_samples, RngStream& rng);

/// One-sided q-SF gradient estimate
///   (1/(beta M L)) sum_n sum_m z(n) f_m(theta + beta z(n)) sf_weight(z(n)).
/// Perturbations are processed in fixed-size blocks with their own child
/// streams and reduced in block order, so the result is a function of rng
/// alone.
GradEstimate estimate_gradient(const Objective& f, std::span<const double> theta,
                               const GradEstimatorConfig& cfg, RngStream& rng);

/// Classical Gaussian SF estimator (1/(beta M L)) sum sum eta(n) f_m, with
/// eta from Box-Muller. Shares the block layout of estimate_gradient, so with
/// q = 1 the two agree bit for bit on the same stream.
GradEstimate estimate_gradient_gaussian(const Objective& f, std::span<const double> theta,
                                        double beta, std::size_t num_perturbations,
                                        std::size_t samples_per_perturbation, RngStream& rng,
                                        unsigned threads = 1);

}  // namespace qsf
