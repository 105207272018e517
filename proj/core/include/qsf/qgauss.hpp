#pragma once

// q-Gaussian distributions: q-algebra, density, normalizing constants,
// support, generalized Box-Muller sampling, q-expectation, Tsallis entropy
// and the Lambda_q scale factor.
//
// Conventions: the standard q-Gaussian has center 0 and q-variance 1, i.e.
// density proportional to (1 - (1-q)/(3-q) |x|^2)_+^{1/(1-q)}. q = 1 is the
// exact Gaussian and is handled by dedicated branches, never by limits.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "qsf/quadrature.hpp"
#include "qsf/rng.hpp"

namespace qsf {

using Vector = std::vector<double>;
using ScalarField = std::function<double(std::span<const double>)>;

struct QGaussianSpec {
  double q = 1.0;
  double beta = 1.0;
  int dim = 1;
  Vector mu;  ///< center; empty means the origin

  QGaussianSpec() = default;
  QGaussianSpec(double q, double beta, int dim, Vector mu = {});

  /// Throws std::invalid_argument unless q < 3, beta > 0, dim >= 1 and
  /// mu is empty or of length dim.
  void validate() const;

  bool is_gaussian() const noexcept { return q == 1.0; }
  double center(std::size_t i) const noexcept { return mu.empty() ? 0.0 : mu[i]; }
};

enum class SupportKind { full_space, ball };

struct SupportRegion {
  SupportKind kind = SupportKind::full_space;
  double radius = 0.0;  ///< meaningful only for kind == ball
  Vector center;

  bool contains(std::span<const double> x) const;
};

/// Largest q (exclusive) for which the joint dim-variate density is
/// normalizable: 1 + 2/dim. Equals 3 for dim = 1.
double joint_q_limit(int dim);

/// (1-q)/(3-q): coefficient of |x|^2 inside the standard kernel.
inline double kernel_coefficient(double q) { return (1.0 - q) / (3.0 - q); }

/// q-deformed logarithm (x^{1-q} - 1)/(1-q); natural log at q = 1.
double q_log(double x, double q);

SupportRegion support(const QGaussianSpec& spec);

/// beta * sqrt((3-q)/(1-q)) for q < 1, +infinity otherwise.
double support_radius(double q, double beta = 1.0);

/// K_{q,N} from the closed Gamma-function forms.
double normalizing_constant(double q, int dim);

/// log of the unnormalized standard kernel at squared radius r2
/// (-infinity outside the support).
double log_kernel(double r2, double q);

/// Multivariate q-Gaussian density.
double pdf(std::span<const double> x, const QGaussianSpec& spec);
double pdf(double x, double q, double beta = 1.0);

/// Gradient of the density in x; zero outside the support.
Vector pdf_gradient(std::span<const double> x, const QGaussianSpec& spec);

/// 1 / (1 - (1-q)/(3-q) r2): the Lemma-1 weight. Caller ensures r2 is
/// strictly inside the support when q < 1.
inline double escort_weight(double r2, double q) { return 1.0 / (1.0 - kernel_coefficient(q) * r2); }

/// One standard univariate q-Gaussian draw (generalized Box-Muller).
double sample_scalar(RngStream& rng, double q);

/// dim i.i.d. standard univariate q-Gaussian draws.
Vector sample_vector(RngStream& rng, double q, int dim);
void sample_vector(RngStream& rng, double q, std::span<double> out);

/// As sample_vector, but redraws the whole vector while its squared norm lies
/// outside the open support ball (q < 1 only), so that escort_weight stays
/// finite and positive. For q >= 1 this is exactly sample_vector.
void sample_perturbation(RngStream& rng, double q, std::span<double> out);

struct Estimate {
  double value = 0.0;
  double error = 0.0;  ///< quadrature error bound or Monte Carlo standard error
};

struct QExpectationOptions {
  quad::Tolerance tolerance{};
  /// Monte Carlo path (dim > 2): number of random directions and the
  /// standard error that must be reached.
  std::size_t directions = 4096;
  double max_standard_error = 1e-3;
  std::uint64_t seed = 0x5eed;
};

/// <f>_q = int f p^q / int p^q. Quadrature for dim <= 2; for larger dim the
/// weighted identity <f>_q = E_G[f w] / Lambda_q is evaluated with random
/// directions and radial quadrature.
Estimate q_expectation(const ScalarField& f, const QGaussianSpec& spec,
                       const QExpectationOptions& options = {});

/// (1 - int p^q)/(q - 1); Shannon differential entropy at q = 1.
double tsallis_entropy(const QGaussianSpec& spec);

/// Lambda_q = K^{q-1} int G_q^q for the standard joint dim-variate
/// q-Gaussian, by radial quadrature. Exactly 1 at q = 1.
double lambda_q(double q, int dim);

/// E[w(Z)] with Z drawn by sample_perturbation. For dim = 1 this is the
/// Monte Carlo form of Lambda_q; for dim > 1 it is the value seen by the
/// i.i.d.-component perturbations the optimizer uses.
Estimate lambda_q_monte_carlo(double q, int dim, std::size_t samples, RngStream& rng);

/// CDF of the standard univariate q-Gaussian, by quadrature of the density.
double standard_cdf(double x, double q);

/// Two-sided Kolmogorov-Smirnov statistic of draws against standard_cdf.
double ks_statistic(std::vector<double> draws, double q);

/// Critical value of the KS statistic for n draws at level alpha
/// (Stephens' finite-sample correction of the asymptotic law).
double ks_critical_value(std::size_t n, double alpha);

}  // namespace qsf
