#pragma once

// Numerical verification that the q-Gaussian is a valid smoothing kernel:
//   P1 scale family       G_beta(x) = beta^-N G_1(x / beta)
//   P2 differentiability  closed-form gradient vs central differences,
//                         with the cutoff sphere located for q < 1
//   P3 normalization      the kernel integrates to one
//   P4 concentration      mass outside |x| > eps vanishes as beta -> 0
//   P5 smoothing limit    S_beta[f](theta) -> f(theta) as beta -> 0
// All checks are on the univariate kernel.

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "qsf/qgauss.hpp"
#include "qsf/sfgrad.hpp"

namespace qsf {

struct PropertyCheck {
  std::string id;
  bool passed = false;
  double discrepancy = 0.0;  ///< worst measured deviation (meaning per property)
  std::string detail;
};

struct KernelCheckOptions {
  double theta = 0.0;                     ///< point where S_beta[f] is evaluated
  double mass_epsilon = 0.1;              ///< P4 radius
  double normalization_tolerance = 1e-6;  ///< P3
  double scale_tolerance = 1e-12;         ///< P1, relative
  double gradient_tolerance = 1e-6;       ///< P2, relative
  /// P5: required |S - f| at the smallest beta, enforced for q < 5/3 only.
  double smoothing_tolerance = 1e-3;
  /// Bound on |f|, used to bound the truncated tail of the P5 integral.
  double test_function_bound = 1.0;
  /// P5 for q >= 5/3 uses Monte Carlo with common random numbers.
  std::size_t monte_carlo_samples = 1'000'000;
  std::uint64_t seed = 20100705;
};

struct KernelPropertyReport {
  double q = 1.0;
  std::vector<double> betas;
  std::array<PropertyCheck, 5> checks;  ///< P1..P5 in order

  bool compact_support = false;
  double cutoff_radius = 0.0;          ///< standard (beta = 1) radius; 0 if none
  double cutoff_gradient_jump = 0.0;   ///< |grad G| just inside the cutoff (beta = 1)
  std::vector<double> normalization;   ///< per beta
  std::vector<double> mass_outside;    ///< per beta
  std::vector<double> smoothing_error; ///< per beta, |S_beta[f](theta) - f(theta)|
  std::string smoothing_method;        ///< "quadrature" or "monte-carlo"

  bool all_passed() const;
};

KernelPropertyReport verify_kernel_properties(double q, const std::vector<double>& betas,
                                              const Objective& test_function,
                                              const KernelCheckOptions& options = {});

std::string to_json(const KernelPropertyReport& report);

/// Both sides of the weighted q-expectation identity for the standard
/// dim-variate q-Gaussian (dim 1 or 2), each by quadrature:
///   first  = <f>_q                              (escort-density definition)
///   second = E_G[f / (1 - (1-q)/(3-q)|x|^2)] / Lambda_q
std::pair<double, double> lemma1_check(const ScalarField& f, double q, int dim);

}  // namespace qsf
