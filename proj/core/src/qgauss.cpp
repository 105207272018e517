#include "qsf/qgauss.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace qsf {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Draws this close to the cutoff radius are redrawn: the escort weight
// 1/(1 - c|z|^2) would otherwise overflow.
constexpr double kCutoffMargin = 1e-12;

void require_q(double q, const char* where) {
  if (!(q < 3.0)) {
    std::ostringstream os;
    os << where << ": q must be < 3 (got " << q << ")";
    throw std::invalid_argument(os.str());
  }
}

void require_joint(double q, int dim, const char* where) {
  require_q(q, where);
  if (dim < 1) throw std::invalid_argument(std::string(where) + ": dim must be >= 1");
  if (!(q < joint_q_limit(dim))) {
    std::ostringstream os;
    os << where << ": the " << dim << "-variate q-Gaussian is not normalizable for q >= "
       << joint_q_limit(dim) << " (got q = " << q << ")";
    throw std::domain_error(os.str());
  }
}

double squared_distance(std::span<const double> x, const QGaussianSpec& spec) {
  double r2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - spec.center(i);
    r2 += d * d;
  }
  return r2;
}

// Unnormalized standard kernel value k(r2) = exp(log_kernel(r2, q)).
double kernel(double r2, double q) { return std::exp(log_kernel(r2, q)); }

double standard_radius(double q) { return support_radius(q, 1.0); }

}  // namespace

QGaussianSpec::QGaussianSpec(double q_, double beta_, int dim_, Vector mu_)
    : q(q_), beta(beta_), dim(dim_), mu(std::move(mu_)) {
  validate();
}

void QGaussianSpec::validate() const {
  require_q(q, "QGaussianSpec");
  if (!(beta > 0.0)) throw std::invalid_argument("QGaussianSpec: beta must be > 0");
  if (dim < 1) throw std::invalid_argument("QGaussianSpec: dim must be >= 1");
  if (!mu.empty() && mu.size() != static_cast<std::size_t>(dim))
    throw std::invalid_argument("QGaussianSpec: mu must have length dim");
}

bool SupportRegion::contains(std::span<const double> x) const {
  if (kind == SupportKind::full_space) return true;
  double r2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - (center.empty() ? 0.0 : center[i]);
    r2 += d * d;
  }
  return r2 < radius * radius;
}

double joint_q_limit(int dim) {
  if (dim < 1) throw std::invalid_argument("joint_q_limit: dim must be >= 1");
  return 1.0 + 2.0 / dim;
}

double q_log(double x, double q) {
  if (!(x > 0.0)) throw std::domain_error("q_log: x must be positive");
  if (q == 1.0) return std::log(x);
  const double k = 1.0 - q;
  return std::expm1(k * std::log(x)) / k;
}

double support_radius(double q, double beta) {
  require_q(q, "support_radius");
  if (q >= 1.0) return kInf;
  return beta * std::sqrt((3.0 - q) / (1.0 - q));
}

SupportRegion support(const QGaussianSpec& spec) {
  spec.validate();
  SupportRegion region;
  region.center = spec.mu.empty() ? Vector(spec.dim, 0.0) : spec.mu;
  if (spec.q < 1.0) {
    region.kind = SupportKind::ball;
    region.radius = support_radius(spec.q, spec.beta);
  }
  return region;
}

double normalizing_constant(double q, int dim) {
  require_joint(q, dim, "normalizing_constant");
  const double half = 0.5 * dim;
  if (q == 1.0) return std::pow(kTwoPi, half);
  if (q < 1.0) {
    // int (1 - c r^2)_+^a dx = (pi/c)^{N/2} Gamma(a+1) / Gamma(a+1+N/2)
    const double a = 1.0 / (1.0 - q);
    const double c = kernel_coefficient(q);
    return std::pow(kPi / c, half) * boost::math::tgamma_delta_ratio(a + 1.0, half);
  }
  // int (1 + d r^2)^{-s} dx = (pi/d)^{N/2} Gamma(s - N/2) / Gamma(s)
  const double s = 1.0 / (q - 1.0);
  const double d = -kernel_coefficient(q);
  return std::pow(kPi / d, half) * boost::math::tgamma_delta_ratio(s - half, half);
}

double log_kernel(double r2, double q) {
  if (q == 1.0) return -0.5 * r2;
  const double cr2 = kernel_coefficient(q) * r2;
  if (cr2 >= 1.0) return -kInf;
  return std::log1p(-cr2) / (1.0 - q);
}

double pdf(std::span<const double> x, const QGaussianSpec& spec) {
  spec.validate();
  if (x.size() != static_cast<std::size_t>(spec.dim))
    throw std::invalid_argument("pdf: dimension mismatch");
  const double k = normalizing_constant(spec.q, spec.dim);
  const double r2 = squared_distance(x, spec) / (spec.beta * spec.beta);
  const double lk = log_kernel(r2, spec.q);
  if (lk == -kInf) return 0.0;
  return std::exp(lk) / (std::pow(spec.beta, spec.dim) * k);
}

double pdf(double x, double q, double beta) {
  const double xs[1] = {x};
  return pdf(xs, QGaussianSpec(q, beta, 1));
}

Vector pdf_gradient(std::span<const double> x, const QGaussianSpec& spec) {
  const double density = pdf(x, spec);
  Vector grad(x.size(), 0.0);
  if (density == 0.0) return grad;
  const double b2 = spec.beta * spec.beta;
  double factor;
  if (spec.is_gaussian()) {
    factor = -density / b2;
  } else {
    const double base = 1.0 - kernel_coefficient(spec.q) * squared_distance(x, spec) / b2;
    factor = -2.0 * density / ((3.0 - spec.q) * b2 * base);
  }
  for (std::size_t i = 0; i < x.size(); ++i) grad[i] = factor * (x[i] - spec.center(i));
  return grad;
}

double sample_scalar(RngStream& rng, double q) {
  require_q(q, "sample_scalar");
  if (q == 1.0) {
    const double u1 = rng.uniform_open();
    const double u2 = rng.uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
  }
  const double q_prime = (1.0 + q) / (3.0 - q);
  const double limit = q < 1.0 ? standard_radius(q) - kCutoffMargin : kInf;
  for (;;) {
    const double u1 = rng.uniform_open();
    const double u2 = rng.uniform();
    const double z = std::sqrt(-2.0 * q_log(u1, q_prime)) * std::cos(kTwoPi * u2);
    if (std::isfinite(z) && std::abs(z) < limit) return z;
  }
}

void sample_vector(RngStream& rng, double q, std::span<double> out) {
  for (auto& v : out) v = sample_scalar(rng, q);
}

Vector sample_vector(RngStream& rng, double q, int dim) {
  if (dim < 1) throw std::invalid_argument("sample_vector: dim must be >= 1");
  Vector out(static_cast<std::size_t>(dim));
  sample_vector(rng, q, out);
  return out;
}

void sample_perturbation(RngStream& rng, double q, std::span<double> out) {
  const double c = kernel_coefficient(q);
  for (;;) {
    sample_vector(rng, q, out);
    if (q >= 1.0) return;
    double r2 = 0.0;
    for (double v : out) r2 += v * v;
    if (1.0 - c * r2 > kCutoffMargin) return;
  }
}

Estimate q_expectation(const ScalarField& f, const QGaussianSpec& spec,
                       const QExpectationOptions& options) {
  spec.validate();
  const int n = spec.dim;
  const double q = spec.q;
  const double radius = standard_radius(q);
  const auto& tol = options.tolerance;

  if (n == 1) {
    const double lo = std::isfinite(radius) ? -radius : -kInf;
    const double hi = std::isfinite(radius) ? radius : kInf;
    auto escort = [q](double y) { return std::exp(q * log_kernel(y * y, q)); };
    auto num = quad::integrate(
        [&](double y) {
          const double e = escort(y);
          if (e == 0.0) return 0.0;
          const double x[1] = {spec.center(0) + spec.beta * y};
          return f(x) * e;
        },
        lo, hi, tol);
    auto den = quad::integrate(escort, lo, hi, tol);
    const double value = num.value / den.value;
    return {value, std::abs(value) * (num.error / std::max(std::abs(num.value), 1e-300) +
                                      den.error / den.value) +
                       num.error / den.value};
  }

  if (n == 2) {
    auto escort2 = [q](double r2) { return std::exp(q * log_kernel(r2, q)); };
    auto num = quad::integrate_polar(
        [&](double y0, double y1) {
          const double e = escort2(y0 * y0 + y1 * y1);
          if (e == 0.0) return 0.0;
          const double x[2] = {spec.center(0) + spec.beta * y0, spec.center(1) + spec.beta * y1};
          return f(x) * e;
        },
        radius, tol);
    auto den = quad::integrate_radial([&](double r) { return escort2(r * r); }, 2, radius, tol);
    const double value = num.value / den.value;
    return {value, (num.error + std::abs(value) * den.error) / den.value};
  }

  // dim > 2: <f>_q = E_G[f w] / Lambda_q, with E_G over random directions
  // times a radial integral along each direction.
  const double k = normalizing_constant(q, n);
  const double lambda = lambda_q(q, n);
  const double area = quad::unit_sphere_area(n);
  RngStream rng(options.seed, static_cast<std::uint64_t>(n));
  Vector u(static_cast<std::size_t>(n)), x(static_cast<std::size_t>(n));
  double mean = 0.0, m2 = 0.0;
  const std::size_t count = std::max<std::size_t>(options.directions, 2);
  for (std::size_t j = 0; j < count; ++j) {
    double norm2 = 0.0;
    for (auto& ui : u) {
      ui = sample_scalar(rng, 1.0);
      norm2 += ui * ui;
    }
    const double inv = 1.0 / std::sqrt(norm2);
    for (auto& ui : u) ui *= inv;
    auto radial = quad::integrate(
        [&](double r) {
          if (r == 0.0) return 0.0;
          const double r2 = r * r;
          const double g = kernel(r2, q) / k;
          if (g == 0.0) return 0.0;
          for (int i = 0; i < n; ++i) x[i] = spec.center(i) + spec.beta * r * u[i];
          const double w = q == 1.0 ? 1.0 : escort_weight(r2, q);
          return f(x) * g * w * std::pow(r, n - 1);
        },
        0.0, radius, tol);
    const double sample = area * radial.value / lambda;
    const double delta = sample - mean;
    mean += delta / static_cast<double>(j + 1);
    m2 += delta * (sample - mean);
  }
  const double se = std::sqrt(m2 / static_cast<double>(count - 1) / static_cast<double>(count));
  if (!(se <= options.max_standard_error)) {
    std::ostringstream os;
    os << "q_expectation: Monte Carlo standard error " << se << " exceeds "
       << options.max_standard_error;
    throw ConvergenceError(os.str());
  }
  return {mean, se};
}

double tsallis_entropy(const QGaussianSpec& spec) {
  spec.validate();
  const int n = spec.dim;
  const double q = spec.q;
  const double k = normalizing_constant(q, n);
  const double radius = standard_radius(q);
  if (q == 1.0) {
    // -int p ln p for the standard normal, then the scale shift N ln beta.
    auto r = quad::integrate_radial(
        [&](double rr) {
          const double p = kernel(rr * rr, 1.0) / k;
          return p == 0.0 ? 0.0 : p * (0.5 * rr * rr + std::log(k));
        },
        n, radius);
    return r.value + n * std::log(spec.beta);
  }
  if (q > 1.0 && !(2.0 * q / (q - 1.0) > n))
    throw std::domain_error("tsallis_entropy: integral of p^q diverges for this (q, dim)");
  auto r = quad::integrate_radial(
      [&](double rr) { return std::exp(q * (log_kernel(rr * rr, q) - std::log(k))); }, n, radius);
  const double integral = std::pow(spec.beta, n * (1.0 - q)) * r.value;
  return (1.0 - integral) / (q - 1.0);
}

double lambda_q(double q, int dim) {
  require_joint(q, dim, "lambda_q");
  if (q == 1.0) return 1.0;
  const double k = normalizing_constant(q, dim);
  const double log_k = std::log(k);
  auto r = quad::integrate_radial(
      [&](double rr) { return std::exp(q * (log_kernel(rr * rr, q) - log_k)); }, dim,
      standard_radius(q));
  return std::pow(k, q - 1.0) * r.value;
}

Estimate lambda_q_monte_carlo(double q, int dim, std::size_t samples, RngStream& rng) {
  require_q(q, "lambda_q_monte_carlo");
  if (dim < 1 || samples < 2) throw std::invalid_argument("lambda_q_monte_carlo: bad arguments");
  Vector z(static_cast<std::size_t>(dim));
  double mean = 0.0, m2 = 0.0;
  for (std::size_t j = 0; j < samples; ++j) {
    sample_perturbation(rng, q, z);
    double r2 = 0.0;
    for (double v : z) r2 += v * v;
    const double w = q == 1.0 ? 1.0 : escort_weight(r2, q);
    const double delta = w - mean;
    mean += delta / static_cast<double>(j + 1);
    m2 += delta * (w - mean);
  }
  const double n = static_cast<double>(samples);
  return {mean, std::sqrt(m2 / (n - 1.0) / n)};
}

double standard_cdf(double x, double q) {
  require_q(q, "standard_cdf");
  const double radius = standard_radius(q);
  const double t = std::min(std::abs(x), radius);
  const double half_mass =
      t == 0.0 ? 0.0 : quad::integrate([q](double y) { return pdf(y, q); }, 0.0, t).value;
  const double cdf = x >= 0.0 ? 0.5 + half_mass : 0.5 - half_mass;
  return std::clamp(cdf, 0.0, 1.0);
}

double ks_statistic(std::vector<double> draws, double q) {
  if (draws.empty()) throw std::invalid_argument("ks_statistic: no draws");
  require_q(q, "ks_statistic");
  std::sort(draws.begin(), draws.end());
  const double n = static_cast<double>(draws.size());
  const double k = normalizing_constant(q, 1);
  auto density = [q, k](double y) {
    const double lk = log_kernel(y * y, q);
    return lk == -kInf ? 0.0 : std::exp(lk) / k;
  };
  double cdf = standard_cdf(draws.front(), q);
  double d = 0.0;
  for (std::size_t i = 0; i < draws.size(); ++i) {
    if (i > 0) {
      const double a = draws[i - 1], b = draws[i];
      if (b > a) {
        // Short steps between neighbouring order statistics are exact enough
        // with a fixed rule; wide gaps (in the tails) go to the adaptive one.
        if (b - a <= 0.05 * (1.0 + std::min(std::abs(a), std::abs(b))))
          cdf += boost::math::quadrature::gauss<double, 20>::integrate(density, a, b);
        else
          cdf += quad::integrate(density, a, b).value;
      }
    }
    const double lo = static_cast<double>(i) / n;
    const double hi = static_cast<double>(i + 1) / n;
    d = std::max({d, hi - cdf, cdf - lo});
  }
  return d;
}

double ks_critical_value(std::size_t n, double alpha) {
  if (n == 0 || !(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("ks_critical_value: bad arguments");
  const double c = std::sqrt(-0.5 * std::log(0.5 * alpha));
  const double sn = std::sqrt(static_cast<double>(n));
  return c / (sn + 0.12 + 0.11 / sn);
}

}  // namespace qsf
