#include "qsf/kernel_properties.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "qsf/detail/summation.hpp"

namespace qsf {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kHeavyTailQ = 5.0 / 3.0;

double relative_gap(double a, double b) {
  if (a == b) return 0.0;
  if (a == 0.0 || b == 0.0) return kInf;
  return std::abs(a - b) / std::max(std::abs(a), std::abs(b));
}

// Interior sample radii (in units of the scaled kernel) used by P1 and P2.
std::vector<double> interior_radii(double q) {
  if (q < 1.0) {
    const double r = support_radius(q);
    return {0.0, 0.1 * r, 0.25 * r, 0.4 * r, 0.6 * r, 0.75 * r, 0.9 * r};
  }
  return {0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0};
}

PropertyCheck check_scale_family(double q, const std::vector<double>& betas, double tol) {
  PropertyCheck c{"P1", true, 0.0, ""};
  std::vector<double> radii = interior_radii(q);
  if (q < 1.0) {
    const double r = support_radius(q);
    radii.insert(radii.end(), {1.05 * r, 2.0 * r});
  }
  for (double beta : betas) {
    for (double r : radii) {
      for (double sign : {-1.0, 1.0}) {
        const double x = sign * beta * r;
        const double direct = pdf(x, q, beta);
        const double scaled = pdf(x / beta, q, 1.0) / beta;
        c.discrepancy = std::max(c.discrepancy, relative_gap(direct, scaled));
      }
    }
  }
  c.passed = c.discrepancy <= tol;
  std::ostringstream os;
  os << "max relative gap between G_beta(x) and G_1(x/beta)/beta: " << c.discrepancy;
  c.detail = os.str();
  return c;
}

PropertyCheck check_differentiability(double q, const std::vector<double>& betas, double tol,
                                      KernelPropertyReport& report) {
  PropertyCheck c{"P2", true, 0.0, ""};
  bool outside_ok = true;
  for (double beta : betas) {
    const QGaussianSpec spec(q, beta, 1);
    auto density = [&](double x) { return pdf(x, q, beta); };
    double scale = 0.0, worst = 0.0;
    for (double r : interior_radii(q)) {
      if (r == 0.0) continue;
      const double x[1] = {beta * r};
      const double analytic = pdf_gradient(x, spec)[0];
      const double h = 1e-4 * beta;
      const double numeric = (density(x[0] + h) - density(x[0] - h)) / (2.0 * h);
      scale = std::max(scale, std::abs(analytic));
      worst = std::max(worst, std::abs(analytic - numeric));
    }
    c.discrepancy = std::max(c.discrepancy, scale > 0.0 ? worst / scale : worst);
    if (q < 1.0) {
      const double r = support_radius(q, beta);
      for (double f : {1.05, 1.5, 3.0}) {
        const double x[1] = {f * r};
        const double h = 1e-4 * beta;
        const double numeric = (density(x[0] + h) - density(x[0] - h)) / (2.0 * h);
        if (pdf_gradient(x, spec)[0] != 0.0 || numeric != 0.0 || density(x[0]) != 0.0)
          outside_ok = false;
      }
    }
  }
  report.compact_support = q < 1.0;
  if (q < 1.0) {
    const double r = support_radius(q);
    report.cutoff_radius = r;
    const double inside[1] = {r * (1.0 - 1e-9)};
    report.cutoff_gradient_jump = std::abs(pdf_gradient(inside, QGaussianSpec(q, 1.0, 1))[0]);
  }
  c.passed = c.discrepancy <= tol && outside_ok;
  std::ostringstream os;
  os << "closed-form gradient vs central differences, max relative error " << c.discrepancy;
  if (q < 1.0) {
    os << "; cutoff sphere at |x| = " << report.cutoff_radius << " * beta"
       << ", density and gradient " << (outside_ok ? "vanish" : "DO NOT vanish") << " outside"
       << ", gradient jump across it " << report.cutoff_gradient_jump
       << " (piecewise differentiable)";
  } else {
    os << "; differentiable on all of R";
  }
  c.detail = os.str();
  return c;
}

PropertyCheck check_normalization(double q, const std::vector<double>& betas, double tol,
                                  KernelPropertyReport& report) {
  PropertyCheck c{"P3", true, 0.0, ""};
  for (double beta : betas) {
    const double r = support_radius(q, beta);
    const double lo = std::isfinite(r) ? -r : -kInf;
    const double hi = std::isfinite(r) ? r : kInf;
    double mass = std::numeric_limits<double>::quiet_NaN();
    try {
      mass = quad::integrate([&](double x) { return pdf(x, q, beta); }, lo, hi,
                             {0.1 * tol, 0.1 * tol})
                 .value;
    } catch (const quad::QuadratureError& e) {
      report.normalization.push_back(mass);
      c.passed = false;
      c.discrepancy = kInf;
      c.detail = e.what();
      return c;
    }
    report.normalization.push_back(mass);
    c.discrepancy = std::max(c.discrepancy, std::abs(mass - 1.0));
  }
  c.passed = c.discrepancy <= tol;
  std::ostringstream os;
  os << "max |integral of G_beta - 1| = " << c.discrepancy;
  c.detail = os.str();
  return c;
}

PropertyCheck check_concentration(double q, const std::vector<double>& betas, double eps,
                                  KernelPropertyReport& report) {
  PropertyCheck c{"P4", true, 0.0, ""};
  for (double beta : betas) {
    const double mass = std::max(0.0, 2.0 * (1.0 - standard_cdf(eps / beta, q)));
    report.mass_outside.push_back(mass);
  }
  const auto& m = report.mass_outside;
  bool monotone = true;
  for (std::size_t i = 1; i < m.size(); ++i) monotone = monotone && m[i] <= m[i - 1] + 1e-12;
  const bool shrinks = m.back() < m.front() || m.back() == 0.0;
  c.passed = monotone && shrinks;
  c.discrepancy = m.back();
  std::ostringstream os;
  os << "P(|x| > " << eps << ") along the beta sequence:";
  for (double v : m) os << ' ' << v;
  c.detail = os.str();
  return c;
}

// S_beta[f](theta) by quadrature over the standard variable z.
Estimate smoothed_by_quadrature(double q, double beta, double theta, const Objective& f,
                                double bound) {
  auto integrand = [&](double z) {
    const double p = pdf(z, q);
    if (p == 0.0) return 0.0;
    const double x[1] = {theta - beta * z};
    return f(x) * p;
  };
  if (q < 1.0) {
    const double r = support_radius(q);
    auto res = quad::integrate(integrand, -r, r);
    return {res.value, res.error};
  }
  // Truncate where the two-sided tail mass is negligible, then integrate in
  // panels matched to the length scale 1/beta of f(theta - beta z).
  constexpr double kTailMass = 1e-10;
  double cut = 8.0;
  while (2.0 * (1.0 - standard_cdf(cut, q)) > kTailMass / std::max(bound, 1.0) && cut < 1e8)
    cut *= 2.0;
  const double width = std::max(1.0, 2.0 / beta);
  detail::CompensatedSum total;
  double error = kTailMass;
  for (double a = 0.0; a < cut; a += width) {
    const double b = std::min(cut, a + width);
    auto right = quad::integrate(integrand, a, b, {1e-13, 1e-10});
    auto left = quad::integrate(integrand, -b, -a, {1e-13, 1e-10});
    total.add(right.value);
    total.add(left.value);
    error += right.error + left.error;
  }
  return {total.value(), error};
}

PropertyCheck check_smoothing(double q, const std::vector<double>& betas, const Objective& f,
                              const KernelCheckOptions& opt, KernelPropertyReport& report) {
  PropertyCheck c{"P5", true, 0.0, ""};
  const double x0[1] = {opt.theta};
  const double f0 = f(x0);
  std::vector<double> errors_of_estimate;

  if (q < kHeavyTailQ) {
    report.smoothing_method = "quadrature";
    for (double beta : betas) {
      auto s = smoothed_by_quadrature(q, beta, opt.theta, f, opt.test_function_bound);
      report.smoothing_error.push_back(std::abs(s.value - f0));
      errors_of_estimate.push_back(s.error);
    }
  } else {
    // Common random numbers across beta keep the comparison along the
    // sequence far sharper than the individual standard errors.
    report.smoothing_method = "monte-carlo";
    RngStream rng(opt.seed, 0);
    std::vector<double> z(opt.monte_carlo_samples);
    for (auto& v : z) v = sample_scalar(rng, q);
    for (double beta : betas) {
      double mean = 0.0, m2 = 0.0;
      for (std::size_t j = 0; j < z.size(); ++j) {
        const double x[1] = {opt.theta - beta * z[j]};
        const double d = f(x) - f0;
        const double delta = d - mean;
        mean += delta / static_cast<double>(j + 1);
        m2 += delta * (d - mean);
      }
      const double n = static_cast<double>(z.size());
      report.smoothing_error.push_back(std::abs(mean));
      errors_of_estimate.push_back(std::sqrt(m2 / (n - 1.0) / n));
    }
  }

  const auto& e = report.smoothing_error;
  bool decreasing = true;
  for (std::size_t i = 1; i < e.size(); ++i) decreasing = decreasing && e[i] < e[i - 1];
  c.discrepancy = e.back();
  const bool within = q >= kHeavyTailQ || e.back() < opt.smoothing_tolerance;
  c.passed = decreasing && within;
  std::ostringstream os;
  os << "|S_beta[f](" << opt.theta << ") - f(" << opt.theta << ")| by "
     << report.smoothing_method << ":";
  for (std::size_t i = 0; i < e.size(); ++i) os << ' ' << e[i] << " (+-" << errors_of_estimate[i] << ')';
  if (q < kHeavyTailQ) os << "; required < " << opt.smoothing_tolerance << " at the last beta";
  c.detail = os.str();
  return c;
}

}  // namespace

bool KernelPropertyReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

KernelPropertyReport verify_kernel_properties(double q, const std::vector<double>& betas,
                                              const Objective& test_function,
                                              const KernelCheckOptions& options) {
  if (!(q < 3.0)) throw std::invalid_argument("verify_kernel_properties: q must be < 3");
  if (betas.empty()) throw std::invalid_argument("verify_kernel_properties: empty beta sequence");
  for (std::size_t i = 0; i < betas.size(); ++i) {
    if (!(betas[i] > 0.0))
      throw std::invalid_argument("verify_kernel_properties: betas must be positive");
    if (i > 0 && !(betas[i] < betas[i - 1]))
      throw std::invalid_argument("verify_kernel_properties: betas must be strictly decreasing");
  }

  KernelPropertyReport report;
  report.q = q;
  report.betas = betas;
  report.checks[0] = check_scale_family(q, betas, options.scale_tolerance);
  report.checks[1] = check_differentiability(q, betas, options.gradient_tolerance, report);
  report.checks[2] = check_normalization(q, betas, options.normalization_tolerance, report);
  report.checks[3] = check_concentration(q, betas, options.mass_epsilon, report);
  report.checks[4] = check_smoothing(q, betas, test_function, options, report);
  return report;
}

std::string to_json(const KernelPropertyReport& report) {
  nlohmann::ordered_json j;
  j["q"] = report.q;
  j["betas"] = report.betas;
  j["passed"] = report.all_passed();
  auto& props = j["properties"];
  props = nlohmann::ordered_json::array();
  for (const auto& c : report.checks) {
    nlohmann::ordered_json p;
    p["id"] = c.id;
    p["passed"] = c.passed;
    p["discrepancy"] = std::isfinite(c.discrepancy) ? nlohmann::ordered_json(c.discrepancy)
                                                    : nlohmann::ordered_json("inf");
    p["detail"] = c.detail;
    props.push_back(p);
  }
  j["compact_support"] = report.compact_support;
  j["cutoff_radius"] = report.cutoff_radius;
  j["cutoff_gradient_jump"] = report.cutoff_gradient_jump;
  j["normalization"] = report.normalization;
  j["mass_outside"] = report.mass_outside;
  j["smoothing_error"] = report.smoothing_error;
  j["smoothing_method"] = report.smoothing_method;
  return j.dump(2);
}

std::pair<double, double> lemma1_check(const ScalarField& f, double q, int dim) {
  if (dim != 1 && dim != 2) throw std::invalid_argument("lemma1_check: dim must be 1 or 2");
  const QGaussianSpec spec(q, 1.0, dim);
  const double lhs = q_expectation(f, spec).value;
  const double lambda = lambda_q(q, dim);
  const double radius = support_radius(q);

  auto weighted = [&](std::span<const double> x) {
    const double p = pdf(x, spec);
    if (p == 0.0) return 0.0;
    double r2 = 0.0;
    for (double v : x) r2 += v * v;
    const double w = q == 1.0 ? 1.0 : escort_weight(r2, q);
    return f(x) * p * w;
  };
  double integral;
  if (dim == 1) {
    const double lo = std::isfinite(radius) ? -radius : -kInf;
    const double hi = std::isfinite(radius) ? radius : kInf;
    integral = quad::integrate(
                   [&](double x) {
                     const double xs[1] = {x};
                     return weighted(xs);
                   },
                   lo, hi)
                   .value;
  } else {
    integral = quad::integrate_polar(
                   [&](double x, double y) {
                     const double xs[2] = {x, y};
                     return weighted(xs);
                   },
                   radius)
                   .value;
  }
  return {lhs, integral / lambda};
}

}  // namespace qsf
