#include "qsf/quadrature.hpp"

#include <boost/math/constants/constants.hpp>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <limits>
#include <sstream>

namespace qsf::quad {
namespace {

namespace bq = boost::math::quadrature;

// Requested internally tighter than the acceptance threshold so the error
// estimate has room to certify the result.
constexpr double kInternalTol = 1e-13;

void certify(const Result& r, const Tolerance& tol, const char* where) {
  const double allowed = std::max(tol.abs, tol.rel * std::abs(r.value));
  if (!std::isfinite(r.value) || !(r.error <= allowed)) {
    std::ostringstream os;
    os << where << ": no convergence (value " << r.value << ", error estimate " << r.error
       << ", allowed " << allowed << ")";
    throw QuadratureError(os.str());
  }
}

template <class Fn>
Result guarded(Fn&& fn, const char* where) {
  try {
    return fn();
  } catch (const QuadratureError&) {
    throw;
  } catch (const std::exception& e) {
    throw QuadratureError(std::string(where) + ": " + e.what());
  }
}

Result raw_integrate(const Integrand& f, double a, double b) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (a == b) return {};
  if (a > b) {
    auto r = raw_integrate(f, b, a);
    return {-r.value, r.error};
  }
  Result r;
  if (std::isfinite(a) && std::isfinite(b)) {
    thread_local bq::tanh_sinh<double> ts;
    r.value = ts.integrate(f, a, b, kInternalTol, &r.error);
  } else if (std::isfinite(a)) {
    thread_local bq::exp_sinh<double> es;
    r.value = es.integrate([&](double t) { return f(a + t); }, 0.0, inf, kInternalTol, &r.error);
  } else if (std::isfinite(b)) {
    thread_local bq::exp_sinh<double> es;
    r.value = es.integrate([&](double t) { return f(b - t); }, 0.0, inf, kInternalTol, &r.error);
  } else {
    // Two half-lines cope with heavy tails better than sinh_sinh does.
    const Result left = raw_integrate(f, -inf, 0.0);
    const Result right = raw_integrate(f, 0.0, inf);
    r = {left.value + right.value, left.error + right.error};
  }
  return r;
}

}  // namespace

Result integrate(const Integrand& f, double a, double b, Tolerance tol) {
  auto r = guarded([&] { return raw_integrate(f, a, b); }, "integrate");
  certify(r, tol, "integrate");
  return r;
}

double unit_sphere_area(int dim) {
  if (dim < 1) throw std::invalid_argument("unit_sphere_area: dim must be >= 1");
  const double half = 0.5 * dim;
  return 2.0 * std::pow(boost::math::constants::pi<double>(), half) / boost::math::tgamma(half);
}

Result integrate_radial(const Integrand& g, int dim, double radius, Tolerance tol) {
  const double area = unit_sphere_area(dim);
  auto integrand = [&](double r) {
    if (dim == 1) return g(r);
    if (r == 0.0) return 0.0;
    const double v = g(r);
    if (v == 0.0) return 0.0;
    return v * std::pow(r, dim - 1);
  };
  auto r = guarded([&] { return raw_integrate(integrand, 0.0, radius); }, "integrate_radial");
  r.value *= area;
  r.error *= area;
  certify(r, tol, "integrate_radial");
  return r;
}

Result integrate_polar(const Integrand2& f, double radius, Tolerance tol) {
  const double two_pi = boost::math::constants::two_pi<double>();
  double worst_inner = 0.0;
  auto inner = [&](double phi) {
    const double c = std::cos(phi), s = std::sin(phi);
    auto r = raw_integrate([&](double rho) { return rho == 0.0 ? 0.0 : f(rho * c, rho * s) * rho; },
                           0.0, radius);
    worst_inner = std::max(worst_inner, r.error);
    return r.value;
  };
  Result out;
  out = guarded(
      [&] {
        Result r;
        r.value = bq::gauss_kronrod<double, 61>::integrate(inner, 0.0, two_pi, 12, kInternalTol,
                                                            &r.error);
        return r;
      },
      "integrate_polar");
  out.error += two_pi * worst_inner;
  certify(out, tol, "integrate_polar");
  return out;
}

}  // namespace qsf::quad
