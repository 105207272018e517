#pragma once

#include <functional>
#include <stdexcept>
#include <string>

namespace qsf {

/// A numerical estimate (integral or Monte Carlo) missed its tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  explicit ConvergenceError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace qsf

namespace qsf::quad {

/// Raised when an integral cannot be brought within the requested tolerance.
class QuadratureError : public ConvergenceError {
 public:
  explicit QuadratureError(const std::string& what) : ConvergenceError(what) {}
};

struct Tolerance {
  double abs = 1e-10;
  double rel = 1e-8;
};

struct Result {
  double value = 0.0;
  double error = 0.0;
};

using Integrand = std::function<double(double)>;
using Integrand2 = std::function<double(double, double)>;

/// Adaptive integral of f over [a, b]. Either bound may be infinite.
///
/// Finite intervals use tanh-sinh, which tolerates integrable endpoint
/// singularities (the q < 1 cutoff); half-lines use exp-sinh and the full
/// line sinh-sinh, which handle the power-law tails of the q > 1 family.
/// Interior kinks must be split out by the caller.
Result integrate(const Integrand& f, double a, double b, Tolerance tol = {});

/// Integral over R^dim of a radial function g(r), restricted to r < radius
/// (radius may be +infinity).
Result integrate_radial(const Integrand& g, int dim, double radius, Tolerance tol = {});

/// Integral over the disk of the given radius (or the plane) of f(x, y),
/// evaluated in polar coordinates.
Result integrate_polar(const Integrand2& f, double radius, Tolerance tol = {});

/// Surface area of the unit sphere in R^dim (2 for dim = 1).
double unit_sphere_area(int dim);

}  // namespace qsf::quad
