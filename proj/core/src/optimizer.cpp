#include "qsf/optimizer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "qsf/detail/summation.hpp"
#include "qsf/sfgrad.hpp"

namespace qsf {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool guard_tripped(std::span<const double> z, double threshold) {
  for (double v : z)
    if (!std::isfinite(v) || std::abs(v) > threshold) return true;
  return false;
}

Vector perturbed(std::span<const double> theta, double beta, std::span<const double> eta) {
  Vector x(theta.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = theta[i] + beta * eta[i];
  return x;
}

void check_system(const BlackBoxSystem& system, const TwoTimescaleConfig& cfg) {
  cfg.validate();
  if (system.dimension() != cfg.dimension())
    throw std::invalid_argument("optimizer: system dimension does not match theta0");
}

void format_number(std::FILE* out, double v) {
  if (std::isnan(v))
    std::fputs("nan", out);
  else
    std::fprintf(out, "%.17g", v);
}

}  // namespace

void TwoTimescaleConfig::validate() const {
  if (M < 1 || L < 1) throw std::invalid_argument("TwoTimescaleConfig: M and L must be >= 1");
  if (!(q < 3.0)) throw std::invalid_argument("TwoTimescaleConfig: q must be < 3");
  if (!(beta > 0.0)) throw std::invalid_argument("TwoTimescaleConfig: beta must be > 0");
  const std::size_t n = theta0.size();
  if (n == 0 || box_min.size() != n || box_max.size() != n)
    throw std::invalid_argument("TwoTimescaleConfig: theta0 and box bounds must share a length");
  for (std::size_t i = 0; i < n; ++i) {
    if (!(box_min[i] < box_max[i]))
      throw std::invalid_argument("TwoTimescaleConfig: box_min must be < box_max");
    if (!(theta0[i] >= box_min[i] && theta0[i] <= box_max[i]))
      throw std::invalid_argument("TwoTimescaleConfig: theta0 must lie inside the box");
  }
  if (!(divergence_threshold > 0.0))
    throw std::invalid_argument("TwoTimescaleConfig: divergence_threshold must be > 0");
}

double step_size_a(std::size_t n) { return 1.0 / static_cast<double>(n + 1); }

double step_size_b(std::size_t n) {
  const double c = std::cbrt(static_cast<double>(n + 1));
  return 1.0 / (c * c);
}

Vector project(std::span<const double> theta, std::span<const double> box_min,
               std::span<const double> box_max) {
  if (theta.size() != box_min.size() || theta.size() != box_max.size())
    throw std::invalid_argument("project: dimension mismatch");
  Vector out(theta.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = std::min(std::max(theta[i], box_min[i]), box_max[i]);
  return out;
}

RunTrace run_qsf(BlackBoxSystem& system, const TwoTimescaleConfig& cfg) {
  check_system(system, cfg);
  const std::size_t dim = cfg.dimension();
  RngStream rng = cfg.seed;
  RunTrace trace;
  trace.records.reserve(cfg.M + 1);

  Vector theta = cfg.theta0;
  Vector z(dim, 0.0), z_start(dim), eta(dim), step(dim);
  trace.records.push_back({0, theta, z, kNaN});

  for (std::size_t n = 0; n < cfg.M; ++n) {
    sample_perturbation(rng, cfg.q, eta);
    const double w = sf_weight(eta, cfg.q);
    system.set_parameter(perturbed(theta, cfg.beta, eta));
    const double b = step_size_b(n);
    z_start = z;
    detail::CompensatedSum cost;
    for (std::size_t m = 0; m < cfg.L; ++m) {
      const double h = system.step();
      cost.add(h);
      for (std::size_t i = 0; i < dim; ++i)
        z[i] = (1.0 - b) * z[i] + b * (((eta[i] * h) * w) / cfg.beta);
      if (guard_tripped(z, cfg.divergence_threshold)) {
        trace.divergence = Divergence{n, eta, h, z};
        trace.final_theta = theta;
        return trace;
      }
    }
    const double a = step_size_a(n);
    const Vector& tracked = cfg.z_source == ZUpdateSource::latest ? z : z_start;
    for (std::size_t i = 0; i < dim; ++i) step[i] = theta[i] - a * tracked[i];
    theta = project(step, cfg.box_min, cfg.box_max);
    trace.records.push_back({n + 1, theta, z, cost.value() / static_cast<double>(cfg.L)});
  }
  trace.final_theta = theta;
  return trace;
}

RunTrace run_gaussian_sf(BlackBoxSystem& system, const TwoTimescaleConfig& cfg) {
  check_system(system, cfg);
  const std::size_t dim = cfg.dimension();
  constexpr double two_pi = 2.0 * std::numbers::pi;
  RngStream rng = cfg.seed;
  RunTrace trace;
  trace.records.reserve(cfg.M + 1);

  Vector theta = cfg.theta0;
  Vector z(dim, 0.0), z_start(dim), eta(dim), step(dim);
  trace.records.push_back({0, theta, z, kNaN});

  for (std::size_t n = 0; n < cfg.M; ++n) {
    for (auto& e : eta) {
      const double u1 = rng.uniform_open();
      const double u2 = rng.uniform();
      e = std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
    }
    system.set_parameter(perturbed(theta, cfg.beta, eta));
    const double b = step_size_b(n);
    z_start = z;
    detail::CompensatedSum cost;
    for (std::size_t m = 0; m < cfg.L; ++m) {
      const double h = system.step();
      cost.add(h);
      for (std::size_t i = 0; i < dim; ++i) z[i] = (1.0 - b) * z[i] + b * ((eta[i] * h) / cfg.beta);
      if (guard_tripped(z, cfg.divergence_threshold)) {
        trace.divergence = Divergence{n, eta, h, z};
        trace.final_theta = theta;
        return trace;
      }
    }
    const double a = step_size_a(n);
    const Vector& tracked = cfg.z_source == ZUpdateSource::latest ? z : z_start;
    for (std::size_t i = 0; i < dim; ++i) step[i] = theta[i] - a * tracked[i];
    theta = project(step, cfg.box_min, cfg.box_max);
    trace.records.push_back({n + 1, theta, z, cost.value() / static_cast<double>(cfg.L)});
  }
  trace.final_theta = theta;
  return trace;
}

FastTimescaleResult fast_timescale_diagnostic(BlackBoxSystem& system,
                                              std::span<const double> theta_frozen,
                                              const TwoTimescaleConfig& cfg,
                                              std::size_t inner_steps) {
  check_system(system, cfg);
  if (theta_frozen.size() != cfg.dimension())
    throw std::invalid_argument("fast_timescale_diagnostic: theta has wrong dimension");
  const std::size_t dim = cfg.dimension();
  const std::size_t blocks = std::max<std::size_t>(1, (inner_steps + cfg.L - 1) / cfg.L);
  const std::size_t total = blocks * cfg.L;
  const std::size_t tail_begin = total / 2;

  RngStream rng = cfg.seed;
  Vector z(dim, 0.0), eta(dim);
  std::vector<detail::CompensatedSum> tail(dim);
  std::size_t k = 0;
  for (std::size_t n = 0; n < blocks; ++n) {
    sample_perturbation(rng, cfg.q, eta);
    const double w = sf_weight(eta, cfg.q);
    system.set_parameter(perturbed(theta_frozen, cfg.beta, eta));
    const double b = step_size_b(n);
    for (std::size_t m = 0; m < cfg.L; ++m, ++k) {
      const double h = system.step();
      for (std::size_t i = 0; i < dim; ++i) {
        z[i] = (1.0 - b) * z[i] + b * (((eta[i] * h) * w) / cfg.beta);
        if (k >= tail_begin) tail[i].add(z[i]);
      }
    }
  }
  FastTimescaleResult out;
  out.final_z = z;
  out.inner_steps = total;
  out.tail_average_z.resize(dim);
  for (std::size_t i = 0; i < dim; ++i)
    out.tail_average_z[i] = tail[i].value() / static_cast<double>(total - tail_begin);
  return out;
}

double distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("distance: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

void write_trace_csv(const RunTrace& trace, std::span<const double> target,
                     const std::filesystem::path& path) {
  std::FILE* out = std::fopen(path.c_str(), "w");
  if (!out) throw std::runtime_error("write_trace_csv: cannot open " + path.string());
  const std::size_t dim = trace.records.empty() ? 0 : trace.records.front().theta.size();
  std::fputs("n", out);
  for (std::size_t i = 1; i <= dim; ++i) std::fprintf(out, ",theta_%zu", i);
  for (std::size_t i = 1; i <= dim; ++i) std::fprintf(out, ",Z_%zu", i);
  std::fputs(",block_mean_cost,distance_to_target\n", out);
  for (const auto& r : trace.records) {
    std::fprintf(out, "%zu", r.n);
    for (double v : r.theta) std::fputc(',', out), format_number(out, v);
    for (double v : r.z) std::fputc(',', out), format_number(out, v);
    std::fputc(',', out);
    format_number(out, r.block_mean_cost);
    std::fputc(',', out);
    format_number(out, target.empty() ? kNaN : distance(r.theta, target));
    std::fputc('\n', out);
  }
  const bool failed = std::ferror(out) != 0;
  if (std::fclose(out) != 0 || failed)
    throw std::runtime_error("write_trace_csv: write failed for " + path.string());
}

}  // namespace qsf
