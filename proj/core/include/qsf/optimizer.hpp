#pragma once

// Two-timescale projected stochastic approximation driven by q-SF gradient
// estimates: a fast recursion Z tracks the (Lambda_q-scaled) gradient of the
// long-run average cost, a slow recursion moves theta against it and projects
// back onto the box C.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qsf/qgauss.hpp"
#include "qsf/rng.hpp"

namespace qsf {

/// A parameterized Markov process observed through a nonnegative cost.
///
/// set_parameter() affects subsequent transitions only; process state
/// persists across parameter changes. step() advances one transition and
/// returns the cost h(Y) of the new state. The system owns its randomness.
class BlackBoxSystem {
 public:
  virtual ~BlackBoxSystem() = default;
  virtual std::size_t dimension() const = 0;
  virtual void set_parameter(std::span<const double> theta) = 0;
  virtual double step() = 0;
};

/// Which Z the slow recursion reads: the value after the block's L inner
/// updates (latest), or the value at the start of the block.
enum class ZUpdateSource { latest, block_start };

struct TwoTimescaleConfig {
  std::size_t M = 10000;  ///< outer iterations
  std::size_t L = 100;    ///< inner samples per perturbation
  double q = 1.0;
  double beta = 0.1;
  Vector box_min;
  Vector box_max;
  Vector theta0;
  RngStream seed{0, 0};  ///< perturbation stream
  ZUpdateSource z_source = ZUpdateSource::latest;
  /// Abort once any |Z_i| exceeds this (or becomes non-finite).
  double divergence_threshold = 1e12;

  std::size_t dimension() const noexcept { return theta0.size(); }
  void validate() const;
};

struct IterationRecord {
  std::size_t n = 0;
  Vector theta;            ///< theta(n)
  Vector z;                ///< Z(nL)
  double block_mean_cost;  ///< mean cost over block n-1 (NaN for n = 0)
};

struct Divergence {
  std::size_t n = 0;  ///< outer iteration at which the guard tripped
  Vector eta;
  double cost = 0.0;
  Vector z;
};

struct RunTrace {
  std::vector<IterationRecord> records;  ///< M + 1 entries when completed
  Vector final_theta;
  std::optional<Divergence> divergence;

  bool completed() const noexcept { return !divergence.has_value(); }
};

/// Slow step size a(n) = 1/(n+1).
double step_size_a(std::size_t n);

/// Fast step size b(n) = 1/(n+1)^{2/3}, indexed by the outer iteration.
double step_size_b(std::size_t n);

/// Component-wise clamp onto [box_min, box_max].
Vector project(std::span<const double> theta, std::span<const double> box_min,
               std::span<const double> box_max);

/// The q-SF two-timescale algorithm. The system is stepped continuously
/// (never reset) while its parameter follows theta(n) + beta eta(n).
RunTrace run_qsf(BlackBoxSystem& system, const TwoTimescaleConfig& cfg);

/// The classical Gaussian-SF algorithm (standard normal perturbations, no
/// weight); cfg.q is ignored. Matches run_qsf with q = 1 bit for bit.
RunTrace run_gaussian_sf(BlackBoxSystem& system, const TwoTimescaleConfig& cfg);

struct FastTimescaleResult {
  Vector final_z;         ///< Z after the last inner step
  Vector tail_average_z;  ///< mean of Z over the second half of the inner steps
  std::size_t inner_steps = 0;
};

/// Runs only the Z recursion with theta frozen, for inner_steps transitions
/// (rounded up to whole blocks of cfg.L).
FastTimescaleResult fast_timescale_diagnostic(BlackBoxSystem& system,
                                              std::span<const double> theta_frozen,
                                              const TwoTimescaleConfig& cfg,
                                              std::size_t inner_steps);

double distance(std::span<const double> a, std::span<const double> b);

/// CSV: n,theta_1..theta_N,Z_1..Z_N,block_mean_cost,distance_to_target
void write_trace_csv(const RunTrace& trace, std::span<const double> target,
                     const std::filesystem::path& path);

}  // namespace qsf
