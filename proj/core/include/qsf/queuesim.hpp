#pragma once

// Two-node network of single-server FIFO queues with Poisson external
// arrivals and Bernoulli feedback: node-1 departures join node 2, node-2
// departures leave with probability p_exit and otherwise rejoin node 1.
// Service times at node i are U (1 + |theta_i - target_i|^2) / R_i.

#include <array>
#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <string_view>

#include "qsf/optimizer.hpp"
#include "qsf/qgauss.hpp"
#include "qsf/rng.hpp"

namespace qsf {

struct QueueNetworkConfig {
  double lambda1 = 0.2;
  double lambda2 = 0.1;
  double p_exit = 0.4;
  double R1 = 10.0;
  double R2 = 20.0;
  int N1 = 2;
  int N2 = 2;
  Vector theta_target{1.0, 1.0, 1.0, 1.0};

  int dimension() const noexcept { return N1 + N2; }
  void validate() const;

  friend bool operator==(const QueueNetworkConfig&, const QueueNetworkConfig&) = default;
};

/// u (1 + |theta_i - theta_bar_i|^2) / R. Throws std::domain_error unless
/// 0 < u < 1, std::invalid_argument on a length mismatch.
double service_time(double u, std::span<const double> theta_i, std::span<const double> theta_bar_i,
                    double R);

enum class QueueEvent : std::uint8_t { arrival, completion };

std::string_view to_string(QueueEvent e);

struct QueueCounters {
  std::array<std::uint64_t, 2> external_arrivals{};
  std::array<std::uint64_t, 2> completions{};
  std::array<std::uint64_t, 2> services_started{};
  std::array<double, 2> service_time_total{};
  std::uint64_t exits = 0;
  std::uint64_t feedbacks = 0;
  std::uint64_t events = 0;
};

/// Discrete-event simulator of the network. The cost of a state is the
/// number of customers in the system (waiting plus in service), observed
/// after every event.
///
/// Randomness comes from five child streams of the stream passed to the
/// constructor or reset(): one per arrival process, one per server and one
/// for routing, so changing theta never shifts the arrival sequence.
class QueueNetwork final : public BlackBoxSystem {
 public:
  QueueNetwork(QueueNetworkConfig cfg, const RngStream& streams);

  /// Clock 0, empty queues, fresh first arrivals. Keeps the current theta.
  void reset(const RngStream& streams);

  std::size_t dimension() const override { return static_cast<std::size_t>(cfg_.dimension()); }

  /// Applies to services that start after the call. Values outside the
  /// optimizer's box are accepted.
  void set_parameter(std::span<const double> theta) override;

  /// Processes the earliest pending event and returns the cost afterwards.
  double step() override;

  /// Optional CSV event log (clock,event_type,node,q1,q2,cost). The stream
  /// must outlive the simulator or be detached with nullptr.
  void set_event_log(std::ostream* log);

  const QueueNetworkConfig& config() const noexcept { return cfg_; }
  const Vector& parameter() const noexcept { return theta_; }
  double clock() const noexcept { return clock_; }
  /// Customers at node (0 or 1), including the one in service.
  std::uint64_t queue_length(int node) const { return queue_.at(static_cast<std::size_t>(node)); }
  double next_arrival(int node) const { return arrival_at_.at(static_cast<std::size_t>(node)); }
  /// Completion time of the customer in service; +inf when idle.
  double next_completion(int node) const { return completion_at_.at(static_cast<std::size_t>(node)); }
  double cost() const noexcept { return static_cast<double>(queue_[0] + queue_[1]); }
  const QueueCounters& counters() const noexcept { return counters_; }

 private:
  void start_service(std::size_t node);
  void arrive(std::size_t node);

  QueueNetworkConfig cfg_;
  Vector theta_;
  std::array<RngStream, 2> arrivals_;
  std::array<RngStream, 2> services_;
  RngStream routing_;
  double clock_ = 0.0;
  std::array<std::uint64_t, 2> queue_{};
  std::array<double, 2> arrival_at_{};
  std::array<double, 2> completion_at_{};
  QueueCounters counters_;
  std::ostream* log_ = nullptr;
};

}  // namespace qsf
