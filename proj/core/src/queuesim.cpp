#include "qsf/queuesim.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace qsf {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

enum Stream : std::uint64_t { kArrival1 = 1, kArrival2, kService1, kService2, kRouting };

}  // namespace

void QueueNetworkConfig::validate() const {
  if (!(lambda1 > 0.0) || !(lambda2 > 0.0))
    throw std::invalid_argument("QueueNetworkConfig: arrival rates must be > 0");
  if (!(p_exit > 0.0 && p_exit < 1.0))
    throw std::invalid_argument("QueueNetworkConfig: p_exit must lie in (0, 1)");
  if (!(R1 > 0.0) || !(R2 > 0.0))
    throw std::invalid_argument("QueueNetworkConfig: R1 and R2 must be > 0");
  if (N1 < 1 || N2 < 1) throw std::invalid_argument("QueueNetworkConfig: N1 and N2 must be >= 1");
  if (theta_target.size() != static_cast<std::size_t>(N1 + N2))
    throw std::invalid_argument("QueueNetworkConfig: theta_target must have N1 + N2 entries");
  for (double t : theta_target)
    if (!std::isfinite(t)) throw std::invalid_argument("QueueNetworkConfig: theta_target must be finite");
}

double service_time(double u, std::span<const double> theta_i, std::span<const double> theta_bar_i,
                    double R) {
  if (!(u > 0.0 && u < 1.0)) throw std::domain_error("service_time: u must lie in (0, 1)");
  if (theta_i.size() != theta_bar_i.size())
    throw std::invalid_argument("service_time: theta and target lengths differ");
  if (!(R > 0.0)) throw std::domain_error("service_time: R must be > 0");
  double d2 = 0.0;
  for (std::size_t j = 0; j < theta_i.size(); ++j) {
    const double d = theta_i[j] - theta_bar_i[j];
    d2 += d * d;
  }
  return u * (1.0 + d2) / R;
}

std::string_view to_string(QueueEvent e) {
  return e == QueueEvent::arrival ? "arrival" : "completion";
}

QueueNetwork::QueueNetwork(QueueNetworkConfig cfg, const RngStream& streams)
    : cfg_(std::move(cfg)),
      theta_(cfg_.theta_target),
      arrivals_{streams.split(kArrival1), streams.split(kArrival2)},
      services_{streams.split(kService1), streams.split(kService2)},
      routing_(streams.split(kRouting)) {
  cfg_.validate();
  reset(streams);
}

void QueueNetwork::reset(const RngStream& streams) {
  arrivals_ = {streams.split(kArrival1), streams.split(kArrival2)};
  services_ = {streams.split(kService1), streams.split(kService2)};
  routing_ = streams.split(kRouting);
  clock_ = 0.0;
  queue_ = {0, 0};
  counters_ = {};
  arrival_at_ = {arrivals_[0].exponential(cfg_.lambda1), arrivals_[1].exponential(cfg_.lambda2)};
  completion_at_ = {kInf, kInf};
}

void QueueNetwork::set_parameter(std::span<const double> theta) {
  if (theta.size() != dimension())
    throw std::invalid_argument("QueueNetwork::set_parameter: expected " +
                                std::to_string(dimension()) + " components");
  theta_.assign(theta.begin(), theta.end());
}

void QueueNetwork::set_event_log(std::ostream* log) { log_ = log; }

void QueueNetwork::start_service(std::size_t node) {
  const std::size_t n1 = static_cast<std::size_t>(cfg_.N1);
  const std::span<const double> theta(theta_);
  const std::span<const double> target(cfg_.theta_target);
  const double s = node == 0 ? service_time(services_[0].uniform_open(), theta.first(n1),
                                            target.first(n1), cfg_.R1)
                             : service_time(services_[1].uniform_open(), theta.subspan(n1),
                                            target.subspan(n1), cfg_.R2);
  completion_at_[node] = clock_ + s;
  ++counters_.services_started[node];
  counters_.service_time_total[node] += s;
}

void QueueNetwork::arrive(std::size_t node) {
  if (queue_[node]++ == 0) start_service(node);
}

double QueueNetwork::step() {
  // Ties go to the first candidate in this order.
  std::size_t node = 0;
  QueueEvent kind = QueueEvent::completion;
  double t = completion_at_[0];
  if (completion_at_[1] < t) node = 1, t = completion_at_[1];
  if (arrival_at_[0] < t) node = 0, kind = QueueEvent::arrival, t = arrival_at_[0];
  if (arrival_at_[1] < t) node = 1, kind = QueueEvent::arrival, t = arrival_at_[1];

  clock_ = t;
  ++counters_.events;
  if (kind == QueueEvent::arrival) {
    const double rate = node == 0 ? cfg_.lambda1 : cfg_.lambda2;
    arrival_at_[node] = clock_ + arrivals_[node].exponential(rate);
    ++counters_.external_arrivals[node];
    arrive(node);
  } else {
    ++counters_.completions[node];
    --queue_[node];
    completion_at_[node] = kInf;
    if (queue_[node] > 0) start_service(node);
    if (node == 0) {
      arrive(1);
    } else if (routing_.uniform() < cfg_.p_exit) {
      ++counters_.exits;
    } else {
      ++counters_.feedbacks;
      arrive(0);
    }
  }

  const double h = cost();
  if (log_) {
    char line[160];
    std::snprintf(line, sizeof line, "%.17g,%s,%zu,%llu,%llu,%.17g\n", clock_,
                  to_string(kind).data(), node + 1, static_cast<unsigned long long>(queue_[0]),
                  static_cast<unsigned long long>(queue_[1]), h);
    *log_ << line;
  }
  return h;
}

}  // namespace qsf
