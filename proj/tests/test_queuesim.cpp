#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qsf/qgauss.hpp"
#include "qsf/queuesim.hpp"

using namespace qsf;

TEST(ServiceTime, Examples) {
  const std::vector<double> bar{1.0, 1.0};
  EXPECT_NEAR(service_time(0.5, bar, bar, 10.0), 0.05, 1e-15);
  EXPECT_NEAR(service_time(0.5, std::vector<double>{5.0, 5.0}, bar, 10.0), 1.65, 1e-14);
  const double u = std::nextafter(1.0, 0.0);
  EXPECT_LT(service_time(u, bar, bar, 20.0), 0.05);
  EXPECT_NEAR(service_time(u, bar, bar, 20.0), 0.05, 1e-15);
  EXPECT_THROW(service_time(0.0, bar, bar, 10.0), std::domain_error);
  EXPECT_THROW(service_time(1.0, bar, bar, 10.0), std::domain_error);
  EXPECT_THROW(service_time(0.5, std::vector<double>{1.0}, bar, 10.0), std::invalid_argument);
}

TEST(QueueNetworkConfig, DefaultsAndValidation) {
  const QueueNetworkConfig c;
  EXPECT_EQ(c.lambda1, 0.2);
  EXPECT_EQ(c.lambda2, 0.1);
  EXPECT_EQ(c.p_exit, 0.4);
  EXPECT_EQ(c.R1, 10.0);
  EXPECT_EQ(c.R2, 20.0);
  EXPECT_EQ(c.dimension(), 4);
  EXPECT_NO_THROW(c.validate());
  auto bad = c;
  bad.p_exit = 1.0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = c;
  bad.lambda2 = 0.0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = c;
  bad.theta_target = {1.0};
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(QueueNetwork, ResetState) {
  QueueNetwork net(QueueNetworkConfig{}, RngStream(1, 0));
  EXPECT_EQ(net.clock(), 0.0);
  EXPECT_EQ(net.cost(), 0.0);
  EXPECT_TRUE(std::isinf(net.next_completion(0)));
  EXPECT_TRUE(std::isinf(net.next_completion(1)));
  EXPECT_EQ(net.step(), 1.0);  // the first event is always an arrival
  EXPECT_EQ(net.counters().external_arrivals[0] + net.counters().external_arrivals[1], 1u);
  net.reset(RngStream(1, 0));
  EXPECT_EQ(net.cost(), 0.0);
  EXPECT_EQ(net.clock(), 0.0);
}

TEST(QueueNetwork, DistinctStreamsDistinctArrivals) {
  QueueNetwork a(QueueNetworkConfig{}, RngStream(1, 0)), b(QueueNetworkConfig{}, RngStream(1, 1));
  EXPECT_NE(a.next_arrival(0), b.next_arrival(0));
  QueueNetwork c(QueueNetworkConfig{}, RngStream(1, 0));
  EXPECT_EQ(a.next_arrival(0), c.next_arrival(0));
}

TEST(QueueNetwork, FirstArrivalMean) {
  QueueNetwork net(QueueNetworkConfig{}, RngStream(2, 0));
  const int n = 100000;
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    net.reset(RngStream(2, static_cast<std::uint64_t>(i)));
    s += net.next_arrival(0);
  }
  EXPECT_NEAR(s / n, 5.0, 0.1);
}

TEST(QueueNetwork, SetParameter) {
  QueueNetwork net(QueueNetworkConfig{}, RngStream(3, 0));
  EXPECT_THROW(net.set_parameter(std::vector<double>{1.0, 1.0}), std::invalid_argument);
  net.set_parameter(std::vector<double>{-3.0, 9.0, 0.0, 7.5});  // outside the box is fine
  net.set_parameter(std::vector<double>{2.0, 2.0, 3.0, 3.0});
  EXPECT_EQ(net.parameter(), (Vector{2.0, 2.0, 3.0, 3.0}));
}

TEST(QueueNetwork, InvariantsOverLongRun) {
  QueueNetwork net(QueueNetworkConfig{}, RngStream(4, 0));
  double last = 0.0;
  for (int i = 0; i < 200000; ++i) {
    const double h = net.step();
    ASSERT_GE(net.clock(), last);
    last = net.clock();
    const auto& c = net.counters();
    const auto in = c.external_arrivals[0] + c.external_arrivals[1];
    ASSERT_EQ(in - c.exits, net.queue_length(0) + net.queue_length(1));
    ASSERT_EQ(h, static_cast<double>(net.queue_length(0) + net.queue_length(1)));
    for (int node = 0; node < 2; ++node) {
      ASSERT_EQ(net.queue_length(node) > 0, std::isfinite(net.next_completion(node)));
      if (net.queue_length(node) > 0) {
        ASSERT_GE(net.next_completion(node), net.clock());
      }
      ASSERT_GE(net.next_arrival(node), net.clock());
    }
  }
}

TEST(QueueNetwork, RoutingFrequency) {
  QueueNetwork net(QueueNetworkConfig{}, RngStream(5, 0));
  while (net.counters().completions[1] < 1'000'000) net.step();
  const double frac = static_cast<double>(net.counters().exits) / net.counters().completions[1];
  EXPECT_NEAR(frac, 0.4, 0.002);
  EXPECT_EQ(net.counters().exits + net.counters().feedbacks, net.counters().completions[1]);
}

TEST(QueueNetwork, FlowBalanceThroughput) {
  // r1 = lambda1 + (1 - p)(r1 + lambda2)  =>  r1 = 0.26 / 0.4.
  QueueNetwork net(QueueNetworkConfig{}, RngStream(6, 0));
  for (int i = 0; i < 2'000'000; ++i) net.step();
  const double r1 = net.counters().completions[0] / net.clock();
  EXPECT_NEAR(r1, 0.26 / 0.4, 0.02 * 0.65);
}

TEST(QueueNetwork, ServiceTimeLaw) {
  const std::vector<double> theta{2.0, 2.0, 3.0, 3.0};
  QueueNetwork net(QueueNetworkConfig{}, RngStream(7, 0));
  net.set_parameter(theta);
  while (std::min(net.counters().services_started[0], net.counters().services_started[1]) < 1'000'000) net.step();
  const auto& c = net.counters();
  const double m1 = c.service_time_total[0] / c.services_started[0];
  const double m2 = c.service_time_total[1] / c.services_started[1];
  EXPECT_NEAR(m1 / ((1.0 + 2.0) / (2.0 * 10.0)), 1.0, 0.01);
  EXPECT_NEAR(m2 / ((1.0 + 8.0) / (2.0 * 20.0)), 1.0, 0.01);
}

TEST(QueueNetwork, UnstableAtInitialCondition) {
  QueueNetwork net(QueueNetworkConfig{}, RngStream(8, 0));
  net.set_parameter(std::vector<double>{5.0, 5.0, 5.0, 5.0});
  // Least-squares slope of queue-1 length against event index.
  const int n = 1'000'000;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    net.step();
    const double x = i, y = static_cast<double>(net.queue_length(0));
    sx += x, sy += y, sxx += x * x, sxy += x * y;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  EXPECT_GT(slope, 0.0);
  EXPECT_GT(net.queue_length(0), 1000u);
  // Offered load at node 1 is r1 E[S] with E[S] the service time at u = 1/2.
  EXPECT_GT(0.65 * service_time(0.5, std::vector<double>{5, 5}, std::vector<double>{1, 1}, 10.0), 1.0);
}

TEST(QueueNetwork, PoissonArrivals) {
  QueueNetwork net(QueueNetworkConfig{}, RngStream(9, 0));
  std::vector<double> gaps[2];
  std::uint64_t seen[2] = {0, 0};
  while (gaps[1].size() < 100000) {
    net.step();
    for (int node = 0; node < 2; ++node)
      if (net.counters().external_arrivals[node] != seen[node]) {
        seen[node] = net.counters().external_arrivals[node];
        gaps[node].push_back(net.next_arrival(node) - net.clock());
      }
  }
  const double rate[2] = {0.2, 0.1};
  for (int node = 0; node < 2; ++node) {
    auto& g = gaps[node];
    std::sort(g.begin(), g.end());
    double d = 0.0;
    const double n = static_cast<double>(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double F = -std::expm1(-rate[node] * g[i]);
      d = std::max({d, F - i / n, (i + 1) / n - F});
    }
    EXPECT_LT(d, ks_critical_value(g.size(), 0.01)) << node;
  }
}

TEST(QueueNetwork, EventLog) {
  QueueNetwork net(QueueNetworkConfig{}, RngStream(10, 0));
  std::ostringstream log;
  net.set_event_log(&log);
  for (int i = 0; i < 50; ++i) net.step();
  net.set_event_log(nullptr);
  net.step();
  std::istringstream in(log.str());
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 5);
    EXPECT_TRUE(line.find(",arrival,") != std::string::npos || line.find(",completion,") != std::string::npos);
  }
  EXPECT_EQ(rows, 50);
}

TEST(QueueNetwork, ParameterDoesNotShiftArrivals) {
  QueueNetwork a(QueueNetworkConfig{}, RngStream(11, 0)), b(QueueNetworkConfig{}, RngStream(11, 0));
  b.set_parameter(std::vector<double>{3.0, 3.0, 0.0, 0.0});
  std::vector<double> ta, tb;
  while (ta.size() < 100) {
    const auto before = a.counters().external_arrivals[0];
    a.step();
    if (a.counters().external_arrivals[0] != before) ta.push_back(a.clock());
  }
  while (tb.size() < 100) {
    const auto before = b.counters().external_arrivals[0];
    b.step();
    if (b.counters().external_arrivals[0] != before) tb.push_back(b.clock());
  }
  EXPECT_EQ(ta, tb);
}
