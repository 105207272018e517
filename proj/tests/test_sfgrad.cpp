#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "oracle.hpp"
#include "qsf/qgauss.hpp"
#include "qsf/sfgrad.hpp"

using namespace qsf;

namespace {

Objective square = [](std::span<const double> x) { return x[0] * x[0]; };

}  // namespace

TEST(SfWeight, Examples) {
  const std::vector<double> zero{0.0, 0.0};
  for (double q : {0.0, 0.5, 1.0, 2.0}) EXPECT_EQ(sf_weight(zero, q), 1.0);
  const std::vector<double> big{3.0, -7.0};
  EXPECT_EQ(sf_weight(big, 1.0), 1.0);
  const std::vector<double> unit{0.6, 0.8};
  EXPECT_NEAR(sf_weight(unit, 2.0), 0.5, 1e-15);
  const std::vector<double> outside{2.0};
  EXPECT_THROW(sf_weight(outside, 0.0), std::domain_error);
}

TEST(SfWeight, EvenInEta) {
  const std::vector<double> a{0.3, -1.2}, b{-0.3, 1.2};
  for (double q : {0.0, 0.5, 1.5, 2.5}) EXPECT_EQ(sf_weight(a, q), sf_weight(b, q));
}

TEST(SmoothedValue, Examples) {
  RngStream rng(1, 1);
  const std::vector<double> theta0{0.0}, theta2{2.0};
  EXPECT_EQ(smoothed_value([](auto) { return 3.25; }, theta0, 1.5, 0.3, 1000, rng), 3.25);

  const std::size_t n = 1'000'000;
  const double v = smoothed_value(square, theta0, 1.0, 0.1, n, rng);
  EXPECT_NEAR(v, 0.01, 4.0 * 0.01 * std::sqrt(2.0) / std::sqrt(n));

  for (double q : {0.5, 1.0, 1.5}) {
    const double lin = smoothed_value([](auto x) { return x[0]; }, theta2, q, 0.1, n, rng);
    const double sd = 0.1 * std::sqrt((3.0 - q) / (5.0 - 3.0 * q));
    EXPECT_NEAR(lin, 2.0, 4.0 * sd / std::sqrt(n)) << q;
  }
}

TEST(EstimateGradient, ConstantObjectiveIsUnbiased) {
  RngStream rng(2, 2);
  GradEstimatorConfig cfg;
  cfg.dim = 2;
  cfg.beta = 0.1;
  cfg.num_perturbations = 1'000'000;
  for (double q : {0.5, 1.0, 1.5}) {
    cfg.q = q;
    const std::vector<double> theta{0.4, -1.0};
    const auto g = estimate_gradient([](auto) { return 5.0; }, theta, cfg, rng);
    for (int i = 0; i < 2; ++i) EXPECT_LT(std::abs(g.value[i]), 3.0 * g.standard_error[i]) << q << " " << i;
  }
}

TEST(EstimateGradient, GaussianQuadratic) {
  RngStream rng(3, 3);
  GradEstimatorConfig cfg;
  cfg.q = 1.0;
  cfg.beta = 0.05;
  cfg.num_perturbations = 1'000'000;
  const std::vector<double> theta{1.0};
  const auto g = estimate_gradient(square, theta, cfg, rng);
  EXPECT_NEAR(g.value[0], 2.0, 0.1);
  EXPECT_TRUE(g.lambda_scaled);
}

TEST(EstimateGradient, ScaledByLambda) {
  // q = 1.5: finite-variance terms, the estimate concentrates on Lambda_q grad J.
  RngStream rng(4, 4);
  GradEstimatorConfig cfg;
  cfg.q = 1.5;
  cfg.beta = 0.05;
  cfg.num_perturbations = 1'000'000;
  const std::vector<double> theta{1.0};
  const auto g = estimate_gradient(square, theta, cfg, rng);
  EXPECT_NEAR(g.value[0], 2.0 * oracle::lambda(1.5, 1), 4.0 * g.standard_error[0]);
  EXPECT_NEAR(g.value[0] / lambda_q(1.5, 1), 2.0, 0.1);
}

TEST(EstimateGradient, ThreadCountDoesNotChangeResult) {
  GradEstimatorConfig cfg;
  cfg.q = 0.7;
  cfg.dim = 3;
  cfg.num_perturbations = 10000;
  cfg.samples_per_perturbation = 2;
  const std::vector<double> theta{0.1, 0.2, 0.3};
  auto f = [](std::span<const double> x) { return std::sin(x[0]) + x[1] * x[2]; };
  RngStream r1(9, 9), r3(9, 9);
  const auto a = estimate_gradient(f, theta, cfg, r1);
  cfg.threads = 3;
  const auto b = estimate_gradient(f, theta, cfg, r3);
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.standard_error, b.standard_error);
  EXPECT_EQ(r1, r3);
}

TEST(EstimateGradient, QOneIsGaussianEstimatorBitForBit) {
  GradEstimatorConfig cfg;
  cfg.q = 1.0;
  cfg.beta = 0.2;
  cfg.dim = 2;
  cfg.num_perturbations = 5000;
  cfg.samples_per_perturbation = 3;
  const std::vector<double> theta{0.5, 1.5};
  auto f = [](std::span<const double> x) { return std::exp(0.1 * x[0]) + x[1] * x[1]; };
  RngStream a(21, 0), b(21, 0);
  const auto q1 = estimate_gradient(f, theta, cfg, a);
  const auto gs = estimate_gradient_gaussian(f, theta, cfg.beta, cfg.num_perturbations,
                                             cfg.samples_per_perturbation, b);
  EXPECT_EQ(q1.value, gs.value);
  EXPECT_EQ(q1.standard_error, gs.standard_error);
}

TEST(EstimateGradient, AntitheticSymmetry) {
  // The single-sample term z f(theta + beta z) w(z) / beta changes sign with z
  // whenever f(theta + beta z) = f(theta - beta z); for linear f the pair sums
  // to 2 (a.z) z w(z).
  RngStream rng(5, 5);
  const double beta = 0.3, theta = 0.7, a = 1.7, b = -0.4;
  for (double q : {0.5, 1.5, 2.5}) {
    for (int k = 0; k < 1000; ++k) {
      std::vector<double> z(1), mz(1);
      sample_perturbation(rng, q, z);
      mz[0] = -z[0];
      const double w = sf_weight(z, q);
      ASSERT_EQ(w, sf_weight(mz, q));
      auto term = [&](double zz, double fx) { return zz * fx * w / beta; };
      const double fe_p = std::pow(beta * z[0], 2), fe_m = std::pow(beta * mz[0], 2);
      ASSERT_EQ(term(z[0], fe_p), -term(mz[0], fe_m));
      const double lp = a * (theta + beta * z[0]) + b, lm = a * (theta + beta * mz[0]) + b;
      ASSERT_NEAR(term(z[0], lp) + term(mz[0], lm), 2.0 * a * z[0] * z[0] * w, 1e-12 * (1 + z[0] * z[0]));
    }
  }
}

TEST(EstimateGradient, QuadraticBiasVanishes) {
  // E[term] / Lambda_q = f'(theta) exactly for quadratic f in one dimension.
  auto f = [](double x) { return 1.3 * x * x - 0.7 * x; };
  for (double q : {0.5, 1.2})
    for (double beta : {0.2, 0.1, 0.05}) {
      const double e = oracle::sf_term_mean(f, 0.8, q, beta) / oracle::lambda(q, 1);
      EXPECT_NEAR(e, 2.6 * 0.8 - 0.7, 1e-9) << q << " " << beta;
    }
}

TEST(EstimateGradient, BiasIsSecondOrderInBeta) {
  auto f = [](double x) { return std::cos(x); };
  const double theta = 0.8, grad = -std::sin(theta);
  for (double q : {0.5, 1.2}) {
    std::vector<double> bias;
    for (double beta : {0.2, 0.1, 0.05})
      bias.push_back(std::abs(oracle::sf_term_mean(f, theta, q, beta) / oracle::lambda(q, 1) - grad));
    EXPECT_GT(bias[0], bias[1]);
    EXPECT_GT(bias[1], bias[2]);
    const double slope = std::log(bias[0] / bias[2]) / std::log(4.0);
    EXPECT_GE(slope, 1.5) << q;
  }
}

TEST(EstimateGradient, RejectsBadConfig) {
  RngStream rng(1, 1);
  GradEstimatorConfig cfg;
  cfg.beta = 0.0;
  const std::vector<double> theta{0.0};
  EXPECT_THROW(estimate_gradient(square, theta, cfg, rng), std::invalid_argument);
  cfg.beta = 0.1;
  cfg.dim = 2;
  EXPECT_THROW(estimate_gradient(square, theta, cfg, rng), std::invalid_argument);
  cfg.dim = 1;
  EXPECT_THROW(estimate_gradient([](auto) { return std::numeric_limits<double>::infinity(); }, theta, cfg, rng),
               std::runtime_error);
}
