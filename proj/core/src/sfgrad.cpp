#include "qsf/sfgrad.hpp"

#include <atomic>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "qsf/detail/summation.hpp"

namespace qsf {
namespace {

constexpr std::size_t kBlockSize = 1024;

struct BlockSums {
  std::vector<detail::CompensatedSum> sum;
  std::vector<detail::CompensatedSum> sum_sq;
};

// Runs body(block_index, block_stream, sums) over all blocks, possibly in
// parallel, and reduces in block order.
template <class Body>
GradEstimate run_blocks(std::size_t total, int dim, unsigned threads, RngStream& rng,
                        Body body) {
  const std::size_t blocks = (total + kBlockSize - 1) / kBlockSize;
  const RngStream root = rng.split(rng.next_u64());
  std::vector<BlockSums> partial(blocks);
  for (auto& p : partial) {
    p.sum.resize(static_cast<std::size_t>(dim));
    p.sum_sq.resize(static_cast<std::size_t>(dim));
  }

  auto work = [&](std::size_t b) {
    RngStream stream = root.split(b);
    const std::size_t begin = b * kBlockSize;
    const std::size_t end = std::min(total, begin + kBlockSize);
    body(end - begin, stream, partial[b]);
  };

  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(blocks)));
  if (workers == 1) {
    for (std::size_t b = 0; b < blocks; ++b) work(b);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < workers; ++t)
      pool.emplace_back([&] {
        for (std::size_t b; (b = next.fetch_add(1)) < blocks;) work(b);
      });
  }

  GradEstimate out;
  out.value.assign(static_cast<std::size_t>(dim), 0.0);
  out.standard_error.assign(static_cast<std::size_t>(dim), 0.0);
  const double n = static_cast<double>(total);
  for (int i = 0; i < dim; ++i) {
    detail::CompensatedSum s, s2;
    for (const auto& p : partial) {
      s.add(p.sum[i].value());
      s2.add(p.sum_sq[i].value());
    }
    const double mean = s.value() / n;
    if (!std::isfinite(mean)) {
      std::ostringstream os;
      os << "estimate_gradient: non-finite accumulation in component " << i;
      throw std::runtime_error(os.str());
    }
    out.value[i] = mean;
    if (total > 1) {
      const double var = std::max(0.0, (s2.value() - n * mean * mean) / (n - 1.0));
      out.standard_error[i] = std::sqrt(var / n);
    }
  }
  return out;
}

void check_theta(std::span<const double> theta, int dim) {
  if (theta.size() != static_cast<std::size_t>(dim))
    throw std::invalid_argument("estimate_gradient: theta has wrong dimension");
}

}  // namespace

void GradEstimatorConfig::validate() const {
  if (!(q < 3.0)) throw std::invalid_argument("GradEstimatorConfig: q must be < 3");
  if (!(beta > 0.0)) throw std::invalid_argument("GradEstimatorConfig: beta must be > 0");
  if (dim < 1) throw std::invalid_argument("GradEstimatorConfig: dim must be >= 1");
  if (num_perturbations < 1 || samples_per_perturbation < 1)
    throw std::invalid_argument("GradEstimatorConfig: M and L must be >= 1");
}

double sf_weight(std::span<const double> eta, double q) {
  if (q == 1.0) return 1.0;
  double r2 = 0.0;
  for (double v : eta) r2 += v * v;
  const double denom = 1.0 - kernel_coefficient(q) * r2;
  if (!(denom > 0.0)) {
    std::ostringstream os;
    os << "sf_weight: |eta|^2 = " << r2 << " is outside the q = " << q << " support";
    throw std::domain_error(os.str());
  }
  return 1.0 / denom;
}

double smoothed_value(const Objective& f, std::span<const double> theta, double q, double beta,
                      std::size_t num_samples, RngStream& rng) {
  if (num_samples < 1) throw std::invalid_argument("smoothed_value: need at least one sample");
  if (!(beta > 0.0)) throw std::invalid_argument("smoothed_value: beta must be > 0");
  Vector z(theta.size()), x(theta.size());
  detail::CompensatedSum acc;
  for (std::size_t j = 0; j < num_samples; ++j) {
    sample_vector(rng, q, z);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = theta[i] - beta * z[i];
    acc.add(f(x));
  }
  return acc.value() / static_cast<double>(num_samples);
}

GradEstimate estimate_gradient(const Objective& f, std::span<const double> theta,
                               const GradEstimatorConfig& cfg, RngStream& rng) {
  cfg.validate();
  check_theta(theta, cfg.dim);
  const std::size_t dim = theta.size();
  const double num_samples = static_cast<double>(cfg.samples_per_perturbation);
  return run_blocks(cfg.num_perturbations, cfg.dim, cfg.threads, rng,
                    [&](std::size_t count, RngStream& stream, BlockSums& sums) {
                      Vector z(dim), x(dim);
                      for (std::size_t k = 0; k < count; ++k) {
                        sample_perturbation(stream, cfg.q, z);
                        const double w = sf_weight(z, cfg.q);
                        for (std::size_t i = 0; i < dim; ++i) x[i] = theta[i] + cfg.beta * z[i];
                        double h = 0.0;
                        for (std::size_t m = 0; m < cfg.samples_per_perturbation; ++m) h += f(x);
                        const double mean_h = h / num_samples;
                        for (std::size_t i = 0; i < dim; ++i) {
                          const double term = ((z[i] * mean_h) * w) / cfg.beta;
                          sums.sum[i].add(term);
                          sums.sum_sq[i].add(term * term);
                        }
                      }
                    });
}

GradEstimate estimate_gradient_gaussian(const Objective& f, std::span<const double> theta,
                                        double beta, std::size_t num_perturbations,
                                        std::size_t samples_per_perturbation, RngStream& rng,
                                        unsigned threads) {
  if (!(beta > 0.0) || num_perturbations < 1 || samples_per_perturbation < 1 || theta.empty())
    throw std::invalid_argument("estimate_gradient_gaussian: bad arguments");
  const std::size_t dim = theta.size();
  const double num_samples = static_cast<double>(samples_per_perturbation);
  constexpr double two_pi = 2.0 * std::numbers::pi;
  return run_blocks(num_perturbations, static_cast<int>(dim), threads, rng,
                    [&](std::size_t count, RngStream& stream, BlockSums& sums) {
                      Vector eta(dim), x(dim);
                      for (std::size_t k = 0; k < count; ++k) {
                        for (auto& e : eta) {
                          const double u1 = stream.uniform_open();
                          const double u2 = stream.uniform();
                          e = std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
                        }
                        for (std::size_t i = 0; i < dim; ++i) x[i] = theta[i] + beta * eta[i];
                        double h = 0.0;
                        for (std::size_t m = 0; m < samples_per_perturbation; ++m) h += f(x);
                        const double mean_h = h / num_samples;
                        for (std::size_t i = 0; i < dim; ++i) {
                          const double term = (eta[i] * mean_h) / beta;
                          sums.sum[i].add(term);
                          sums.sum_sq[i].add(term * term);
                        }
                      }
                    });
}

}  // namespace qsf
