// qsf: command-line front end for the q-Gaussian smoothed-functional
// experiments. Every subcommand exits with status 1 when one of its
// self-checks fails and 2 on usage or runtime errors.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qsf/harness.hpp"
#include "qsf/kernel_properties.hpp"
#include "qsf/qgauss.hpp"

namespace fs = std::filesystem;

namespace {

bool report(const std::vector<qsf::SelfCheck>& checks) {
  bool ok = true;
  for (const auto& c : checks) {
    std::printf("[%s] %s: %s\n", c.passed ? "ok" : "FAILED", c.name.c_str(), c.detail.c_str());
    ok = ok && c.passed;
  }
  return ok;
}

std::string tag(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::size_t index_of(const std::vector<double>& values, double v, const char* what) {
  for (std::size_t i = 0; i < values.size(); ++i)
    if (values[i] == v) return i;
  throw std::invalid_argument(std::string(what) + " " + tag(v) + " is not in the config grid");
}

int cmd_run(const std::string& config_path, std::optional<unsigned> workers,
            std::optional<std::string> output) {
  auto cfg = qsf::load_config(config_path);
  if (workers) cfg.workers = *workers;
  if (output) cfg.output_dir = *output;
  cfg.validate();
  fs::create_directories(cfg.output_dir);

  const auto result = qsf::run_experiment(cfg, [](std::size_t done, std::size_t total) {
    std::fprintf(stderr, "\r%zu/%zu trials", done, total);
    if (done == total) std::fputc('\n', stderr);
  });
  qsf::write_sweep_csv(result, cfg.output_dir / "sweep.csv");
  qsf::write_timings_csv(result, cfg.output_dir / "timings.csv");
  qsf::write_summary(result, cfg.output_dir);
  qsf::save_config(cfg, cfg.output_dir / "config.json");

  auto checks = qsf::self_check(result);
  const auto reread = qsf::read_sweep_csv(cfg.output_dir / "sweep.csv");
  bool same = reread.records.size() == result.records.size();
  for (std::size_t i = 0; same && i < result.records.size(); ++i)
    same = reread.records[i].final_distance == result.records[i].final_distance &&
           reread.records[i].status == result.records[i].status;
  checks.push_back({"sweep_csv_roundtrip", same, "sweep.csv re-read matches in-memory records"});
  std::printf("results written to %s\n", cfg.output_dir.string().c_str());
  return report(checks) ? 0 : 1;
}

int cmd_trace(const std::string& config_path, double q, double beta, std::size_t trial,
              std::optional<std::string> output, std::optional<std::string> events,
              std::optional<std::size_t> M) {
  auto cfg = qsf::load_config(config_path);
  if (output) cfg.output_dir = *output;
  if (M) cfg.optimizer.M = *M;
  cfg.validate();
  if (trial >= cfg.trials) throw std::invalid_argument("--trial must be below trials");
  const std::size_t qi = index_of(cfg.q_values, q, "q");
  const std::size_t bi = index_of(cfg.beta_values, beta, "beta");
  fs::create_directories(cfg.output_dir);

  const auto tc = qsf::cell_optimizer_config(cfg, qi, bi, trial);
  auto network = qsf::cell_network(cfg, qi, bi, trial);
  std::ofstream event_log;
  if (events) {
    event_log.open(*events);
    if (!event_log) throw std::runtime_error("cannot open " + *events);
    event_log << "clock,event_type,node,q1,q2,cost\n";
    network.set_event_log(&event_log);
  }
  const auto trace = qsf::run_qsf(network, tc);
  network.set_event_log(nullptr);

  const std::string stem = "q" + tag(q) + "_beta" + tag(beta) + "_trial" + std::to_string(trial);
  const auto& target = cfg.network.theta_target;
  qsf::write_trace_csv(trace, target, cfg.output_dir / ("trace_" + stem + ".csv"));
  qsf::emit_trace(trace, target, cfg.output_dir / ("distance_" + stem + ".csv"));

  std::vector<qsf::SelfCheck> checks;
  bool inside = true;
  for (const auto& r : trace.records)
    for (std::size_t i = 0; i < r.theta.size(); ++i)
      inside = inside && r.theta[i] >= tc.box_min[i] && r.theta[i] <= tc.box_max[i];
  checks.push_back({"theta_in_box", inside, "every recorded theta(n) lies in the box"});
  if (trace.completed())
    checks.push_back({"trace_length", trace.records.size() == tc.M + 1,
                      std::to_string(trace.records.size()) + " rows"});
  std::printf("final distance %.6g%s\n", qsf::distance(trace.final_theta, target),
              trace.completed() ? "" : " (Z guard tripped)");
  std::printf("trace written to %s\n", (cfg.output_dir / ("trace_" + stem + ".csv")).string().c_str());
  return report(checks) ? 0 : 1;
}

int cmd_verify_kernel(double q, const std::vector<double>& betas, double theta) {
  qsf::KernelCheckOptions options;
  options.theta = theta;
  const qsf::Objective f = [](std::span<const double> x) { return std::cos(x[0]); };
  const auto rep = qsf::verify_kernel_properties(q, betas, f, options);
  std::cout << qsf::to_json(rep) << "\n";
  return rep.all_passed() ? 0 : 1;
}

int cmd_qgauss_verify(const std::vector<double>& qs, const std::vector<double>& betas,
                      std::size_t draws, std::uint64_t seed, double alpha) {
  bool ok = true;
  std::printf("%-6s %-8s %-14s %-10s %-10s %-10s %s\n", "q", "beta", "normalization", "ks_stat",
              "ks_crit", "cutoff_ok", "variance");
  for (std::size_t qi = 0; qi < qs.size(); ++qi) {
    const double q = qs[qi];
    qsf::RngStream rng(seed, qi);
    std::vector<double> z(draws);
    for (auto& v : z) v = qsf::sample_scalar(rng, q);
    const double R = qsf::support_radius(q);
    std::size_t violations = 0;
    for (double v : z) violations += !(std::abs(v) < R);
    double mean = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      const double d = z[i] - mean;
      mean += d / static_cast<double>(i + 1);
      m2 += d * (z[i] - mean);
    }
    const double variance = m2 / static_cast<double>(z.size() - 1);
    const double ks = qsf::ks_statistic(z, q);
    const double crit = qsf::ks_critical_value(draws, alpha);

    for (double beta : betas) {
      const double radius = qsf::support_radius(q, beta);
      const auto norm = qsf::quad::integrate(
          [&](double x) { return qsf::pdf(x, q, beta); }, std::isfinite(radius) ? -radius : -INFINITY,
          std::isfinite(radius) ? radius : INFINITY);
      const bool norm_ok = std::abs(norm.value - 1.0) < 1e-6;
      std::string var_text = "infinite";
      bool var_ok = true;
      if (q < 5.0 / 3.0) {
        const double expected = beta * beta * (3.0 - q) / (5.0 - 3.0 * q);
        const double got = beta * beta * variance;
        var_ok = std::abs(got / expected - 1.0) < 0.1;
        var_text = tag(got) + " vs " + tag(expected);
      }
      const bool row_ok = norm_ok && ks < crit && violations == 0 && var_ok;
      ok = ok && row_ok;
      std::printf("%-6g %-8g %-14.10f %-10.6f %-10.6f %-10s %s%s\n", q, beta, norm.value, ks, crit,
                  violations == 0 ? "yes" : "NO", var_text.c_str(), row_ok ? "" : "  FAILED");
    }
  }
  return ok ? 0 : 1;
}

int cmd_summarize(const std::string& dir) {
  const fs::path root(dir);
  const auto result = qsf::read_sweep_csv(root / "sweep.csv");
  qsf::write_summary(result, root);
  std::printf("summary written to %s\n", (root / "summary.csv").string().c_str());
  return report(qsf::self_check(result)) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"q-Gaussian smoothed-functional optimization experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<unsigned> workers;
  std::optional<std::string> output;
  auto* run = app.add_subcommand("run", "Run the full (q, beta) sweep described by a config");
  run->add_option("config", config_path, "JSON config file")->required()->check(CLI::ExistingFile);
  run->add_option("--workers", workers, "Worker threads (does not change results)");
  run->add_option("--output", output, "Override output_dir");

  double q = 1.0, beta = 0.25;
  std::size_t trial = 0;
  std::optional<std::string> events;
  std::optional<std::size_t> M;
  auto* trace = app.add_subcommand("trace", "Run one traced trial");
  trace->add_option("config", config_path, "JSON config file")->required()->check(CLI::ExistingFile);
  trace->add_option("--q", q, "q value (must be in q_values)")->required();
  trace->add_option("--beta", beta, "beta value (must be in beta_values)")->required();
  trace->add_option("--trial", trial, "Trial index")->required();
  trace->add_option("--output", output, "Override output_dir");
  trace->add_option("--events", events, "Write the queue event log to this CSV (large)");
  trace->add_option("--M", M, "Override the number of outer iterations");

  std::vector<double> betas{0.5, 0.1, 0.02};
  double theta = 0.0;
  auto* vk = app.add_subcommand("verify-kernel", "Check kernel properties P1-P5, JSON report");
  vk->add_option("--q", q, "q < 3")->required();
  vk->add_option("--betas", betas, "Decreasing beta sequence")->delimiter(',');
  vk->add_option("--theta", theta, "Point where the smoothed cos is evaluated");

  std::vector<double> qs;
  std::vector<double> qbetas{1.0};
  std::size_t draws = 100000;
  std::uint64_t seed = 20100705;
  double alpha = 0.01;
  auto* qg = app.add_subcommand("qgauss", "q-Gaussian utilities");
  qg->require_subcommand(1);
  auto* qv = qg->add_subcommand("verify", "Normalization, KS test, cutoff and variance checks");
  qv->add_option("--q", qs, "q values")->required()->delimiter(',');
  qv->add_option("--beta", qbetas, "beta values")->delimiter(',');
  qv->add_option("--draws", draws, "Samples per q")->check(CLI::Range(std::size_t{10}, std::size_t{100000000}));
  qv->add_option("--seed", seed, "Base seed");
  qv->add_option("--alpha", alpha, "KS significance level")->check(CLI::Range(1e-6, 0.5));

  std::string results_dir;
  auto* summ = app.add_subcommand("summarize", "Rebuild summary tables from sweep.csv");
  summ->add_option("results-dir", results_dir, "Directory holding sweep.csv")->required()->check(CLI::ExistingDirectory);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*run) return cmd_run(config_path, workers, output);
    if (*trace) return cmd_trace(config_path, q, beta, trial, output, events, M);
    if (*vk) return cmd_verify_kernel(q, betas, theta);
    if (*qv) return cmd_qgauss_verify(qs, qbetas, draws, seed, alpha);
    if (*summ) return cmd_summarize(results_dir);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "qsf: %s\n", e.what());
    return 2;
  }
  return 2;
}
