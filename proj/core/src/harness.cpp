#include "qsf/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "qsf/detail/summation.hpp"

namespace qsf {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt(double v, int digits = 17) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

std::string label(double v) { return fmt(v, 10); }

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  out.flush();
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, ',')) fields.push_back(cur);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_double(const std::string& s, const std::string& where) {
  if (s == "nan") return kNaN;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || *end != '\0') throw std::runtime_error(where + ": not a number: '" + s + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& s, const std::string& where) {
  char* end = nullptr;
  const auto v = std::strtoull(s.c_str(), &end, 10);
  if (s.empty() || *end != '\0' || s.front() == '-')
    throw std::runtime_error(where + ": not an unsigned integer: '" + s + "'");
  return v;
}

bool on_boundary(std::span<const double> theta, const OptimizerSettings& opt) {
  for (std::size_t i = 0; i < theta.size(); ++i)
    if (theta[i] == opt.box_min[i] || theta[i] == opt.box_max[i]) return true;
  return false;
}

}  // namespace

std::uint64_t cell_stream_id(std::size_t q_index, std::size_t beta_index, std::size_t trial) {
  if (q_index > 0xFFFF || beta_index > 0xFFFF || trial > 0xFFFFFFFFull)
    throw std::out_of_range("cell_stream_id: index exceeds its field width");
  return (static_cast<std::uint64_t>(q_index) << 48) |
         (static_cast<std::uint64_t>(beta_index) << 32) | static_cast<std::uint64_t>(trial);
}

TwoTimescaleConfig cell_optimizer_config(const ExperimentConfig& cfg, std::size_t q_index,
                                         std::size_t beta_index, std::size_t trial) {
  const RngStream cell(cfg.base_seed, cell_stream_id(q_index, beta_index, trial));
  TwoTimescaleConfig tc;
  tc.M = cfg.optimizer.M;
  tc.L = cfg.optimizer.L;
  tc.q = cfg.q_values.at(q_index);
  tc.beta = cfg.beta_values.at(beta_index);
  tc.box_min = cfg.optimizer.box_min;
  tc.box_max = cfg.optimizer.box_max;
  tc.theta0 = cfg.optimizer.theta0;
  tc.seed = cell.split(0);
  tc.z_source = cfg.optimizer.z_update;
  tc.divergence_threshold = cfg.optimizer.divergence_threshold;
  return tc;
}

QueueNetwork cell_network(const ExperimentConfig& cfg, std::size_t q_index, std::size_t beta_index,
                          std::size_t trial) {
  const RngStream cell(cfg.base_seed, cell_stream_id(q_index, beta_index, trial));
  return QueueNetwork(cfg.network, cell.split(1));
}

std::string_view to_string(TrialStatus s) {
  switch (s) {
    case TrialStatus::ok: return "ok";
    case TrialStatus::diverged: return "diverged";
    case TrialStatus::boundary: return "boundary";
  }
  return "?";
}

TrialStatus parse_trial_status(std::string_view s) {
  if (s == "ok") return TrialStatus::ok;
  if (s == "diverged") return TrialStatus::diverged;
  if (s == "boundary") return TrialStatus::boundary;
  throw std::invalid_argument("unknown trial status '" + std::string(s) + "'");
}

TrialRecord run_trial(const ExperimentConfig& cfg, std::size_t q_index, std::size_t beta_index,
                      std::size_t trial, RunTrace* trace) {
  const auto start = std::chrono::steady_clock::now();
  const TwoTimescaleConfig tc = cell_optimizer_config(cfg, q_index, beta_index, trial);
  QueueNetwork network = cell_network(cfg, q_index, beta_index, trial);
  RunTrace run = run_qsf(network, tc);

  TrialRecord r;
  r.q_index = q_index;
  r.beta_index = beta_index;
  r.trial = trial;
  r.q = tc.q;
  r.beta = tc.beta;
  r.stream_id = cell_stream_id(q_index, beta_index, trial);
  const auto& target = cfg.network.theta_target;
  r.final_distance = distance(run.final_theta, target);
  if (run.divergence) {
    r.status = TrialStatus::diverged;
    r.divergence_n = run.divergence->n;
  } else if (on_boundary(run.final_theta, cfg.optimizer) &&
             r.final_distance >= distance(cfg.optimizer.theta0, target)) {
    r.status = TrialStatus::boundary;
  }
  r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (trace) *trace = std::move(run);
  return r;
}

SweepResult run_experiment(const ExperimentConfig& cfg, const ProgressCallback& progress) {
  cfg.validate();
  SweepResult result;
  result.q_values = cfg.q_values;
  result.beta_values = cfg.beta_values;
  result.trials = cfg.trials;
  const std::size_t nb = cfg.beta_values.size();
  const std::size_t total = cfg.q_values.size() * nb * cfg.trials;
  result.records.resize(total);

  std::atomic<std::size_t> next{0};
  std::size_t done = 0;
  std::mutex progress_mutex;
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < total;) {
      const std::size_t trial = k % cfg.trials;
      const std::size_t bi = (k / cfg.trials) % nb;
      const std::size_t qi = k / (cfg.trials * nb);
      try {
        result.records[k] = run_trial(cfg, qi, bi, trial);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(total);
        return;
      }
      if (progress) {
        std::lock_guard lock(progress_mutex);
        progress(++done, total);
      }
    }
  };

  const unsigned n_threads = static_cast<unsigned>(std::min<std::size_t>(cfg.workers, total));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(n_threads);
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return result;
}

std::vector<CellSummary> summarize(const SweepResult& result) {
  if (result.records.empty()) throw std::invalid_argument("summarize: empty sweep result");
  const std::size_t nb = result.beta_values.size();
  std::vector<CellSummary> cells(result.q_values.size() * nb);
  std::vector<std::vector<double>> values(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    cells[i].q_index = i / nb;
    cells[i].beta_index = i % nb;
  }
  for (const auto& r : result.records) {
    const std::size_t i = r.q_index * nb + r.beta_index;
    values.at(i).push_back(r.final_distance);
    if (r.status != TrialStatus::ok) ++cells[i].divergent;
  }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& v = values[i];
    auto& c = cells[i];
    c.count = v.size();
    if (v.empty()) {
      c.mean = c.standard_error = kNaN;
      continue;
    }
    double sum = 0.0;
    for (double x : v) sum += x;
    c.mean = sum / static_cast<double>(v.size());
    if (v.size() < 2) {
      c.standard_error = kNaN;
      continue;
    }
    detail::CompensatedSum ss;
    for (double x : v) ss.add((x - c.mean) * (x - c.mean));
    const double n = static_cast<double>(v.size());
    c.standard_error = std::sqrt(ss.value() / (n - 1.0) / n);
  }
  return cells;
}

std::vector<SelfCheck> self_check(const SweepResult& result) {
  std::vector<SelfCheck> checks;
  const std::size_t expected = result.q_values.size() * result.beta_values.size() * result.trials;
  checks.push_back({"record_count", result.records.size() == expected,
                    std::to_string(result.records.size()) + " records, expected " +
                        std::to_string(expected)});

  std::set<std::uint64_t> ids;
  bool finite = true;
  for (const auto& r : result.records) {
    ids.insert(r.stream_id);
    finite = finite && std::isfinite(r.final_distance) && r.final_distance >= 0.0;
  }
  checks.push_back({"distinct_stream_ids", ids.size() == result.records.size(),
                    std::to_string(ids.size()) + " distinct of " +
                        std::to_string(result.records.size())});
  checks.push_back({"finite_distances", finite, finite ? "all finite" : "non-finite distance found"});

  if (!result.records.empty()) {
    const auto cells = summarize(result);
    const std::size_t nb = result.beta_values.size();
    bool exact = true;
    bool complete = true;
    for (const auto& c : cells) {
      double sum = 0.0;
      std::size_t n = 0;
      for (const auto& r : result.records)
        if (r.q_index * nb + r.beta_index == c.q_index * nb + c.beta_index) sum += r.final_distance, ++n;
      complete = complete && n == result.trials;
      exact = exact && n > 0 && c.mean == sum / static_cast<double>(n);
    }
    checks.push_back({"cells_complete", complete, "every cell has all trials"});
    checks.push_back({"summary_mean_exact", exact, "cell means recomputed from records"});
  }
  return checks;
}

void write_sweep_csv(const SweepResult& result, const std::filesystem::path& path) {
  std::string text = "q,beta,trial,stream_id,final_distance,status,divergence_n\n";
  for (const auto& r : result.records) {
    text += fmt(r.q) + ',' + fmt(r.beta) + ',' + std::to_string(r.trial) + ',' +
            std::to_string(r.stream_id) + ',' + fmt(r.final_distance) + ',' +
            std::string(to_string(r.status)) + ',' +
            (r.divergence_n ? std::to_string(*r.divergence_n) : std::string()) + '\n';
  }
  write_text(path, text);
}

SweepResult read_sweep_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "q,beta,trial,stream_id,final_distance,status,divergence_n")
    throw std::runtime_error(path.string() + ": unexpected header");
  SweepResult result;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    const auto f = split_csv(line);
    if (f.size() != 7) throw std::runtime_error(where + ": expected 7 fields");
    TrialRecord r;
    r.q = parse_double(f[0], where);
    r.beta = parse_double(f[1], where);
    r.trial = static_cast<std::size_t>(parse_u64(f[2], where));
    r.stream_id = parse_u64(f[3], where);
    r.final_distance = parse_double(f[4], where);
    r.status = parse_trial_status(f[5]);
    if (!f[6].empty()) r.divergence_n = static_cast<std::size_t>(parse_u64(f[6], where));
    auto index_of = [](std::vector<double>& values, double v) {
      auto it = std::find(values.begin(), values.end(), v);
      if (it == values.end()) it = values.insert(values.end(), v);
      return static_cast<std::size_t>(it - values.begin());
    };
    r.q_index = index_of(result.q_values, r.q);
    r.beta_index = index_of(result.beta_values, r.beta);
    result.trials = std::max(result.trials, r.trial + 1);
    result.records.push_back(r);
  }
  return result;
}

void write_timings_csv(const SweepResult& result, const std::filesystem::path& path) {
  std::string text = "q,beta,trial,wall_time_s\n";
  for (const auto& r : result.records)
    text += fmt(r.q) + ',' + fmt(r.beta) + ',' + std::to_string(r.trial) + ',' + fmt(r.wall_time, 6) + '\n';
  write_text(path, text);
}

void write_summary(const SweepResult& result, const std::filesystem::path& dir) {
  const auto cells = summarize(result);
  std::string header = "q\\beta";
  for (double b : result.beta_values) header += ',' + label(b);
  header += '\n';
  std::string means = header, errors = header, divergent = header;
  const std::size_t nb = result.beta_values.size();
  for (std::size_t qi = 0; qi < result.q_values.size(); ++qi) {
    const std::string row = label(result.q_values[qi]);
    means += row, errors += row, divergent += row;
    for (std::size_t bi = 0; bi < nb; ++bi) {
      const auto& c = cells[qi * nb + bi];
      means += ',' + (c.is_divergent() ? std::string("DIV") : fmt(c.mean));
      errors += ',' + (c.is_divergent() ? std::string("DIV") : fmt(c.standard_error));
      divergent += ',' + std::to_string(c.divergent);
    }
    means += '\n', errors += '\n', divergent += '\n';
  }
  write_text(dir / "summary.csv", means);
  write_text(dir / "summary_stderr.csv", errors);
  write_text(dir / "summary_divergent.csv", divergent);
}

void emit_trace(const RunTrace& trace, std::span<const double> target,
                const std::filesystem::path& path) {
  std::string text = "n,distance_to_target\n";
  for (const auto& r : trace.records) text += std::to_string(r.n) + ',' + fmt(distance(r.theta, target)) + '\n';
  write_text(path, text);
}

}  // namespace qsf
