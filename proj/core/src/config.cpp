#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "qsf/harness.hpp"

namespace qsf {
namespace {

using Json = nlohmann::ordered_json;

std::string join(const std::string& parent, const std::string& key) {
  return parent.empty() ? key : parent + "." + key;
}

void reject_unknown(const Json& obj, const std::string& path,
                    std::initializer_list<std::string_view> known) {
  for (const auto& [key, value] : obj.items()) {
    bool found = false;
    for (auto k : known) found = found || key == k;
    if (!found) throw ConfigError(join(path, key), "unknown key");
  }
}

const Json& require_object(const Json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path.empty() ? "<root>" : path, "expected an object");
  return j;
}

double read_real(const Json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(path, "expected a finite number");
  return v;
}

std::uint64_t read_unsigned(const Json& j, const std::string& path) {
  if (!j.is_number_unsigned()) throw ConfigError(path, "expected a nonnegative integer");
  return j.get<std::uint64_t>();
}

Vector read_reals(const Json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path, "expected an array of numbers");
  Vector out;
  for (std::size_t i = 0; i < j.size(); ++i)
    out.push_back(read_real(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

template <class T, class Read>
void maybe(const Json& obj, const std::string& parent, const char* key, T& field, Read read) {
  if (auto it = obj.find(key); it != obj.end()) field = read(*it, join(parent, key));
}

int read_dim(const Json& j, const std::string& path) {
  const auto v = read_unsigned(j, path);
  if (v < 1 || v > 1024) throw ConfigError(path, "must be between 1 and 1024");
  return static_cast<int>(v);
}

}  // namespace

ConfigError::ConfigError(std::string key_path, const std::string& message)
    : std::runtime_error("config: " + key_path + ": " + message), key_path_(std::move(key_path)) {}

void ExperimentConfig::validate() const {
  if (q_values.empty()) throw ConfigError("q_values", "must not be empty");
  for (std::size_t i = 0; i < q_values.size(); ++i)
    if (!(q_values[i] < 3.0))
      throw ConfigError("q_values[" + std::to_string(i) + "]", "q must be < 3");
  if (beta_values.empty()) throw ConfigError("beta_values", "must not be empty");
  for (std::size_t i = 0; i < beta_values.size(); ++i)
    if (!(beta_values[i] > 0.0))
      throw ConfigError("beta_values[" + std::to_string(i) + "]", "beta must be > 0");
  if (q_values.size() > 0xFFFF) throw ConfigError("q_values", "at most 65535 entries");
  if (beta_values.size() > 0xFFFF) throw ConfigError("beta_values", "at most 65535 entries");
  if (trials < 1 || trials > 0xFFFFFFFFull) throw ConfigError("trials", "must be in [1, 2^32)");
  if (workers < 1) throw ConfigError("workers", "must be >= 1");

  const std::size_t n = static_cast<std::size_t>(network.N1 + network.N2);
  if (optimizer.M < 1) throw ConfigError("optimizer.M", "must be >= 1");
  if (optimizer.L < 1) throw ConfigError("optimizer.L", "must be >= 1");
  if (optimizer.box_min.size() != n) throw ConfigError("optimizer.box_min", "must have N1 + N2 entries");
  if (optimizer.box_max.size() != n) throw ConfigError("optimizer.box_max", "must have N1 + N2 entries");
  if (optimizer.theta0.size() != n) throw ConfigError("optimizer.theta0", "must have N1 + N2 entries");
  for (std::size_t i = 0; i < n; ++i) {
    const std::string idx = "[" + std::to_string(i) + "]";
    if (!(optimizer.box_min[i] < optimizer.box_max[i]))
      throw ConfigError("optimizer.box_max" + idx, "must exceed box_min");
    if (!(optimizer.theta0[i] >= optimizer.box_min[i] && optimizer.theta0[i] <= optimizer.box_max[i]))
      throw ConfigError("optimizer.theta0" + idx, "must lie inside the box");
  }
  if (!(optimizer.divergence_threshold > 0.0))
    throw ConfigError("optimizer.divergence_threshold", "must be > 0");
  try {
    network.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("network", e.what());
  }
}

ExperimentConfig parse_config(std::string_view json_text) {
  Json root;
  if (json_text.find_first_not_of(" \t\r\n") == std::string_view::npos) json_text = "{}";
  try {
    root = Json::parse(json_text.begin(), json_text.end(), nullptr, true, true);
  } catch (const Json::parse_error& e) {
    throw ConfigError("<root>", std::string("malformed JSON: ") + e.what());
  }
  if (root.is_null()) root = Json::object();
  require_object(root, "");
  reject_unknown(root, "",
                 {"q_values", "beta_values", "trials", "base_seed", "output_dir", "workers",
                  "optimizer", "network"});

  ExperimentConfig cfg;
  maybe(root, "", "q_values", cfg.q_values, read_reals);
  maybe(root, "", "beta_values", cfg.beta_values, read_reals);
  maybe(root, "", "trials", cfg.trials, [](const Json& j, const std::string& p) {
    return static_cast<std::size_t>(read_unsigned(j, p));
  });
  maybe(root, "", "base_seed", cfg.base_seed, read_unsigned);
  maybe(root, "", "output_dir", cfg.output_dir, [](const Json& j, const std::string& p) {
    if (!j.is_string()) throw ConfigError(p, "expected a string");
    return std::filesystem::path(j.get<std::string>());
  });
  maybe(root, "", "workers", cfg.workers, [](const Json& j, const std::string& p) {
    const auto v = read_unsigned(j, p);
    if (v < 1 || v > 1024) throw ConfigError(p, "must be between 1 and 1024");
    return static_cast<unsigned>(v);
  });

  bool has_target = false;
  if (auto it = root.find("network"); it != root.end()) {
    const Json& net = require_object(*it, "network");
    reject_unknown(net, "network",
                   {"lambda1", "lambda2", "p_exit", "R1", "R2", "N1", "N2", "theta_target"});
    auto& nc = cfg.network;
    maybe(net, "network", "lambda1", nc.lambda1, read_real);
    maybe(net, "network", "lambda2", nc.lambda2, read_real);
    maybe(net, "network", "p_exit", nc.p_exit, read_real);
    maybe(net, "network", "R1", nc.R1, read_real);
    maybe(net, "network", "R2", nc.R2, read_real);
    maybe(net, "network", "N1", nc.N1, read_dim);
    maybe(net, "network", "N2", nc.N2, read_dim);
    has_target = net.contains("theta_target");
    maybe(net, "network", "theta_target", nc.theta_target, read_reals);
  }
  const std::size_t n = static_cast<std::size_t>(cfg.network.N1 + cfg.network.N2);
  if (!has_target) cfg.network.theta_target.assign(n, 1.0);
  auto& opt = cfg.optimizer;
  opt.box_min.assign(n, 0.0);
  opt.box_max.assign(n, 5.0);
  opt.theta0.assign(n, 5.0);

  if (auto it = root.find("optimizer"); it != root.end()) {
    const Json& o = require_object(*it, "optimizer");
    reject_unknown(o, "optimizer",
                   {"M", "L", "box_min", "box_max", "theta0", "z_update", "divergence_threshold"});
    auto read_count = [](const Json& j, const std::string& p) {
      return static_cast<std::size_t>(read_unsigned(j, p));
    };
    maybe(o, "optimizer", "M", opt.M, read_count);
    maybe(o, "optimizer", "L", opt.L, read_count);
    maybe(o, "optimizer", "box_min", opt.box_min, read_reals);
    maybe(o, "optimizer", "box_max", opt.box_max, read_reals);
    maybe(o, "optimizer", "theta0", opt.theta0, read_reals);
    maybe(o, "optimizer", "divergence_threshold", opt.divergence_threshold, read_real);
    maybe(o, "optimizer", "z_update", opt.z_update, [](const Json& j, const std::string& p) {
      if (j == "latest") return ZUpdateSource::latest;
      if (j == "block_start") return ZUpdateSource::block_start;
      throw ConfigError(p, "expected \"latest\" or \"block_start\"");
    });
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  try {
    return parse_config(text.str());
  } catch (const ConfigError& e) {
    throw ConfigError(e.key_path(), std::string(e.what()) + " (in " + path.string() + ")");
  }
}

std::string config_to_json(const ExperimentConfig& cfg) {
  const auto& o = cfg.optimizer;
  const auto& n = cfg.network;
  Json j;
  j["q_values"] = cfg.q_values;
  j["beta_values"] = cfg.beta_values;
  j["trials"] = cfg.trials;
  j["base_seed"] = cfg.base_seed;
  j["output_dir"] = cfg.output_dir.string();
  j["workers"] = cfg.workers;
  j["optimizer"] = {{"M", o.M},
                    {"L", o.L},
                    {"box_min", o.box_min},
                    {"box_max", o.box_max},
                    {"theta0", o.theta0},
                    {"z_update", o.z_update == ZUpdateSource::latest ? "latest" : "block_start"},
                    {"divergence_threshold", o.divergence_threshold}};
  j["network"] = {{"lambda1", n.lambda1}, {"lambda2", n.lambda2}, {"p_exit", n.p_exit},
                  {"R1", n.R1},           {"R2", n.R2},           {"N1", n.N1},
                  {"N2", n.N2},           {"theta_target", n.theta_target}};
  return j.dump(2) + "\n";
}

void save_config(const ExperimentConfig& cfg, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write config " + path.string());
  out << config_to_json(cfg);
  if (!out) throw std::runtime_error("write failed for config " + path.string());
}

}  // namespace qsf
