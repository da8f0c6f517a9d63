#pragma once

#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hdoa/array_signal.hpp"
#include "hdoa/solvers.hpp"
#include "hdoa/train.hpp"
#include "hdoa/util.hpp"

namespace hdoa {

// Configuration problems exit with code 2; numeric failures with 3.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

// Minimal INI reader: [section] headers, key = value lines, # or ; comments.
struct Ini {
  std::map<std::string, std::map<std::string, std::string>> sections;

  static Ini parse(const std::string& text) {
    Ini ini;
    std::string section;
    int lineno = 0;
    for (const std::string& raw : split(text, '\n')) {
      ++lineno;
      std::string line = trim(raw);
      const auto hash = line.find_first_of("#;");
      if (hash != std::string::npos) line = trim(line.substr(0, hash));
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']')
          throw ConfigError("config line " + std::to_string(lineno) + ": unterminated section");
        section = trim(line.substr(1, line.size() - 2));
        ini.sections[section];
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
      if (section.empty())
        throw ConfigError("config line " + std::to_string(lineno) + ": key outside a section");
      ini.sections[section][trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return ini;
  }

  bool has(const std::string& sec, const std::string& key) const {
    auto s = sections.find(sec);
    return s != sections.end() && s->second.count(key) > 0;
  }

  std::string get(const std::string& sec, const std::string& key,
                  const std::string& fallback) const {
    auto s = sections.find(sec);
    if (s == sections.end()) return fallback;
    auto k = s->second.find(key);
    return k == s->second.end() ? fallback : k->second;
  }

  double get_double(const std::string& sec, const std::string& key, double fallback) const {
    if (!has(sec, key)) return fallback;
    const std::string v = get(sec, key, "");
    if (v == "inf" || v == "+inf") return std::numeric_limits<double>::infinity();
    try {
      std::size_t pos = 0;
      const double d = std::stod(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return d;
    } catch (const std::exception&) {
      throw ConfigError("config [" + sec + "] " + key + ": not a number: " + v);
    }
  }

  long long get_int(const std::string& sec, const std::string& key, long long fallback) const {
    if (!has(sec, key)) return fallback;
    const std::string v = get(sec, key, "");
    try {
      std::size_t pos = 0;
      const long long d = std::stoll(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return d;
    } catch (const std::exception&) {
      throw ConfigError("config [" + sec + "] " + key + ": not an integer: " + v);
    }
  }

  bool get_bool(const std::string& sec, const std::string& key, bool fallback) const {
    if (!has(sec, key)) return fallback;
    const std::string v = get(sec, key, "");
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("config [" + sec + "] " + key + ": not a boolean: " + v);
  }
};

inline void check_keys(const Ini& ini, const std::string& sec,
                       const std::set<std::string>& allowed) {
  auto s = ini.sections.find(sec);
  if (s == ini.sections.end()) return;
  for (const auto& [key, value] : s->second)
    if (!allowed.count(key))
      throw ConfigError("config [" + sec + "]: unknown key '" + key + "'");
}

}  // namespace detail

// One structured-text file drives every subcommand; all values resolve to
// this struct and the resolved form is embedded in each run manifest.
struct ExperimentConfig {
  ArrayConfig array;  // omega fully resolved
  int sla_size = 0;   // 0 = full array unless omega was given explicitly
  std::uint64_t sla_seed = 7;

  DatasetParams dataset;
  TrainConfig train;
  SolverConfig solver;

  // held-out evaluation set
  int test_count = 500;
  double test_snr_db = 20.0;
  std::uint64_t test_seed = 999;
  double test_min_separation_deg = 0.0;

  // DOA pipeline settings
  double doa_min_separation_deg = 10.0;
  double grid_step_deg = 0.1;

  int threads = 1;

  DatasetParams test_params(double snr_db, double min_sep) const {
    DatasetParams p = dataset;
    p.count = test_count;
    p.seed = test_seed;
    p.snr_lo_db = snr_db;
    p.snr_hi_db = snr_db;
    p.min_separation_deg = min_sep;
    return p;
  }

  // Canonical resolved dump: deterministic ordering, used for hashing and
  // for embedding into run manifests.
  std::string canonical() const {
    std::ostringstream os;
    os << "[array]\n";
    os << "m = " << array.m << "\n";
    os << "spacing_ratio = " << fmt_double(array.spacing_ratio) << "\n";
    os << "omega = ";
    for (std::size_t i = 0; i < array.omega.size(); ++i)
      os << (i ? "," : "") << array.omega[i];
    os << "\n";
    os << "sla_seed = " << sla_seed << "\n";
    os << "[dataset]\n";
    os << "count = " << dataset.count << "\n";
    os << "p = " << dataset.p << "\n";
    os << "snr_lo_db = " << fmt_double(dataset.snr_lo_db) << "\n";
    os << "snr_hi_db = " << fmt_double(dataset.snr_hi_db) << "\n";
    os << "seed = " << dataset.seed << "\n";
    os << "min_separation_deg = " << fmt_double(dataset.min_separation_deg) << "\n";
    os << "[train]\n";
    os << "epochs = " << train.epochs << "\n";
    os << "batch_size = " << train.batch_size << "\n";
    os << "lr0 = " << fmt_double(train.lr0) << "\n";
    os << "lr_decay = " << fmt_double(train.lr_decay) << "\n";
    os << "alpha = " << fmt_double(train.alpha) << "\n";
    os << "seed = " << train.seed << "\n";
    os << "k_phases = " << train.k_phases << "\n";
    os << "[solver]\n";
    os << "rank = " << solver.rank_r << "\n";
    os << "beta = " << fmt_double(solver.step_beta) << "\n";
    os << "max_iters = " << solver.max_iters << "\n";
    os << "rel_tol = " << fmt_double(solver.rel_tol) << "\n";
    os << "mode = " << to_string(solver.residual_mode) << "\n";
    os << "fiht_structured = " << (solver.fiht_structured ? "true" : "false") << "\n";
    os << "[test]\n";
    os << "count = " << test_count << "\n";
    os << "snr_db = " << fmt_double(test_snr_db) << "\n";
    os << "seed = " << test_seed << "\n";
    os << "min_separation_deg = " << fmt_double(test_min_separation_deg) << "\n";
    os << "[doa]\n";
    os << "min_separation_deg = " << fmt_double(doa_min_separation_deg) << "\n";
    os << "grid_step_deg = " << fmt_double(grid_step_deg) << "\n";
    os << "[run]\n";
    os << "threads = " << threads << "\n";
    return os.str();
  }
};

inline ExperimentConfig parse_config_text(const std::string& text) {
  const detail::Ini ini = detail::Ini::parse(text);
  for (const auto& [sec, kv] : ini.sections)
    if (sec != "array" && sec != "dataset" && sec != "train" && sec != "solver" &&
        sec != "test" && sec != "doa" && sec != "run")
      throw ConfigError("config: unknown section [" + sec + "]");
  detail::check_keys(ini, "array", {"m", "spacing_ratio", "sla_size", "sla_seed", "omega"});
  detail::check_keys(ini, "dataset",
                     {"count", "p", "snr_lo_db", "snr_hi_db", "seed", "min_separation_deg"});
  detail::check_keys(ini, "train",
                     {"epochs", "batch_size", "lr0", "lr_decay", "alpha", "seed", "k_phases"});
  detail::check_keys(ini, "solver",
                     {"rank", "beta", "max_iters", "rel_tol", "mode", "fiht_structured"});
  detail::check_keys(ini, "test", {"count", "snr_db", "seed", "min_separation_deg"});
  detail::check_keys(ini, "doa", {"min_separation_deg", "grid_step_deg"});
  detail::check_keys(ini, "run", {"threads"});

  ExperimentConfig cfg;
  cfg.array.m = static_cast<int>(ini.get_int("array", "m", 21));
  cfg.array.spacing_ratio = ini.get_double("array", "spacing_ratio", 0.5);
  cfg.sla_seed = static_cast<std::uint64_t>(ini.get_int("array", "sla_seed", 7));
  if (ini.has("array", "omega")) {
    for (const std::string& tok : split(ini.get("array", "omega", ""), ','))
      cfg.array.omega.push_back(std::stoi(trim(tok)));
    cfg.sla_size = static_cast<int>(cfg.array.omega.size());
  } else {
    cfg.sla_size = static_cast<int>(ini.get_int("array", "sla_size", cfg.array.m));
    if (cfg.sla_size < 2 || cfg.sla_size > cfg.array.m)
      throw ConfigError("config [array] sla_size out of [2, m]");
    cfg.array.omega = make_sla(cfg.array.m, cfg.sla_size, cfg.sla_seed,
                               cfg.array.spacing_ratio).omega;
  }
  try {
    cfg.array.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config [array]: ") + e.what());
  }

  cfg.dataset.count = static_cast<int>(ini.get_int("dataset", "count", 20000));
  cfg.dataset.p = static_cast<int>(ini.get_int("dataset", "p", 2));
  cfg.dataset.snr_lo_db = ini.get_double("dataset", "snr_lo_db", 10.0);
  cfg.dataset.snr_hi_db = ini.get_double("dataset", "snr_hi_db", 30.0);
  cfg.dataset.seed = static_cast<std::uint64_t>(ini.get_int("dataset", "seed", 123));
  cfg.dataset.min_separation_deg = ini.get_double("dataset", "min_separation_deg", 0.0);

  cfg.train.epochs = static_cast<int>(ini.get_int("train", "epochs", 30));
  cfg.train.batch_size = static_cast<int>(ini.get_int("train", "batch_size", 256));
  cfg.train.lr0 = ini.get_double("train", "lr0", 1e-4);
  cfg.train.lr_decay = ini.get_double("train", "lr_decay", 0.5);
  cfg.train.alpha = ini.get_double("train", "alpha", 0.01);
  cfg.train.seed = static_cast<std::uint64_t>(ini.get_int("train", "seed", 17));
  cfg.train.k_phases = static_cast<int>(ini.get_int("train", "k_phases", 8));

  cfg.solver.rank_r = static_cast<int>(ini.get_int("solver", "rank", 2));
  cfg.solver.step_beta = ini.get_double("solver", "beta", 1.0);
  cfg.solver.max_iters = static_cast<int>(ini.get_int("solver", "max_iters", 500));
  cfg.solver.rel_tol = ini.get_double("solver", "rel_tol", 1e-8);
  try {
    cfg.solver.residual_mode = residual_mode_from_string(ini.get("solver", "mode", "masked"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config [solver]: ") + e.what());
  }
  cfg.solver.fiht_structured = ini.get_bool("solver", "fiht_structured", true);

  cfg.test_count = static_cast<int>(ini.get_int("test", "count", 500));
  cfg.test_snr_db = ini.get_double("test", "snr_db", 20.0);
  cfg.test_seed = static_cast<std::uint64_t>(ini.get_int("test", "seed", 999));
  cfg.test_min_separation_deg = ini.get_double("test", "min_separation_deg", 0.0);

  cfg.doa_min_separation_deg = ini.get_double("doa", "min_separation_deg", 10.0);
  cfg.grid_step_deg = ini.get_double("doa", "grid_step_deg", 0.1);
  if (!(cfg.grid_step_deg > 0.0)) throw ConfigError("config [doa] grid_step_deg must be > 0");

  cfg.threads = static_cast<int>(ini.get_int("run", "threads", 1));
  if (cfg.threads < 1) throw ConfigError("config [run] threads must be >= 1");

  try {
    cfg.train.validate();
    cfg.solver.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (cfg.dataset.count < 1 || cfg.dataset.p < 1)
    throw ConfigError("config [dataset]: count and p must be >= 1");
  if (cfg.test_count < 1) throw ConfigError("config [test]: count must be >= 1");
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  return parse_config_text(text);
}

}  // namespace hdoa
