// Copyright 2026 The pmqs Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Flat key = value run configuration.
//
// One assignment per line, '#' starts a comment, keys may contain dots.
// Lists are comma separated. A manifest written by a previous run is also
// accepted as a config file; its "config" object is read back verbatim.
//
//   key               default     meaning
//   family            (required)  qcnp | neyman_pearson | fairness
//   instance                      instance JSON path, replaces family generation
//   T                 (required)  horizon, unless `horizons` is given
//   horizons                      list of horizons; one run per horizon (sweep)
//   seeds             (required)  list of run seeds
//   instance_seed                 fixed generator seed; default is the run seed
//   schedule          theorem     theorem | practical | custom
//   beta              auto        auto takes beta from the problem constants
//   sigma, alpha, tau             required with schedule = custom
//   batch             1
//   metric_mode       map         map | moreau
//   metric_alpha                  default is the schedule alpha
//   compute_metrics   true
//   log_points        100         geometric log grid size
//   log_stride        0           > 0 replaces the geometric grid
//   retain_iterates   false       also write iterates and instance JSON
//   start             auto        auto | slater | center
//   hessian_mode      step1       step1 | empirical
//   sigma_margin      0
//   carry_lipschitz   false
//   apg.eta           2
//   apg.max_iter      2000
//   apg.tol                       default tolerance rule when unset
//   out               out         output directory
//
// Generator parameters: qcnp.{n,p,N,m,R,q_max,a_lo,a_hi,xbar_lo,xbar_hi},
// np.{d,n0,n1,tau,separation,R}, fairness.{d,size_d,size_s,size_min,tau,
// truncation,R}.

#ifndef PMQS_CONFIG_HPP_
#define PMQS_CONFIG_HPP_

#include <cerrno>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pmqs/core.hpp"
#include "pmqs/driver.hpp"
#include "pmqs/problems/fairness.hpp"
#include "pmqs/problems/neyman_pearson.hpp"
#include "pmqs/problems/qcnp.hpp"

namespace pmqs {

// Invalid or incomplete configuration; `field()` names the offending key.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& message)
      : Error("config: " + field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

using ConfigMap = std::map<std::string, std::string>;

inline std::string Trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline void ApplyOverride(ConfigMap& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw ConfigError(Trim(assignment), "expected key=value");
  }
  const std::string key = Trim(assignment.substr(0, eq));
  if (key.empty()) throw ConfigError("<empty>", "missing key in '" + assignment + "'");
  config[key] = Trim(assignment.substr(eq + 1));
}

inline ConfigMap ParseConfigText(const std::string& text) {
  ConfigMap config;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = Trim(line);
    if (line.empty()) continue;
    ApplyOverride(config, line);
  }
  return config;
}

inline ConfigMap LoadConfigFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  if (Trim(text).rfind('{', 0) == 0) {
    ConfigMap config;
    try {
      const auto doc = nlohmann::json::parse(text);
      for (const auto& [key, value] : doc.at("config").items()) {
        config[key] = value.get<std::string>();
      }
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("config", "manifest '" + path + "': " + e.what());
    }
    return config;
  }
  return ParseConfigText(text);
}

namespace config_detail {

inline double ParseDouble(const std::string& key, const std::string& value) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(value.c_str(), &end);
  if (value.empty() || end != value.c_str() + value.size() || errno == ERANGE) {
    throw ConfigError(key, "expected a number, got '" + value + "'");
  }
  return v;
}

inline std::int64_t ParseInt(const std::string& key, const std::string& value) {
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(value.c_str(), &end, 10);
  if (value.empty() || end != value.c_str() + value.size() || errno == ERANGE) {
    throw ConfigError(key, "expected an integer, got '" + value + "'");
  }
  return v;
}

inline std::uint64_t ParseUnsigned(const std::string& key,
                                   const std::string& value) {
  errno = 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(value.c_str(), &end, 10);
  if (value.empty() || value[0] == '-' ||
      end != value.c_str() + value.size() || errno == ERANGE) {
    throw ConfigError(key, "expected a nonnegative integer, got '" + value + "'");
  }
  return v;
}

inline bool ParseBool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError(key, "expected true or false, got '" + value + "'");
}

inline std::vector<std::string> SplitList(const std::string& value) {
  std::vector<std::string> items;
  std::string item;
  std::istringstream in(value);
  while (std::getline(in, item, ',')) {
    item = Trim(item);
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

// Reads keys out of a ConfigMap and remembers which were consumed.
class Reader {
 public:
  explicit Reader(const ConfigMap& config) : config_(config) {}

  const std::string* Find(const std::string& key) {
    used_.insert(key);
    const auto it = config_.find(key);
    return it == config_.end() ? nullptr : &it->second;
  }
  std::string String(const std::string& key, const std::string& fallback) {
    const std::string* v = Find(key);
    return v ? *v : fallback;
  }
  double Double(const std::string& key, double fallback) {
    const std::string* v = Find(key);
    return v ? ParseDouble(key, *v) : fallback;
  }
  std::optional<double> OptionalDouble(const std::string& key) {
    const std::string* v = Find(key);
    if (!v) return std::nullopt;
    return ParseDouble(key, *v);
  }
  Index Int(const std::string& key, Index fallback) {
    const std::string* v = Find(key);
    return v ? ParseInt(key, *v) : fallback;
  }
  bool Bool(const std::string& key, bool fallback) {
    const std::string* v = Find(key);
    return v ? ParseBool(key, *v) : fallback;
  }
  void RejectUnknown() const {
    for (const auto& [key, value] : config_) {
      if (!used_.count(key)) throw ConfigError(key, "unknown key");
    }
  }

 private:
  const ConfigMap& config_;
  std::set<std::string> used_;
};

}  // namespace config_detail

struct RunConfig {
  std::string family;
  std::string instance;
  std::vector<Index> horizons;  // a single entry unless sweeping
  bool sweep = false;
  std::vector<std::uint64_t> seeds;
  std::optional<std::uint64_t> instance_seed;
  ScheduleMode schedule = ScheduleMode::kTheorem;
  std::optional<double> beta;
  double sigma = 0.0;
  double alpha = 0.0;
  double tau = 0.0;
  RunSettings settings;
  std::string out = "out";
  QcnpParams qcnp;
  NpParams np;
  FairnessParams fairness;
  // Normalized input, written back to the manifest.
  ConfigMap source;
};

inline RunConfig ParseRunConfig(const ConfigMap& config) {
  using namespace config_detail;
  Reader r(config);
  RunConfig c;
  c.source = config;

  c.instance = r.String("instance", "");
  c.family = r.String("family", "");
  if (c.instance.empty()) {
    if (c.family.empty()) throw ConfigError("family", "required field missing");
    if (c.family != "qcnp" && c.family != "neyman_pearson" &&
        c.family != "fairness") {
      throw ConfigError("family", "unknown family '" + c.family + "'");
    }
  }

  const std::string* horizons = r.Find("horizons");
  const std::string* horizon = r.Find("T");
  if (horizons != nullptr) {
    if (horizon != nullptr) throw ConfigError("horizons", "give either T or horizons");
    for (const auto& item : SplitList(*horizons)) {
      c.horizons.push_back(ParseInt("horizons", item));
    }
    if (c.horizons.empty()) throw ConfigError("horizons", "empty list");
    c.sweep = true;
  } else if (horizon != nullptr) {
    c.horizons.push_back(ParseInt("T", *horizon));
  } else {
    throw ConfigError("T", "required field missing");
  }
  for (Index t : c.horizons) {
    if (t < 1) throw ConfigError(c.sweep ? "horizons" : "T", "must be >= 1");
  }

  const std::string* seeds = r.Find("seeds");
  if (seeds == nullptr) throw ConfigError("seeds", "required field missing");
  for (const auto& item : SplitList(*seeds)) {
    c.seeds.push_back(ParseUnsigned("seeds", item));
  }
  if (c.seeds.empty()) throw ConfigError("seeds", "must be nonempty");
  if (const std::string* v = r.Find("instance_seed")) {
    c.instance_seed = ParseUnsigned("instance_seed", *v);
  }

  try {
    c.schedule = ParseScheduleMode(r.String("schedule", "theorem"));
  } catch (const Error& e) {
    throw ConfigError("schedule", e.what());
  }
  const std::string beta = r.String("beta", "auto");
  if (beta != "auto") {
    c.beta = ParseDouble("beta", beta);
    if (!(*c.beta > 0.0)) throw ConfigError("beta", "must be positive");
  }
  if (c.schedule == ScheduleMode::kCustom) {
    for (const char* key : {"sigma", "alpha", "tau"}) {
      if (config.find(key) == config.end()) {
        throw ConfigError(key, "required with schedule = custom");
      }
    }
  }
  c.sigma = r.Double("sigma", 0.0);
  c.alpha = r.Double("alpha", 0.0);
  c.tau = r.Double("tau", 0.0);
  if (c.schedule == ScheduleMode::kCustom) {
    if (!(c.sigma > 0.0)) throw ConfigError("sigma", "must be positive");
    if (!(c.alpha > 0.0)) throw ConfigError("alpha", "must be positive");
    if (!(c.tau >= 0.0)) throw ConfigError("tau", "must be nonnegative");
  }

  RunSettings& s = c.settings;
  s.batch_size = r.Int("batch", 1);
  if (s.batch_size < 1) throw ConfigError("batch", "must be >= 1");
  try {
    s.metric_mode = ParseMetricMode(r.String("metric_mode", "map"));
  } catch (const Error& e) {
    throw ConfigError("metric_mode", e.what());
  }
  s.metric_alpha = r.OptionalDouble("metric_alpha");
  if (s.metric_alpha && !(*s.metric_alpha > 0.0)) {
    throw ConfigError("metric_alpha", "must be positive");
  }
  s.compute_metrics = r.Bool("compute_metrics", true);
  s.log_points = r.Int("log_points", 100);
  if (s.log_points < 2) throw ConfigError("log_points", "must be >= 2");
  s.log_stride = r.Int("log_stride", 0);
  if (s.log_stride < 0) throw ConfigError("log_stride", "must be >= 0");
  s.retain_iterates = r.Bool("retain_iterates", false);
  try {
    s.start = ParseStartPoint(r.String("start", "auto"));
  } catch (const Error& e) {
    throw ConfigError("start", e.what());
  }
  const std::string hessian = r.String("hessian_mode", "step1");
  if (hessian == "step1") {
    s.model.hessian_mode = HessianMode::kStep1;
  } else if (hessian == "empirical") {
    s.model.hessian_mode = HessianMode::kEmpiricalHessian;
  } else {
    throw ConfigError("hessian_mode", "expected step1 or empirical");
  }
  s.model.curvature_margin = r.Double("sigma_margin", 0.0);
  if (!(s.model.curvature_margin >= 0.0)) {
    throw ConfigError("sigma_margin", "must be >= 0");
  }
  s.carry_lipschitz = r.Bool("carry_lipschitz", false);
  s.apg.eta = r.Double("apg.eta", 2.0);
  if (!(s.apg.eta > 1.0)) throw ConfigError("apg.eta", "must be > 1");
  s.apg.max_iter = static_cast<int>(r.Int("apg.max_iter", 2000));
  if (s.apg.max_iter < 1) throw ConfigError("apg.max_iter", "must be >= 1");
  s.apg.tol = r.OptionalDouble("apg.tol");
  if (s.apg.tol && !(*s.apg.tol > 0.0)) throw ConfigError("apg.tol", "must be positive");
  c.out = r.String("out", "out");

  QcnpParams& q = c.qcnp;
  q.n = r.Int("qcnp.n", q.n);
  q.p = r.Int("qcnp.p", q.p);
  q.num_samples = r.Int("qcnp.N", q.num_samples);
  q.m = r.Int("qcnp.m", q.m);
  q.radius = r.Double("qcnp.R", q.radius);
  q.q_max = r.Double("qcnp.q_max", q.q_max);
  q.a_lo = r.Double("qcnp.a_lo", q.a_lo);
  q.a_hi = r.Double("qcnp.a_hi", q.a_hi);
  q.xbar_lo = r.Double("qcnp.xbar_lo", q.xbar_lo);
  q.xbar_hi = r.Double("qcnp.xbar_hi", q.xbar_hi);

  NpParams& np = c.np;
  np.d = r.Int("np.d", np.d);
  np.n0 = r.Int("np.n0", np.n0);
  np.n1 = r.Int("np.n1", np.n1);
  np.tau = r.Double("np.tau", np.tau);
  np.separation = r.Double("np.separation", np.separation);
  np.radius = r.Double("np.R", np.radius);

  FairnessParams& f = c.fairness;
  f.d = r.Int("fairness.d", f.d);
  f.size_d = r.Int("fairness.size_d", f.size_d);
  f.size_s = r.Int("fairness.size_s", f.size_s);
  f.size_min = r.Int("fairness.size_min", f.size_min);
  f.tau = r.Double("fairness.tau", f.tau);
  f.truncation = r.Double("fairness.truncation", f.truncation);
  f.radius = r.Double("fairness.R", f.radius);

  r.RejectUnknown();
  return c;
}

}  // namespace pmqs

#endif  // PMQS_CONFIG_HPP_
