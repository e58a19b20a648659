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

// Experiment harness behind the command-line tool: per-seed runs, CSV and
// manifest output, across-seed aggregation, power-law reports and metric
// re-evaluation on retained iterates.
//
// Output layout of run_experiment under `out`:
//   seed_<s>.csv            one row per logged iterate (or per horizon in a sweep)
//   aggregate.csv           across-seed means of the per-seed rows
//   manifest.json           config, constants, warnings, timings
//   iterates_seed_<s>.json  with retain_iterates
//   instance_seed_<s>.json  with retain_iterates
//
// Gradient evaluations count b (1 + p) per outer iteration with batch b.

#ifndef PMQS_EXPERIMENT_HPP_
#define PMQS_EXPERIMENT_HPP_

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pmqs/config.hpp"
#include "pmqs/core.hpp"
#include "pmqs/driver.hpp"
#include "pmqs/metrics.hpp"
#include "pmqs/problems/io.hpp"

namespace pmqs {

inline constexpr const char* kCsvHeader =
    "t,grad_evals,objective,feasibility,lambda_norm,r_kkt_sq,r_cons,"
    "r_comp_abs,inner_iters,subproblem_residual";
inline constexpr const char* kManifestSchema = "pmqs-manifest";
inline constexpr const char* kIteratesSchema = "pmqs-iterates";

// 17 significant digits.
inline std::string FormatNumber(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string FormatCell(const std::optional<double>& v) {
  return v ? FormatNumber(*v) : std::string();
}

inline std::string CsvLine(const RunRow& row) {
  std::string line = std::to_string(row.t) + "," + std::to_string(row.grad_evals) +
                     "," + FormatNumber(row.objective) + "," +
                     FormatNumber(row.feasibility) + "," +
                     FormatNumber(row.lambda_norm) + "," +
                     FormatCell(row.r_kkt_sq) + "," + FormatCell(row.r_cons) +
                     "," + FormatCell(row.r_comp_abs) + "," +
                     std::to_string(row.inner_iters) + "," +
                     FormatNumber(row.subproblem_residual);
  return line;
}

inline void WriteRunCsv(const std::string& path, const std::vector<RunRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << kCsvHeader << "\n";
  for (const RunRow& row : rows) out << CsvLine(row) << "\n";
  if (!out) throw Error("write failed for '" + path + "'");
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Column index, or an error that lists the available columns.
  std::size_t Column(const std::string& name, const std::string& source) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    std::string available;
    for (const auto& h : header) available += (available.empty() ? "" : ", ") + h;
    throw Error("column '" + name + "' not found in '" + source +
                "'; available columns: " + available);
  }
};

inline std::vector<std::string> SplitCsvLine(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  for (char ch : line) {
    if (ch == ',') {
      cells.push_back(cell);
      cell.clear();
    } else if (ch != '\r') {
      cell += ch;
    }
  }
  cells.push_back(cell);
  return cells;
}

inline CsvTable ReadCsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open CSV '" + path + "'");
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw Error("CSV '" + path + "' is empty");
  table.header = SplitCsvLine(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = SplitCsvLine(line);
    if (cells.size() != table.header.size()) {
      throw Error("CSV '" + path + "': row has " + std::to_string(cells.size()) +
                  " cells, header has " + std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(cells));
  }
  return table;
}

inline double ParseCell(const std::string& cell, const std::string& source) {
  char* end = nullptr;
  const double v = std::strtod(cell.c_str(), &end);
  if (cell.empty() || end != cell.c_str() + cell.size()) {
    throw Error("'" + source + "': not a number: '" + cell + "'");
  }
  return v;
}

// Arithmetic mean per cell across tables with identical t columns. A cell
// stays empty when any input leaves it empty.
inline CsvTable AggregateTables(const std::vector<CsvTable>& tables) {
  if (tables.empty()) throw Error("aggregate: no per-seed tables");
  CsvTable out;
  out.header = tables.front().header;
  const std::size_t rows = tables.front().rows.size();
  for (const CsvTable& t : tables) {
    if (t.header != out.header || t.rows.size() != rows) {
      throw Error("aggregate: per-seed CSVs have mismatched shapes");
    }
  }
  for (std::size_t i = 0; i < rows; ++i) {
    std::vector<std::string> cells(out.header.size());
    for (std::size_t j = 0; j < out.header.size(); ++j) {
      bool empty = false;
      double sum = 0.0;
      for (const CsvTable& t : tables) {
        const std::string& cell = t.rows[i][j];
        if (j == 0 && cell != tables.front().rows[i][0]) {
          throw Error("aggregate: logged t values differ across seeds");
        }
        if (cell.empty()) {
          empty = true;
          break;
        }
        sum += ParseCell(cell, "aggregate");
      }
      if (j == 0) {
        cells[j] = tables.front().rows[i][0];
      } else if (!empty) {
        cells[j] = FormatNumber(sum / static_cast<double>(tables.size()));
      }
    }
    out.rows.push_back(std::move(cells));
  }
  return out;
}

inline void WriteCsv(const std::string& path, const CsvTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  auto join = [](const std::vector<std::string>& cells) {
    std::string line;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) line += ',';
      line += cells[i];
    }
    return line;
  };
  out << join(table.header) << "\n";
  for (const auto& row : table.rows) out << join(row) << "\n";
}

inline std::unique_ptr<StochasticProblem> MakeProblem(const RunConfig& config,
                                                      std::uint64_t run_seed) {
  if (!config.instance.empty()) return LoadInstance(config.instance);
  const std::uint64_t seed = config.instance_seed.value_or(run_seed);
  if (config.family == "qcnp") {
    return std::make_unique<QcnpProblem>(qcnp_generate(seed, config.qcnp));
  }
  if (config.family == "neyman_pearson") {
    return std::make_unique<NeymanPearsonProblem>(np_generate(seed, config.np));
  }
  if (config.family == "fairness") {
    return std::make_unique<FairnessProblem>(
        fairness_generate(seed, config.fairness));
  }
  throw ConfigError("family", "unknown family '" + config.family + "'");
}

inline ParamSchedule MakeSchedule(const RunConfig& config, Index horizon,
                                  const AlgoConstants& constants) {
  if (config.schedule == ScheduleMode::kCustom) {
    return CustomSchedule(horizon, config.sigma, config.alpha, config.tau);
  }
  return schedule_params(horizon, config.beta.value_or(constants.beta),
                         config.schedule);
}

inline std::string SeedFile(const std::string& stem, std::uint64_t seed,
                            const std::string& ext) {
  return stem + "_seed_" + std::to_string(seed) + ext;
}

inline nlohmann::json IteratesToJson(const RunRecord& record) {
  nlohmann::json doc;
  doc["schema"] = kIteratesSchema;
  doc["version"] = 1;
  doc["seed"] = record.seed;
  doc["alpha"] = record.schedule.alpha;
  doc["metric_alpha"] = record.metric_alpha;
  nlohmann::json xs = nlohmann::json::array();
  nlohmann::json lambdas = nlohmann::json::array();
  for (std::size_t t = 0; t < record.xs.size(); ++t) {
    xs.push_back(json_detail::FromVector(record.xs[t]));
    lambdas.push_back(json_detail::FromVector(record.lambdas[t]));
  }
  doc["xs"] = std::move(xs);
  doc["lambdas"] = std::move(lambdas);
  return doc;
}

struct SeedOutcome {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  std::string csv;
  double seconds = 0.0;
  AlgoConstants constants;
  std::vector<std::string> warnings;
  std::vector<ParamSchedule> schedules;
  Index subproblem_warnings = 0;
  Index unconverged_subproblems = 0;
};

struct ExperimentResult {
  std::vector<SeedOutcome> seeds;
  std::string aggregate;
  std::string manifest;
  bool all_ok() const {
    for (const auto& s : seeds) {
      if (!s.ok) return false;
    }
    return !seeds.empty();
  }
};

// One seed: a single run, or in a sweep one run per horizon reporting the
// final logged row of each run.
inline SeedOutcome RunSeed(const RunConfig& config, std::uint64_t seed,
                           const std::filesystem::path& out) {
  SeedOutcome outcome;
  outcome.seed = seed;
  const auto start = std::chrono::steady_clock::now();
  try {
    const auto problem = MakeProblem(config, seed);
    outcome.constants =
        compute_constants(*problem, config.settings.model.curvature_margin);
    std::vector<RunRow> rows;
    for (Index horizon : config.horizons) {
      const ParamSchedule schedule = MakeSchedule(config, horizon, outcome.constants);
      outcome.schedules.push_back(schedule);
      for (auto& w : check_horizon(horizon, outcome.constants, *problem)) {
        outcome.warnings.push_back("T=" + std::to_string(horizon) + ": " + w);
      }
      RunSettings settings = config.settings;
      if (config.sweep) {
        settings.log_stride = horizon;
        settings.retain_iterates = false;
      }
      const RunRecord record = run_pmqsopt(*problem, schedule, settings, seed);
      outcome.subproblem_warnings += record.subproblem_warnings;
      outcome.unconverged_subproblems += record.unconverged_subproblems;
      if (config.sweep) {
        rows.push_back(record.rows.back());
      } else {
        rows = record.rows;
        if (settings.retain_iterates) {
          std::ofstream it(out / SeedFile("iterates", seed, ".json"));
          it << IteratesToJson(record).dump() << "\n";
          SaveInstance(*problem, (out / SeedFile("instance", seed, ".json")).string());
        }
      }
    }
    outcome.csv = (out / ("seed_" + std::to_string(seed) + ".csv")).string();
    WriteRunCsv(outcome.csv, rows);
    outcome.ok = true;
  } catch (const std::exception& e) {
    outcome.error = e.what();
  }
  outcome.seconds = std::chrono::duration<double>(
                        std::chrono::steady_clock::now() - start)
                        .count();
  return outcome;
}

inline nlohmann::json ManifestJson(const RunConfig& config,
                                   const ExperimentResult& result,
                                   double total_seconds) {
  nlohmann::json doc;
  doc["schema"] = kManifestSchema;
  doc["version"] = 1;
  nlohmann::json cfg = nlohmann::json::object();
  for (const auto& [k, v] : config.source) cfg[k] = v;
  doc["config"] = cfg;
  doc["csv_header"] = kCsvHeader;
  doc["grad_evals"] = "batch * (1 + p) per outer iteration";
  doc["rows"] = config.sweep ? "one row per horizon; r_* are averages over that run"
                             : "logged iterates of a single run";
  doc["averaging"] =
      config.settings.metric_mode == MetricMode::kMap || !config.settings.compute_metrics
          ? "every iterate"
          : "logged iterates only";
  doc["metric_mode"] = ToString(config.settings.metric_mode);
  nlohmann::json seeds = nlohmann::json::array();
  for (const SeedOutcome& s : result.seeds) {
    nlohmann::json entry;
    entry["seed"] = s.seed;
    entry["status"] = s.ok ? "ok" : "failed";
    if (!s.ok) entry["error"] = s.error;
    if (s.ok) entry["csv"] = std::filesystem::path(s.csv).filename().string();
    entry["wall_seconds"] = s.seconds;
    entry["constants"] = {{"gamma1", s.constants.gamma1},
                          {"gamma2", s.constants.gamma2},
                          {"beta", s.constants.beta},
                          {"kappa_sigma", s.constants.kappa_sigma}};
    nlohmann::json schedules = nlohmann::json::array();
    for (const ParamSchedule& p : s.schedules) {
      schedules.push_back({{"T", p.horizon}, {"mode", ToString(p.mode)},
                           {"beta", p.beta}, {"sigma", p.sigma},
                           {"alpha", p.alpha}, {"tau", p.tau}});
    }
    entry["schedules"] = schedules;
    entry["warnings"] = s.warnings;
    entry["subproblem_warnings"] = s.subproblem_warnings;
    entry["unconverged_subproblems"] = s.unconverged_subproblems;
    seeds.push_back(entry);
  }
  doc["seeds"] = seeds;
  if (!result.aggregate.empty()) {
    doc["aggregate"] = std::filesystem::path(result.aggregate).filename().string();
  }
  doc["wall_seconds"] = total_seconds;
  return doc;
}

inline ExperimentResult run_experiment(const RunConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  const std::filesystem::path out(config.out);
  std::error_code ec;
  std::filesystem::create_directories(out, ec);
  if (ec) throw Error("cannot create output directory '" + config.out + "'");
  ExperimentResult result;
  std::vector<CsvTable> tables;
  for (std::uint64_t seed : config.seeds) {
    result.seeds.push_back(RunSeed(config, seed, out));
    if (result.seeds.back().ok) tables.push_back(ReadCsv(result.seeds.back().csv));
  }
  if (!tables.empty()) {
    result.aggregate = (out / "aggregate.csv").string();
    WriteCsv(result.aggregate, AggregateTables(tables));
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  result.manifest = (out / "manifest.json").string();
  std::ofstream manifest(result.manifest);
  if (!manifest) throw Error("cannot write '" + result.manifest + "'");
  manifest << ManifestJson(config, result, seconds).dump(2) << "\n";
  return result;
}

struct SlopeReport {
  PowerLawFit fit;
  std::vector<std::pair<double, double>> points;  // (T, mean value) used
};

// Fits log(value) = intercept + slope log(T) over rows with T in [t_min,
// t_max]; several files are averaged per T first. Writes T, value, the fitted
// curve and a T^{-1/4} reference anchored at the first point to `out_csv`.
inline SlopeReport slope_report(const std::vector<std::string>& paths,
                                const std::string& column, double t_min,
                                double t_max, const std::string& out_csv = "") {
  if (paths.empty()) throw Error("slope: no CSV files given");
  std::map<double, std::pair<double, int>> by_t;
  for (const std::string& path : paths) {
    const CsvTable table = ReadCsv(path);
    const std::size_t tc = table.Column("t", path);
    const std::size_t vc = table.Column(column, path);
    for (const auto& row : table.rows) {
      if (row[vc].empty()) continue;
      const double t = ParseCell(row[tc], path);
      if (t < t_min || t > t_max) continue;
      auto& slot = by_t[t];
      slot.first += ParseCell(row[vc], path);
      ++slot.second;
    }
  }
  SlopeReport report;
  for (const auto& [t, acc] : by_t) {
    report.points.emplace_back(t, acc.first / acc.second);
  }
  if (report.points.empty()) {
    throw Error("slope: no rows of column '" + column + "' in the selected T range");
  }
  report.fit = fit_power_law(report.points);
  if (!out_csv.empty()) {
    std::ofstream out(out_csv, std::ios::binary);
    if (!out) throw Error("cannot open '" + out_csv + "' for writing");
    out << "t,value,fit,reference\n";
    const auto [t0, v0] = report.points.front();
    for (const auto& [t, v] : report.points) {
      out << FormatNumber(t) << "," << FormatNumber(v) << ","
          << FormatNumber(std::exp(report.fit.intercept) * std::pow(t, report.fit.slope))
          << "," << FormatNumber(v0 * std::pow(t / t0, -0.25)) << "\n";
    }
  }
  return report;
}

struct RetainedIterates {
  std::vector<Vector> xs;
  std::vector<Vector> lambdas;
  double alpha = 0.0;
};

inline RetainedIterates LoadIterates(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open iterates file '" + path + "'");
  try {
    nlohmann::json doc;
    in >> doc;
    if (doc.at("schema").get<std::string>() != kIteratesSchema) {
      throw Error("'" + path + "' is not an iterates file");
    }
    RetainedIterates it;
    it.alpha = doc.at("alpha").get<double>();
    for (const auto& x : doc.at("xs")) it.xs.push_back(json_detail::ToVector(x));
    for (const auto& l : doc.at("lambdas")) {
      it.lambdas.push_back(json_detail::ToVector(l));
    }
    if (it.xs.size() != it.lambdas.size()) {
      throw Error("'" + path + "': xs and lambdas differ in length");
    }
    return it;
  } catch (const nlohmann::json::exception& e) {
    throw Error("'" + path + "': " + e.what());
  }
}

// Residuals at x^1..x^T (the last retained iterate x^{T+1} is excluded) and
// their running averages, as CSV t,kkt_sq,cons,comp,r_kkt_sq,r_cons,r_comp_abs.
inline std::vector<ResidualSample> evaluate_retained(
    const StochasticProblem& problem, const RetainedIterates& iterates,
    double alpha_met, MetricMode mode, const std::string& out_csv) {
  std::vector<ResidualSample> samples;
  const std::size_t count = iterates.xs.empty() ? 0 : iterates.xs.size() - 1;
  for (std::size_t t = 0; t < count; ++t) {
    ResidualSample r = residual_row(problem, iterates.xs[t], iterates.lambdas[t],
                                    alpha_met, mode);
    r.t = static_cast<Index>(t + 1);
    samples.push_back(r);
  }
  if (!out_csv.empty()) {
    std::ofstream out(out_csv, std::ios::binary);
    if (!out) throw Error("cannot open '" + out_csv + "' for writing");
    out << "t,kkt_sq,cons,comp,r_kkt_sq,r_cons,r_comp_abs\n";
    const auto avg = running_averages(samples);
    for (std::size_t i = 0; i < samples.size(); ++i) {
      out << samples[i].t << "," << FormatNumber(samples[i].kkt_sq) << ","
          << FormatNumber(samples[i].cons) << "," << FormatNumber(samples[i].comp)
          << "," << FormatNumber(avg[i].r_kkt_sq) << ","
          << FormatNumber(avg[i].r_cons) << "," << FormatNumber(avg[i].r_comp_abs)
          << "\n";
    }
  }
  return samples;
}

}  // namespace pmqs

#endif  // PMQS_EXPERIMENT_HPP_
