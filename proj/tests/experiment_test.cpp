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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "pmqs/config.hpp"
#include "pmqs/experiment.hpp"

namespace pmqs {
namespace {

namespace fs = std::filesystem;

std::string Slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path TempDir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("pmqs_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

ConfigMap SmallRun(const fs::path& out) {
  return ParseConfigText(
      "family = qcnp\n"
      "qcnp.n = 6\nqcnp.p = 3\nqcnp.N = 8\n"
      "T = 60\nseeds = 1, 2\nbeta = 1\nlog_points = 8\n"
      "out = " + out.string() + "\n");
}

TEST(Config, ParsesCommentsAndOverrides) {
  ConfigMap c = ParseConfigText("# comment\nfamily = qcnp  # trailing\n\nT=10\n");
  EXPECT_EQ(c.at("family"), "qcnp");
  EXPECT_EQ(c.at("T"), "10");
  ApplyOverride(c, "T = 20");
  EXPECT_EQ(c.at("T"), "20");
  EXPECT_THROW(ApplyOverride(c, "novalue"), ConfigError);
}

TEST(Config, MissingRequiredFieldNamesIt) {
  auto field_of = [](const std::string& text) {
    try {
      ParseRunConfig(ParseConfigText(text));
    } catch (const ConfigError& e) {
      return e.field();
    }
    return std::string("<none>");
  };
  EXPECT_EQ(field_of("T = 5\nseeds = 1\n"), "family");
  EXPECT_EQ(field_of("family = qcnp\nseeds = 1\n"), "T");
  EXPECT_EQ(field_of("family = qcnp\nT = 5\n"), "seeds");
  EXPECT_EQ(field_of("family = qcnp\nT = 5\nseeds = 1\nschedule = custom\n"), "sigma");
  EXPECT_EQ(field_of("family = qcnp\nT = 0\nseeds = 1\n"), "T");
  EXPECT_EQ(field_of("family = qcnp\nT = 5\nseeds = 1\nbatch = 0\n"), "batch");
  EXPECT_EQ(field_of("family = qcnp\nT = 5\nseeds = 1\ncolour = red\n"), "colour");
  EXPECT_EQ(field_of("family = qcnp\nT = x\nseeds = 1\n"), "T");
  EXPECT_EQ(field_of("family = qcnp\nT = 5\nseeds = 1\n"), "<none>");
}

TEST(Config, Defaults) {
  const RunConfig c = ParseRunConfig(ParseConfigText("family = qcnp\nT = 5\nseeds = 3,4\n"));
  EXPECT_EQ(c.horizons, std::vector<Index>{5});
  EXPECT_FALSE(c.sweep);
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{3, 4}));
  EXPECT_EQ(c.schedule, ScheduleMode::kTheorem);
  EXPECT_FALSE(c.beta.has_value());
  EXPECT_EQ(c.settings.batch_size, 1);
  EXPECT_EQ(c.settings.metric_mode, MetricMode::kMap);
  EXPECT_EQ(c.qcnp.n, 50);
}

TEST(Csv, HeaderAndEmptyCells) {
  const fs::path dir = TempDir("csv");
  RunRow row;
  row.t = 3;
  row.grad_evals = 12;
  row.objective = 0.1;
  row.r_cons = 2.0;
  WriteRunCsv((dir / "a.csv").string(), {row});
  const std::string text = Slurp(dir / "a.csv");
  EXPECT_EQ(text.substr(0, text.find('\n')),
            "t,grad_evals,objective,feasibility,lambda_norm,r_kkt_sq,r_cons,r_comp_abs,"
            "inner_iters,subproblem_residual");
  EXPECT_NE(text.find("3,12,0.10000000000000001,0,0,,2,,0,0"), std::string::npos);
}

TEST(RunExperiment, WritesPerSeedAggregateAndManifest) {
  const fs::path dir = TempDir("run");
  const RunConfig config = ParseRunConfig(SmallRun(dir));
  const ExperimentResult result = run_experiment(config);
  ASSERT_TRUE(result.all_ok());
  ASSERT_TRUE(fs::exists(dir / "seed_1.csv"));
  ASSERT_TRUE(fs::exists(dir / "seed_2.csv"));
  ASSERT_TRUE(fs::exists(dir / "aggregate.csv"));
  const auto manifest = nlohmann::json::parse(Slurp(dir / "manifest.json"));
  EXPECT_EQ(manifest.at("seeds").size(), 2u);
  for (const char* key : {"gamma1", "gamma2", "beta", "kappa_sigma"}) {
    EXPECT_TRUE(manifest.at("seeds")[0].at("constants").contains(key));
  }
  EXPECT_TRUE(manifest.at("seeds")[0].contains("warnings"));
  EXPECT_TRUE(manifest.contains("wall_seconds"));

  // Aggregate equals the cellwise mean, recomputed independently.
  const CsvTable a = ReadCsv((dir / "seed_1.csv").string());
  const CsvTable b = ReadCsv((dir / "seed_2.csv").string());
  const CsvTable agg = ReadCsv((dir / "aggregate.csv").string());
  ASSERT_EQ(agg.rows.size(), a.rows.size());
  for (std::size_t i = 0; i < agg.rows.size(); ++i) {
    EXPECT_EQ(agg.rows[i][0], a.rows[i][0]);
    for (std::size_t j = 1; j < agg.header.size(); ++j) {
      const double mean = 0.5 * (std::stod(a.rows[i][j]) + std::stod(b.rows[i][j]));
      EXPECT_NEAR(std::stod(agg.rows[i][j]), mean, 1e-15 * std::max(1.0, std::abs(mean)));
    }
  }
}

TEST(RunExperiment, ManifestRoundTripReproducesCsvs) {
  const fs::path first = TempDir("manifest_a");
  const fs::path second = TempDir("manifest_b");
  run_experiment(ParseRunConfig(SmallRun(first)));
  ConfigMap again = LoadConfigFile((first / "manifest.json").string());
  again["out"] = second.string();
  run_experiment(ParseRunConfig(again));
  for (const char* f : {"seed_1.csv", "seed_2.csv", "aggregate.csv"}) {
    EXPECT_EQ(Slurp(first / f), Slurp(second / f)) << f;
  }
}

TEST(RunExperiment, SweepWritesOneRowPerHorizon) {
  const fs::path dir = TempDir("sweep");
  ConfigMap c = SmallRun(dir);
  c.erase("T");
  c["horizons"] = "10, 20, 40";
  const ExperimentResult result = run_experiment(ParseRunConfig(c));
  ASSERT_TRUE(result.all_ok());
  const CsvTable t = ReadCsv((dir / "seed_1.csv").string());
  ASSERT_EQ(t.rows.size(), 3u);
  EXPECT_EQ(t.rows[0][0], "10");
  EXPECT_EQ(t.rows[2][0], "40");
}

TEST(RunExperiment, RetainedIteratesFeedMetrics) {
  const fs::path dir = TempDir("retain");
  ConfigMap c = SmallRun(dir);
  c["retain_iterates"] = "true";
  c["seeds"] = "5";
  c["log_stride"] = "1";
  run_experiment(ParseRunConfig(c));
  const auto problem = LoadInstance((dir / "instance_seed_5.json").string());
  const RetainedIterates it = LoadIterates((dir / "iterates_seed_5.json").string());
  EXPECT_EQ(it.xs.size(), 61u);
  const auto samples = evaluate_retained(*problem, it, it.alpha, MetricMode::kMap,
                                         (dir / "metrics.csv").string());
  ASSERT_EQ(samples.size(), 60u);
  // Prefix averages agree with the run's own CSV.
  const CsvTable run = ReadCsv((dir / "seed_5.csv").string());
  const CsvTable metrics = ReadCsv((dir / "metrics.csv").string());
  const std::size_t rc = run.Column("r_kkt_sq", "run");
  const std::size_t mc = metrics.Column("r_kkt_sq", "metrics");
  for (std::size_t i = 0; i < run.rows.size(); ++i) {
    const double a = std::stod(run.rows[i][rc]);
    const double b = std::stod(metrics.rows[i][mc]);
    EXPECT_NEAR(a, b, 1e-12 * std::max(1.0, std::abs(a)));
  }
}

TEST(RunExperiment, FailedSeedIsRecorded) {
  const fs::path dir = TempDir("failed");
  ConfigMap c = SmallRun(dir);
  c.erase("family");
  c["instance"] = (dir / "missing.json").string();
  const ExperimentResult result = run_experiment(ParseRunConfig(c));
  EXPECT_FALSE(result.all_ok());
  const auto manifest = nlohmann::json::parse(Slurp(dir / "manifest.json"));
  EXPECT_EQ(manifest.at("seeds")[0].at("status"), "failed");
}

void WriteSynthetic(const fs::path& path, double exponent) {
  std::ofstream out(path);
  out << kCsvHeader << "\n";
  for (int t : {10, 30, 100, 300, 1000, 3000}) {
    out << t << ",0,0,0,0," << FormatNumber(std::pow(t, exponent)) << ",,,0,0\n";
  }
}

TEST(SlopeReport, ExactPowerLaw) {
  const fs::path dir = TempDir("slope");
  WriteSynthetic(dir / "a.csv", -0.25);
  const SlopeReport r = slope_report({(dir / "a.csv").string()}, "r_kkt_sq", 0.0, 1e9,
                                     (dir / "fit.csv").string());
  EXPECT_NEAR(r.fit.slope, -0.25, 1e-12);
  const CsvTable fit = ReadCsv((dir / "fit.csv").string());
  EXPECT_EQ(fit.header, (std::vector<std::string>{"t", "value", "fit", "reference"}));
  for (const auto& row : fit.rows) {
    EXPECT_NEAR(std::stod(row[3]), std::stod(row[1]), 1e-12);
  }
}

TEST(SlopeReport, MissingColumnListsAvailable) {
  const fs::path dir = TempDir("slope_missing");
  WriteSynthetic(dir / "a.csv", -0.25);
  try {
    slope_report({(dir / "a.csv").string()}, "r_bogus", 0.0, 1e9);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("r_bogus"), std::string::npos);
    EXPECT_NE(msg.find("r_kkt_sq"), std::string::npos);
  }
  EXPECT_THROW(slope_report({(dir / "a.csv").string()}, "r_kkt_sq", 1e6, 1e7), Error);
}

TEST(SlopeReport, RangeRestrictionMatchesRegression) {
  const fs::path dir = TempDir("slope_range");
  {
    std::ofstream out(dir / "a.csv");
    out << kCsvHeader << "\n";
    const std::vector<std::pair<int, double>> rows{
        {10, 1.0}, {30, 0.9}, {100, 0.5}, {300, 0.45}, {1000, 0.2}, {3000, 0.19}};
    for (const auto& [t, v] : rows) out << t << ",0,0,0,0," << v << ",,,0,0\n";
  }
  // Independent least squares on the rows with 30 <= t <= 1000.
  const std::vector<std::pair<double, double>> sel{{30, 0.9}, {100, 0.5}, {300, 0.45},
                                                   {1000, 0.2}};
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& [t, v] : sel) {
    sx += std::log(t);
    sy += std::log(v);
    sxx += std::log(t) * std::log(t);
    sxy += std::log(t) * std::log(v);
  }
  const double n = static_cast<double>(sel.size());
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const SlopeReport full = slope_report({(dir / "a.csv").string()}, "r_kkt_sq", 0, 1e9);
  const SlopeReport part = slope_report({(dir / "a.csv").string()}, "r_kkt_sq", 30, 1000);
  EXPECT_EQ(part.points.size(), 4u);
  EXPECT_NEAR(part.fit.slope, slope, 1e-10);
  EXPECT_GT(std::abs(part.fit.slope - full.fit.slope), 1e-3);
}

}  // namespace
}  // namespace pmqs
