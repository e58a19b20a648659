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

// pmqs command-line tool.
//
//   pmqs generate --config F | --set family=qcnp  --seed S --out inst.json
//   pmqs run      --config F [--set key=value ...] [--seed S] [--out DIR]
//   pmqs slope    --csv A.csv [--csv B.csv] --column r_kkt_sq [--tmin --tmax]
//                 [--out fit.csv]
//   pmqs metrics  --instance inst.json --iterates it.json [--mode map|moreau]
//                 [--alpha A] --out metrics.csv
//
// Exit codes: 0 success, 1 runtime failure, 2 configuration error.

#include <cstdint>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pmqs/config.hpp"
#include "pmqs/experiment.hpp"
#include "pmqs/problems/io.hpp"

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::vector<std::string> sets;
};

void AddCommon(CLI::App* app, Common& common) {
  app->add_option("--config", common.config,
                  "flat key=value config file or a run manifest");
  app->add_option("--seed", common.seed, "seed (replaces the seeds list)");
  app->add_option("--out", common.out, "output path");
  app->add_option("--set", common.sets, "key=value override, repeatable");
}

pmqs::ConfigMap BuildConfig(const Common& common) {
  pmqs::ConfigMap config;
  if (!common.config.empty()) config = pmqs::LoadConfigFile(common.config);
  for (const auto& s : common.sets) pmqs::ApplyOverride(config, s);
  if (common.seed) config["seeds"] = std::to_string(*common.seed);
  if (!common.out.empty()) config["out"] = common.out;
  return config;
}

int Generate(const Common& common) {
  pmqs::ConfigMap config = BuildConfig(common);
  // Only the generator keys matter here.
  if (!config.count("T") && !config.count("horizons")) config["T"] = "1";
  if (!config.count("seeds")) throw pmqs::ConfigError("seed", "required field missing");
  if (common.out.empty()) throw pmqs::ConfigError("out", "required field missing");
  const pmqs::RunConfig run = pmqs::ParseRunConfig(config);
  const auto problem = pmqs::MakeProblem(run, run.seeds.front());
  pmqs::SaveInstance(*problem, common.out);
  std::cout << "wrote " << common.out << " (" << problem->info().family
            << ", n=" << problem->dimension()
            << ", p=" << problem->num_constraints() << ")\n";
  return 0;
}

int Run(const Common& common) {
  const pmqs::RunConfig config = pmqs::ParseRunConfig(BuildConfig(common));
  const pmqs::ExperimentResult result = pmqs::run_experiment(config);
  for (const auto& s : result.seeds) {
    if (s.ok) {
      std::cout << "seed " << s.seed << ": " << s.csv << " (" << s.seconds
                << " s)\n";
    } else {
      std::cerr << "seed " << s.seed << " failed: " << s.error << "\n";
    }
    for (const auto& w : s.warnings) std::cerr << "seed " << s.seed << " warning: " << w << "\n";
    if (s.subproblem_warnings > 0) {
      std::cerr << "seed " << s.seed << ": " << s.subproblem_warnings
                << " subproblems ended with residual > "
                << pmqs::kSubproblemWarnResidual << "\n";
    }
  }
  if (!result.aggregate.empty()) std::cout << "aggregate: " << result.aggregate << "\n";
  std::cout << "manifest: " << result.manifest << "\n";
  return result.all_ok() ? 0 : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic proximal method of multipliers with quadratic models"};
  app.require_subcommand(1);

  Common gen_common, run_common, slope_common, metrics_common;
  CLI::App* gen = app.add_subcommand("generate", "write a problem instance as JSON");
  AddCommon(gen, gen_common);

  CLI::App* run = app.add_subcommand("run", "run the method over seeds");
  AddCommon(run, run_common);

  CLI::App* slope = app.add_subcommand("slope", "power-law fit of a CSV column");
  AddCommon(slope, slope_common);
  std::vector<std::string> csvs;
  std::string column = "r_kkt_sq";
  double t_min = 0.0;
  double t_max = std::numeric_limits<double>::infinity();
  slope->add_option("--csv", csvs, "input CSV, repeatable")->required();
  slope->add_option("--column", column, "column to fit")->capture_default_str();
  slope->add_option("--tmin", t_min, "smallest T used")->capture_default_str();
  slope->add_option("--tmax", t_max, "largest T used");

  CLI::App* metrics =
      app.add_subcommand("metrics", "re-evaluate residuals on retained iterates");
  AddCommon(metrics, metrics_common);
  std::string instance, iterates, mode = "map";
  std::optional<double> alpha_met;
  metrics->add_option("--instance", instance, "instance JSON")->required();
  metrics->add_option("--iterates", iterates, "iterates JSON")->required();
  metrics->add_option("--mode", mode, "map or moreau")->capture_default_str();
  metrics->add_option("--alpha", alpha_met, "metric alpha (default: run alpha)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (gen->parsed()) return Generate(gen_common);
    if (run->parsed()) return Run(run_common);
    if (slope->parsed()) {
      const auto report =
          pmqs::slope_report(csvs, column, t_min, t_max, slope_common.out);
      std::cout << "column=" << column << " points=" << report.points.size()
                << " slope=" << pmqs::FormatNumber(report.fit.slope)
                << " intercept=" << pmqs::FormatNumber(report.fit.intercept) << "\n";
      if (report.fit.dropped > 0) {
        std::cout << "dropped " << report.fit.dropped << " nonpositive points\n";
      }
      return 0;
    }
    if (metrics->parsed()) {
      pmqs::MetricMode parsed_mode;
      try {
        parsed_mode = pmqs::ParseMetricMode(mode);
      } catch (const pmqs::Error& e) {
        throw pmqs::ConfigError("mode", e.what());
      }
      const auto problem = pmqs::LoadInstance(instance);
      const auto it = pmqs::LoadIterates(iterates);
      const auto samples = pmqs::evaluate_retained(
          *problem, it, alpha_met.value_or(it.alpha), parsed_mode,
          metrics_common.out);
      std::cout << "evaluated " << samples.size() << " iterates\n";
      return 0;
    }
  } catch (const pmqs::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitRuntime;
}
