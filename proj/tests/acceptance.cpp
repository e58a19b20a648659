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


// Acceptance suite: one PASS/FAIL line per criterion, exit 1 on any FAIL.
// Each criterion also has a wall-clock budget that counts toward its verdict.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "pmqs/config.hpp"
#include "pmqs/driver.hpp"
#include "pmqs/experiment.hpp"
#include "pmqs/metrics.hpp"
#include "pmqs/problems/qcnp.hpp"
#include "pmqs/qmodel.hpp"
#include "pmqs/random.hpp"
#include "pmqs/subsolver.hpp"
#include "test_support.hpp"

namespace {

using namespace pmqs;
namespace fs = std::filesystem;

struct Verdict {
  bool ok = false;
  std::string detail;
};

int failures = 0;

void Check(const std::string& name, double budget_seconds,
           const std::function<Verdict()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = body();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool in_time = secs < budget_seconds;
  const bool ok = v.ok && in_time;
  if (!ok) ++failures;
  std::printf("%s %s: %s; %.2f s (budget %.0f s%s)\n", ok ? "PASS" : "FAIL",
              name.c_str(), v.detail.c_str(), secs, budget_seconds,
              in_time ? "" : ", exceeded");
  std::fflush(stdout);
}

std::string Fmt(const char* format, double a, double b = 0.0, double c = 0.0,
                double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, a, b, c, d);
  return buf;
}

// q_i(x) <= G_i(x, xi) + 1e-10 for models built at random anchors.
Verdict Minorant() {
  double worst = -std::numeric_limits<double>::infinity();
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const QcnpProblem problem = qcnp_generate(seed);
    const Index p = problem.num_constraints();
    std::mt19937_64 rng(1000 + seed);
    for (int k = 0; k < 100; ++k) {
      const Vector xt = UniformInBox(rng, problem.domain());
      const Vector x = UniformInBox(rng, problem.domain());
      const Vector lambda = UniformVector(rng, p, 0.0, 1.0);
      const std::vector<Index> batch{UniformIndex(rng, problem.num_samples())};
      const QuadraticModel m = build_model(problem, xt, lambda, batch, 1.0, 0.1, 1.0);
      const Vector q = eval_model(m, x).second;
      Vector g;
      problem.SampleConstraints(x, batch[0], g, nullptr);
      worst = std::max(worst, (q - g).maxCoeff());
    }
  }
  return {worst <= 1e-10, Fmt("max q - G = %.3g over 2000 probes", worst)};
}

// |l+ - l|_inf <= gamma_2 sigma and |l+| <= |l| + gamma_1 sigma every step.
// Two theorem-mode variants: the constants-derived beta from the Slater
// start, and beta = 1 from the box center, where the multipliers move.
Verdict MultiplierBounds() {
  const QcnpProblem problem = qcnp_generate(1);
  const AlgoConstants c = compute_constants(problem);
  double worst_step = 0.0, worst_norm = 0.0;
  long steps = 0, moved = 0, violations = 0;
  for (const double beta : {c.beta, 1.0}) {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      const ParamSchedule s = schedule_params(2000, beta, ScheduleMode::kTheorem);
      RunSettings settings;
      settings.compute_metrics = false;
      settings.start = beta == 1.0 ? StartPoint::kCenter : StartPoint::kAuto;
      const double step_bound = c.gamma2 * s.sigma;
      const double norm_slack = c.gamma1 * s.sigma;
      run_pmqsopt(problem, s, settings, seed, [&](const IterationEvent& e) {
        const Vector& before = *e.lambda_before;
        const Vector& after = *e.lambda_after;
        const double step = (after - before).cwiseAbs().maxCoeff() / step_bound;
        const double growth = (after.norm() - before.norm()) / norm_slack;
        worst_step = std::max(worst_step, step);
        worst_norm = std::max(worst_norm, growth);
        if (step > 1.0 + 1e-12 || growth > 1.0 + 1e-12) ++violations;
        if (step > 0.0) ++moved;
        ++steps;
      });
    }
  }
  return {violations == 0 && steps == 12000 && moved > 0,
          Fmt("%g steps (%g with a multiplier change), %g violations, ",
              static_cast<double>(steps), static_cast<double>(moved),
              static_cast<double>(violations)) +
              Fmt("max |dl|/(g2 s) = %.3g, max (|l+|-|l|)/(g1 s) = %.3g", worst_step,
                  worst_norm)};
}

// solve_apg against the grid plus golden-section oracle on 2-d specs.
Verdict SubsolverOracle() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.5, 1.5);
  double worst_arg = 0.0, worst_obj = 0.0;
  for (int k = 0; k < 50; ++k) {
    const double R = u(rng);
    const QuadraticModel model = testing::RandomModel(rng, 2, k % 3, R);
    const SubproblemSpec spec(model, BoxDomain(R, 2));
    const ApgResult r = solve_apg(spec, {}, model.anchor);
    const Vector ref = testing::GridMinimize2d(
        [&](const Vector& z) { return eval_phi(spec, z); }, R);
    worst_arg = std::max(worst_arg, (r.x - ref).norm());
    worst_obj = std::max(worst_obj, std::abs(eval_phi(spec, r.x) - eval_phi(spec, ref)));
  }
  return {worst_arg <= 1e-3 && worst_obj <= 1e-6,
          Fmt("max |x - x_ref| = %.3g, max |phi - phi_ref| = %.3g", worst_arg,
              worst_obj)};
}

// 1/4 |grad env_{1/a}| <= |R_{a/2}| <= 3/2 (1 + 1/sqrt 2) |grad env_{1/a}|.
Verdict Sandwich() {
  const QcnpProblem problem = qcnp_generate(3);
  const Index p = problem.num_constraints();
  std::mt19937_64 rng(33);
  const double upper = 1.5 * (1.0 + 1.0 / std::sqrt(2.0));
  double min_ratio = std::numeric_limits<double>::infinity(), max_ratio = 0.0;
  int bad = 0;
  for (int k = 0; k < 50; ++k) {
    const Vector x = UniformInBox(rng, problem.domain());
    const Vector lambda = UniformVector(rng, p, 0.0, 1.0);
    const double alpha = 4.0 * LagrangianModulus(problem, lambda) + 1.0;
    const double env = moreau_grad(problem, x, lambda, alpha).norm();
    const double map = kkt_map(problem, x, lambda, alpha / 2.0).norm();
    const double ratio = map / env;
    min_ratio = std::min(min_ratio, ratio);
    max_ratio = std::max(max_ratio, ratio);
    if (0.25 * env > map * (1.0 + 1e-6) || map > upper * env * (1.0 + 1e-6)) ++bad;
  }
  return {bad == 0, Fmt("%g of 50 outside; |R|/|grad env| in [%.4f, %.4f], "
                        "allowed [0.25, %.4f]",
                        bad, min_ratio, max_ratio, upper)};
}

// Central differences against grad_phi and lagrangian_grad.
Verdict Gradients() {
  std::mt19937_64 rng(77);
  double worst_phi = 0.0;
  int checked = 0;
  while (checked < 50) {
    const Index n = 1 + static_cast<Index>(rng() % 6);
    const Index p = static_cast<Index>(rng() % 4);
    const SubproblemSpec spec(testing::RandomModel(rng, n, p, 2.0), BoxDomain(2.0, n));
    const Vector x = UniformVector(rng, n, -2.0, 2.0);
    const Vector args = spec.PenaltyArguments(x - spec.model().anchor);
    if (p > 0 && args.cwiseAbs().minCoeff() < 1e-3) continue;
    const Vector g = grad_phi(spec, x);
    const Vector fd = testing::FiniteDifference(
        [&](const Vector& z) { return eval_phi(spec, z); }, x, 1e-5);
    worst_phi = std::max(worst_phi, (g - fd).norm() / g.norm());
    ++checked;
  }
  const QcnpProblem problem = qcnp_generate(4);
  const Index p = problem.num_constraints();
  double worst_lag = 0.0;
  for (int k = 0; k < 50; ++k) {
    const Vector x = UniformInBox(rng, problem.domain());
    const Vector lambda = UniformVector(rng, p, 0.0, 2.0);
    const Vector g = lagrangian_grad(problem, x, lambda);
    const Vector fd = testing::FiniteDifference(
        [&](const Vector& z) { return Lagrangian(problem, z, lambda, nullptr); }, x, 1e-5);
    worst_lag = std::max(worst_lag, (g - fd).norm() / g.norm());
  }
  return {worst_phi <= 1e-6 && worst_lag <= 1e-6,
          Fmt("max relative error grad_phi %.3g, lagrangian_grad %.3g", worst_phi,
              worst_lag)};
}

// Deterministic convex QP with one active linear constraint.
Verdict ConvexSanity() {
  Matrix P(3, 3);
  P << 4, 1, 0, 1, 3, 0.5, 0, 0.5, 2.5;
  Vector q(3);
  q << -8, 3, -1;
  Matrix A(1, 3);
  A << 1, 1, 1;
  const Vector b = Vector::Constant(1, 0.5);
  const double R = 1.5;
  const testing::BoxQp problem(P, q, A, b, R);
  const auto ref = testing::SolveBoxQpActiveSet(P, q, A, b, R);
  if (!ref.found) return {false, "active-set reference not found"};
  const double norm_p = P.operatorNorm();
  const ParamSchedule s = CustomSchedule(500, 1.0, 1.0, norm_p);
  RunSettings settings;
  settings.compute_metrics = false;
  const RunRecord run = run_pmqsopt(problem, s, settings, 1);
  const double r = kkt_map(problem, run.final_x, run.final_lambda, s.alpha).norm();
  const double infeas = positive_part(A * run.final_x - b).maxCoeff();
  const double dist = (run.final_x - ref.x).norm();
  const double dual = (run.final_lambda - ref.mu).norm();
  return {r <= 1e-3 && infeas <= 1e-3 && dist <= 1e-3,
          Fmt("|R_a| = %.3g, [Ax - b]+ = %.3g, |x - x_ref| = %.3g, |l - mu_ref| = %.3g",
              r, infeas, dist, dual)};
}

// Horizon sweep on the default QCNP, averaged over 8 seeds.
Verdict RateTrend(const fs::path& scratch) {
  ConfigMap map = {
      {"family", "qcnp"},
      {"horizons", "1000,1624,2639,4287,6965,11316,18384,30000"},
      {"seeds", "1,2,3,4,5,6,7,8"},
      {"schedule", "theorem"},
      {"beta", "1"},
      {"start", "center"},
      {"out", (scratch / "rate").string()},
  };
  const RunConfig config = ParseRunConfig(map);
  const ExperimentResult result = run_experiment(config);
  if (!result.all_ok()) return {false, "a seed failed"};
  const CsvTable table = ReadCsv(result.aggregate);
  const std::size_t tc = table.Column("t", result.aggregate);
  const std::size_t kc = table.Column("r_kkt_sq", result.aggregate);
  const std::size_t cc = table.Column("r_cons", result.aggregate);
  std::vector<std::pair<double, double>> kkt, cons;
  for (const auto& row : table.rows) {
    const double t = ParseCell(row[tc], result.aggregate);
    if (t < 1e3 || t > 3e4) continue;
    kkt.emplace_back(t, ParseCell(row[kc], result.aggregate));
    cons.emplace_back(t, ParseCell(row[cc], result.aggregate));
  }
  if (kkt.size() < 2) return {false, "fewer than 2 horizons in range"};
  const PowerLawFit kfit = fit_power_law(kkt);
  const PowerLawFit cfit = fit_power_law(cons);
  bool monotone = true;
  for (std::size_t i = 1; i < cons.size(); ++i) {
    if (cons[i].second > cons[i - 1].second) monotone = false;
  }
  const double factor = cons.front().second / cons.back().second;
  const bool slope_ok = kfit.slope >= -0.6 && kfit.slope <= -0.10;
  const std::string text =
      std::to_string(kkt.size()) + " horizons; " +
      Fmt("r_kkt^2 slope %.4f (band [-0.6, -0.10]), r_cons slope %.4f, ", kfit.slope,
          cfit.slope) +
      "r_cons non-increasing " + (monotone ? "yes" : "no") +
      Fmt(", decrease factor %.3f (need >= 2)", factor);
  return {slope_ok && monotone && factor >= 2.0, text};
}

// g_i(xbar) = 0 exactly and g_i(xfeas) < 0.
Verdict QcnpFeasibility() {
  double worst_bar = 0.0, worst_feas = -std::numeric_limits<double>::infinity();
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const QcnpProblem problem = qcnp_generate(seed);
    Vector g;
    problem.Constraints(problem.data().xbar, g, nullptr);
    worst_bar = std::max(worst_bar, g.cwiseAbs().maxCoeff());
    problem.Constraints(problem.data().xfeas, g, nullptr);
    worst_feas = std::max(worst_feas, g.maxCoeff());
  }
  return {worst_bar == 0.0 && worst_feas < 0.0,
          Fmt("max |g(xbar)| = %.3g, max g(xfeas) = %.3g over 20 seeds", worst_bar,
              worst_feas)};
}

std::string ReadBytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Two identical runs give byte-identical CSVs.
Verdict Determinism(const fs::path& scratch) {
  std::vector<std::string> runs;
  for (const char* name : {"det_a", "det_b"}) {
    ConfigMap map = {
        {"family", "qcnp"}, {"T", "500"},          {"seeds", "1,2"},
        {"schedule", "theorem"}, {"beta", "1"},    {"start", "center"},
        {"out", (scratch / name).string()},
    };
    const ExperimentResult result = run_experiment(ParseRunConfig(map));
    if (!result.all_ok()) return {false, "a seed failed"};
    std::string bytes;
    for (const auto& s : result.seeds) bytes += ReadBytes(s.csv) + "|";
    bytes += ReadBytes(result.aggregate);
    runs.push_back(bytes);
  }
  const bool same = runs[0] == runs[1] && !runs[0].empty();
  return {same, Fmt("%g bytes compared, ", static_cast<double>(runs[0].size())) +
                    (same ? "identical" : "different")};
}

}  // namespace

int main() {
  const fs::path scratch = fs::temp_directory_path() / "pmqs_acceptance";
  fs::remove_all(scratch);
  fs::create_directories(scratch);

  Check("minorant", 10, Minorant);
  Check("multiplier_bounds", 120, MultiplierBounds);
  Check("subsolver_oracle", 60, SubsolverOracle);
  Check("moreau_map_sandwich", 120, Sandwich);
  Check("gradient_checks", 30, Gradients);
  Check("convex_sanity", 60, ConvexSanity);
  Check("qcnp_feasibility", 5, QcnpFeasibility);
  Check("determinism", 60, [&] { return Determinism(scratch); });
  Check("rate_trend", 1800, [&] { return RateTrend(scratch); });

  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
