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

// The outer proximal method of multipliers. Each iteration t = 1..T
//
//   1. draws a batch xi_t and builds the quadratic models at x^t,
//   2. sets x^{t+1} = argmin_{x in X0} L_sigma(x, lambda^t) + alpha/2 |x - x^t|^2,
//   3. sets lambda^{t+1} = [lambda^t + sigma q(x^{t+1})]_+,
//
// starting from lambda^1 = 0. The output is (x^R, lambda^R) for R uniform on
// {1..T}.

#ifndef PMQS_DRIVER_HPP_
#define PMQS_DRIVER_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "pmqs/core.hpp"
#include "pmqs/metrics.hpp"
#include "pmqs/qmodel.hpp"
#include "pmqs/random.hpp"
#include "pmqs/subsolver.hpp"

namespace pmqs {

enum class ScheduleMode { kTheorem, kPractical, kCustom };

inline const char* ToString(ScheduleMode mode) {
  switch (mode) {
    case ScheduleMode::kTheorem:
      return "theorem";
    case ScheduleMode::kPractical:
      return "practical";
    case ScheduleMode::kCustom:
      return "custom";
  }
  return "?";
}

inline ScheduleMode ParseScheduleMode(const std::string& s) {
  if (s == "theorem") return ScheduleMode::kTheorem;
  if (s == "practical") return ScheduleMode::kPractical;
  if (s == "custom") return ScheduleMode::kCustom;
  throw Error("unknown schedule mode '" + s +
              "' (expected theorem, practical or custom)");
}

struct ParamSchedule {
  Index horizon = 1;
  double beta = 1.0;
  double sigma = 1.0;
  double alpha = 1.0;
  double tau = 1.0;
  ScheduleMode mode = ScheduleMode::kTheorem;
};

// theorem:   sigma = T^{-3/4}, alpha = beta T^{1/4}, tau = T^{1/2}
// practical: sigma = T^{-1/2}, alpha = beta T^{1/2}, tau = T^{1/2}
// Custom schedules are built with CustomSchedule.
inline ParamSchedule schedule_params(Index horizon, double beta,
                                     ScheduleMode mode) {
  if (horizon < 1) throw Error("schedule_params: T must be >= 1");
  if (!(beta > 0.0)) throw Error("schedule_params: beta must be positive");
  const double t = static_cast<double>(horizon);
  ParamSchedule s;
  s.horizon = horizon;
  s.beta = beta;
  s.mode = mode;
  switch (mode) {
    case ScheduleMode::kTheorem:
      s.sigma = std::pow(t, -0.75);
      s.alpha = beta * std::pow(t, 0.25);
      s.tau = std::sqrt(t);
      break;
    case ScheduleMode::kPractical:
      s.sigma = 1.0 / std::sqrt(t);
      s.alpha = beta * std::sqrt(t);
      s.tau = std::sqrt(t);
      break;
    case ScheduleMode::kCustom:
      throw Error("schedule_params: custom schedules need explicit "
                  "sigma, alpha and tau (use CustomSchedule)");
  }
  return s;
}

inline ParamSchedule CustomSchedule(Index horizon, double sigma, double alpha,
                                    double tau) {
  if (horizon < 1) throw Error("CustomSchedule: T must be >= 1");
  if (!(sigma > 0.0) || !(alpha > 0.0) || !(tau > 0.0)) {
    throw Error("CustomSchedule: sigma, alpha and tau must be positive");
  }
  ParamSchedule s;
  s.horizon = horizon;
  s.beta = 1.0;
  s.sigma = sigma;
  s.alpha = alpha;
  s.tau = tau;
  s.mode = ScheduleMode::kCustom;
  return s;
}

// Diagnostics for the horizon conditions
//   T > beta^2, T > p (kappa_g + kappa_S D0 / 2)^2 / beta, T > (kappa_S gamma_2)^4
// and, with Slater data, sqrt(p) kappa_S <= eps_0. Never fatal.
inline std::vector<std::string> check_horizon(Index horizon,
                                              const AlgoConstants& constants,
                                              const StochasticProblem& problem) {
  std::vector<std::string> warnings;
  const double t = static_cast<double>(horizon);
  const double p = static_cast<double>(problem.num_constraints());
  const double d0 = problem.domain().diameter();
  const double kappa_g =
      problem.info().bounds ? problem.info().bounds->kappa_g : 0.0;
  auto fmt = [](double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
  };

  const double beta_sq = constants.beta * constants.beta;
  if (!(t > beta_sq)) {
    warnings.push_back("horizon T=" + fmt(t) + " does not exceed beta^2=" +
                       fmt(beta_sq));
  }
  const double lin = kappa_g + 0.5 * constants.kappa_sigma * d0;
  const double growth = p * lin * lin / constants.beta;
  if (!(t > growth)) {
    warnings.push_back("horizon T=" + fmt(t) +
                       " does not exceed p (kappa_g + kappa_sigma D0/2)^2 / "
                       "beta=" + fmt(growth));
  }
  const double curv = std::pow(constants.kappa_sigma * constants.gamma2, 4.0);
  if (!(t > curv)) {
    warnings.push_back("horizon T=" + fmt(t) +
                       " does not exceed (kappa_sigma gamma_2)^4=" + fmt(curv));
  }
  if (const auto& slater = problem.info().slater) {
    const double lhs = std::sqrt(p) * constants.kappa_sigma;
    if (!(lhs <= slater->margin)) {
      warnings.push_back("sqrt(p) kappa_sigma=" + fmt(lhs) +
                         " exceeds the Slater margin eps_0=" +
                         fmt(slater->margin));
    }
  }
  return warnings;
}

inline Vector dual_update(const Vector& lambda, double sigma,
                          const Vector& q_values) {
  if (lambda.size() != q_values.size()) {
    throw Error("dual_update: multiplier and model value sizes differ");
  }
  return positive_part(lambda + sigma * q_values);
}

// Geometrically spaced iteration indices in [1, T], always including 1 and T.
inline std::vector<Index> GeometricGrid(Index horizon, Index points) {
  std::set<Index> grid{1, horizon};
  if (points > 1 && horizon > 1) {
    const double ratio = std::log(static_cast<double>(horizon)) /
                         static_cast<double>(points - 1);
    for (Index k = 0; k < points; ++k) {
      grid.insert(std::clamp<Index>(
          static_cast<Index>(std::llround(std::exp(ratio * k))), 1, horizon));
    }
  }
  return {grid.begin(), grid.end()};
}

enum class StartPoint { kAuto, kSlater, kCenter };

inline StartPoint ParseStartPoint(const std::string& s) {
  if (s == "auto") return StartPoint::kAuto;
  if (s == "slater") return StartPoint::kSlater;
  if (s == "center") return StartPoint::kCenter;
  throw Error("unknown start point '" + s +
              "' (expected auto, slater or center)");
}

inline const char* ToString(StartPoint s) {
  switch (s) {
    case StartPoint::kAuto:
      return "auto";
    case StartPoint::kSlater:
      return "slater";
    case StartPoint::kCenter:
      return "center";
  }
  return "?";
}

struct RunSettings {
  Index batch_size = 1;
  ModelOptions model;
  ApgSettings apg;
  // Carry the final Lipschitz estimate of one subproblem into the next
  // instead of resetting it to `apg.initial_lipschitz`.
  bool carry_lipschitz = false;
  // x^1. kAuto uses the Slater point when the problem has one.
  StartPoint start = StartPoint::kAuto;
  std::optional<Vector> x1;
  // Rows are logged on a geometric grid of this many points, or every
  // `log_stride` iterations when that is positive.
  Index log_points = 100;
  Index log_stride = 0;
  bool compute_metrics = true;
  MetricMode metric_mode = MetricMode::kMap;
  // Defaults to the schedule's alpha.
  std::optional<double> metric_alpha;
  // Keep every (x^t, lambda^t), t = 1..T+1.
  bool retain_iterates = false;
};

// Residual of the subproblem counted as a run-level warning.
inline constexpr double kSubproblemWarnResidual = 1e-3;

struct RunRow {
  Index t = 0;
  Index grad_evals = 0;
  double objective = 0.0;
  double feasibility = 0.0;
  double lambda_norm = 0.0;
  std::optional<double> r_kkt_sq;
  std::optional<double> r_cons;
  std::optional<double> r_comp_abs;
  int inner_iters = 0;
  double subproblem_residual = 0.0;
};

struct RunRecord {
  ParamSchedule schedule;
  std::uint64_t seed = 0;
  Index batch_size = 1;
  double metric_alpha = 0.0;
  MetricMode metric_mode = MetricMode::kMap;
  // True when the residual averages use every iterate; false when they are
  // averages over the logged subsequence only.
  bool averages_every_iterate = true;
  std::vector<RunRow> rows;
  std::vector<ResidualSample> residuals;
  // x^1..x^{T+1} and lambda^1..lambda^{T+1} when retained.
  std::vector<Vector> xs;
  std::vector<Vector> lambdas;
  Vector final_x;
  Vector final_lambda;
  Index total_grad_evals = 0;
  Index subproblem_warnings = 0;
  Index unconverged_subproblems = 0;
};

// Per-iteration hook for diagnostics and tests.
struct IterationEvent {
  Index t = 0;
  const SubproblemSpec* spec = nullptr;
  const ApgResult* solve = nullptr;
  const Vector* x_before = nullptr;
  const Vector* lambda_before = nullptr;
  const Vector* lambda_after = nullptr;
};
using IterationObserver = std::function<void(const IterationEvent&)>;

inline Vector StartingPoint(const StochasticProblem& problem,
                            const RunSettings& settings) {
  if (settings.x1) {
    RequireSize(*settings.x1, problem.dimension(), "run_pmqsopt x1");
    if (!problem.domain().Contains(*settings.x1)) {
      throw Error("run_pmqsopt: x1 lies outside the box");
    }
    return *settings.x1;
  }
  const auto& slater = problem.info().slater;
  switch (settings.start) {
    case StartPoint::kSlater:
      if (!slater) throw Error("run_pmqsopt: problem has no Slater point");
      return slater->point;
    case StartPoint::kAuto:
      if (slater) return slater->point;
      [[fallthrough]];
    case StartPoint::kCenter:
      break;
  }
  return Vector::Zero(problem.dimension());
}

inline RunRecord run_pmqsopt(const StochasticProblem& problem,
                             const ParamSchedule& schedule,
                             const RunSettings& settings, std::uint64_t seed,
                             const IterationObserver& observer = {}) {
  if (settings.batch_size < 1) throw Error("run_pmqsopt: batch must be >= 1");
  if (schedule.horizon < 1) throw Error("run_pmqsopt: T must be >= 1");
  const Index horizon = schedule.horizon;
  const Index p = problem.num_constraints();

  RunRecord record;
  record.schedule = schedule;
  record.seed = seed;
  record.batch_size = settings.batch_size;
  record.metric_mode = settings.metric_mode;
  record.metric_alpha = settings.metric_alpha.value_or(schedule.alpha);
  // Map residuals are cheap enough to evaluate at every iterate; Moreau
  // residuals cost a full prox solve and are taken on the logged grid only.
  const bool every_iterate =
      settings.compute_metrics && settings.metric_mode == MetricMode::kMap;
  record.averages_every_iterate = every_iterate || !settings.compute_metrics;

  std::vector<Index> grid;
  if (settings.log_stride > 0) {
    for (Index t = settings.log_stride; t <= horizon; t += settings.log_stride) {
      grid.push_back(t);
    }
    if (grid.empty() || grid.front() != 1) grid.insert(grid.begin(), 1);
    if (grid.back() != horizon) grid.push_back(horizon);
  } else {
    grid = GeometricGrid(horizon, settings.log_points);
  }
  std::size_t next_log = 0;

  std::mt19937_64 sample_rng = MakeStream(seed, Stream::kSamples);
  const Index evals_per_iter = settings.batch_size * (1 + p);

  Vector x = StartingPoint(problem, settings);
  Vector lambda = Vector::Zero(p);
  ApgSettings apg = settings.apg;
  std::vector<Index> batch(static_cast<std::size_t>(settings.batch_size));
  double kkt_sum = 0.0, cons_sum = 0.0, comp_sum = 0.0;
  Index metric_count = 0;

  if (settings.retain_iterates) {
    record.xs.reserve(static_cast<std::size_t>(horizon + 1));
    record.lambdas.reserve(static_cast<std::size_t>(horizon + 1));
  }

  for (Index t = 1; t <= horizon; ++t) {
    if (settings.retain_iterates) {
      record.xs.push_back(x);
      record.lambdas.push_back(lambda);
    }
    const bool logged = next_log < grid.size() && grid[next_log] == t;

    RunRow row;
    if (logged) {
      row.t = t;
      row.grad_evals = t * evals_per_iter;
      row.lambda_norm = lambda.norm();
    }
    if (every_iterate || (logged && settings.compute_metrics)) {
      double f = 0.0;
      ResidualSample r = EvaluateResiduals(problem, x, lambda,
                                           record.metric_alpha,
                                           settings.metric_mode, &f);
      r.t = t;
      record.residuals.push_back(r);
      kkt_sum += r.kkt_sq;
      cons_sum += r.cons;
      comp_sum += r.comp;
      ++metric_count;
      if (logged) {
        row.objective = f;
        row.feasibility = r.cons;
        const double count = static_cast<double>(metric_count);
        row.r_kkt_sq = kkt_sum / count;
        row.r_cons = cons_sum / count;
        row.r_comp_abs = std::abs(comp_sum / count);
      }
    } else if (logged) {
      Vector g;
      row.objective = problem.Objective(x, nullptr);
      if (p > 0) {
        problem.Constraints(x, g, nullptr);
        row.feasibility = positive_part(g).sum();
      }
    }

    for (auto& s : batch) s = UniformIndex(sample_rng, problem.num_samples());
    SubproblemSpec spec(build_model(problem, x, lambda, batch, schedule.tau,
                                    schedule.sigma, schedule.alpha,
                                    settings.model),
                        problem.domain());
    const ApgResult solve = solve_apg(spec, apg, x);
    if (settings.carry_lipschitz) apg.initial_lipschitz = solve.lipschitz;
    if (!solve.converged) ++record.unconverged_subproblems;
    if (solve.residual > kSubproblemWarnResidual) ++record.subproblem_warnings;

    const Vector q = eval_model(spec.model(), solve.x).second;
    Vector next_lambda = dual_update(lambda, schedule.sigma, q);
    if (observer) {
      observer({t, &spec, &solve, &x, &lambda, &next_lambda});
    }
    if (logged) {
      row.inner_iters = solve.iterations;
      row.subproblem_residual = solve.residual;
      record.rows.push_back(row);
      ++next_log;
    }
    x = solve.x;
    lambda = std::move(next_lambda);
  }
  if (settings.retain_iterates) {
    record.xs.push_back(x);
    record.lambdas.push_back(lambda);
  }
  record.final_x = x;
  record.final_lambda = lambda;
  record.total_grad_evals = horizon * evals_per_iter;
  return record;
}

struct SelectedOutput {
  Index r = 0;
  Vector x;
  Vector lambda;
};

// R uniform on {1..T} from the output-selection stream of `seed`.
inline SelectedOutput select_output(const RunRecord& record,
                                    std::uint64_t seed) {
  const Index horizon = record.schedule.horizon;
  if (static_cast<Index>(record.xs.size()) < horizon) {
    throw Error("select_output: iterates were not retained; rerun with "
                "retain_iterates (stride-1 retention) enabled");
  }
  std::mt19937_64 rng = MakeStream(seed, Stream::kOutput);
  const Index r = 1 + UniformIndex(rng, horizon);
  return {r, record.xs[static_cast<std::size_t>(r - 1)],
          record.lambdas[static_cast<std::size_t>(r - 1)]};
}

}  // namespace pmqs

#endif  // PMQS_DRIVER_HPP_
