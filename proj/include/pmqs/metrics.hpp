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

// Approximate-KKT residuals of a primal-dual pair, always evaluated against
// the full finite-sum expectations f and g:
//
//   * the projected-gradient map R_a(x, l) = a [x - Pi_X0(x - grad_x L(x, l) / a)],
//   * the Moreau-envelope gradient a (x - prox(x)) of L(., l) + indicator(X0),
//   * the constraint violation sum_i [g_i(x)]_+,
//   * the complementarity <l, g(x)>,
//
// plus prefix running averages and log-log slope fits.

#ifndef PMQS_METRICS_HPP_
#define PMQS_METRICS_HPP_

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "pmqs/core.hpp"
#include "pmqs/subsolver.hpp"

namespace pmqs {

// L(x, l) = f(x) + <l, g(x)>; writes grad_x L into `grad` when non-null.
inline double Lagrangian(const StochasticProblem& problem, const Vector& x,
                         const Vector& lambda, Vector* grad) {
  RequireSize(x, problem.dimension(), "Lagrangian point");
  RequireSize(lambda, problem.num_constraints(), "Lagrangian multipliers");
  double value = problem.Objective(x, grad);
  if (problem.num_constraints() > 0) {
    Vector g;
    Matrix jac;
    problem.Constraints(x, g, grad != nullptr ? &jac : nullptr);
    value += lambda.dot(g);
    if (grad != nullptr) grad->noalias() += jac.transpose() * lambda;
  }
  return value;
}

inline Vector lagrangian_grad(const StochasticProblem& problem, const Vector& x,
                              const Vector& lambda) {
  if ((lambda.array() < 0.0).any()) {
    throw Error("lagrangian_grad: multipliers must be nonnegative");
  }
  Vector grad;
  Lagrangian(problem, x, lambda, &grad);
  return grad;
}

inline Vector GradientMap(const BoxDomain& domain, const Vector& x,
                          const Vector& grad, double alpha) {
  return alpha * (x - project_box(x - grad / alpha, domain));
}

inline Vector kkt_map(const StochasticProblem& problem, const Vector& x,
                      const Vector& lambda, double alpha) {
  if (!(alpha > 0.0)) throw Error("kkt_map: alpha must be positive");
  return GradientMap(problem.domain(), x, lagrangian_grad(problem, x, lambda),
                     alpha);
}

// Weak-convexity modulus of L(., l): L_0 + sum_i l_i L_i.
inline double LagrangianModulus(const StochasticProblem& problem,
                                const Vector& lambda) {
  const Vector& moduli = problem.info().moduli;
  double total = moduli[0];
  for (Index i = 0; i < lambda.size(); ++i) total += lambda[i] * moduli[i + 1];
  return total;
}

inline constexpr double kProxTolerance = 1e-9;

struct ProxResult {
  Vector point;
  Vector envelope_grad;
  ApgResult solve;
};

// Solves min_z { L(z, l) + a/2 |z - x|^2 : z in X0 } and returns the
// minimizer with a (x - z).
inline ProxResult MoreauProx(const StochasticProblem& problem, const Vector& x,
                             const Vector& lambda, double alpha,
                             double tol = kProxTolerance, int max_iter = 50000) {
  RequireSize(x, problem.dimension(), "moreau_grad point");
  RequireSize(lambda, problem.num_constraints(), "moreau_grad multipliers");
  if ((lambda.array() < 0.0).any()) {
    throw Error("moreau_grad: multipliers must be nonnegative");
  }
  const double modulus = LagrangianModulus(problem, lambda);
  if (!(alpha > modulus)) {
    throw Error("moreau_grad: alpha_met = " + std::to_string(alpha) +
                " must exceed the weak-convexity modulus of L(., lambda), " +
                std::to_string(modulus));
  }
  auto objective = [&](const Vector& z, Vector* grad) {
    const Vector shift = z - x;
    double value = Lagrangian(problem, z, lambda, grad);
    if (grad != nullptr) *grad += alpha * shift;
    return value + 0.5 * alpha * shift.squaredNorm();
  };
  ApgSettings settings;
  settings.max_iter = max_iter;
  settings.initial_lipschitz = alpha;
  ProxResult out;
  out.solve = MinimizeApg(objective, problem.domain(), settings, tol,
                          project_box(x, problem.domain()));
  out.point = out.solve.x;
  out.envelope_grad = alpha * (x - out.point);
  return out;
}

inline Vector moreau_grad(const StochasticProblem& problem, const Vector& x,
                          const Vector& lambda, double alpha) {
  return MoreauProx(problem, x, lambda, alpha).envelope_grad;
}

enum class MetricMode { kMoreau, kMap };

inline const char* ToString(MetricMode mode) {
  return mode == MetricMode::kMoreau ? "moreau" : "map";
}

inline MetricMode ParseMetricMode(const std::string& s) {
  if (s == "moreau") return MetricMode::kMoreau;
  if (s == "map") return MetricMode::kMap;
  throw Error("unknown metric mode '" + s + "' (expected moreau or map)");
}

struct ResidualSample {
  Index t = 0;
  double kkt_sq = 0.0;
  double cons = 0.0;
  double comp = 0.0;
};

// Same as residual_row but also returns f(x) through `objective`.
inline ResidualSample EvaluateResiduals(const StochasticProblem& problem,
                                        const Vector& x, const Vector& lambda,
                                        double alpha_met, MetricMode mode,
                                        double* objective = nullptr) {
  RequireSize(x, problem.dimension(), "residual_row point");
  RequireSize(lambda, problem.num_constraints(), "residual_row multipliers");
  if ((lambda.array() < 0.0).any()) {
    throw Error("residual_row: multipliers must be nonnegative");
  }
  ResidualSample row;
  Vector grad;
  const double f = problem.Objective(x, &grad);
  if (objective != nullptr) *objective = f;
  if (problem.num_constraints() > 0) {
    Vector g;
    Matrix jac;
    problem.Constraints(x, g, &jac);
    row.cons = positive_part(g).sum();
    row.comp = lambda.dot(g);
    grad.noalias() += jac.transpose() * lambda;
  }
  if (mode == MetricMode::kMap) {
    row.kkt_sq = GradientMap(problem.domain(), x, grad, alpha_met).squaredNorm();
  } else {
    row.kkt_sq = moreau_grad(problem, x, lambda, alpha_met).squaredNorm();
  }
  return row;
}

inline ResidualSample residual_row(const StochasticProblem& problem,
                                   const Vector& x, const Vector& lambda,
                                   double alpha_met, MetricMode mode) {
  return EvaluateResiduals(problem, x, lambda, alpha_met, mode);
}

struct RunningAverage {
  Index t = 0;
  double r_kkt_sq = 0.0;
  double r_cons = 0.0;
  double r_comp_abs = 0.0;
};

// Prefix means of kkt_sq and cons, and |prefix mean of comp|, one entry per
// prefix of `rows`.
inline std::vector<RunningAverage> running_averages(
    const std::vector<ResidualSample>& rows) {
  std::vector<RunningAverage> out;
  out.reserve(rows.size());
  double kkt = 0.0;
  double cons = 0.0;
  double comp = 0.0;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    kkt += rows[k].kkt_sq;
    cons += rows[k].cons;
    comp += rows[k].comp;
    const double count = static_cast<double>(k + 1);
    out.push_back({rows[k].t, kkt / count, cons / count,
                   std::abs(comp / count)});
  }
  return out;
}

struct PowerLawFit {
  double slope = 0.0;
  double intercept = 0.0;
  // Points with nonpositive T or value, left out of the fit.
  int dropped = 0;
};

// Least-squares line through (log T, log value).
inline PowerLawFit fit_power_law(
    const std::vector<std::pair<double, double>>& points) {
  PowerLawFit fit;
  std::vector<std::pair<double, double>> logs;
  for (const auto& [t, v] : points) {
    if (!(t > 0.0) || !(v > 0.0) || !std::isfinite(v)) {
      ++fit.dropped;
      continue;
    }
    logs.emplace_back(std::log(t), std::log(v));
  }
  if (logs.size() < 2) {
    throw Error("fit_power_law: need at least 2 positive points, have " +
                std::to_string(logs.size()));
  }
  double mx = 0.0, my = 0.0;
  for (const auto& [lx, ly] : logs) {
    mx += lx;
    my += ly;
  }
  mx /= static_cast<double>(logs.size());
  my /= static_cast<double>(logs.size());
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [lx, ly] : logs) {
    sxx += (lx - mx) * (lx - mx);
    sxy += (lx - mx) * (ly - my);
  }
  if (!(sxx > 0.0)) throw Error("fit_power_law: all T values coincide");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  return fit;
}

}  // namespace pmqs

#endif  // PMQS_METRICS_HPP_
