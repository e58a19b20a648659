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

// The proximal augmented-Lagrangian subproblem
//
//   min_{x in X0} phi(x) = <c_0, d> + 1/2 <Sigma_0 d, d>
//                 + 1/(2 sigma) sum_i [s_i + sigma (<c_i, d> + 1/2 <Sigma_i d, d>)]_+^2
//                 + alpha/2 |d|^2,
//
// with d = x - x^t and shifted bases s_i = lambda_i + sigma G_i(x^t). The
// constants f_0 and -|lambda|^2 / (2 sigma) of the augmented Lagrangian are
// dropped. The squared positive part is C^1, so grad phi is continuous and a
// first-order method applies directly.
//
// `solve_apg` is Nesterov's accelerated projected gradient method with
// backtracking on the Lipschitz estimate, momentum k / (k + 3), a monotone
// restart, and a projected-gradient stopping test.

#ifndef PMQS_SUBSOLVER_HPP_
#define PMQS_SUBSOLVER_HPP_

#include <algorithm>
#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "pmqs/core.hpp"
#include "pmqs/qmodel.hpp"

namespace pmqs {

class SubproblemSpec {
 public:
  SubproblemSpec(QuadraticModel model, BoxDomain domain)
      : model_(std::move(model)), domain_(std::move(domain)) {
    const Index n = model_.dimension();
    const Index p = model_.num_constraints();
    if (domain_.dimension() != n) {
      throw Error("SubproblemSpec: model and domain dimensions differ");
    }
    if (!(model_.sigma > 0.0)) throw Error("SubproblemSpec: sigma must be > 0");
    if (model_.alpha < 0.0) throw Error("SubproblemSpec: alpha must be >= 0");
    RequireSize(model_.lambda, p, "SubproblemSpec multipliers");
    shifted_ = model_.lambda + model_.sigma * model_.q0;
    sigma0_diag_ = model_.sigma0.DiagonalEntries();
    curvature_.resize(p, n);
    for (Index i = 0; i < p; ++i) {
      curvature_.row(i) =
          model_.constraint_curvature[static_cast<std::size_t>(i)]
              .DiagonalEntries()
              .transpose();
    }
  }

  const QuadraticModel& model() const { return model_; }
  const BoxDomain& domain() const { return domain_; }
  const Vector& shifted_bases() const { return shifted_; }
  // Row i is the diagonal of Sigma_i.
  const Matrix& constraint_curvature() const { return curvature_; }
  const Vector& sigma0_diagonal() const { return sigma0_diag_; }

  // Inner penalty arguments s_i + sigma (<c_i, d> + 1/2 <Sigma_i d, d>).
  Vector PenaltyArguments(const Vector& d) const {
    if (model_.num_constraints() == 0) return Vector(0);
    const Vector dd = d.cwiseProduct(d);
    return shifted_ +
           model_.sigma * (model_.constraint_grads * d + 0.5 * curvature_ * dd);
  }

 private:
  QuadraticModel model_;
  BoxDomain domain_;
  Vector shifted_;
  Vector sigma0_diag_;
  Matrix curvature_;
};

// phi(x), plus grad phi(x) into `grad` when non-null. The gradient is
//   c_0 + Sigma_0 d + sum_i u_i (c_i + Sigma_i d) + alpha d,
// u_i = [s_i + sigma (<c_i, d> + 1/2 <Sigma_i d, d>)]_+.
inline double EvaluatePhi(const SubproblemSpec& spec, const Vector& x,
                          Vector* grad) {
  const QuadraticModel& m = spec.model();
  RequireSize(x, m.dimension(), "eval_phi");
  const Vector d = x - m.anchor;
  const Vector sigma0_d = spec.sigma0_diagonal().cwiseProduct(d);
  double value =
      m.c0.dot(d) + 0.5 * d.dot(sigma0_d) + 0.5 * m.alpha * d.squaredNorm();
  if (grad != nullptr) *grad = m.c0 + sigma0_d + m.alpha * d;
  if (m.num_constraints() > 0) {
    const Vector u = positive_part(spec.PenaltyArguments(d));
    value += u.squaredNorm() / (2.0 * m.sigma);
    if (grad != nullptr) {
      grad->noalias() += m.constraint_grads.transpose() * u;
      *grad += (spec.constraint_curvature().transpose() * u).cwiseProduct(d);
    }
  }
  return value;
}

inline double eval_phi(const SubproblemSpec& spec, const Vector& x) {
  return EvaluatePhi(spec, x, nullptr);
}

inline Vector grad_phi(const SubproblemSpec& spec, const Vector& x) {
  Vector g;
  EvaluatePhi(spec, x, &g);
  return g;
}

// Relative rounding allowance in the sufficient-decrease test.
inline constexpr double kBacktrackSlack = 1e-12;

struct ApgSettings {
  // Backtracking growth factor, > 1.
  double eta = 2.0;
  double initial_lipschitz = 1.0;
  // Projected-gradient stopping threshold. Unset means DefaultTolerance.
  std::optional<double> tol;
  int max_iter = 2000;
  bool record_trace = false;
};

// max(1e-8, 1e-3 sigma min(1, |c_0|)).
inline double DefaultTolerance(const SubproblemSpec& spec) {
  const QuadraticModel& m = spec.model();
  return std::max(1e-8, 1e-3 * m.sigma * std::min(1.0, m.c0.norm()));
}

// One accepted backtracking step: phi(x_{k+1}) <= phi(y_k) +
// <grad phi(y_k), x_{k+1} - y_k> + L_k / 2 |x_{k+1} - y_k|^2.
struct ApgStep {
  double lipschitz = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
};

struct ApgResult {
  Vector x;
  int iterations = 0;
  double residual = 0.0;
  double lipschitz = 0.0;
  bool converged = false;
  int restarts = 0;
  std::vector<ApgStep> trace;
};

// |x - Pi_X0(x - grad phi(x))|.
inline double ProjectedGradientResidual(const SubproblemSpec& spec,
                                        const Vector& x) {
  return (x - project_box(x - grad_phi(spec, x), spec.domain())).norm();
}

// Accelerated projected gradient on a smooth function over the box.
// `objective(x, grad)` returns the value at x and, when `grad` is non-null,
// writes the gradient.
template <typename Objective>
ApgResult MinimizeApg(Objective&& objective, const BoxDomain& box,
                      const ApgSettings& settings, double tol,
                      const Vector& x_start) {
  if (!(settings.eta > 1.0)) throw Error("solve_apg: eta must exceed 1");
  if (settings.max_iter < 1) throw Error("solve_apg: max_iter must be >= 1");
  if (!(tol > 0.0)) throw Error("solve_apg: tol must be positive");
  if (!(settings.initial_lipschitz > 0.0)) {
    throw Error("solve_apg: initial Lipschitz estimate must be positive");
  }
  RequireSize(x_start, box.dimension(), "solve_apg start");

  auto evaluate = [&](const Vector& at, Vector& grad) {
    const double v = objective(at, &grad);
    if (!std::isfinite(v) || !grad.allFinite()) {
      throw Error("solve_apg: non-finite subproblem value or gradient");
    }
    return v;
  };
  auto residual_at = [&](const Vector& at, const Vector& grad) {
    return (at - project_box(at - grad, box)).norm();
  };

  ApgResult result;
  Vector x = project_box(x_start, box);
  Vector grad_x(x.size());
  double phi_x = evaluate(x, grad_x);
  result.residual = residual_at(x, grad_x);

  Vector y = x;
  double phi_y = phi_x;
  Vector grad_y = grad_x;
  double lipschitz = settings.initial_lipschitz;
  int momentum_k = 0;

  for (int k = 0; k < settings.max_iter && result.residual > tol; ++k) {
    // Smallest i_k >= 0 with the sufficient-decrease condition at L eta^i_k.
    Vector z;
    double phi_z = 0.0;
    double rhs = 0.0;
    for (int tries = 0;; ++tries) {
      z = project_box(y - grad_y / lipschitz, box);
      const Vector step = z - y;
      phi_z = objective(z, nullptr);
      rhs = phi_y + grad_y.dot(step) + 0.5 * lipschitz * step.squaredNorm();
      // Rounding slack keeps the test from stalling once z == y numerically.
      const double slack = kBacktrackSlack * std::max(1.0, std::abs(phi_y));
      if (phi_z <= rhs + slack) break;
      lipschitz *= settings.eta;
      if (!std::isfinite(lipschitz) || tries > 2000) {
        throw Error("solve_apg: backtracking failed to find a step");
      }
    }
    if (settings.record_trace) result.trace.push_back({lipschitz, phi_z, rhs});

    Vector grad_z(z.size());
    phi_z = evaluate(z, grad_z);
    double momentum = 0.0;
    if (phi_z > phi_x) {
      // Monotone restart: drop momentum.
      ++result.restarts;
      momentum_k = 0;
    } else {
      momentum = static_cast<double>(momentum_k) /
                 static_cast<double>(momentum_k + 3);
      ++momentum_k;
    }
    if (momentum > 0.0) {
      y = z + momentum * (z - x);
      phi_y = evaluate(y, grad_y);
    } else {
      y = z;
      phi_y = phi_z;
      grad_y = grad_z;
    }
    x = std::move(z);
    phi_x = phi_z;
    grad_x = std::move(grad_z);
    result.residual = residual_at(x, grad_x);
    result.iterations = k + 1;
  }
  result.converged = result.residual <= tol;
  result.x = std::move(x);
  result.lipschitz = lipschitz;
  return result;
}

inline ApgResult solve_apg(const SubproblemSpec& spec,
                           const ApgSettings& settings, const Vector& x_start) {
  auto objective = [&spec](const Vector& x, Vector* grad) {
    return EvaluatePhi(spec, x, grad);
  };
  return MinimizeApg(objective, spec.domain(), settings,
                     settings.tol.value_or(DefaultTolerance(spec)), x_start);
}

}  // namespace pmqs

#endif  // PMQS_SUBSOLVER_HPP_
