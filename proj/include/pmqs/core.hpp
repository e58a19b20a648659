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

// Problem abstraction and shared numerics.
//
// A `StochasticProblem` models
//
//   min_{x in X0}  f(x) = E[F(x, xi)]   s.t.  g_i(x) = E[G_i(x, xi)] <= 0,
//
// where X0 is the box {x : |x|_inf <= R} and xi is a uniform index into a
// finite sample pool {0, ..., N-1}. Full expectations are therefore exact
// finite-sum averages, which the metrics rely on.

#ifndef PMQS_CORE_HPP_
#define PMQS_CORE_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace pmqs {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = std::int64_t;

// Raised for violated preconditions and malformed inputs.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void RequireSize(const Vector& v, Index n, const char* what) {
  if (v.size() != n) {
    throw Error(std::string(what) + ": expected dimension " +
                std::to_string(n) + ", got " + std::to_string(v.size()));
  }
}

// The box X0 = {x in R^n : |x|_inf <= R}.
class BoxDomain {
 public:
  BoxDomain(double radius, Index dimension)
      : radius_(radius), dimension_(dimension) {
    if (!(radius > 0.0) || !std::isfinite(radius)) {
      throw Error("BoxDomain: radius must be positive and finite");
    }
    if (dimension < 1) throw Error("BoxDomain: dimension must be >= 1");
  }

  double radius() const { return radius_; }
  Index dimension() const { return dimension_; }
  // Euclidean diameter 2 R sqrt(n).
  double diameter() const {
    return 2.0 * radius_ * std::sqrt(static_cast<double>(dimension_));
  }
  bool Contains(const Vector& x, double slack = 0.0) const {
    return x.size() == dimension_ &&
           (x.size() == 0 || x.cwiseAbs().maxCoeff() <= radius_ + slack);
  }

 private:
  double radius_;
  Index dimension_;
};

inline Vector project_box(const Vector& x, const BoxDomain& domain) {
  RequireSize(x, domain.dimension(), "project_box");
  return x.cwiseMax(-domain.radius()).cwiseMin(domain.radius());
}

inline Vector positive_part(const Vector& v) { return v.cwiseMax(0.0); }

inline double positive_part(double v) { return v > 0.0 ? v : 0.0; }

// Geometry and growth bounds (nu_g bounds |G(x, xi)|, kappa_f bounds
// |grad F|, kappa_g bounds max_i |grad G_i|, all over X0).
struct ProblemBounds {
  double nu_g = 0.0;
  double kappa_f = 0.0;
  double kappa_g = 0.0;
};

// Strictly feasible point with g_i(point) <= -margin for every i.
struct SlaterData {
  Vector point;
  double margin = 0.0;
};

struct ProblemInfo {
  std::string family;
  BoxDomain domain{1.0, 1};
  // Weak-convexity moduli (L_0, L_1, ..., L_p): F(., xi) + L_0/2 |.|^2 and
  // G_i(., xi) + L_i/2 |.|^2 are convex for every sample.
  Vector moduli;
  std::optional<ProblemBounds> bounds;
  std::optional<SlaterData> slater;
};

// Oracle interface. Implementations must be pure functions of (x, sample) so
// that concurrent read-only evaluation is safe.
class StochasticProblem {
 public:
  virtual ~StochasticProblem() = default;

  virtual const ProblemInfo& info() const = 0;
  virtual Index num_constraints() const = 0;
  virtual Index num_samples() const = 0;

  Index dimension() const { return info().domain.dimension(); }
  const BoxDomain& domain() const { return info().domain; }

  // F(x, sample); writes grad_x F into `grad` when non-null.
  virtual double SampleObjective(const Vector& x, Index sample,
                                 Vector* grad) const = 0;

  // G(x, sample) into `values` (size p); Jacobian rows grad_x G_i into
  // `jacobian` (p x n) when non-null.
  virtual void SampleConstraints(const Vector& x, Index sample, Vector& values,
                                 Matrix* jacobian) const = 0;

  // Diagonal of grad^2_x F(x, sample). Optional; only the empirical-Hessian
  // model mode needs it.
  virtual std::optional<Vector> SampleObjectiveHessianDiag(const Vector& x,
                                                           Index sample) const {
    (void)x;
    (void)sample;
    return std::nullopt;
  }

  // Full expectation f(x) and its gradient. The default is the uniform
  // average over the sample pool; families with structure override it.
  virtual double Objective(const Vector& x, Vector* grad) const {
    const Index n = dimension();
    double total = 0.0;
    Vector g_sample(n);
    if (grad != nullptr) grad->setZero(n);
    for (Index s = 0; s < num_samples(); ++s) {
      total += SampleObjective(x, s, grad != nullptr ? &g_sample : nullptr);
      if (grad != nullptr) *grad += g_sample;
    }
    const double inv = 1.0 / static_cast<double>(num_samples());
    if (grad != nullptr) *grad *= inv;
    return total * inv;
  }

  // Full expectation g(x) and its Jacobian.
  virtual void Constraints(const Vector& x, Vector& values,
                           Matrix* jacobian) const {
    const Index n = dimension();
    const Index p = num_constraints();
    values.setZero(p);
    if (jacobian != nullptr) jacobian->setZero(p, n);
    Vector v(p);
    Matrix jac(p, n);
    for (Index s = 0; s < num_samples(); ++s) {
      SampleConstraints(x, s, v, jacobian != nullptr ? &jac : nullptr);
      values += v;
      if (jacobian != nullptr) *jacobian += jac;
    }
    const double inv = 1.0 / static_cast<double>(num_samples());
    values *= inv;
    if (jacobian != nullptr) *jacobian *= inv;
  }
};

// Constants driving the multiplier increment bounds and the step schedule.
struct AlgoConstants {
  double gamma1 = 0.0;
  double gamma2 = 0.0;
  double kappa_sigma = 0.0;
  double beta = 1.0;
};

// gamma_1 = nu_g + sqrt(p) (kappa_g D0 + kappa_S D0^2 / 2)
// gamma_2 = nu_g + kappa_g D0 + kappa_S D0^2 / 2
// kappa_S = max_j L_j (+ curvature margin), beta = 2 [L_0 + gamma_2 sum_j L_j] + 1
//
// `curvature_margin` accounts for models built with Sigma_i = -(L_i + margin) I.
inline AlgoConstants compute_constants(const StochasticProblem& problem,
                                       double curvature_margin = 0.0) {
  const ProblemInfo& info = problem.info();
  if (!info.bounds) {
    throw Error(
        "compute_constants: problem has no bounds (nu_g, kappa_f, kappa_g); "
        "supply them on the problem or estimate them with EstimateBounds");
  }
  const Index p = problem.num_constraints();
  if (info.moduli.size() != p + 1) {
    throw Error("compute_constants: expected " + std::to_string(p + 1) +
                " weak-convexity moduli, got " +
                std::to_string(info.moduli.size()));
  }
  const double d0 = info.domain.diameter();
  const ProblemBounds& b = *info.bounds;
  AlgoConstants c;
  double sum_l = 0.0;
  double max_l = 0.0;
  for (Index j = 1; j <= p; ++j) {
    sum_l += info.moduli[j] + curvature_margin;
    max_l = std::max(max_l, info.moduli[j] + curvature_margin);
  }
  c.kappa_sigma = p > 0 ? max_l : 0.0;
  const double curvature_term = b.kappa_g * d0 + 0.5 * c.kappa_sigma * d0 * d0;
  c.gamma1 = b.nu_g + std::sqrt(static_cast<double>(p)) * curvature_term;
  c.gamma2 = b.nu_g + curvature_term;
  c.beta = 2.0 * (info.moduli[0] + c.gamma2 * sum_l) + 1.0;
  return c;
}

}  // namespace pmqs

#endif  // PMQS_CORE_HPP_
