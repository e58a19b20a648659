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

// Per-iteration quadratic models of the sampled objective and constraints.
//
// At the anchor x^t with sample batch xi_t the models are
//
//   q_0(x) = F(x^t) + <c_0, d> + 1/2 <Sigma_0 d, d>
//   q_i(x) = G_i(x^t) + <c_i, d> + 1/2 <Sigma_i d, d>,   d = x - x^t,
//
// with batch-averaged values and gradients. Constraint curvatures are
// Sigma_i = -(L_i + margin) I, which makes q_i a global minorant of every
// L_i-weakly convex G_i(., xi). The objective curvature is
// Sigma_0 = -sum_i lambda_i Sigma_i + tau I, so Sigma_0 + sum_i lambda_i
// Sigma_i = tau I stays positive definite.

#ifndef PMQS_QMODEL_HPP_
#define PMQS_QMODEL_HPP_

#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pmqs/core.hpp"

namespace pmqs {

// Scaled identity or diagonal matrix; products and quadratic forms are O(n).
class CurvatureMatrix {
 public:
  enum class Kind { kScaledIdentity, kDiagonal };

  CurvatureMatrix() = default;

  static CurvatureMatrix ScaledIdentity(double scale, Index n) {
    CurvatureMatrix m;
    m.kind_ = Kind::kScaledIdentity;
    m.scale_ = scale;
    m.dimension_ = n;
    return m;
  }

  static CurvatureMatrix Diagonal(Vector diagonal) {
    CurvatureMatrix m;
    m.kind_ = Kind::kDiagonal;
    m.dimension_ = diagonal.size();
    m.diagonal_ = std::move(diagonal);
    return m;
  }

  Kind kind() const { return kind_; }
  Index dimension() const { return dimension_; }
  double scale() const { return scale_; }

  Vector Apply(const Vector& v) const {
    if (kind_ == Kind::kScaledIdentity) return scale_ * v;
    return diagonal_.cwiseProduct(v);
  }

  double QuadraticForm(const Vector& v) const {
    if (kind_ == Kind::kScaledIdentity) return scale_ * v.squaredNorm();
    return v.dot(diagonal_.cwiseProduct(v));
  }

  Vector DiagonalEntries() const {
    if (kind_ == Kind::kScaledIdentity) {
      return Vector::Constant(dimension_, scale_);
    }
    return diagonal_;
  }

  double MinEntry() const {
    return kind_ == Kind::kScaledIdentity ? scale_ : diagonal_.minCoeff();
  }
  double MaxEntry() const {
    return kind_ == Kind::kScaledIdentity ? scale_ : diagonal_.maxCoeff();
  }
  double SpectralNorm() const {
    return kind_ == Kind::kScaledIdentity ? std::abs(scale_)
                                          : diagonal_.cwiseAbs().maxCoeff();
  }

 private:
  Kind kind_ = Kind::kScaledIdentity;
  double scale_ = 0.0;
  Index dimension_ = 0;
  Vector diagonal_;
};

enum class HessianMode {
  // Sigma_0 = -sum_i lambda_i Sigma_i + tau I.
  kStep1,
  // Sigma_0 = max(batch Hessian diagonal, tau) - sum_i lambda_i Sigma_i.
  kEmpiricalHessian,
};

struct ModelOptions {
  // Sigma_i = -(L_i + curvature_margin) I.
  double curvature_margin = 0.0;
  HessianMode hessian_mode = HessianMode::kStep1;
};

struct QuadraticModel {
  Vector anchor;
  double f0 = 0.0;
  Vector c0;
  CurvatureMatrix sigma0;
  // Row i holds grad G_i at the anchor; entry i of `q0` holds G_i.
  Vector q0;
  Matrix constraint_grads;
  std::vector<CurvatureMatrix> constraint_curvature;
  double sigma = 1.0;
  double alpha = 1.0;
  double tau = 1.0;
  Vector lambda;

  Index dimension() const { return anchor.size(); }
  Index num_constraints() const { return q0.size(); }
};

namespace internal {

inline bool AllFinite(const Vector& v) { return v.allFinite(); }

[[noreturn]] inline void ThrowNonFinite(const char* what, Index sample) {
  throw Error(std::string("build_model: non-finite ") + what +
              " from oracle at sample " + std::to_string(sample));
}

}  // namespace internal

inline QuadraticModel build_model(const StochasticProblem& problem,
                                  const Vector& x_t, const Vector& lambda_t,
                                  std::span<const Index> batch, double tau,
                                  double sigma, double alpha,
                                  const ModelOptions& options = {}) {
  const Index n = problem.dimension();
  const Index p = problem.num_constraints();
  RequireSize(x_t, n, "build_model anchor");
  RequireSize(lambda_t, p, "build_model multipliers");
  if (batch.empty()) throw Error("build_model: empty sample batch");
  if (!(tau > 0.0)) throw Error("build_model: tau must be positive");
  if ((lambda_t.array() < 0.0).any()) {
    throw Error("build_model: multipliers must be nonnegative");
  }
  const Vector& moduli = problem.info().moduli;
  if (moduli.size() != p + 1) {
    throw Error("build_model: problem must carry p + 1 weak-convexity moduli");
  }

  QuadraticModel m;
  m.anchor = x_t;
  m.sigma = sigma;
  m.alpha = alpha;
  m.tau = tau;
  m.lambda = lambda_t;
  m.c0.setZero(n);
  m.q0.setZero(p);
  m.constraint_grads.setZero(p, n);

  Vector grad(n);
  Vector values(p);
  Matrix jac(p, n);
  Vector hessian_diag;
  const bool empirical = options.hessian_mode == HessianMode::kEmpiricalHessian;
  if (empirical) hessian_diag.setZero(n);

  for (Index s : batch) {
    const double f = problem.SampleObjective(x_t, s, &grad);
    if (!std::isfinite(f)) internal::ThrowNonFinite("objective value", s);
    if (!internal::AllFinite(grad)) {
      internal::ThrowNonFinite("objective gradient", s);
    }
    m.f0 += f;
    m.c0 += grad;
    if (p > 0) {
      problem.SampleConstraints(x_t, s, values, &jac);
      if (!internal::AllFinite(values)) {
        internal::ThrowNonFinite("constraint values", s);
      }
      if (!jac.allFinite()) internal::ThrowNonFinite("constraint Jacobian", s);
      m.q0 += values;
      m.constraint_grads += jac;
    }
    if (empirical) {
      auto h = problem.SampleObjectiveHessianDiag(x_t, s);
      if (!h) {
        throw Error("build_model: empirical-hessian mode needs a problem "
                    "with objective Hessian diagonals");
      }
      if (!internal::AllFinite(*h)) {
        internal::ThrowNonFinite("objective Hessian", s);
      }
      hessian_diag += *h;
    }
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  m.f0 *= inv;
  m.c0 *= inv;
  m.q0 *= inv;
  m.constraint_grads *= inv;

  // -sum_i lambda_i Sigma_i with Sigma_i = -(L_i + margin) I.
  double lifted = 0.0;
  m.constraint_curvature.reserve(static_cast<std::size_t>(p));
  for (Index i = 0; i < p; ++i) {
    const double l = moduli[i + 1] + options.curvature_margin;
    m.constraint_curvature.push_back(CurvatureMatrix::ScaledIdentity(-l, n));
    lifted += lambda_t[i] * l;
  }
  if (empirical) {
    hessian_diag *= inv;
    m.sigma0 = CurvatureMatrix::Diagonal(
        (hessian_diag.array().max(tau) + lifted).matrix());
  } else {
    m.sigma0 = CurvatureMatrix::ScaledIdentity(tau + lifted, n);
  }
  return m;
}

// (q_0(x), (q_1(x), ..., q_p(x))).
inline std::pair<double, Vector> eval_model(const QuadraticModel& model,
                                            const Vector& x) {
  RequireSize(x, model.dimension(), "eval_model");
  const Vector d = x - model.anchor;
  const double q0 =
      model.f0 + model.c0.dot(d) + 0.5 * model.sigma0.QuadraticForm(d);
  Vector q = model.q0 + model.constraint_grads * d;
  for (Index i = 0; i < model.num_constraints(); ++i) {
    q[i] += 0.5 * model.constraint_curvature[static_cast<std::size_t>(i)]
                      .QuadraticForm(d);
  }
  return {q0, q};
}

}  // namespace pmqs

#endif  // PMQS_QMODEL_HPP_
