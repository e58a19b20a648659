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

// Fairness-constrained classification with a truncated logistic loss:
//
//   min f(x) = mean_{(a, b) in D} phi_t(log(1 + exp(-b a'x)))
//   s.t. g(x) = c mean_{a in S} s(a'x) - mean_{a in Smin} s(a'x) <= 0,
//
// phi_t(u) = t log(1 + u / t), s the logistic function, c = tau |S| / |Smin|.
// S is the leading block of D and Smin the leading block of S. A sample is a
// triple drawn uniformly from D x S x Smin.
//
// Moduli: with m = b a'x and l(m) = log(1 + e^{-m}), the second derivative of
// phi_t(l(m)) is phi_t''(l) l'^2 + phi_t'(l) l''. The second term is
// nonnegative and phi_t'' >= -1/t, |l'| <= 1, so L_0 = max |a|^2 / t. The
// constraint uses |s''| <= 1 / (6 sqrt 3).

#ifndef PMQS_PROBLEMS_FAIRNESS_HPP_
#define PMQS_PROBLEMS_FAIRNESS_HPP_

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <utility>

#include "pmqs/core.hpp"
#include "pmqs/problems/neyman_pearson.hpp"
#include "pmqs/random.hpp"

namespace pmqs {

// Violation levels used for the three reference tasks.
inline constexpr std::array<double, 3> kFairnessLevels = {0.1, 0.62, 0.55};
inline constexpr double kDefaultTruncation = 2.0;

namespace logistic {

inline double Sigma(double u) { return sigmoid::Loss(-u); }
inline double SigmaDeriv(double u) {
  const double s = Sigma(u);
  return s * (1.0 - s);
}
// log(1 + e^{-m}).
inline double Loss(double m) {
  return std::log1p(std::exp(-std::abs(m))) + std::max(-m, 0.0);
}

}  // namespace logistic

inline double TruncatedLoss(double u, double t) { return t * std::log1p(u / t); }

struct FairnessParams {
  Index d = 10;
  Index size_d = 400;
  Index size_s = 160;
  Index size_min = 40;
  double tau = 0.1;
  double truncation = kDefaultTruncation;
  double radius = 100.0;
};

struct FairnessData {
  Matrix features;  // |D| x d; rows [0, |S|) form S, rows [0, |Smin|) form Smin
  Vector labels;    // entries +-1
};

class FairnessProblem final : public StochasticProblem {
 public:
  FairnessProblem(FairnessParams params, FairnessData data)
      : params_(params), data_(std::move(data)) {
    params_.d = data_.features.cols();
    params_.size_d = data_.features.rows();
    if (!(params_.size_min >= 1 && params_.size_min <= params_.size_s &&
          params_.size_s <= params_.size_d)) {
      throw Error("FairnessProblem: need 1 <= |Smin| <= |S| <= |D|");
    }
    if (data_.labels.size() != params_.size_d) {
      throw Error("FairnessProblem: one label per sample required");
    }
    if (!(params_.tau > 0.0) || !(params_.truncation > 0.0)) {
      throw Error("FairnessProblem: tau and truncation must be positive");
    }
    scale_ = params_.tau * static_cast<double>(params_.size_s) /
             static_cast<double>(params_.size_min);
    info_.family = "fairness";
    info_.domain = BoxDomain(params_.radius, params_.d);
    const Vector norms_sq = data_.features.rowwise().squaredNorm();
    const double rd = norms_sq.maxCoeff();
    const double rs = norms_sq.head(params_.size_s).maxCoeff();
    const double rm = norms_sq.head(params_.size_min).maxCoeff();
    info_.moduli.resize(2);
    info_.moduli << rd / params_.truncation,
        sigmoid::kMaxCurvature * (scale_ * rs + rm);
    info_.bounds = ProblemBounds{
        std::max(scale_, 1.0), std::sqrt(rd),
        0.25 * (scale_ * std::sqrt(rs) + std::sqrt(rm))};
  }

  const ProblemInfo& info() const override { return info_; }
  Index num_constraints() const override { return 1; }
  Index num_samples() const override {
    return params_.size_d * params_.size_s * params_.size_min;
  }
  const FairnessParams& params() const { return params_; }
  const FairnessData& data() const { return data_; }
  // c = tau |S| / |Smin|.
  double scale() const { return scale_; }

  double SampleObjective(const Vector& x, Index s, Vector* grad) const override {
    const Index i = s / (params_.size_s * params_.size_min);
    return ObjectiveTerm(i, x, grad);
  }

  void SampleConstraints(const Vector& x, Index s, Vector& values,
                         Matrix* jacobian) const override {
    const Index rest = s % (params_.size_s * params_.size_min);
    const auto a_s = data_.features.row(rest / params_.size_min);
    const auto a_m = data_.features.row(rest % params_.size_min);
    const double us = a_s.dot(x);
    const double um = a_m.dot(x);
    values.resize(1);
    values[0] = scale_ * logistic::Sigma(us) - logistic::Sigma(um);
    if (jacobian != nullptr) {
      *jacobian = scale_ * logistic::SigmaDeriv(us) * a_s -
                  logistic::SigmaDeriv(um) * a_m;
    }
  }

  std::optional<Vector> SampleObjectiveHessianDiag(const Vector& x,
                                                   Index s) const override {
    const Index i = s / (params_.size_s * params_.size_min);
    const auto a = data_.features.row(i);
    const double m = data_.labels[i] * a.dot(x);
    const double t = params_.truncation;
    const double l = logistic::Loss(m);
    const double dl = -logistic::Sigma(-m);
    const double d2l = logistic::SigmaDeriv(m);
    const double dphi = 1.0 / (1.0 + l / t);
    const double d2phi = -(1.0 / t) * dphi * dphi;
    const double curvature = d2phi * dl * dl + dphi * d2l;
    return Vector(curvature * a.transpose().cwiseProduct(a.transpose()));
  }

  double Objective(const Vector& x, Vector* grad) const override {
    double total = 0.0;
    Vector g(params_.d);
    if (grad != nullptr) grad->setZero(params_.d);
    for (Index i = 0; i < params_.size_d; ++i) {
      total += ObjectiveTerm(i, x, grad != nullptr ? &g : nullptr);
      if (grad != nullptr) *grad += g;
    }
    const double inv = 1.0 / static_cast<double>(params_.size_d);
    if (grad != nullptr) *grad *= inv;
    return total * inv;
  }

  void Constraints(const Vector& x, Vector& values,
                   Matrix* jacobian) const override {
    const Vector u = data_.features.topRows(params_.size_s) * x;
    double mean_s = 0.0, mean_m = 0.0;
    Vector ws(params_.size_s);
    for (Index i = 0; i < params_.size_s; ++i) {
      mean_s += logistic::Sigma(u[i]);
      ws[i] = logistic::SigmaDeriv(u[i]);
    }
    for (Index i = 0; i < params_.size_min; ++i) mean_m += logistic::Sigma(u[i]);
    mean_s /= static_cast<double>(params_.size_s);
    mean_m /= static_cast<double>(params_.size_min);
    values.resize(1);
    values[0] = scale_ * mean_s - mean_m;
    if (jacobian != nullptr) {
      const Vector gs = data_.features.topRows(params_.size_s).transpose() * ws /
                        static_cast<double>(params_.size_s);
      const Vector gm =
          data_.features.topRows(params_.size_min).transpose() *
          ws.head(params_.size_min) / static_cast<double>(params_.size_min);
      *jacobian = (scale_ * gs - gm).transpose();
    }
  }

 private:
  double ObjectiveTerm(Index i, const Vector& x, Vector* grad) const {
    const auto a = data_.features.row(i);
    const double b = data_.labels[i];
    const double m = b * a.dot(x);
    const double l = logistic::Loss(m);
    const double t = params_.truncation;
    if (grad != nullptr) {
      // d/dm phi_t(l(m)) = phi_t'(l) l'(m), l'(m) = -s(-m).
      const double dm = -logistic::Sigma(-m) / (1.0 + l / t);
      *grad = (dm * b) * a.transpose();
    }
    return TruncatedLoss(l, t);
  }

  FairnessParams params_;
  FairnessData data_;
  ProblemInfo info_;
  double scale_ = 1.0;
};

// Labels follow a noisy linear rule; the protected block is shifted along a
// second direction and its minority block is shifted back, so the group
// positive rates differ at a typical classifier.
inline FairnessProblem fairness_generate(std::uint64_t seed,
                                         const FairnessParams& params = {}) {
  if (!(params.size_min >= 1 && params.size_min <= params.size_s &&
        params.size_s <= params.size_d)) {
    throw Error("fairness_generate: need 1 <= |Smin| <= |S| <= |D|");
  }
  if (params.d < 2) throw Error("fairness_generate: d must be >= 2");
  std::mt19937_64 rng = MakeStream(seed, Stream::kInstance);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector w(params.d);
  for (Index j = 0; j < params.d; ++j) w[j] = normal(rng);
  w.normalize();
  FairnessData data;
  data.features.resize(params.size_d, params.d);
  data.labels.resize(params.size_d);
  for (Index i = 0; i < params.size_d; ++i) {
    for (Index j = 0; j < params.d; ++j) data.features(i, j) = normal(rng);
    if (i < params.size_min) {
      data.features(i, 1) -= 1.0;
    } else if (i < params.size_s) {
      data.features(i, 1) += 1.0;
    }
    const double score = data.features.row(i).dot(w) + 0.5 * normal(rng);
    data.labels[i] = score >= 0.0 ? 1.0 : -1.0;
    data.features.row(i).normalize();
  }
  return FairnessProblem(params, std::move(data));
}

}  // namespace pmqs

#endif  // PMQS_PROBLEMS_FAIRNESS_HPP_
