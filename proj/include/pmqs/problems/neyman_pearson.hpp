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

// Neyman-Pearson classification with the sigmoid loss phi(u) = 1 / (1 + e^u):
//
//   min f(x) = mean_i phi(x' a0_i)   s.t.   g(x) = mean_j phi(-x' a1_j) - tau <= 0.
//
// A sample is a pair (i, j) drawn uniformly from the product of the two class
// pools, so both marginals are uniform and the full expectations are the two
// class means.

#ifndef PMQS_PROBLEMS_NEYMAN_PEARSON_HPP_
#define PMQS_PROBLEMS_NEYMAN_PEARSON_HPP_

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <utility>

#include "pmqs/core.hpp"
#include "pmqs/random.hpp"

namespace pmqs {

namespace sigmoid {

// 1 / (1 + e^u), evaluated without overflow.
inline double Loss(double u) {
  if (u >= 0.0) {
    const double e = std::exp(-u);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(u));
}
inline double LossDeriv(double u) {
  const double v = Loss(u);
  return -v * (1.0 - v);
}
inline double LossSecondDeriv(double u) {
  const double v = Loss(u);
  return v * (1.0 - v) * (1.0 - 2.0 * v);
}
// sup |phi''| = 1 / (6 sqrt(3)).
inline const double kMaxCurvature = 1.0 / (6.0 * std::sqrt(3.0));

}  // namespace sigmoid

// False-positive levels used for the three reference tasks.
inline constexpr std::array<double, 3> kNeymanPearsonLevels = {0.2, 0.3, 0.2};

struct NpParams {
  Index d = 20;
  Index n0 = 200;
  Index n1 = 200;
  double tau = 0.2;
  double separation = 2.0;
  double radius = 100.0;
};

struct NpData {
  Matrix positive;  // n0 x d
  Matrix negative;  // n1 x d
};

class NeymanPearsonProblem final : public StochasticProblem {
 public:
  NeymanPearsonProblem(NpParams params, NpData data)
      : params_(params), data_(std::move(data)) {
    if (!(params_.tau > 0.0 && params_.tau < 1.0)) {
      throw Error("NeymanPearsonProblem: tau must lie in (0, 1)");
    }
    if (data_.positive.rows() < 1 || data_.negative.rows() < 1 ||
        data_.positive.cols() != data_.negative.cols()) {
      throw Error("NeymanPearsonProblem: both classes need >= 1 sample of "
                  "equal dimension");
    }
    params_.d = data_.positive.cols();
    params_.n0 = data_.positive.rows();
    params_.n1 = data_.negative.rows();
    info_.family = "neyman_pearson";
    info_.domain = BoxDomain(params_.radius, params_.d);
    const double r0 = data_.positive.rowwise().squaredNorm().maxCoeff();
    const double r1 = data_.negative.rowwise().squaredNorm().maxCoeff();
    info_.moduli.resize(2);
    info_.moduli << sigmoid::kMaxCurvature * r0, sigmoid::kMaxCurvature * r1;
    // phi in (0, 1) and |phi'| <= 1/4.
    info_.bounds = ProblemBounds{std::max(params_.tau, 1.0 - params_.tau),
                                 0.25 * std::sqrt(r0), 0.25 * std::sqrt(r1)};
  }

  const ProblemInfo& info() const override { return info_; }
  Index num_constraints() const override { return 1; }
  Index num_samples() const override { return params_.n0 * params_.n1; }
  const NpParams& params() const { return params_; }
  const NpData& data() const { return data_; }

  double SampleObjective(const Vector& x, Index s, Vector* grad) const override {
    const auto a = data_.positive.row(s / params_.n1);
    const double u = a.dot(x);
    if (grad != nullptr) *grad = sigmoid::LossDeriv(u) * a.transpose();
    return sigmoid::Loss(u);
  }

  void SampleConstraints(const Vector& x, Index s, Vector& values,
                         Matrix* jacobian) const override {
    const auto a = data_.negative.row(s % params_.n1);
    const double u = -a.dot(x);
    values.resize(1);
    values[0] = sigmoid::Loss(u) - params_.tau;
    if (jacobian != nullptr) *jacobian = -sigmoid::LossDeriv(u) * a;
  }

  std::optional<Vector> SampleObjectiveHessianDiag(const Vector& x,
                                                   Index s) const override {
    const auto a = data_.positive.row(s / params_.n1);
    return Vector(sigmoid::LossSecondDeriv(a.dot(x)) *
                  a.transpose().cwiseProduct(a.transpose()));
  }

  double Objective(const Vector& x, Vector* grad) const override {
    const Vector u = data_.positive * x;
    Vector w(u.size());
    double total = 0.0;
    for (Index i = 0; i < u.size(); ++i) {
      total += sigmoid::Loss(u[i]);
      w[i] = sigmoid::LossDeriv(u[i]);
    }
    const double inv = 1.0 / static_cast<double>(params_.n0);
    if (grad != nullptr) *grad = data_.positive.transpose() * w * inv;
    return total * inv;
  }

  void Constraints(const Vector& x, Vector& values,
                   Matrix* jacobian) const override {
    const Vector u = -(data_.negative * x);
    Vector w(u.size());
    double total = 0.0;
    for (Index j = 0; j < u.size(); ++j) {
      total += sigmoid::Loss(u[j]);
      w[j] = -sigmoid::LossDeriv(u[j]);
    }
    const double inv = 1.0 / static_cast<double>(params_.n1);
    values.resize(1);
    values[0] = total * inv - params_.tau;
    if (jacobian != nullptr) {
      *jacobian = (data_.negative.transpose() * w * inv).transpose();
    }
  }

 private:
  NpParams params_;
  NpData data_;
  ProblemInfo info_;
};

// Unit-norm Gaussian features: positives around +mu, negatives around -mu,
// with |mu| = separation / 2 along the all-ones direction.
inline Matrix UnitNormGaussianRows(std::mt19937_64& rng, Index rows, Index d,
                                   const Vector& mean) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix out(rows, d);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < d; ++j) out(i, j) = mean[j] + normal(rng);
    const double norm = out.row(i).norm();
    if (norm > 0.0) out.row(i) /= norm;
  }
  return out;
}

inline NeymanPearsonProblem np_generate(std::uint64_t seed,
                                        const NpParams& params = {}) {
  if (!(params.tau > 0.0 && params.tau < 1.0)) {
    throw Error("np_generate: tau must lie in (0, 1)");
  }
  if (params.d < 1 || params.n0 < 1 || params.n1 < 1) {
    throw Error("np_generate: d and class sizes must be >= 1");
  }
  std::mt19937_64 rng = MakeStream(seed, Stream::kInstance);
  const Vector mu = Vector::Constant(
      params.d, 0.5 * params.separation / std::sqrt(static_cast<double>(params.d)));
  NpData data;
  data.positive = UnitNormGaussianRows(rng, params.n0, params.d, mu);
  data.negative = UnitNormGaussianRows(rng, params.n1, params.d, -mu);
  return NeymanPearsonProblem(params, std::move(data));
}

}  // namespace pmqs

#endif  // PMQS_PROBLEMS_NEYMAN_PEARSON_HPP_
