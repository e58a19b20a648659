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

// Synthetic quadratically constrained nonconvex problem (QCNP):
//
//   min_{|x|_inf <= R} f(x) = 1/N sum_s log(1 + |H_s x - c_s|^2 / 2)
//   s.t. g_i(x) = 1/N sum_s [a_is' (x - xbar) + 1/2 (x - xbar)' Q_is (x - xbar)] <= 0
//
// with H_s entries N(0, 1/n), c_s = H_s 1, a_is entries U[0.5, 0.7], diagonal
// Q_is entries U[-q_max, q_max] and xbar entries U[-1.5, -0.5]. Every
// constraint vanishes at xbar, and xfeas = xbar - 0.5 is strictly feasible.
//
// Weak-convexity moduli. With r = H x - c and u = |r|^2 / 2 the Hessian of
// log(1 + u) is H' [I / (1 + u) - r r' / (1 + u)^2] H. The bracket has
// eigenvalue 1 / (1 + u) off r and (1 - u) / (1 + u)^2 along r, which is
// minimized at u = 3 with value -1/8. Hence the Hessian is bounded below by
// -|H|_2^2 / 8 and L_0 = max_s |H_s|_2^2 / 8. The constraint Hessians are the
// constant Q_is, so L_i = max_{s, j} [-Q_is,jj]_+.
//
// Bounds over the box are separable per coordinate and computed exactly per
// (i, s): |G_i| <= sum_j max |a_j delta_j + q_j delta_j^2 / 2| and
// |grad G_i|^2 <= sum_j max (a_j + q_j delta_j)^2 over delta_j in
// [-R - xbar_j, R - xbar_j]; |grad F| <= |H_s|_2 max_v v / (1 + v^2 / 2) =
// |H_s|_2 / sqrt(2).

#ifndef PMQS_PROBLEMS_QCNP_HPP_
#define PMQS_PROBLEMS_QCNP_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "pmqs/core.hpp"
#include "pmqs/random.hpp"

namespace pmqs {

struct QcnpParams {
  Index n = 50;
  Index p = 50;
  Index num_samples = 100;
  Index m = 5;
  double radius = 10.0;
  double q_max = 0.05;
  double a_lo = 0.5;
  double a_hi = 0.7;
  double xbar_lo = -1.5;
  double xbar_hi = -0.5;
};

struct QcnpData {
  std::vector<Matrix> h;        // N matrices, m x n
  std::vector<Vector> c;        // N vectors, m
  std::vector<Matrix> a;        // N matrices, p x n (row i = a_is)
  std::vector<Matrix> q_diag;   // N matrices, p x n (row i = diag Q_is)
  Vector xbar;
  Vector xfeas;
  Vector xobj;
};

class QcnpProblem final : public StochasticProblem {
 public:
  QcnpProblem(QcnpParams params, QcnpData data)
      : params_(params), data_(std::move(data)) {
    Validate();
    info_.family = "qcnp";
    info_.domain = BoxDomain(params_.radius, params_.n);
    a_mean_.setZero(params_.p, params_.n);
    q_mean_.setZero(params_.p, params_.n);
    for (Index s = 0; s < params_.num_samples; ++s) {
      a_mean_ += data_.a[static_cast<std::size_t>(s)];
      q_mean_ += data_.q_diag[static_cast<std::size_t>(s)];
    }
    a_mean_ /= static_cast<double>(params_.num_samples);
    q_mean_ /= static_cast<double>(params_.num_samples);
    ComputeModuliAndBounds();
    Vector g;
    Constraints(data_.xfeas, g, nullptr);
    info_.slater = SlaterData{data_.xfeas, params_.p > 0 ? -g.maxCoeff() : 1.0};
  }

  const ProblemInfo& info() const override { return info_; }
  Index num_constraints() const override { return params_.p; }
  Index num_samples() const override { return params_.num_samples; }
  const QcnpParams& params() const { return params_; }
  const QcnpData& data() const { return data_; }

  double SampleObjective(const Vector& x, Index s, Vector* grad) const override {
    const Matrix& h = data_.h[static_cast<std::size_t>(s)];
    const Vector r = h * x - data_.c[static_cast<std::size_t>(s)];
    const double u = 0.5 * r.squaredNorm();
    if (grad != nullptr) *grad = h.transpose() * r / (1.0 + u);
    return std::log1p(u);
  }

  void SampleConstraints(const Vector& x, Index s, Vector& values,
                         Matrix* jacobian) const override {
    Evaluate(data_.a[static_cast<std::size_t>(s)],
             data_.q_diag[static_cast<std::size_t>(s)], x, values, jacobian);
  }

  std::optional<Vector> SampleObjectiveHessianDiag(const Vector& x,
                                                   Index s) const override {
    const Matrix& h = data_.h[static_cast<std::size_t>(s)];
    const Vector r = h * x - data_.c[static_cast<std::size_t>(s)];
    const double w = 1.0 + 0.5 * r.squaredNorm();
    const Vector htr = h.transpose() * r;
    return Vector(h.colwise().squaredNorm().transpose() / w -
                  htr.cwiseProduct(htr) / (w * w));
  }

  void Constraints(const Vector& x, Vector& values,
                   Matrix* jacobian) const override {
    Evaluate(a_mean_, q_mean_, x, values, jacobian);
  }

 private:
  void Validate() const {
    const auto n = params_.n, p = params_.p, m = params_.m;
    const auto big_n = static_cast<std::size_t>(params_.num_samples);
    if (n < 1 || p < 0 || m < 1 || params_.num_samples < 1) {
      throw Error("QcnpProblem: invalid sizes");
    }
    if (data_.h.size() != big_n || data_.c.size() != big_n ||
        data_.a.size() != big_n || data_.q_diag.size() != big_n) {
      throw Error("QcnpProblem: per-sample data must have N entries");
    }
    for (std::size_t s = 0; s < big_n; ++s) {
      if (data_.h[s].rows() != m || data_.h[s].cols() != n ||
          data_.c[s].size() != m || data_.a[s].rows() != p ||
          data_.a[s].cols() != n || data_.q_diag[s].rows() != p ||
          data_.q_diag[s].cols() != n) {
        throw Error("QcnpProblem: sample " + std::to_string(s) +
                    " has inconsistent shapes");
      }
    }
    RequireSize(data_.xbar, n, "QcnpProblem xbar");
    RequireSize(data_.xfeas, n, "QcnpProblem xfeas");
  }

  void Evaluate(const Matrix& a, const Matrix& q, const Vector& x,
                Vector& values, Matrix* jacobian) const {
    const Vector delta = x - data_.xbar;
    values = a * delta + 0.5 * q * delta.cwiseProduct(delta);
    if (jacobian != nullptr) {
      *jacobian = a + (q.array().rowwise() * delta.transpose().array()).matrix();
    }
  }

  void ComputeModuliAndBounds() {
    const Index n = params_.n, p = params_.p;
    const double radius = params_.radius;
    info_.moduli.setZero(p + 1);
    ProblemBounds b;
    for (Index s = 0; s < params_.num_samples; ++s) {
      const Matrix& h = data_.h[static_cast<std::size_t>(s)];
      const Matrix hht = h * h.transpose();
      const double h_norm_sq =
          Eigen::SelfAdjointEigenSolver<Matrix>(hht, Eigen::EigenvaluesOnly)
              .eigenvalues()
              .maxCoeff();
      info_.moduli[0] = std::max(info_.moduli[0], h_norm_sq / 8.0);
      b.kappa_f = std::max(b.kappa_f, std::sqrt(h_norm_sq / 2.0));

      const Matrix& a = data_.a[static_cast<std::size_t>(s)];
      const Matrix& q = data_.q_diag[static_cast<std::size_t>(s)];
      double value_sq = 0.0;
      for (Index i = 0; i < p; ++i) {
        double value_bound = 0.0;
        double grad_sq = 0.0;
        for (Index j = 0; j < n; ++j) {
          const double aj = a(i, j);
          const double qj = q(i, j);
          const double lo = -radius - data_.xbar[j];
          const double hi = radius - data_.xbar[j];
          auto term = [&](double d) { return std::abs(aj * d + 0.5 * qj * d * d); };
          double vmax = std::max(term(lo), term(hi));
          if (qj != 0.0) {
            const double vertex = -aj / qj;
            if (vertex > lo && vertex < hi) vmax = std::max(vmax, term(vertex));
          }
          value_bound += vmax;
          const double gmax =
              std::max(std::abs(aj + qj * lo), std::abs(aj + qj * hi));
          grad_sq += gmax * gmax;
          info_.moduli[i + 1] = std::max(info_.moduli[i + 1], -qj);
        }
        value_sq += value_bound * value_bound;
        b.kappa_g = std::max(b.kappa_g, std::sqrt(grad_sq));
      }
      b.nu_g = std::max(b.nu_g, std::sqrt(value_sq));
    }
    info_.bounds = b;
  }

  QcnpParams params_;
  QcnpData data_;
  ProblemInfo info_;
  Matrix a_mean_;
  Matrix q_mean_;
};

inline QcnpProblem qcnp_generate(std::uint64_t seed,
                                 const QcnpParams& params = {}) {
  if (params.n < 1 || params.p < 0 || params.num_samples < 1 || params.m < 1) {
    throw Error("qcnp_generate: n, N, m must be >= 1 and p >= 0");
  }
  if (!(params.radius > 0.0) || params.q_max < 0.0 ||
      params.a_lo > params.a_hi || params.xbar_lo > params.xbar_hi) {
    throw Error("qcnp_generate: invalid parameter ranges");
  }
  std::mt19937_64 rng = MakeStream(seed, Stream::kInstance);
  const Index n = params.n, p = params.p, m = params.m;
  QcnpData data;
  data.xbar = UniformVector(rng, n, params.xbar_lo, params.xbar_hi);
  data.xfeas = data.xbar - Vector::Constant(n, 0.5);
  data.xobj = Vector::Ones(n);

  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(n)));
  std::uniform_real_distribution<double> a_dist(params.a_lo, params.a_hi);
  std::uniform_real_distribution<double> q_dist(-params.q_max, params.q_max);
  const auto big_n = static_cast<std::size_t>(params.num_samples);
  data.h.reserve(big_n);
  data.c.reserve(big_n);
  data.a.reserve(big_n);
  data.q_diag.reserve(big_n);
  for (std::size_t s = 0; s < big_n; ++s) {
    Matrix h(m, n);
    for (Index j = 0; j < n; ++j) {
      for (Index k = 0; k < m; ++k) h(k, j) = normal(rng);
    }
    data.c.push_back(h * data.xobj);
    data.h.push_back(std::move(h));
  }
  for (std::size_t s = 0; s < big_n; ++s) {
    Matrix a(p, n);
    Matrix q(p, n);
    for (Index i = 0; i < p; ++i) {
      for (Index j = 0; j < n; ++j) a(i, j) = a_dist(rng);
    }
    for (Index i = 0; i < p; ++i) {
      for (Index j = 0; j < n; ++j) q(i, j) = q_dist(rng);
    }
    data.a.push_back(std::move(a));
    data.q_diag.push_back(std::move(q));
  }
  return QcnpProblem(params, std::move(data));
}

}  // namespace pmqs

#endif  // PMQS_PROBLEMS_QCNP_HPP_
