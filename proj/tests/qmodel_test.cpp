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

#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "pmqs/problems/qcnp.hpp"
#include "pmqs/qmodel.hpp"
#include "pmqs/random.hpp"
#include "test_support.hpp"

namespace pmqs {
namespace {

std::vector<Index> Batch(std::initializer_list<Index> s) { return {s}; }

TEST(BuildModel, InterpolatesAtAnchor) {
  const QcnpProblem problem = qcnp_generate(3);
  std::mt19937_64 rng(1);
  const Vector x = UniformInBox(rng, problem.domain());
  const Vector lambda = UniformVector(rng, problem.num_constraints(), 0.0, 2.0);
  const auto batch = Batch({7});
  const QuadraticModel m = build_model(problem, x, lambda, batch, 2.0, 0.1, 1.0);
  const auto [q0, q] = eval_model(m, x);
  Vector g;
  problem.SampleConstraints(x, 7, g, nullptr);
  EXPECT_DOUBLE_EQ(q0, problem.SampleObjective(x, 7, nullptr));
  EXPECT_LE((q - g).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_DOUBLE_EQ(q0, m.f0);
  EXPECT_EQ(q, m.q0);
}

TEST(BuildModel, ZeroMultipliersGiveTauIdentity) {
  const QcnpProblem problem = qcnp_generate(3);
  const Vector x = Vector::Zero(problem.dimension());
  const auto batch = Batch({0, 1});
  const QuadraticModel m = build_model(problem, x, Vector::Zero(problem.num_constraints()),
                                       batch, 3.5, 0.1, 1.0);
  EXPECT_EQ(m.sigma0.DiagonalEntries(), Vector::Constant(problem.dimension(), 3.5));
}

TEST(BuildModel, ConcaveConstraintMinorantIsExact) {
  // G(x) = -x^2 with L = 2: q(x) = -xt^2 - 2 xt d - d^2 = -x^2.
  const testing::ConcaveConstraint1d problem(3.0);
  for (double xt : {-2.0, -0.3, 0.0, 1.7}) {
    const auto batch = Batch({0});
    const QuadraticModel m = build_model(problem, Vector::Constant(1, xt),
                                         Vector::Zero(1), batch, 1.0, 1.0, 1.0);
    for (double x : {-3.0, -1.0, 0.4, 2.9}) {
      const double d = x - xt;
      const double q = eval_model(m, Vector::Constant(1, x)).second[0];
      EXPECT_NEAR(q, -xt * xt - 2.0 * xt * d - d * d, 1e-12);
      EXPECT_NEAR(q, -x * x, 1e-12);
    }
  }
}

TEST(EvalModel, HandArithmetic) {
  QuadraticModel m = testing::MakeModel(Vector::Zero(1), Vector::Constant(1, 1.0),
                                        2.0, Vector(0), Matrix(0, 1), {}, 1.0,
                                        0.0, 2.0, Vector(0));
  m.f0 = 0.0;
  EXPECT_DOUBLE_EQ(eval_model(m, Vector::Constant(1, 1.0)).first, 2.0);
  EXPECT_DOUBLE_EQ(eval_model(m, Vector::Zero(1)).first, 0.0);
}

TEST(EvalModel, MinorantOnQcnpSamples) {
  const QcnpProblem problem = qcnp_generate(5);
  std::mt19937_64 rng(2);
  for (int k = 0; k < 100; ++k) {
    const Vector xt = UniformInBox(rng, problem.domain());
    const Vector x = UniformInBox(rng, problem.domain());
    const Index s = UniformIndex(rng, problem.num_samples());
    const auto batch = Batch({s});
    const QuadraticModel m = build_model(
        problem, xt, Vector::Zero(problem.num_constraints()), batch, 1.0, 1.0, 1.0);
    const Vector q = eval_model(m, x).second;
    Vector g;
    problem.SampleConstraints(x, s, g, nullptr);
    for (Index i = 0; i < g.size(); ++i) {
      EXPECT_LE(q[i], g[i] + 1e-10 * std::max(1.0, std::abs(g[i])));
    }
  }
}

TEST(BuildModel, PositiveDefiniteAndLagrangianCurvatureIsTau) {
  const QcnpProblem problem = qcnp_generate(6);
  std::mt19937_64 rng(4);
  for (double margin : {0.0, 0.01}) {
    ModelOptions options;
    options.curvature_margin = margin;
    const Vector x = UniformInBox(rng, problem.domain());
    const Vector lambda = UniformVector(rng, problem.num_constraints(), 0.0, 5.0);
    const double tau = 0.7;
    const auto batch = Batch({1, 2, 3});
    const QuadraticModel m = build_model(problem, x, lambda, batch, tau, 0.1, 1.0, options);
    EXPECT_GE(m.sigma0.MinEntry(), tau);
    Vector total = m.sigma0.DiagonalEntries();
    for (Index i = 0; i < problem.num_constraints(); ++i) {
      total += lambda[i] *
               m.constraint_curvature[static_cast<std::size_t>(i)].DiagonalEntries();
    }
    EXPECT_LE((total.array() - tau).abs().maxCoeff(), 1e-12);
  }
}

TEST(BuildModel, BatchAveragingIsLinear) {
  const QcnpProblem problem = qcnp_generate(7);
  std::mt19937_64 rng(8);
  const Vector x = UniformInBox(rng, problem.domain());
  const Vector lambda = UniformVector(rng, problem.num_constraints(), 0.0, 1.0);
  const auto ab = Batch({4, 9});
  const auto a = Batch({4});
  const auto b = Batch({9});
  const QuadraticModel mab = build_model(problem, x, lambda, ab, 1.0, 0.5, 2.0);
  const QuadraticModel ma = build_model(problem, x, lambda, a, 1.0, 0.5, 2.0);
  const QuadraticModel mb = build_model(problem, x, lambda, b, 1.0, 0.5, 2.0);
  EXPECT_NEAR(mab.f0, 0.5 * (ma.f0 + mb.f0), 1e-14);
  EXPECT_LE((mab.c0 - 0.5 * (ma.c0 + mb.c0)).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LE((mab.q0 - 0.5 * (ma.q0 + mb.q0)).cwiseAbs().maxCoeff(), 1e-13);
  EXPECT_LE((mab.constraint_grads - 0.5 * (ma.constraint_grads + mb.constraint_grads))
                .cwiseAbs()
                .maxCoeff(),
            1e-14);
  EXPECT_EQ(mab.sigma0.DiagonalEntries(), ma.sigma0.DiagonalEntries());
}

TEST(BuildModel, EmpiricalHessianModeKeepsTauFloor) {
  const QcnpProblem problem = qcnp_generate(8);
  std::mt19937_64 rng(5);
  ModelOptions options;
  options.hessian_mode = HessianMode::kEmpiricalHessian;
  const Vector x = UniformInBox(rng, problem.domain());
  const Vector lambda = UniformVector(rng, problem.num_constraints(), 0.0, 1.0);
  const auto batch = Batch({0, 5});
  const QuadraticModel m = build_model(problem, x, lambda, batch, 0.01, 0.5, 1.0, options);
  Vector total = m.sigma0.DiagonalEntries();
  for (Index i = 0; i < problem.num_constraints(); ++i) {
    total += lambda[i] *
             m.constraint_curvature[static_cast<std::size_t>(i)].DiagonalEntries();
  }
  EXPECT_GE(total.minCoeff(), 0.01 - 1e-12);
}

TEST(BuildModel, RejectsBadInputs) {
  const QcnpProblem problem = qcnp_generate(1);
  const Vector x = Vector::Zero(problem.dimension());
  const Vector lambda = Vector::Zero(problem.num_constraints());
  const std::vector<Index> empty;
  const auto batch = Batch({0});
  EXPECT_THROW(build_model(problem, x, lambda, empty, 1.0, 1.0, 1.0), Error);
  EXPECT_THROW(build_model(problem, x, lambda, batch, 0.0, 1.0, 1.0), Error);
  EXPECT_THROW(build_model(problem, x, -Vector::Ones(problem.num_constraints()),
                           batch, 1.0, 1.0, 1.0),
               Error);
  EXPECT_THROW(build_model(problem, Vector::Zero(3), lambda, batch, 1.0, 1.0, 1.0),
               Error);
}

}  // namespace
}  // namespace pmqs
