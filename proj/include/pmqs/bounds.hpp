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

#ifndef PMQS_BOUNDS_HPP_
#define PMQS_BOUNDS_HPP_

#include <algorithm>
#include <random>

#include "pmqs/core.hpp"
#include "pmqs/random.hpp"

namespace pmqs {

// Largest observed |G(x, xi)|, |grad F(x, xi)| and max_i |grad G_i(x, xi)|
// over `probes` uniform draws of (x, xi) with x in X0.
inline ProblemBounds ProbeBounds(const StochasticProblem& problem,
                                 std::mt19937_64& rng, Index probes) {
  const Index n = problem.dimension();
  const Index p = problem.num_constraints();
  ProblemBounds out;
  Vector grad(n);
  Vector values(p);
  Matrix jac(p, n);
  for (Index k = 0; k < probes; ++k) {
    const Vector x = UniformInBox(rng, problem.domain());
    const Index s = UniformIndex(rng, problem.num_samples());
    problem.SampleObjective(x, s, &grad);
    out.kappa_f = std::max(out.kappa_f, grad.norm());
    if (p > 0) {
      problem.SampleConstraints(x, s, values, &jac);
      out.nu_g = std::max(out.nu_g, values.norm());
      out.kappa_g = std::max(out.kappa_g, jac.rowwise().norm().maxCoeff());
    }
  }
  return out;
}

// Probe-based bound estimate: the probe maximum over 10^4 draws inflated by
// 10%. Used for families without analytic bounds.
inline ProblemBounds EstimateBounds(const StochasticProblem& problem,
                                    std::mt19937_64& rng,
                                    Index probes = 10000,
                                    double inflation = 1.1) {
  ProblemBounds b = ProbeBounds(problem, rng, probes);
  b.nu_g *= inflation;
  b.kappa_f *= inflation;
  b.kappa_g *= inflation;
  return b;
}

}  // namespace pmqs

#endif  // PMQS_BOUNDS_HPP_
