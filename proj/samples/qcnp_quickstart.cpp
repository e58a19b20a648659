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

// Generates a small QCNP instance, runs the method and prints a few logged
// rows plus the randomly selected output iterate.

#include <cstdio>

#include "pmqs/driver.hpp"
#include "pmqs/problems/qcnp.hpp"

int main() {
  pmqs::QcnpParams params;
  params.n = 20;
  params.p = 10;
  params.num_samples = 50;
  const pmqs::QcnpProblem problem = pmqs::qcnp_generate(7, params);

  const pmqs::AlgoConstants constants = pmqs::compute_constants(problem);
  std::printf("gamma1=%.4g gamma2=%.4g beta=%.4g kappa_sigma=%.4g\n",
              constants.gamma1, constants.gamma2, constants.beta,
              constants.kappa_sigma);

  const pmqs::ParamSchedule schedule =
      pmqs::schedule_params(2000, 1.0, pmqs::ScheduleMode::kTheorem);
  pmqs::RunSettings settings;
  settings.start = pmqs::StartPoint::kCenter;
  settings.log_points = 8;
  settings.retain_iterates = true;
  const pmqs::RunRecord record = pmqs::run_pmqsopt(problem, schedule, settings, 7);

  std::printf("%8s %14s %14s %14s\n", "t", "objective", "feasibility", "r_kkt_sq");
  for (const pmqs::RunRow& row : record.rows) {
    std::printf("%8lld %14.6g %14.6g %14.6g\n", static_cast<long long>(row.t),
                row.objective, row.feasibility, row.r_kkt_sq.value_or(0.0));
  }
  const pmqs::SelectedOutput out = pmqs::select_output(record, 7);
  std::printf("selected iterate R=%lld, |lambda|=%.4g\n",
              static_cast<long long>(out.r), out.lambda.norm());
  return 0;
}
