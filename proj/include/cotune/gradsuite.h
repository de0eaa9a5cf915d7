// Copyright 2026 The Cotune Authors
//
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

// Finite-difference audit of rollout gradients. Each case differentiates
// J_task + J_sysid of a short closed-loop model rollout with respect to
// theta and raw beta, at a randomized point, and compares against central
// differences.

#ifndef COTUNE_GRADSUITE_H_
#define COTUNE_GRADSUITE_H_

#include <cstdint>
#include <string>
#include <vector>

#include "cotune/dynamics.h"
#include "cotune/policy.h"

namespace cotune {

struct GradSuiteOptions {
  int seeds = 20;
  int horizon = 50;
  double h = 1e-5;
  double tol = 1e-4;
  double abs_floor = 1e-8;
  bool include_mlp = true;
};

struct GradCase {
  ModelKind model = ModelKind::kCartpole;
  PolicyKind policy = PolicyKind::kLinear;
  std::uint64_t seed = 0;
  double rel_error_theta = 0.0;
  double rel_error_beta = 0.0;
  bool ok = false;
};

struct GradSuiteReport {
  std::vector<GradCase> cases;
  bool ok = true;
  double worst_rel_error = 0.0;
  double elapsed_ms = 0.0;
};

GradCase RunGradCase(ModelKind model, PolicyKind policy, std::uint64_t seed,
                     const GradSuiteOptions& options);
GradSuiteReport RunGradSuite(const GradSuiteOptions& options = {});

}  // namespace cotune

#endif  // COTUNE_GRADSUITE_H_
