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

// Tuning objectives.
//
//   task     (1/T) sum_{t=1..T} sum_i w_i (x_t,i - x*_t,i)^2
//   sysid    (1/T') sum_{t=1..T'} |x_t - x^sys_t|^2,  T' = common length
//   combined w_task * task + w_sysid * sysid on one shared model rollout
//
// Task weights default to 1; the system-identification term is unweighted.

#ifndef COTUNE_OBJECTIVES_H_
#define COTUNE_OBJECTIVES_H_

#include <span>
#include <string_view>
#include <vector>

#include "cotune/autodiff.h"
#include "cotune/dynamics.h"
#include "cotune/policy.h"

namespace cotune {

enum class TaskKind { kStabilize, kTrack };
std::string_view TaskKindName(TaskKind kind);
TaskKind ParseTaskKind(std::string_view name);

struct TaskSpec {
  TaskKind kind = TaskKind::kStabilize;
  std::vector<double> x0;
  int horizon = 250;
  double dt = 0.02;
  // One row for a constant target. For tracking, row t-1 is the target of
  // x_t and at least `horizon` rows are required.
  std::vector<std::vector<double>> reference;
  std::vector<double> weights;  // empty means all ones

  std::span<const double> Target(int t) const;
  double Weight(std::size_t i) const {
    return weights.empty() ? 1.0 : weights[i];
  }
  void Validate(int state_dim) const;
  bool operator==(const TaskSpec&) const = default;
};

// Task loss of the states x_1..x_T of a model trajectory.
double TaskCost(const TaskSpec& task,
                std::span<const std::vector<double>> states);
Var TaskCost(Tape& tape, const TaskSpec& task,
             std::span<const std::vector<Var>> states);

// Closed-loop system-identification loss. Throws ConfigError when the two
// trajectories share no step beyond x_0, or when their dt differ.
double JSysId(const Trajectory& model, const Trajectory& sys);
Var JSysId(Tape& tape, const TapedTrajectory& model, const Trajectory& sys);

// Task loss of a model rollout (plain evaluation).
double JTaskModel(const ModelParams& beta, const PolicySpec& policy,
                  std::span<const double> theta, const TaskSpec& task);

// Task loss of a recorded system trajectory. Steps missing after a blow-up
// are charged at the last recorded per-step error.
double JTaskSys(const Trajectory& sys, const TaskSpec& task);

// Weighted sum evaluated on one model rollout. Throws ConfigError if both
// weights are zero or any weight is negative.
double JCombined(const ModelParams& beta, const PolicySpec& policy,
                 std::span<const double> theta, const Trajectory& sys,
                 const TaskSpec& task, double w_task, double w_sysid);

// Value and gradients of w_task * task + w_sysid * sysid from one taped
// model rollout. Tunable entries of beta are differentiated in log
// coordinates (d/d log beta_i = beta_i d/d beta_i).
struct ObjectiveResult {
  double value = 0.0;
  double j_task = 0.0;
  double j_sysid = 0.0;  // 0 when no system trajectory is given
  std::vector<double> grad_theta;     // empty unless requested
  std::vector<double> grad_log_beta;  // one entry per tunable index
};

struct ObjectiveRequest {
  const ModelParams* beta = nullptr;
  std::span<const int> tunable;  // beta entries to differentiate
  const PolicySpec* policy = nullptr;
  std::span<const double> theta;
  bool differentiate_theta = true;
  const TaskSpec* task = nullptr;
  const Trajectory* sys = nullptr;  // required when w_sysid > 0
  double w_task = 1.0;
  double w_sysid = 0.0;
};

// Throws RolloutError if the model rollout blows up.
ObjectiveResult EvaluateObjective(const ObjectiveRequest& request);

}  // namespace cotune

#endif  // COTUNE_OBJECTIVES_H_
