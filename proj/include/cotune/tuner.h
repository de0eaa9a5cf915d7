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

// Co-tuning of simulator parameters beta and controller parameters theta.
//
// The outer loop spends exactly one system rollout per iteration: the rollout
// collected under theta_l both scores theta_l and feeds the update that
// produces (beta_{l+1}, theta_{l+1}). A final rollout scores theta_L, so a
// run with L iterations uses L + 1 system rollouts. The returned controller
// is the best-scoring iterate, which can never be worse than the nominal one.
//
// Strategies:
//   combined          joint Adam descent on w_task J_task + w_sysid J_sysid
//   split_alternate   K/2 epochs of J_sysid over beta (theta frozen), then
//                     K/2 epochs of J_task over theta (beta frozen)
//   difftune_model    theta-only descent on the nominal model
//   difftune_system   one theta update per rollout from model Jacobians
//                     evaluated along the system trajectory
//   sysid_then_tune   collect all rollouts with the nominal controller first,
//                     fit beta once, then tune theta once

#ifndef COTUNE_TUNER_H_
#define COTUNE_TUNER_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cotune/dynamics.h"
#include "cotune/objectives.h"
#include "cotune/optim.h"
#include "cotune/policy.h"

namespace cotune {

enum class Strategy {
  kCombined,
  kSplitAlternate,
  kDifftuneModel,
  kDifftuneSystem,
  kSysidThenTune,
};

std::string_view StrategyName(Strategy strategy);
Strategy ParseStrategy(std::string_view name);

struct TuningConfig {
  int outer_iterations = 5;  // L
  int inner_epochs = 100;    // K
  double lr_theta = 1e-2;
  double lr_beta = 1e-2;     // in log coordinates
  double w_task = 1.0;
  double w_sysid = 1.0;
  Strategy strategy = Strategy::kSplitAlternate;
  std::uint64_t seed = 0;
  AdamHyper adam;
  // sysid_then_tune: initial-state perturbation, as a fraction of
  // state_scale (empty means all ones).
  double sysid_perturbation = 0.1;
  std::vector<double> state_scale;

  void Validate() const;
  bool operator==(const TuningConfig&) const = default;
};

struct TuningProblem {
  ModelParams nominal;        // beta~
  std::vector<int> tunable;   // entries of beta that may move
  PolicySpec policy;
  TaskSpec task;
};

struct UpdateResult {
  ModelParams beta;
  std::vector<double> theta;
  std::vector<PhaseTrace> phases;
};

struct IterationRecord {
  int iteration = 0;
  double j_task_sys = 0.0;
  // l = 0: J_sysid(theta~, beta~) on the first rollout. l > 0: J_sysid of
  // the beta produced by the previous update, on the rollout it was fit to.
  double j_sysid = 0.0;
  std::vector<double> theta;
  std::vector<double> beta;
  std::vector<PhaseTrace> phases;
  std::string term_reason;
  Trajectory sys_traj;
  // False for sysid_then_tune collection rollouts from perturbed initial
  // states; those do not score the task and are excluded from best-tracking.
  bool scored = true;
};

struct TuningReport {
  Strategy strategy = Strategy::kSplitAlternate;
  TuningConfig config;
  std::vector<IterationRecord> iterations;
  int best_index = 0;
  std::vector<double> theta_best;
  double j_best = 0.0;
  double j_nominal = 0.0;
  int system_rollouts = 0;
};

// One combined update (joint descent on theta and log beta).
UpdateResult UpdateCombined(const TuningProblem& problem,
                            const ModelParams& beta,
                            std::span<const double> theta,
                            const Trajectory& sys, const TuningConfig& cfg);

// One split-alternate update: beta phase then theta phase, each with its own
// Adam state and stopping rule.
UpdateResult UpdateSplitAlternate(const TuningProblem& problem,
                                  const ModelParams& beta,
                                  std::span<const double> theta,
                                  const Trajectory& sys,
                                  const TuningConfig& cfg);

// Gradient of the task loss along the recorded system states, with the
// state sensitivity propagated through model Jacobians evaluated at those
// states. Equals the model BPTT gradient when system and model coincide.
std::vector<double> SensitivityGradient(const TuningProblem& problem,
                                        const ModelParams& beta,
                                        std::span<const double> theta,
                                        const Trajectory& sys);

// Iterative co-tuning with cfg.strategy in {combined, split_alternate}.
// Throws SynthesisError if theta~ does not roll out finitely on the model.
TuningReport Cotune(BlackBoxSystem& system, const TuningProblem& problem,
                    std::span<const double> theta_nominal,
                    const TuningConfig& cfg);

TuningReport DifftuneModelRollout(BlackBoxSystem& system,
                                  const TuningProblem& problem,
                                  std::span<const double> theta_nominal,
                                  const TuningConfig& cfg);

TuningReport DifftuneSystemRollout(BlackBoxSystem& system,
                                   const TuningProblem& problem,
                                   std::span<const double> theta_nominal,
                                   const TuningConfig& cfg);

TuningReport SysidThenTune(BlackBoxSystem& system, const TuningProblem& problem,
                           std::span<const double> theta_nominal,
                           const TuningConfig& cfg);

// Dispatches on cfg.strategy.
TuningReport RunStrategy(BlackBoxSystem& system, const TuningProblem& problem,
                         std::span<const double> theta_nominal,
                         const TuningConfig& cfg);

}  // namespace cotune

#endif  // COTUNE_TUNER_H_
