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

// Declarative experiment configuration (YAML).
//
//   experiment: fig5b
//   system:     {kind, factors: {name: f}, noise_std, integrator, seed}
//   model:      {nominal: {name: value}, tunable: [names]}
//   controller: {kind, synthesis, arch, u_max, reference, theta, lqr, mlp}
//   task:       {kind, x0, x0_jitter, horizon, dt, reference, weights}
//   tuning:     {outer_iterations, inner_epochs, lr_theta, lr_beta, ...}
//   run:        {strategies, seeds, output, record_wall_time, threads,
//                dump_trajectories}
//
// Every block except `experiment` is optional. Unknown keys are errors.

#ifndef COTUNE_CONFIG_H_
#define COTUNE_CONFIG_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cotune/dynamics.h"
#include "cotune/objectives.h"
#include "cotune/policy.h"
#include "cotune/synthesis.h"
#include "cotune/tuner.h"

namespace cotune {

using NamedValues = std::vector<std::pair<std::string, double>>;

struct SystemBlock {
  ModelKind kind = ModelKind::kCartpole;
  NamedValues factors;            // beta_true = factor * beta_nominal
  std::vector<double> noise_std;  // empty means noiseless
  Integrator integrator = Integrator::kRk4;
  std::uint64_t seed = 0;         // added to the run seed for the noise RNG

  bool operator==(const SystemBlock&) const = default;
};

struct ModelBlock {
  NamedValues nominal;  // overrides of the built-in defaults
  std::vector<std::string> tunable;

  bool operator==(const ModelBlock&) const = default;
};

enum class SynthesisKind { kLqr, kMlp, kExplicit };
std::string_view SynthesisKindName(SynthesisKind kind);
SynthesisKind ParseSynthesisKind(std::string_view name);

struct LqrBlock {
  std::vector<double> q;  // diagonal of Q; empty means identity
  std::vector<double> r;  // diagonal of R; empty means identity

  bool operator==(const LqrBlock&) const = default;
};

struct ControllerBlock {
  PolicyKind kind = PolicyKind::kLinear;
  SynthesisKind synthesis = SynthesisKind::kLqr;
  std::vector<int> arch;
  double u_max = 0.0;
  std::vector<double> reference;  // pd set-point
  std::vector<double> theta;      // explicit parameters
  LqrBlock lqr;
  MlpSynthesisOptions mlp;

  bool operator==(const ControllerBlock&) const = default;
};

struct TaskBlock {
  TaskSpec spec;
  // Per-seed initial-state jitter: x0 + x0_jitter * uniform(-1, 1).
  std::vector<double> x0_jitter;

  bool operator==(const TaskBlock&) const = default;
};

struct RunBlock {
  std::vector<Strategy> strategies = {Strategy::kSplitAlternate};
  std::vector<std::uint64_t> seeds = {0};
  std::string output = "results";
  bool record_wall_time = false;
  int threads = 1;
  bool dump_trajectories = true;

  bool operator==(const RunBlock&) const = default;
};

struct ExperimentConfig {
  std::string experiment;
  SystemBlock system;
  ModelBlock model;
  ControllerBlock controller;
  TaskBlock task;
  TuningConfig tuning;
  RunBlock run;

  ModelParams Nominal() const;
  ModelParams Truth() const;
  PolicySpec Policy() const;
  std::vector<int> Tunable() const;
  // Task of one seed: x0 jittered from a stream derived from the seed.
  TaskSpec TaskForSeed(std::uint64_t seed) const;

  bool operator==(const ExperimentConfig&) const = default;
};

// Parses and validates. Syntax errors report the line; semantic errors
// report the field path. All violations are listed in one ConfigError.
ExperimentConfig ParseConfig(std::string_view text,
                             std::string_view source = "<config>");
ExperimentConfig LoadConfig(const std::string& path);

// Emits every field explicitly; ParseConfig(DumpConfig(c)) == c.
std::string DumpConfig(const ExperimentConfig& config);

// Throws ConfigError listing every violation.
void ValidateConfig(const ExperimentConfig& config);

}  // namespace cotune

#endif  // COTUNE_CONFIG_H_
