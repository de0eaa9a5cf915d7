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

// Nominal controller synthesis in the synthesis domain.

#ifndef COTUNE_SYNTHESIS_H_
#define COTUNE_SYNTHESIS_H_

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "cotune/dynamics.h"
#include "cotune/objectives.h"
#include "cotune/policy.h"

namespace cotune {

struct LinearizedModel {
  Eigen::MatrixXd A;  // d f / d x
  Eigen::MatrixXd B;  // d f / d u
  std::vector<double> x_eq;
  std::vector<double> u_eq;
};

// Jacobians of the discrete model at an equilibrium, column by column from
// reverse-mode sweeps. Throws ConfigError if ||f(x_eq, u_eq) - x_eq|| > 1e-8.
LinearizedModel Linearize(const ModelParams& beta,
                          std::span<const double> x_eq,
                          std::span<const double> u_eq, double dt);

struct LqrSolution {
  Eigen::MatrixXd K;  // u = -K x
  Eigen::MatrixXd P;
  int iterations = 0;
};

// Iterates the discrete Riccati map
//   P <- Q + A'(P - P B (R + B'P B)^-1 B'P) A
// from P = Q until max|dP| < 1e-10 (at most 10000 iterations). Throws
// SynthesisError when the iteration does not converge.
LqrSolution SolveDiscreteLqr(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                             const Eigen::MatrixXd& Q,
                             const Eigen::MatrixXd& R);

// Linear-policy parameters (row-major K) of the infinite-horizon LQR gain.
std::vector<double> SynthesizeLqr(const Eigen::MatrixXd& A,
                                  const Eigen::MatrixXd& B,
                                  const Eigen::MatrixXd& Q,
                                  const Eigen::MatrixXd& R);

double SpectralRadius(const Eigen::MatrixXd& M);

struct MlpSynthesisOptions {
  double lr = 1e-3;
  // Horizon curriculum: stage s < stages trains on horizon T*s/stages for
  // epochs_per_stage epochs; the last stage trains on the full horizon for
  // at most max_epochs epochs and stops at the threshold.
  int stages = 1;
  int epochs_per_stage = 100;
  int max_epochs = 3000;
  // Success once J_task falls below abs_threshold, or below
  // rel_threshold * J(theta_init) when abs_threshold <= 0.
  double abs_threshold = 0.0;
  double rel_threshold = 0.1;
  double init_scale = 1.0;  // multiplies the 1/sqrt(fan_in) init range
  std::uint64_t seed = 0;
  // Initial states trained on jointly (mean loss). Empty means task.x0.
  std::vector<std::vector<double>> starts;

  bool operator==(const MlpSynthesisOptions&) const = default;
};

// Uniform(-s, s) init with s = init_scale / sqrt(fan_in), deterministic in
// the seed.
std::vector<double> InitMlp(std::span<const int> arch, double init_scale,
                            std::uint64_t seed);

// Adam descent on the task loss of the nominal model from a seeded init.
// The threshold is tested on the full-horizon loss averaged over the starts.
// Throws SynthesisError with the final loss if the budget runs out or the
// result does not roll out finitely from task.x0.
std::vector<double> SynthesizeMlpNominal(const ModelParams& nominal,
                                         const TaskSpec& task,
                                         const PolicySpec& policy,
                                         const MlpSynthesisOptions& options);

}  // namespace cotune

#endif  // COTUNE_SYNTHESIS_H_
