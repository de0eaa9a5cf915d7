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

#include "cotune/gradsuite.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

#include "cotune/autodiff.h"
#include "cotune/objectives.h"
#include "cotune/synthesis.h"

namespace cotune {

namespace {

double BlockError(const GradCheckResult& r, std::size_t begin,
                  std::size_t end, double abs_floor) {
  double worst = 0.0;
  for (std::size_t i = begin; i < end; ++i) {
    const double err = std::abs(r.numeric[i] - r.analytic[i]);
    const double scale = std::max(std::abs(r.numeric[i]),
                                  std::abs(r.analytic[i]));
    if (err > abs_floor && scale > 0) worst = std::max(worst, err / scale);
  }
  return worst;
}

}  // namespace

GradCase RunGradCase(ModelKind model, PolicyKind policy, std::uint64_t seed,
                     const GradSuiteOptions& options) {
  std::mt19937_64 rng(seed * 0x2545f4914f6cdd1dULL + 17);
  const auto uniform = [&](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };
  const int n = StateDim(model), m = ControlDim(model);
  const double dt = 0.02;

  ModelParams beta = ModelParams::Defaults(model);
  for (double& b : beta.values) b *= uniform(0.8, 1.2);
  if (model == ModelKind::kCartpole) {
    beta.values[4] = uniform(0.01, 0.1);
    beta.values[5] = uniform(0.01, 0.1);
  }

  PolicySpec spec;
  std::vector<double> theta;
  std::vector<double> x0(n);
  if (model == ModelKind::kCartpole) {
    x0 = {uniform(-0.5, 0.5), uniform(-0.2, 0.2), uniform(-0.5, 0.5),
          uniform(-0.5, 0.5)};
  } else {
    x0 = {uniform(-1.0, 1.0), uniform(-1.0, 1.0)};
  }
  if (policy == PolicyKind::kMlp) {
    spec = PolicySpec::Mlp({n, 8, m}, 10.0);
    theta = InitMlp(spec.arch, 1.0, seed);
  } else {
    spec = PolicySpec::Linear(n, m);
    const std::vector<double> x_eq(n, 0.0), u_eq(m, 0.0);
    const LinearizedModel lin = Linearize(beta, x_eq, u_eq, dt);
    theta = SynthesizeLqr(lin.A, lin.B, Eigen::MatrixXd::Identity(n, n),
                          Eigen::MatrixXd::Identity(m, m));
    for (double& k : theta) k *= uniform(0.9, 1.1);
  }

  TaskSpec task;
  task.x0 = x0;
  task.horizon = options.horizon;
  task.dt = dt;
  task.reference = {std::vector<double>(n, 0.0)};

  ModelParams shifted = beta;
  for (double& b : shifted.values) b *= 1.2;
  const Trajectory sys =
      ModelRollout(shifted, spec, theta, x0, options.horizon, dt);

  const std::size_t nt = theta.size(), nb = beta.values.size();
  const TapeFunction fn = [&](Tape& tape, std::span<const Var> p) {
    const TapedTrajectory traj =
        RolloutOnTape(tape, model, spec, p.subspan(0, nt), p.subspan(nt, nb),
                      x0, options.horizon, dt);
    return TaskCost(tape, task, traj.states) + JSysId(tape, traj, sys);
  };
  std::vector<double> point = theta;
  point.insert(point.end(), beta.values.begin(), beta.values.end());
  const GradCheckResult r = GradCheckDetailed(fn, point, options.h,
                                              options.tol, options.abs_floor);

  GradCase c;
  c.model = model;
  c.policy = policy;
  c.seed = seed;
  c.rel_error_theta = BlockError(r, 0, nt, options.abs_floor);
  c.rel_error_beta = BlockError(r, nt, nt + nb, options.abs_floor);
  c.ok = r.ok;
  return c;
}

GradSuiteReport RunGradSuite(const GradSuiteOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  GradSuiteReport report;
  std::vector<PolicyKind> policies = {PolicyKind::kLinear};
  if (options.include_mlp) policies.push_back(PolicyKind::kMlp);
  for (ModelKind model : {ModelKind::kCartpole, ModelKind::kMsd}) {
    for (PolicyKind policy : policies) {
      for (int s = 0; s < options.seeds; ++s) {
        GradCase c = RunGradCase(model, policy, static_cast<std::uint64_t>(s),
                                 options);
        report.ok = report.ok && c.ok;
        report.worst_rel_error = std::max(
            {report.worst_rel_error, c.rel_error_theta, c.rel_error_beta});
        report.cases.push_back(c);
      }
    }
  }
  report.elapsed_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - start)
                          .count();
  return report;
}

}  // namespace cotune
