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

#include "cotune/synthesis.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "cotune/autodiff.h"
#include "cotune/error.h"
#include "cotune/optim.h"

namespace cotune {

LinearizedModel Linearize(const ModelParams& beta,
                          std::span<const double> x_eq,
                          std::span<const double> u_eq, double dt) {
  const int n = StateDim(beta.kind), m = ControlDim(beta.kind);
  if (static_cast<int>(x_eq.size()) != n ||
      static_cast<int>(u_eq.size()) != m) {
    throw ConfigError("linearization point has the wrong dimension");
  }
  const auto next = Step(x_eq, u_eq, beta, dt);
  double residual = 0.0;
  for (int i = 0; i < n; ++i) {
    residual += (next[i] - x_eq[i]) * (next[i] - x_eq[i]);
  }
  residual = std::sqrt(residual);
  if (residual > 1e-8) {
    throw ConfigError("linearization point is not an equilibrium (residual " +
                      std::to_string(residual) + ")");
  }

  Tape tape;
  std::vector<Var> x, u, b;
  for (double v : x_eq) x.push_back(tape.Leaf(v));
  for (double v : u_eq) u.push_back(tape.Leaf(v));
  for (double v : beta.values) b.push_back(tape.Constant(v));
  const auto f = ModelStep<Var>(beta.kind, x, u, b, dt);

  LinearizedModel lin;
  lin.A.resize(n, n);
  lin.B.resize(n, m);
  for (int i = 0; i < n; ++i) {
    const GradientMap g = tape.Backward(f[i]);
    for (int j = 0; j < n; ++j) lin.A(i, j) = g[x[j]];
    for (int j = 0; j < m; ++j) lin.B(i, j) = g[u[j]];
  }
  lin.x_eq.assign(x_eq.begin(), x_eq.end());
  lin.u_eq.assign(u_eq.begin(), u_eq.end());
  return lin;
}

LqrSolution SolveDiscreteLqr(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                             const Eigen::MatrixXd& Q,
                             const Eigen::MatrixXd& R) {
  const Eigen::Index n = A.rows(), m = B.cols();
  if (A.cols() != n || B.rows() != n || Q.rows() != n || Q.cols() != n ||
      R.rows() != m || R.cols() != m) {
    throw ConfigError("lqr: inconsistent matrix dimensions");
  }
  Eigen::LLT<Eigen::MatrixXd> r_check(R);
  if (r_check.info() != Eigen::Success) {
    throw ConfigError("lqr: R must be positive definite");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> q_check(
      0.5 * (Q + Q.transpose()));
  if (q_check.eigenvalues().minCoeff() < -1e-12) {
    throw ConfigError("lqr: Q must be positive semidefinite");
  }

  constexpr int kMaxIterations = 10000;
  constexpr double kTol = 1e-10;
  Eigen::MatrixXd P = Q;
  for (int it = 1; it <= kMaxIterations; ++it) {
    const Eigen::MatrixXd S = R + B.transpose() * P * B;
    const Eigen::MatrixXd gain = S.ldlt().solve(B.transpose() * P);
    Eigen::MatrixXd next = Q + A.transpose() * (P - P * B * gain) * A;
    next = 0.5 * (next + next.transpose());
    if (!next.allFinite()) break;
    const double delta = (next - P).cwiseAbs().maxCoeff();
    P = next;
    if (delta < kTol) {
      LqrSolution sol;
      sol.P = P;
      sol.K = (R + B.transpose() * P * B).ldlt().solve(B.transpose() * P * A);
      sol.iterations = it;
      return sol;
    }
  }
  throw SynthesisError(
      "lqr: Riccati iteration did not converge; (A, B) may not be "
      "stabilizable");
}

std::vector<double> SynthesizeLqr(const Eigen::MatrixXd& A,
                                  const Eigen::MatrixXd& B,
                                  const Eigen::MatrixXd& Q,
                                  const Eigen::MatrixXd& R) {
  const Eigen::MatrixXd K = SolveDiscreteLqr(A, B, Q, R).K;
  std::vector<double> theta;
  for (Eigen::Index i = 0; i < K.rows(); ++i) {
    for (Eigen::Index j = 0; j < K.cols(); ++j) theta.push_back(K(i, j));
  }
  return theta;
}

double SpectralRadius(const Eigen::MatrixXd& M) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(M, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

std::vector<double> InitMlp(std::span<const int> arch, double init_scale,
                            std::uint64_t seed) {
  std::vector<double> theta;
  theta.reserve(ParamCount(arch));
  std::mt19937_64 rng(seed);
  for (std::size_t layer = 0; layer + 1 < arch.size(); ++layer) {
    const int in = arch[layer], out = arch[layer + 1];
    const double s = init_scale / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> dist(-s, s);
    for (int k = 0; k < in * out + out; ++k) theta.push_back(dist(rng));
  }
  return theta;
}

namespace {

// Mean task loss over the starts at the given horizon, with its gradient.
double BatchLoss(const ModelParams& nominal, const TaskSpec& task,
                 const PolicySpec& policy,
                 std::span<const std::vector<double>> starts, int horizon,
                 std::span<const double> theta, std::vector<double>& grad) {
  grad.assign(theta.size(), 0.0);
  double loss = 0.0;
  const double w = 1.0 / static_cast<double>(starts.size());
  for (const auto& x0 : starts) {
    TaskSpec t = task;
    t.x0 = x0;
    t.horizon = horizon;
    ObjectiveRequest req;
    req.beta = &nominal;
    req.policy = &policy;
    req.task = &t;
    req.theta = theta;
    const ObjectiveResult r = EvaluateObjective(req);
    loss += w * r.value;
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += w * r.grad_theta[i];
  }
  return loss;
}

}  // namespace

std::vector<double> SynthesizeMlpNominal(const ModelParams& nominal,
                                         const TaskSpec& task,
                                         const PolicySpec& policy,
                                         const MlpSynthesisOptions& options) {
  policy.Validate();
  task.Validate(StateDim(nominal.kind));
  if (policy.kind != PolicyKind::kMlp) {
    throw ConfigError("mlp synthesis needs an mlp policy");
  }
  if (options.stages < 1 || options.epochs_per_stage < 0 ||
      options.max_epochs < 0 || !(options.lr > 0)) {
    throw ConfigError("mlp synthesis: invalid budget or learning rate");
  }
  std::vector<std::vector<double>> starts = options.starts;
  if (starts.empty()) starts.push_back(task.x0);
  for (const auto& x0 : starts) {
    if (static_cast<int>(x0.size()) != policy.state_dim) {
      throw ConfigError("mlp synthesis: start state has the wrong dimension");
    }
  }

  std::vector<double> theta =
      InitMlp(policy.arch, options.init_scale, options.seed);
  AdamState adam(theta.size());
  std::vector<double> grad;
  const auto loss_at = [&](int horizon) {
    try {
      return BatchLoss(nominal, task, policy, starts, horizon, theta, grad);
    } catch (const RolloutError& e) {
      throw SynthesisError(std::string("mlp synthesis blew up: ") + e.what());
    }
  };

  double threshold = options.abs_threshold;
  if (threshold <= 0) threshold = options.rel_threshold * loss_at(task.horizon);

  for (int stage = 1; stage < options.stages; ++stage) {
    const int horizon = std::max(1, task.horizon * stage / options.stages);
    for (int epoch = 0; epoch < options.epochs_per_stage; ++epoch) {
      loss_at(horizon);
      adam.Step(theta, grad, options.lr);
    }
  }
  double loss = 0.0;
  for (int epoch = 0;; ++epoch) {
    loss = loss_at(task.horizon);
    if (loss <= threshold) break;
    if (epoch == options.max_epochs) {
      throw SynthesisError("mlp synthesis budget exhausted; final loss " +
                           std::to_string(loss) + " above threshold " +
                           std::to_string(threshold));
    }
    adam.Step(theta, grad, options.lr);
  }
  try {
    ModelRollout(nominal, policy, theta, task.x0, task.horizon, task.dt);
  } catch (const RolloutError& e) {
    throw SynthesisError(std::string("mlp nominal blows up: ") + e.what());
  }
  return theta;
}

}  // namespace cotune
