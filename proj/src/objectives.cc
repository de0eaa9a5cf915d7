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

#include "cotune/objectives.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "cotune/error.h"

namespace cotune {

std::string_view TaskKindName(TaskKind kind) {
  return kind == TaskKind::kTrack ? "track" : "stabilize";
}

TaskKind ParseTaskKind(std::string_view name) {
  if (name == "stabilize") return TaskKind::kStabilize;
  if (name == "track") return TaskKind::kTrack;
  throw ConfigError("unknown task kind '" + std::string(name) + "'");
}

std::span<const double> TaskSpec::Target(int t) const {
  if (reference.size() == 1) return reference[0];
  return reference[t - 1];
}

void TaskSpec::Validate(int state_dim) const {
  if (static_cast<int>(x0.size()) != state_dim) {
    throw ConfigError("task.x0 must have " + std::to_string(state_dim) +
                      " entries");
  }
  if (horizon < 1) throw ConfigError("task.horizon must be >= 1");
  if (!(dt > 0.0 && dt <= kMaxDt)) {
    throw ConfigError("task.dt must lie in (0, 0.05]");
  }
  if (reference.empty()) throw ConfigError("task.reference is empty");
  for (const auto& row : reference) {
    if (static_cast<int>(row.size()) != state_dim) {
      throw ConfigError("task.reference rows must have " +
                        std::to_string(state_dim) + " entries");
    }
  }
  if (kind == TaskKind::kTrack && reference.size() != 1 &&
      static_cast<int>(reference.size()) < horizon) {
    throw ConfigError("tracking reference is shorter than the horizon");
  }
  if (reference.size() > 1 && static_cast<int>(reference.size()) < horizon) {
    throw ConfigError("time-indexed reference is shorter than the horizon");
  }
  if (!weights.empty()) {
    if (static_cast<int>(weights.size()) != state_dim) {
      throw ConfigError("task.weights must match the state dimension");
    }
    for (double w : weights) {
      if (!(w >= 0.0)) throw ConfigError("task.weights must be >= 0");
    }
  }
}

// --------------------------------------------------------------------- task

double TaskCost(const TaskSpec& task,
                std::span<const std::vector<double>> states) {
  const int horizon = static_cast<int>(states.size()) - 1;
  if (horizon < 1) throw ConfigError("trajectory has no steps");
  double sum = 0.0;
  for (int t = 1; t <= horizon; ++t) {
    const auto target = task.Target(t);
    for (std::size_t i = 0; i < target.size(); ++i) {
      const double e = states[t][i] - target[i];
      sum += task.Weight(i) * e * e;
    }
  }
  return sum / horizon;
}

Var TaskCost(Tape& tape, const TaskSpec& task,
             std::span<const std::vector<Var>> states) {
  const int horizon = static_cast<int>(states.size()) - 1;
  if (horizon < 1) throw ConfigError("trajectory has no steps");
  std::vector<Var> squares;
  std::vector<double> coeff;
  squares.reserve(horizon * states[0].size());
  for (int t = 1; t <= horizon; ++t) {
    const auto target = task.Target(t);
    for (std::size_t i = 0; i < target.size(); ++i) {
      const Var e = states[t][i] - target[i];
      squares.push_back(e * e);
      coeff.push_back(task.Weight(i) / horizon);
    }
  }
  return tape.Affine(coeff, squares, 0.0);
}

double JTaskModel(const ModelParams& beta, const PolicySpec& policy,
                  std::span<const double> theta, const TaskSpec& task) {
  const Trajectory traj =
      ModelRollout(beta, policy, theta, task.x0, task.horizon, task.dt);
  return TaskCost(task, traj.states);
}

double JTaskSys(const Trajectory& sys, const TaskSpec& task) {
  if (sys.states.empty()) throw ConfigError("empty system trajectory");
  const int recorded = static_cast<int>(sys.states.size()) - 1;
  double sum = 0.0, last = 0.0;
  auto step_error = [&](int t, int row) {
    const auto target = task.Target(t);
    double e2 = 0.0;
    for (std::size_t i = 0; i < target.size(); ++i) {
      const double e = sys.states[row][i] - target[i];
      e2 += task.Weight(i) * e * e;
    }
    return e2;
  };
  // A rollout that failed before its first step is charged its initial
  // error for the whole horizon.
  if (recorded == 0) last = step_error(1, 0);
  for (int t = 1; t <= task.horizon; ++t) {
    if (t <= recorded) last = step_error(t, t);
    sum += last;
  }
  return sum / task.horizon;
}

// -------------------------------------------------------------------- sysid

namespace {

int CommonSteps(std::size_t model_states, const Trajectory& sys,
                double model_dt) {
  if (model_dt != sys.dt) {
    throw ConfigError("model and system trajectories use different dt");
  }
  const int steps =
      static_cast<int>(std::min(model_states, sys.states.size())) - 1;
  if (steps < 1) throw ConfigError("no common steps to compare");
  return steps;
}

}  // namespace

double JSysId(const Trajectory& model, const Trajectory& sys) {
  const int steps = CommonSteps(model.states.size(), sys, model.dt);
  double sum = 0.0;
  for (int t = 1; t <= steps; ++t) {
    for (std::size_t i = 0; i < model.states[t].size(); ++i) {
      const double e = model.states[t][i] - sys.states[t][i];
      sum += e * e;
    }
  }
  return sum / steps;
}

Var JSysId(Tape& tape, const TapedTrajectory& model, const Trajectory& sys) {
  const int steps = CommonSteps(model.states.size(), sys, sys.dt);
  std::vector<Var> squares;
  for (int t = 1; t <= steps; ++t) {
    for (std::size_t i = 0; i < model.states[t].size(); ++i) {
      const Var e = model.states[t][i] - sys.states[t][i];
      squares.push_back(e * e);
    }
  }
  const std::vector<double> coeff(squares.size(), 1.0 / steps);
  return tape.Affine(coeff, squares, 0.0);
}

// ----------------------------------------------------------------- combined

ObjectiveResult EvaluateObjective(const ObjectiveRequest& req) {
  if (!(req.w_task >= 0.0) || !(req.w_sysid >= 0.0)) {
    throw ConfigError("objective weights must be >= 0");
  }
  if (req.w_task == 0.0 && req.w_sysid == 0.0) {
    throw ConfigError("objective weights are both zero");
  }
  if (req.w_sysid > 0.0 && req.sys == nullptr) {
    throw ConfigError("system-identification term needs a system trajectory");
  }
  const ModelParams& beta = *req.beta;
  const TaskSpec& task = *req.task;

  Tape tape;
  const std::size_t per_step = req.policy->kind == PolicyKind::kMlp
                                   ? 4 * req.theta.size()
                                   : 200;
  tape.Reserve(task.horizon * 80 + req.theta.size(),
               task.horizon * per_step);

  std::vector<Var> theta;
  theta.reserve(req.theta.size());
  for (double v : req.theta) {
    theta.push_back(req.differentiate_theta ? tape.Leaf(v) : tape.Constant(v));
  }
  std::vector<Var> log_beta, beta_vars;
  for (std::size_t i = 0; i < beta.values.size(); ++i) {
    const double b = beta.values[i];
    if (std::find(req.tunable.begin(), req.tunable.end(),
                  static_cast<int>(i)) != req.tunable.end()) {
      if (!(b > 0.0)) {
        throw ConfigError("tunable parameters must be strictly positive");
      }
      const Var leaf = tape.Leaf(std::log(b));
      log_beta.push_back(leaf);
      // beta = exp(leaf), recorded with the exact stored value.
      beta_vars.push_back(tape.Unary(Op::kExp, leaf, b, b));
    } else {
      beta_vars.push_back(tape.Constant(b));
    }
  }

  const TapedTrajectory traj =
      RolloutOnTape(tape, beta.kind, *req.policy, theta, beta_vars, task.x0,
                    task.horizon, task.dt);
  const Var j_task = TaskCost(tape, task, traj.states);
  ObjectiveResult out;
  out.j_task = j_task.value();
  Var root;
  if (req.sys != nullptr) {
    const Var j_sysid = JSysId(tape, traj, *req.sys);
    out.j_sysid = j_sysid.value();
    const Var parts[2] = {j_task, j_sysid};
    const double w[2] = {req.w_task, req.w_sysid};
    root = tape.Affine(w, parts, 0.0);
  } else {
    const double w[1] = {req.w_task};
    root = tape.Affine(w, std::span<const Var>(&j_task, 1), 0.0);
  }
  out.value = root.value();
  const GradientMap g = tape.Backward(root);
  if (req.differentiate_theta) out.grad_theta = g.Collect(theta);
  out.grad_log_beta = g.Collect(log_beta);
  return out;
}

double JCombined(const ModelParams& beta, const PolicySpec& policy,
                 std::span<const double> theta, const Trajectory& sys,
                 const TaskSpec& task, double w_task, double w_sysid) {
  if (!(w_task >= 0.0) || !(w_sysid >= 0.0)) {
    throw ConfigError("objective weights must be >= 0");
  }
  if (w_task == 0.0 && w_sysid == 0.0) {
    throw ConfigError("objective weights are both zero");
  }
  const Trajectory model =
      ModelRollout(beta, policy, theta, task.x0, task.horizon, task.dt);
  return w_task * TaskCost(task, model.states) +
         w_sysid * JSysId(model, sys);
}

}  // namespace cotune
