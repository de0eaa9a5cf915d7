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

#include "cotune/tuner.h"

#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <utility>

#include "cotune/error.h"

namespace cotune {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using Updater = std::function<UpdateResult(const ModelParams&,
                                           std::span<const double>,
                                           const Trajectory&)>;

std::vector<double> LogBeta(const ModelParams& beta,
                            std::span<const int> tunable) {
  std::vector<double> out;
  for (int i : tunable) out.push_back(std::log(beta.values[i]));
  return out;
}

// Writes exp(log) back into the tunable entries. Entries whose log value did
// not move keep their stored value bit for bit.
ModelParams WithLogBeta(const ModelParams& beta, std::span<const int> tunable,
                        std::span<const double> logs) {
  ModelParams out = beta;
  for (std::size_t k = 0; k < tunable.size(); ++k) {
    const int i = tunable[k];
    if (logs[k] != std::log(beta.values[i])) out.values[i] = std::exp(logs[k]);
  }
  return out;
}

double SafeJSysId(const ModelParams& beta, const PolicySpec& policy,
                  std::span<const double> theta, const TaskSpec& task,
                  const Trajectory& sys) {
  try {
    const Trajectory model =
        ModelRollout(beta, policy, theta, task.x0, task.horizon, task.dt);
    return JSysId(model, sys);
  } catch (const RolloutError&) {
    return kInf;
  } catch (const DomainError&) {
    return kInf;
  }
}

std::string JoinReasons(const std::vector<PhaseTrace>& phases) {
  std::string out;
  for (const auto& p : phases) {
    if (!out.empty()) out += ';';
    out += p.name + ':' + p.reason;
  }
  return out;
}

// Theta-only descent on J_task(theta, beta) with beta frozen.
PhaseTrace ThetaPhase(const TuningProblem& problem, const ModelParams& beta,
                      std::vector<double>& theta, const TuningConfig& cfg,
                      int max_updates, std::string name) {
  PhaseOptions opt;
  opt.name = std::move(name);
  opt.max_updates = max_updates;
  opt.lr.assign(theta.size(), cfg.lr_theta);
  opt.hyper = cfg.adam;
  opt.project = [&](std::span<double> p) { ProjectTheta(problem.policy, p); };
  auto objective = [&](std::span<const double> p, std::vector<double>& grad) {
    ObjectiveRequest req;
    req.beta = &beta;
    req.policy = &problem.policy;
    req.theta = p;
    req.task = &problem.task;
    req.w_task = 1.0;
    ObjectiveResult r = EvaluateObjective(req);
    grad = std::move(r.grad_theta);
    return r.value;
  };
  return Descend(objective, theta, opt);
}

// Fits the tunable entries of beta to one or more system rollouts, each paired
// with the task (initial state) it was collected from. The objective is the
// mean J_sysid over the rollouts.
PhaseTrace BetaPhase(const TuningProblem& problem, ModelParams& beta,
                     std::span<const double> theta,
                     std::span<const Trajectory> rollouts,
                     std::span<const TaskSpec> tasks, const TuningConfig& cfg,
                     int max_updates) {
  PhaseTrace skipped;
  skipped.name = "sysid";
  skipped.reason = "skipped";
  if (problem.tunable.empty()) return skipped;

  const ModelParams start = beta;
  std::vector<double> logs = LogBeta(beta, problem.tunable);
  PhaseOptions opt;
  opt.name = "sysid";
  opt.max_updates = max_updates;
  opt.lr.assign(logs.size(), cfg.lr_beta);
  opt.hyper = cfg.adam;
  auto objective = [&](std::span<const double> p, std::vector<double>& grad) {
    const ModelParams candidate = WithLogBeta(start, problem.tunable, p);
    grad.assign(p.size(), 0.0);
    double value = 0.0;
    for (std::size_t i = 0; i < rollouts.size(); ++i) {
      ObjectiveRequest req;
      req.beta = &candidate;
      req.tunable = problem.tunable;
      req.policy = &problem.policy;
      req.theta = theta;
      req.differentiate_theta = false;
      req.task = &tasks[i];
      req.sys = &rollouts[i];
      req.w_task = 0.0;
      req.w_sysid = 1.0;
      const ObjectiveResult r = EvaluateObjective(req);
      value += r.value / rollouts.size();
      for (std::size_t k = 0; k < grad.size(); ++k) {
        grad[k] += r.grad_log_beta[k] / rollouts.size();
      }
    }
    return value;
  };
  PhaseTrace trace = Descend(objective, logs, opt);
  beta = WithLogBeta(start, problem.tunable, logs);
  return trace;
}

void CheckNominal(const TuningProblem& problem,
                  std::span<const double> theta) {
  try {
    ModelRollout(problem.nominal, problem.policy, theta, problem.task.x0,
                 problem.task.horizon, problem.task.dt);
  } catch (const Error& e) {
    throw SynthesisError(
        std::string("nominal controller does not roll out on the model: ") +
        e.what());
  }
}

void PickBest(TuningReport& report) {
  report.best_index = 0;
  report.j_best = kInf;
  for (std::size_t l = 0; l < report.iterations.size(); ++l) {
    const auto& rec = report.iterations[l];
    if (!rec.scored) continue;
    if (rec.j_task_sys <= report.j_best) {
      report.j_best = rec.j_task_sys;
      report.best_index = static_cast<int>(l);
    }
  }
  report.theta_best = report.iterations[report.best_index].theta;
  report.j_nominal = report.iterations.front().j_task_sys;
}

IterationRecord Collect(BlackBoxSystem& system, const TuningProblem& problem,
                        std::span<const double> theta, const ModelParams& beta,
                        int iteration, TuningReport& report) {
  IterationRecord rec;
  rec.iteration = iteration;
  rec.theta.assign(theta.begin(), theta.end());
  rec.beta = beta.values;
  rec.sys_traj = system.Rollout(problem.policy, theta, problem.task.x0,
                                problem.task.horizon, problem.task.dt);
  ++report.system_rollouts;
  rec.j_task_sys = JTaskSys(rec.sys_traj, problem.task);
  return rec;
}

// Outer loop shared by every iterative strategy.
TuningReport OuterLoop(BlackBoxSystem& system, const TuningProblem& problem,
                       std::span<const double> theta_nominal,
                       const TuningConfig& cfg, const Updater& update) {
  cfg.Validate();
  problem.policy.Validate();
  problem.task.Validate(StateDim(problem.nominal.kind));
  CheckNominal(problem, theta_nominal);

  TuningReport report;
  report.strategy = cfg.strategy;
  report.config = cfg;
  ModelParams beta = problem.nominal;
  std::vector<double> theta(theta_nominal.begin(), theta_nominal.end());

  IterationRecord rec = Collect(system, problem, theta, beta, 0, report);
  rec.term_reason = "nominal";
  rec.j_sysid =
      SafeJSysId(beta, problem.policy, theta, problem.task, rec.sys_traj);
  for (int l = 0; l < cfg.outer_iterations; ++l) {
    const Trajectory sys = rec.sys_traj;
    const std::vector<double> theta_l = theta;
    report.iterations.push_back(std::move(rec));
    UpdateResult up = update(beta, theta, sys);
    beta = std::move(up.beta);
    theta = std::move(up.theta);
    rec = Collect(system, problem, theta, beta, l + 1, report);
    rec.phases = std::move(up.phases);
    rec.term_reason = JoinReasons(rec.phases);
    rec.j_sysid = SafeJSysId(beta, problem.policy, theta_l, problem.task, sys);
  }
  report.iterations.push_back(std::move(rec));
  PickBest(report);
  return report;
}

}  // namespace

std::string_view StrategyName(Strategy strategy) {
  switch (strategy) {
    case Strategy::kCombined: return "combined";
    case Strategy::kSplitAlternate: return "split_alternate";
    case Strategy::kDifftuneModel: return "difftune_model";
    case Strategy::kDifftuneSystem: return "difftune_system";
    case Strategy::kSysidThenTune: return "sysid_then_tune";
  }
  return "unknown";
}

Strategy ParseStrategy(std::string_view name) {
  for (Strategy s : {Strategy::kCombined, Strategy::kSplitAlternate,
                     Strategy::kDifftuneModel, Strategy::kDifftuneSystem,
                     Strategy::kSysidThenTune}) {
    if (StrategyName(s) == name) return s;
  }
  throw ConfigError("unknown strategy '" + std::string(name) + "'");
}

void TuningConfig::Validate() const {
  if (outer_iterations < 0) throw ConfigError("tuning.L must be >= 0");
  if (inner_epochs < 1) throw ConfigError("tuning.K must be >= 1");
  if (!(lr_theta > 0) || !(lr_beta > 0)) {
    throw ConfigError("learning rates must be > 0");
  }
  if (!(w_task >= 0) || !(w_sysid >= 0) || (w_task == 0 && w_sysid == 0)) {
    throw ConfigError("tuning weights must be >= 0 and not both zero");
  }
  if (!(sysid_perturbation >= 0)) {
    throw ConfigError("sysid_perturbation must be >= 0");
  }
}

// ------------------------------------------------------------------ updates

UpdateResult UpdateCombined(const TuningProblem& problem,
                            const ModelParams& beta,
                            std::span<const double> theta,
                            const Trajectory& sys, const TuningConfig& cfg) {
  const std::size_t n_theta = theta.size();
  std::vector<double> params(theta.begin(), theta.end());
  const std::vector<double> logs = LogBeta(beta, problem.tunable);
  params.insert(params.end(), logs.begin(), logs.end());

  PhaseOptions opt;
  opt.name = "combined";
  opt.max_updates = cfg.inner_epochs;
  opt.lr.assign(n_theta, cfg.lr_theta);
  opt.lr.resize(params.size(), cfg.lr_beta);
  opt.hyper = cfg.adam;
  opt.project = [&](std::span<double> p) {
    ProjectTheta(problem.policy, p.first(n_theta));
  };
  auto objective = [&](std::span<const double> p, std::vector<double>& grad) {
    const ModelParams candidate =
        WithLogBeta(beta, problem.tunable, p.subspan(n_theta));
    ObjectiveRequest req;
    req.beta = &candidate;
    req.tunable = problem.tunable;
    req.policy = &problem.policy;
    req.theta = p.first(n_theta);
    req.task = &problem.task;
    req.sys = &sys;
    req.w_task = cfg.w_task;
    req.w_sysid = cfg.w_sysid;
    ObjectiveResult r = EvaluateObjective(req);
    grad = std::move(r.grad_theta);
    grad.insert(grad.end(), r.grad_log_beta.begin(), r.grad_log_beta.end());
    return r.value;
  };
  UpdateResult out;
  out.phases.push_back(Descend(objective, params, opt));
  out.theta.assign(params.begin(), params.begin() + n_theta);
  out.beta = WithLogBeta(
      beta, problem.tunable,
      std::span<const double>(params).subspan(n_theta));
  return out;
}

UpdateResult UpdateSplitAlternate(const TuningProblem& problem,
                                  const ModelParams& beta,
                                  std::span<const double> theta,
                                  const Trajectory& sys,
                                  const TuningConfig& cfg) {
  const int beta_epochs = cfg.inner_epochs / 2;
  const int theta_epochs = cfg.inner_epochs - beta_epochs;
  UpdateResult out;
  out.beta = beta;
  out.theta.assign(theta.begin(), theta.end());
  out.phases.push_back(BetaPhase(problem, out.beta, theta,
                                 std::span<const Trajectory>(&sys, 1),
                                 std::span<const TaskSpec>(&problem.task, 1),
                                 cfg, beta_epochs));
  out.phases.push_back(
      ThetaPhase(problem, out.beta, out.theta, cfg, theta_epochs, "task"));
  return out;
}

std::vector<double> SensitivityGradient(const TuningProblem& problem,
                                        const ModelParams& beta,
                                        std::span<const double> theta,
                                        const Trajectory& sys) {
  const int steps = sys.steps();
  if (steps < 1) throw ConfigError("system trajectory has no steps");
  const TaskSpec& task = problem.task;
  Tape tape;
  std::vector<Var> th, b;
  for (double v : theta) th.push_back(tape.Leaf(v));
  for (double v : beta.values) b.push_back(tape.Constant(v));
  // Each state node carries the system's recorded value while its
  // derivative follows the model: x_{t+1} = f(x_t, pi(x_t)) + (x^sys - f).
  std::vector<std::vector<Var>> states;
  std::vector<Var> x;
  for (double v : sys.states[0]) x.push_back(tape.Constant(v));
  states.push_back(x);
  for (int t = 0; t < steps; ++t) {
    const auto u = EvaluatePolicy<Var>(problem.policy, states.back(), th);
    const auto f = ModelStep<Var>(beta.kind, states.back(), u, b, task.dt);
    std::vector<Var> next;
    for (std::size_t i = 0; i < f.size(); ++i) {
      next.push_back(tape.Unary(Op::kAdd, f[i], sys.states[t + 1][i], 1.0));
    }
    states.push_back(std::move(next));
  }
  const Var loss = TaskCost(tape, task, states);
  return tape.Backward(loss).Collect(th);
}

// ------------------------------------------------------------- strategies

TuningReport Cotune(BlackBoxSystem& system, const TuningProblem& problem,
                    std::span<const double> theta_nominal,
                    const TuningConfig& cfg) {
  if (cfg.strategy != Strategy::kCombined &&
      cfg.strategy != Strategy::kSplitAlternate) {
    throw ConfigError("cotune runs the combined or split_alternate strategy");
  }
  Updater update = [&](const ModelParams& beta, std::span<const double> theta,
                       const Trajectory& sys) {
    return cfg.strategy == Strategy::kCombined
               ? UpdateCombined(problem, beta, theta, sys, cfg)
               : UpdateSplitAlternate(problem, beta, theta, sys, cfg);
  };
  return OuterLoop(system, problem, theta_nominal, cfg, update);
}

TuningReport DifftuneModelRollout(BlackBoxSystem& system,
                                  const TuningProblem& problem,
                                  std::span<const double> theta_nominal,
                                  const TuningConfig& cfg) {
  TuningConfig c = cfg;
  c.strategy = Strategy::kDifftuneModel;
  Updater update = [&](const ModelParams& beta, std::span<const double> theta,
                       const Trajectory&) {
    UpdateResult out;
    out.beta = beta;
    out.theta.assign(theta.begin(), theta.end());
    out.phases.push_back(
        ThetaPhase(problem, beta, out.theta, c, c.inner_epochs, "task"));
    return out;
  };
  return OuterLoop(system, problem, theta_nominal, c, update);
}

TuningReport DifftuneSystemRollout(BlackBoxSystem& system,
                                   const TuningProblem& problem,
                                   std::span<const double> theta_nominal,
                                   const TuningConfig& cfg) {
  TuningConfig c = cfg;
  c.strategy = Strategy::kDifftuneSystem;
  Updater update = [&](const ModelParams& beta, std::span<const double> theta,
                       const Trajectory& sys) {
    UpdateResult out;
    out.beta = beta;
    out.theta.assign(theta.begin(), theta.end());
    PhaseTrace trace;
    trace.name = "sensitivity";
    trace.final_loss = JTaskSys(sys, problem.task);
    trace.losses.push_back(trace.final_loss);
    std::vector<double> grad;
    try {
      grad = SensitivityGradient(problem, beta, theta, sys);
    } catch (const DomainError&) {
      trace.reason = "blowup@0";
      out.phases.push_back(trace);
      return out;
    }
    bool finite = true;
    for (double g : grad) finite = finite && std::isfinite(g);
    if (!finite || sys.steps() < 1) {
      trace.reason = "blowup@0";
    } else {
      AdamState adam(theta.size(), c.adam);
      adam.Step(out.theta, grad, c.lr_theta);
      ProjectTheta(problem.policy, out.theta);
      trace.updates = 1;
      trace.reason = "single_update";
    }
    out.phases.push_back(trace);
    return out;
  };
  return OuterLoop(system, problem, theta_nominal, c, update);
}

TuningReport SysidThenTune(BlackBoxSystem& system, const TuningProblem& problem,
                           std::span<const double> theta_nominal,
                           const TuningConfig& cfg) {
  cfg.Validate();
  problem.policy.Validate();
  const int n = StateDim(problem.nominal.kind);
  problem.task.Validate(n);
  CheckNominal(problem, theta_nominal);
  if (!cfg.state_scale.empty() && static_cast<int>(cfg.state_scale.size()) != n) {
    throw ConfigError("state_scale must match the state dimension");
  }

  TuningReport report;
  report.strategy = Strategy::kSysidThenTune;
  report.config = cfg;
  report.config.strategy = Strategy::kSysidThenTune;
  const int L = cfg.outer_iterations;
  const std::vector<double> theta0(theta_nominal.begin(), theta_nominal.end());

  // Phase A: rollout 0 from the nominal initial state (it also scores the
  // nominal controller), rollouts 1..L-1 from perturbed initial states.
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::vector<Trajectory> rollouts;
  std::vector<TaskSpec> tasks;
  const int collections = std::max(L, 1);
  for (int i = 0; i < collections; ++i) {
    TaskSpec task = problem.task;
    if (i > 0) {
      for (int d = 0; d < n; ++d) {
        const double scale = cfg.state_scale.empty() ? 1.0 : cfg.state_scale[d];
        task.x0[d] += cfg.sysid_perturbation * scale * unit(rng);
      }
    }
    IterationRecord rec;
    rec.iteration = i;
    rec.theta = theta0;
    rec.beta = problem.nominal.values;
    rec.sys_traj = system.Rollout(problem.policy, theta0, task.x0,
                                  task.horizon, task.dt);
    ++report.system_rollouts;
    rec.j_task_sys = JTaskSys(rec.sys_traj, task);
    rec.j_sysid = SafeJSysId(problem.nominal, problem.policy, theta0, task,
                             rec.sys_traj);
    rec.scored = i == 0;
    rec.term_reason = i == 0 ? "nominal" : "collect";
    rollouts.push_back(rec.sys_traj);
    tasks.push_back(std::move(task));
    report.iterations.push_back(std::move(rec));
  }

  if (L >= 1) {
    const int budget_beta = L * (cfg.inner_epochs / 2);
    const int budget_theta = L * (cfg.inner_epochs - cfg.inner_epochs / 2);
    ModelParams beta = problem.nominal;
    std::vector<PhaseTrace> phases;
    phases.push_back(BetaPhase(problem, beta, theta0, rollouts, tasks, cfg,
                               budget_beta));
    std::vector<double> theta = theta0;
    phases.push_back(
        ThetaPhase(problem, beta, theta, cfg, budget_theta, "task"));

    IterationRecord rec = Collect(system, problem, theta, beta, L, report);
    rec.phases = std::move(phases);
    rec.term_reason = JoinReasons(rec.phases);
    double mean = 0.0;
    for (std::size_t i = 0; i < rollouts.size(); ++i) {
      mean += SafeJSysId(beta, problem.policy, theta0, tasks[i], rollouts[i]) /
              rollouts.size();
    }
    rec.j_sysid = mean;
    report.iterations.push_back(std::move(rec));
  }
  PickBest(report);
  return report;
}

TuningReport RunStrategy(BlackBoxSystem& system, const TuningProblem& problem,
                         std::span<const double> theta_nominal,
                         const TuningConfig& cfg) {
  switch (cfg.strategy) {
    case Strategy::kCombined:
    case Strategy::kSplitAlternate:
      return Cotune(system, problem, theta_nominal, cfg);
    case Strategy::kDifftuneModel:
      return DifftuneModelRollout(system, problem, theta_nominal, cfg);
    case Strategy::kDifftuneSystem:
      return DifftuneSystemRollout(system, problem, theta_nominal, cfg);
    case Strategy::kSysidThenTune:
      return SysidThenTune(system, problem, theta_nominal, cfg);
  }
  throw ConfigError("unknown strategy");
}

}  // namespace cotune
