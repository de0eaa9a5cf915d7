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

#include "cotune/dynamics.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <utility>

namespace cotune {
namespace {

constexpr std::array<std::string_view, 6> kCartpoleNames = {
    "cart_mass",  "pole_mass",     "pole_half_length",
    "gear_ratio", "cart_friction", "pole_friction"};
constexpr std::array<std::string_view, 3> kMsdNames = {"mass", "stiffness",
                                                       "damping"};

void CheckDt(double dt) {
  if (!(dt > 0.0 && dt <= kMaxDt)) {
    throw ConfigError("dt must lie in (0, 0.05], got " + std::to_string(dt));
  }
}

bool Admissible(std::span<const double> x) {
  return std::all_of(x.begin(), x.end(), [](double v) {
    return std::isfinite(v) && std::abs(v) <= kBlowupThreshold;
  });
}

void CheckState(std::span<const double> x, int dim) {
  if (static_cast<int>(x.size()) != dim) {
    throw ConfigError("state has " + std::to_string(x.size()) +
                      " entries, expected " + std::to_string(dim));
  }
}

}  // namespace

std::string_view ModelKindName(ModelKind kind) {
  return kind == ModelKind::kCartpole ? "cartpole" : "msd";
}

ModelKind ParseModelKind(std::string_view name) {
  if (name == "cartpole") return ModelKind::kCartpole;
  if (name == "msd") return ModelKind::kMsd;
  throw ConfigError("unknown model kind '" + std::string(name) + "'");
}

int StateDim(ModelKind kind) { return kind == ModelKind::kCartpole ? 4 : 2; }
int ControlDim(ModelKind) { return 1; }

// -------------------------------------------------------------- ModelParams

ModelParams ModelParams::Defaults(ModelKind kind) {
  if (kind == ModelKind::kCartpole) {
    return {kind, {1.0, 0.1, 0.5, 1.0, 0.0, 0.0}};
  }
  return {kind, {1.0, 1.0, 0.1}};
}

std::span<const std::string_view> ModelParams::Names(ModelKind kind) {
  if (kind == ModelKind::kCartpole) return kCartpoleNames;
  return kMsdNames;
}

int ModelParams::Index(std::string_view name) const {
  const auto names = Names(kind);
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return static_cast<int>(i);
  }
  throw ConfigError("unknown " + std::string(ModelKindName(kind)) +
                    " parameter '" + std::string(name) + "'");
}

bool ModelParams::MustBePositive(int index) const {
  // cartpole: masses, length, gear; msd: mass.
  return kind == ModelKind::kCartpole ? index < 4 : index == 0;
}

void ModelParams::Validate() const {
  const auto names = Names(kind);
  if (values.size() != names.size()) {
    throw ConfigError("expected " + std::to_string(names.size()) +
                      " parameters for " + std::string(ModelKindName(kind)));
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = values[i];
    const bool ok = std::isfinite(v) &&
                    (MustBePositive(static_cast<int>(i)) ? v > 0 : v >= 0);
    if (!ok) {
      throw ConfigError("parameter " + std::string(names[i]) + " = " +
                        std::to_string(v) + " is out of range");
    }
  }
}

std::vector<int> TunableIndices(ModelKind kind,
                                std::span<const std::string> names) {
  ModelParams probe = ModelParams::Defaults(kind);
  std::vector<int> idx;
  for (const auto& n : names) idx.push_back(probe.Index(n));
  std::sort(idx.begin(), idx.end());
  if (std::adjacent_find(idx.begin(), idx.end()) != idx.end()) {
    throw ConfigError("tunable parameter listed twice");
  }
  return idx;
}

// ---------------------------------------------------------------- stepping

std::vector<double> Step(std::span<const double> x, std::span<const double> u,
                         const ModelParams& beta, double dt) {
  CheckDt(dt);
  CheckState(x, StateDim(beta.kind));
  auto next = ModelStep<double>(beta.kind, x, u, beta.values, dt);
  if (!Admissible(next)) throw DomainError("integration blow-up");
  return next;
}

std::vector<double> CartpoleStep(std::span<const double> x, double u,
                                 const ModelParams& beta, double dt) {
  if (beta.kind != ModelKind::kCartpole) {
    throw ConfigError("cartpole step needs cartpole parameters");
  }
  const double uu[1] = {u};
  return Step(x, uu, beta, dt);
}

std::vector<double> MsdStep(std::span<const double> x, double u,
                            const ModelParams& beta, double dt) {
  if (beta.kind != ModelKind::kMsd) {
    throw ConfigError("msd step needs msd parameters");
  }
  const double uu[1] = {u};
  return Step(x, uu, beta, dt);
}

std::vector<double> Rk4Step(std::span<const double> x,
                            std::span<const double> u, const ModelParams& beta,
                            double dt) {
  const std::size_t n = x.size(), half = n / 2;
  auto deriv = [&](std::span<const double> s) {
    std::vector<double> acc(half), d(n);
    Accelerations<double>(beta.kind, s, u, beta.values, acc);
    for (std::size_t i = 0; i < half; ++i) {
      d[i] = s[half + i];
      d[half + i] = acc[i];
    }
    return d;
  };
  auto shifted = [&](const std::vector<double>& k, double h) {
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) s[i] = x[i] + h * k[i];
    return s;
  };
  const auto k1 = deriv(x);
  const auto k2 = deriv(shifted(k1, dt / 2));
  const auto k3 = deriv(shifted(k2, dt / 2));
  const auto k4 = deriv(shifted(k3, dt));
  std::vector<double> next(n);
  for (std::size_t i = 0; i < n; ++i) {
    next[i] = x[i] + dt / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
  }
  return next;
}

// ----------------------------------------------------------------- rollouts

TapedTrajectory RolloutOnTape(Tape& tape, ModelKind kind,
                              const PolicySpec& policy,
                              std::span<const Var> theta,
                              std::span<const Var> beta,
                              std::span<const double> x0, int horizon,
                              double dt) {
  if (horizon < 1) throw ConfigError("horizon must be >= 1");
  CheckDt(dt);
  CheckState(x0, StateDim(kind));
  TapedTrajectory traj;
  traj.states.reserve(horizon + 1);
  traj.controls.reserve(horizon);
  std::vector<Var> x;
  for (double v : x0) x.push_back(tape.Constant(v));
  traj.states.push_back(x);
  for (int t = 0; t < horizon; ++t) {
    std::vector<Var> next;
    try {
      traj.controls.push_back(
          EvaluatePolicy<Var>(policy, traj.states.back(), theta));
      next = ModelStep<Var>(kind, traj.states.back(), traj.controls.back(),
                            beta, dt);
    } catch (const DomainError& e) {
      throw RolloutError(std::string("model rollout blew up (") + e.what() +
                             ")",
                         t);
    }
    for (const Var& v : next) {
      if (std::abs(v.value()) > kBlowupThreshold) {
        throw RolloutError("model rollout left the admissible region", t + 1);
      }
    }
    traj.states.push_back(std::move(next));
  }
  return traj;
}

Trajectory ModelRollout(const ModelParams& beta, const PolicySpec& policy,
                        std::span<const double> theta,
                        std::span<const double> x0, int horizon, double dt) {
  if (horizon < 1) throw ConfigError("horizon must be >= 1");
  CheckDt(dt);
  CheckState(x0, StateDim(beta.kind));
  Trajectory traj;
  traj.dt = dt;
  traj.states.emplace_back(x0.begin(), x0.end());
  for (int t = 0; t < horizon; ++t) {
    const auto& x = traj.states.back();
    traj.controls.push_back(EvaluatePolicy<double>(policy, x, theta));
    auto next = ModelStep<double>(beta.kind, x, traj.controls.back(),
                                  beta.values, dt);
    if (!Admissible(next)) {
      throw RolloutError("model rollout left the admissible region", t + 1);
    }
    traj.states.push_back(std::move(next));
  }
  return traj;
}

// ------------------------------------------------------------------- system

std::string_view IntegratorName(Integrator integrator) {
  return integrator == Integrator::kRk4 ? "rk4" : "semi_implicit_euler";
}

Integrator ParseIntegrator(std::string_view name) {
  if (name == "rk4") return Integrator::kRk4;
  if (name == "semi_implicit_euler" || name == "euler") {
    return Integrator::kSemiImplicitEuler;
  }
  throw ConfigError("unknown integrator '" + std::string(name) + "'");
}

System::System(ModelParams hidden, std::vector<double> noise_std,
               Integrator integrator, std::uint64_t seed)
    : hidden_(std::move(hidden)),
      noise_std_(std::move(noise_std)),
      integrator_(integrator),
      rng_(seed) {
  hidden_.Validate();
  const std::size_t n = StateDim(hidden_.kind);
  if (noise_std_.size() == 1) noise_std_.assign(n, noise_std_[0]);
  if (noise_std_.empty()) noise_std_.assign(n, 0.0);
  if (noise_std_.size() != n) {
    throw ConfigError("noise_std needs 1 or " + std::to_string(n) +
                      " entries");
  }
  for (double s : noise_std_) {
    if (!(s >= 0.0) || !std::isfinite(s)) {
      throw ConfigError("noise_std must be finite and >= 0");
    }
  }
}

std::vector<double> System::Observe() {
  std::vector<double> obs = state_;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    if (noise_std_[i] > 0) {
      obs[i] += std::normal_distribution<double>(0.0, noise_std_[i])(rng_);
    }
  }
  return obs;
}

std::vector<double> System::Reset(std::span<const double> x0) {
  CheckState(x0, StateDim(hidden_.kind));
  state_.assign(x0.begin(), x0.end());
  return Observe();
}

std::vector<double> System::Step(std::span<const double> u, double dt) {
  CheckDt(dt);
  state_ = integrator_ == Integrator::kRk4
               ? Rk4Step(state_, u, hidden_, dt)
               : ModelStep<double>(hidden_.kind, state_, u, hidden_.values,
                                   dt);
  if (!Admissible(state_)) throw DomainError("system blow-up");
  return Observe();
}

Trajectory System::Rollout(const PolicySpec& policy,
                           std::span<const double> theta,
                           std::span<const double> x0, int horizon,
                           double dt) {
  if (horizon < 1) throw ConfigError("horizon must be >= 1");
  Trajectory traj;
  traj.dt = dt;
  traj.states.push_back(Reset(x0));
  for (int t = 0; t < horizon; ++t) {
    auto u = EvaluatePolicy<double>(policy, traj.states.back(), theta);
    bool finite = std::all_of(u.begin(), u.end(),
                              [](double v) { return std::isfinite(v); });
    if (!finite) {
      traj.failed = true;
      break;
    }
    try {
      auto obs = Step(u, dt);
      traj.controls.push_back(std::move(u));
      traj.states.push_back(std::move(obs));
    } catch (const DomainError&) {
      traj.failed = true;
      break;
    }
  }
  return traj;
}

System MakeSystem(std::string_view kind, const ModelParams& hidden,
                  std::vector<double> noise_std, Integrator integrator,
                  std::uint64_t seed) {
  if (ParseModelKind(kind) != hidden.kind) {
    throw ConfigError("system kind does not match its parameters");
  }
  return System(hidden, std::move(noise_std), integrator, seed);
}

ModelParams Perturb(const ModelParams& nominal,
                    std::span<const std::pair<std::string, double>> factors) {
  ModelParams out = nominal;
  for (const auto& [name, factor] : factors) {
    if (!(factor > 0.0) || !std::isfinite(factor)) {
      throw ConfigError("perturbation factor for " + name +
                        " must be positive");
    }
    out.Set(name, out.Get(name) * factor);
  }
  out.Validate();
  return out;
}

}  // namespace cotune
