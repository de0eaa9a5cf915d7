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

// Parameterized dynamics models x_{t+1} = f(x_t, u_t; beta) and the
// black-box deployment system.
//
// States are laid out as a position block followed by a velocity block:
//   cartpole  (cart position, pole angle, cart velocity, pole rate)
//   msd       (position, velocity)
// The pole angle is zero when upright and is never wrapped.

#ifndef COTUNE_DYNAMICS_H_
#define COTUNE_DYNAMICS_H_

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cotune/autodiff.h"
#include "cotune/error.h"
#include "cotune/policy.h"

namespace cotune {

enum class ModelKind { kCartpole, kMsd };

std::string_view ModelKindName(ModelKind kind);
ModelKind ParseModelKind(std::string_view name);  // ConfigError if unknown
int StateDim(ModelKind kind);
int ControlDim(ModelKind kind);

inline constexpr double kGravity = 9.81;
inline constexpr double kMaxDt = 0.05;
inline constexpr double kBlowupThreshold = 1e6;

// Named physical parameters beta. Masses, lengths and the gear ratio must be
// strictly positive; friction, damping and stiffness may be zero.
struct ModelParams {
  ModelKind kind = ModelKind::kCartpole;
  std::vector<double> values;

  static ModelParams Defaults(ModelKind kind);
  static std::span<const std::string_view> Names(ModelKind kind);

  int Index(std::string_view name) const;  // ConfigError if unknown
  double Get(std::string_view name) const { return values[Index(name)]; }
  void Set(std::string_view name, double v) { values[Index(name)] = v; }
  bool MustBePositive(int index) const;
  void Validate() const;
};

// Indices of `names` in the parameter list of `kind`, in parameter order.
std::vector<int> TunableIndices(ModelKind kind,
                                std::span<const std::string> names);

// Plain recorded trajectory: states x_0..x_T, controls u_0..u_{T-1}.
struct Trajectory {
  std::vector<std::vector<double>> states;
  std::vector<std::vector<double>> controls;
  double dt = 0.0;
  bool failed = false;  // truncated by a blow-up

  int steps() const { return static_cast<int>(controls.size()); }
};

// -------------------------------------------------------------- model maths

// Accelerations of the velocity block for the continuous-time model.
template <typename S>
void Accelerations(ModelKind kind, std::span<const S> x, std::span<const S> u,
                   std::span<const S> beta, std::span<S> acc) {
  using std::cos;
  using std::sin;
  if (kind == ModelKind::kCartpole) {
    const S& cart_mass = beta[0];
    const S& pole_mass = beta[1];
    const S& half_len = beta[2];
    const S& gear = beta[3];
    const S& cart_friction = beta[4];
    const S& pole_friction = beta[5];
    const S& angle = x[1];
    const S& cart_vel = x[2];
    const S& rate = x[3];
    const S total = cart_mass + pole_mass;
    const S s = sin(angle);
    const S c = cos(angle);
    const S force = gear * u[0] - cart_friction * cart_vel;
    const S pml = pole_mass * half_len;
    const S temp = (force + pml * rate * rate * s) / total;
    const S denom = half_len * (4.0 / 3.0 - pole_mass * c * c / total);
    const S angle_acc =
        (kGravity * s - c * temp - pole_friction * rate / pml) / denom;
    acc[0] = temp - pml * angle_acc * c / total;
    acc[1] = angle_acc;
  } else {
    const S& mass = beta[0];
    const S& stiffness = beta[1];
    const S& damping = beta[2];
    acc[0] = (u[0] - damping * x[1] - stiffness * x[0]) / mass;
  }
}

// Semi-implicit Euler: velocities first, then positions with new velocities.
template <typename S>
std::vector<S> ModelStep(ModelKind kind, std::span<const S> x,
                         std::span<const S> u, std::span<const S> beta,
                         double dt) {
  const std::size_t half = x.size() / 2;
  std::vector<S> acc(half);
  Accelerations<S>(kind, x, u, beta, acc);
  std::vector<S> next(x.size());
  for (std::size_t i = 0; i < half; ++i) {
    next[half + i] = x[half + i] + dt * acc[i];
    next[i] = x[i] + dt * next[half + i];
  }
  return next;
}

// One semi-implicit Euler step on plain numbers.
// Throws ConfigError for dt outside (0, 0.05], DomainError on blow-up.
std::vector<double> CartpoleStep(std::span<const double> x, double u,
                                 const ModelParams& beta, double dt);
std::vector<double> MsdStep(std::span<const double> x, double u,
                            const ModelParams& beta, double dt);
std::vector<double> Step(std::span<const double> x, std::span<const double> u,
                         const ModelParams& beta, double dt);
// Classic fourth-order Runge-Kutta with zero-order-hold input.
std::vector<double> Rk4Step(std::span<const double> x,
                            std::span<const double> u, const ModelParams& beta,
                            double dt);

// ----------------------------------------------------------------- rollouts

struct TapedTrajectory {
  std::vector<std::vector<Var>> states;
  std::vector<std::vector<Var>> controls;
};

// Closed-loop unroll of the model on `tape`. Throws RolloutError carrying the
// step index if any state leaves [-1e6, 1e6] or becomes non-finite.
TapedTrajectory RolloutOnTape(Tape& tape, ModelKind kind,
                              const PolicySpec& policy,
                              std::span<const Var> theta,
                              std::span<const Var> beta,
                              std::span<const double> x0, int horizon,
                              double dt);

// Same unroll evaluated on plain numbers.
Trajectory ModelRollout(const ModelParams& beta, const PolicySpec& policy,
                        std::span<const double> theta,
                        std::span<const double> x0, int horizon, double dt);

// ------------------------------------------------------------------- system

enum class Integrator { kSemiImplicitEuler, kRk4 };
std::string_view IntegratorName(Integrator integrator);
Integrator ParseIntegrator(std::string_view name);

// Inference-only view of a deployment domain.
class BlackBoxSystem {
 public:
  virtual ~BlackBoxSystem() = default;
  virtual ModelKind kind() const = 0;
  // Closed-loop rollout under pi(.; theta). Blow-ups truncate the trajectory
  // and set `failed`; they never throw.
  virtual Trajectory Rollout(const PolicySpec& policy,
                             std::span<const double> theta,
                             std::span<const double> x0, int horizon,
                             double dt) = 0;
};

// Emulated deployment system with hidden parameters. Recorded states carry
// additive Gaussian observation noise and the policy acts on those records.
class System final : public BlackBoxSystem {
 public:
  System(ModelParams hidden, std::vector<double> noise_std,
         Integrator integrator, std::uint64_t seed);

  ModelKind kind() const override { return hidden_.kind; }

  // Sets the true state and returns its observation.
  std::vector<double> Reset(std::span<const double> x0);
  // Advances the true state under u for dt seconds; returns the observation.
  // Throws DomainError if the state blows up.
  std::vector<double> Step(std::span<const double> u, double dt);

  Trajectory Rollout(const PolicySpec& policy, std::span<const double> theta,
                     std::span<const double> x0, int horizon,
                     double dt) override;

 private:
  std::vector<double> Observe();

  ModelParams hidden_;
  std::vector<double> noise_std_;
  Integrator integrator_;
  std::mt19937_64 rng_;
  std::vector<double> state_;
};

// Builds a system of model `kind`. `noise_std` is either empty (noiseless),
// one entry (broadcast) or one entry per state dimension.
System MakeSystem(std::string_view kind, const ModelParams& hidden,
                  std::vector<double> noise_std, Integrator integrator,
                  std::uint64_t seed);

// Multiplies each named parameter by its factor.
ModelParams Perturb(const ModelParams& nominal,
                    std::span<const std::pair<std::string, double>> factors);

// Counts rollouts forwarded to a wrapped system.
class CountingSystem final : public BlackBoxSystem {
 public:
  explicit CountingSystem(BlackBoxSystem& inner) : inner_(inner) {}
  ModelKind kind() const override { return inner_.kind(); }
  Trajectory Rollout(const PolicySpec& policy, std::span<const double> theta,
                     std::span<const double> x0, int horizon,
                     double dt) override {
    ++rollouts_;
    return inner_.Rollout(policy, theta, x0, horizon, dt);
  }
  int rollouts() const { return rollouts_; }

 private:
  BlackBoxSystem& inner_;
  int rollouts_ = 0;
};

}  // namespace cotune

#endif  // COTUNE_DYNAMICS_H_
