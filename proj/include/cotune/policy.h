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

// Differentiable state-feedback policies u = pi(x; theta).
//
// Every policy is a pure function of (x, theta) written once as a template
// over the scalar type, so it runs on plain doubles (system rollouts) and on
// tape variables (gradients) through the same code path.
//
// Parameter layouts:
//   linear  theta = row-major K (m x n), u = -K x
//   pd      theta = (kp_0, kd_0, kp_1, kd_1, ...), one pair per actuated dof;
//           dof i reads position x[i] and velocity x[n/2 + i]
//   mlp     per layer: row-major W (out x in), then b (out); tanh hidden
//           activations, u = u_max * tanh(last layer output)

#ifndef COTUNE_POLICY_H_
#define COTUNE_POLICY_H_

#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cotune/autodiff.h"
#include "cotune/error.h"

namespace cotune {

enum class PolicyKind { kLinear, kPd, kMlp };

std::string_view PolicyKindName(PolicyKind kind);
PolicyKind ParsePolicyKind(std::string_view name);

// Number of weights and biases of a fully connected network with layer
// widths `arch` (input first, output last).
int ParamCount(std::span<const int> arch);

struct PolicySpec {
  PolicyKind kind = PolicyKind::kLinear;
  int state_dim = 0;
  int control_dim = 1;
  std::vector<int> arch;           // mlp only; arch.front() == state_dim
  double u_max = 0.0;              // <= 0 disables saturation (linear/pd)
  std::vector<double> reference;   // pd set-point over the full state

  int param_count() const;
  // Throws ConfigError on inconsistent dimensions.
  void Validate() const;

  static PolicySpec Linear(int state_dim, int control_dim);
  static PolicySpec Pd(int state_dim, int control_dim,
                       std::vector<double> reference = {});
  static PolicySpec Mlp(std::vector<int> arch, double u_max);
};

// Clamps entries that must stay feasible (pd gains >= 0). No-op otherwise.
void ProjectTheta(const PolicySpec& spec, std::span<double> theta);

namespace internal {

inline double AffineRow(std::span<const double> w, std::span<const double> x,
                        double b) {
  double acc = b;
  for (std::size_t i = 0; i < w.size(); ++i) acc += w[i] * x[i];
  return acc;
}

inline Var AffineRow(std::span<const Var> w, std::span<const Var> x,
                     const Var& b) {
  return b.tape()->Affine(w, x, b);
}

template <typename S>
S Saturate(const S& raw, double u_max) {
  using std::tanh;
  if (u_max <= 0) return raw;
  return u_max * tanh(raw * (1.0 / u_max));
}

inline void CheckSize(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw ConfigError(std::string(what) + ": expected " +
                      std::to_string(want) + " entries, got " +
                      std::to_string(got));
  }
}

}  // namespace internal

// u = -K x with K reshaped (m x n) from theta.
template <typename S>
std::vector<S> LinearPolicy(std::span<const S> x, std::span<const S> theta,
                            int control_dim = 1) {
  internal::CheckSize(theta.size(), x.size() * control_dim, "linear policy");
  const std::size_t n = x.size();
  std::vector<S> u;
  u.reserve(control_dim);
  for (int j = 0; j < control_dim; ++j) {
    S acc = theta[j * n] * x[0];
    for (std::size_t i = 1; i < n; ++i) acc = acc + theta[j * n + i] * x[i];
    u.push_back(-acc);
  }
  return u;
}

// u_i = kp_i (p*_i - p_i) + kd_i (v*_i - v_i).
template <typename S>
std::vector<S> PdPolicy(std::span<const S> x, std::span<const S> theta,
                        std::span<const double> reference) {
  internal::CheckSize(reference.size(), x.size(), "pd reference");
  if (theta.size() % 2 != 0 || theta.size() > x.size()) {
    throw ConfigError("pd policy: theta must hold (kp, kd) per dof");
  }
  const std::size_t dofs = theta.size() / 2, half = x.size() / 2;
  std::vector<S> u;
  u.reserve(dofs);
  for (std::size_t i = 0; i < dofs; ++i) {
    const S ep = reference[i] - x[i];
    const S ev = reference[half + i] - x[half + i];
    u.push_back(theta[2 * i] * ep + theta[2 * i + 1] * ev);
  }
  return u;
}

// Fully connected tanh network with a saturated linear output layer.
template <typename S>
std::vector<S> MlpPolicy(std::span<const S> x, std::span<const S> theta,
                         std::span<const int> arch, double u_max) {
  using std::tanh;
  internal::CheckSize(theta.size(), ParamCount(arch), "mlp policy");
  internal::CheckSize(x.size(), arch.front(), "mlp input");
  std::vector<S> act(x.begin(), x.end()), next;
  std::size_t off = 0;
  for (std::size_t layer = 0; layer + 1 < arch.size(); ++layer) {
    const int in = arch[layer], out = arch[layer + 1];
    const bool last = layer + 2 == arch.size();
    const std::span<const S> bias = theta.subspan(off + in * out, out);
    next.clear();
    next.reserve(out);
    for (int j = 0; j < out; ++j) {
      S z = internal::AffineRow(theta.subspan(off + j * in, in),
                                std::span<const S>(act), bias[j]);
      next.push_back(last ? z : tanh(z));
    }
    off += static_cast<std::size_t>(in) * out + out;
    act.swap(next);
  }
  for (S& u : act) u = u_max * tanh(u);
  return act;
}

template <typename S>
std::vector<S> EvaluatePolicy(const PolicySpec& spec, std::span<const S> x,
                              std::span<const S> theta) {
  switch (spec.kind) {
    case PolicyKind::kLinear: {
      auto u = LinearPolicy<S>(x, theta, spec.control_dim);
      for (S& v : u) v = internal::Saturate(v, spec.u_max);
      return u;
    }
    case PolicyKind::kPd: {
      std::vector<double> ref = spec.reference;
      if (ref.empty()) ref.assign(x.size(), 0.0);
      auto u = PdPolicy<S>(x, theta, ref);
      for (S& v : u) v = internal::Saturate(v, spec.u_max);
      return u;
    }
    case PolicyKind::kMlp:
      return MlpPolicy<S>(x, theta, spec.arch, spec.u_max);
  }
  throw ConfigError("unknown policy kind");
}

}  // namespace cotune

#endif  // COTUNE_POLICY_H_
