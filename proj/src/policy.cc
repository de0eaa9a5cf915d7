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

#include "cotune/policy.h"

#include <algorithm>
#include <utility>

namespace cotune {

std::string_view PolicyKindName(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::kLinear: return "linear";
    case PolicyKind::kPd: return "pd";
    case PolicyKind::kMlp: return "mlp";
  }
  return "unknown";
}

PolicyKind ParsePolicyKind(std::string_view name) {
  if (name == "linear") return PolicyKind::kLinear;
  if (name == "pd") return PolicyKind::kPd;
  if (name == "mlp") return PolicyKind::kMlp;
  throw ConfigError("unknown policy kind '" + std::string(name) + "'");
}

int ParamCount(std::span<const int> arch) {
  if (arch.size() < 2) {
    throw ConfigError("network architecture needs at least two layers");
  }
  int count = 0;
  for (std::size_t i = 0; i + 1 < arch.size(); ++i) {
    if (arch[i] < 1 || arch[i + 1] < 1) {
      throw ConfigError("layer widths must be >= 1");
    }
    count += arch[i] * arch[i + 1] + arch[i + 1];
  }
  return count;
}

int PolicySpec::param_count() const {
  switch (kind) {
    case PolicyKind::kLinear: return state_dim * control_dim;
    case PolicyKind::kPd: return 2 * control_dim;
    case PolicyKind::kMlp: return ParamCount(arch);
  }
  return 0;
}

void PolicySpec::Validate() const {
  if (state_dim < 1 || control_dim < 1) {
    throw ConfigError("policy dimensions must be >= 1");
  }
  if (kind == PolicyKind::kPd) {
    if (state_dim % 2 != 0 || control_dim > state_dim / 2) {
      throw ConfigError("pd policy needs a position/velocity state layout");
    }
    if (!reference.empty() &&
        static_cast<int>(reference.size()) != state_dim) {
      throw ConfigError("pd reference must match the state dimension");
    }
  }
  if (kind == PolicyKind::kMlp) {
    ParamCount(arch);
    if (arch.front() != state_dim || arch.back() != control_dim) {
      throw ConfigError("mlp architecture must map state to control");
    }
    if (!(u_max > 0)) throw ConfigError("mlp policy needs u_max > 0");
  }
}

PolicySpec PolicySpec::Linear(int state_dim, int control_dim) {
  PolicySpec s;
  s.kind = PolicyKind::kLinear;
  s.state_dim = state_dim;
  s.control_dim = control_dim;
  return s;
}

PolicySpec PolicySpec::Pd(int state_dim, int control_dim,
                          std::vector<double> reference) {
  PolicySpec s;
  s.kind = PolicyKind::kPd;
  s.state_dim = state_dim;
  s.control_dim = control_dim;
  s.reference = std::move(reference);
  return s;
}

PolicySpec PolicySpec::Mlp(std::vector<int> arch, double u_max) {
  PolicySpec s;
  s.kind = PolicyKind::kMlp;
  s.state_dim = arch.empty() ? 0 : arch.front();
  s.control_dim = arch.empty() ? 0 : arch.back();
  s.arch = std::move(arch);
  s.u_max = u_max;
  return s;
}

void ProjectTheta(const PolicySpec& spec, std::span<double> theta) {
  if (spec.kind != PolicyKind::kPd) return;
  for (double& k : theta) k = std::max(k, 0.0);
}

}  // namespace cotune
