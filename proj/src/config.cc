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

#include "cotune/config.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <random>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "cotune/error.h"
#include "cotune/format.h"

namespace cotune {

std::string_view SynthesisKindName(SynthesisKind kind) {
  switch (kind) {
    case SynthesisKind::kLqr: return "lqr";
    case SynthesisKind::kMlp: return "mlp";
    case SynthesisKind::kExplicit: return "explicit";
  }
  return "unknown";
}

SynthesisKind ParseSynthesisKind(std::string_view name) {
  if (name == "lqr") return SynthesisKind::kLqr;
  if (name == "mlp") return SynthesisKind::kMlp;
  if (name == "explicit") return SynthesisKind::kExplicit;
  throw ConfigError("unknown synthesis '" + std::string(name) +
                    "' (expected lqr, mlp or explicit)");
}

ModelParams ExperimentConfig::Nominal() const {
  ModelParams beta = ModelParams::Defaults(system.kind);
  for (const auto& [name, value] : model.nominal) beta.Set(name, value);
  return beta;
}

ModelParams ExperimentConfig::Truth() const {
  return Perturb(Nominal(), system.factors);
}

PolicySpec ExperimentConfig::Policy() const {
  const int n = StateDim(system.kind), m = ControlDim(system.kind);
  PolicySpec spec;
  switch (controller.kind) {
    case PolicyKind::kLinear:
      spec = PolicySpec::Linear(n, m);
      break;
    case PolicyKind::kPd: {
      std::vector<double> ref = controller.reference;
      if (ref.empty()) ref.assign(n, 0.0);
      spec = PolicySpec::Pd(n, m, std::move(ref));
      break;
    }
    case PolicyKind::kMlp:
      spec = PolicySpec::Mlp(controller.arch, controller.u_max);
      break;
  }
  spec.u_max = controller.u_max;
  return spec;
}

std::vector<int> ExperimentConfig::Tunable() const {
  return TunableIndices(system.kind, model.tunable);
}

TaskSpec ExperimentConfig::TaskForSeed(std::uint64_t seed) const {
  TaskSpec t = task.spec;
  if (task.x0_jitter.empty()) return t;
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (std::size_t i = 0; i < t.x0.size() && i < task.x0_jitter.size(); ++i) {
    const double draw = unit(rng);
    t.x0[i] += task.x0_jitter[i] * draw;
  }
  return t;
}

namespace {

std::string LineOf(const YAML::Node& node) {
  const YAML::Mark mark = node.Mark();
  if (mark.line < 0) return "";
  return " (line " + std::to_string(mark.line + 1) + ")";
}

std::string Join(std::string_view path, std::string_view key) {
  return path.empty() ? std::string(key)
                      : std::string(path) + "." + std::string(key);
}

// Reads YAML into typed fields, collecting every problem instead of stopping
// at the first one.
class Reader {
 public:
  std::vector<std::string> errors;

  void Fail(const std::string& path, const YAML::Node& node,
            const std::string& message) {
    errors.push_back(path + ": " + message + LineOf(node));
  }

  bool IsMap(const YAML::Node& node, const std::string& path) {
    if (!node.IsMap()) {
      Fail(path, node, "expected a mapping");
      return false;
    }
    return true;
  }

  void RejectUnknown(const YAML::Node& node, const std::string& path,
                     std::initializer_list<std::string_view> allowed) {
    for (const auto& kv : node) {
      const std::string key = kv.first.as<std::string>();
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
        Fail(Join(path, key), kv.first, "unknown key '" + key + "'");
      }
    }
  }

  template <typename T>
  bool Get(const YAML::Node& node, const std::string& path, T& out) {
    if (!node.IsScalar()) {
      Fail(path, node, "expected a scalar");
      return false;
    }
    try {
      out = node.as<T>();
    } catch (const YAML::Exception&) {
      Fail(path, node, "cannot convert '" + node.Scalar() + "'");
      return false;
    }
    if constexpr (std::is_floating_point_v<T>) {
      if (!std::isfinite(out)) {
        Fail(path, node, "must be finite");
        return false;
      }
    }
    return true;
  }

  template <typename T>
  void Field(const YAML::Node& map, const std::string& path,
             std::string_view key, T& out) {
    const YAML::Node n = map[std::string(key)];
    if (n) Get(n, Join(path, key), out);
  }

  template <typename T>
  bool GetList(const YAML::Node& node, const std::string& path,
               std::vector<T>& out) {
    if (!node.IsSequence()) {
      Fail(path, node, "expected a list");
      return false;
    }
    std::vector<T> values;
    bool ok = true;
    for (std::size_t i = 0; i < node.size(); ++i) {
      T v{};
      ok = Get(node[i], path + "[" + std::to_string(i) + "]", v) && ok;
      values.push_back(v);
    }
    if (ok) out = std::move(values);
    return ok;
  }

  template <typename T>
  void ListField(const YAML::Node& map, const std::string& path,
                 std::string_view key, std::vector<T>& out) {
    const YAML::Node n = map[std::string(key)];
    if (n) GetList(n, Join(path, key), out);
  }

  void MatrixField(const YAML::Node& map, const std::string& path,
                   std::string_view key,
                   std::vector<std::vector<double>>& out) {
    const YAML::Node n = map[std::string(key)];
    if (!n) return;
    const std::string p = Join(path, key);
    if (!n.IsSequence()) {
      Fail(p, n, "expected a list of lists");
      return;
    }
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < n.size(); ++i) {
      std::vector<double> row;
      if (!GetList(n[i], p + "[" + std::to_string(i) + "]", row)) return;
      rows.push_back(std::move(row));
    }
    out = std::move(rows);
  }

  void NamedField(const YAML::Node& map, const std::string& path,
                  std::string_view key, NamedValues& out) {
    const YAML::Node n = map[std::string(key)];
    if (!n) return;
    const std::string p = Join(path, key);
    if (!IsMap(n, p)) return;
    NamedValues values;
    for (const auto& kv : n) {
      const std::string name = kv.first.as<std::string>();
      double v = 0.0;
      if (Get(kv.second, Join(p, name), v)) values.emplace_back(name, v);
    }
    out = std::move(values);
  }

  template <typename Enum, typename Parse>
  void EnumField(const YAML::Node& map, const std::string& path,
                 std::string_view key, Enum& out, Parse parse) {
    const YAML::Node n = map[std::string(key)];
    if (!n) return;
    std::string s;
    if (!Get(n, Join(path, key), s)) return;
    try {
      out = parse(s);
    } catch (const ConfigError& e) {
      Fail(Join(path, key), n, e.what());
    }
  }
};

void ReadSystem(Reader& r, const YAML::Node& n, ExperimentConfig& c) {
  if (!r.IsMap(n, "system")) return;
  r.RejectUnknown(n, "system",
                  {"kind", "factors", "noise_std", "integrator", "seed"});
  r.EnumField(n, "system", "kind", c.system.kind, ParseModelKind);
  r.NamedField(n, "system", "factors", c.system.factors);
  if (const YAML::Node noise = n["noise_std"]) {
    if (noise.IsScalar()) {
      double v = 0.0;
      if (r.Get(noise, "system.noise_std", v)) {
        c.system.noise_std.assign(StateDim(c.system.kind), v);
      }
    } else {
      r.GetList(noise, "system.noise_std", c.system.noise_std);
    }
  }
  r.EnumField(n, "system", "integrator", c.system.integrator,
              ParseIntegrator);
  r.Field(n, "system", "seed", c.system.seed);
}

void ReadModel(Reader& r, const YAML::Node& n, ExperimentConfig& c) {
  if (!r.IsMap(n, "model")) return;
  r.RejectUnknown(n, "model", {"nominal", "tunable"});
  r.NamedField(n, "model", "nominal", c.model.nominal);
  r.ListField(n, "model", "tunable", c.model.tunable);
}

void ReadMlp(Reader& r, const YAML::Node& n, MlpSynthesisOptions& o) {
  const std::string p = "controller.mlp";
  if (!r.IsMap(n, p)) return;
  r.RejectUnknown(n, p,
                  {"lr", "stages", "epochs_per_stage", "max_epochs",
                   "abs_threshold", "rel_threshold", "init_scale", "seed",
                   "starts"});
  r.Field(n, p, "lr", o.lr);
  r.Field(n, p, "stages", o.stages);
  r.Field(n, p, "epochs_per_stage", o.epochs_per_stage);
  r.Field(n, p, "max_epochs", o.max_epochs);
  r.Field(n, p, "abs_threshold", o.abs_threshold);
  r.Field(n, p, "rel_threshold", o.rel_threshold);
  r.Field(n, p, "init_scale", o.init_scale);
  r.Field(n, p, "seed", o.seed);
  r.MatrixField(n, p, "starts", o.starts);
}

void ReadController(Reader& r, const YAML::Node& n, ExperimentConfig& c,
                    bool& saw_u_max, bool& saw_synthesis) {
  const std::string p = "controller";
  if (!r.IsMap(n, p)) return;
  r.RejectUnknown(n, p,
                  {"kind", "synthesis", "arch", "u_max", "reference",
                   "theta", "lqr", "mlp"});
  r.EnumField(n, p, "kind", c.controller.kind, ParsePolicyKind);
  saw_synthesis = static_cast<bool>(n["synthesis"]);
  r.EnumField(n, p, "synthesis", c.controller.synthesis, ParseSynthesisKind);
  r.ListField(n, p, "arch", c.controller.arch);
  saw_u_max = static_cast<bool>(n["u_max"]);
  r.Field(n, p, "u_max", c.controller.u_max);
  r.ListField(n, p, "reference", c.controller.reference);
  r.ListField(n, p, "theta", c.controller.theta);
  if (const YAML::Node lqr = n["lqr"]) {
    if (r.IsMap(lqr, "controller.lqr")) {
      r.RejectUnknown(lqr, "controller.lqr", {"q", "r"});
      r.ListField(lqr, "controller.lqr", "q", c.controller.lqr.q);
      r.ListField(lqr, "controller.lqr", "r", c.controller.lqr.r);
    }
  }
  if (const YAML::Node mlp = n["mlp"]) ReadMlp(r, mlp, c.controller.mlp);
}

void ReadTask(Reader& r, const YAML::Node& n, ExperimentConfig& c) {
  const std::string p = "task";
  if (!r.IsMap(n, p)) return;
  r.RejectUnknown(n, p,
                  {"kind", "x0", "x0_jitter", "horizon", "dt", "reference",
                   "weights"});
  TaskSpec& t = c.task.spec;
  r.EnumField(n, p, "kind", t.kind, ParseTaskKind);
  r.ListField(n, p, "x0", t.x0);
  r.ListField(n, p, "x0_jitter", c.task.x0_jitter);
  r.Field(n, p, "horizon", t.horizon);
  r.Field(n, p, "dt", t.dt);
  r.MatrixField(n, p, "reference", t.reference);
  r.ListField(n, p, "weights", t.weights);
}

void ReadTuning(Reader& r, const YAML::Node& n, ExperimentConfig& c,
                bool& saw_lr_theta) {
  const std::string p = "tuning";
  if (!r.IsMap(n, p)) return;
  r.RejectUnknown(n, p,
                  {"outer_iterations", "inner_epochs", "lr_theta", "lr_beta",
                   "w_task", "w_sysid", "adam", "sysid_perturbation",
                   "state_scale"});
  TuningConfig& t = c.tuning;
  r.Field(n, p, "outer_iterations", t.outer_iterations);
  r.Field(n, p, "inner_epochs", t.inner_epochs);
  saw_lr_theta = static_cast<bool>(n["lr_theta"]);
  r.Field(n, p, "lr_theta", t.lr_theta);
  r.Field(n, p, "lr_beta", t.lr_beta);
  r.Field(n, p, "w_task", t.w_task);
  r.Field(n, p, "w_sysid", t.w_sysid);
  if (const YAML::Node adam = n["adam"]) {
    if (r.IsMap(adam, "tuning.adam")) {
      r.RejectUnknown(adam, "tuning.adam", {"beta1", "beta2", "epsilon"});
      r.Field(adam, "tuning.adam", "beta1", t.adam.beta1);
      r.Field(adam, "tuning.adam", "beta2", t.adam.beta2);
      r.Field(adam, "tuning.adam", "epsilon", t.adam.epsilon);
    }
  }
  r.Field(n, p, "sysid_perturbation", t.sysid_perturbation);
  r.ListField(n, p, "state_scale", t.state_scale);
}

void ReadRun(Reader& r, const YAML::Node& n, ExperimentConfig& c) {
  const std::string p = "run";
  if (!r.IsMap(n, p)) return;
  r.RejectUnknown(n, p,
                  {"strategies", "seeds", "output", "record_wall_time",
                   "threads", "dump_trajectories"});
  std::vector<std::string> names;
  if (const YAML::Node s = n["strategies"]) {
    if (r.GetList(s, "run.strategies", names)) {
      c.run.strategies.clear();
      for (std::size_t i = 0; i < names.size(); ++i) {
        try {
          c.run.strategies.push_back(ParseStrategy(names[i]));
        } catch (const ConfigError& e) {
          r.Fail("run.strategies[" + std::to_string(i) + "]", s[i], e.what());
        }
      }
    }
  }
  r.ListField(n, p, "seeds", c.run.seeds);
  r.Field(n, p, "output", c.run.output);
  r.Field(n, p, "record_wall_time", c.run.record_wall_time);
  r.Field(n, p, "threads", c.run.threads);
  r.Field(n, p, "dump_trajectories", c.run.dump_trajectories);
}

// Semantic checks. Field paths match the YAML layout.
std::vector<std::string> Violations(const ExperimentConfig& c) {
  std::vector<std::string> v;
  const auto fail = [&](const std::string& path, const std::string& msg) {
    v.push_back(path + ": " + msg);
  };
  const int n = StateDim(c.system.kind), m = ControlDim(c.system.kind);
  const ModelParams defaults = ModelParams::Defaults(c.system.kind);

  if (c.experiment.empty()) {
    fail("experiment", "required");
  } else if (!std::all_of(c.experiment.begin(), c.experiment.end(), [](char ch) {
               return std::isalnum(static_cast<unsigned char>(ch)) ||
                      ch == '_' || ch == '-' || ch == '.';
             })) {
    fail("experiment", "may only contain letters, digits, '_', '-' and '.'");
  }

  // system
  std::set<std::string> seen;
  for (const auto& [name, f] : c.system.factors) {
    const std::string path = "system.factors." + name;
    if (!seen.insert(name).second) fail(path, "duplicate entry");
    try {
      defaults.Index(name);
    } catch (const ConfigError&) {
      fail(path, "unknown parameter for " +
                     std::string(ModelKindName(c.system.kind)));
      continue;
    }
    if (!(f > 0)) fail(path, "factor must be > 0");
  }
  if (!c.system.noise_std.empty()) {
    if (static_cast<int>(c.system.noise_std.size()) != n) {
      fail("system.noise_std", "expected " + std::to_string(n) + " entries");
    }
    for (double s : c.system.noise_std) {
      if (s < 0) fail("system.noise_std", "entries must be >= 0");
    }
  }

  // model
  seen.clear();
  ModelParams nominal = defaults;
  bool nominal_ok = true;
  for (const auto& [name, value] : c.model.nominal) {
    const std::string path = "model.nominal." + name;
    if (!seen.insert(name).second) fail(path, "duplicate entry");
    int idx = -1;
    try {
      idx = defaults.Index(name);
    } catch (const ConfigError&) {
      fail(path, "unknown parameter for " +
                     std::string(ModelKindName(c.system.kind)));
      nominal_ok = false;
      continue;
    }
    nominal.values[idx] = value;
    if (defaults.MustBePositive(idx) && !(value > 0)) {
      fail(path, "must be > 0");
      nominal_ok = false;
    } else if (!(value >= 0)) {
      fail(path, "must be >= 0");
      nominal_ok = false;
    }
  }
  seen.clear();
  for (std::size_t i = 0; i < c.model.tunable.size(); ++i) {
    const std::string& name = c.model.tunable[i];
    const std::string path = "model.tunable[" + std::to_string(i) + "]";
    if (!seen.insert(name).second) fail(path, "duplicate entry '" + name + "'");
    int idx = -1;
    try {
      idx = defaults.Index(name);
    } catch (const ConfigError&) {
      fail(path, "unknown parameter '" + name + "'");
      continue;
    }
    if (nominal_ok && !(nominal.values[idx] > 0)) {
      fail(path, "tunable parameter '" + name +
                     "' must have a positive nominal value");
    }
  }

  // controller
  const ControllerBlock& ctl = c.controller;
  switch (ctl.synthesis) {
    case SynthesisKind::kLqr:
      if (ctl.kind != PolicyKind::kLinear) {
        fail("controller.synthesis", "lqr synthesis needs kind: linear");
      }
      if (!ctl.lqr.q.empty() && static_cast<int>(ctl.lqr.q.size()) != n) {
        fail("controller.lqr.q", "expected " + std::to_string(n) + " entries");
      }
      if (!ctl.lqr.r.empty() && static_cast<int>(ctl.lqr.r.size()) != m) {
        fail("controller.lqr.r", "expected " + std::to_string(m) + " entries");
      }
      for (double q : ctl.lqr.q) {
        if (q < 0) fail("controller.lqr.q", "entries must be >= 0");
      }
      for (double r : ctl.lqr.r) {
        if (!(r > 0)) fail("controller.lqr.r", "entries must be > 0");
      }
      break;
    case SynthesisKind::kMlp: {
      if (ctl.kind != PolicyKind::kMlp) {
        fail("controller.synthesis", "mlp synthesis needs kind: mlp");
      }
      const MlpSynthesisOptions& o = ctl.mlp;
      if (!(o.lr > 0)) fail("controller.mlp.lr", "must be > 0");
      if (o.stages < 1) fail("controller.mlp.stages", "must be >= 1");
      if (o.epochs_per_stage < 0) {
        fail("controller.mlp.epochs_per_stage", "must be >= 0");
      }
      if (o.max_epochs < 0) fail("controller.mlp.max_epochs", "must be >= 0");
      if (!(o.init_scale > 0)) fail("controller.mlp.init_scale", "must be > 0");
      if (o.abs_threshold <= 0 && !(o.rel_threshold > 0)) {
        fail("controller.mlp", "needs abs_threshold > 0 or rel_threshold > 0");
      }
      for (std::size_t i = 0; i < o.starts.size(); ++i) {
        if (static_cast<int>(o.starts[i].size()) != n) {
          fail("controller.mlp.starts[" + std::to_string(i) + "]",
               "expected " + std::to_string(n) + " entries");
        }
      }
      break;
    }
    case SynthesisKind::kExplicit:
      if (ctl.theta.empty()) {
        fail("controller.theta", "required for explicit synthesis");
      }
      break;
  }
  if (ctl.kind == PolicyKind::kMlp) {
    if (ctl.arch.size() < 2) {
      fail("controller.arch", "needs at least input and output widths");
    } else {
      if (ctl.arch.front() != n) {
        fail("controller.arch", "first width must be the state dimension " +
                                    std::to_string(n));
      }
      if (ctl.arch.back() != m) {
        fail("controller.arch", "last width must be the control dimension " +
                                    std::to_string(m));
      }
      for (int w : ctl.arch) {
        if (w < 1) fail("controller.arch", "widths must be >= 1");
      }
    }
    if (!(ctl.u_max > 0)) fail("controller.u_max", "mlp policies need > 0");
  } else if (!ctl.arch.empty()) {
    fail("controller.arch", "only used by mlp policies");
  }
  if (ctl.u_max < 0) fail("controller.u_max", "must be >= 0");
  if (ctl.kind == PolicyKind::kPd && !ctl.reference.empty() &&
      static_cast<int>(ctl.reference.size()) != n) {
    fail("controller.reference", "expected " + std::to_string(n) + " entries");
  }
  if (ctl.kind != PolicyKind::kPd && !ctl.reference.empty()) {
    fail("controller.reference", "only used by pd policies");
  }
  if (ctl.synthesis == SynthesisKind::kExplicit && !ctl.theta.empty()) {
    try {
      const int want = c.Policy().param_count();
      if (static_cast<int>(ctl.theta.size()) != want) {
        fail("controller.theta", "expected " + std::to_string(want) +
                                     " entries, got " +
                                     std::to_string(ctl.theta.size()));
      }
    } catch (const ConfigError& e) {
      fail("controller", e.what());
    }
  }

  // task
  const TaskSpec& t = c.task.spec;
  if (static_cast<int>(t.x0.size()) != n) {
    fail("task.x0", "expected " + std::to_string(n) + " entries");
  }
  if (!c.task.x0_jitter.empty()) {
    if (static_cast<int>(c.task.x0_jitter.size()) != n) {
      fail("task.x0_jitter", "expected " + std::to_string(n) + " entries");
    }
    for (double j : c.task.x0_jitter) {
      if (j < 0) fail("task.x0_jitter", "entries must be >= 0");
    }
  }
  if (t.horizon < 1) fail("task.horizon", "must be >= 1");
  if (!(t.dt > 0 && t.dt <= kMaxDt)) {
    fail("task.dt", "must be in (0, " + FormatDouble(kMaxDt) + "]");
  }
  if (t.kind == TaskKind::kStabilize && t.reference.size() > 1) {
    fail("task.reference", "stabilize tasks take a single target row");
  }
  if (t.kind == TaskKind::kTrack &&
      static_cast<int>(t.reference.size()) < t.horizon) {
    fail("task.reference", "track tasks need at least horizon rows");
  }
  for (std::size_t i = 0; i < t.reference.size(); ++i) {
    if (static_cast<int>(t.reference[i].size()) != n) {
      fail("task.reference[" + std::to_string(i) + "]",
           "expected " + std::to_string(n) + " entries");
    }
  }
  if (!t.weights.empty()) {
    if (static_cast<int>(t.weights.size()) != n) {
      fail("task.weights", "expected " + std::to_string(n) + " entries");
    }
    for (double w : t.weights) {
      if (w < 0) fail("task.weights", "entries must be >= 0");
    }
  }

  // tuning
  const TuningConfig& tu = c.tuning;
  if (tu.outer_iterations < 1) fail("tuning.outer_iterations", "must be >= 1");
  if (tu.inner_epochs < 1) fail("tuning.inner_epochs", "must be >= 1");
  if (!(tu.lr_theta > 0)) fail("tuning.lr_theta", "must be > 0");
  if (!(tu.lr_beta > 0)) fail("tuning.lr_beta", "must be > 0");
  if (tu.w_task < 0) fail("tuning.w_task", "must be >= 0");
  if (tu.w_sysid < 0) fail("tuning.w_sysid", "must be >= 0");
  if (!(tu.w_task > 0 || tu.w_sysid > 0)) {
    fail("tuning", "w_task and w_sysid cannot both be 0");
  }
  if (!(tu.adam.beta1 >= 0 && tu.adam.beta1 < 1)) {
    fail("tuning.adam.beta1", "must be in [0, 1)");
  }
  if (!(tu.adam.beta2 >= 0 && tu.adam.beta2 < 1)) {
    fail("tuning.adam.beta2", "must be in [0, 1)");
  }
  if (!(tu.adam.epsilon > 0)) fail("tuning.adam.epsilon", "must be > 0");
  if (tu.sysid_perturbation < 0) {
    fail("tuning.sysid_perturbation", "must be >= 0");
  }
  if (!tu.state_scale.empty() && static_cast<int>(tu.state_scale.size()) != n) {
    fail("tuning.state_scale", "expected " + std::to_string(n) + " entries");
  }

  // run
  if (c.run.strategies.empty()) fail("run.strategies", "must not be empty");
  std::set<Strategy> strategies(c.run.strategies.begin(),
                                c.run.strategies.end());
  if (strategies.size() != c.run.strategies.size()) {
    fail("run.strategies", "duplicate strategy");
  }
  if (c.run.seeds.empty()) fail("run.seeds", "must not be empty");
  std::set<std::uint64_t> seeds(c.run.seeds.begin(), c.run.seeds.end());
  if (seeds.size() != c.run.seeds.size()) fail("run.seeds", "duplicate seed");
  if (c.run.threads < 1) fail("run.threads", "must be >= 1");
  if (c.run.output.empty()) fail("run.output", "must not be empty");
  return v;
}

void ThrowIfAny(std::string_view source, const std::vector<std::string>& v) {
  if (v.empty()) return;
  std::string msg = std::string(source) + ": " + std::to_string(v.size()) +
                    (v.size() == 1 ? " problem" : " problems");
  for (const auto& e : v) msg += "\n  " + e;
  throw ConfigError(msg);
}

}  // namespace

void ValidateConfig(const ExperimentConfig& config) {
  ThrowIfAny("config", Violations(config));
}

ExperimentConfig ParseConfig(std::string_view text, std::string_view source) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::ParserException& e) {
    throw ConfigError(std::string(source) + ": parse error at line " +
                      std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  if (!root.IsMap()) {
    throw ConfigError(std::string(source) + ": top level must be a mapping");
  }

  ExperimentConfig c;
  Reader r;
  r.RejectUnknown(root, "",
                  {"experiment", "system", "model", "controller", "task",
                   "tuning", "run"});
  r.Field(root, "", "experiment", c.experiment);
  if (const YAML::Node n = root["system"]) ReadSystem(r, n, c);
  if (const YAML::Node n = root["model"]) ReadModel(r, n, c);
  bool saw_u_max = false, saw_synthesis = false, saw_lr_theta = false;
  if (const YAML::Node n = root["controller"]) {
    ReadController(r, n, c, saw_u_max, saw_synthesis);
  }
  if (const YAML::Node n = root["task"]) ReadTask(r, n, c);
  if (const YAML::Node n = root["tuning"]) ReadTuning(r, n, c, saw_lr_theta);
  if (const YAML::Node n = root["run"]) ReadRun(r, n, c);
  ThrowIfAny(source, r.errors);

  // Defaults that depend on other fields.
  const int n = StateDim(c.system.kind);
  const bool mlp = c.controller.kind == PolicyKind::kMlp;
  if (!saw_synthesis) {
    c.controller.synthesis = mlp ? SynthesisKind::kMlp
                             : c.controller.kind == PolicyKind::kLinear
                                 ? SynthesisKind::kLqr
                                 : SynthesisKind::kExplicit;
  }
  if (!saw_u_max && mlp && c.system.kind == ModelKind::kCartpole) {
    c.controller.u_max = 10.0;
  }
  if (!saw_lr_theta) c.tuning.lr_theta = mlp ? 1e-3 : 1e-2;
  if (c.task.spec.x0.empty()) c.task.spec.x0.assign(n, 0.0);
  if (c.task.spec.reference.empty()) {
    c.task.spec.reference.push_back(std::vector<double>(n, 0.0));
  }
  ThrowIfAny(source, Violations(c));
  return c;
}

ExperimentConfig LoadConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return ParseConfig(buf.str(), path);
}

namespace {

// Scalars are written verbatim so doubles keep their shortest exact form.
void EmitNumber(YAML::Emitter& out, double v) {
  out << YAML::Value << FormatDouble(v);
}

void EmitList(YAML::Emitter& out, std::span<const double> values) {
  out << YAML::Flow << YAML::BeginSeq;
  for (double v : values) out << FormatDouble(v);
  out << YAML::EndSeq;
}

void EmitMatrix(YAML::Emitter& out,
                const std::vector<std::vector<double>>& rows) {
  out << YAML::BeginSeq;
  for (const auto& row : rows) EmitList(out, row);
  out << YAML::EndSeq;
}

void EmitNamed(YAML::Emitter& out, const NamedValues& values) {
  out << YAML::BeginMap;
  for (const auto& [name, v] : values) {
    out << YAML::Key << name;
    EmitNumber(out, v);
  }
  out << YAML::EndMap;
}

}  // namespace

std::string DumpConfig(const ExperimentConfig& c) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "experiment" << YAML::Value << c.experiment;

  out << YAML::Key << "system" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "kind" << YAML::Value
      << std::string(ModelKindName(c.system.kind));
  out << YAML::Key << "factors" << YAML::Value;
  EmitNamed(out, c.system.factors);
  out << YAML::Key << "noise_std" << YAML::Value;
  EmitList(out, c.system.noise_std);
  out << YAML::Key << "integrator" << YAML::Value
      << std::string(IntegratorName(c.system.integrator));
  out << YAML::Key << "seed" << YAML::Value << c.system.seed;
  out << YAML::EndMap;

  out << YAML::Key << "model" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "nominal" << YAML::Value;
  EmitNamed(out, c.model.nominal);
  out << YAML::Key << "tunable" << YAML::Value << YAML::Flow
      << YAML::BeginSeq;
  for (const auto& name : c.model.tunable) out << name;
  out << YAML::EndSeq << YAML::EndMap;

  const ControllerBlock& ctl = c.controller;
  out << YAML::Key << "controller" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "kind" << YAML::Value
      << std::string(PolicyKindName(ctl.kind));
  out << YAML::Key << "synthesis" << YAML::Value
      << std::string(SynthesisKindName(ctl.synthesis));
  out << YAML::Key << "arch" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (int w : ctl.arch) out << w;
  out << YAML::EndSeq;
  out << YAML::Key << "u_max";
  EmitNumber(out, ctl.u_max);
  out << YAML::Key << "reference" << YAML::Value;
  EmitList(out, ctl.reference);
  out << YAML::Key << "theta" << YAML::Value;
  EmitList(out, ctl.theta);
  out << YAML::Key << "lqr" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "q" << YAML::Value;
  EmitList(out, ctl.lqr.q);
  out << YAML::Key << "r" << YAML::Value;
  EmitList(out, ctl.lqr.r);
  out << YAML::EndMap;
  const MlpSynthesisOptions& o = ctl.mlp;
  out << YAML::Key << "mlp" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "lr";
  EmitNumber(out, o.lr);
  out << YAML::Key << "stages" << YAML::Value << o.stages;
  out << YAML::Key << "epochs_per_stage" << YAML::Value << o.epochs_per_stage;
  out << YAML::Key << "max_epochs" << YAML::Value << o.max_epochs;
  out << YAML::Key << "abs_threshold";
  EmitNumber(out, o.abs_threshold);
  out << YAML::Key << "rel_threshold";
  EmitNumber(out, o.rel_threshold);
  out << YAML::Key << "init_scale";
  EmitNumber(out, o.init_scale);
  out << YAML::Key << "seed" << YAML::Value << o.seed;
  out << YAML::Key << "starts" << YAML::Value;
  EmitMatrix(out, o.starts);
  out << YAML::EndMap;
  out << YAML::EndMap;

  const TaskSpec& t = c.task.spec;
  out << YAML::Key << "task" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "kind" << YAML::Value << std::string(TaskKindName(t.kind));
  out << YAML::Key << "x0" << YAML::Value;
  EmitList(out, t.x0);
  out << YAML::Key << "x0_jitter" << YAML::Value;
  EmitList(out, c.task.x0_jitter);
  out << YAML::Key << "horizon" << YAML::Value << t.horizon;
  out << YAML::Key << "dt";
  EmitNumber(out, t.dt);
  out << YAML::Key << "reference" << YAML::Value;
  EmitMatrix(out, t.reference);
  out << YAML::Key << "weights" << YAML::Value;
  EmitList(out, t.weights);
  out << YAML::EndMap;

  const TuningConfig& tu = c.tuning;
  out << YAML::Key << "tuning" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "outer_iterations" << YAML::Value << tu.outer_iterations;
  out << YAML::Key << "inner_epochs" << YAML::Value << tu.inner_epochs;
  out << YAML::Key << "lr_theta";
  EmitNumber(out, tu.lr_theta);
  out << YAML::Key << "lr_beta";
  EmitNumber(out, tu.lr_beta);
  out << YAML::Key << "w_task";
  EmitNumber(out, tu.w_task);
  out << YAML::Key << "w_sysid";
  EmitNumber(out, tu.w_sysid);
  out << YAML::Key << "adam" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "beta1";
  EmitNumber(out, tu.adam.beta1);
  out << YAML::Key << "beta2";
  EmitNumber(out, tu.adam.beta2);
  out << YAML::Key << "epsilon";
  EmitNumber(out, tu.adam.epsilon);
  out << YAML::EndMap;
  out << YAML::Key << "sysid_perturbation";
  EmitNumber(out, tu.sysid_perturbation);
  out << YAML::Key << "state_scale" << YAML::Value;
  EmitList(out, tu.state_scale);
  out << YAML::EndMap;

  out << YAML::Key << "run" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "strategies" << YAML::Value << YAML::Flow
      << YAML::BeginSeq;
  for (Strategy s : c.run.strategies) out << std::string(StrategyName(s));
  out << YAML::EndSeq;
  out << YAML::Key << "seeds" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (std::uint64_t s : c.run.seeds) out << s;
  out << YAML::EndSeq;
  out << YAML::Key << "output" << YAML::Value << c.run.output;
  out << YAML::Key << "record_wall_time" << YAML::Value
      << c.run.record_wall_time;
  out << YAML::Key << "threads" << YAML::Value << c.run.threads;
  out << YAML::Key << "dump_trajectories" << YAML::Value
      << c.run.dump_trajectories;
  out << YAML::EndMap;

  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace cotune
