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

// Python bindings: config handling, experiment runs, comparison, gradient
// checks and the synthesis and rollout primitives.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "cotune/config.h"
#include "cotune/error.h"
#include "cotune/gradsuite.h"
#include "cotune/harness.h"
#include "cotune/objectives.h"
#include "cotune/optim.h"
#include "cotune/synthesis.h"

namespace py = pybind11;

namespace cotune {
namespace {

ModelParams Params(const std::string& model, const py::object& beta) {
  ModelParams p = ModelParams::Defaults(ParseModelKind(model));
  if (beta.is_none()) return p;
  if (py::isinstance<py::dict>(beta)) {
    for (auto item : beta.cast<py::dict>()) {
      p.Set(item.first.cast<std::string>(), item.second.cast<double>());
    }
  } else {
    p.values = beta.cast<std::vector<double>>();
  }
  p.Validate();
  return p;
}

PolicySpec Policy(const std::string& model, const std::string& kind,
                  const std::vector<int>& arch, double u_max) {
  const ModelKind m = ParseModelKind(model);
  switch (ParsePolicyKind(kind)) {
    case PolicyKind::kLinear: {
      PolicySpec s = PolicySpec::Linear(StateDim(m), ControlDim(m));
      s.u_max = u_max;
      return s;
    }
    case PolicyKind::kPd: {
      PolicySpec s = PolicySpec::Pd(StateDim(m), ControlDim(m));
      s.u_max = u_max;
      return s;
    }
    case PolicyKind::kMlp:
      return PolicySpec::Mlp(arch, u_max > 0 ? u_max : 10.0);
  }
  throw ConfigError("unknown policy kind");
}

py::dict RowDict(const ResultRow& r) {
  py::dict d;
  d["experiment"] = r.experiment;
  d["strategy"] = r.strategy;
  d["seed"] = r.seed;
  d["iter"] = r.iter;
  d["j_task_sys"] = r.j_task_sys;
  d["j_sysid"] = r.j_sysid;
  d["term_reason"] = r.term_reason;
  d["wall_ms"] = r.wall_ms;
  return d;
}

py::dict SummaryDict(const Comparison& c) {
  py::dict out;
  for (const auto& s : c.strategies) {
    py::dict d;
    d["seeds"] = s.seeds;
    d["failed"] = s.failed;
    d["median_best"] = s.median_best;
    d["q1_best"] = s.q1_best;
    d["q3_best"] = s.q3_best;
    d["median_nominal"] = s.median_nominal;
    d["median_reduction"] = s.median_reduction;
    py::dict wins;
    for (const auto& [other, rate] : s.win_rate) wins[other.c_str()] = rate;
    d["win_rate"] = wins;
    out[s.strategy.c_str()] = d;
  }
  return out;
}

}  // namespace
}  // namespace cotune

PYBIND11_MODULE(_cotune, m) {
  using namespace cotune;
  m.doc() = "Co-tuning of simulator and controller parameters";

  // Translators run newest first, so the subclass is registered last.
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::class_<ExperimentConfig>(m, "Config")
      .def_static(
          "parse",
          [](const std::string& text) { return ParseConfig(text, "<python>"); },
          py::arg("text"))
      .def_static("load", &LoadConfig, py::arg("path"))
      .def("to_yaml", &DumpConfig)
      .def_readwrite("experiment", &ExperimentConfig::experiment)
      .def_property(
          "seeds", [](const ExperimentConfig& c) { return c.run.seeds; },
          [](ExperimentConfig& c, std::vector<std::uint64_t> s) {
            c.run.seeds = std::move(s);
          })
      .def_property(
          "strategies",
          [](const ExperimentConfig& c) {
            std::vector<std::string> out;
            for (Strategy s : c.run.strategies) {
              out.emplace_back(StrategyName(s));
            }
            return out;
          },
          [](ExperimentConfig& c, const std::vector<std::string>& names) {
            c.run.strategies.clear();
            for (const auto& n : names) {
              c.run.strategies.push_back(ParseStrategy(n));
            }
          })
      .def_property(
          "outer_iterations",
          [](const ExperimentConfig& c) { return c.tuning.outer_iterations; },
          [](ExperimentConfig& c, int v) { c.tuning.outer_iterations = v; })
      .def_property(
          "inner_epochs",
          [](const ExperimentConfig& c) { return c.tuning.inner_epochs; },
          [](ExperimentConfig& c, int v) { c.tuning.inner_epochs = v; })
      .def("validate", &ValidateConfig)
      .def("__eq__", [](const ExperimentConfig& a, const ExperimentConfig& b) {
        return a == b;
      });

  m.def(
      "run_experiment",
      [](const ExperimentConfig& config, const std::string& out_dir) {
        RunResult r;
        {
          py::gil_scoped_release release;
          r = RunExperiment(config, out_dir);
        }
        py::list rows;
        for (const auto& row : r.rows) rows.append(RowDict(row));
        return rows;
      },
      py::arg("config"), py::arg("out_dir"),
      "Runs every (strategy, seed) cell; returns the results.csv rows.");

  m.def(
      "compare",
      [](const std::string& dir) {
        const Comparison c = CompareStrategies(dir);
        return py::make_tuple(SummaryDict(c), ComparisonTable(c));
      },
      py::arg("dir"), "Returns (per-strategy summary, printable table).");

  m.def(
      "read_results",
      [](const std::string& path) {
        py::list rows;
        for (const auto& row : ReadResults(path)) rows.append(RowDict(row));
        return rows;
      },
      py::arg("path"));

  m.def(
      "gradcheck",
      [](int seeds, int horizon, bool include_mlp) {
        GradSuiteOptions o;
        o.seeds = seeds;
        o.horizon = horizon;
        o.include_mlp = include_mlp;
        GradSuiteReport r;
        {
          py::gil_scoped_release release;
          r = RunGradSuite(o);
        }
        py::dict d;
        d["ok"] = r.ok;
        d["cases"] = r.cases.size();
        d["worst_rel_error"] = r.worst_rel_error;
        d["elapsed_ms"] = r.elapsed_ms;
        return d;
      },
      py::arg("seeds") = 20, py::arg("horizon") = 50,
      py::arg("include_mlp") = true);

  m.def(
      "rollout",
      [](const std::string& model, const std::vector<double>& theta,
         const std::vector<double>& x0, int horizon, double dt,
         const py::object& beta, const std::string& policy,
         const std::vector<int>& arch, double u_max) {
        const Trajectory t =
            ModelRollout(Params(model, beta), Policy(model, policy, arch, u_max),
                         theta, x0, horizon, dt);
        return py::make_tuple(t.states, t.controls);
      },
      py::arg("model"), py::arg("theta"), py::arg("x0"),
      py::arg("horizon") = 250, py::arg("dt") = 0.02,
      py::arg("beta") = py::none(), py::arg("policy") = "linear",
      py::arg("arch") = std::vector<int>{}, py::arg("u_max") = 0.0,
      "Model rollout; returns (states, controls).");

  m.def(
      "j_task",
      [](const std::string& model, const std::vector<double>& theta,
         const std::vector<double>& x0, int horizon, double dt,
         const py::object& beta) {
        TaskSpec task;
        task.x0 = x0;
        task.horizon = horizon;
        task.dt = dt;
        task.reference = {std::vector<double>(x0.size(), 0.0)};
        return JTaskModel(Params(model, beta), Policy(model, "linear", {}, 0),
                          theta, task);
      },
      py::arg("model"), py::arg("theta"), py::arg("x0"),
      py::arg("horizon") = 250, py::arg("dt") = 0.02,
      py::arg("beta") = py::none(),
      "Stabilization loss of a linear policy on the model.");

  m.def(
      "linearize",
      [](const std::string& model, double dt, const py::object& beta) {
        const ModelParams p = Params(model, beta);
        const std::vector<double> x(StateDim(p.kind), 0.0);
        const std::vector<double> u(ControlDim(p.kind), 0.0);
        const LinearizedModel lin = Linearize(p, x, u, dt);
        return py::make_tuple(lin.A, lin.B);
      },
      py::arg("model"), py::arg("dt") = 0.02, py::arg("beta") = py::none(),
      "Discrete (A, B) about the rest state.");

  m.def(
      "lqr",
      [](const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
         const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R) {
        return SolveDiscreteLqr(A, B, Q, R).K;
      },
      py::arg("A"), py::arg("B"), py::arg("Q"), py::arg("R"),
      "Infinite-horizon discrete LQR gain K (u = -K x).");

  m.def("spectral_radius", &SpectralRadius, py::arg("M"));

  m.def(
      "terminate",
      [](double j_k, double j_prev) {
        return std::string(VerdictName(Terminate(j_k, j_prev)));
      },
      py::arg("j_k"), py::arg("j_prev"));

  m.def(
      "param_count",
      [](const std::vector<int>& arch) { return ParamCount(arch); },
      py::arg("arch"));

  m.attr("CSV_HEADER") = std::string(kCsvHeader);
}
