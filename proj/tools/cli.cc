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

#include "cli.h"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "canned.h"
#include "cotune/config.h"
#include "cotune/error.h"
#include "cotune/format.h"
#include "cotune/gradsuite.h"
#include "cotune/harness.h"

namespace cotune {

namespace {

namespace fs = std::filesystem;

struct Globals {
  std::optional<std::uint64_t> seed_override;
  bool quiet = false;
};

void ApplyOverrides(ExperimentConfig& cfg, const Globals& g) {
  if (g.seed_override) cfg.run.seeds = {*g.seed_override};
}

// Runs one config into `dir` and prints its comparison table.
int RunOne(const ExperimentConfig& cfg, const std::string& dir,
           const Globals& g, std::ostream& out, std::ostream& err,
           std::optional<Comparison>* comparison = nullptr) {
  if (!g.quiet) err << "running " << cfg.experiment << " -> " << dir << "\n";
  const RunResult result = RunExperiment(cfg, dir, g.quiet ? nullptr : &err);
  if (result.failed_cells < static_cast<int>(result.cells.size())) {
    Comparison cmp = CompareStrategies(dir);
    if (!g.quiet) out << ComparisonTable(cmp);
    if (comparison) *comparison = std::move(cmp);
  }
  if (result.failed_cells > 0) {
    err << cfg.experiment << ": " << result.failed_cells << " of "
        << result.cells.size() << " cells failed (see " << dir
        << "/results.csv)\n";
    return kExitRuntime;
  }
  return kExitOk;
}

int CmdRun(const std::string& path, const std::optional<std::string>& out_dir,
           const Globals& g, std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg = LoadConfig(path);
  ApplyOverrides(cfg, g);
  return RunOne(cfg, ResolveOutputDir(out_dir, cfg), g, out, err);
}

int CmdCompare(const std::string& dir, const Globals& g, std::ostream& out) {
  const Comparison cmp = CompareStrategies(dir);
  if (!g.quiet) out << ComparisonTable(cmp);
  return kExitOk;
}

int CmdGradcheck(int seeds, int horizon, bool mlp, const Globals& g,
                 std::ostream& out) {
  GradSuiteOptions opt;
  opt.seeds = seeds;
  opt.horizon = horizon;
  opt.include_mlp = mlp;
  const GradSuiteReport report = RunGradSuite(opt);
  if (!g.quiet) {
    for (const auto& c : report.cases) {
      if (c.ok) continue;
      out << "FAIL " << ModelKindName(c.model) << ' '
          << PolicyKindName(c.policy) << " seed " << c.seed
          << " rel_err theta " << FormatDouble(c.rel_error_theta) << " beta "
          << FormatDouble(c.rel_error_beta) << "\n";
    }
  }
  out << "gradcheck " << (report.ok ? "PASS" : "FAIL") << ": "
      << report.cases.size() << " cases, horizon " << horizon
      << ", worst relative error " << FormatDouble(report.worst_rel_error)
      << " (tol " << FormatDouble(opt.tol) << "), "
      << static_cast<long>(report.elapsed_ms) << " ms\n";
  return report.ok ? kExitOk : kExitRuntime;
}

int CmdReproduce(const std::string& target,
                 const std::optional<std::string>& out_flag, const Globals& g,
                 std::ostream& out, std::ostream& err) {
  const std::vector<canned::Entry> entries = canned::Target(target);
  if (entries.empty()) {
    err << "unknown reproduce target '" << target << "'; available:";
    for (const auto& e : canned::All()) err << ' ' << e.name;
    err << "\n";
    return kExitValidation;
  }
  // Parse everything first so a bad config fails before any run starts.
  std::vector<ExperimentConfig> configs;
  for (const auto& e : entries) {
    configs.push_back(ParseConfig(e.text, std::string(e.name) + ".yaml"));
    ApplyOverrides(configs.back(), g);
  }
  ExperimentConfig probe;
  probe.run.output = "results/" + target;
  const fs::path base = ResolveOutputDir(out_flag, probe);

  int code = kExitOk;
  std::string sweep =
      "experiment,strategy,seeds,median_nominal,median_best,"
      "median_reduction\n";
  for (std::size_t i = 0; i < entries.size(); ++i) {
    fs::path dir = base;
    if (entries.size() > 1) {
      dir /= std::string(entries[i].name.substr(target.size() + 1));
    }
    std::optional<Comparison> cmp;
    code = std::max(code, RunOne(configs[i], dir.string(), g, out, err, &cmp));
    if (!cmp) continue;
    for (const auto& s : cmp->strategies) {
      sweep += cmp->experiment + ',' + s.strategy + ',' +
               std::to_string(s.seeds) + ',' + FormatDouble(s.median_nominal) +
               ',' + FormatDouble(s.median_best) + ',' +
               FormatDouble(s.median_reduction) + '\n';
    }
  }
  if (entries.size() > 1) {
    fs::create_directories(base);
    std::ofstream((base / "sweep.csv").string()) << sweep;
    if (!g.quiet) out << "sweep summary: " << (base / "sweep.csv").string() << "\n";
  }
  return code;
}

}  // namespace

int RunCli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Co-tuning of simulator and controller parameters", "cotune"};
  app.require_subcommand(1);
  Globals g;
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed-override", seed,
                                  "Run only this seed instead of run.seeds");
  app.add_flag("--quiet,-q", g.quiet, "Suppress progress and tables");

  std::string config_path, compare_dir, target;
  std::optional<std::string> out_dir;
  int gc_seeds = 20, gc_horizon = 50;
  bool gc_no_mlp = false;

  auto* run = app.add_subcommand("run", "Run an experiment config");
  run->add_option("config", config_path, "YAML experiment config")
      ->required()
      ->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "Output directory");

  auto* compare = app.add_subcommand("compare", "Summarize a results directory");
  compare->add_option("dir", compare_dir, "Directory holding results.csv")
      ->required();

  auto* gradcheck = app.add_subcommand(
      "gradcheck", "Finite-difference check of rollout gradients");
  gradcheck->add_option("--seeds", gc_seeds, "Random points per case")
      ->check(CLI::PositiveNumber);
  gradcheck->add_option("--horizon", gc_horizon, "Rollout length")
      ->check(CLI::PositiveNumber);
  gradcheck->add_flag("--no-mlp", gc_no_mlp, "Skip the MLP policy cases");

  auto* reproduce = app.add_subcommand("reproduce", "Run a canned experiment");
  reproduce->add_option("target", target, "fig5b, fig8, matched or mlp_x4")
      ->required();
  reproduce->add_option("--out", out_dir, "Output directory");

  for (auto* sub : {run, compare, gradcheck, reproduce}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Prints help for --help and the message for parse errors.
    return app.exit(e, out, err) == 0 ? kExitOk : kExitValidation;
  }
  if (*seed_opt) g.seed_override = seed;

  try {
    if (*run) return CmdRun(config_path, out_dir, g, out, err);
    if (*compare) return CmdCompare(compare_dir, g, out);
    if (*gradcheck) {
      return CmdGradcheck(gc_seeds, gc_horizon, !gc_no_mlp, g, out);
    }
    if (*reproduce) return CmdReproduce(target, out_dir, g, out, err);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitValidation;
}

}  // namespace cotune
