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

// Experiment runner: (strategy, seed) cells over one config, CSV results,
// trajectory dumps and the strategy comparison table.
//
// Output directory layout:
//   results.csv                        one row per (strategy, seed, iter)
//   config.yaml                        fully expanded config
//   nominal.txt                        nominal controller parameters
//   traj/<strategy>/seed<s>_iter<l>.txt
//   params/<strategy>_seed<s>.txt      beta and theta per iteration
//   summary.csv, summary.txt           written by CompareStrategies

#ifndef COTUNE_HARNESS_H_
#define COTUNE_HARNESS_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cotune/config.h"
#include "cotune/tuner.h"

namespace cotune {

inline constexpr std::string_view kCsvHeader =
    "experiment,strategy,seed,iter,j_task_sys,j_sysid,term_reason,wall_ms";

struct ResultRow {
  std::string experiment;
  std::string strategy;
  std::uint64_t seed = 0;
  int iter = 0;
  double j_task_sys = 0.0;
  double j_sysid = 0.0;
  std::string term_reason;
  double wall_ms = 0.0;

  bool operator==(const ResultRow&) const = default;
};

std::string FormatRow(const ResultRow& row);
// Throws Error on a malformed line.
ResultRow ParseRow(std::string_view line);
// Reads a results.csv; the header must match kCsvHeader exactly.
std::vector<ResultRow> ReadResults(const std::string& path);

// Nominal controller of the config, synthesized on the nominal model.
// Throws SynthesisError on failure.
std::vector<double> SynthesizeNominal(const ExperimentConfig& config);

TuningProblem ProblemForSeed(const ExperimentConfig& config,
                             std::uint64_t seed);

struct CellResult {
  Strategy strategy = Strategy::kSplitAlternate;
  std::uint64_t seed = 0;
  std::optional<TuningReport> report;  // empty when the cell failed
  std::string error;
  double wall_ms = 0.0;
};

struct RunResult {
  std::string out_dir;
  std::vector<ResultRow> rows;
  std::vector<CellResult> cells;  // strategy-major, config order
  int failed_cells = 0;
};

// Runs every (strategy, seed) cell and writes the artifacts to `out_dir`.
// Cell failures become error rows; only I/O problems throw.
RunResult RunExperiment(const ExperimentConfig& config,
                        const std::string& out_dir,
                        std::ostream* progress = nullptr);

// `flag` if given, else $COTUNE_OUT if set and non-empty, else run.output.
std::string ResolveOutputDir(const std::optional<std::string>& flag,
                             const ExperimentConfig& config);

// Writes the trajectory dump format: "# horizon dt failed" header line, then
// one "t x... u..." row per step. The last state has no control; its u
// columns are omitted.
void WriteTrajectory(const std::string& path, const Trajectory& traj);
Trajectory ReadTrajectory(const std::string& path);

struct StrategySummary {
  std::string strategy;
  int seeds = 0;   // completed cells
  int failed = 0;  // cells with an error row
  double median_best = 0.0;
  double q1_best = 0.0;
  double q3_best = 0.0;
  double median_nominal = 0.0;
  double median_reduction = 0.0;  // of (J_nominal - J_best) / J_nominal
  // Fraction of shared seeds on which this strategy's best loss is lower
  // than the other's (ties count one half), per other strategy.
  std::vector<std::pair<std::string, double>> win_rate;
};

struct Comparison {
  std::string experiment;
  std::vector<StrategySummary> strategies;
};

Comparison Compare(const std::vector<ResultRow>& rows);
std::string ComparisonCsv(const Comparison& comparison);
std::string ComparisonTable(const Comparison& comparison);

// Reads <dir>/results.csv, writes summary.csv and summary.txt next to it.
// Mixed experiment ids are an error.
Comparison CompareStrategies(const std::string& dir);

}  // namespace cotune

#endif  // COTUNE_HARNESS_H_
