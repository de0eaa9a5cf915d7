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

// Acceptance run: one PASS/FAIL line per criterion. Exits non-zero if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cotune/config.h"
#include "cotune/gradsuite.h"
#include "cotune/harness.h"
#include "cotune/optim.h"
#include "cotune/synthesis.h"

namespace fs = std::filesystem;
using namespace cotune;

namespace {

int failures = 0;

void Report(int n, bool pass, const std::string& detail) {
  std::printf("criterion %d: %s  %s\n", n, pass ? "PASS" : "FAIL",
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string F(double v, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << v;
  return s.str();
}

double Seconds(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                       start)
      .count();
}

ExperimentConfig Load(const std::string& rel) {
  return LoadConfig(std::string(COTUNE_SOURCE_DIR) + "/configs/" + rel);
}

double Median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

const TuningReport* Cell(const RunResult& r, Strategy s, std::uint64_t seed) {
  for (const auto& c : r.cells) {
    if (c.strategy == s && c.seed == seed && c.report) return &*c.report;
  }
  return nullptr;
}

std::vector<double> Bests(const RunResult& r, Strategy s) {
  std::vector<double> out;
  for (const auto& c : r.cells) {
    if (c.strategy == s && c.report) out.push_back(c.report->j_best);
  }
  return out;
}

std::vector<double> Reductions(const RunResult& r, Strategy s) {
  std::vector<double> out;
  for (const auto& c : r.cells) {
    if (c.strategy == s && c.report) {
      out.push_back((c.report->j_nominal - c.report->j_best) /
                    c.report->j_nominal);
    }
  }
  return out;
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Every cell of every strategy: best <= nominal, no failed cells.
bool GuaranteeHolds(const RunResult& r, int& cells) {
  bool ok = r.failed_cells == 0;
  for (const auto& c : r.cells) {
    if (!c.report) continue;
    ++cells;
    ok = ok && c.report->j_best <= c.report->j_nominal;
  }
  return ok;
}

}  // namespace

int main() {
  const fs::path root = fs::temp_directory_path() / "cotune_acceptance";
  fs::remove_all(root);
  const auto out = [&](const std::string& name) {
    return (root / name).string();
  };

  // 1. Gradient suite.
  {
    const GradSuiteReport g = RunGradSuite(GradSuiteOptions{});
    Report(1, g.ok && g.elapsed_ms < 30000.0,
           std::to_string(g.cases.size()) + " cases, worst rel error " +
               F(g.worst_rel_error) + " (<= 1e-4), " +
               F(g.elapsed_ms / 1000) + " s (< 30 s)");
  }

  // Shared experiment runs.
  const ExperimentConfig fig5b = Load("fig5b.yaml");
  auto start = std::chrono::steady_clock::now();
  const RunResult r5b = RunExperiment(fig5b, out("fig5b"));
  const double fig5b_seconds = Seconds(start);

  const ExperimentConfig matched = Load("matched.yaml");
  const RunResult rm = RunExperiment(matched, out("matched"));

  ExperimentConfig msd = ParseConfig(
      "experiment: msd_all\n"
      "system: {kind: msd, factors: {mass: 1.5, stiffness: 0.8},"
      " noise_std: 0.002}\n"
      "model: {tunable: [mass, stiffness, damping]}\n"
      "controller: {kind: linear, synthesis: lqr}\n"
      "task: {x0: [1, 0], x0_jitter: [0.2, 0.2], horizon: 200}\n"
      "run: {strategies: [split_alternate, combined, difftune_model,"
      " difftune_system, sysid_then_tune], seeds: [0, 1, 2, 3, 4, 5, 6, 7, 8,"
      " 9]}\n");
  const RunResult rmsd = RunExperiment(msd, out("msd"));

  const ExperimentConfig mlp = Load("mlp_x4.yaml");
  const RunResult rmlp = RunExperiment(mlp, out("mlp_x4"));

  // 2. Best-tracking guarantee.
  {
    int cells = 0;
    bool ok = true;
    for (const RunResult* r : {&r5b, &rm, &rmsd, &rmlp}) {
      ok = GuaranteeHolds(*r, cells) && ok;
    }
    Report(2, ok,
           std::to_string(cells) +
               " cells (cartpole lqr/mlp, msd; all strategies) with "
               "J(theta*) <= J(theta~)");
  }

  // 3. Matched-domain parity.
  {
    const double split = Median(Bests(rm, Strategy::kSplitAlternate));
    const double model = Median(Bests(rm, Strategy::kDifftuneModel));
    const double gap = std::abs(split - model) / std::min(split, model);
    const double red_s = Median(Reductions(rm, Strategy::kSplitAlternate));
    const double red_m = Median(Reductions(rm, Strategy::kDifftuneModel));
    Report(3, gap <= 0.10 && red_s >= 0.5 && red_m >= 0.5,
           "median best split " + F(split) + " vs difftune_model " + F(model) +
               " (gap " + F(gap) + " <= 0.1), reductions " + F(red_s) +
               ", " + F(red_m) + " (>= 0.5)");
  }

  // 4. Mismatch advantage.
  {
    int wins = 0, below = 0, n = 0;
    for (std::uint64_t seed : fig5b.run.seeds) {
      const TuningReport* s = Cell(r5b, Strategy::kSplitAlternate, seed);
      const TuningReport* m = Cell(r5b, Strategy::kDifftuneModel, seed);
      if (!s || !m) continue;
      ++n;
      wins += s->j_best <= m->j_best;
      below += s->j_best < s->j_nominal;
    }
    Report(4, n == 10 && wins >= 7 && below >= 8 && fig5b_seconds < 300,
           "split <= difftune_model in " + std::to_string(wins) +
               "/10 (>= 7), below nominal in " + std::to_string(below) +
               "/10 (>= 8), fig5b run " + F(fig5b_seconds) + " s (< 300 s)");
  }

  // 5. MLP under 4x masses.
  {
    const double red = Median(Reductions(rmlp, Strategy::kSplitAlternate));
    const int count = mlp.Policy().param_count();
    const std::size_t seeds = Reductions(rmlp, Strategy::kSplitAlternate).size();
    Report(5, seeds == 5 && red >= 0.2 && count == 1249,
           "median reduction " + F(red) + " over " + std::to_string(seeds) +
               " seeds (>= 0.2), param_count " + std::to_string(count) +
               " (== 1249)");
  }

  // 6. Beta moves toward the truth after the first sysid phase.
  {
    const ModelParams truth = fig5b.Truth(), nominal = fig5b.Nominal();
    const std::vector<int> tunable = fig5b.Tunable();
    int closer = 0, n = 0;
    for (std::uint64_t seed : fig5b.run.seeds) {
      const TuningReport* s = Cell(r5b, Strategy::kSplitAlternate, seed);
      if (!s || s->iterations.size() < 2) continue;
      ++n;
      const std::vector<double>& beta1 = s->iterations[1].beta;
      double before = 0, after = 0;
      for (int i : tunable) {
        before += std::pow(nominal.values[i] - truth.values[i], 2);
        after += std::pow(beta1[i] - truth.values[i], 2);
      }
      closer += after < before;
    }
    Report(6, n == 10 && closer >= 9,
           "closer to beta_true in " + std::to_string(closer) + "/" +
               std::to_string(n) + " seeds (>= 9/10)");
  }

  // 7. Budget audit.
  {
    const int L = fig5b.tuning.outer_iterations, K = fig5b.tuning.inner_epochs;
    bool rollouts = true, split = true, single = true;
    for (const auto& c : r5b.cells) {
      if (!c.report) {
        rollouts = false;
        continue;
      }
      rollouts = rollouts && c.report->system_rollouts == L + 1 &&
                 c.report->iterations.size() == std::size_t(L + 1);
      for (std::size_t l = 1; l < c.report->iterations.size(); ++l) {
        int updates = 0;
        for (const auto& ph : c.report->iterations[l].phases) {
          updates += ph.updates;
        }
        if (c.strategy == Strategy::kSplitAlternate) {
          split = split && updates <= K;
        }
        if (c.strategy == Strategy::kDifftuneSystem) {
          single = single && updates == 1;
        }
      }
    }
    // Independent count through a wrapper, outside the harness.
    const ModelParams truth = fig5b.Truth();
    const std::vector<double> theta = SynthesizeNominal(fig5b);
    for (Strategy s : {Strategy::kSplitAlternate, Strategy::kCombined,
                       Strategy::kSysidThenTune}) {
      System sys(truth, {}, fig5b.system.integrator, 0);
      CountingSystem counted(sys);
      TuningConfig cfg = fig5b.tuning;
      cfg.strategy = s;
      RunStrategy(counted, ProblemForSeed(fig5b, 0), theta, cfg);
      rollouts = rollouts && counted.rollouts() == L + 1;
    }
    Report(7, rollouts && split && single,
           std::string("rollouts == L+1: ") + (rollouts ? "yes" : "no") +
               ", split updates <= K: " + (split ? "yes" : "no") +
               ", difftune_system 1 update/iter: " + (single ? "yes" : "no"));
  }

  // 8. Termination oracle.
  {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> level(0, 5), near(-2e-3, 2e-3),
        far(-1, 1);
    int mismatches = 0;
    for (int i = 0; i < 1000; ++i) {
      const double prev = level(rng);
      const double jk = prev + (i % 3 == 0 ? far(rng) : near(rng));
      const bool converged = std::fabs(jk - prev) < 1e-3;
      const bool diverged = jk > prev + 1e-3;
      const Verdict want = converged  ? Verdict::kConverged
                           : diverged ? Verdict::kDiverged
                                      : Verdict::kContinue;
      mismatches += Terminate(jk, prev) != want;
    }
    Report(8, mismatches == 0,
           std::to_string(mismatches) + " mismatches on 1000 cases");
  }

  // 9. LQR oracle.
  {
    const Eigen::MatrixXd one = Eigen::MatrixXd::Identity(1, 1);
    const double k = SolveDiscreteLqr(one, one, one, one).K(0, 0);
    const double golden = 0.6180339887498949;
    const ModelParams beta = fig5b.Nominal();
    const double x[] = {0, 0, 0, 0}, u[] = {0};
    const LinearizedModel lin = Linearize(beta, x, u, fig5b.task.spec.dt);
    const std::vector<double> theta = SynthesizeNominal(fig5b);
    const Eigen::Map<const Eigen::RowVectorXd> K(theta.data(), 4);
    const double rho = SpectralRadius(lin.A - lin.B * K);
    Report(9, std::abs(k - golden) <= 1e-6 && rho < 1,
           "scalar K " + F(k, 12) + " (|err| <= 1e-6), cartpole "
               "closed-loop spectral radius " + F(rho) + " (< 1)");
  }

  // 10. Iterative beats batch identification.
  {
    const double split = Median(Bests(r5b, Strategy::kSplitAlternate));
    const double batch = Median(Bests(r5b, Strategy::kSysidThenTune));
    Report(10, split <= batch,
           "median best split " + F(split) + " <= sysid_then_tune " + F(batch));
  }

  // 11. Uncertainty sweep.
  {
    bool ok = true;
    std::string detail;
    for (const char* name : {"mass_1.15", "mass_1.30", "mass_1.45",
                             "mass_1.60", "friction", "gear", "all"}) {
      const ExperimentConfig c = Load(std::string("fig8/") + name + ".yaml");
      const RunResult r = RunExperiment(c, out(std::string("fig8_") + name));
      const double red = Median(Reductions(r, Strategy::kSplitAlternate));
      const bool ran = r.failed_cells == 0;
      const bool graded = std::string(name).rfind("mass_1.6", 0) != 0 &&
                          std::string(name).rfind("mass", 0) == 0;
      ok = ok && ran && (!graded || red > 0);
      detail += std::string(name) + " " + F(red) + (ran ? "" : " (failed)") +
                "; ";
    }
    Report(11, ok, "split median reduction: " + detail);
  }

  // 12. Determinism.
  {
    const RunResult again = RunExperiment(fig5b, out("fig5b_rerun"));
    ExperimentConfig threaded = matched;
    threaded.run.threads = 4;
    RunExperiment(threaded, out("matched_threads"));
    const bool same5b = Slurp(root / "fig5b" / "results.csv") ==
                        Slurp(root / "fig5b_rerun" / "results.csv");
    const bool same_m = Slurp(root / "matched" / "results.csv") ==
                        Slurp(root / "matched_threads" / "results.csv");
    Report(12, same5b && same_m && again.rows == r5b.rows,
           std::string("fig5b rerun byte-identical: ") +
               (same5b ? "yes" : "no") + ", matched 1 vs 4 threads: " +
               (same_m ? "yes" : "no"));
  }

  fs::remove_all(root);
  std::printf("%d of 12 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
