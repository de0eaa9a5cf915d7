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

#include <cmath>

#include <gtest/gtest.h>

#include "cotune/error.h"
#include "cotune/tuner.h"
#include "test_util.h"

namespace cotune {
namespace {

const std::vector<std::string> kMasses = {"cart_mass", "pole_mass"};

TuningProblem CartpoleProblem() {
  TuningProblem p;
  p.nominal = ModelParams::Defaults(ModelKind::kCartpole);
  p.tunable = TunableIndices(ModelKind::kCartpole, kMasses);
  p.policy = PolicySpec::Linear(4, 1);
  p.task.x0 = {0, 0.2, 0, 0};
  p.task.reference = {{0, 0, 0, 0}};
  return p;
}

ModelParams Heavier(double factor) {
  const std::pair<std::string, double> f[] = {{"cart_mass", factor},
                                              {"pole_mass", factor}};
  return Perturb(ModelParams::Defaults(ModelKind::kCartpole), f);
}

TuningConfig Config(Strategy s, int L = 2, int K = 20) {
  TuningConfig c;
  c.strategy = s;
  c.outer_iterations = L;
  c.inner_epochs = K;
  return c;
}

constexpr Strategy kAll[] = {Strategy::kCombined, Strategy::kSplitAlternate,
                             Strategy::kDifftuneModel,
                             Strategy::kDifftuneSystem,
                             Strategy::kSysidThenTune};

class TunerTest : public ::testing::Test {
 protected:
  TuningProblem problem = CartpoleProblem();
  std::vector<double> theta = testing::NominalLqr(100.0);
};

TEST_F(TunerTest, RolloutBudgetIsLPlusOne) {
  for (Strategy s : kAll) {
    for (int L : {0, 1, 3}) {
      System sys(Heavier(1.3), {}, Integrator::kRk4, 0);
      CountingSystem counted(sys);
      const TuningReport r = RunStrategy(counted, problem, theta, Config(s, L));
      EXPECT_EQ(counted.rollouts(), L + 1) << StrategyName(s) << " L=" << L;
      EXPECT_EQ(r.system_rollouts, L + 1);
      EXPECT_EQ(r.iterations.size(), static_cast<std::size_t>(L + 1));
    }
  }
}

TEST_F(TunerTest, ZeroIterationsReturnsNominal) {
  for (Strategy s : kAll) {
    System sys(Heavier(1.3), {}, Integrator::kRk4, 0);
    const TuningReport r = RunStrategy(sys, problem, theta, Config(s, 0));
    ASSERT_EQ(r.iterations.size(), 1u);
    EXPECT_EQ(r.theta_best, theta);
    EXPECT_EQ(r.j_best, r.j_nominal);
    EXPECT_EQ(r.iterations[0].term_reason, "nominal");
  }
}

TEST_F(TunerTest, BestNeverWorseThanNominal) {
  for (Strategy s : kAll) {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      System sys(Heavier(1.3), {0.01, 0.01, 0.01, 0.01}, Integrator::kRk4,
                 seed);
      TuningConfig c = Config(s);
      c.seed = seed;
      const TuningReport r = RunStrategy(sys, problem, theta, c);
      EXPECT_LE(r.j_best, r.j_nominal) << StrategyName(s);
      EXPECT_EQ(r.j_best, r.iterations[r.best_index].j_task_sys);
      EXPECT_EQ(r.theta_best, r.iterations[r.best_index].theta);
    }
  }
}

TEST_F(TunerTest, InnerEpochBudgets) {
  const int K = 30;
  for (Strategy s : {Strategy::kCombined, Strategy::kSplitAlternate}) {
    System sys(Heavier(1.3), {}, Integrator::kRk4, 0);
    const TuningReport r = RunStrategy(sys, problem, theta, Config(s, 3, K));
    for (std::size_t l = 1; l < r.iterations.size(); ++l) {
      int updates = 0;
      for (const auto& ph : r.iterations[l].phases) updates += ph.updates;
      EXPECT_LE(updates, K) << StrategyName(s);
    }
  }
}

TEST_F(TunerTest, SplitPhasesGetHalfTheBudgetEach) {
  System sys(Heavier(1.3), {}, Integrator::kRk4, 0);
  const TuningReport r =
      RunStrategy(sys, problem, theta, Config(Strategy::kSplitAlternate, 1, 7));
  const auto& phases = r.iterations[1].phases;
  ASSERT_EQ(phases.size(), 2u);
  EXPECT_EQ(phases[0].name, "sysid");
  EXPECT_EQ(phases[1].name, "task");
  EXPECT_LE(phases[0].updates, 3);
  EXPECT_LE(phases[1].updates, 4);
}

TEST_F(TunerTest, DifftuneSystemMakesOneUpdatePerIteration) {
  System sys(Heavier(1.3), {}, Integrator::kRk4, 0);
  const TuningReport r = RunStrategy(
      sys, problem, theta, Config(Strategy::kDifftuneSystem, 4, 100));
  for (std::size_t l = 1; l < r.iterations.size(); ++l) {
    ASSERT_EQ(r.iterations[l].phases.size(), 1u);
    EXPECT_EQ(r.iterations[l].phases[0].updates, 1);
    EXPECT_NE(r.iterations[l].theta, r.iterations[l - 1].theta);
  }
}

TEST_F(TunerTest, DifftuneModelKeepsNominalBeta) {
  System sys(Heavier(1.3), {}, Integrator::kRk4, 0);
  const TuningReport r =
      RunStrategy(sys, problem, theta, Config(Strategy::kDifftuneModel, 3));
  for (const auto& rec : r.iterations) {
    EXPECT_EQ(rec.beta, problem.nominal.values);
  }
}

TEST_F(TunerTest, SensitivityGradientEqualsBpttOnMatchedSystem) {
  System sys(problem.nominal, {}, Integrator::kSemiImplicitEuler, 0);
  const Trajectory traj = sys.Rollout(problem.policy, theta, problem.task.x0,
                                      problem.task.horizon, problem.task.dt);
  const std::vector<double> sens =
      SensitivityGradient(problem, problem.nominal, theta, traj);
  ObjectiveRequest req;
  req.beta = &problem.nominal;
  req.policy = &problem.policy;
  req.theta = theta;
  req.task = &problem.task;
  const ObjectiveResult bptt = EvaluateObjective(req);
  testing::ExpectVectorNear(sens, bptt.grad_theta, 1e-6);
}

TEST_F(TunerTest, MatchedSystemSysIdPhaseConvergesImmediately) {
  System sys(problem.nominal, {}, Integrator::kSemiImplicitEuler, 0);
  const TuningReport r =
      RunStrategy(sys, problem, theta, Config(Strategy::kSplitAlternate, 1));
  const PhaseTrace& sysid = r.iterations[1].phases[0];
  EXPECT_EQ(sysid.reason, "converged@1");
  EXPECT_EQ(sysid.losses[0], 0.0);
  EXPECT_EQ(r.iterations[1].beta, problem.nominal.values);
}

TEST_F(TunerTest, CombinedWithoutSysIdIsPlainThetaDescent) {
  problem.tunable.clear();
  System sys(Heavier(1.3), {}, Integrator::kRk4, 0);
  TuningConfig combined = Config(Strategy::kCombined, 1, 40);
  combined.w_sysid = 0.0;
  const TuningReport a = RunStrategy(sys, problem, theta, combined);
  const TuningReport b = RunStrategy(
      sys, problem, theta, Config(Strategy::kDifftuneModel, 1, 40));
  testing::ExpectVectorNear(a.iterations[1].theta, b.iterations[1].theta,
                            1e-12);
}

TEST_F(TunerTest, SplitPhaseOneMovesBetaTowardTruth) {
  const ModelParams truth = Heavier(1.3);
  int closer = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    System sys(truth, {0.005, 0.005, 0.005, 0.005}, Integrator::kRk4, seed);
    const Trajectory traj = sys.Rollout(problem.policy, theta, problem.task.x0,
                                        problem.task.horizon, problem.task.dt);
    TuningConfig c = Config(Strategy::kSplitAlternate, 1, 100);
    const UpdateResult up =
        UpdateSplitAlternate(problem, problem.nominal, theta, traj, c);
    const PhaseTrace& ph = up.phases[0];
    EXPECT_LE(ph.final_loss, 0.99 * ph.losses.front());
    double before = 0, after = 0;
    for (int i : problem.tunable) {
      before += std::pow(problem.nominal.values[i] - truth.values[i], 2);
      after += std::pow(up.beta.values[i] - truth.values[i], 2);
    }
    closer += after < before;
  }
  EXPECT_EQ(closer, 5);
}

TEST_F(TunerTest, CombinedTraceFiniteUnderMismatch) {
  System sys(Heavier(1.3), {}, Integrator::kRk4, 0);
  const TuningReport r =
      RunStrategy(sys, problem, theta, Config(Strategy::kCombined, 1, 100));
  const PhaseTrace& ph = r.iterations[1].phases[0];
  EXPECT_LE(ph.updates, 100);
  for (double j : ph.losses) EXPECT_TRUE(std::isfinite(j));
}

TEST_F(TunerTest, RollbackNeverReturnsWorseThanDivergedEpoch) {
  TuningConfig c = Config(Strategy::kSplitAlternate, 3, 100);
  c.lr_theta = 0.5;
  c.lr_beta = 0.5;
  System sys(Heavier(1.3), {}, Integrator::kRk4, 0);
  const TuningReport r = RunStrategy(sys, problem, theta, c);
  for (const auto& rec : r.iterations) {
    for (const auto& ph : rec.phases) {
      if (ph.reason.rfind("diverged", 0) == 0) {
        EXPECT_LE(ph.final_loss, ph.losses.back());
      }
    }
  }
}

TEST_F(TunerTest, SysidThenTuneRecoversCartMass) {
  problem.tunable = TunableIndices(ModelKind::kCartpole,
                                   std::vector<std::string>{"cart_mass"});
  const std::pair<std::string, double> f[] = {{"cart_mass", 1.3}};
  const ModelParams truth = Perturb(problem.nominal, f);
  // Same integrator as the model and wide initial states: the mass is
  // identifiable and the fit is large enough to outlast the stopping rule.
  System sys(truth, {}, Integrator::kSemiImplicitEuler, 0);
  TuningConfig c = Config(Strategy::kSysidThenTune, 5, 100);
  c.sysid_perturbation = 1.0;
  c.state_scale = {1.0, 0.3, 1.0, 1.0};
  const TuningReport r = RunStrategy(sys, problem, theta, c);
  const double fitted = r.iterations.back().beta[0];
  EXPECT_NEAR(fitted, truth.values[0], 0.05 * truth.values[0])
      << r.iterations.back().term_reason;
  for (std::size_t i = 1; i + 1 < r.iterations.size(); ++i) {
    EXPECT_EQ(r.iterations[i].term_reason, "collect");
    EXPECT_FALSE(r.iterations[i].scored);
  }
}

TEST_F(TunerTest, Deterministic) {
  for (Strategy s : kAll) {
    const auto run = [&] {
      System sys(Heavier(1.3), {0.01, 0.01, 0.01, 0.01}, Integrator::kRk4, 5);
      TuningConfig c = Config(s);
      c.seed = 5;
      return RunStrategy(sys, problem, theta, c);
    };
    const TuningReport a = run(), b = run();
    ASSERT_EQ(a.iterations.size(), b.iterations.size());
    for (std::size_t l = 0; l < a.iterations.size(); ++l) {
      EXPECT_EQ(a.iterations[l].theta, b.iterations[l].theta);
      EXPECT_EQ(a.iterations[l].beta, b.iterations[l].beta);
      EXPECT_EQ(a.iterations[l].j_task_sys, b.iterations[l].j_task_sys);
      EXPECT_EQ(a.iterations[l].j_sysid, b.iterations[l].j_sysid);
      EXPECT_EQ(a.iterations[l].term_reason, b.iterations[l].term_reason);
    }
  }
}

TEST_F(TunerTest, UnstableNominalIsASynthesisError) {
  System sys(problem.nominal, {}, Integrator::kRk4, 0);
  const std::vector<double> bad = {0, 0, -1e4, 0};
  EXPECT_THROW(RunStrategy(sys, problem, bad, Config(Strategy::kSplitAlternate)),
               SynthesisError);
}

TEST_F(TunerTest, CotuneRejectsBaselineStrategies) {
  System sys(problem.nominal, {}, Integrator::kRk4, 0);
  EXPECT_THROW(Cotune(sys, problem, theta, Config(Strategy::kDifftuneModel)),
               ConfigError);
}

TEST(TuningConfig, ParseAndValidate) {
  EXPECT_EQ(ParseStrategy("split_alternate"), Strategy::kSplitAlternate);
  EXPECT_EQ(StrategyName(Strategy::kSysidThenTune), "sysid_then_tune");
  EXPECT_THROW(ParseStrategy("nope"), ConfigError);
  TuningConfig c;
  c.inner_epochs = 0;
  EXPECT_THROW(c.Validate(), ConfigError);
  c = TuningConfig{};
  c.w_task = 0;
  c.w_sysid = 0;
  EXPECT_THROW(c.Validate(), ConfigError);
}

}  // namespace
}  // namespace cotune
