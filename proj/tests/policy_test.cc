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
#include <random>

#include <gtest/gtest.h>

#include "cotune/autodiff.h"
#include "cotune/error.h"
#include "cotune/policy.h"
#include "cotune/synthesis.h"

namespace cotune {
namespace {

std::vector<double> Eval(const PolicySpec& spec, const std::vector<double>& x,
                         const std::vector<double>& theta) {
  return EvaluatePolicy<double>(spec, std::span<const double>(x),
                                std::span<const double>(theta));
}

TEST(LinearPolicy, ZeroGainOrZeroStateGivesZero) {
  const PolicySpec spec = PolicySpec::Linear(4, 1);
  EXPECT_EQ(Eval(spec, {1, -2, 3, 0.5}, {0, 0, 0, 0})[0], 0.0);
  EXPECT_EQ(Eval(spec, {0, 0, 0, 0}, {1, 2, 3, 4})[0], 0.0);
}

TEST(LinearPolicy, IsMinusKx) {
  const PolicySpec spec = PolicySpec::Linear(4, 1);
  EXPECT_EQ(Eval(spec, {1, 1, 1, 1}, {1, 2, 3, 4})[0], -10.0);
}

TEST(LinearPolicy, DimensionMismatchIsAnError) {
  const PolicySpec spec = PolicySpec::Linear(4, 1);
  EXPECT_THROW(Eval(spec, {1, 1, 1, 1}, {1, 2, 3}), ConfigError);
}

TEST(PdPolicy, ZeroErrorGivesZero) {
  PolicySpec spec = PolicySpec::Pd(2, 1, {0.5, 0.1});
  EXPECT_EQ(Eval(spec, {0.5, 0.1}, {3, 2})[0], 0.0);
}

TEST(PdPolicy, ProportionalTerm) {
  PolicySpec spec = PolicySpec::Pd(2, 1, {0.5, 0.0});
  EXPECT_EQ(Eval(spec, {0.0, 0.0}, {1, 0})[0], 0.5);
}

TEST(PdPolicy, GainDerivativeIsThePositionError) {
  const PolicySpec spec = PolicySpec::Pd(2, 1, {0.5, 0.0});
  Tape t;
  const std::vector<Var> x = {t.Constant(0.2), t.Constant(0.1)};
  const std::vector<Var> theta = {t.Leaf(2.0), t.Leaf(0.3)};
  const auto u = EvaluatePolicy<Var>(spec, std::span<const Var>(x),
                                     std::span<const Var>(theta));
  const GradientMap g = t.Backward(u[0]);
  EXPECT_DOUBLE_EQ(g[theta[0]], 0.3);
  EXPECT_DOUBLE_EQ(g[theta[1]], -0.1);
}

TEST(PdPolicy, ProjectionKeepsGainsNonNegative) {
  const PolicySpec spec = PolicySpec::Pd(2, 1);
  std::vector<double> theta = {-1.0, 2.0};
  ProjectTheta(spec, theta);
  EXPECT_EQ(theta, (std::vector<double>{0.0, 2.0}));
}

TEST(MlpPolicy, ZeroWeightsGiveZero) {
  const PolicySpec spec = PolicySpec::Mlp({4, 32, 32, 1}, 10.0);
  const std::vector<double> theta(1249, 0.0);
  EXPECT_EQ(Eval(spec, {0.3, -1, 2, 0.1}, theta)[0], 0.0);
}

TEST(MlpPolicy, SingleAffineLayerOnlySaturatesTheOutput) {
  // [1, 1] has no hidden layer: u = u_max * tanh(w x + b).
  const PolicySpec spec = PolicySpec::Mlp({1, 1}, 10.0);
  EXPECT_DOUBLE_EQ(Eval(spec, {0.3}, {1.0, 0.0})[0], 10.0 * std::tanh(0.3));
}

TEST(MlpPolicy, OneHiddenUnitHandEvaluation) {
  // [1, 1, 1]: u = u_max * tanh(w2 * tanh(w1 x + b1) + b2).
  const PolicySpec spec = PolicySpec::Mlp({1, 1, 1}, 2.0);
  const double expected = 2.0 * std::tanh(-1.5 * std::tanh(0.8 * 0.3 + 0.1) + 0.2);
  EXPECT_DOUBLE_EQ(Eval(spec, {0.3}, {0.8, 0.1, -1.5, 0.2})[0], expected);
}

TEST(MlpPolicy, LengthMismatchIsAnError) {
  const PolicySpec spec = PolicySpec::Mlp({4, 32, 32, 1}, 10.0);
  EXPECT_THROW(Eval(spec, {0, 0, 0, 0}, std::vector<double>(1248, 0.0)),
               ConfigError);
}

TEST(ParamCount, Layouts) {
  const int big[] = {4, 32, 32, 1};
  const int single[] = {4, 1};
  const int tiny[] = {1, 1};
  EXPECT_EQ(ParamCount(big), 1249);
  EXPECT_EQ(ParamCount(single), 5);
  EXPECT_EQ(ParamCount(tiny), 2);
  EXPECT_THROW(ParamCount(std::span<const int>()), ConfigError);
  EXPECT_EQ(PolicySpec::Linear(4, 1).param_count(), 4);
}

// d u / d x and d u / d theta against central differences for every kind.
TEST(PolicyProperty, DerivativesMatchFiniteDifferences) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<PolicySpec> specs = {PolicySpec::Linear(4, 1),
                                   PolicySpec::Pd(4, 2, {0.1, 0.2, 0, 0}),
                                   PolicySpec::Mlp({4, 8, 8, 1}, 10.0)};
  specs[0].u_max = 5.0;  // saturated linear policy
  for (const PolicySpec& spec : specs) {
    const std::size_t n = 4, p = spec.param_count();
    for (int trial = 0; trial < 10; ++trial) {
      std::vector<double> point(n + p);
      for (double& v : point) v = u(rng);
      const TapeFunction f = [&](Tape&, std::span<const Var> z) {
        return EvaluatePolicy<Var>(spec, z.subspan(0, n), z.subspan(n))[0];
      };
      const GradCheckResult r = GradCheckDetailed(f, point, 1e-6, 1e-4);
      EXPECT_TRUE(r.ok) << PolicyKindName(spec.kind) << " trial " << trial
                        << " rel " << r.max_rel_error;
    }
  }
}

TEST(PolicyProperty, PureFunctionOfStateAndParameters) {
  const PolicySpec spec = PolicySpec::Mlp({4, 8, 1}, 10.0);
  const std::vector<double> theta = InitMlp(spec.arch, 1.0, 4);
  const std::vector<double> x = {0.1, -0.2, 0.3, 0.05};
  const auto a = Eval(spec, x, theta);
  Eval(spec, {9, 9, 9, 9}, theta);
  EXPECT_EQ(Eval(spec, x, theta), a);
}

TEST(InitMlp, UniformWithinFanInScaleAndSeeded) {
  const int arch[] = {4, 32, 1};
  const auto a = InitMlp(arch, 1.0, 0);
  EXPECT_EQ(a, InitMlp(arch, 1.0, 0));
  EXPECT_NE(a, InitMlp(arch, 1.0, 1));
  ASSERT_EQ(a.size(), 193u);
  for (std::size_t i = 0; i < 160; ++i) EXPECT_LE(std::abs(a[i]), 0.5);
}

}  // namespace
}  // namespace cotune
