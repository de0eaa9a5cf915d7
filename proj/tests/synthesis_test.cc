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
#include <string>

#include <gtest/gtest.h>

#include "cotune/error.h"
#include "cotune/objectives.h"
#include "cotune/synthesis.h"
#include "test_util.h"

namespace cotune {
namespace {

using Eigen::MatrixXd;

MatrixXd Scalar(double v) { return MatrixXd::Constant(1, 1, v); }

TEST(Linearize, MsdMatchesHandDerivedEuler) {
  const ModelParams msd{ModelKind::kMsd, {1.0, 1.0, 0.0}};
  const double x[] = {0, 0}, u[] = {0};
  const LinearizedModel lin = Linearize(msd, x, u, 0.05);
  MatrixXd A(2, 2), B(2, 1);
  A << 0.9975, 0.05, -0.05, 1.0;
  B << 0.0025, 0.05;
  EXPECT_TRUE(lin.A.isApprox(A, 1e-14)) << lin.A;
  EXPECT_TRUE(lin.B.isApprox(B, 1e-14)) << lin.B;
}

TEST(Linearize, DoubleIntegrator) {
  const ModelParams di{ModelKind::kMsd, {1.0, 0.0, 0.0}};
  const double x[] = {0, 0}, u[] = {0}, dt = 0.05;
  const LinearizedModel lin = Linearize(di, x, u, dt);
  MatrixXd A(2, 2), B(2, 1);
  A << 1, dt, 0, 1;
  B << dt * dt, dt;
  EXPECT_TRUE(lin.A.isApprox(A, 1e-14));
  EXPECT_TRUE(lin.B.isApprox(B, 1e-14));
}

TEST(Linearize, CartpoleMatchesFiniteDifferenceReference) {
  // Central-difference Jacobians from tests/oracles/derive.py.
  const ModelParams beta = ModelParams::Defaults(ModelKind::kCartpole);
  const double x[] = {0, 0, 0, 0}, u[] = {0};
  const LinearizedModel lin = Linearize(beta, x, u, 0.02);
  MatrixXd A(4, 4), B(4, 1);
  A << 1.0, -0.00028712195121929977, 0.02, 0.0,  //
      0.0, 1.0063166829268277, 0.0, 0.02,        //
      0.0, -0.01435609756096499, 1.0, 0.0,       //
      0.0, 0.3158341463413877, 0.0, 1.0;
  B << 0.0003902439024390244, -0.0005853658536585366, 0.01951219512195122,
      -0.02926829268292683;
  EXPECT_LT((lin.A - A).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_LT((lin.B - B).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Linearize, RejectsNonEquilibriumWithResidual) {
  const ModelParams msd{ModelKind::kMsd, {1.0, 1.0, 0.0}};
  const double x[] = {1, 0}, u[] = {0};
  try {
    Linearize(msd, x, u, 0.02);
    FAIL() << "non-equilibrium accepted";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("residual"), std::string::npos)
        << e.what();
  }
}

TEST(Lqr, ScalarRiccatiRoot) {
  const LqrSolution s =
      SolveDiscreteLqr(Scalar(1), Scalar(1), Scalar(1), Scalar(1));
  EXPECT_NEAR(s.K(0, 0), 0.6180339887, 1e-6);
  EXPECT_NEAR(s.P(0, 0), 1.6180339887, 1e-6);
}

TEST(Lqr, CheapControlIsDeadbeat) {
  const LqrSolution s =
      SolveDiscreteLqr(Scalar(1.7), Scalar(1), Scalar(1), Scalar(1e-8));
  EXPECT_NEAR(s.K(0, 0), 1.7, 1e-6);
}

TEST(Lqr, CartpoleGainsMatchReferenceAndStabilize) {
  // scipy.linalg.solve_discrete_are on the reference linearization.
  const std::vector<double> theta = testing::NominalLqr(1.0);
  testing::ExpectVectorNear(theta,
                            {-0.9073901972736632, -30.155079742032783,
                             -2.08989171542633, -7.428564664895968},
                            1e-5);
  const ModelParams beta = ModelParams::Defaults(ModelKind::kCartpole);
  const double x[] = {0, 0, 0, 0}, u[] = {0};
  const LinearizedModel lin = Linearize(beta, x, u, 0.02);
  const MatrixXd K = Eigen::Map<const MatrixXd>(theta.data(), 1, 4);
  EXPECT_LT(SpectralRadius(lin.A - lin.B * K), 1.0);
}

TEST(Lqr, UnstabilizableDoesNotConverge) {
  EXPECT_THROW(SolveDiscreteLqr(Scalar(2), Scalar(0), Scalar(1), Scalar(1)),
               SynthesisError);
}

TEST(LqrProperty, InvariantToJointScalingOfWeights) {
  const ModelParams beta = ModelParams::Defaults(ModelKind::kCartpole);
  const double x[] = {0, 0, 0, 0}, u[] = {0};
  const LinearizedModel lin = Linearize(beta, x, u, 0.02);
  const MatrixXd Q = MatrixXd::Identity(4, 4), R = Scalar(3.0);
  const auto base = SynthesizeLqr(lin.A, lin.B, Q, R);
  for (double c : {0.01, 0.5, 7.0, 1000.0}) {
    const auto scaled = SynthesizeLqr(lin.A, lin.B, c * Q, c * R);
    for (std::size_t i = 0; i < base.size(); ++i) {
      EXPECT_NEAR(scaled[i], base[i], 1e-8) << "c = " << c;
    }
  }
}

TaskSpec MsdSetPoint() {
  TaskSpec task;
  task.x0 = {1.0, 0.0};
  task.reference = {{0.0, 0.0}};
  task.horizon = 250;
  return task;
}

TEST(MlpSynthesis, MsdSetPointReducesLossFourfold) {
  const ModelParams msd{ModelKind::kMsd, {1.0, 1.0, 0.1}};
  const PolicySpec policy = PolicySpec::Mlp({2, 8, 1}, 5.0);
  const TaskSpec task = MsdSetPoint();
  MlpSynthesisOptions opt;
  opt.lr = 1e-2;
  opt.max_epochs = 2000;
  opt.rel_threshold = 0.25;
  opt.seed = 3;
  const auto theta = SynthesizeMlpNominal(msd, task, policy, opt);
  const auto init = InitMlp(policy.arch, opt.init_scale, opt.seed);
  EXPECT_LE(JTaskModel(msd, policy, theta, task),
            0.25 * JTaskModel(msd, policy, init, task));
  EXPECT_EQ(theta, SynthesizeMlpNominal(msd, task, policy, opt));
  EXPECT_NO_THROW(ModelRollout(msd, policy, theta, task.x0, task.horizon,
                               task.dt));
}

TEST(MlpSynthesis, ExhaustedBudgetReportsTheLoss) {
  const ModelParams msd{ModelKind::kMsd, {1.0, 1.0, 0.1}};
  const PolicySpec policy = PolicySpec::Mlp({2, 8, 1}, 5.0);
  MlpSynthesisOptions opt;
  opt.max_epochs = 2;
  opt.abs_threshold = 1e-12;
  try {
    SynthesizeMlpNominal(msd, MsdSetPoint(), policy, opt);
    FAIL() << "budget of 2 epochs reached 1e-12";
  } catch (const SynthesisError& e) {
    EXPECT_NE(std::string(e.what()).find("loss"), std::string::npos)
        << e.what();
  }
}

}  // namespace
}  // namespace cotune
