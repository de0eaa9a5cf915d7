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

#ifndef COTUNE_OPTIM_H_
#define COTUNE_OPTIM_H_

#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cotune {

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  bool operator==(const AdamHyper&) const = default;
};

// Bias-corrected Adam. Parameters optimized in log coordinates are passed in
// already transformed, which keeps their physical values positive.
class AdamState {
 public:
  explicit AdamState(std::size_t size, AdamHyper hyper = {});

  // params -= lr * m_hat / (sqrt(v_hat) + eps). Throws DomainError naming
  // the offending indices if grad has non-finite entries.
  void Step(std::span<double> params, std::span<const double> grad,
            double lr);
  // Per-coordinate learning rates.
  void Step(std::span<double> params, std::span<const double> grad,
            std::span<const double> lr);

  int step_count() const { return step_count_; }
  const std::vector<double>& first_moment() const { return m_; }
  const std::vector<double>& second_moment() const { return v_; }
  const AdamHyper& hyper() const { return hyper_; }

 private:
  AdamHyper hyper_;
  std::vector<double> m_;
  std::vector<double> v_;
  int step_count_ = 0;
};

inline constexpr double kTerminationTol = 1e-3;

enum class Verdict { kContinue, kConverged, kDiverged };
std::string_view VerdictName(Verdict verdict);

// Inner-loop stopping rule: converged when |J_k - J_{k-1}| < 1e-3, diverged
// when J_k > J_{k-1} + 1e-3. Convergence is checked first.
Verdict Terminate(double j_k, double j_prev);

// Result of one gradient-descent phase.
struct PhaseTrace {
  std::string name;
  std::vector<double> losses;  // objective at each evaluated iterate
  int updates = 0;             // Adam steps applied
  std::string reason;          // converged@k, diverged@k, blowup@k, budget
  double final_loss = 0.0;     // objective of the returned iterate
};

// Objective evaluation used by a phase: returns J(params) and writes dJ
// into `grad`. May throw RolloutError / DomainError.
using PhaseObjective =
    std::function<double(std::span<const double>, std::vector<double>&)>;

struct PhaseOptions {
  std::string name;
  int max_updates = 0;
  std::vector<double> lr;  // one per coordinate
  AdamHyper hyper;
  // Applied after every Adam step.
  std::function<void(std::span<double>)> project;
};

// Runs up to max_updates Adam steps on `params` under the stopping rule. On
// divergence or blow-up the pre-divergence iterate is restored, so the
// returned iterate always has a recorded objective. If the very first
// evaluation fails, params are left untouched and the error is recorded.
PhaseTrace Descend(const PhaseObjective& objective,
                   std::vector<double>& params, const PhaseOptions& options);

}  // namespace cotune

#endif  // COTUNE_OPTIM_H_
