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

#include "cotune/optim.h"

#include <cmath>
#include <limits>

#include "cotune/error.h"

namespace cotune {

AdamState::AdamState(std::size_t size, AdamHyper hyper)
    : hyper_(hyper), m_(size, 0.0), v_(size, 0.0) {}

void AdamState::Step(std::span<double> params, std::span<const double> grad,
                     double lr) {
  const std::vector<double> rates(params.size(), lr);
  Step(params, grad, rates);
}

void AdamState::Step(std::span<double> params, std::span<const double> grad,
                     std::span<const double> lr) {
  if (params.size() != m_.size() || grad.size() != m_.size() ||
      lr.size() != m_.size()) {
    throw ConfigError("adam: parameter, gradient and state sizes differ");
  }
  std::string bad;
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (!std::isfinite(grad[i])) {
      bad += (bad.empty() ? "" : ",") + std::to_string(i);
    }
  }
  if (!bad.empty()) throw DomainError("adam: non-finite gradient at " + bad);

  ++step_count_;
  const double c1 = 1.0 - std::pow(hyper_.beta1, step_count_);
  const double c2 = 1.0 - std::pow(hyper_.beta2, step_count_);
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = hyper_.beta1 * m_[i] + (1.0 - hyper_.beta1) * grad[i];
    v_[i] = hyper_.beta2 * v_[i] + (1.0 - hyper_.beta2) * grad[i] * grad[i];
    const double m_hat = m_[i] / c1;
    const double v_hat = v_[i] / c2;
    params[i] -= lr[i] * m_hat / (std::sqrt(v_hat) + hyper_.epsilon);
  }
}

std::string_view VerdictName(Verdict verdict) {
  switch (verdict) {
    case Verdict::kContinue: return "continue";
    case Verdict::kConverged: return "converged";
    case Verdict::kDiverged: return "diverged";
  }
  return "unknown";
}

Verdict Terminate(double j_k, double j_prev) {
  if (std::abs(j_k - j_prev) < kTerminationTol) return Verdict::kConverged;
  if (j_k > j_prev + kTerminationTol) return Verdict::kDiverged;
  return Verdict::kContinue;
}

PhaseTrace Descend(const PhaseObjective& objective,
                   std::vector<double>& params, const PhaseOptions& options) {
  PhaseTrace trace;
  trace.name = options.name;
  AdamState adam(params.size(), options.hyper);
  std::vector<double> grad, previous;
  double previous_loss = std::numeric_limits<double>::quiet_NaN();
  for (int k = 0;; ++k) {
    double loss = 0.0;
    bool failed = false;
    try {
      loss = objective(params, grad);
      for (double g : grad) failed = failed || !std::isfinite(g);
      failed = failed || !std::isfinite(loss);
    } catch (const RolloutError&) {
      failed = true;
    } catch (const DomainError&) {
      failed = true;
    }
    if (failed) {
      trace.reason = "blowup@" + std::to_string(k);
      if (k > 0) {
        params = previous;
        trace.final_loss = previous_loss;
      } else {
        trace.final_loss = std::numeric_limits<double>::infinity();
      }
      return trace;
    }
    trace.losses.push_back(loss);
    if (k > 0) {
      const Verdict v = Terminate(loss, previous_loss);
      if (v == Verdict::kConverged) {
        trace.reason = "converged@" + std::to_string(k);
        trace.final_loss = loss;
        return trace;
      }
      if (v == Verdict::kDiverged) {
        trace.reason = "diverged@" + std::to_string(k);
        params = previous;
        trace.final_loss = previous_loss;
        return trace;
      }
    }
    if (k == options.max_updates) {
      trace.reason = "budget";
      trace.final_loss = loss;
      return trace;
    }
    previous = params;
    previous_loss = loss;
    adam.Step(params, grad, options.lr);
    if (options.project) options.project(params);
    ++trace.updates;
  }
}

}  // namespace cotune
