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

// Reverse-mode automatic differentiation over a scalar computation graph.
//
// A Tape records every scalar operation as a node holding its value and the
// local partial derivatives with respect to its parents. Because nodes are
// only ever appended, parents always carry smaller ids than their children,
// so a single reverse sweep over the node list is a valid backward pass.
//
//   Tape tape;
//   Var x = tape.Leaf(2.0), y = tape.Leaf(3.0);
//   Var f = x * y;
//   GradientMap g = tape.Backward(f);   // g[x] == 3, g[y] == 2
//
// A tape is single-threaded. Independent tapes share no state.

#ifndef COTUNE_AUTODIFF_H_
#define COTUNE_AUTODIFF_H_

#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

namespace cotune {

enum class Op : std::uint8_t {
  kLeaf,
  kConst,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kNeg,
  kSin,
  kCos,
  kTanh,
  kExp,
  kLog,
  kPow,
  kMin,
  kMax,
  kAbsSmooth,
  kAffine,  // fused sum_i w_i * x_i + b
  kCustom,  // caller-supplied value and partials
};

std::string_view OpName(Op op);

class Tape;

// Handle to a node on a tape. Cheap to copy; carries its value so forward
// evaluation never touches the tape storage.
class Var {
 public:
  Var() = default;
  double value() const { return value_; }
  std::int32_t id() const { return id_; }
  Tape* tape() const { return tape_; }

 private:
  friend class Tape;
  Var(Tape* tape, std::int32_t id, double value)
      : tape_(tape), id_(id), value_(value) {}

  Tape* tape_ = nullptr;
  std::int32_t id_ = -1;
  double value_ = 0.0;
};

// Adjoints produced by one backward sweep, indexed by node.
class GradientMap {
 public:
  // Adjoint of `leaf`. Unreachable leaves report 0.
  double operator[](const Var& leaf) const;
  double at(std::int32_t id) const;
  std::vector<double> Collect(std::span<const Var> leaves) const;

 private:
  friend class Tape;
  const Tape* tape_ = nullptr;
  std::vector<double> adjoint_;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Differentiable input. Throws DomainError on non-finite values.
  Var Leaf(double value);
  // Non-differentiable input.
  Var Constant(double value);

  // Records a node with one parent. The partial is d(result)/d(a).
  Var Unary(Op op, const Var& a, double value, double partial);
  Var Binary(Op op, const Var& a, const Var& b, double value,
             double partial_a, double partial_b);
  // sum_i w[i] * x[i] + bias, recorded as a single node.
  Var Affine(std::span<const Var> w, std::span<const Var> x, const Var& bias);
  // sum_i c[i] * x[i] + bias with constant coefficients.
  Var Affine(std::span<const double> c, std::span<const Var> x, double bias);

  // Single reverse sweep from `root`. Throws if root is not on this tape.
  GradientMap Backward(const Var& root) const;

  std::size_t size() const { return values_.size(); }
  bool IsLeaf(std::int32_t id) const;
  const std::vector<std::int32_t>& leaf_ids() const { return leaf_ids_; }
  Op op(std::int32_t id) const { return ops_[id]; }
  double value(std::int32_t id) const { return values_[id]; }
  // Parent ids and partials of node `id`.
  std::span<const std::int32_t> parents(std::int32_t id) const;
  std::span<const double> partials(std::int32_t id) const;

  void Reserve(std::size_t nodes, std::size_t edges);

 private:
  Var Push(Op op, double value);
  void CheckOwned(const Var& v) const;

  std::vector<double> values_;
  std::vector<Op> ops_;
  std::vector<std::uint32_t> edge_begin_{0};
  std::vector<std::int32_t> edge_parent_;
  std::vector<double> edge_partial_;
  std::vector<std::int32_t> leaf_ids_;
  std::vector<bool> is_leaf_;
};

// Arithmetic. Mixed Var/double overloads record a single-parent node.
Var operator+(const Var& a, const Var& b);
Var operator-(const Var& a, const Var& b);
Var operator*(const Var& a, const Var& b);
Var operator/(const Var& a, const Var& b);
Var operator-(const Var& a);
Var operator+(const Var& a, double b);
Var operator+(double a, const Var& b);
Var operator-(const Var& a, double b);
Var operator-(double a, const Var& b);
Var operator*(const Var& a, double b);
Var operator*(double a, const Var& b);
Var operator/(const Var& a, double b);
Var operator/(double a, const Var& b);
Var& operator+=(Var& a, const Var& b);
Var& operator-=(Var& a, const Var& b);
Var& operator*=(Var& a, const Var& b);

Var sin(const Var& a);
Var cos(const Var& a);
Var tanh(const Var& a);
Var exp(const Var& a);
Var log(const Var& a);
Var pow(const Var& a, const Var& b);
Var pow(const Var& a, double b);
Var sqrt(const Var& a);
// Subgradient convention: ties select the left argument.
Var min(const Var& a, const Var& b);
Var max(const Var& a, const Var& b);
// sqrt(a^2 + 1e-12).
Var abs_smooth(const Var& a);
double abs_smooth(double a);

inline double Value(double x) { return x; }
inline double Value(const Var& x) { return x.value(); }

// Compares reverse-mode gradients of `fn` at `point` against central
// differences with step `h`. Passes when, for every input, the absolute
// error is within `abs_floor` or the relative error is within `tol`.
using TapeFunction = std::function<Var(Tape&, std::span<const Var>)>;

struct GradCheckResult {
  bool ok = false;
  double max_rel_error = 0.0;
  std::vector<double> analytic;
  std::vector<double> numeric;
};

GradCheckResult GradCheckDetailed(const TapeFunction& fn,
                                  std::span<const double> point, double h,
                                  double tol, double abs_floor = 1e-8);
bool GradCheck(const TapeFunction& fn, std::span<const double> point,
               double h, double tol);

}  // namespace cotune

#endif  // COTUNE_AUTODIFF_H_
