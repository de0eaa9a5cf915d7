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

#include "cotune/autodiff.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "cotune/error.h"

namespace cotune {
namespace {

constexpr double kAbsSmoothEps = 1e-12;

[[noreturn]] void Fail(Op op, const std::string& msg) {
  throw DomainError(std::string(OpName(op)) + ": " + msg);
}

void CheckFinite(Op op, double v, const char* what) {
  if (!std::isfinite(v)) Fail(op, std::string("non-finite ") + what);
}

Tape* SameTape(const Var& a, const Var& b) {
  if (a.tape() == nullptr || a.tape() != b.tape()) {
    throw DomainError("operands are not on the same tape");
  }
  return a.tape();
}

Tape* TapeOf(const Var& a) {
  if (a.tape() == nullptr) throw DomainError("operand is not on a tape");
  return a.tape();
}

}  // namespace

std::string_view OpName(Op op) {
  switch (op) {
    case Op::kLeaf: return "leaf";
    case Op::kConst: return "const";
    case Op::kAdd: return "add";
    case Op::kSub: return "sub";
    case Op::kMul: return "mul";
    case Op::kDiv: return "div";
    case Op::kNeg: return "neg";
    case Op::kSin: return "sin";
    case Op::kCos: return "cos";
    case Op::kTanh: return "tanh";
    case Op::kExp: return "exp";
    case Op::kLog: return "log";
    case Op::kPow: return "pow";
    case Op::kMin: return "min";
    case Op::kMax: return "max";
    case Op::kAbsSmooth: return "abs_smooth";
    case Op::kAffine: return "affine";
    case Op::kCustom: return "custom";
  }
  return "unknown";
}

// ---------------------------------------------------------------- GradientMap

double GradientMap::operator[](const Var& leaf) const {
  if (leaf.tape() != tape_) {
    throw DomainError("gradient queried for a node of another tape");
  }
  return at(leaf.id());
}

double GradientMap::at(std::int32_t id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= adjoint_.size()) return 0.0;
  return adjoint_[id];
}

std::vector<double> GradientMap::Collect(std::span<const Var> leaves) const {
  std::vector<double> out;
  out.reserve(leaves.size());
  for (const Var& v : leaves) out.push_back((*this)[v]);
  return out;
}

// ----------------------------------------------------------------------- Tape

void Tape::Reserve(std::size_t nodes, std::size_t edges) {
  values_.reserve(nodes);
  ops_.reserve(nodes);
  is_leaf_.reserve(nodes);
  edge_begin_.reserve(nodes + 1);
  edge_parent_.reserve(edges);
  edge_partial_.reserve(edges);
}

Var Tape::Push(Op op, double value) {
  if (!std::isfinite(value)) {
    // Drop the edges staged for this node so the tape stays consistent.
    edge_parent_.resize(edge_begin_.back());
    edge_partial_.resize(edge_begin_.back());
    Fail(op, "non-finite value");
  }
  const auto id = static_cast<std::int32_t>(values_.size());
  values_.push_back(value);
  ops_.push_back(op);
  is_leaf_.push_back(op == Op::kLeaf);
  edge_begin_.push_back(static_cast<std::uint32_t>(edge_parent_.size()));
  return Var(this, id, value);
}

void Tape::CheckOwned(const Var& v) const {
  if (v.tape() != this || v.id() < 0 ||
      static_cast<std::size_t>(v.id()) >= values_.size()) {
    throw DomainError("node is not on this tape");
  }
}

Var Tape::Leaf(double value) {
  if (!std::isfinite(value)) Fail(Op::kLeaf, "non-finite value");
  Var v = Push(Op::kLeaf, value);
  leaf_ids_.push_back(v.id());
  return v;
}

Var Tape::Constant(double value) { return Push(Op::kConst, value); }

Var Tape::Unary(Op op, const Var& a, double value, double partial) {
  CheckOwned(a);
  CheckFinite(op, partial, "partial");
  edge_parent_.push_back(a.id());
  edge_partial_.push_back(partial);
  return Push(op, value);
}

Var Tape::Binary(Op op, const Var& a, const Var& b, double value,
                 double partial_a, double partial_b) {
  CheckOwned(a);
  CheckOwned(b);
  CheckFinite(op, partial_a, "partial");
  CheckFinite(op, partial_b, "partial");
  edge_parent_.push_back(a.id());
  edge_partial_.push_back(partial_a);
  edge_parent_.push_back(b.id());
  edge_partial_.push_back(partial_b);
  return Push(op, value);
}

Var Tape::Affine(std::span<const Var> w, std::span<const Var> x,
                 const Var& bias) {
  if (w.size() != x.size()) Fail(Op::kAffine, "size mismatch");
  CheckOwned(bias);
  for (std::size_t i = 0; i < w.size(); ++i) {
    CheckOwned(w[i]);
    CheckOwned(x[i]);
  }
  double value = bias.value();
  for (std::size_t i = 0; i < w.size(); ++i) {
    value += w[i].value() * x[i].value();
    edge_parent_.push_back(w[i].id());
    edge_partial_.push_back(x[i].value());
    edge_parent_.push_back(x[i].id());
    edge_partial_.push_back(w[i].value());
  }
  edge_parent_.push_back(bias.id());
  edge_partial_.push_back(1.0);
  return Push(Op::kAffine, value);
}

Var Tape::Affine(std::span<const double> c, std::span<const Var> x,
                 double bias) {
  if (c.size() != x.size()) Fail(Op::kAffine, "size mismatch");
  for (const Var& v : x) CheckOwned(v);
  double value = bias;
  for (std::size_t i = 0; i < c.size(); ++i) {
    value += c[i] * x[i].value();
    edge_parent_.push_back(x[i].id());
    edge_partial_.push_back(c[i]);
  }
  return Push(Op::kAffine, value);
}

bool Tape::IsLeaf(std::int32_t id) const {
  return id >= 0 && static_cast<std::size_t>(id) < is_leaf_.size() &&
         is_leaf_[id];
}

std::span<const std::int32_t> Tape::parents(std::int32_t id) const {
  const std::uint32_t b = edge_begin_[id], e = edge_begin_[id + 1];
  return {edge_parent_.data() + b, e - b};
}

std::span<const double> Tape::partials(std::int32_t id) const {
  const std::uint32_t b = edge_begin_[id], e = edge_begin_[id + 1];
  return {edge_partial_.data() + b, e - b};
}

GradientMap Tape::Backward(const Var& root) const {
  CheckOwned(root);
  GradientMap g;
  g.tape_ = this;
  g.adjoint_.assign(static_cast<std::size_t>(root.id()) + 1, 0.0);
  g.adjoint_[root.id()] = 1.0;
  for (std::int32_t i = root.id(); i >= 0; --i) {
    const double adj = g.adjoint_[i];
    if (adj == 0.0) continue;
    const std::uint32_t b = edge_begin_[i], e = edge_begin_[i + 1];
    for (std::uint32_t k = b; k < e; ++k) {
      g.adjoint_[edge_parent_[k]] += adj * edge_partial_[k];
    }
  }
  return g;
}

// ----------------------------------------------------------------- operators

Var operator+(const Var& a, const Var& b) {
  return SameTape(a, b)->Binary(Op::kAdd, a, b, a.value() + b.value(), 1, 1);
}
Var operator-(const Var& a, const Var& b) {
  return SameTape(a, b)->Binary(Op::kSub, a, b, a.value() - b.value(), 1, -1);
}
Var operator*(const Var& a, const Var& b) {
  return SameTape(a, b)->Binary(Op::kMul, a, b, a.value() * b.value(),
                                b.value(), a.value());
}
Var operator/(const Var& a, const Var& b) {
  if (b.value() == 0.0) Fail(Op::kDiv, "division by zero");
  const double q = a.value() / b.value();
  return SameTape(a, b)->Binary(Op::kDiv, a, b, q, 1.0 / b.value(),
                                -q / b.value());
}
Var operator-(const Var& a) {
  return TapeOf(a)->Unary(Op::kNeg, a, -a.value(), -1.0);
}
Var operator+(const Var& a, double b) {
  return TapeOf(a)->Unary(Op::kAdd, a, a.value() + b, 1.0);
}
Var operator+(double a, const Var& b) { return b + a; }
Var operator-(const Var& a, double b) {
  return TapeOf(a)->Unary(Op::kSub, a, a.value() - b, 1.0);
}
Var operator-(double a, const Var& b) {
  return TapeOf(b)->Unary(Op::kSub, b, a - b.value(), -1.0);
}
Var operator*(const Var& a, double b) {
  return TapeOf(a)->Unary(Op::kMul, a, a.value() * b, b);
}
Var operator*(double a, const Var& b) { return b * a; }
Var operator/(const Var& a, double b) {
  if (b == 0.0) Fail(Op::kDiv, "division by zero");
  return TapeOf(a)->Unary(Op::kDiv, a, a.value() / b, 1.0 / b);
}
Var operator/(double a, const Var& b) {
  if (b.value() == 0.0) Fail(Op::kDiv, "division by zero");
  const double q = a / b.value();
  return TapeOf(b)->Unary(Op::kDiv, b, q, -q / b.value());
}
Var& operator+=(Var& a, const Var& b) { return a = a + b; }
Var& operator-=(Var& a, const Var& b) { return a = a - b; }
Var& operator*=(Var& a, const Var& b) { return a = a * b; }

Var sin(const Var& a) {
  return TapeOf(a)->Unary(Op::kSin, a, std::sin(a.value()),
                          std::cos(a.value()));
}
Var cos(const Var& a) {
  return TapeOf(a)->Unary(Op::kCos, a, std::cos(a.value()),
                          -std::sin(a.value()));
}
Var tanh(const Var& a) {
  const double t = std::tanh(a.value());
  return TapeOf(a)->Unary(Op::kTanh, a, t, 1.0 - t * t);
}
Var exp(const Var& a) {
  const double e = std::exp(a.value());
  return TapeOf(a)->Unary(Op::kExp, a, e, e);
}
Var log(const Var& a) {
  if (!(a.value() > 0.0)) Fail(Op::kLog, "argument must be positive");
  return TapeOf(a)->Unary(Op::kLog, a, std::log(a.value()), 1.0 / a.value());
}
Var pow(const Var& a, const Var& b) {
  if (!(a.value() > 0.0)) Fail(Op::kPow, "base must be positive");
  const double p = std::pow(a.value(), b.value());
  return SameTape(a, b)->Binary(Op::kPow, a, b, p,
                                b.value() * std::pow(a.value(), b.value() - 1),
                                p * std::log(a.value()));
}
Var pow(const Var& a, double b) {
  if (a.value() == 0.0 && b < 1.0) Fail(Op::kPow, "singular derivative at 0");
  if (a.value() < 0.0 && b != std::floor(b)) {
    Fail(Op::kPow, "negative base with fractional exponent");
  }
  return TapeOf(a)->Unary(Op::kPow, a, std::pow(a.value(), b),
                          b * std::pow(a.value(), b - 1));
}
Var sqrt(const Var& a) { return pow(a, 0.5); }
Var min(const Var& a, const Var& b) {
  const bool left = a.value() <= b.value();
  return SameTape(a, b)->Binary(Op::kMin, a, b, left ? a.value() : b.value(),
                                left ? 1.0 : 0.0, left ? 0.0 : 1.0);
}
Var max(const Var& a, const Var& b) {
  const bool left = a.value() >= b.value();
  return SameTape(a, b)->Binary(Op::kMax, a, b, left ? a.value() : b.value(),
                                left ? 1.0 : 0.0, left ? 0.0 : 1.0);
}
Var abs_smooth(const Var& a) {
  const double r = abs_smooth(a.value());
  return TapeOf(a)->Unary(Op::kAbsSmooth, a, r, a.value() / r);
}
double abs_smooth(double a) { return std::sqrt(a * a + kAbsSmoothEps); }

// ------------------------------------------------------------------ gradcheck

GradCheckResult GradCheckDetailed(const TapeFunction& fn,
                                  std::span<const double> point, double h,
                                  double tol, double abs_floor) {
  GradCheckResult r;
  {
    Tape tape;
    std::vector<Var> x;
    for (double p : point) x.push_back(tape.Leaf(p));
    const Var y = fn(tape, x);
    r.analytic = tape.Backward(y).Collect(x);
  }
  auto eval = [&](const std::vector<double>& p) {
    Tape tape;
    std::vector<Var> x;
    for (double v : p) x.push_back(tape.Leaf(v));
    return fn(tape, x).value();
  };
  std::vector<double> p(point.begin(), point.end());
  r.ok = true;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double base = p[i];
    p[i] = base + h;
    const double fp = eval(p);
    p[i] = base - h;
    const double fm = eval(p);
    p[i] = base;
    const double num = (fp - fm) / (2 * h);
    r.numeric.push_back(num);
    const double err = std::abs(num - r.analytic[i]);
    const double scale = std::max(std::abs(num), std::abs(r.analytic[i]));
    const double rel = scale > 0 ? err / scale : 0.0;
    if (err > abs_floor) {
      r.max_rel_error = std::max(r.max_rel_error, rel);
      if (rel > tol) r.ok = false;
    }
  }
  return r;
}

bool GradCheck(const TapeFunction& fn, std::span<const double> point,
               double h, double tol) {
  return GradCheckDetailed(fn, point, h, tol).ok;
}

}  // namespace cotune
