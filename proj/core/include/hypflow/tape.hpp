#pragma once

// Minimal reverse-mode automatic differentiation on a flat tape.
//
// A Var is an index into a Tape.  Recording an operation computes its value
// eagerly and appends one node; backward() runs a single reverse sweep and
// accumulates d(output)/d(node) for every node, so gradients of all leaves
// are available after one pass.  Everything is deterministic: identical
// inputs recorded in identical order give bit-identical values and gradients.

#include <cassert>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "hypflow/num.hpp"

namespace hypflow {

class Tape;

struct Var {
  Tape* tape = nullptr;
  std::uint32_t idx = 0;

  double value() const;
};

class Tape {
 public:
  enum class Op : std::uint8_t {
    kLeaf,
    kAdd, kSub, kMul, kDiv, kNeg,
    kAddC, kMulC, kRsubC, kRdivC,
    kExp, kLog, kSqrt, kTanh, kLogistic, kSinh, kCosh, kAcosh,
    kClamp,
    kSum, kDot,
  };

  std::size_t size() const { return nodes_.size(); }

  // Drops all nodes but keeps allocated capacity for reuse across steps.
  void clear() {
    nodes_.clear();
    vals_.clear();
    grads_.clear();
    args_.clear();
  }

  void reserve(std::size_t nodes) {
    nodes_.reserve(nodes);
    vals_.reserve(nodes);
  }

  Var leaf(double v) { return push(Op::kLeaf, 0, 0, v); }

  std::vector<Var> leaves(std::span<const double> vs) {
    std::vector<Var> out;
    out.reserve(vs.size());
    for (double v : vs) out.push_back(leaf(v));
    return out;
  }

  double value(Var v) const { return vals_[v.idx]; }

  // d(root)/d(node) after backward(root).
  double grad(Var v) const { return grads_[v.idx]; }

  // Reverse sweep seeding d(root)/d(root) = 1.
  void backward(Var root);

  Var add(Var a, Var b) { return push2(Op::kAdd, a, b, vals_[a.idx] + vals_[b.idx]); }
  Var sub(Var a, Var b) { return push2(Op::kSub, a, b, vals_[a.idx] - vals_[b.idx]); }
  Var mul(Var a, Var b) { return push2(Op::kMul, a, b, vals_[a.idx] * vals_[b.idx]); }
  Var div(Var a, Var b) { return push2(Op::kDiv, a, b, vals_[a.idx] / vals_[b.idx]); }
  Var neg(Var a) { return push(Op::kNeg, a.idx, 0, -vals_[a.idx]); }
  Var add_const(Var a, double c) { return push(Op::kAddC, a.idx, 0, vals_[a.idx] + c, c); }
  Var mul_const(Var a, double c) { return push(Op::kMulC, a.idx, 0, vals_[a.idx] * c, c); }
  Var rsub_const(double c, Var a) { return push(Op::kRsubC, a.idx, 0, c - vals_[a.idx], c); }
  Var rdiv_const(double c, Var a) { return push(Op::kRdivC, a.idx, 0, c / vals_[a.idx], c); }
  Var exp_(Var a) { return push(Op::kExp, a.idx, 0, std::exp(vals_[a.idx])); }
  Var log_(Var a) { return push(Op::kLog, a.idx, 0, std::log(vals_[a.idx])); }
  Var sqrt_(Var a) { return push(Op::kSqrt, a.idx, 0, std::sqrt(vals_[a.idx])); }
  Var tanh_(Var a) { return push(Op::kTanh, a.idx, 0, std::tanh(vals_[a.idx])); }
  Var logistic_(Var a) {
    return push(Op::kLogistic, a.idx, 0, 1.0 / (1.0 + std::exp(-vals_[a.idx])));
  }
  Var sinh_(Var a) { return push(Op::kSinh, a.idx, 0, std::sinh(vals_[a.idx])); }
  Var cosh_(Var a) { return push(Op::kCosh, a.idx, 0, std::cosh(vals_[a.idx])); }
  Var acosh_(Var a) { return push(Op::kAcosh, a.idx, 0, std::acosh(vals_[a.idx])); }

  // Clamp to [lo, hi]; the reverse pass passes gradient through wherever
  // lo <= value <= hi (boundary inclusive) and blocks it outside.
  Var clamp_(Var a, double lo, double hi) {
    double v = vals_[a.idx];
    double c = v < lo ? lo : (v > hi ? hi : v);
    return push(Op::kClamp, a.idx, 0, c, lo, hi);
  }

  Var sum(std::span<const Var> xs) {
    double acc = 0.0;
    std::uint32_t at = static_cast<std::uint32_t>(args_.size());
    for (Var x : xs) {
      assert(x.tape == this);
      args_.push_back(x.idx);
      acc += vals_[x.idx];
    }
    return push_nary(Op::kSum, at, static_cast<std::uint32_t>(xs.size()), acc);
  }

  // sum_i a[i] * b[i]; recorded as a single node.
  Var dot(std::span<const Var> a, std::span<const Var> b) {
    assert(a.size() == b.size());
    double acc = 0.0;
    std::uint32_t at = static_cast<std::uint32_t>(args_.size());
    for (Var x : a) args_.push_back(x.idx);
    for (Var x : b) args_.push_back(x.idx);
    for (std::size_t i = 0; i < a.size(); ++i) {
      acc += vals_[a[i].idx] * vals_[b[i].idx];
    }
    return push_nary(Op::kDot, at, static_cast<std::uint32_t>(2 * a.size()), acc);
  }

 private:
  struct Node {
    Op op;
    std::uint32_t a = 0;
    std::uint32_t b = 0;
    std::uint32_t args_at = 0;
    std::uint32_t args_n = 0;
    double c0 = 0.0;
    double c1 = 0.0;
  };

  Var push(Op op, std::uint32_t a, std::uint32_t b, double val,
           double c0 = 0.0, double c1 = 0.0) {
    Node n;
    n.op = op;
    n.a = a;
    n.b = b;
    n.c0 = c0;
    n.c1 = c1;
    nodes_.push_back(n);
    vals_.push_back(val);
    return Var{this, static_cast<std::uint32_t>(nodes_.size() - 1)};
  }

  Var push2(Op op, Var a, Var b, double val) {
    assert(a.tape == this && b.tape == this);
    return push(op, a.idx, b.idx, val);
  }

  Var push_nary(Op op, std::uint32_t args_at, std::uint32_t args_n, double val) {
    Node n;
    n.op = op;
    n.args_at = args_at;
    n.args_n = args_n;
    nodes_.push_back(n);
    vals_.push_back(val);
    return Var{this, static_cast<std::uint32_t>(nodes_.size() - 1)};
  }

  std::vector<Node> nodes_;
  std::vector<double> vals_;
  std::vector<double> grads_;
  std::vector<std::uint32_t> args_;

  friend struct Var;
};

inline double Var::value() const { return tape->value(*this); }

inline double value_of(Var v) { return v.value(); }

// Operator sugar.  Mixed Var/double forms record constant-folded nodes.
inline Var operator+(Var a, Var b) { return a.tape->add(a, b); }
inline Var operator-(Var a, Var b) { return a.tape->sub(a, b); }
inline Var operator*(Var a, Var b) { return a.tape->mul(a, b); }
inline Var operator/(Var a, Var b) { return a.tape->div(a, b); }
inline Var operator-(Var a) { return a.tape->neg(a); }
inline Var operator+(Var a, double c) { return a.tape->add_const(a, c); }
inline Var operator+(double c, Var a) { return a.tape->add_const(a, c); }
inline Var operator-(Var a, double c) { return a.tape->add_const(a, -c); }
inline Var operator-(double c, Var a) { return a.tape->rsub_const(c, a); }
inline Var operator*(Var a, double c) { return a.tape->mul_const(a, c); }
inline Var operator*(double c, Var a) { return a.tape->mul_const(a, c); }
inline Var operator/(Var a, double c) { return a.tape->mul_const(a, 1.0 / c); }
inline Var operator/(double c, Var a) { return a.tape->rdiv_const(c, a); }

inline Var exp(Var a) { return a.tape->exp_(a); }
inline Var log(Var a) { return a.tape->log_(a); }
inline Var sqrt(Var a) { return a.tape->sqrt_(a); }
inline Var tanh(Var a) { return a.tape->tanh_(a); }
inline Var sinh(Var a) { return a.tape->sinh_(a); }
inline Var cosh(Var a) { return a.tape->cosh_(a); }
inline Var acosh(Var a) { return a.tape->acosh_(a); }
inline Var logistic(Var a) { return a.tape->logistic_(a); }
inline Var clamp(Var a, double lo, double hi) { return a.tape->clamp_(a, lo, hi); }
inline Var clamp_min(Var a, double lo) {
  return a.tape->clamp_(a, lo, std::numeric_limits<double>::infinity());
}

inline double logistic(double s) { return 1.0 / (1.0 + std::exp(-s)); }
inline double clamp(double a, double lo, double hi) {
  return a < lo ? lo : (a > hi ? hi : a);
}

}  // namespace hypflow
