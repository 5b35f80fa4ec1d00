#include "hypflow/tape.hpp"

namespace hypflow {

void Tape::backward(Var root) {
  assert(root.tape == this);
  grads_.assign(nodes_.size(), 0.0);
  grads_[root.idx] = 1.0;

  for (std::size_t i = nodes_.size(); i-- > 0;) {
    double g = grads_[i];
    if (g == 0.0) continue;
    const Node& n = nodes_[i];
    switch (n.op) {
      case Op::kLeaf:
        break;
      case Op::kAdd:
        grads_[n.a] += g;
        grads_[n.b] += g;
        break;
      case Op::kSub:
        grads_[n.a] += g;
        grads_[n.b] -= g;
        break;
      case Op::kMul:
        grads_[n.a] += g * vals_[n.b];
        grads_[n.b] += g * vals_[n.a];
        break;
      case Op::kDiv:
        grads_[n.a] += g / vals_[n.b];
        grads_[n.b] -= g * vals_[i] / vals_[n.b];
        break;
      case Op::kNeg:
        grads_[n.a] -= g;
        break;
      case Op::kAddC:
        grads_[n.a] += g;
        break;
      case Op::kMulC:
        grads_[n.a] += g * n.c0;
        break;
      case Op::kRsubC:
        grads_[n.a] -= g;
        break;
      case Op::kRdivC:
        grads_[n.a] -= g * vals_[i] / vals_[n.a];
        break;
      case Op::kExp:
        grads_[n.a] += g * vals_[i];
        break;
      case Op::kLog:
        grads_[n.a] += g / vals_[n.a];
        break;
      case Op::kSqrt:
        grads_[n.a] += g * 0.5 / vals_[i];
        break;
      case Op::kTanh: {
        double y = vals_[i];
        grads_[n.a] += g * (1.0 - y * y);
        break;
      }
      case Op::kLogistic: {
        double y = vals_[i];
        grads_[n.a] += g * y * (1.0 - y);
        break;
      }
      case Op::kSinh:
        grads_[n.a] += g * std::cosh(vals_[n.a]);
        break;
      case Op::kCosh:
        grads_[n.a] += g * std::sinh(vals_[n.a]);
        break;
      case Op::kAcosh: {
        // Callers switch to series below 1 + 1e-6, so the argument here is
        // bounded away from 1; the floor only guards pathological inputs.
        double x = vals_[n.a];
        double d = x * x - 1.0;
        grads_[n.a] += g / std::sqrt(d > 1e-30 ? d : 1e-30);
        break;
      }
      case Op::kClamp: {
        double x = vals_[n.a];
        if (x >= n.c0 && x <= n.c1) grads_[n.a] += g;
        break;
      }
      case Op::kSum:
        for (std::uint32_t k = 0; k < n.args_n; ++k) {
          grads_[args_[n.args_at + k]] += g;
        }
        break;
      case Op::kDot: {
        std::uint32_t half = n.args_n / 2;
        for (std::uint32_t k = 0; k < half; ++k) {
          std::uint32_t ai = args_[n.args_at + k];
          std::uint32_t bi = args_[n.args_at + half + k];
          grads_[ai] += g * vals_[bi];
          grads_[bi] += g * vals_[ai];
        }
        break;
      }
    }
  }
}

}  // namespace hypflow
