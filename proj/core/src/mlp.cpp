#include "hypflow/mlp.hpp"

#include <cmath>
#include <stdexcept>

namespace hypflow {

Mlp Mlp::create(std::vector<int> dims, CounterRng& rng, bool zero_last_layer) {
  if (dims.size() < 2) throw std::invalid_argument("Mlp: need at least two dims");
  Mlp net;
  net.dims = std::move(dims);
  std::size_t total = net.param_count();
  net.params.resize(total);
  std::size_t at = 0;
  for (std::size_t l = 0; l + 1 < net.dims.size(); ++l) {
    int in = net.dims[l];
    int out = net.dims[l + 1];
    bool zero = zero_last_layer && l + 2 == net.dims.size();
    double bound = 1.0 / std::sqrt(static_cast<double>(in));
    for (int k = 0; k < out * in + out; ++k) {
      net.params[at++] = zero ? 0.0 : bound * (2.0 * rng.uniform() - 1.0);
    }
  }
  return net;
}

std::size_t Mlp::param_count() const {
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    total += static_cast<std::size_t>(dims[l + 1]) * dims[l] + dims[l + 1];
  }
  return total;
}

std::vector<double> Mlp::apply(std::span<const double> in) const {
  if (static_cast<int>(in.size()) != dims.front()) {
    throw std::invalid_argument("Mlp::apply: input size mismatch");
  }
  std::vector<double> cur(in.begin(), in.end());
  std::vector<double> next;
  std::size_t at = 0;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    int nin = dims[l];
    int nout = dims[l + 1];
    next.assign(nout, 0.0);
    for (int o = 0; o < nout; ++o) {
      double acc = 0.0;
      const double* w = &params[at + static_cast<std::size_t>(o) * nin];
      for (int i = 0; i < nin; ++i) acc += w[i] * cur[i];
      next[o] = acc + params[at + static_cast<std::size_t>(nout) * nin + o];
    }
    at += static_cast<std::size_t>(nout) * nin + nout;
    if (l + 2 < dims.size()) {
      for (double& v : next) v = std::tanh(v);
    }
    cur.swap(next);
  }
  return cur;
}

std::vector<Var> Mlp::apply(Tape& tape, std::span<const Var> p,
                            std::span<const Var> in) const {
  if (p.size() != param_count()) {
    throw std::invalid_argument("Mlp::apply: parameter span size mismatch");
  }
  if (static_cast<int>(in.size()) != dims.front()) {
    throw std::invalid_argument("Mlp::apply: input size mismatch");
  }
  std::vector<Var> cur(in.begin(), in.end());
  std::vector<Var> next;
  std::size_t at = 0;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    int nin = dims[l];
    int nout = dims[l + 1];
    next.clear();
    next.reserve(nout);
    for (int o = 0; o < nout; ++o) {
      std::span<const Var> w = p.subspan(at + static_cast<std::size_t>(o) * nin,
                                         static_cast<std::size_t>(nin));
      Var acc = tape.dot(w, cur);
      next.push_back(acc + p[at + static_cast<std::size_t>(nout) * nin + o]);
    }
    at += static_cast<std::size_t>(nout) * nin + nout;
    if (l + 2 < dims.size()) {
      for (Var& v : next) v = tanh(v);
    }
    cur.swap(next);
  }
  return cur;
}

}  // namespace hypflow
