#include "hypflow/flows.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace hypflow {

BinaryMask BinaryMask::half(int dim) {
  if (dim < 2) throw std::invalid_argument("BinaryMask: dim must be >= 2");
  BinaryMask m;
  m.bits.assign(static_cast<std::size_t>(dim) + 1, 0);
  m.bits[0] = 1;
  int d = (dim + 1) / 2;
  for (int i = 1; i <= d; ++i) m.bits[i] = 1;
  return m;
}

BinaryMask BinaryMask::flipped() const {
  BinaryMask m = *this;
  for (std::size_t i = 1; i < m.bits.size(); ++i) m.bits[i] = bits[i] ? 0 : 1;
  return m;
}

std::vector<int> BinaryMask::cond_spatial() const {
  std::vector<int> idx;
  for (std::size_t i = 1; i < bits.size(); ++i) {
    if (bits[i]) idx.push_back(static_cast<int>(i) - 1);
  }
  return idx;
}

std::vector<int> BinaryMask::active_spatial() const {
  std::vector<int> idx;
  for (std::size_t i = 1; i < bits.size(); ++i) {
    if (!bits[i]) idx.push_back(static_cast<int>(i) - 1);
  }
  return idx;
}

std::string to_string(LayerKind k) {
  switch (k) {
    case LayerKind::tangent: return "tangent";
    case LayerKind::wrapped: return "wrapped";
    case LayerKind::euclidean_affine: return "euclidean";
  }
  return "?";
}

LayerKind layer_kind_from_string(const std::string& s) {
  if (s == "tangent") return LayerKind::tangent;
  if (s == "wrapped") return LayerKind::wrapped;
  if (s == "euclidean") return LayerKind::euclidean_affine;
  throw std::invalid_argument("unknown layer kind: " + s);
}

namespace {

// Binds a layer's conditioner nets for the plain-double path.
auto net_fn(const Mlp& net) {
  return [&net](const std::vector<double>& in) { return net.apply(in); };
}

std::pair<std::vector<double>, double> apply_raw(const CouplingLayer& layer,
                                                 const std::vector<double>& x,
                                                 double R, bool inverse) {
  switch (layer.kind) {
    case LayerKind::tangent:
      return tangent_layer_apply(x, layer.mask, net_fn(layer.scale_net),
                                 net_fn(layer.shift_net), R, layer.clamp_maps, inverse);
    case LayerKind::wrapped:
      return wrapped_layer_apply(x, layer.mask, net_fn(layer.scale_net),
                                 net_fn(layer.shift_net), R, layer.clamp_maps, inverse);
    case LayerKind::euclidean_affine:
      return euclidean_layer_apply(x, layer.mask, net_fn(layer.scale_net),
                                   net_fn(layer.shift_net), inverse);
  }
  throw std::logic_error("apply_raw: bad layer kind");
}

}  // namespace

std::pair<ManifoldPoint, double> layer_forward(const CouplingLayer& layer,
                                               const ManifoldPoint& x, double R) {
  auto [z, ld] = apply_raw(layer, x.x, R, false);
  return {ManifoldPoint{std::move(z)}, ld};
}

std::pair<ManifoldPoint, double> layer_inverse(const CouplingLayer& layer,
                                               const ManifoldPoint& y, double R) {
  auto [z, ld] = apply_raw(layer, y.x, R, true);
  return {ManifoldPoint{std::move(z)}, ld};
}

std::pair<std::vector<double>, double> layer_forward_euclidean(
    const CouplingLayer& layer, const std::vector<double>& x) {
  return apply_raw(layer, x, 1.0, false);
}

std::pair<std::vector<double>, double> layer_inverse_euclidean(
    const CouplingLayer& layer, const std::vector<double>& y) {
  return apply_raw(layer, y, 1.0, true);
}

WrappedNormalParams FlowStack::base_params() const {
  WrappedNormalParams p;
  p.mu = ManifoldPoint{exp_map_origin(std::span<const double>(base.mu_tangent),
                                      curvature.R, false)};
  p.sigma.resize(base.log_sigma.size());
  for (std::size_t i = 0; i < base.log_sigma.size(); ++i) {
    p.sigma[i] = std::exp(base.log_sigma[i]);
  }
  p.curvature = curvature;
  return p;
}

namespace {

template <class State>
std::pair<State, double> run_layers(const FlowStack& stack, State state, bool inverse) {
  double total = 0.0;
  const auto& layers = stack.layers;
  auto step = [&](std::size_t k) {
    try {
      auto [next, ld] = apply_raw(layers[k], state, stack.curvature.R, inverse);
      state = std::move(next);
      total += ld;
    } catch (const NumericError& e) {
      throw NumericError(std::string(e.what()) + " (layer " + std::to_string(k) + ")");
    }
  };
  if (inverse) {
    for (std::size_t k = layers.size(); k-- > 0;) step(k);
  } else {
    for (std::size_t k = 0; k < layers.size(); ++k) step(k);
  }
  return {std::move(state), total};
}

}  // namespace

std::pair<ManifoldPoint, double> FlowStack::forward(const ManifoldPoint& z0) const {
  auto [x, ld] = run_layers(*this, z0.x, false);
  return {ManifoldPoint{std::move(x)}, ld};
}

std::pair<ManifoldPoint, double> FlowStack::inverse(const ManifoldPoint& x) const {
  auto [z, ld] = run_layers(*this, x.x, true);
  return {ManifoldPoint{std::move(z)}, ld};
}

double FlowStack::log_prob(const ManifoldPoint& x) const {
  auto [z0, ld] = inverse(x);
  return hypflow::log_prob(base_params(), z0) + ld;
}

std::pair<std::vector<double>, double> FlowStack::forward_euclidean(
    const std::vector<double>& z0) const {
  return run_layers(*this, z0, false);
}

std::pair<std::vector<double>, double> FlowStack::inverse_euclidean(
    const std::vector<double>& x) const {
  return run_layers(*this, x, true);
}

double FlowStack::log_prob_euclidean(std::span<const double> x) const {
  auto [z0, ld] = inverse_euclidean(std::vector<double>(x.begin(), x.end()));
  return gaussian_diag_log_prob(z0, base.mu_tangent, base.log_sigma) + ld;
}

std::vector<ManifoldPoint> FlowStack::sample(int count, std::uint64_t seed,
                                             std::vector<double>* logp) const {
  if (euclidean) {
    throw std::logic_error("FlowStack::sample: Euclidean stack, use sample_euclidean");
  }
  WrappedNormalParams bp = base_params();
  std::vector<ManifoldPoint> z0s = hypflow::sample(bp, count, seed);
  std::vector<ManifoldPoint> out;
  out.reserve(count);
  if (logp) logp->clear();
  for (auto& z0 : z0s) {
    double lp0 = logp ? hypflow::log_prob(bp, z0) : 0.0;
    auto [x, ld] = forward(z0);
    if (logp) logp->push_back(lp0 - ld);
    out.push_back(std::move(x));
  }
  return out;
}

std::vector<std::vector<double>> FlowStack::sample_euclidean(
    int count, std::uint64_t seed, std::vector<double>* logp) const {
  if (!euclidean) {
    throw std::logic_error("FlowStack::sample_euclidean: hyperbolic stack, use sample");
  }
  CounterRng rng(seed, RngStream::base_sampling);
  std::vector<std::vector<double>> out;
  out.reserve(count);
  if (logp) logp->clear();
  for (int k = 0; k < count; ++k) {
    std::vector<double> z0(dim);
    for (int i = 0; i < dim; ++i) {
      z0[i] = base.mu_tangent[i] + std::exp(base.log_sigma[i]) * rng.normal();
    }
    double lp0 = logp ? gaussian_diag_log_prob(z0, base.mu_tangent, base.log_sigma) : 0.0;
    auto [x, ld] = forward_euclidean(z0);
    if (logp) logp->push_back(lp0 - ld);
    out.push_back(std::move(x));
  }
  return out;
}

double FlowStack::data_log_prob(std::span<const double> spatial) const {
  if (static_cast<int>(spatial.size()) != dim) {
    throw std::invalid_argument("data_log_prob: dimension mismatch");
  }
  StackEval<double> ev = make_stack_eval(*this);
  return stack_data_log_prob_eval(ev, std::vector<double>(spatial.begin(), spatial.end()));
}

StackEval<double> make_stack_eval(const FlowStack& stack) {
  StackEval<double> ev;
  ev.stack = &stack;
  ev.R = stack.curvature.R;
  ev.scale_nets.reserve(stack.layers.size());
  ev.shift_nets.reserve(stack.layers.size());
  for (const auto& layer : stack.layers) {
    ev.scale_nets.push_back(net_fn(layer.scale_net));
    ev.shift_nets.push_back(net_fn(layer.shift_net));
  }
  ev.base_mu = stack.base.mu_tangent;
  ev.base_log_sigma = stack.base.log_sigma;
  return ev;
}

std::size_t FlowStack::param_count() const {
  std::size_t total = base.mu_tangent.size() + base.log_sigma.size();
  for (const auto& layer : layers) {
    total += layer.scale_net.params.size() + layer.shift_net.params.size();
  }
  return total;
}

std::vector<ParamBlock> collect_param_blocks(FlowStack& stack) {
  std::vector<ParamBlock> blocks;
  for (std::size_t k = 0; k < stack.layers.size(); ++k) {
    blocks.push_back({"layer" + std::to_string(k) + ".scale",
                      &stack.layers[k].scale_net.params});
    blocks.push_back({"layer" + std::to_string(k) + ".shift",
                      &stack.layers[k].shift_net.params});
  }
  blocks.push_back({"base.mu", &stack.base.mu_tangent});
  blocks.push_back({"base.log_sigma", &stack.base.log_sigma});
  return blocks;
}

FlowStack make_flow_stack(LayerKind kind, int dim, int n_layers, int hidden, double R,
                          CounterRng& rng, bool euclidean_base) {
  if (dim < 2) throw std::invalid_argument("make_flow_stack: dim must be >= 2");
  if (hidden < 1) throw std::invalid_argument("make_flow_stack: hidden must be >= 1");
  FlowStack stack;
  stack.dim = dim;
  stack.euclidean = euclidean_base || kind == LayerKind::euclidean_affine;
  stack.curvature = CurvatureState::fixed(stack.euclidean ? 1.0 : R);
  BinaryMask mask = BinaryMask::half(dim);
  for (int k = 0; k < n_layers; ++k) {
    CouplingLayer layer;
    layer.kind = kind;
    layer.mask = mask;
    int nc = static_cast<int>(mask.cond_spatial().size());
    int na = static_cast<int>(mask.active_spatial().size());
    layer.scale_net = Mlp::create({nc, hidden, na}, rng, /*zero_last_layer=*/true);
    layer.shift_net = Mlp::create({nc, hidden, na}, rng, /*zero_last_layer=*/true);
    stack.layers.push_back(std::move(layer));
    mask = mask.flipped();
  }
  stack.base.mu_tangent.assign(dim, 0.0);
  stack.base.log_sigma.assign(dim, 0.0);
  return stack;
}

}  // namespace hypflow
