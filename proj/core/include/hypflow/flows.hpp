#pragma once

// Coupling-layer normalizing flows on the hyperboloid, plus a Euclidean
// affine coupling baseline.
//
// Layer kinds:
//  - tangent: couple in the tangent space at the origin.  The conditioned
//    block scales/shifts the active block; volume change is the coupling
//    scale product times the exp/log sinh-distortion ratio.
//  - wrapped: the active block is scaled in the tangent space at the origin,
//    parallel-transported to an anchor point predicted from the conditioned
//    block, pushed through exp there, and read back through log at the
//    origin.  The anchor's spatial coordinates live on the active axes, so
//    the whole middle pipeline stays inside the (1 + active)-dimensional
//    ambient subspace; the volume change picks up the sinh-distortion of that
//    reduced subspace.
//  - euclidean_affine: RealNVP-style affine coupling on R^n (exp scales).
//
// Every apply function returns (output, log|det Jacobian|) of the map that
// was applied, with respect to the Riemannian measures at input and output.

#include <cstdint>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hypflow/lorentz.hpp"
#include "hypflow/mlp.hpp"
#include "hypflow/num.hpp"
#include "hypflow/wrapped_normal.hpp"

namespace hypflow {

// Coordinate mask; bit 0 (the time coordinate) is always conditioned.
struct BinaryMask {
  std::vector<std::uint8_t> bits;  // length dim+1, bits[0] == 1

  // First-half mask: conditions spatial coordinates 1..ceil(n/2).
  static BinaryMask half(int dim);
  BinaryMask flipped() const;

  int dim() const { return static_cast<int>(bits.size()) - 1; }
  // 0-based indices into the spatial coordinate block.
  std::vector<int> cond_spatial() const;
  std::vector<int> active_spatial() const;
};

enum class LayerKind { tangent, wrapped, euclidean_affine };

std::string to_string(LayerKind k);
LayerKind layer_kind_from_string(const std::string& s);

struct CouplingLayer {
  LayerKind kind = LayerKind::tangent;
  BinaryMask mask;
  Mlp scale_net;  // conditioned block -> active-block scales (pre-logistic)
  Mlp shift_net;  // conditioned block -> shifts (tangent) or anchor coords (wrapped)
  bool clamp_maps = true;  // clamp tangent norms to kMaxTangentNorm around exp/log
};

// ---------------------------------------------------------------------------
// Templated layer cores.  SNet/TNet: std::vector<T>(const std::vector<T>&).
// ---------------------------------------------------------------------------

namespace flow_detail {

template <class T>
std::vector<T> gather(const std::vector<T>& v, const std::vector<int>& idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (int i : idx) out.push_back(v[i]);
  return out;
}

// Common tangent-space norm helper (spatial coordinates, floored).
template <class T>
T spatial_norm(const std::vector<T>& v) {
  return euclidean_norm(std::span<const T>(v));
}

}  // namespace flow_detail

// Tangent coupling.  `x` is ambient (dim+1); returns ambient output and the
// log-det of the applied map (forward or inverse).
template <class T, class SNet, class TNet>
std::pair<std::vector<T>, T> tangent_layer_apply(const std::vector<T>& x,
                                                 const BinaryMask& mask, SNet&& snet,
                                                 TNet&& tnet, const T& R,
                                                 bool clamp_maps, bool inverse) {
  const int n = mask.dim();
  const std::vector<int> cond = mask.cond_spatial();
  const std::vector<int> act = mask.active_spatial();

  std::vector<T> xt = log_map_origin(x, R, clamp_maps);
  std::vector<T> xc = flow_detail::gather(xt, cond);
  std::vector<T> s = snet(xc);
  std::vector<T> shift = tnet(xc);

  std::vector<T> zt = xt;  // conditioned slots pass through untouched
  T scale_ld = log_logistic(s[0]);
  for (std::size_t k = 1; k < s.size(); ++k) scale_ld = scale_ld + log_logistic(s[k]);
  for (std::size_t k = 0; k < act.size(); ++k) {
    T sig = logistic(s[k]);
    if (!inverse) {
      zt[act[k]] = xt[act[k]] * sig + shift[k];
    } else {
      if (!(value_of(sig) > 0.0)) {
        throw NumericError("tangent coupling inverse: scale underflowed to 0");
      }
      zt[act[k]] = (xt[act[k]] - shift[k]) / sig;
    }
  }

  T in_norm = flow_detail::spatial_norm(xt);
  T out_norm = flow_detail::spatial_norm(zt);
  T logdet = (n - 1) * (log_sinh_ratio(out_norm / R) - log_sinh_ratio(in_norm / R));
  logdet = inverse ? logdet - scale_ld : logdet + scale_ld;

  std::vector<T> z = exp_map_origin(std::span<const T>(zt), R, clamp_maps);
  return {std::move(z), std::move(logdet)};
}

// Wrapped coupling.  The reduced ambient subspace (time axis + active axes)
// carries the anchor, the transported vector, and the exp/log pair; its
// dimension is l = |active|, hence the (l - 1) exponent on the middle
// distortion factors.
template <class T, class SNet, class TNet>
std::pair<std::vector<T>, T> wrapped_layer_apply(const std::vector<T>& x,
                                                 const BinaryMask& mask, SNet&& snet,
                                                 TNet&& tnet, const T& R,
                                                 bool clamp_maps, bool inverse) {
  const int n = mask.dim();
  const std::vector<int> cond = mask.cond_spatial();
  const std::vector<int> act = mask.active_spatial();
  const int l = static_cast<int>(act.size());

  std::vector<T> xt = log_map_origin(x, R, clamp_maps);
  std::vector<T> xc = flow_detail::gather(xt, cond);
  std::vector<T> s = snet(xc);
  std::vector<T> anchor_sp = tnet(xc);  // length l, reduced spatial coords

  std::vector<T> anchor = lift_spatial(std::span<const T>(anchor_sp), R);

  T scale_ld = log_logistic(s[0]);
  for (std::size_t k = 1; k < s.size(); ++k) scale_ld = scale_ld + log_logistic(s[k]);

  std::vector<T> zt = xt;
  T mid;        // (l-1) * (sinh-distortion at anchor - sinh-distortion at origin)
  if (!inverse) {
    // v = sigma(s) . active block, as a tangent at the origin of the reduced
    // subspace; its time component is exactly zero.
    std::vector<T> v;
    v.reserve(l + 1);
    v.push_back(R * 0.0);
    for (int k = 0; k < l; ++k) v.push_back(xt[act[k]] * logistic(s[k]));
    std::vector<T> q = transport_from_origin(anchor, v, R);
    std::vector<T> qhat = exp_map(anchor, q, R, clamp_maps);
    std::vector<T> out_act = log_map_origin(qhat, R, clamp_maps);
    for (int k = 0; k < l; ++k) zt[act[k]] = out_act[k];
    mid = (l - 1) * (log_sinh_ratio(lorentz_norm(q) / R) -
                     log_sinh_ratio(flow_detail::spatial_norm(out_act) / R));
  } else {
    std::vector<T> in_act = flow_detail::gather(xt, act);
    std::vector<T> qhat = exp_map_origin(std::span<const T>(in_act), R, clamp_maps);
    std::vector<T> q = log_map(anchor, qhat, R, clamp_maps);
    std::vector<T> v = transport_to_origin(anchor, q, R);
    for (int k = 0; k < l; ++k) {
      T sig = logistic(s[k]);
      if (!(value_of(sig) > 0.0)) {
        throw NumericError("wrapped coupling inverse: scale underflowed to 0");
      }
      zt[act[k]] = v[k + 1] / sig;
    }
    mid = (l - 1) * (log_sinh_ratio(flow_detail::spatial_norm(in_act) / R) -
                     log_sinh_ratio(lorentz_norm(q) / R));
  }

  T in_norm = flow_detail::spatial_norm(xt);
  T out_norm = flow_detail::spatial_norm(zt);
  T outer = (n - 1) * (log_sinh_ratio(out_norm / R) - log_sinh_ratio(in_norm / R));
  T logdet = inverse ? outer + mid - scale_ld : outer + mid + scale_ld;

  std::vector<T> z = exp_map_origin(std::span<const T>(zt), R, clamp_maps);
  return {std::move(z), std::move(logdet)};
}

// Euclidean affine coupling on R^n (no time coordinate in `x`).
template <class T, class SNet, class TNet>
std::pair<std::vector<T>, T> euclidean_layer_apply(const std::vector<T>& x,
                                                   const BinaryMask& mask, SNet&& snet,
                                                   TNet&& tnet, bool inverse) {
  using std::exp;
  const std::vector<int> cond = mask.cond_spatial();
  const std::vector<int> act = mask.active_spatial();

  std::vector<T> xc = flow_detail::gather(x, cond);
  std::vector<T> s = snet(xc);
  std::vector<T> shift = tnet(xc);

  std::vector<T> z = x;
  T logdet = s[0];
  for (std::size_t k = 1; k < s.size(); ++k) logdet = logdet + s[k];
  for (std::size_t k = 0; k < act.size(); ++k) {
    if (!inverse) {
      z[act[k]] = x[act[k]] * exp(s[k]) + shift[k];
    } else {
      z[act[k]] = (x[act[k]] - shift[k]) * exp(-s[k]);
    }
  }
  if (inverse) logdet = -logdet;
  return {std::move(z), std::move(logdet)};
}

// ---------------------------------------------------------------------------
// Double-facing layer and stack API.
// ---------------------------------------------------------------------------

std::pair<ManifoldPoint, double> layer_forward(const CouplingLayer& layer,
                                               const ManifoldPoint& x, double R);
std::pair<ManifoldPoint, double> layer_inverse(const CouplingLayer& layer,
                                               const ManifoldPoint& y, double R);
std::pair<std::vector<double>, double> layer_forward_euclidean(
    const CouplingLayer& layer, const std::vector<double>& x);
std::pair<std::vector<double>, double> layer_inverse_euclidean(
    const CouplingLayer& layer, const std::vector<double>& y);

// Base distribution parameters in trainable form: mu as tangent coordinates
// at the origin (hyperbolic) or the Gaussian mean (Euclidean); sigma in log
// space.
struct BaseParams {
  std::vector<double> mu_tangent;
  std::vector<double> log_sigma;
};

struct FlowStack {
  int dim = 2;
  bool euclidean = false;
  CurvatureState curvature;
  std::vector<CouplingLayer> layers;
  BaseParams base;

  // Materialized base distribution (hyperbolic stacks).
  WrappedNormalParams base_params() const;

  // Base sample -> data space; returns total forward log-det.
  std::pair<ManifoldPoint, double> forward(const ManifoldPoint& z0) const;
  // Data space -> base; returns total inverse log-det.
  std::pair<ManifoldPoint, double> inverse(const ManifoldPoint& x) const;

  // log density at x under the flow (base log-prob plus inverse log-dets).
  double log_prob(const ManifoldPoint& x) const;

  std::pair<std::vector<double>, double> forward_euclidean(
      const std::vector<double>& z0) const;
  std::pair<std::vector<double>, double> inverse_euclidean(
      const std::vector<double>& x) const;
  double log_prob_euclidean(std::span<const double> x) const;

  // Draw model samples; optionally returns each sample's log density.
  std::vector<ManifoldPoint> sample(int count, std::uint64_t seed,
                                    std::vector<double>* logp = nullptr) const;
  std::vector<std::vector<double>> sample_euclidean(
      int count, std::uint64_t seed, std::vector<double>* logp = nullptr) const;

  // log density of a data point identified by its spatial coordinates on the
  // reference (R = 1) sheet, measured against the reference manifold measure.
  // This is the training objective; it stays comparable across curvatures and
  // across hyperbolic/Euclidean stacks.  For hyperbolic stacks the point is
  // lifted onto the radius-R sheet and the density is corrected by the
  // ratio of the two lift charts' volume elements.
  double data_log_prob(std::span<const double> spatial) const;

  std::size_t param_count() const;
};

// Parameter registry: named views into every trainable vector of the stack.
struct ParamBlock {
  std::string name;
  std::vector<double>* data;
};
std::vector<ParamBlock> collect_param_blocks(FlowStack& stack);

// ---------------------------------------------------------------------------
// Scalar-generic stack evaluation.  The same template drives the plain-double
// path and the autodiff path, so their values agree bit for bit.
// ---------------------------------------------------------------------------

template <class T>
struct StackEval {
  const FlowStack* stack = nullptr;
  T R;  // curvature radius (ignored for Euclidean stacks)
  std::vector<std::function<std::vector<T>(const std::vector<T>&)>> scale_nets;
  std::vector<std::function<std::vector<T>(const std::vector<T>&)>> shift_nets;
  std::vector<T> base_mu;         // tangent coordinates (or Euclidean mean)
  std::vector<T> base_log_sigma;
};

template <class T>
T gaussian_diag_log_prob(const std::vector<T>& x, const std::vector<T>& mu,
                         const std::vector<T>& log_sigma) {
  using std::exp;
  const int n = static_cast<int>(x.size());
  T d = (x[0] - mu[0]) / exp(log_sigma[0]);
  T lp = -log_sigma[0] - 0.5 * d * d;
  for (int i = 1; i < n; ++i) {
    T di = (x[i] - mu[i]) / exp(log_sigma[i]);
    lp = lp - log_sigma[i] - 0.5 * di * di;
  }
  return lp - 0.5 * n * std::log(2.0 * std::numbers::pi);
}

// log density of a point given by spatial coordinates on the reference
// (K = -1) sheet, w.r.t. the reference Riemannian measure; see
// FlowStack::data_log_prob for the measure conventions.
template <class T>
T stack_data_log_prob_eval(const StackEval<T>& m, const std::vector<T>& xhat) {
  using std::exp;
  using std::log;
  using std::sqrt;
  const FlowStack& st = *m.stack;
  const std::size_t L = st.layers.size();
  T n2 = sum_sq(std::span<const T>(xhat));

  std::vector<T> lds;
  lds.reserve(L);
  auto run_inverse = [&](std::vector<T> state) {
    for (std::size_t k = L; k-- > 0;) {
      const CouplingLayer& layer = st.layers[k];
      try {
        std::pair<std::vector<T>, T> r = [&] {
          switch (layer.kind) {
            case LayerKind::tangent:
              return tangent_layer_apply(state, layer.mask, m.scale_nets[k],
                                         m.shift_nets[k], m.R, layer.clamp_maps, true);
            case LayerKind::wrapped:
              return wrapped_layer_apply(state, layer.mask, m.scale_nets[k],
                                         m.shift_nets[k], m.R, layer.clamp_maps, true);
            case LayerKind::euclidean_affine:
              return euclidean_layer_apply(state, layer.mask, m.scale_nets[k],
                                           m.shift_nets[k], true);
          }
          throw std::logic_error("stack_data_log_prob_eval: bad layer kind");
        }();
        state = std::move(r.first);
        lds.push_back(std::move(r.second));
      } catch (const NumericError& e) {
        throw NumericError(std::string(e.what()) + " (layer " + std::to_string(k) + ")");
      }
    }
    return state;
  };

  if (st.euclidean) {
    std::vector<T> z0 = run_inverse(xhat);
    T lp = gaussian_diag_log_prob(z0, m.base_mu, m.base_log_sigma);
    for (const T& ld : lds) lp = lp + ld;
    return lp + 0.5 * log(n2 + 1.0);
  }

  T x0 = sqrt(n2 + m.R * m.R);
  std::vector<T> x;
  x.reserve(xhat.size() + 1);
  x.push_back(x0);
  for (const T& c : xhat) x.push_back(c);

  std::vector<T> z0 = run_inverse(std::move(x));

  std::vector<T> mu = exp_map_origin(std::span<const T>(m.base_mu), m.R, false);
  std::vector<T> sigma;
  sigma.reserve(m.base_log_sigma.size());
  for (const T& ls : m.base_log_sigma) sigma.push_back(exp(ls));
  T lp = wrapped_normal_log_prob(mu, std::span<const T>(sigma), z0, m.R);
  for (const T& ld : lds) lp = lp + ld;
  // Lift-chart measure correction: radius-R chart -> reference chart.
  return lp + log(m.R) - 0.5 * log(n2 + m.R * m.R) + 0.5 * log(n2 + 1.0);
}

// Double-scalar evaluator bound to the stack's own parameters.
StackEval<double> make_stack_eval(const FlowStack& stack);

// Builds a stack of `n_layers` coupling layers of the given kind with
// alternating half masks and freshly initialized conditioner nets
// ({cond, hidden, active} with zeroed final layers).
FlowStack make_flow_stack(LayerKind kind, int dim, int n_layers, int hidden,
                          double R, CounterRng& rng, bool euclidean_base = false);

}  // namespace hypflow
