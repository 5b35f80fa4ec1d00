#include <doctest.h>

#include <cmath>
#include <span>
#include <vector>

#include "hypflow/flows.hpp"
#include "hypflow/lorentz.hpp"
#include "hypflow/rng.hpp"
#include "hypflow/wrapped_normal.hpp"
#include "support/oracles.hpp"

using namespace hypflow;

namespace {

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

void jitter(Mlp& net, double scale, CounterRng& rng) {
  for (double& p : net.params) p += scale * rng.normal();
}

// Adds delta to the biases of the final affine layer.
void add_last_bias(Mlp& net, double delta) {
  std::size_t out = static_cast<std::size_t>(net.dims.back());
  for (std::size_t i = net.params.size() - out; i < net.params.size(); ++i) {
    net.params[i] += delta;
  }
}

// Drives all coupling scales to sigma == 1 exactly: zero the final layer of
// each scale net and push its biases to +40 (logistic(40) rounds to 1.0 in
// double precision, and log(logistic(40)) rounds to 0.0).
void saturate_scales(FlowStack& st) {
  for (CouplingLayer& layer : st.layers) {
    Mlp& net = layer.scale_net;
    std::size_t out = static_cast<std::size_t>(net.dims.back());
    std::size_t in = static_cast<std::size_t>(net.dims[net.dims.size() - 2]);
    std::size_t last = net.params.size() - out * (in + 1);
    for (std::size_t i = last; i < net.params.size(); ++i) net.params[i] = 0.0;
    add_last_bias(net, 40.0);
  }
}

void jitter_stack(FlowStack& st, double scale, CounterRng& rng,
                  bool include_shift = true) {
  for (CouplingLayer& layer : st.layers) {
    jitter(layer.scale_net, scale, rng);
    if (include_shift) jitter(layer.shift_net, scale, rng);
  }
}

ManifoldPoint random_point(int dim, double R, double scale, CounterRng& rng) {
  std::vector<double> u(dim);
  for (double& c : u) c = scale * rng.normal();
  return ManifoldPoint{exp_map_origin(std::span<const double>(u), R)};
}

}  // namespace

TEST_SUITE_BEGIN("flows");

TEST_CASE("half masks condition the time axis and the leading spatial block") {
  BinaryMask m2 = BinaryMask::half(2);
  CHECK(m2.bits == std::vector<std::uint8_t>{1, 1, 0});
  CHECK(m2.cond_spatial() == std::vector<int>{0});
  CHECK(m2.active_spatial() == std::vector<int>{1});
  BinaryMask f2 = m2.flipped();
  CHECK(f2.bits == std::vector<std::uint8_t>{1, 0, 1});
  CHECK(f2.cond_spatial() == std::vector<int>{1});
  CHECK(f2.active_spatial() == std::vector<int>{0});

  BinaryMask m3 = BinaryMask::half(3);
  CHECK(m3.bits == std::vector<std::uint8_t>{1, 1, 1, 0});
  CHECK(m3.cond_spatial() == std::vector<int>{0, 1});
  CHECK(m3.active_spatial() == std::vector<int>{2});
  BinaryMask f3 = m3.flipped();
  CHECK(f3.cond_spatial() == std::vector<int>{2});
  CHECK(f3.active_spatial() == std::vector<int>{0, 1});
}

TEST_CASE("layer kind names round trip") {
  for (LayerKind k :
       {LayerKind::tangent, LayerKind::wrapped, LayerKind::euclidean_affine}) {
    CHECK(layer_kind_from_string(to_string(k)) == k);
  }
  CHECK_THROWS(layer_kind_from_string("banana"));
}

TEST_CASE("saturated scales and zero shifts give the identity map") {
  CounterRng rng(900, RngStream::param_init);
  for (LayerKind kind : {LayerKind::tangent, LayerKind::wrapped}) {
    for (int dim : {2, 3}) {
      CAPTURE(to_string(kind));
      CAPTURE(dim);
      double R = 1.5;
      FlowStack st = make_flow_stack(kind, dim, 2, 8, R, rng);
      saturate_scales(st);  // shift nets are already exactly zero from init
      for (CouplingLayer& layer : st.layers) layer.clamp_maps = false;
      CounterRng prng(901, RngStream::generic);
      for (int trial = 0; trial < 5; ++trial) {
        ManifoldPoint x = random_point(dim, R, 0.9, prng);
        auto [y, ld] = st.forward(x);
        CHECK(max_abs_diff(y.x, x.x) < 1e-10);
        CHECK(std::abs(ld) < 1e-10);
        auto [z, ldi] = st.inverse(x);
        CHECK(max_abs_diff(z.x, x.x) < 1e-10);
        CHECK(std::abs(ldi) < 1e-10);
      }
    }
  }
}

TEST_CASE("freshly initialized layers scale the active block by exactly one half") {
  // Zero-initialized conditioner output means logistic(0) = 0.5, not an
  // identity start; this is intentional and pinned here.
  CounterRng rng(902, RngStream::param_init);
  double R = 2.0;
  FlowStack st = make_flow_stack(LayerKind::tangent, 2, 1, 8, R, rng);
  st.layers[0].clamp_maps = false;
  std::vector<double> u = {0.8, 0.6};
  ManifoldPoint x{exp_map_origin(std::span<const double>(u), R)};
  auto [y, ld] = st.forward(x);
  std::vector<double> yt = log_map_origin(y.x, R);
  CHECK(yt[0] == doctest::Approx(0.8).epsilon(1e-12));   // conditioned slot
  CHECK(yt[1] == doctest::Approx(0.3).epsilon(1e-12));   // active slot halved
  // Volume: one coupling factor of log(1/2) plus the sheet distortion ratio.
  double want = std::log(0.5) +
                (2 - 1) * (std::log(std::sinh(std::hypot(0.8, 0.3) / R) /
                                    (std::hypot(0.8, 0.3) / R)) -
                           std::log(std::sinh(std::hypot(0.8, 0.6) / R) /
                                    (std::hypot(0.8, 0.6) / R)));
  CHECK(ld == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("coupling layers preserve the conditioned block") {
  CounterRng rng(903, RngStream::param_init);
  double R = 1.3;
  for (LayerKind kind : {LayerKind::tangent, LayerKind::wrapped}) {
    CAPTURE(to_string(kind));
    FlowStack st = make_flow_stack(kind, 3, 2, 8, R, rng);
    jitter_stack(st, 0.5, rng);
    for (CouplingLayer& layer : st.layers) layer.clamp_maps = false;
    CounterRng prng(904, RngStream::generic);
    ManifoldPoint x = random_point(3, R, 0.8, prng);
    for (const CouplingLayer& layer : st.layers) {
      auto [y, ld] = layer_forward(layer, x, R);
      std::vector<double> xt = log_map_origin(x.x, R);
      std::vector<double> yt = log_map_origin(y.x, R);
      for (int c : layer.mask.cond_spatial()) {
        CHECK(yt[c] == doctest::Approx(xt[c]).epsilon(1e-11));
      }
    }
  }

  // The Euclidean layer passes conditioned coordinates through bit-exactly.
  FlowStack eu = make_flow_stack(LayerKind::euclidean_affine, 3, 1, 8, 1.0, rng, true);
  jitter_stack(eu, 0.5, rng);
  std::vector<double> x = {0.4, -0.7, 1.1};
  auto [y, ld] = layer_forward_euclidean(eu.layers[0], x);
  for (int c : eu.layers[0].mask.cond_spatial()) CHECK(y[c] == x[c]);
}

TEST_CASE("layer volume terms match brute-force chart jacobians") {
  CounterRng rng(905, RngStream::param_init);
  CounterRng prng(906, RngStream::generic);
  for (LayerKind kind : {LayerKind::tangent, LayerKind::wrapped}) {
    for (int dim : {2, 3, 4}) {
      for (bool flip : {false, true}) {
        CAPTURE(to_string(kind));
        CAPTURE(dim);
        CAPTURE(flip);
        double R = dim == 3 ? 2.0 : 1.0;
        FlowStack st = make_flow_stack(kind, dim, 2, 8, R, rng);
        CouplingLayer layer = st.layers[flip ? 1 : 0];
        jitter(layer.scale_net, 0.6, rng);
        jitter(layer.shift_net, 0.4, rng);
        // Push anchors/shifts decisively away from the origin so that the
        // middle distortion exponent actually matters.
        add_last_bias(layer.shift_net, 0.9);
        layer.clamp_maps = false;

        for (int trial = 0; trial < 3; ++trial) {
          ManifoldPoint x = random_point(dim, R, 0.7, prng);
          auto [y, logdet] = layer_forward(layer, x, R);
          double oracle = testing::fd_manifold_logdet(
              [&](const ManifoldPoint& p) { return layer_forward(layer, p, R).first; },
              x, R);
          double tol = 2e-4 + 1e-3 * std::abs(oracle);
          CAPTURE(logdet);
          CAPTURE(oracle);
          CHECK(std::abs(logdet - oracle) <= tol);
          // The inverse reports the negated volume term at the image point.
          auto [back, inv_logdet] = layer_inverse(layer, y, R);
          CHECK(max_abs_diff(back.x, x.x) < 1e-8);
          CHECK(logdet + inv_logdet == doctest::Approx(0.0).epsilon(1e-10));
        }
      }
    }
  }
}

TEST_CASE("euclidean affine layer volume matches the finite-difference jacobian") {
  CounterRng rng(907, RngStream::param_init);
  CounterRng prng(908, RngStream::generic);
  for (int dim : {2, 3}) {
    CAPTURE(dim);
    FlowStack st = make_flow_stack(LayerKind::euclidean_affine, dim, 1, 8, 1.0, rng, true);
    CouplingLayer layer = st.layers[0];
    jitter(layer.scale_net, 0.6, rng);
    jitter(layer.shift_net, 0.6, rng);
    std::vector<double> x(dim);
    for (double& c : x) c = prng.normal();
    auto [y, logdet] = layer_forward_euclidean(layer, x);
    auto jac = testing::fd_jacobian(
        [&](const std::vector<double>& p) {
          return layer_forward_euclidean(layer, p).first;
        },
        x);
    double oracle = testing::log_abs_det(jac);
    CHECK(logdet == doctest::Approx(oracle).epsilon(1e-6));
    auto [back, inv_logdet] = layer_inverse_euclidean(layer, y);
    CHECK(max_abs_diff(back, x) < 1e-10);
    CHECK(logdet + inv_logdet == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("wrapped coupling with a degenerate anchor reduces to tangent coupling") {
  // Zero shift nets put the anchor at the origin, where the transport/exp
  // detour collapses to plain tangent scaling.
  CounterRng rng(909, RngStream::param_init);
  for (int dim : {2, 3}) {
    CAPTURE(dim);
    double R = 1.4;
    FlowStack tc = make_flow_stack(LayerKind::tangent, dim, 2, 8, R, rng);
    FlowStack wc = make_flow_stack(LayerKind::wrapped, dim, 2, 8, R, rng);
    for (std::size_t k = 0; k < tc.layers.size(); ++k) {
      CounterRng jrng(910 + static_cast<std::uint64_t>(k), RngStream::generic);
      jitter(tc.layers[k].scale_net, 0.7, jrng);
      wc.layers[k].scale_net = tc.layers[k].scale_net;  // share scales
      tc.layers[k].clamp_maps = wc.layers[k].clamp_maps = false;
      // shift nets remain exactly zero from initialization
    }
    CounterRng prng(911, RngStream::generic);
    for (int trial = 0; trial < 5; ++trial) {
      ManifoldPoint x = random_point(dim, R, 0.8, prng);
      for (std::size_t k = 0; k < tc.layers.size(); ++k) {
        auto [yt, ldt] = layer_forward(tc.layers[k], x, R);
        auto [yw, ldw] = layer_forward(wc.layers[k], x, R);
        CHECK(max_abs_diff(yt.x, yw.x) < 1e-8);
        CHECK(ldt == doctest::Approx(ldw).epsilon(1e-8));
      }
    }
  }
}

TEST_CASE("stacks invert themselves and their volume terms cancel") {
  CounterRng rng(912, RngStream::param_init);
  for (LayerKind kind : {LayerKind::tangent, LayerKind::wrapped}) {
    for (int depth : {1, 2, 3, 4}) {
      CAPTURE(to_string(kind));
      CAPTURE(depth);
      double R = 2.0;
      FlowStack st = make_flow_stack(kind, 2, depth, 16, R, rng);
      jitter_stack(st, 0.4, rng);
      st.base.mu_tangent = {0.3, -0.1};
      st.base.log_sigma = {0.1, -0.2};
      auto pts = sample(st.base_params(), 250, 333);
      for (const auto& z0 : pts) {
        auto [x, ld_f] = st.forward(z0);
        CHECK(on_manifold(x, R, 1e-8));
        auto [back, ld_i] = st.inverse(x);
        CHECK(max_abs_diff(back.x, z0.x) < 1e-6);
        CHECK(std::abs(ld_f + ld_i) < 1e-9);
      }
    }
  }
}

TEST_CASE("stack forward composes the layers in order") {
  CounterRng rng(913, RngStream::param_init);
  double R = 1.6;
  FlowStack st = make_flow_stack(LayerKind::wrapped, 2, 2, 8, R, rng);
  jitter_stack(st, 0.5, rng);
  CounterRng prng(914, RngStream::generic);
  ManifoldPoint z0 = random_point(2, R, 0.7, prng);
  auto [x, ld] = st.forward(z0);
  auto [mid, ld0] = layer_forward(st.layers[0], z0, R);
  auto [end, ld1] = layer_forward(st.layers[1], mid, R);
  CHECK(max_abs_diff(x.x, end.x) == 0.0);
  CHECK(ld == ld0 + ld1);
}

TEST_CASE("an empty stack is exactly the base distribution") {
  FlowStack st;
  st.dim = 2;
  st.curvature = CurvatureState::fixed(1.5);
  st.base.mu_tangent = {0.3, -0.2};
  st.base.log_sigma = {0.0, -0.5};
  CounterRng prng(915, RngStream::generic);
  ManifoldPoint x = random_point(2, 1.5, 1.0, prng);
  auto [y, ld] = st.forward(x);
  CHECK(y.x == x.x);
  CHECK(ld == 0.0);
  CHECK(st.log_prob(x) == log_prob(st.base_params(), x));
}

TEST_CASE("parallel transport is volume neutral between tangent spaces") {
  CounterRng rng(916, RngStream::generic);
  for (double R : {1.0, 2.0}) {
    CAPTURE(R);
    ManifoldPoint x = random_point(3, R, 1.0, rng);
    ManifoldPoint y = random_point(3, R, 1.0, rng);
    auto bx = testing::tangent_basis(x, R);
    auto by = testing::tangent_basis(y, R);
    std::vector<std::vector<double>> coeff(bx.size(),
                                           std::vector<double>(bx.size()));
    for (std::size_t i = 0; i < bx.size(); ++i) {
      TangentVector v{bx[i], x.x};
      TangentVector pv = parallel_transport(x, y, v, R);
      for (std::size_t j = 0; j < by.size(); ++j) {
        coeff[i][j] = minkowski_inner(pv.v, by[j]);
      }
    }
    CHECK(std::abs(testing::log_abs_det(coeff)) < 1e-6);
  }
}

TEST_CASE("flow density integrates to one over the sheet") {
  CounterRng rng(917, RngStream::param_init);
  for (LayerKind kind : {LayerKind::tangent, LayerKind::wrapped}) {
    CAPTURE(to_string(kind));
    double R = 2.0;
    FlowStack st = make_flow_stack(kind, 2, 2, 16, R, rng);
    jitter_stack(st, 0.3, rng);
    st.base.mu_tangent = {0.2, -0.1};
    st.base.log_sigma = {0.1, -0.2};
    double mass = testing::quadrature_mass(
        [&](const ManifoldPoint& z) { return st.log_prob(z); }, R, 8.0, 0.025);
    CHECK(mass == doctest::Approx(1.0).epsilon(2e-2));
  }
}

TEST_CASE("sampling and scoring agree through importance ratios") {
  CounterRng rng(918, RngStream::param_init);
  double R = 2.0;
  FlowStack st = make_flow_stack(LayerKind::tangent, 2, 2, 16, R, rng);
  // Keep the warp mild: q below must sit inside the flow's bulk, or the
  // importance weights grow heavy tails and the 1e4-sample mean becomes a
  // systematic underestimate regardless of implementation correctness.
  jitter_stack(st, 0.1, rng);
  st.base.mu_tangent = {0.2, 0.1};
  st.base.log_sigma = {0.0, 0.0};

  std::vector<double> logp;
  auto pts = st.sample(10000, 2718, &logp);
  REQUIRE(pts.size() == logp.size());

  // Reported densities match a from-scratch evaluation.
  for (int i = 0; i < 50; ++i) {
    CHECK(logp[i] == doctest::Approx(st.log_prob(pts[i])).epsilon(1e-9));
  }

  // E_{z~flow}[ q(z) / flow(z) ] = 1 for any normalized q on the sheet; a
  // narrowed copy of the base, centered with it, keeps the weights bounded.
  WrappedNormalParams q;
  q.mu = st.base_params().mu;
  q.sigma = {0.7, 0.7};
  q.curvature = CurvatureState::fixed(R);
  std::vector<double> ws;
  ws.reserve(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    ws.push_back(std::exp(log_prob(q, pts[i]) - logp[i]));
  }
  auto [mean, se] = testing::mean_se(ws);
  CAPTURE(mean);
  CAPTURE(se);
  CHECK(std::abs(mean - 1.0) <= std::max(0.04, 5.0 * se));
}

TEST_CASE("data-space density is normalized under the reference measure") {
  CounterRng rng(919, RngStream::param_init);

  SUBCASE("hyperbolic stack at non-unit radius") {
    double R = 2.0;
    FlowStack st = make_flow_stack(LayerKind::wrapped, 2, 2, 16, R, rng);
    jitter_stack(st, 0.3, rng);
    st.base.mu_tangent = {0.2, -0.1};
    st.base.log_sigma = {0.1, -0.2};
    double extent = 12.0, step = 0.03;
    int cells = static_cast<int>(std::llround(2.0 * extent / step));
    double mass = 0.0;
    std::vector<double> xhat(2);
    for (int i = 0; i < cells; ++i) {
      xhat[0] = -extent + (i + 0.5) * step;
      for (int j = 0; j < cells; ++j) {
        xhat[1] = -extent + (j + 0.5) * step;
        double n2 = xhat[0] * xhat[0] + xhat[1] * xhat[1];
        mass += std::exp(st.data_log_prob(xhat)) / std::sqrt(1.0 + n2) * step * step;
      }
    }
    CHECK(mass == doctest::Approx(1.0).epsilon(2e-2));
  }

  SUBCASE("euclidean stack") {
    FlowStack st = make_flow_stack(LayerKind::euclidean_affine, 2, 2, 16, 1.0, rng, true);
    jitter_stack(st, 0.3, rng);
    st.base.mu_tangent = {0.1, -0.2};
    st.base.log_sigma = {0.0, 0.1};
    double extent = 10.0, step = 0.025;
    int cells = static_cast<int>(std::llround(2.0 * extent / step));
    double mass = 0.0;
    std::vector<double> xhat(2);
    for (int i = 0; i < cells; ++i) {
      xhat[0] = -extent + (i + 0.5) * step;
      for (int j = 0; j < cells; ++j) {
        xhat[1] = -extent + (j + 0.5) * step;
        double n2 = xhat[0] * xhat[0] + xhat[1] * xhat[1];
        mass += std::exp(st.data_log_prob(xhat)) / std::sqrt(1.0 + n2) * step * step;
      }
    }
    CHECK(mass == doctest::Approx(1.0).epsilon(2e-2));
  }
}

TEST_CASE("data-space density at unit radius equals the sheet density") {
  CounterRng rng(920, RngStream::param_init);
  FlowStack st = make_flow_stack(LayerKind::tangent, 2, 2, 16, 1.0, rng);
  jitter_stack(st, 0.4, rng);
  CounterRng prng(921, RngStream::generic);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> xhat = {1.5 * prng.normal(), 1.5 * prng.normal()};
    ManifoldPoint x = lift_to_hyperboloid(xhat, 1.0);
    CHECK(st.data_log_prob(xhat) ==
          doctest::Approx(st.log_prob(x)).epsilon(1e-14));
  }
}

TEST_CASE("generic evaluator reproduces the double path bit for bit") {
  CounterRng rng(922, RngStream::param_init);
  for (LayerKind kind : {LayerKind::tangent, LayerKind::wrapped}) {
    CAPTURE(to_string(kind));
    FlowStack st = make_flow_stack(kind, 2, 2, 16, 1.7, rng);
    jitter_stack(st, 0.4, rng);
    st.base.mu_tangent = {0.15, -0.25};
    st.base.log_sigma = {0.05, -0.1};
    StackEval<double> ev = make_stack_eval(st);
    CounterRng prng(923, RngStream::generic);
    for (int trial = 0; trial < 10; ++trial) {
      std::vector<double> xhat = {2.0 * prng.normal(), 2.0 * prng.normal()};
      CHECK(stack_data_log_prob_eval(ev, xhat) == st.data_log_prob(xhat));
    }
  }

  FlowStack eu = make_flow_stack(LayerKind::euclidean_affine, 2, 2, 16, 1.0, rng, true);
  jitter_stack(eu, 0.4, rng);
  StackEval<double> ev = make_stack_eval(eu);
  std::vector<double> xhat = {0.7, -1.2};
  CHECK(stack_data_log_prob_eval(ev, xhat) == eu.data_log_prob(xhat));
}

TEST_CASE("euclidean stack sampling matches its density") {
  CounterRng rng(924, RngStream::param_init);
  FlowStack st = make_flow_stack(LayerKind::euclidean_affine, 2, 2, 16, 1.0, rng, true);
  jitter_stack(st, 0.4, rng);
  std::vector<double> logp;
  auto pts = st.sample_euclidean(4000, 515, &logp);
  REQUIRE(pts.size() == 4000);
  for (int i = 0; i < 40; ++i) {
    CHECK(logp[i] ==
          doctest::Approx(st.log_prob_euclidean(pts[i])).epsilon(1e-10));
  }
  // Round trip through the stack.
  for (int i = 0; i < 40; ++i) {
    auto [z0, ldi] = st.inverse_euclidean(pts[i]);
    auto [back, ldf] = st.forward_euclidean(z0);
    CHECK(max_abs_diff(back, pts[i]) < 1e-10);
    CHECK(std::abs(ldi + ldf) < 1e-12);
  }
}

TEST_SUITE_END();
