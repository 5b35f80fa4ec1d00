#include "hypflow/wrapped_normal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace hypflow {

namespace {

void check_params(const WrappedNormalParams& p) {
  if (static_cast<int>(p.sigma.size()) != p.dim()) {
    throw std::invalid_argument("WrappedNormalParams: sigma size must equal dim");
  }
  for (double s : p.sigma) {
    if (!(s > 0.0)) throw std::invalid_argument("WrappedNormalParams: sigma must be > 0");
  }
}

ManifoldPoint draw_one(const WrappedNormalParams& p, CounterRng& rng) {
  const int n = p.dim();
  const double R = p.curvature.R;
  std::vector<double> v(static_cast<std::size_t>(n) + 1, 0.0);
  for (int i = 0; i < n; ++i) v[i + 1] = p.sigma[i] * rng.normal();
  std::vector<double> u = transport_from_origin(p.mu.x, v, R);
  return ManifoldPoint{exp_map(p.mu.x, std::move(u), R)};
}

}  // namespace

std::vector<ManifoldPoint> sample(const WrappedNormalParams& params, int count,
                                  std::uint64_t seed) {
  check_params(params);
  CounterRng rng(seed, RngStream::base_sampling);
  std::vector<ManifoldPoint> out;
  out.reserve(count);
  for (int k = 0; k < count; ++k) out.push_back(draw_one(params, rng));
  return out;
}

double log_prob(const WrappedNormalParams& params, const ManifoldPoint& z) {
  check_params(params);
  if (z.dim() != params.dim()) {
    throw std::invalid_argument("log_prob: point dimension mismatch");
  }
  return wrapped_normal_log_prob<double>(params.mu.x, params.sigma, z.x,
                                         params.curvature.R);
}

std::vector<ManifoldPoint> sample(std::span<const MixtureComponent> mixture, int count,
                                  std::uint64_t seed) {
  if (mixture.empty()) throw std::invalid_argument("mixture sample: no components");
  double total = 0.0;
  for (const auto& c : mixture) {
    check_params(c.params);
    if (!(c.weight > 0.0)) throw std::invalid_argument("mixture: weights must be > 0");
    total += c.weight;
  }
  CounterRng pick(seed, RngStream::generic);
  CounterRng draw(seed, RngStream::base_sampling);
  std::vector<ManifoldPoint> out;
  out.reserve(count);
  for (int k = 0; k < count; ++k) {
    double u = pick.uniform() * total;
    std::size_t c = 0;
    for (; c + 1 < mixture.size(); ++c) {
      u -= mixture[c].weight;
      if (u < 0.0) break;
    }
    out.push_back(draw_one(mixture[c].params, draw));
  }
  return out;
}

double mixture_log_prob(std::span<const MixtureComponent> mixture,
                        const ManifoldPoint& z) {
  if (mixture.empty()) throw std::invalid_argument("mixture_log_prob: no components");
  double total = 0.0;
  for (const auto& c : mixture) total += c.weight;
  // logsumexp over log(w_c/total) + log_prob_c(z).
  std::vector<double> terms;
  terms.reserve(mixture.size());
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& c : mixture) {
    double t = std::log(c.weight / total) + log_prob(c.params, z);
    terms.push_back(t);
    hi = std::max(hi, t);
  }
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - hi);
  return hi + std::log(acc);
}

}  // namespace hypflow
