#pragma once

// Wrapped normal distribution on the hyperboloid: a diagonal Gaussian in the
// tangent space at the origin, parallel-transported to mu and pushed through
// the exponential map.  Exact density via the transport/exp change of
// variables (transport is volume-preserving; exp contributes the
// sinh-distortion factor).

#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "hypflow/lorentz.hpp"
#include "hypflow/rng.hpp"

namespace hypflow {

// Parallel transport specialized to the origin o = (R, 0, ..., 0) as one of
// the endpoints; avoids materializing o and keeps the time component of
// transported-to-origin vectors exactly zero.
template <class T>
std::vector<T> transport_to_origin(const std::vector<T>& mu, const std::vector<T>& v,
                                   const T& R) {
  T coef = -(v[0] / (R + mu[0]));
  std::vector<T> out;
  out.reserve(v.size());
  out.push_back(v[0] + coef * (R + mu[0]));
  for (std::size_t i = 1; i < v.size(); ++i) out.push_back(v[i] + coef * mu[i]);
  return out;
}

template <class T>
std::vector<T> transport_from_origin(const std::vector<T>& mu, const std::vector<T>& v,
                                     const T& R) {
  T coef = minkowski_inner(mu, v) / (R * (R + mu[0]));
  std::vector<T> out;
  out.reserve(v.size());
  out.push_back(v[0] + coef * (R + mu[0]));
  for (std::size_t i = 1; i < v.size(); ++i) out.push_back(v[i] + coef * mu[i]);
  return out;
}

// log density at z of the wrapped normal with mean point mu (ambient) and
// per-dimension tangent scales sigma, with respect to the Riemannian measure
// of the radius-R hyperboloid.
template <class T>
T wrapped_normal_log_prob(const std::vector<T>& mu, std::span<const T> sigma,
                          const std::vector<T>& z, const T& R) {
  using std::log;
  const int n = static_cast<int>(mu.size()) - 1;
  std::vector<T> u = log_map(mu, z, R);
  std::vector<T> v = transport_to_origin(mu, u, R);
  T lp = -log(sigma[0]) - (v[1] * v[1]) / (2.0 * sigma[0] * sigma[0]);
  for (int i = 1; i < n; ++i) {
    lp = lp - log(sigma[i]) - (v[i + 1] * v[i + 1]) / (2.0 * sigma[i] * sigma[i]);
  }
  lp = lp - 0.5 * n * std::log(2.0 * std::numbers::pi);
  T t = lorentz_norm(u);
  return lp - (n - 1) * log_sinh_ratio(t / R);
}

struct WrappedNormalParams {
  ManifoldPoint mu;
  std::vector<double> sigma;   // per-dimension tangent scales, length dim
  CurvatureState curvature;

  int dim() const { return mu.dim(); }
};

std::vector<ManifoldPoint> sample(const WrappedNormalParams& params, int count,
                                  std::uint64_t seed);
double log_prob(const WrappedNormalParams& params, const ManifoldPoint& z);

struct MixtureComponent {
  double weight = 1.0;
  WrappedNormalParams params;
};

std::vector<ManifoldPoint> sample(std::span<const MixtureComponent> mixture, int count,
                                  std::uint64_t seed);
double mixture_log_prob(std::span<const MixtureComponent> mixture,
                        const ManifoldPoint& z);

}  // namespace hypflow
