#pragma once

// Geometry kernel for the hyperboloid (Lorentz) model of hyperbolic space.
//
// Points live on H^n_K = { x in R^{n+1} : <x,x>_L = 1/K, x_0 > 0 } with
// curvature K < 0 and radius R = 1/sqrt(-K); <.,.>_L is the Minkowski inner
// product -x_0 y_0 + sum_i x_i y_i.  The core routines are templated over the
// scalar type so the identical formulas run on plain doubles and on autodiff
// tape variables (including a differentiable radius R).

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hypflow/num.hpp"

namespace hypflow {

// ---------------------------------------------------------------------------
// Templated core on raw coordinate vectors.
// ---------------------------------------------------------------------------

namespace detail {

inline void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace detail

template <class T>
T minkowski_inner(const std::vector<T>& x, const std::vector<T>& y) {
  detail::require(x.size() == y.size() && x.size() >= 2,
                  "minkowski_inner: ambient vectors need equal size >= 2");
  T acc = x[0] * y[0];
  acc = -acc;
  for (std::size_t i = 1; i < x.size(); ++i) acc = acc + x[i] * y[i];
  return acc;
}

template <class T>
T sum_sq(std::span<const T> v) {
  detail::require(!v.empty(), "sum_sq: empty vector");
  T acc = v[0] * v[0];
  for (std::size_t i = 1; i < v.size(); ++i) acc = acc + v[i] * v[i];
  return acc;
}

// Euclidean norm with the zero-norm floor, so v / norm is never 0/0.
template <class T>
T euclidean_norm(std::span<const T> v) {
  using std::sqrt;
  return sqrt(clamp_min(sum_sq(v), kNormFloor));
}

// Minkowski norm of a tangent vector: sqrt(<v,v>_L).  The quadratic form is
// nonnegative on tangent spaces; tiny negative rounding is floored away.
template <class T>
T lorentz_norm(const std::vector<T>& v) {
  using std::sqrt;
  return sqrt(clamp_min(minkowski_inner(v, v), kNormFloor));
}

// Geodesic distance, computed as 2R asinh(|x - y|_L / (2R)).  This equals
// R arccosh(-<x,y>_L / R^2) exactly (the difference vector is spacelike),
// but stays fully accurate for nearby points and large radii, where the
// inner-product form loses the distance to cancellation against R^2.
template <class T>
T geodesic_distance(const std::vector<T>& x, const std::vector<T>& y, const T& R) {
  using std::asinh;
  using std::sqrt;
  detail::require(x.size() == y.size(), "geodesic_distance: size mismatch");
  std::vector<T> d;
  d.reserve(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) d.push_back(x[i] - y[i]);
  T q = clamp_min(minkowski_inner(d, d), 0.0);
  return 2.0 * R * asinh(sqrt(q) / (2.0 * R));
}

// Rescales v so its Minkowski norm is at most max_norm (direction preserved).
template <class T>
std::vector<T> clamp_tangent_norm(std::vector<T> v, double max_norm) {
  T t = lorentz_norm(v);
  if (value_of(t) > max_norm) {
    T s = max_norm / t;
    for (auto& c : v) c = c * s;
  }
  return v;
}

// exp_x(v) = cosh(|v|/R) x + (sinh(|v|/R) / (|v|/R)) v.
// If clamp_norm is set, |v| is first clamped to kMaxTangentNorm.
template <class T>
std::vector<T> exp_map(const std::vector<T>& x, std::vector<T> v, const T& R,
                       bool clamp_norm = false) {
  using std::cosh;
  detail::require(x.size() == v.size(), "exp_map: size mismatch");
  if (clamp_norm) v = clamp_tangent_norm(std::move(v), kMaxTangentNorm);
  T t = lorentz_norm(v);
  T u = t / R;
  T ch = cosh(u);
  T sr = sinh_ratio(u);
  std::vector<T> out;
  out.reserve(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out.push_back(ch * x[i] + sr * v[i]);
  return out;
}

// log_x(y) = (arccosh(a) / sqrt(a^2 - 1)) (y - a x) with a = -<x,y>_L / R^2.
// Inverse of exp_map on the whole manifold; |log_x(y)|_L equals d(x, y).
template <class T>
std::vector<T> log_map(const std::vector<T>& x, const std::vector<T>& y, const T& R,
                       bool clamp_norm = false) {
  detail::require(x.size() == y.size(), "log_map: size mismatch");
  T alpha = clamp_min(-minkowski_inner(x, y) / (R * R), 1.0);
  T pref = acosh_ratio(alpha);
  std::vector<T> v;
  v.reserve(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) v.push_back(pref * (y[i] - alpha * x[i]));
  if (clamp_norm) v = clamp_tangent_norm(std::move(v), kMaxTangentNorm);
  return v;
}

// Parallel transport of tangent v along the geodesic from x to y:
// PT(v) = v + <y,v>_L / (R^2 - <x,y>_L) (x + y).
// The denominator is >= 2 R^2 on the hyperboloid, so this is singularity-free.
template <class T>
std::vector<T> parallel_transport(const std::vector<T>& x, const std::vector<T>& y,
                                  const std::vector<T>& v, const T& R) {
  detail::require(x.size() == y.size() && x.size() == v.size(),
                  "parallel_transport: size mismatch");
  T coef = minkowski_inner(y, v) / (R * R - minkowski_inner(x, y));
  std::vector<T> out;
  out.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(v[i] + coef * (x[i] + y[i]));
  return out;
}

// Lifts spatial coordinates onto the hyperboloid: x_0 = sqrt(|x_hat|^2 + R^2).
template <class T>
std::vector<T> lift_spatial(std::span<const T> spatial, const T& R) {
  using std::sqrt;
  T x0 = sqrt(sum_sq(spatial) + R * R);
  std::vector<T> out;
  out.reserve(spatial.size() + 1);
  out.push_back(x0);
  for (const T& c : spatial) out.push_back(c);
  return out;
}

// exp at the origin o = (R, 0, ..., 0) of a tangent vector given by its
// spatial coordinates (the time component of tangents at o is always 0).
template <class T>
std::vector<T> exp_map_origin(std::span<const T> u, const T& R, bool clamp_norm = false) {
  using std::cosh;
  T t = euclidean_norm(u);
  std::vector<T> us(u.begin(), u.end());
  if (clamp_norm && value_of(t) > kMaxTangentNorm) {
    T s = kMaxTangentNorm / t;
    for (auto& c : us) c = c * s;
    t = euclidean_norm(std::span<const T>(us));
  }
  T w = t / R;
  T sr = sinh_ratio(w);
  std::vector<T> out;
  out.reserve(us.size() + 1);
  out.push_back(R * cosh(w));
  for (const T& c : us) out.push_back(sr * c);
  return out;
}

// log at the origin, returning spatial tangent coordinates.
template <class T>
std::vector<T> log_map_origin(const std::vector<T>& x, const T& R, bool clamp_norm = false) {
  detail::require(x.size() >= 2, "log_map_origin: ambient point needed");
  T alpha = clamp_min(x[0] / R, 1.0);
  T pref = acosh_ratio(alpha);
  std::vector<T> u;
  u.reserve(x.size() - 1);
  for (std::size_t i = 1; i < x.size(); ++i) u.push_back(pref * x[i]);
  if (clamp_norm) {
    T t = euclidean_norm(std::span<const T>(u));
    if (value_of(t) > kMaxTangentNorm) {
      T s = kMaxTangentNorm / t;
      for (auto& c : u) c = c * s;
    }
  }
  return u;
}

// Log-volume distortion of exp at the origin for a tangent norm t:
// log det = (n - 1) log( R sinh(t/R) / t ).
template <class T>
T exp_map_logdet(const T& tangent_norm, int dim, const T& R) {
  return (dim - 1) * log_sinh_ratio(tangent_norm / R);
}

// ---------------------------------------------------------------------------
// Double-facing strong types and conveniences.
// ---------------------------------------------------------------------------

// Curvature bookkeeping.  R is the radius; K = -1/R^2 < 0.
struct CurvatureState {
  double R = 1.0;
  bool learnable = false;

  // Linear warmup of R over the first `epochs` epochs (inclusive endpoints).
  struct Warmup {
    double start_R = 11.0;
    double end_R = 2.0;
    int epochs = 10;
  };
  std::optional<Warmup> warmup;

  double K() const { return -1.0 / (R * R); }

  static CurvatureState fixed(double radius) { return CurvatureState{radius, false, {}}; }

  // Scheduled radius during warmup; end_R once warmup has finished.
  double radius_at_epoch(int epoch) const {
    if (!warmup || warmup->epochs <= 0) return R;
    const Warmup& w = *warmup;
    if (epoch >= w.epochs) return w.end_R;
    if (w.epochs == 1) return w.end_R;
    double f = static_cast<double>(epoch) / static_cast<double>(w.epochs - 1);
    return w.start_R + (w.end_R - w.start_R) * f;
  }
};

// A point on the hyperboloid, stored in ambient coordinates (time first).
struct ManifoldPoint {
  std::vector<double> x;

  int dim() const { return static_cast<int>(x.size()) - 1; }
  double time() const { return x[0]; }
  std::span<const double> spatial() const {
    return std::span<const double>(x).subspan(1);
  }
};

// A tangent vector in ambient coordinates, remembering its base point.
struct TangentVector {
  std::vector<double> v;
  std::vector<double> base;
};

ManifoldPoint origin_point(int dim, double R);

// |K <x,x>_L - 1|, the relative defect of the hyperboloid constraint.
double manifold_residual(const ManifoldPoint& p, double R);
bool on_manifold(const ManifoldPoint& p, double R, double tol = 1e-6);
void validate_on_manifold(const ManifoldPoint& p, double R, double tol = 1e-6);

// Radial rescaling of a timelike ambient vector onto the hyperboloid:
// x -> R x / sqrt(-<x,x>_L), with the time sign fixed to positive.
// Throws std::domain_error if x is not timelike.
ManifoldPoint project_to_hyperboloid(const std::vector<double>& x, double R);

// Raises spatial coordinates to the sheet: x_0 = sqrt(|spatial|^2 + R^2).
ManifoldPoint lift_to_hyperboloid(std::span<const double> spatial, double R);

ManifoldPoint exp_map(const ManifoldPoint& x, const TangentVector& v, double R,
                      bool clamp_norm = false);
TangentVector log_map(const ManifoldPoint& x, const ManifoldPoint& y, double R,
                      bool clamp_norm = false);
TangentVector parallel_transport(const ManifoldPoint& x, const ManifoldPoint& y,
                                 const TangentVector& v, double R);
double geodesic_distance(const ManifoldPoint& x, const ManifoldPoint& y, double R);

// Stereographic projection to the Poincare ball of radius R and back:
// p = R x_hat / (R + x_0);   |p| < R always holds on the sheet.
std::vector<double> to_poincare(const ManifoldPoint& x, double R);
ManifoldPoint from_poincare(std::span<const double> p, double R);

}  // namespace hypflow
