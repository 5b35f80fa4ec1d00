#include "hypflow/lorentz.hpp"

#include <cmath>

namespace hypflow {

ManifoldPoint origin_point(int dim, double R) {
  detail::require(dim >= 1, "origin_point: dim must be >= 1");
  std::vector<double> x(static_cast<std::size_t>(dim) + 1, 0.0);
  x[0] = R;
  return ManifoldPoint{std::move(x)};
}

double manifold_residual(const ManifoldPoint& p, double R) {
  double q = minkowski_inner(p.x, p.x);
  return std::abs(q / (-R * R) - 1.0);
}

bool on_manifold(const ManifoldPoint& p, double R, double tol) {
  return p.x.size() >= 2 && p.x[0] > 0.0 && manifold_residual(p, R) <= tol;
}

void validate_on_manifold(const ManifoldPoint& p, double R, double tol) {
  if (p.x.size() < 2) throw std::domain_error("point has no spatial coordinates");
  if (!(p.x[0] > 0.0)) throw std::domain_error("point is on the lower sheet");
  double r = manifold_residual(p, R);
  if (!(r <= tol)) {
    throw std::domain_error("point violates hyperboloid constraint, residual " +
                            std::to_string(r));
  }
}

ManifoldPoint project_to_hyperboloid(const std::vector<double>& x, double R) {
  detail::require(x.size() >= 2, "project_to_hyperboloid: ambient vector needed");
  double q = minkowski_inner(x, x);
  if (!(q < 0.0)) {
    throw std::domain_error("project_to_hyperboloid: vector is not timelike");
  }
  double s = R / std::sqrt(-q);
  if (x[0] < 0.0) s = -s;
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = s * x[i];
  return ManifoldPoint{std::move(out)};
}

ManifoldPoint lift_to_hyperboloid(std::span<const double> spatial, double R) {
  return ManifoldPoint{lift_spatial(spatial, R)};
}

ManifoldPoint exp_map(const ManifoldPoint& x, const TangentVector& v, double R,
                      bool clamp_norm) {
  return ManifoldPoint{exp_map(x.x, v.v, R, clamp_norm)};
}

TangentVector log_map(const ManifoldPoint& x, const ManifoldPoint& y, double R,
                      bool clamp_norm) {
  return TangentVector{log_map(x.x, y.x, R, clamp_norm), x.x};
}

TangentVector parallel_transport(const ManifoldPoint& x, const ManifoldPoint& y,
                                 const TangentVector& v, double R) {
  return TangentVector{parallel_transport(x.x, y.x, v.v, R), y.x};
}

double geodesic_distance(const ManifoldPoint& x, const ManifoldPoint& y, double R) {
  return geodesic_distance(x.x, y.x, R);
}

std::vector<double> to_poincare(const ManifoldPoint& x, double R) {
  double denom = R + x.x[0];
  std::vector<double> p(x.x.size() - 1);
  for (std::size_t i = 1; i < x.x.size(); ++i) p[i - 1] = R * x.x[i] / denom;
  return p;
}

ManifoldPoint from_poincare(std::span<const double> p, double R) {
  double n2 = 0.0;
  for (double c : p) n2 += c * c;
  double r2 = R * R;
  if (!(n2 < r2)) {
    throw std::domain_error("from_poincare: point outside the open ball of radius R");
  }
  double denom = r2 - n2;
  std::vector<double> x(p.size() + 1);
  x[0] = R * (r2 + n2) / denom;
  for (std::size_t i = 0; i < p.size(); ++i) x[i + 1] = 2.0 * r2 * p[i] / denom;
  return ManifoldPoint{std::move(x)};
}

}  // namespace hypflow
