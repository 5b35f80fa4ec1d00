#include "support/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>

namespace hypflow::testing {

std::vector<std::vector<double>> fd_jacobian(
    const std::function<std::vector<double>(const std::vector<double>&)>& f,
    const std::vector<double>& at, double h) {
  const std::size_t n = at.size();
  std::vector<std::vector<double>> cols(n);
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<double> up = at, dn = at;
    up[j] += h;
    dn[j] -= h;
    std::vector<double> fu = f(up), fd = f(dn);
    if (fu.size() != fd.size()) throw std::logic_error("fd_jacobian: ragged output");
    cols[j].resize(fu.size());
    for (std::size_t i = 0; i < fu.size(); ++i) {
      cols[j][i] = (fu[i] - fd[i]) / (2.0 * h);
    }
  }
  const std::size_t m = cols.empty() ? 0 : cols[0].size();
  std::vector<std::vector<double>> jac(m, std::vector<double>(n));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) jac[i][j] = cols[j][i];
  }
  return jac;
}

std::vector<double> fd_gradient(
    const std::function<double(const std::vector<double>&)>& f,
    const std::vector<double>& at, double h) {
  std::vector<double> g(at.size());
  for (std::size_t j = 0; j < at.size(); ++j) {
    std::vector<double> up = at, dn = at;
    up[j] += h;
    dn[j] -= h;
    g[j] = (f(up) - f(dn)) / (2.0 * h);
  }
  return g;
}

double log_abs_det(const std::vector<std::vector<double>>& m) {
  const auto n = static_cast<Eigen::Index>(m.size());
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (static_cast<Eigen::Index>(m[i].size()) != n) {
      throw std::invalid_argument("log_abs_det: matrix not square");
    }
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = m[i][j];
  }
  return std::log(std::abs(Eigen::FullPivLU<Eigen::MatrixXd>(a).determinant()));
}

ManifoldPoint chart(const std::vector<double>& u, double R) {
  return ManifoldPoint{exp_map_origin(std::span<const double>(u), R, false)};
}

std::vector<double> chart_inverse(const ManifoldPoint& x, double R) {
  return log_map_origin(x.x, R, false);
}

double chart_log_volume(const std::vector<double>& u, double R) {
  const int n = static_cast<int>(u.size());
  double t = euclidean_norm(std::span<const double>(u));
  return (n - 1) * log_sinh_ratio(t / R);
}

double fd_manifold_logdet(
    const std::function<ManifoldPoint(const ManifoldPoint&)>& map,
    const ManifoldPoint& x, double R, double h) {
  std::vector<double> u0 = chart_inverse(x, R);
  auto F = [&](const std::vector<double>& u) {
    return chart_inverse(map(chart(u, R)), R);
  };
  double flat = log_abs_det(fd_jacobian(F, u0, h));
  return flat + chart_log_volume(F(u0), R) - chart_log_volume(u0, R);
}

std::vector<std::vector<double>> tangent_basis(const ManifoldPoint& x, double R) {
  const int n = x.dim();
  std::vector<std::vector<double>> basis;
  basis.reserve(n);
  std::vector<int> axes;
  for (int i = 1; i <= n; ++i) axes.push_back(i);
  axes.push_back(0);  // spare candidate in case a spatial axis degenerates
  for (int i : axes) {
    if (static_cast<int>(basis.size()) == n) break;
    std::vector<double> w(n + 1, 0.0);
    w[i] = 1.0;
    // Project the ambient axis onto the tangent space at x.
    double inner = minkowski_inner(w, x.x);
    for (int k = 0; k <= n; ++k) w[k] += inner / (R * R) * x.x[k];
    for (const auto& b : basis) {
      double c = minkowski_inner(w, b);
      for (int k = 0; k <= n; ++k) w[k] -= c * b[k];
    }
    double norm = std::sqrt(minkowski_inner(w, w));
    if (!(norm > 1e-10)) continue;  // axis degenerate at this x; skip
    for (double& c : w) c /= norm;
    basis.push_back(std::move(w));
  }
  if (static_cast<int>(basis.size()) != n) {
    throw std::runtime_error("tangent_basis: degenerate point");
  }
  return basis;
}

TangentVector random_tangent(const ManifoldPoint& x, double R, double scale,
                             CounterRng& rng) {
  auto basis = tangent_basis(x, R);
  std::vector<double> v(x.x.size(), 0.0);
  for (const auto& b : basis) {
    double c = scale * rng.normal();
    for (std::size_t k = 0; k < v.size(); ++k) v[k] += c * b[k];
  }
  return TangentVector{v, x.x};
}

double quadrature_mass(const std::function<double(const ManifoldPoint&)>& log_density,
                       double R, double radius, double step) {
  const int n_cells = static_cast<int>(std::llround(2.0 * radius / step));
  double mass = 0.0;
  std::vector<double> u(2);
  for (int i = 0; i < n_cells; ++i) {
    u[0] = -radius + (static_cast<double>(i) + 0.5) * step;
    for (int j = 0; j < n_cells; ++j) {
      u[1] = -radius + (static_cast<double>(j) + 0.5) * step;
      double ld = log_density(chart(u, R)) + chart_log_volume(u, R);
      mass += std::exp(ld);
    }
  }
  return mass * step * step;
}

namespace {

double cross(const std::array<double, 2>& o, const std::array<double, 2>& a,
             const std::array<double, 2>& b) {
  return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

double point_segment_dist(const std::array<double, 2>& p, const std::array<double, 2>& a,
                          const std::array<double, 2>& b) {
  double vx = b[0] - a[0], vy = b[1] - a[1];
  double wx = p[0] - a[0], wy = p[1] - a[1];
  double vv = vx * vx + vy * vy;
  double t = vv > 0.0 ? std::clamp((wx * vx + wy * vy) / vv, 0.0, 1.0) : 0.0;
  double dx = wx - t * vx, dy = wy - t * vy;
  return std::sqrt(dx * dx + dy * dy);
}

}  // namespace

std::vector<std::array<double, 2>> convex_hull(std::vector<std::array<double, 2>> pts) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  const std::size_t n = pts.size();
  if (n < 3) return pts;
  std::vector<std::array<double, 2>> hull(2 * n);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {  // lower chain
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  for (std::size_t i = n - 1, lo = k + 1; i-- > 0;) {  // upper chain
    while (k >= lo && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

bool in_dilated_hull(const std::vector<std::array<double, 2>>& hull,
                     const std::array<double, 2>& p, double dilation) {
  const std::size_t n = hull.size();
  if (n == 0) return false;
  if (n < 3) {
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (point_segment_dist(p, hull[i], hull[i + 1]) <= dilation) return true;
    }
    double dx = p[0] - hull[0][0], dy = p[1] - hull[0][1];
    return std::sqrt(dx * dx + dy * dy) <= dilation;
  }
  bool inside = true;
  for (std::size_t i = 0; i < n; ++i) {
    if (cross(hull[i], hull[(i + 1) % n], p) < 0.0) {
      inside = false;
      break;
    }
  }
  if (inside) return true;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    best = std::min(best, point_segment_dist(p, hull[i], hull[(i + 1) % n]));
  }
  return best <= dilation;
}

std::pair<double, double> mean_se(const std::vector<double>& xs) {
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var = xs.size() > 1 ? var / static_cast<double>(xs.size() - 1) : 0.0;
  return {mean, std::sqrt(var / static_cast<double>(xs.size()))};
}

}  // namespace hypflow::testing
