#pragma once

// Synthetic 2-D target densities on the reference hyperboloid (K = -1).
// All targets are built by sampling in the tangent space at the origin and
// pushing through the exponential map; the Gaussian-based ones expose exact
// log densities, the geometric ones (checkerboard, spiral) are sample-only.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hypflow/lorentz.hpp"
#include "hypflow/wrapped_normal.hpp"

namespace hypflow {

struct TargetSpec {
  enum class Kind { gaussian, mixture, checkerboard, spiral };
  Kind kind = Kind::gaussian;

  // gaussian: one wrapped normal, mean given in tangent coordinates.
  std::vector<double> mean_tangent = {-1.0, 1.0};
  std::vector<double> sigma = {1.0, 0.25};

  // mixture: several wrapped normals.
  std::vector<std::vector<double>> mix_means = {{-1.5, 0.0}, {1.5, 0.0}};
  std::vector<std::vector<double>> mix_sigmas = {{0.5, 0.5}, {0.5, 0.5}};
  std::vector<double> mix_weights = {0.5, 0.5};

  // spiral: Archimedean spiral in the tangent plane.
  double spiral_turns = 2.0;
  double spiral_radius = 2.0;
  double spiral_noise = 0.05;

  int dim() const { return 2; }
};

std::string to_string(TargetSpec::Kind k);
TargetSpec::Kind target_kind_from_string(const std::string& s);

class Target {
 public:
  explicit Target(TargetSpec spec);

  const TargetSpec& spec() const { return spec_; }
  int dim() const { return spec_.dim(); }

  // Exact density available (gaussian, mixture)?
  bool has_density() const;

  // log density w.r.t. the Riemannian measure of the K = -1 hyperboloid.
  double log_prob(const ManifoldPoint& z) const;

  std::vector<ManifoldPoint> sample(int count, std::uint64_t seed) const;

  // The tangent-space pre-images used by the samplers (checkerboard and
  // spiral only); useful for geometric membership checks.
  std::vector<std::vector<double>> sample_tangent(int count, std::uint64_t seed) const;

  // Checkerboard occupancy test in tangent coordinates.
  static bool checkerboard_occupied(double u0, double u1);

 private:
  TargetSpec spec_;
  std::vector<MixtureComponent> components_;  // gaussian/mixture kinds
};

Target make_target(const TargetSpec& spec);
std::vector<ManifoldPoint> sample_dataset(const TargetSpec& spec, int count,
                                          std::uint64_t seed);

}  // namespace hypflow
