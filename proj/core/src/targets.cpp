#include "hypflow/targets.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "hypflow/rng.hpp"

namespace hypflow {

std::string to_string(TargetSpec::Kind k) {
  switch (k) {
    case TargetSpec::Kind::gaussian: return "gaussian";
    case TargetSpec::Kind::mixture: return "mixture";
    case TargetSpec::Kind::checkerboard: return "checkerboard";
    case TargetSpec::Kind::spiral: return "spiral";
  }
  return "?";
}

TargetSpec::Kind target_kind_from_string(const std::string& s) {
  if (s == "gaussian") return TargetSpec::Kind::gaussian;
  if (s == "mixture") return TargetSpec::Kind::mixture;
  if (s == "checkerboard") return TargetSpec::Kind::checkerboard;
  if (s == "spiral") return TargetSpec::Kind::spiral;
  throw std::invalid_argument("unknown target kind: " + s);
}

namespace {

WrappedNormalParams wn_at(const std::vector<double>& mean_tangent,
                          const std::vector<double>& sigma) {
  WrappedNormalParams p;
  p.mu = ManifoldPoint{
      exp_map_origin(std::span<const double>(mean_tangent), 1.0, false)};
  p.sigma = sigma;
  p.curvature = CurvatureState::fixed(1.0);
  return p;
}

}  // namespace

Target::Target(TargetSpec spec) : spec_(std::move(spec)) {
  switch (spec_.kind) {
    case TargetSpec::Kind::gaussian:
      if (spec_.mean_tangent.size() != 2 || spec_.sigma.size() != 2) {
        throw std::invalid_argument("gaussian target: mean and sigma must be 2-D");
      }
      components_.push_back({1.0, wn_at(spec_.mean_tangent, spec_.sigma)});
      break;
    case TargetSpec::Kind::mixture: {
      if (spec_.mix_means.empty() ||
          spec_.mix_means.size() != spec_.mix_sigmas.size() ||
          spec_.mix_means.size() != spec_.mix_weights.size()) {
        throw std::invalid_argument("mixture target: inconsistent component lists");
      }
      for (std::size_t c = 0; c < spec_.mix_means.size(); ++c) {
        if (spec_.mix_means[c].size() != 2 || spec_.mix_sigmas[c].size() != 2) {
          throw std::invalid_argument("mixture target: components must be 2-D");
        }
        components_.push_back(
            {spec_.mix_weights[c], wn_at(spec_.mix_means[c], spec_.mix_sigmas[c])});
      }
      break;
    }
    case TargetSpec::Kind::checkerboard:
    case TargetSpec::Kind::spiral:
      break;
  }
}

bool Target::has_density() const { return !components_.empty(); }

double Target::log_prob(const ManifoldPoint& z) const {
  if (!has_density()) {
    throw std::logic_error("target has no tractable density: " +
                           to_string(spec_.kind));
  }
  return mixture_log_prob(components_, z);
}

bool Target::checkerboard_occupied(double u0, double u1) {
  if (u0 < -2.0 || u0 >= 2.0 || u1 < -2.0 || u1 >= 2.0) return false;
  long i = static_cast<long>(std::floor(u0));
  long j = static_cast<long>(std::floor(u1));
  return (i + j) % 2 == 0;
}

std::vector<std::vector<double>> Target::sample_tangent(int count,
                                                        std::uint64_t seed) const {
  CounterRng rng(seed, RngStream::dataset);
  std::vector<std::vector<double>> out;
  out.reserve(count);
  switch (spec_.kind) {
    case TargetSpec::Kind::checkerboard: {
      // 8 occupied unit squares of the 4x4 board on [-2,2)^2 (even parity).
      std::vector<std::pair<int, int>> squares;
      for (int i = -2; i < 2; ++i) {
        for (int j = -2; j < 2; ++j) {
          if ((i + j) % 2 == 0) squares.emplace_back(i, j);
        }
      }
      for (int k = 0; k < count; ++k) {
        const auto& [i, j] = squares[rng.below(squares.size())];
        out.push_back({i + rng.uniform(), j + rng.uniform()});
      }
      break;
    }
    case TargetSpec::Kind::spiral: {
      // Arc positions uniform by radius (theta ~ sqrt(U)), Gaussian jitter.
      double max_theta = 2.0 * std::numbers::pi * spec_.spiral_turns;
      for (int k = 0; k < count; ++k) {
        double theta = max_theta * std::sqrt(rng.uniform());
        double r = spec_.spiral_radius * theta / max_theta;
        out.push_back({r * std::cos(theta) + spec_.spiral_noise * rng.normal(),
                       r * std::sin(theta) + spec_.spiral_noise * rng.normal()});
      }
      break;
    }
    default:
      throw std::logic_error("sample_tangent: only geometric targets");
  }
  return out;
}

std::vector<ManifoldPoint> Target::sample(int count, std::uint64_t seed) const {
  if (has_density()) {
    return hypflow::sample(std::span<const MixtureComponent>(components_), count, seed);
  }
  std::vector<ManifoldPoint> out;
  out.reserve(count);
  for (const auto& u : sample_tangent(count, seed)) {
    out.push_back(
        ManifoldPoint{exp_map_origin(std::span<const double>(u), 1.0, false)});
  }
  return out;
}

Target make_target(const TargetSpec& spec) { return Target(spec); }

std::vector<ManifoldPoint> sample_dataset(const TargetSpec& spec, int count,
                                          std::uint64_t seed) {
  return make_target(spec).sample(count, seed);
}

}  // namespace hypflow
