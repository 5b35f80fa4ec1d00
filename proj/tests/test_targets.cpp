#include <doctest.h>

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "hypflow/csv.hpp"
#include "hypflow/lorentz.hpp"
#include "hypflow/targets.hpp"
#include "hypflow/wrapped_normal.hpp"

using namespace hypflow;

namespace {

ManifoldPoint exp_o(std::vector<double> u) {
  return ManifoldPoint{exp_map_origin(std::span<const double>(u), 1.0)};
}

std::filesystem::path temp_file(const char* name) {
  return std::filesystem::temp_directory_path() /
         (std::string("hypflow-targets-") + std::to_string(::getpid()) + "-" + name);
}

}  // namespace

TEST_SUITE_BEGIN("targets");

TEST_CASE("target kind names round trip") {
  for (TargetSpec::Kind k : {TargetSpec::Kind::gaussian, TargetSpec::Kind::mixture,
                             TargetSpec::Kind::checkerboard, TargetSpec::Kind::spiral}) {
    CHECK(target_kind_from_string(to_string(k)) == k);
  }
  CHECK_THROWS(target_kind_from_string("donut"));
}

TEST_CASE("gaussian target defaults are pinned and the density is exact") {
  TargetSpec spec;  // defaults
  CHECK(spec.kind == TargetSpec::Kind::gaussian);
  CHECK(spec.mean_tangent == std::vector<double>{-1.0, 1.0});
  CHECK(spec.sigma == std::vector<double>{1.0, 0.25});

  Target t = make_target(spec);
  CHECK(t.has_density());
  ManifoldPoint mean = exp_o({-1.0, 1.0});
  CHECK(t.log_prob(mean) == doctest::Approx(-0.45158270528945477).epsilon(1e-13));

  // Same number through the distribution API directly.
  WrappedNormalParams p;
  p.mu = mean;
  p.sigma = {1.0, 0.25};
  p.curvature = CurvatureState::fixed(1.0);
  CHECK(t.log_prob(mean) == doctest::Approx(log_prob(p, mean)).epsilon(1e-15));
}

TEST_CASE("mixture target defaults are pinned") {
  TargetSpec spec;
  spec.kind = TargetSpec::Kind::mixture;
  CHECK(spec.mix_means ==
        std::vector<std::vector<double>>{{-1.5, 0.0}, {1.5, 0.0}});
  CHECK(spec.mix_weights == std::vector<double>{0.5, 0.5});
  Target t = make_target(spec);
  CHECK(t.has_density());
  CHECK(t.log_prob(origin_point(2, 1.0)) ==
        doctest::Approx(-5.3019012356786455).epsilon(1e-13));
  // Symmetric by construction.
  ManifoldPoint a = exp_o({0.7, 0.2});
  ManifoldPoint b = exp_o({-0.7, 0.2});
  CHECK(t.log_prob(a) == doctest::Approx(t.log_prob(b)).epsilon(1e-12));
}

TEST_CASE("mixture target validates component lists") {
  TargetSpec spec;
  spec.kind = TargetSpec::Kind::mixture;
  spec.mix_weights = {1.0};  // now inconsistent with two means
  CHECK_THROWS(make_target(spec));
}

TEST_CASE("datasets are deterministic in the seed and live on the sheet") {
  for (TargetSpec::Kind kind : {TargetSpec::Kind::gaussian, TargetSpec::Kind::mixture,
                                TargetSpec::Kind::checkerboard, TargetSpec::Kind::spiral}) {
    CAPTURE(to_string(kind));
    TargetSpec spec;
    spec.kind = kind;
    auto a = sample_dataset(spec, 500, 42);
    auto b = sample_dataset(spec, 500, 42);
    auto c = sample_dataset(spec, 500, 43);
    REQUIRE(a.size() == 500);
    bool all_same = true, any_diff_seed = false;
    for (int i = 0; i < 500; ++i) {
      if (a[i].x != b[i].x) all_same = false;
      if (a[i].x != c[i].x) any_diff_seed = true;
      CHECK(on_manifold(a[i], 1.0, 1e-9));
    }
    CHECK(all_same);
    CHECK(any_diff_seed);
  }
}

TEST_CASE("checkerboard samples occupy exactly the even-parity squares") {
  CHECK(Target::checkerboard_occupied(0.5, 0.5));
  CHECK(!Target::checkerboard_occupied(-0.5, 0.5));
  CHECK(Target::checkerboard_occupied(-2.0, -1.5));
  CHECK(!Target::checkerboard_occupied(1.999, -2.0));
  CHECK(!Target::checkerboard_occupied(2.0, 0.0));   // right-open domain
  CHECK(!Target::checkerboard_occupied(0.0, -2.5));  // outside the board

  TargetSpec spec;
  spec.kind = TargetSpec::Kind::checkerboard;
  Target t = make_target(spec);
  CHECK(!t.has_density());
  CHECK_THROWS(t.log_prob(origin_point(2, 1.0)));

  auto pre = t.sample_tangent(2000, 7);
  // Count per occupied square; all 8 should be hit roughly evenly.
  std::vector<int> counts(16, 0);
  for (const auto& u : pre) {
    REQUIRE(Target::checkerboard_occupied(u[0], u[1]));
    int i = static_cast<int>(std::floor(u[0])) + 2;
    int j = static_cast<int>(std::floor(u[1])) + 2;
    counts[i * 4 + j]++;
  }
  int occupied = 0;
  for (int c : counts) {
    if (c > 0) {
      ++occupied;
      CHECK(c > 150);  // expectation is 250 per square
    }
  }
  CHECK(occupied == 8);
}

TEST_CASE("spiral samples hug the archimedean arc") {
  TargetSpec spec;
  spec.kind = TargetSpec::Kind::spiral;
  Target t = make_target(spec);
  CHECK(!t.has_density());

  auto pre = t.sample_tangent(1000, 11);
  double max_theta = 2.0 * std::numbers::pi * spec.spiral_turns;
  // Distance from each pre-image to the closest point of the ideal arc.
  const int grid = 4000;
  for (const auto& u : pre) {
    double best = 1e9;
    for (int g = 0; g <= grid; ++g) {
      double theta = max_theta * g / grid;
      double r = spec.spiral_radius * theta / max_theta;
      double dx = u[0] - r * std::cos(theta);
      double dy = u[1] - r * std::sin(theta);
      best = std::min(best, dx * dx + dy * dy);
    }
    CHECK(std::sqrt(best) < 5.0 * spec.spiral_noise);
    CHECK(std::hypot(u[0], u[1]) < spec.spiral_radius + 5.0 * spec.spiral_noise);
  }

  // The manifold samples are the exp-pushed pre-images, in the same order.
  auto pts = t.sample(50, 11);
  auto pre2 = t.sample_tangent(50, 11);
  for (int i = 0; i < 50; ++i) {
    auto u = log_map_origin(pts[i].x, 1.0);
    CHECK(std::abs(u[0] - pre2[i][0]) < 1e-10);
    CHECK(std::abs(u[1] - pre2[i][1]) < 1e-10);
  }
}

TEST_CASE("datasets survive a CSV round trip bit for bit") {
  TargetSpec spec;  // gaussian
  auto pts = sample_dataset(spec, 100, 99);
  auto path = temp_file("roundtrip.csv");
  write_points_csv(path.string(), pts);
  auto back = read_points_csv(path.string());
  REQUIRE(back.size() == pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    CHECK(back[i].x == pts[i].x);
  }
  std::filesystem::remove(path);
}

TEST_SUITE_END();
