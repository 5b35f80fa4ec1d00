#pragma once

// Adam optimizer with bias correction.

#include <cstdint>
#include <span>
#include <vector>

namespace hypflow {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig cfg;
  std::int64_t step = 0;
  std::vector<double> m;
  std::vector<double> v;

  explicit AdamState(AdamConfig c = {}) : cfg(c) {}

  void reset(std::size_t n) {
    step = 0;
    m.assign(n, 0.0);
    v.assign(n, 0.0);
  }

  // One update in place; params and grads must have the state's size.
  void update(std::span<double> params, std::span<const double> grads);
};

}  // namespace hypflow
