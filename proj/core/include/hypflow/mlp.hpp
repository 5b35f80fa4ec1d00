#pragma once

// Dense multilayer perceptron used for the conditioner networks.
// Architecture: affine -> tanh -> affine -> ... (no activation after the last
// layer).  Parameters are stored flat, per layer: weights row-major
// (out x in), then biases.

#include <span>
#include <vector>

#include "hypflow/rng.hpp"
#include "hypflow/tape.hpp"

namespace hypflow {

struct Mlp {
  std::vector<int> dims;          // e.g. {in, 128, out}
  std::vector<double> params;     // flattened, see layer_offset()

  // Uniform [-1/sqrt(fan_in), 1/sqrt(fan_in)] initialization.  When
  // zero_last_layer is set, the final affine layer starts at exactly zero so
  // the network's initial output is 0 regardless of input.
  static Mlp create(std::vector<int> dims, CounterRng& rng, bool zero_last_layer);

  std::size_t param_count() const;
  int in_dim() const { return dims.front(); }
  int out_dim() const { return dims.back(); }

  std::vector<double> apply(std::span<const double> in) const;

  // Tape version; `p` supplies the parameters as tape variables, aligned with
  // the flat layout of `params` (p.size() == param_count()).
  std::vector<Var> apply(Tape& tape, std::span<const Var> p,
                         std::span<const Var> in) const;
};

}  // namespace hypflow
