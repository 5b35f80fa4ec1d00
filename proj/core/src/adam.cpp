#include "hypflow/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace hypflow {

void AdamState::update(std::span<double> params, std::span<const double> grads) {
  if (params.size() != m.size() || grads.size() != m.size()) {
    throw std::invalid_argument("AdamState::update: size mismatch");
  }
  ++step;
  double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
  double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    double g = grads[i];
    m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
    v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
    double mhat = m[i] / bc1;
    double vhat = v[i] / bc2;
    params[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
  }
}

}  // namespace hypflow
