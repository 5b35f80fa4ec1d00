#include "hypflow/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "hypflow/adam.hpp"
#include "hypflow/rng.hpp"
#include "hypflow/tape.hpp"

namespace hypflow {

namespace {

// Flat layout bookkeeping: (name, size) per block, stack blocks first, then
// the log-radius slot.
std::vector<std::pair<std::string, std::size_t>> block_extents(const FlowStack& stack) {
  std::vector<std::pair<std::string, std::size_t>> ext;
  for (std::size_t k = 0; k < stack.layers.size(); ++k) {
    ext.emplace_back("layer" + std::to_string(k) + ".scale",
                     stack.layers[k].scale_net.params.size());
    ext.emplace_back("layer" + std::to_string(k) + ".shift",
                     stack.layers[k].shift_net.params.size());
  }
  ext.emplace_back("base.mu", stack.base.mu_tangent.size());
  ext.emplace_back("base.log_sigma", stack.base.log_sigma.size());
  ext.emplace_back("curvature.log_R", 1);
  return ext;
}

std::string locate_block(const FlowStack& stack, std::size_t flat_index) {
  std::size_t at = 0;
  for (const auto& [name, size] : block_extents(stack)) {
    if (flat_index < at + size) return name;
    at += size;
  }
  return "?";
}

struct TapeBinding {
  std::vector<Var> param_leaves;  // flatten_params order (incl. log_R last)
  StackEval<Var> eval;
};

// Fills `b` in place; the net lambdas keep a reference to b.param_leaves, so
// the binding must stay where it is while eval is used.
void bind_stack(const FlowStack& stack, Tape& tape, TapeBinding& b) {
  auto& leaves = b.param_leaves;
  leaves.reserve(stack.param_count() + 1);

  struct NetSpan {
    std::size_t at = 0, n = 0;
  };
  std::vector<NetSpan> scale_spans, shift_spans;
  for (const auto& layer : stack.layers) {
    NetSpan s{leaves.size(), layer.scale_net.params.size()};
    for (double v : layer.scale_net.params) leaves.push_back(tape.leaf(v));
    NetSpan t{leaves.size(), layer.shift_net.params.size()};
    for (double v : layer.shift_net.params) leaves.push_back(tape.leaf(v));
    scale_spans.push_back(s);
    shift_spans.push_back(t);
  }
  std::size_t mu_at = leaves.size();
  for (double v : stack.base.mu_tangent) leaves.push_back(tape.leaf(v));
  std::size_t ls_at = leaves.size();
  for (double v : stack.base.log_sigma) leaves.push_back(tape.leaf(v));
  Var log_R = tape.leaf(std::log(stack.curvature.R));
  leaves.push_back(log_R);

  StackEval<Var>& ev = b.eval;
  ev.stack = &stack;
  ev.R = exp(log_R);
  for (std::size_t k = 0; k < stack.layers.size(); ++k) {
    const Mlp& snet = stack.layers[k].scale_net;
    const Mlp& tnet = stack.layers[k].shift_net;
    NetSpan ss = scale_spans[k], ts = shift_spans[k];
    ev.scale_nets.push_back([&tape, &snet, &leaves, ss](const std::vector<Var>& in) {
      return snet.apply(tape, std::span<const Var>(leaves.data() + ss.at, ss.n), in);
    });
    ev.shift_nets.push_back([&tape, &tnet, &leaves, ts](const std::vector<Var>& in) {
      return tnet.apply(tape, std::span<const Var>(leaves.data() + ts.at, ts.n), in);
    });
  }
  for (std::size_t i = 0; i < stack.base.mu_tangent.size(); ++i) {
    ev.base_mu.push_back(leaves[mu_at + i]);
  }
  for (std::size_t i = 0; i < stack.base.log_sigma.size(); ++i) {
    ev.base_log_sigma.push_back(leaves[ls_at + i]);
  }
}

double finite_or_throw(double v, const char* what) {
  if (!std::isfinite(v)) {
    throw NumericError(std::string(what) + " is not finite");
  }
  return v;
}

}  // namespace

std::vector<double> flatten_params(const FlowStack& stack, double log_R) {
  std::vector<double> flat;
  flat.reserve(stack.param_count() + 1);
  for (const auto& layer : stack.layers) {
    flat.insert(flat.end(), layer.scale_net.params.begin(), layer.scale_net.params.end());
    flat.insert(flat.end(), layer.shift_net.params.begin(), layer.shift_net.params.end());
  }
  flat.insert(flat.end(), stack.base.mu_tangent.begin(), stack.base.mu_tangent.end());
  flat.insert(flat.end(), stack.base.log_sigma.begin(), stack.base.log_sigma.end());
  flat.push_back(log_R);
  return flat;
}

void scatter_params(FlowStack& stack, std::span<const double> flat, double& log_R) {
  if (flat.size() != stack.param_count() + 1) {
    throw std::invalid_argument("scatter_params: size mismatch");
  }
  std::size_t at = 0;
  auto take = [&](std::vector<double>& dst) {
    std::copy(flat.begin() + at, flat.begin() + at + dst.size(), dst.begin());
    at += dst.size();
  };
  for (auto& layer : stack.layers) {
    take(layer.scale_net.params);
    take(layer.shift_net.params);
  }
  take(stack.base.mu_tangent);
  take(stack.base.log_sigma);
  log_R = flat[at];
}

LossGrads stack_loss_gradients(const FlowStack& stack,
                               std::span<const std::vector<double>> batch,
                               bool learn_curvature, Tape* workspace) {
  if (batch.empty()) throw std::invalid_argument("stack_loss_gradients: empty batch");
  Tape local;
  Tape& tape = workspace ? *workspace : local;
  tape.clear();

  TapeBinding b;
  bind_stack(stack, tape, b);
  std::vector<Var> lps;
  lps.reserve(batch.size());
  for (const auto& sp : batch) {
    std::vector<Var> xhat = tape.leaves(sp);
    lps.push_back(stack_data_log_prob_eval(b.eval, xhat));
  }
  Var total = tape.sum(lps);
  Var loss = total * (-1.0 / static_cast<double>(batch.size()));
  tape.backward(loss);

  LossGrads out;
  out.loss = loss.value();
  out.grads.reserve(b.param_leaves.size());
  for (Var leaf : b.param_leaves) out.grads.push_back(tape.grad(leaf));
  if (!learn_curvature) out.grads.back() = 0.0;
  return out;
}

double stack_batch_nll(const FlowStack& stack,
                       std::span<const std::vector<double>> batch) {
  if (batch.empty()) throw std::invalid_argument("stack_batch_nll: empty batch");
  StackEval<double> ev = make_stack_eval(stack);
  double total = stack_data_log_prob_eval(ev, batch[0]);
  for (std::size_t i = 1; i < batch.size(); ++i) {
    total = total + stack_data_log_prob_eval(ev, batch[i]);
  }
  return total * (-1.0 / static_cast<double>(batch.size()));
}

namespace {

std::vector<std::vector<double>> spatials_of(std::span<const ManifoldPoint> pts,
                                             std::span<const std::size_t> idx) {
  std::vector<std::vector<double>> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) {
    auto sp = pts[i].spatial();
    out.emplace_back(sp.begin(), sp.end());
  }
  return out;
}

void probe_manifold_invariant(const FlowStack& stack,
                              std::span<const std::vector<double>> probe, int epoch) {
  const double R = stack.curvature.R;
  for (const auto& sp : probe) {
    ManifoldPoint state = lift_to_hyperboloid(sp, R);
    for (std::size_t k = stack.layers.size(); k-- > 0;) {
      auto [next, ld] = layer_inverse(stack.layers[k], state, R);
      state = std::move(next);
      if (!on_manifold(state, R, 1e-6)) {
        throw NumericError("intermediate point left the hyperboloid (epoch " +
                           std::to_string(epoch) + ", layer " + std::to_string(k) +
                           ", residual " + std::to_string(manifold_residual(state, R)) +
                           ")");
      }
    }
  }
}

}  // namespace

TrainResult train(const TrainConfig& config) {
  std::vector<ManifoldPoint> dataset =
      sample_dataset(config.target, config.dataset_count, config.seed);
  return train(config, dataset);
}

TrainResult train(const TrainConfig& config, const std::vector<ManifoldPoint>& dataset) {
  if (dataset.empty()) throw std::invalid_argument("train: empty dataset");
  if (config.dim < 2) throw std::invalid_argument("train: dim must be >= 2");
  if (config.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
  if (!(config.train_fraction > 0.0 && config.train_fraction <= 1.0)) {
    throw std::invalid_argument("train: train_fraction must be in (0, 1]");
  }
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const ManifoldPoint& p = dataset[i];
    if (p.dim() != config.dim) {
      throw std::invalid_argument("train: dataset dimension mismatch");
    }
    if (!on_manifold(p, 1.0, 1e-6)) {
      throw std::invalid_argument(
          "train: dataset point " + std::to_string(i) +
          " is off the reference hyperboloid (residual " +
          std::to_string(manifold_residual(p, 1.0)) + ")");
    }
  }

  auto t_start = std::chrono::steady_clock::now();

  auto [train_idx, test_idx] =
      train_test_split(dataset.size(), config.train_fraction, config.seed);
  if (test_idx.empty()) test_idx = train_idx;  // degenerate split: eval on train

  // Model.
  bool euclidean = config.flow_kind == LayerKind::euclidean_affine;
  bool warmup_on = !euclidean && config.warmup_epochs > 0;
  double R0 = euclidean ? 1.0 : (warmup_on ? config.warmup_start_R : config.warmup_end_R);
  CounterRng init_rng(config.seed, RngStream::param_init);
  int n_layers = config.use_flow_layers ? config.n_layers : 0;
  FlowStack stack = make_flow_stack(config.flow_kind, config.dim, n_layers,
                                    config.hidden, R0, init_rng, euclidean);
  if (!euclidean) {
    stack.curvature.learnable = config.learnable_curvature;
    if (warmup_on) {
      stack.curvature.warmup = CurvatureState::Warmup{
          config.warmup_start_R, config.warmup_end_R, config.warmup_epochs};
    }
  }

  double log_R = std::log(stack.curvature.R);
  std::vector<double> flat = flatten_params(stack, log_R);
  AdamState adam(AdamConfig{config.learning_rate, 0.9, 0.999, 1e-8});
  adam.reset(flat.size());

  Tape tape;
  CounterRng batch_rng(config.seed, RngStream::batching);
  std::vector<std::vector<double>> train_sp = spatials_of(dataset, train_idx);
  std::vector<std::size_t> order(train_sp.size());

  TrainReport report;
  report.param_count = flat.size();
  report.train_count = static_cast<int>(train_idx.size());
  report.test_count = static_cast<int>(test_idx.size());

  const std::size_t probe_count = std::min<std::size_t>(32, train_sp.size());
  std::span<const std::vector<double>> probe(train_sp.data(), probe_count);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    bool warm = warmup_on && epoch < config.warmup_epochs;
    if (warm) {
      stack.curvature.R = stack.curvature.radius_at_epoch(epoch);
      log_R = std::log(stack.curvature.R);
      flat.back() = log_R;
    }
    bool learn_R_now = !euclidean && config.learnable_curvature && !warm;
    report.epoch_radius.push_back(euclidean ? 1.0 : stack.curvature.R);

    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size() - 1; i > 0; --i) {
      std::size_t j = batch_rng.below(i + 1);
      std::swap(order[i], order[j]);
    }

    std::size_t B = config.batch_size > 0
                        ? std::min<std::size_t>(config.batch_size, train_sp.size())
                        : train_sp.size();
    double loss_sum = 0.0;
    std::size_t counted = 0;
    for (std::size_t at = 0, bi = 0; at < order.size(); at += B, ++bi) {
      std::size_t take = std::min(B, order.size() - at);
      std::vector<std::vector<double>> batch;
      batch.reserve(take);
      for (std::size_t k = 0; k < take; ++k) batch.push_back(train_sp[order[at + k]]);
      try {
        LossGrads lg = stack_loss_gradients(stack, batch, learn_R_now, &tape);
        finite_or_throw(lg.loss, "loss");
        for (std::size_t gi = 0; gi < lg.grads.size(); ++gi) {
          if (!std::isfinite(lg.grads[gi])) {
            throw NumericError("gradient is not finite in block " +
                               locate_block(stack, gi));
          }
        }
        adam.update(flat, lg.grads);
        scatter_params(stack, flat, log_R);
        if (!euclidean) stack.curvature.R = std::exp(log_R);
        loss_sum += lg.loss * static_cast<double>(take);
        counted += take;
      } catch (const NumericError& e) {
        throw NumericError("training aborted at epoch " + std::to_string(epoch) +
                           ", batch " + std::to_string(bi) + ": " + e.what());
      }
    }
    report.epoch_train_nll.push_back(loss_sum / static_cast<double>(counted));

    if (!euclidean) probe_manifold_invariant(stack, probe, epoch);
  }

  report.final_radius = euclidean ? 1.0 : stack.curvature.R;

  std::vector<ManifoldPoint> test_pts;
  test_pts.reserve(test_idx.size());
  for (std::size_t i : test_idx) test_pts.push_back(dataset[i]);
  Target target = make_target(config.target);
  report.eval = evaluate(stack, test_pts, &target, config.eval_samples, config.seed);

  report.wall_clock_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return TrainResult{std::move(stack), std::move(report)};
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> train_test_split(
    std::size_t count, double train_fraction, std::uint64_t seed) {
  std::vector<std::size_t> perm(count);
  for (std::size_t i = 0; i < count; ++i) perm[i] = i;
  CounterRng split_rng(seed, RngStream::split);
  for (std::size_t i = count > 0 ? count - 1 : 0; i > 0; --i) {
    std::size_t j = split_rng.below(i + 1);
    std::swap(perm[i], perm[j]);
  }
  std::size_t n_train = static_cast<std::size_t>(
      std::llround(train_fraction * static_cast<double>(count)));
  n_train = std::min(std::max<std::size_t>(n_train, 1), count);
  return {std::vector<std::size_t>(perm.begin(), perm.begin() + n_train),
          std::vector<std::size_t>(perm.begin() + n_train, perm.end())};
}

EvalMetrics evaluate(const FlowStack& stack, std::span<const ManifoldPoint> test_set,
                     const Target* target, int n_samples, std::uint64_t seed) {
  if (test_set.empty()) throw std::invalid_argument("evaluate: empty test set");
  EvalMetrics m;

  auto mean_se = [](const std::vector<double>& xs) {
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var = xs.size() > 1 ? var / static_cast<double>(xs.size() - 1) : 0.0;
    return std::pair<double, double>(mean,
                                     std::sqrt(var / static_cast<double>(xs.size())));
  };

  std::vector<double> nlls;
  nlls.reserve(test_set.size());
  for (const auto& p : test_set) {
    auto sp = p.spatial();
    nlls.push_back(-stack.data_log_prob(sp));
  }
  std::tie(m.nll, m.nll_se) = mean_se(nlls);

  if (target && target->has_density() && n_samples > 0) {
    std::uint64_t kl_seed = mix64(seed ^ 0xD1CEull);
    std::vector<ManifoldPoint> zs = target->sample(n_samples, kl_seed);
    std::vector<double> diffs;
    diffs.reserve(zs.size());
    for (const auto& z : zs) {
      diffs.push_back(target->log_prob(z) - stack.data_log_prob(z.spatial()));
    }
    std::tie(m.kl, m.kl_se) = mean_se(diffs);
    m.has_kl = true;
  }

  if (n_samples > 0) {
    // Sample-then-score self-consistency: draw from the stack pushed forward
    // from an inflated base, score with the inverse-pass density; the mean
    // importance weight estimates the density's total mass (1 if exact).
    std::uint64_t is_seed = mix64(seed ^ 0x15EEull);
    const double inflate = 1.5;
    std::vector<double> weights;
    weights.reserve(n_samples);
    if (stack.euclidean) {
      CounterRng rng(is_seed, RngStream::eval_importance);
      std::vector<double> q_log_sigma = stack.base.log_sigma;
      for (double& ls : q_log_sigma) ls += std::log(inflate);
      for (int k = 0; k < n_samples; ++k) {
        std::vector<double> z0(stack.dim);
        for (int i = 0; i < stack.dim; ++i) {
          z0[i] = stack.base.mu_tangent[i] +
                  std::exp(q_log_sigma[i]) * rng.normal();
        }
        double logq0 = gaussian_diag_log_prob(z0, stack.base.mu_tangent, q_log_sigma);
        auto [x, ldf] = stack.forward_euclidean(z0);
        double logq = logq0 - ldf;
        double logp = stack.log_prob_euclidean(x);
        weights.push_back(std::exp(logp - logq));
      }
    } else {
      WrappedNormalParams q = stack.base_params();
      for (double& s : q.sigma) s *= inflate;
      std::vector<ManifoldPoint> z0s = sample(q, n_samples, is_seed);
      for (const auto& z0 : z0s) {
        double logq0 = log_prob(q, z0);
        auto [x, ldf] = stack.forward(z0);
        double logq = logq0 - ldf;
        double logp = stack.log_prob(x);
        weights.push_back(std::exp(logp - logq));
      }
    }
    std::tie(m.is_norm, m.is_norm_se) = mean_se(weights);
    double sum = 0.0, sum2 = 0.0;
    for (double w : weights) {
      sum += w;
      sum2 += w * w;
    }
    m.is_ess = sum2 > 0.0 ? (sum * sum) / (sum2 * static_cast<double>(weights.size()))
                          : 0.0;
  }
  return m;
}

}  // namespace hypflow
