#pragma once

// Maximum-likelihood training of flow stacks.
//
// Data points live on the reference (K = -1) hyperboloid and are identified
// by their spatial coordinates; the objective is the mean negative log
// density under FlowStack::data_log_prob, so runs with different (possibly
// learned) curvatures and Euclidean baselines optimize and report comparable
// quantities.

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "hypflow/flows.hpp"
#include "hypflow/targets.hpp"

namespace hypflow {

struct TrainConfig {
  TargetSpec target;

  // Model.
  LayerKind flow_kind = LayerKind::tangent;
  bool use_flow_layers = true;  // false = base distribution only
  int dim = 2;
  int n_layers = 2;
  int hidden = 128;

  // Optimization.
  int epochs = 80;
  int batch_size = 0;  // 0 = full batch
  double learning_rate = 1e-3;
  std::uint64_t seed = 1;

  // Curvature schedule: R decreases linearly from warmup_start_R to
  // warmup_end_R over the first warmup_epochs epochs, then (optionally)
  // becomes a learnable parameter (in log space).
  int warmup_epochs = 10;
  double warmup_start_R = 11.0;
  double warmup_end_R = 2.0;
  bool learnable_curvature = true;

  // Data and evaluation.
  int dataset_count = 500;
  double train_fraction = 0.8;
  int eval_samples = 500;
};

struct EvalMetrics {
  double nll = 0.0;
  double nll_se = 0.0;
  bool has_kl = false;
  double kl = 0.0;
  double kl_se = 0.0;
  // Sample-then-score importance diagnostic: mean self-weight (should be ~1)
  // and effective-sample-size fraction.
  double is_norm = 0.0;
  double is_norm_se = 0.0;
  double is_ess = 0.0;
};

struct TrainReport {
  std::vector<double> epoch_train_nll;  // mean NLL over each epoch's batches
  std::vector<double> epoch_radius;     // R in effect at each epoch's start
  double final_radius = 1.0;
  std::size_t param_count = 0;
  int train_count = 0;
  int test_count = 0;
  EvalMetrics eval;
  double wall_clock_sec = 0.0;  // informational; excluded from reproducibility
};

struct TrainResult {
  FlowStack stack;
  TrainReport report;
};

// Samples the dataset from config.target, splits, trains, evaluates.
TrainResult train(const TrainConfig& config);
// Same but with an externally supplied dataset (points on the K = -1 sheet).
TrainResult train(const TrainConfig& config, const std::vector<ManifoldPoint>& dataset);

EvalMetrics evaluate(const FlowStack& stack, std::span<const ManifoldPoint> test_set,
                     const Target* target, int n_samples, std::uint64_t seed);

// The deterministic shuffled split train() applies to its dataset: a seeded
// permutation of [0, count) cut at round(train_fraction * count) (clamped to
// [1, count]).  Returns (train indices, test indices).
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> train_test_split(
    std::size_t count, double train_fraction, std::uint64_t seed);

// --- Gradient machinery (exposed for tests) --------------------------------

// Flat parameter vector: all stack blocks in collect_param_blocks() order,
// then log(R) as the last entry.
std::vector<double> flatten_params(const FlowStack& stack, double log_R);
void scatter_params(FlowStack& stack, std::span<const double> flat, double& log_R);

struct LossGrads {
  double loss = 0.0;
  std::vector<double> grads;  // aligned with flatten_params
};

// Mean NLL of the batch (spatial coordinates per point) and its gradient
// w.r.t. all parameters.  When learn_curvature is false the log(R) slot of
// the gradient is forced to zero.  `workspace` optionally reuses a tape.
LossGrads stack_loss_gradients(const FlowStack& stack,
                               std::span<const std::vector<double>> batch,
                               bool learn_curvature, Tape* workspace = nullptr);

// Plain-double batch NLL (same reduction order as the tape version).
double stack_batch_nll(const FlowStack& stack,
                       std::span<const std::vector<double>> batch);

}  // namespace hypflow
