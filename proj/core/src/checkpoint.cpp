#include "hypflow/checkpoint.hpp"

#include <fstream>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "hypflow/config.hpp"
#include "hypflow/csv.hpp"

namespace hypflow {

using nlohmann::json;

namespace {

json mlp_to_json(const Mlp& net) {
  return json{{"dims", net.dims}, {"params", net.params}};
}

Mlp mlp_from_json(const json& j) {
  Mlp net;
  net.dims = j.at("dims").get<std::vector<int>>();
  net.params = j.at("params").get<std::vector<double>>();
  if (net.dims.size() < 2) throw CheckpointError("mlp: need at least two dims");
  std::size_t expect = 0;
  for (std::size_t l = 0; l + 1 < net.dims.size(); ++l) {
    expect += static_cast<std::size_t>(net.dims[l + 1]) * net.dims[l] + net.dims[l + 1];
  }
  if (net.params.size() != expect) {
    throw CheckpointError("mlp: parameter count " + std::to_string(net.params.size()) +
                          " does not match dims (expected " + std::to_string(expect) + ")");
  }
  return net;
}

json stack_to_json(const FlowStack& stack) {
  json layers = json::array();
  for (const CouplingLayer& layer : stack.layers) {
    std::vector<int> mask_bits(layer.mask.bits.begin(), layer.mask.bits.end());
    layers.push_back(json{{"kind", to_string(layer.kind)},
                          {"mask", mask_bits},
                          {"clamp_maps", layer.clamp_maps},
                          {"scale_net", mlp_to_json(layer.scale_net)},
                          {"shift_net", mlp_to_json(layer.shift_net)}});
  }
  return json{{"dim", stack.dim},
              {"euclidean", stack.euclidean},
              {"curvature",
               json{{"radius", stack.curvature.R},
                    {"learnable", stack.curvature.learnable}}},
              {"layers", std::move(layers)},
              {"base", json{{"mu_tangent", stack.base.mu_tangent},
                            {"log_sigma", stack.base.log_sigma}}}};
}

FlowStack stack_from_json(const json& j) {
  FlowStack stack;
  stack.dim = j.at("dim").get<int>();
  if (stack.dim < 1) throw CheckpointError("model: dim must be >= 1");
  stack.euclidean = j.at("euclidean").get<bool>();
  const json& curv = j.at("curvature");
  stack.curvature.R = curv.at("radius").get<double>();
  stack.curvature.learnable = curv.at("learnable").get<bool>();
  if (!(stack.curvature.R > 0.0)) throw CheckpointError("model: radius must be > 0");

  for (const json& jl : j.at("layers")) {
    CouplingLayer layer;
    layer.kind = layer_kind_from_string(jl.at("kind").get<std::string>());
    std::vector<int> bits = jl.at("mask").get<std::vector<int>>();
    if (static_cast<int>(bits.size()) != stack.dim + 1 || bits.empty() || bits[0] != 1) {
      throw CheckpointError("model: bad mask (need dim+1 bits, time bit set)");
    }
    layer.mask.bits.assign(bits.begin(), bits.end());
    layer.clamp_maps = jl.at("clamp_maps").get<bool>();
    layer.scale_net = mlp_from_json(jl.at("scale_net"));
    layer.shift_net = mlp_from_json(jl.at("shift_net"));
    const int n_cond = static_cast<int>(layer.mask.cond_spatial().size());
    const int n_act = static_cast<int>(layer.mask.active_spatial().size());
    if (layer.scale_net.in_dim() != n_cond || layer.scale_net.out_dim() != n_act ||
        layer.shift_net.in_dim() != n_cond || layer.shift_net.out_dim() != n_act) {
      throw CheckpointError("model: conditioner net shape does not match mask");
    }
    stack.layers.push_back(std::move(layer));
  }

  const json& base = j.at("base");
  stack.base.mu_tangent = base.at("mu_tangent").get<std::vector<double>>();
  stack.base.log_sigma = base.at("log_sigma").get<std::vector<double>>();
  if (static_cast<int>(stack.base.mu_tangent.size()) != stack.dim ||
      static_cast<int>(stack.base.log_sigma.size()) != stack.dim) {
    throw CheckpointError("model: base parameter length does not match dim");
  }
  return stack;
}

json load_json_file(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw CheckpointError(std::string("cannot open ") + what + ": " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw CheckpointError(std::string(what) + " " + path + ": " + e.what());
  }
  return j;
}

void check_header(const json& j, const std::string& path) {
  if (!j.is_object() || !j.contains("format") || !j.at("format").is_string() ||
      j.at("format").get<std::string>() != kCheckpointFormat) {
    throw VersionError("not a " + std::string(kCheckpointFormat) + " file: " + path);
  }
  int version = j.contains("version") && j.at("version").is_number_integer()
                    ? j.at("version").get<int>()
                    : -1;
  if (version != kCheckpointVersion) {
    throw VersionError("unsupported checkpoint version " + std::to_string(version) +
                       " (this build reads version " +
                       std::to_string(kCheckpointVersion) + "): " + path);
  }
}

}  // namespace

void save_checkpoint(const std::string& path, const FlowStack& stack,
                     const TrainConfig& config) {
  json j{{"format", kCheckpointFormat},
         {"version", kCheckpointVersion},
         {"config", format_train_config(config)},
         {"model", stack_to_json(stack)}};
  write_file_atomic(path, j.dump(2) + "\n");
}

Checkpoint load_checkpoint(const std::string& path) {
  json j = load_json_file(path, "checkpoint");
  check_header(j, path);
  Checkpoint ckpt;
  try {
    ckpt.config = parse_train_config_text(j.at("config").get<std::string>());
    ckpt.stack = stack_from_json(j.at("model"));
  } catch (const json::exception& e) {
    throw CheckpointError("checkpoint " + path + ": " + e.what());
  } catch (const ConfigError& e) {
    throw CheckpointError("checkpoint " + path + ": embedded config: " + e.what());
  } catch (const std::invalid_argument& e) {
    throw CheckpointError("checkpoint " + path + ": " + e.what());
  }
  return ckpt;
}

void save_report(const std::string& path, const TrainConfig& config,
                 const TrainReport& report) {
  json metrics{{"nll", report.eval.nll}, {"nll_se", report.eval.nll_se}};
  if (report.eval.has_kl) {
    metrics["kl"] = report.eval.kl;
    metrics["kl_se"] = report.eval.kl_se;
  }
  metrics["importance_norm"] = report.eval.is_norm;
  metrics["importance_norm_se"] = report.eval.is_norm_se;
  metrics["importance_ess"] = report.eval.is_ess;

  json j{{"format", "hypflow-report"},
         {"version", kCheckpointVersion},
         {"config", format_train_config(config)},
         {"param_count", report.param_count},
         {"train_count", report.train_count},
         {"test_count", report.test_count},
         {"final_radius", report.final_radius},
         {"epoch_train_nll", report.epoch_train_nll},
         {"epoch_radius", report.epoch_radius},
         {"metrics", std::move(metrics)},
         {"wall_clock_sec", report.wall_clock_sec}};
  write_file_atomic(path, j.dump(2) + "\n");
}

}  // namespace hypflow
