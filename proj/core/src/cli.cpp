#include "hypflow/cli.hpp"

#include <cmath>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hypflow/checkpoint.hpp"
#include "hypflow/config.hpp"
#include "hypflow/csv.hpp"
#include "hypflow/training.hpp"

namespace hypflow {

namespace {

template <class F>
int run_guarded(F&& body) {
  try {
    body();
    return kExitOk;
  } catch (const VersionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitVersion;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

std::string with_suffix(const std::string& path, const std::string& ext,
                        const std::string& suffix) {
  if (path.size() > ext.size() &&
      path.compare(path.size() - ext.size(), ext.size(), ext) == 0) {
    return path.substr(0, path.size() - ext.size()) + suffix;
  }
  return path + suffix;
}

void print_metrics(std::ostream& out, const EvalMetrics& m) {
  out << "nll = " << fmt17(m.nll) << "\n";
  out << "nll_se = " << fmt17(m.nll_se) << "\n";
  if (m.has_kl) {
    out << "kl = " << fmt17(m.kl) << "\n";
    out << "kl_se = " << fmt17(m.kl_se) << "\n";
  }
  out << "importance_norm = " << fmt17(m.is_norm) << "\n";
  out << "importance_norm_se = " << fmt17(m.is_norm_se) << "\n";
  out << "importance_ess = " << fmt17(m.is_ess) << "\n";
}

// Model samples mapped to the data space: spatial coordinates under the
// reference-sheet identification (hyperbolic samples drop their lifted time
// coordinate, Euclidean samples pass through).
std::vector<std::vector<double>> sample_data_space(const FlowStack& stack, int count,
                                                   std::uint64_t seed) {
  if (stack.euclidean) return stack.sample_euclidean(count, seed);
  std::vector<std::vector<double>> out;
  out.reserve(count);
  for (const ManifoldPoint& z : stack.sample(count, seed)) {
    auto sp = z.spatial();
    out.emplace_back(sp.begin(), sp.end());
  }
  return out;
}

}  // namespace

int cmd_train(const TrainArgs& args) {
  return run_guarded([&] {
    TrainConfig config = parse_train_config_file(args.config_path);
    TrainResult result = train(config);

    std::string report_path = args.report_path.empty()
                                  ? with_suffix(args.out_path, ".json", ".report.json")
                                  : args.report_path;
    save_checkpoint(args.out_path, result.stack, config);
    save_report(report_path, config, result.report);

    if (!args.quiet) {
      const TrainReport& r = result.report;
      std::cout << "trained " << (config.use_flow_layers ? config.n_layers : 0)
                << " " << (config.use_flow_layers ? to_string(config.flow_kind) : "(none)")
                << " layer(s), " << r.param_count << " parameters, " << r.train_count
                << " train / " << r.test_count << " test points\n";
      std::cout << "epoch nll: first = " << fmt17(r.epoch_train_nll.front())
                << ", last = " << fmt17(r.epoch_train_nll.back()) << "\n";
      std::cout << "final_radius = " << fmt17(r.final_radius) << "\n";
      print_metrics(std::cout, r.eval);
      std::cout << "wrote checkpoint: " << args.out_path << "\n";
      std::cout << "wrote report: " << report_path << "\n";
      std::cout << "wall_clock_sec = " << r.wall_clock_sec << "\n";
    }
  });
}

int cmd_eval(const EvalArgs& args) {
  return run_guarded([&] {
    Checkpoint ckpt = load_checkpoint(args.checkpoint_path);
    const TrainConfig& config = ckpt.config;

    std::vector<ManifoldPoint> points;
    if (!args.data_path.empty()) {
      CsvTable table = read_csv(args.data_path);
      const int dim = ckpt.stack.dim;
      for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        if (static_cast<int>(row.size()) == dim + 1) {
          ManifoldPoint p{row};
          validate_on_manifold(p, 1.0, 1e-6);
          points.push_back(std::move(p));
        } else if (static_cast<int>(row.size()) == dim) {
          points.push_back(lift_to_hyperboloid(row, 1.0));
        } else {
          throw std::runtime_error(args.data_path + ": row " + std::to_string(r + 1) +
                                   " has " + std::to_string(row.size()) +
                                   " columns; expected " + std::to_string(dim) +
                                   " (spatial) or " + std::to_string(dim + 1) +
                                   " (ambient)");
        }
      }
      if (points.empty()) throw std::runtime_error(args.data_path + ": empty dataset");
    } else {
      std::vector<ManifoldPoint> dataset =
          sample_dataset(config.target, config.dataset_count, config.seed);
      auto [train_idx, test_idx] =
          train_test_split(dataset.size(), config.train_fraction, config.seed);
      if (test_idx.empty()) test_idx = train_idx;
      points.reserve(test_idx.size());
      for (std::size_t i : test_idx) points.push_back(dataset[i]);
    }

    Target target = make_target(config.target);
    int n_samples = args.count.value_or(config.eval_samples);
    std::uint64_t seed = args.seed.value_or(config.seed);
    EvalMetrics m = evaluate(ckpt.stack, points, &target, n_samples, seed);

    print_metrics(std::cout, m);
    if (!args.out_path.empty()) {
      nlohmann::json j{{"format", "hypflow-metrics"},
                       {"version", kCheckpointVersion},
                       {"test_count", points.size()},
                       {"eval_samples", n_samples},
                       {"seed", seed},
                       {"nll", m.nll},
                       {"nll_se", m.nll_se},
                       {"importance_norm", m.is_norm},
                       {"importance_norm_se", m.is_norm_se},
                       {"importance_ess", m.is_ess}};
      if (m.has_kl) {
        j["kl"] = m.kl;
        j["kl_se"] = m.kl_se;
      }
      write_file_atomic(args.out_path, j.dump(2) + "\n");
    }
  });
}

int cmd_sample(const SampleArgs& args) {
  return run_guarded([&] {
    Checkpoint ckpt = load_checkpoint(args.checkpoint_path);
    const FlowStack& stack = ckpt.stack;
    std::uint64_t seed = args.seed.value_or(ckpt.config.seed);

    CsvTable table;
    table.comments.push_back("hypflow samples");
    table.comments.push_back("count = " + std::to_string(args.count));
    table.comments.push_back("seed = " + std::to_string(seed));
    if (stack.euclidean) {
      table.comments.push_back("space = euclidean");
      for (int i = 1; i <= stack.dim; ++i) table.header.push_back("x" + std::to_string(i));
      table.rows = stack.sample_euclidean(args.count, seed);
    } else {
      table.comments.push_back("space = hyperboloid");
      table.comments.push_back("radius = " + fmt17(stack.curvature.R));
      for (int i = 0; i <= stack.dim; ++i) table.header.push_back("x" + std::to_string(i));
      for (const ManifoldPoint& z : stack.sample(args.count, seed)) {
        table.rows.push_back(z.x);
      }
    }
    write_csv(args.out_path, table);
  });
}

int cmd_export_poincare(const ExportPoincareArgs& args) {
  return run_guarded([&] {
    Checkpoint ckpt = load_checkpoint(args.checkpoint_path);
    const FlowStack& stack = ckpt.stack;
    if (stack.dim != 2) {
      throw std::runtime_error("export-poincare requires a 2-D model (dim = " +
                               std::to_string(stack.dim) + ")");
    }
    const int N = args.grid;
    const double extent = 0.999;  // stay inside the open unit disk
    const double cell = 2.0 * extent / static_cast<double>(N);

    CsvTable grid;
    grid.comments.push_back("hypflow poincare density grid");
    grid.comments.push_back("model_radius = " + fmt17(stack.curvature.R));
    grid.comments.push_back("grid = " + std::to_string(N) + " x " + std::to_string(N) +
                            " cell centers on [-" + fmt17(extent) + ", " + fmt17(extent) +
                            "]^2, cells outside the unit disk omitted");
    grid.comments.push_back("cell = " + fmt17(cell));
    grid.comments.push_back(
        "log_density is w.r.t. Lebesgue area dp1 dp2 on the unit Poincare disk");
    grid.comments.push_back(
        "(the K = -1 projection of the data space): manifold density plus the");
    grid.comments.push_back(
        "conformal factor 2*log(2/(1-|p|^2)); sum(exp(log_density))*cell^2 ~= 1");
    grid.header = {"p1", "p2", "log_density"};
    for (int i = 0; i < N; ++i) {
      double p1 = -extent + (static_cast<double>(i) + 0.5) * cell;
      for (int j = 0; j < N; ++j) {
        double p2 = -extent + (static_cast<double>(j) + 0.5) * cell;
        double r2 = p1 * p1 + p2 * p2;
        if (r2 >= extent * extent) continue;
        ManifoldPoint x = from_poincare(std::vector<double>{p1, p2}, 1.0);
        auto sp = x.spatial();
        double lp = stack.data_log_prob(sp);
        double log_density = lp + 2.0 * std::log(2.0 / (1.0 - r2));
        grid.rows.push_back({p1, p2, log_density});
      }
    }
    write_csv(args.out_path, grid);

    std::uint64_t seed = args.seed.value_or(ckpt.config.seed);
    CsvTable samples;
    samples.comments.push_back("hypflow poincare sample overlay");
    samples.comments.push_back("count = " + std::to_string(args.count));
    samples.comments.push_back("seed = " + std::to_string(seed));
    samples.header = {"p1", "p2"};
    for (const auto& sp : sample_data_space(stack, args.count, seed)) {
      std::vector<double> p = to_poincare(lift_to_hyperboloid(sp, 1.0), 1.0);
      samples.rows.push_back(p);
    }
    write_csv(with_suffix(args.out_path, ".csv", "_samples.csv"), samples);
  });
}

int run_cli(int argc, char** argv) {
  CLI::App app{"normalizing flows on the Lorentz model of hyperbolic space"};
  app.require_subcommand(1);

  TrainArgs targs;
  auto* t = app.add_subcommand("train", "fit a flow to a synthetic target density");
  t->add_option("--config", targs.config_path, "key=value config file")
      ->required();
  t->add_option("--out", targs.out_path, "checkpoint output path (JSON)")->required();
  t->add_option("--report", targs.report_path,
                "report output path (default: <out>.report.json)");
  t->add_flag("--quiet", targs.quiet, "suppress the summary printout");

  EvalArgs eargs;
  auto* e = app.add_subcommand("eval", "evaluate a checkpoint (NLL, KL, diagnostics)");
  e->add_option("--checkpoint", eargs.checkpoint_path, "checkpoint path")->required();
  e->add_option("--data", eargs.data_path,
                "points CSV (spatial or ambient columns); default: the config's "
                "regenerated test split");
  e->add_option("--out", eargs.out_path, "metrics JSON output path");
  e->add_option("--count", eargs.count, "evaluation sample count (KL/importance)")
      ->check(CLI::NonNegativeNumber);
  e->add_option("--seed", eargs.seed, "evaluation seed (default: training seed)");

  SampleArgs sargs;
  auto* s = app.add_subcommand("sample", "draw model samples to CSV");
  s->add_option("--checkpoint", sargs.checkpoint_path, "checkpoint path")->required();
  s->add_option("--out", sargs.out_path, "samples CSV path")->required();
  s->add_option("--count", sargs.count, "number of samples")
      ->check(CLI::PositiveNumber);
  s->add_option("--seed", sargs.seed, "sampling seed (default: training seed)");

  ExportPoincareArgs xargs;
  auto* x = app.add_subcommand(
      "export-poincare", "export a Poincare-disk density grid and sample overlay");
  x->add_option("--checkpoint", xargs.checkpoint_path, "checkpoint path")->required();
  x->add_option("--out", xargs.out_path, "grid CSV path (samples CSV derived)")
      ->required();
  x->add_option("--grid", xargs.grid, "grid resolution per axis")
      ->check(CLI::Range(2, 4096));
  x->add_option("--count", xargs.count, "overlay sample count")
      ->check(CLI::PositiveNumber);
  x->add_option("--seed", xargs.seed, "overlay sampling seed (default: training seed)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    int rc = app.exit(err);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  if (t->parsed()) return cmd_train(targs);
  if (e->parsed()) return cmd_eval(eargs);
  if (s->parsed()) return cmd_sample(sargs);
  if (x->parsed()) return cmd_export_poincare(xargs);
  return kExitUsage;  // unreachable: require_subcommand(1)
}

}  // namespace hypflow
