#pragma once

// Command-line surface: train / eval / sample / export-poincare.
//
// Exit-code contract (frozen for scripting):
//   0  success
//   2  usage, config, or data errors
//   3  numeric abort during training or evaluation
//   4  checkpoint version mismatch

#include <cstdint>
#include <optional>
#include <string>

namespace hypflow {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumeric = 3;
inline constexpr int kExitVersion = 4;

struct TrainArgs {
  std::string config_path;
  std::string out_path;
  std::string report_path;  // empty = derive from out_path
  bool quiet = false;
};

struct EvalArgs {
  std::string checkpoint_path;
  std::string data_path;  // empty = regenerate the config's test split
  std::string out_path;   // optional metrics JSON
  std::optional<int> count;
  std::optional<std::uint64_t> seed;
};

struct SampleArgs {
  std::string checkpoint_path;
  std::string out_path;
  int count = 500;
  std::optional<std::uint64_t> seed;
};

struct ExportPoincareArgs {
  std::string checkpoint_path;
  std::string out_path;
  int grid = 200;
  int count = 500;  // overlay sample count
  std::optional<std::uint64_t> seed;
};

int cmd_train(const TrainArgs& args);
int cmd_eval(const EvalArgs& args);
int cmd_sample(const SampleArgs& args);
int cmd_export_poincare(const ExportPoincareArgs& args);

int run_cli(int argc, char** argv);

}  // namespace hypflow
