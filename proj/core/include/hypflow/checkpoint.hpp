#pragma once

// JSON model checkpoints and training reports.
//
// A checkpoint stores the full training configuration (in the same text
// format the CLI accepts, so one parser owns the key set) plus every
// trainable parameter of the stack.  Doubles are serialized with the
// shortest round-trip representation, so save -> load reproduces the model
// bit for bit.

#include <stdexcept>
#include <string>

#include "hypflow/flows.hpp"
#include "hypflow/training.hpp"

namespace hypflow {

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// File is recognizably a checkpoint but written by an incompatible version
// (or is not a checkpoint at all).
struct VersionError : CheckpointError {
  using CheckpointError::CheckpointError;
};

inline constexpr const char* kCheckpointFormat = "hypflow-checkpoint";
inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  TrainConfig config;
  FlowStack stack;
};

void save_checkpoint(const std::string& path, const FlowStack& stack,
                     const TrainConfig& config);
Checkpoint load_checkpoint(const std::string& path);

// Training report JSON: metrics, epoch NLL curve, parameter counts.  The
// wall-clock time is the only machine-dependent field and sits under its own
// key ("wall_clock_sec") so reproducibility checks can ignore it.
void save_report(const std::string& path, const TrainConfig& config,
                 const TrainReport& report);

}  // namespace hypflow
