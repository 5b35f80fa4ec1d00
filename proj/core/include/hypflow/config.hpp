#pragma once

// Plain-text training configuration: one key=value per line, '#' comments,
// optional [section] headers (organizational only, keys are flat).  Unknown
// keys and malformed values are hard errors with line diagnostics.

#include <stdexcept>
#include <string>

#include "hypflow/training.hpp"

namespace hypflow {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

TrainConfig parse_train_config_text(const std::string& text);
TrainConfig parse_train_config_file(const std::string& path);

// Canonical textual form (all keys, current values); parseable back.
std::string format_train_config(const TrainConfig& config);

}  // namespace hypflow
