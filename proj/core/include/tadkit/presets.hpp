#pragma once

#include <string>
#include <vector>

#include "tadkit/model.hpp"

namespace tadkit {

// Per-domain training geometry, tuned architecture, and calibration knob.
// The synth preset is a small configuration sized for generated data.
struct Preset {
  std::string name;
  int L = 0, H = 0, S = 0;
  int batch_size = 0;
  int max_epochs = 0;
  double gamma = 1.0;  // reconstruction weight in the total loss
  double learning_rate = 1e-3;
  double p = 0.99;  // calibration tail probability
  ModelConfig arch;  // geometry fields L/H mirrored into the model config
};

const std::vector<std::string>& preset_names();
Preset preset_by_name(const std::string& name);  // ConfigError on unknown name

}  // namespace tadkit
