#include "tadkit/presets.hpp"

#include "tadkit/errors.hpp"

namespace tadkit {

namespace {

Preset make_ran() {
  Preset p;
  p.name = "ran";
  p.L = 24;
  p.H = 7;
  p.S = 17;
  p.batch_size = 100;
  p.max_epochs = 30;
  p.gamma = 1.0;
  p.learning_rate = 2.487e-4;
  p.p = 0.99;  // hourly cadence
  p.arch.kernel_size = 4;
  p.arch.use_gatv2 = true;
  p.arch.gru_layers = 1;
  p.arch.gru_hidden = 580;
  p.arch.forecast_layers = 3;
  p.arch.forecast_hidden = 400;
  p.arch.recon_layers = 1;
  p.arch.recon_hidden = 400;
  p.arch.dropout = 0.07;
  return p;
}

Preset make_epc() {
  Preset p;
  p.name = "epc";
  p.L = 101;
  p.H = 53;
  p.S = 89;
  p.batch_size = 30;
  p.max_epochs = 200;
  p.gamma = 1.0;
  p.learning_rate = 2.488e-4;
  p.p = 0.999;  // 5-minute cadence
  p.arch.kernel_size = 4;
  p.arch.use_gatv2 = true;
  p.arch.gru_layers = 1;
  p.arch.gru_hidden = 780;
  p.arch.forecast_layers = 1;
  p.arch.forecast_hidden = 350;
  p.arch.recon_layers = 5;
  p.arch.recon_hidden = 800;
  p.arch.dropout = 0.10;
  return p;
}

Preset make_telco() {
  Preset p;
  p.name = "telco";
  p.L = 577;
  p.H = 257;
  p.S = 31;
  p.batch_size = 30;
  p.max_epochs = 150;
  p.gamma = 1.0;
  p.learning_rate = 1.728e-4;
  p.p = 0.999;  // 5-minute cadence
  p.arch.kernel_size = 18;
  p.arch.use_gatv2 = true;
  p.arch.gru_layers = 1;
  p.arch.gru_hidden = 820;
  p.arch.forecast_layers = 4;
  p.arch.forecast_hidden = 150;
  p.arch.recon_layers = 1;
  p.arch.recon_hidden = 150;
  p.arch.dropout = 0.04;
  return p;
}

// Desk-scale defaults for generated hourly data.
Preset make_synth() {
  Preset p;
  p.name = "synth";
  p.L = 24;
  p.H = 7;
  p.S = 4;
  p.batch_size = 64;
  p.max_epochs = 15;
  p.gamma = 1.0;
  p.learning_rate = 1e-3;
  p.p = 0.99;
  p.arch.kernel_size = 4;
  p.arch.use_gatv2 = true;
  p.arch.gru_layers = 1;
  p.arch.gru_hidden = 48;
  p.arch.forecast_layers = 1;
  p.arch.forecast_hidden = 48;
  p.arch.recon_layers = 1;
  p.arch.recon_hidden = 48;
  p.arch.dropout = 0.05;
  return p;
}

}  // namespace

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {"ran", "epc", "telco", "synth"};
  return names;
}

Preset preset_by_name(const std::string& name) {
  Preset p;
  if (name == "ran") p = make_ran();
  else if (name == "epc") p = make_epc();
  else if (name == "telco") p = make_telco();
  else if (name == "synth") p = make_synth();
  else throw ConfigError("unknown preset '" + name + "'");
  p.arch.L = p.L;
  p.arch.H = p.H;
  return p;
}

}  // namespace tadkit
