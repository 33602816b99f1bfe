#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "tadkit/alerting.hpp"
#include "tadkit/calibration.hpp"
#include "tadkit/dataset.hpp"
#include "tadkit/pipeline.hpp"
#include "tadkit/presets.hpp"

namespace tadkit {

// Resolved run configuration: preset values overlaid with explicit config
// entries (overrides win), plus dataset wiring. The original file text is
// kept so output directories can carry both the verbatim input and the
// resolved snapshot.
struct RunConfig {
  // data
  std::string data_csv;
  std::string labels_csv;  // optional
  std::string splits_csv;  // optional; fractional split otherwise
  DatasetSchema schema;
  bool append_mask_context = true;
  double test_frac = 0.2;
  double val_frac = 0.2;
  double max_missing_frac = 0.5;

  // training
  std::string preset_name = "synth";
  int L = 0, H = 0, S = 0;
  int batch_size = 0;
  int max_epochs = 0;
  int patience = 10;
  double gamma = 1.0;
  double learning_rate = 1e-3;
  ModelConfig arch;  // dataset-derived vocab fields are filled at train time

  CalibrationConfig calibration;

  // scoring
  int score_stride = 1;  // full coverage; training stride S is not reused here
  int score_batch = 64;

  // evaluation
  Split eval_split = Split::kTest;
  bool random_baseline = true;

  // alerting
  std::string group_by;  // static categorical column; empty = one group per NE
  std::string maintenance_csv;

  std::uint64_t seed = 1;
  std::string out_dir = "out";

  std::string raw_text;  // verbatim config file contents

  void validate() const;
};

RunConfig load_run_config(const std::string& path);
RunConfig run_config_from_json(const nlohmann::json& j, const std::string& origin);

// The effective configuration after preset resolution and overrides.
nlohmann::json resolved_json(const RunConfig& cfg);

// Writes config.input.json (verbatim) and config.resolved.json into dir.
void snapshot_config(const RunConfig& cfg, const std::string& dir);

// Loads the dataset named by the config and derives splits (file or
// fractions), dropping ineligible NEs.
struct LoadedData {
  TelemetryDataset ds;
  SplitTable splits;
  std::vector<RemovalRecord> removed;
};
LoadedData load_data(const RunConfig& cfg);

// Fills the dataset-derived model config fields (k, vocab sizes, static
// width) from fitted scalers.
ModelConfig finalize_model_config(const RunConfig& cfg, const TelemetryDataset& ds,
                                  const Scalers& sc);

// Scaler persistence so later stages reuse the train-time fit.
void write_scalers_json(const std::string& path, const Scalers& sc);
Scalers read_scalers_json(const std::string& path);

// ne_id -> alert group under the config's group_by column.
std::map<std::string, std::string> group_map(const RunConfig& cfg, const TelemetryDataset& ds);

}  // namespace tadkit
