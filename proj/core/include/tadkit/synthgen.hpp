#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "tadkit/csv.hpp"
#include "tadkit/dataset.hpp"

namespace tadkit {

// One injected anomaly: an exact additive offset of `magnitude` (negated
// for dropouts) on the listed features over an inclusive row interval.
// Noise is applied before injection, so |value - clean| == magnitude on
// every injected cell.
struct AnomalyInjection {
  int ne = 0;
  std::vector<int> features;
  int start = 0;
  int end = 0;                 // inclusive row index
  std::string kind = "spike";  // spike | level_shift | dropout
  double magnitude = 1.0;
};

// Seeded multi-NE telemetry with daily sinusoidal seasonality, weekend
// damping, per-NE static offsets (exposed as the site_type static
// categorical), and per-cell Gaussian noise. The hour/weekday dynamic
// categoricals that drive the seasonality are emitted alongside the KPIs.
struct SynthSpec {
  int n_nes = 5;
  int T = 500;
  int k = 3;
  int cadence_minutes = 60;
  std::int64_t start_epoch = 1704067200;  // 2024-01-01 00:00 UTC, a Monday
  double noise_sigma = 0.1;
  double weekend_damping = 0.5;
  double static_offset = 2.0;  // site_type levels sit at 0/1/2 x this
  std::uint64_t seed = 1;
  std::vector<AnomalyInjection> anomalies;

  void validate() const;  // ConfigError on bad geometry or overlapping injections
};

SynthSpec synth_spec_from_json_file(const std::string& path);
SynthSpec synth_spec_from_json(const std::string& text, const std::string& origin);
std::string synth_spec_to_json(const SynthSpec& spec);

struct SynthOutput {
  DatasetSchema schema;
  CsvTable data;    // standard ingest layout
  CsvTable labels;  // only label=1 rows
};

SynthOutput generate(const SynthSpec& spec);

// Convenience: generate + ingest through the standard pipeline.
TelemetryDataset generate_dataset(const SynthSpec& spec, bool append_mask_context = true);

nlohmann::json schema_to_json(const DatasetSchema& schema);
DatasetSchema schema_from_json(const nlohmann::json& j, const std::string& origin);
void write_schema_json(const std::string& path, const DatasetSchema& schema);
DatasetSchema read_schema_json(const std::string& path);

}  // namespace tadkit
