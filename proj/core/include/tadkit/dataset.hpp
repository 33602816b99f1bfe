#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tadkit/csv.hpp"

namespace tadkit {

// Column roles of a telemetry CSV. dynamic_real columns are the KPIs the
// model forecasts/reconstructs; categorical and static columns feed the
// context conditioning path.
struct DatasetSchema {
  std::string ne_col = "ne_id";
  std::string ts_col = "timestamp";
  std::vector<std::string> dynamic_real;
  std::vector<std::string> dynamic_cat;
  std::vector<std::string> static_cat;
  std::vector<std::string> static_real;
  int cadence_minutes = 60;
};

// One network element on a regular timeline. Gaps in the source data are
// materialized as rows with mask=1 and zero-filled values; after scaling,
// masked cells are re-zeroed so the fill value is exactly 0 in model space.
struct NESeries {
  std::string ne_id;
  std::vector<std::int64_t> timestamps;  // epoch seconds, fixed cadence

  std::vector<double> x;            // T*k row-major KPI values
  std::vector<std::uint8_t> mask;   // T*k, 1 where the raw cell was absent

  std::vector<std::string> dyn_cat_raw;  // T*d_dyn, "" = missing
  std::vector<int> dyn_cat;              // codes, populated by apply_scalers

  std::vector<std::string> static_cat_raw;  // d_stat
  std::vector<int> static_cat;              // codes
  std::vector<double> static_real;          // d_real, scaled in place

  int T() const { return static_cast<int>(timestamps.size()); }
};

struct TelemetryDataset {
  DatasetSchema schema;  // effective schema; includes appended mask columns
  std::vector<NESeries> nes;

  int k() const { return static_cast<int>(schema.dynamic_real.size()); }
  int d_dyn() const { return static_cast<int>(schema.dynamic_cat.size()); }
  int d_static_cat() const { return static_cast<int>(schema.static_cat.size()); }
  int d_static_real() const { return static_cast<int>(schema.static_real.size()); }

  int ne_index(const std::string& ne_id) const;  // -1 if absent
};

// Timestamps: integer epoch seconds or ISO-8601 ("YYYY-MM-DD HH:MM:SS",
// "YYYY-MM-DDTHH:MM:SS", optional trailing "Z"), always UTC.
std::int64_t parse_timestamp(const std::string& s, const std::string& context);
std::string format_timestamp_iso(std::int64_t epoch_seconds);
int hour_of_day(std::int64_t epoch_seconds);
int day_of_week(std::int64_t epoch_seconds);  // 0 = Monday ... 6 = Sunday

// Builds the per-NE regular timelines from a parsed CSV. Rows of one NE
// must appear in strictly increasing timestamp order and land exactly on
// the cadence grid. When append_mask_context is set, one dynamic
// categorical column "<kpi>__missing" per KPI is appended to the schema
// and filled from the missingness mask.
TelemetryDataset ingest_csv(const CsvTable& table, const DatasetSchema& schema,
                            bool append_mask_context);
TelemetryDataset ingest_csv_file(const std::string& path, const DatasetSchema& schema,
                                 bool append_mask_context);

// Sparse anomaly labels keyed by (ne, feature, timestamp).
struct LabelKey {
  int ne = 0;
  int feature = 0;
  std::int64_t ts = 0;
  auto operator<=>(const LabelKey&) const = default;
};

// Reads a label CSV (ne_id, feature, timestamp, label in {0,1}) against a
// dataset; returns the keys with label 1. Unknown NEs/features are data
// errors.
std::vector<LabelKey> read_labels(const CsvTable& table, const TelemetryDataset& ds);
std::vector<LabelKey> read_labels_file(const std::string& path, const TelemetryDataset& ds);

}  // namespace tadkit
