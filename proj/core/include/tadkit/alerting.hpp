#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tadkit/calibration.hpp"
#include "tadkit/residuals.hpp"

namespace tadkit {

// Five severity levels per (ne, feature), cut at four ascending validation
// error quantiles: level(e) = 1 + count(edges < e). Constant residuals make
// the edges collapse; such units pin to level 1 (flagged degenerate).
struct PriorityBinning {
  struct UnitBins {
    int ne = 0;
    int feature = 0;
    std::array<double, 4> edges{};
    bool degenerate = false;
    bool pooled_fallback = false;  // no unit validation residuals
  };
  std::vector<double> quantiles;
  std::vector<UnitBins> units;  // sorted by (ne, feature)

  const UnitBins* find(int ne, int feature) const;
  static int level(const UnitBins& bins, double e);
};

PriorityBinning fit_priority_bins(const ResidualFrame& frame, const TelemetryDataset& ds,
                                  const std::vector<double>& quantiles = {0.98, 0.99, 0.995,
                                                                          0.999});

struct MaintenanceWindow {
  std::string group_id;
  std::int64_t start = 0;  // epoch seconds, inclusive
  std::int64_t end = 0;
};

std::vector<MaintenanceWindow> read_maintenance_csv(const std::string& path);

// One (group, timestamp) roll-up: how many (ne, feature) pairs flagged and
// the sum of their severity levels. priority >= count whenever count > 0.
struct AlertRecord {
  std::int64_t timestamp = 0;
  std::string group_id;
  int aggregated_priority = 0;
  int aggregated_count = 0;
  bool in_maintenance = false;
};

// Emits one record per (group, timestamp) the decisions cover, flags or
// not. ne_group maps ne_id -> group id and must cover every scored NE.
std::vector<AlertRecord> aggregate_alerts(const DecisionFrame& decisions,
                                          const PriorityBinning& bins,
                                          const std::map<std::string, std::string>& ne_group,
                                          const std::vector<MaintenanceWindow>& maintenance,
                                          const TelemetryDataset& ds);

void write_alerts_csv(const std::string& path, const std::vector<AlertRecord>& records);
// One JSON series per group for external plotting.
void write_alerts_json(const std::string& path, const std::vector<AlertRecord>& records);

}  // namespace tadkit
