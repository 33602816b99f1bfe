#pragma once

#include <string>
#include <vector>

#include "tadkit/model.hpp"
#include "tadkit/pipeline.hpp"

namespace tadkit {

// One scored (ne, feature, timestamp) cell. e is the equal-weight mean of
// the absolute forecast and reconstruction errors; when the window stride
// leaves only one of the two heads covering a timestamp, e carries the
// available residual alone and the carry flags record which.
struct ResidualEntry {
  int ne = 0;       // index into dataset.nes
  int feature = 0;  // KPI column index
  int t = 0;        // row index on the NE timeline
  Split split = Split::kTrain;
  bool has_for = false;
  bool has_rec = false;
  double e_for = 0.0;
  double e_rec = 0.0;
  double e = 0.0;
};

struct ResidualFrame {
  std::vector<ResidualEntry> entries;  // sorted by (ne, feature, t)
  int stride = 1;
  std::int64_t single_head_count = 0;  // entries covered by only one head

  std::vector<const ResidualEntry*> of_split(Split s) const;
};

// Scores every stride-S window of every split in eval mode. The
// reconstruction residual of a window lands on its last input step, the
// forecast residual on its first horizon step (1-step-ahead); masked cells
// are skipped. Residuals are in scaled model units.
ResidualFrame compute_residuals(Model& model, const TelemetryDataset& ds, const SplitTable& splits,
                                int stride, int batch_size = 64);

void write_residuals_csv(const std::string& path, const ResidualFrame& frame,
                         const TelemetryDataset& ds);
ResidualFrame read_residuals_csv(const std::string& path, const TelemetryDataset& ds);

}  // namespace tadkit
