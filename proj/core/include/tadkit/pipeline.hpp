#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tadkit/dataset.hpp"
#include "tadkit/tensor.hpp"

namespace tadkit {

enum class Split { kTrain, kVal, kTest };
std::string_view split_name(Split s);

// Per-NE chronological split boundaries as row indices:
// train = [0, train_end), val = [train_end, val_end), test = [val_end, T).
struct SplitBounds {
  int train_end = 0;
  int val_end = 0;
};
using SplitTable = std::vector<SplitBounds>;  // parallel to dataset.nes

// Last test_frac of the timeline is test; the remainder splits
// (1-val_frac)/val_frac into train/val. Boundaries use floor rounding.
SplitTable split_timeline(const TelemetryDataset& ds, double test_frac, double val_frac);

// External split file: columns (ne_id, train_end, val_end) holding the
// inclusive last timestamp of the train and val ranges. Taken verbatim.
SplitTable load_splits(const CsvTable& table, const TelemetryDataset& ds);
SplitTable load_splits_file(const std::string& path, const TelemetryDataset& ds);

struct RemovalRecord {
  std::string ne_id;
  std::string reason;
};

// Drops NEs with too much missing data or too little history for the
// window geometry: missing fraction over all KPI cells > max_missing_frac,
// or fewer than two non-overlapping (L+H) stretches in a non-empty split.
std::vector<RemovalRecord> filter_eligible(TelemetryDataset& ds, SplitTable& splits, int L, int H,
                                           double max_missing_frac);

// Ordinal encoder for categorical columns. Code 0 is reserved for
// missing/unseen; observed categories get 1..V in lexicographic order.
class OrdinalEncoder {
 public:
  void fit(const std::vector<std::vector<std::string>>& columns);
  int transform(int column, const std::string& value) const;
  int vocab(int column) const;  // includes the null token
  int columns() const { return static_cast<int>(maps_.size()); }

  const std::vector<std::map<std::string, int>>& maps() const { return maps_; }
  void set_maps(std::vector<std::map<std::string, int>> m) { maps_ = std::move(m); }

 private:
  std::vector<std::map<std::string, int>> maps_;
};

enum class EncoderFit { kFullDataset, kTrainOnly };

// Min-max scaling fitted on train rows: KPIs per (ne, feature) using only
// unmasked cells, static reals globally across NEs. Zero-range features
// scale to 0.
struct Scalers {
  struct Range {
    double lo = 0.0;
    double hi = 0.0;
  };
  std::map<std::string, std::vector<Range>> kpi;  // ne_id -> k ranges
  std::vector<Range> static_real;                 // global per column
  OrdinalEncoder dyn_encoder;
  OrdinalEncoder static_encoder;
};

Scalers fit_scalers(const TelemetryDataset& ds, const SplitTable& splits, EncoderFit enc_fit);

// Scales KPIs and static reals in place, re-zeroes masked cells, and fills
// the categorical code arrays. Scaled values can exceed [0,1] outside the
// train range; no clipping.
void apply_scalers(TelemetryDataset& ds, const Scalers& sc);

// Inverse of the KPI scaling for one cell (used for reporting/tests).
double inverse_scale_kpi(const Scalers& sc, const std::string& ne_id, int feature, double v);

struct WindowRef {
  int ne = 0;
  int t0 = 0;  // first input row; input [t0, t0+L), target [t0+L, t0+L+H)
  Split split = Split::kTrain;
};

// Stride-S window start enumeration per NE and split block; a window is
// valid only if input and target ranges lie inside one block.
std::vector<WindowRef> enumerate_windows(const TelemetryDataset& ds, const SplitTable& splits,
                                         int L, int H, int S);
std::vector<WindowRef> windows_of_split(const std::vector<WindowRef>& all, Split split);

struct WindowBatch {
  int B = 0, L = 0, H = 0, k = 0;
  Tensor inputs;                          // [B,L,k]
  Tensor targets;                         // [B,H,k]
  std::vector<std::int64_t> dyn_codes;    // B*L*d_dyn
  std::vector<std::int64_t> static_codes; // B*d_stat
  Tensor static_reals;                    // [B,d_real] or empty when d_real=0
  std::vector<WindowRef> refs;
};

// Splits `refs` into batch_size groups. With a shuffle seed the order is a
// deterministic permutation; the final partial batch is kept.
std::vector<std::vector<WindowRef>> plan_batches(std::vector<WindowRef> refs, int batch_size,
                                                 std::uint64_t shuffle_seed, bool shuffle);

WindowBatch build_batch(const TelemetryDataset& ds, const std::vector<WindowRef>& refs, int L,
                        int H);

}  // namespace tadkit
