#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tadkit/calibration.hpp"
#include "tadkit/dataset.hpp"
#include "tadkit/pipeline.hpp"

namespace tadkit {

// Inclusive timestamp-index interval; |[s,e]| = e - s + 1.
struct EventInterval {
  int start = 0;
  int end = 0;
};

// Maximal runs of 1s.
std::vector<EventInterval> merge_events(const std::vector<std::uint8_t>& stream);
std::vector<std::uint8_t> expand_events(const std::vector<EventInterval>& events, int length);
double iou(const EventInterval& a, const EventInterval& b);

struct PRF {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};
// 0/0 conventions resolve to 0.
PRF prf_from_counts(std::int64_t tp, std::int64_t fp, std::int64_t fn);

// Event-level matching: a prediction is a TP iff it overlaps some ground
// truth event (argmax-IoU affiliation, earliest-start tie-break); an
// uncovered ground-truth event is a FN. Recall counts covered GT events.
struct AffiliationResult {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  PRF prf;
};
AffiliationResult affiliation_prf(const std::vector<EventInterval>& gt,
                                  const std::vector<EventInterval>& pred);

struct PointwiseResult {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  PRF prf;
};
// Streams must be equal length.
PointwiseResult pointwise_prf(const std::vector<std::uint8_t>& gt,
                              const std::vector<std::uint8_t>& pred);

// Ground-truth/prediction stream pair of one (ne, feature) unit over a
// contiguous row range.
struct StreamPair {
  std::string ne_id;
  std::string feature;
  std::vector<std::uint8_t> gt;
  std::vector<std::uint8_t> pred;
};

struct UnitMetrics {
  std::string ne_id;
  std::string feature;
  PointwiseResult pointwise;
  AffiliationResult affiliation;
  std::int64_t gt_events = 0;
  std::int64_t pred_events = 0;
  std::int64_t gt_points = 0;
  std::int64_t pred_points = 0;
  std::int64_t length = 0;
};

// Macro averages per-unit metrics, micro pools counts, union ORs the
// features of each NE into one stream per NE and pools across NEs.
struct MetricReport {
  std::vector<UnitMetrics> units;
  PRF macro_pointwise, macro_affiliation;
  PRF micro_pointwise, micro_affiliation;
  PRF union_pointwise, union_affiliation;
  std::int64_t gt_events = 0, pred_events = 0;
  std::int64_t gt_points = 0, pred_points = 0;
};

MetricReport evaluate_streams(const std::vector<StreamPair>& streams);

// Prevalence-matched random detector: keeps gt, replaces pred with
// Bernoulli(unit prevalence) draws. Seed-deterministic.
std::vector<StreamPair> random_baseline(const std::vector<StreamPair>& streams, std::uint64_t seed);

// Set Jaccard over (ne, feature, timestamp) keys; both empty -> 1 (identical
// behaviour; callers should surface the convention).
double jaccard_overlap(std::vector<LabelKey> a, std::vector<LabelKey> b);

// Flagged decisions as anomaly keys (timestamps in epoch seconds).
std::vector<LabelKey> decision_keys(const DecisionFrame& frame, const TelemetryDataset& ds);

// Builds one stream pair per (ne, feature) over the given split's row range
// (whole range; rows the scorer never covered stay pred=0).
std::vector<StreamPair> build_streams(const DecisionFrame& decisions,
                                      const std::vector<LabelKey>& labels,
                                      const TelemetryDataset& ds, const SplitTable& splits,
                                      Split split);

}  // namespace tadkit
