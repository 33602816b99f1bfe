#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "tadkit/metrics.hpp"

namespace tadkit {

struct NamedReport {
  std::string name;
  MetricReport report;
};

nlohmann::json metric_report_to_json(const MetricReport& report);

// Per-feature table: Feature | GT | per-model (Pred, F1). Event counts for
// the affiliation view, timestamp counts (plus prevalence) for pointwise.
std::string render_per_feature_table(const std::vector<NamedReport>& models, bool affiliation);

// Aggregate table: Model | Macro P R F1 | Micro P R F1 | Union P R F1,
// with a GT/pred count footer.
std::string render_aggregate_table(const std::vector<NamedReport>& models, bool affiliation);

// Side-by-side per-feature P/R/F1 of two calibration methods with
// Macro/Micro/Union summary rows.
std::string render_threshold_comparison(const MetricReport& pot, const MetricReport& exponential,
                                        bool affiliation);

// One ablation variant: per-seed minima of the validation losses plus the
// per-seed Jaccard overlap of its flagged anomaly set against the baseline
// variant's (empty for the baseline itself).
struct AblationVariant {
  std::string name;
  std::vector<double> val_total_min;
  std::vector<double> val_forecast_min;
  std::vector<double> val_recon_min;
  std::vector<double> jaccard_vs_baseline;
};

struct AblationReport {
  std::vector<std::uint64_t> seeds;
  int baseline = 0;  // index into variants
  std::vector<AblationVariant> variants;
};

// Mean +/- sd of the per-seed minima per variant.
std::string render_ablation_minima(const AblationReport& report);
// Paired differences to the baseline on the total-loss minima: delta,
// delta %, BH-FDR adjusted paired t-test p, significance stars, Cohen's d.
std::string render_ablation_deltas(const AblationReport& report);
nlohmann::json ablation_report_to_json(const AblationReport& report);

// Jaccard overlap of anomaly sets per model family (one value per NE).
struct JaccardPoint {
  std::string family;
  std::vector<double> per_ne;
};
struct JaccardCurve {
  std::vector<JaccardPoint> points;
};

// Mean J with a normal-approximation 95% CI across NEs per family.
std::string render_jaccard_curve(const JaccardCurve& curve);
nlohmann::json jaccard_curve_to_json(const JaccardCurve& curve);

void write_text_file(const std::string& path, const std::string& content);
void write_json_file(const std::string& path, const nlohmann::json& doc);

}  // namespace tadkit
