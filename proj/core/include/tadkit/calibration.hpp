#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tadkit/residuals.hpp"

namespace tadkit {

enum class ThresholdMethod { kExponential, kPot };
std::string_view threshold_method_name(ThresholdMethod m);

struct CalibrationConfig {
  double p = 0.99;  // target tail probability; flag rate on calibrated data ~ 1-p
  ThresholdMethod method = ThresholdMethod::kExponential;
  double pot_init_quantile = 0.98;
  std::vector<double> priority_quantiles = {0.98, 0.99, 0.995, 0.999};

  void validate() const;  // ConfigError on out-of-range values
};

// Fitted threshold for one (ne, feature) unit plus fit provenance flags.
struct ThresholdRecord {
  int ne = 0;
  int feature = 0;
  ThresholdMethod method = ThresholdMethod::kExponential;  // method actually applied
  double theta = 0.0;  // exponential scale = mean validation residual
  double tau = 0.0;
  bool pooled_fallback = false;  // too few unit residuals; fitted on the global pool
  bool degenerate = false;       // all-zero residuals; tau=0 flags everything nonzero
  bool pot_fallback = false;     // POT requested but unusable for this unit
  double pot_t0 = 0.0;
  double pot_xi = 0.0;
  double pot_sigma = 0.0;
};

struct ThresholdTable {
  double p = 0.0;
  std::vector<ThresholdRecord> records;  // sorted by (ne, feature), covers ne x k

  const ThresholdRecord* find(int ne, int feature) const;
};

// Exponential tail calibration: theta = mean of the unit's validation
// residuals, tau = -theta*ln(1-p). Units with fewer than 10 validation
// residuals fall back to a pooled global fit (flagged on the record).
ThresholdTable fit_exponential(const ResidualFrame& frame, const TelemetryDataset& ds,
                               const CalibrationConfig& cfg);

// Peaks-over-threshold: GPD fitted by probability-weighted moments to
// exceedances over the empirical pot_init_quantile of validation residuals;
// units with < 30 exceedances or a non-positive fitted sigma fall back to
// the exponential rule (flagged).
ThresholdTable fit_pot(const ResidualFrame& frame, const TelemetryDataset& ds,
                       const CalibrationConfig& cfg);

struct Decision {
  int ne = 0;
  int feature = 0;
  int t = 0;
  Split split = Split::kTrain;
  double e = 0.0;
  bool flagged = false;
};

struct DecisionFrame {
  std::vector<Decision> decisions;  // sorted by (ne, feature, t)
};

// y = 1 iff e > tau (strict). split filters the frame; nullopt scores all
// splits. Missing threshold for a scored unit is a contract error.
DecisionFrame flag_anomalies(const ResidualFrame& frame, const ThresholdTable& thresholds,
                             std::optional<Split> split = Split::kTest);

// Per-unit AIC comparison of the exponential fit against a Gamma fit
// (moment-matched, one Newton refinement). Zero residuals are shifted by
// 1e-12 so both likelihoods exist.
struct AicUnit {
  int ne = 0;
  int feature = 0;
  int n = 0;
  double aic_exponential = 0.0;
  double aic_gamma = 0.0;
  double gamma_shape = 0.0;
  double gamma_scale = 0.0;
  bool gamma_wins = false;
  bool small_sample = false;  // n < 30
};

struct AicReport {
  std::vector<AicUnit> units;
  double exponential_win_fraction = 0.0;
};

AicReport compare_exp_gamma(const ResidualFrame& frame, Split split = Split::kVal);

void write_thresholds_csv(const std::string& path, const ThresholdTable& table,
                          const TelemetryDataset& ds);
ThresholdTable read_thresholds_csv(const std::string& path, const TelemetryDataset& ds);

void write_decisions_csv(const std::string& path, const DecisionFrame& frame,
                         const TelemetryDataset& ds);
DecisionFrame read_decisions_csv(const std::string& path, const TelemetryDataset& ds);

}  // namespace tadkit
