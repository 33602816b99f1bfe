#include "tadkit/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <json.hpp>

#include "tadkit/csv.hpp"
#include "tadkit/errors.hpp"
#include "tadkit/stats.hpp"

namespace tadkit {

std::string_view threshold_method_name(ThresholdMethod m) {
  return m == ThresholdMethod::kExponential ? "exponential" : "pot";
}

void CalibrationConfig::validate() const {
  if (!(p > 0.0 && p < 1.0)) throw ConfigError("tail probability p must lie in (0,1)");
  if (!(pot_init_quantile > 0.0 && pot_init_quantile < 1.0)) {
    throw ConfigError("pot_init_quantile must lie in (0,1)");
  }
  if (priority_quantiles.size() != 4) throw ConfigError("exactly 4 priority quantiles required");
  double prev = 0.0;
  for (double q : priority_quantiles) {
    if (!(q > prev && q < 1.0)) {
      throw ConfigError("priority quantiles must be strictly increasing in (0,1)");
    }
    prev = q;
  }
}

const ThresholdRecord* ThresholdTable::find(int ne, int feature) const {
  auto it = std::lower_bound(records.begin(), records.end(), std::pair{ne, feature},
                             [](const ThresholdRecord& r, const std::pair<int, int>& key) {
                               return std::tie(r.ne, r.feature) < std::tie(key.first, key.second);
                             });
  if (it == records.end() || it->ne != ne || it->feature != feature) return nullptr;
  return &*it;
}

namespace {

constexpr int kMinUnitResiduals = 10;
constexpr int kMinPotExceedances = 30;

// Validation residuals grouped per (ne, feature), plus the global pool.
struct ValGroups {
  std::map<std::pair<int, int>, std::vector<double>> unit;
  std::vector<double> pool;
};

ValGroups collect_val(const ResidualFrame& frame) {
  ValGroups g;
  for (const auto& e : frame.entries) {
    if (e.split != Split::kVal) continue;
    g.unit[{e.ne, e.feature}].push_back(e.e);
    g.pool.push_back(e.e);
  }
  if (g.pool.empty()) throw ContractError("no validation residuals to calibrate on");
  return g;
}

double exp_tau(double theta, double p) { return -theta * std::log1p(-p); }

ThresholdRecord fit_exponential_unit(int ne, int feature, const ValGroups& groups, double p) {
  ThresholdRecord r;
  r.ne = ne;
  r.feature = feature;
  r.method = ThresholdMethod::kExponential;
  auto it = groups.unit.find({ne, feature});
  const std::vector<double>* sample = nullptr;
  if (it != groups.unit.end() && static_cast<int>(it->second.size()) >= kMinUnitResiduals) {
    sample = &it->second;
  } else {
    sample = &groups.pool;
    r.pooled_fallback = true;
  }
  r.theta = stats::mean(*sample);
  r.degenerate = r.theta == 0.0;
  r.tau = r.degenerate ? 0.0 : exp_tau(r.theta, p);
  return r;
}

}  // namespace

ThresholdTable fit_exponential(const ResidualFrame& frame, const TelemetryDataset& ds,
                               const CalibrationConfig& cfg) {
  cfg.validate();
  ValGroups groups = collect_val(frame);
  ThresholdTable table;
  table.p = cfg.p;
  for (int ne = 0; ne < static_cast<int>(ds.nes.size()); ++ne) {
    for (int f = 0; f < ds.k(); ++f) {
      table.records.push_back(fit_exponential_unit(ne, f, groups, cfg.p));
    }
  }
  return table;
}

ThresholdTable fit_pot(const ResidualFrame& frame, const TelemetryDataset& ds,
                       const CalibrationConfig& cfg) {
  cfg.validate();
  ValGroups groups = collect_val(frame);
  ThresholdTable table;
  table.p = cfg.p;
  for (int ne = 0; ne < static_cast<int>(ds.nes.size()); ++ne) {
    for (int f = 0; f < ds.k(); ++f) {
      ThresholdRecord r = fit_exponential_unit(ne, f, groups, cfg.p);
      auto it = groups.unit.find({ne, f});
      const std::vector<double>* sample =
          r.pooled_fallback ? &groups.pool : (it != groups.unit.end() ? &it->second : nullptr);
      bool fitted = false;
      if (sample && !r.degenerate) {
        std::vector<double> sorted = *sample;
        std::sort(sorted.begin(), sorted.end());
        const double t0 = stats::quantile_sorted(sorted, cfg.pot_init_quantile);
        std::vector<double> exceed;
        for (double v : sorted) {
          if (v > t0) exceed.push_back(v - t0);
        }
        const auto n_exc = static_cast<int>(exceed.size());
        if (n_exc >= kMinPotExceedances) {
          // Probability-weighted moments of the exceedances (ascending order):
          // a0 is the mean, a1 weights x_(i) by (N-i)/(N-1).
          const auto n = static_cast<double>(n_exc);
          double a0 = 0.0, a1 = 0.0;
          for (int i = 1; i <= n_exc; ++i) {
            const double x = exceed[static_cast<size_t>(i - 1)];
            a0 += x;
            a1 += x * (n - static_cast<double>(i)) / (n - 1.0);
          }
          a0 /= n;
          a1 /= n;
          const double denom = a0 - 2.0 * a1;
          if (denom != 0.0) {
            const double xi = 2.0 - a0 / denom;
            const double sigma = 2.0 * a0 * a1 / denom;
            if (sigma > 0.0) {
              const double n_total = static_cast<double>(sample->size());
              const double ratio = n_total * (1.0 - cfg.p) / n;
              double tau;
              if (std::fabs(xi) < 1e-9) {
                tau = t0 - sigma * std::log(ratio);
              } else {
                tau = t0 + (sigma / xi) * (std::pow(ratio, -xi) - 1.0);
              }
              r.method = ThresholdMethod::kPot;
              r.tau = tau;
              r.pot_t0 = t0;
              r.pot_xi = xi;
              r.pot_sigma = sigma;
              fitted = true;
            }
          }
        }
      }
      if (!fitted) r.pot_fallback = true;
      table.records.push_back(r);
    }
  }
  return table;
}

DecisionFrame flag_anomalies(const ResidualFrame& frame, const ThresholdTable& thresholds,
                             std::optional<Split> split) {
  DecisionFrame out;
  for (const auto& e : frame.entries) {
    if (split && e.split != *split) continue;
    const ThresholdRecord* r = thresholds.find(e.ne, e.feature);
    if (!r) {
      throw ContractError("no threshold for ne " + std::to_string(e.ne) + " feature " +
                          std::to_string(e.feature));
    }
    out.decisions.push_back({e.ne, e.feature, e.t, e.split, e.e, e.e > r->tau});
  }
  return out;
}

AicReport compare_exp_gamma(const ResidualFrame& frame, Split split) {
  std::map<std::pair<int, int>, std::vector<double>> unit;
  for (const auto& e : frame.entries) {
    if (e.split != split) continue;
    unit[{e.ne, e.feature}].push_back(e.e + 1e-12);  // keep zeros inside both supports
  }
  AicReport report;
  int exp_wins = 0;
  for (const auto& [key, sample] : unit) {
    if (sample.size() < 2) continue;
    AicUnit u;
    u.ne = key.first;
    u.feature = key.second;
    u.n = static_cast<int>(sample.size());
    u.small_sample = u.n < 30;
    u.aic_exponential = stats::exponential_aic(sample);
    const stats::GammaFit fit = stats::fit_gamma(sample);
    u.gamma_shape = fit.shape;
    u.gamma_scale = fit.scale;
    u.aic_gamma = stats::gamma_aic(fit);
    u.gamma_wins = u.aic_gamma < u.aic_exponential;
    if (!u.gamma_wins) ++exp_wins;
    report.units.push_back(u);
  }
  report.exponential_win_fraction =
      report.units.empty() ? 0.0
                           : static_cast<double>(exp_wins) / static_cast<double>(report.units.size());
  return report;
}

void write_thresholds_csv(const std::string& path, const ThresholdTable& table,
                          const TelemetryDataset& ds) {
  CsvTable out;
  out.header = {"ne_id", "feature", "method", "theta", "tau", "extras"};
  for (const auto& r : table.records) {
    nlohmann::json extras{{"p", table.p},
                          {"pooled_fallback", r.pooled_fallback},
                          {"degenerate", r.degenerate}};
    if (r.method == ThresholdMethod::kPot) {
      extras["t0"] = r.pot_t0;
      extras["xi"] = r.pot_xi;
      extras["sigma"] = r.pot_sigma;
    }
    if (r.pot_fallback) extras["pot_fallback"] = true;
    out.rows.push_back({ds.nes[static_cast<size_t>(r.ne)].ne_id,
                        ds.schema.dynamic_real[static_cast<size_t>(r.feature)],
                        std::string(threshold_method_name(r.method)), format_double(r.theta),
                        format_double(r.tau), extras.dump()});
  }
  write_csv(path, out);
}

ThresholdTable read_thresholds_csv(const std::string& path, const TelemetryDataset& ds) {
  CsvTable table = read_csv(path);
  const int c_ne = table.require_column("ne_id");
  const int c_feat = table.require_column("feature");
  const int c_method = table.require_column("method");
  const int c_theta = table.require_column("theta");
  const int c_tau = table.require_column("tau");
  const int c_extras = table.require_column("extras");

  std::map<std::string, int> feature_index;
  for (int f = 0; f < ds.k(); ++f) feature_index[ds.schema.dynamic_real[static_cast<size_t>(f)]] = f;

  ThresholdTable out;
  out.p = 0.0;
  for (size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    const std::string where = path + ":row " + std::to_string(i + 2);
    ThresholdRecord r;
    r.ne = ds.ne_index(row[static_cast<size_t>(c_ne)]);
    if (r.ne < 0) throw DataError(where + ": unknown ne_id");
    auto fit = feature_index.find(row[static_cast<size_t>(c_feat)]);
    if (fit == feature_index.end()) throw DataError(where + ": unknown feature");
    r.feature = fit->second;
    const std::string& m = row[static_cast<size_t>(c_method)];
    if (m == "exponential") r.method = ThresholdMethod::kExponential;
    else if (m == "pot") r.method = ThresholdMethod::kPot;
    else throw DataError(where + ": unknown method '" + m + "'");
    r.theta = parse_double(row[static_cast<size_t>(c_theta)], where);
    r.tau = parse_double(row[static_cast<size_t>(c_tau)], where);
    nlohmann::json extras;
    try {
      extras = nlohmann::json::parse(row[static_cast<size_t>(c_extras)]);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(where + ": extras is not valid JSON: " + e.what());
    }
    out.p = extras.value("p", out.p);
    r.pooled_fallback = extras.value("pooled_fallback", false);
    r.degenerate = extras.value("degenerate", false);
    r.pot_fallback = extras.value("pot_fallback", false);
    r.pot_t0 = extras.value("t0", 0.0);
    r.pot_xi = extras.value("xi", 0.0);
    r.pot_sigma = extras.value("sigma", 0.0);
    out.records.push_back(r);
  }
  std::sort(out.records.begin(), out.records.end(), [](const auto& a, const auto& b) {
    return std::tie(a.ne, a.feature) < std::tie(b.ne, b.feature);
  });
  return out;
}

void write_decisions_csv(const std::string& path, const DecisionFrame& frame,
                         const TelemetryDataset& ds) {
  CsvTable out;
  out.header = {"ne_id", "feature", "timestamp", "split", "e", "flagged"};
  for (const auto& d : frame.decisions) {
    const NESeries& ne = ds.nes[static_cast<size_t>(d.ne)];
    out.rows.push_back({ne.ne_id, ds.schema.dynamic_real[static_cast<size_t>(d.feature)],
                        format_timestamp_iso(ne.timestamps[static_cast<size_t>(d.t)]),
                        std::string(split_name(d.split)), format_double(d.e),
                        d.flagged ? "1" : "0"});
  }
  write_csv(path, out);
}

DecisionFrame read_decisions_csv(const std::string& path, const TelemetryDataset& ds) {
  CsvTable table = read_csv(path);
  const int c_ne = table.require_column("ne_id");
  const int c_feat = table.require_column("feature");
  const int c_ts = table.require_column("timestamp");
  const int c_split = table.require_column("split");
  const int c_e = table.require_column("e");
  const int c_flag = table.require_column("flagged");

  std::map<std::string, int> feature_index;
  for (int f = 0; f < ds.k(); ++f) feature_index[ds.schema.dynamic_real[static_cast<size_t>(f)]] = f;

  DecisionFrame out;
  for (size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    const std::string where = path + ":row " + std::to_string(i + 2);
    Decision d;
    d.ne = ds.ne_index(row[static_cast<size_t>(c_ne)]);
    if (d.ne < 0) throw DataError(where + ": unknown ne_id");
    auto fit = feature_index.find(row[static_cast<size_t>(c_feat)]);
    if (fit == feature_index.end()) throw DataError(where + ": unknown feature");
    d.feature = fit->second;
    const std::int64_t ts = parse_timestamp(row[static_cast<size_t>(c_ts)], where);
    const NESeries& ne = ds.nes[static_cast<size_t>(d.ne)];
    auto tit = std::lower_bound(ne.timestamps.begin(), ne.timestamps.end(), ts);
    if (tit == ne.timestamps.end() || *tit != ts) {
      throw DataError(where + ": timestamp not on the NE timeline");
    }
    d.t = static_cast<int>(tit - ne.timestamps.begin());
    const std::string& sp = row[static_cast<size_t>(c_split)];
    if (sp == "train") d.split = Split::kTrain;
    else if (sp == "val") d.split = Split::kVal;
    else if (sp == "test") d.split = Split::kTest;
    else throw DataError(where + ": unknown split");
    d.e = parse_double(row[static_cast<size_t>(c_e)], where);
    const std::string& fl = row[static_cast<size_t>(c_flag)];
    if (fl != "0" && fl != "1") throw DataError(where + ": flagged must be 0 or 1");
    d.flagged = fl == "1";
    out.decisions.push_back(d);
  }
  std::sort(out.decisions.begin(), out.decisions.end(), [](const auto& a, const auto& b) {
    return std::tie(a.ne, a.feature, a.t) < std::tie(b.ne, b.feature, b.t);
  });
  return out;
}

}  // namespace tadkit
