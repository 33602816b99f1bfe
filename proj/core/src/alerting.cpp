#include "tadkit/alerting.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

#include "tadkit/csv.hpp"
#include "tadkit/errors.hpp"
#include "tadkit/stats.hpp"

namespace tadkit {

const PriorityBinning::UnitBins* PriorityBinning::find(int ne, int feature) const {
  auto it = std::lower_bound(units.begin(), units.end(), std::pair{ne, feature},
                             [](const UnitBins& u, const std::pair<int, int>& key) {
                               return std::tie(u.ne, u.feature) < std::tie(key.first, key.second);
                             });
  if (it == units.end() || it->ne != ne || it->feature != feature) return nullptr;
  return &*it;
}

int PriorityBinning::level(const UnitBins& bins, double e) {
  if (bins.degenerate) return 1;
  int level = 1;
  for (double edge : bins.edges) {
    if (edge < e) ++level;
  }
  return level;
}

PriorityBinning fit_priority_bins(const ResidualFrame& frame, const TelemetryDataset& ds,
                                  const std::vector<double>& quantiles) {
  if (quantiles.size() != 4) throw ConfigError("exactly 4 priority quantiles required");
  double prev = 0.0;
  for (double q : quantiles) {
    if (!(q > prev && q < 1.0)) {
      throw ConfigError("priority quantiles must be strictly increasing in (0,1)");
    }
    prev = q;
  }

  std::map<std::pair<int, int>, std::vector<double>> unit;
  std::vector<double> pool;
  for (const auto& e : frame.entries) {
    if (e.split != Split::kVal) continue;
    unit[{e.ne, e.feature}].push_back(e.e);
    pool.push_back(e.e);
  }
  if (pool.empty()) throw ContractError("no validation residuals to bin on");
  std::sort(pool.begin(), pool.end());

  PriorityBinning bins;
  bins.quantiles = quantiles;
  for (int ne = 0; ne < static_cast<int>(ds.nes.size()); ++ne) {
    for (int f = 0; f < ds.k(); ++f) {
      PriorityBinning::UnitBins u;
      u.ne = ne;
      u.feature = f;
      const std::vector<double>* sample = &pool;
      auto it = unit.find({ne, f});
      if (it != unit.end() && !it->second.empty()) {
        std::sort(it->second.begin(), it->second.end());
        sample = &it->second;
      } else {
        u.pooled_fallback = true;
      }
      for (size_t q = 0; q < 4; ++q) {
        u.edges[q] = stats::quantile_sorted(*sample, quantiles[q]);
      }
      for (size_t q = 1; q < 4; ++q) {
        if (!(u.edges[q] > u.edges[q - 1])) u.degenerate = true;
      }
      bins.units.push_back(u);
    }
  }
  return bins;
}

std::vector<MaintenanceWindow> read_maintenance_csv(const std::string& path) {
  CsvTable table = read_csv(path);
  const int c_group = table.require_column("group_id");
  const int c_start = table.require_column("start");
  const int c_end = table.require_column("end");
  std::vector<MaintenanceWindow> windows;
  for (size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    const std::string where = path + ":row " + std::to_string(i + 2);
    MaintenanceWindow w;
    w.group_id = row[static_cast<size_t>(c_group)];
    w.start = parse_timestamp(row[static_cast<size_t>(c_start)], where);
    w.end = parse_timestamp(row[static_cast<size_t>(c_end)], where);
    if (w.start > w.end) throw DataError(where + ": maintenance window ends before it starts");
    windows.push_back(std::move(w));
  }
  return windows;
}

std::vector<AlertRecord> aggregate_alerts(const DecisionFrame& decisions,
                                          const PriorityBinning& bins,
                                          const std::map<std::string, std::string>& ne_group,
                                          const std::vector<MaintenanceWindow>& maintenance,
                                          const TelemetryDataset& ds) {
  std::map<std::pair<std::string, std::int64_t>, AlertRecord> records;
  for (const auto& d : decisions.decisions) {
    const NESeries& ne = ds.nes[static_cast<size_t>(d.ne)];
    auto git = ne_group.find(ne.ne_id);
    if (git == ne_group.end()) throw ContractError("no group for ne '" + ne.ne_id + "'");
    const std::int64_t ts = ne.timestamps[static_cast<size_t>(d.t)];
    AlertRecord& rec = records[{git->second, ts}];
    rec.group_id = git->second;
    rec.timestamp = ts;
    if (d.flagged) {
      const auto* u = bins.find(d.ne, d.feature);
      if (!u) {
        throw ContractError("no priority bins for ne " + std::to_string(d.ne) + " feature " +
                            std::to_string(d.feature));
      }
      rec.aggregated_count += 1;
      rec.aggregated_priority += PriorityBinning::level(*u, d.e);
    }
  }
  std::vector<AlertRecord> out;
  out.reserve(records.size());
  for (auto& [key, rec] : records) {
    for (const auto& w : maintenance) {
      if (w.group_id == rec.group_id && w.start <= rec.timestamp && rec.timestamp <= w.end) {
        rec.in_maintenance = true;
        break;
      }
    }
    out.push_back(std::move(rec));
  }
  std::sort(out.begin(), out.end(), [](const AlertRecord& a, const AlertRecord& b) {
    return std::tie(a.group_id, a.timestamp) < std::tie(b.group_id, b.timestamp);
  });
  return out;
}

void write_alerts_csv(const std::string& path, const std::vector<AlertRecord>& records) {
  CsvTable table;
  table.header = {"timestamp", "group_id", "aggregated_priority", "aggregated_count",
                  "in_maintenance"};
  for (const auto& r : records) {
    table.rows.push_back({format_timestamp_iso(r.timestamp), r.group_id,
                          std::to_string(r.aggregated_priority), std::to_string(r.aggregated_count),
                          r.in_maintenance ? "1" : "0"});
  }
  write_csv(path, table);
}

void write_alerts_json(const std::string& path, const std::vector<AlertRecord>& records) {
  std::map<std::string, nlohmann::json> series;
  for (const auto& r : records) {
    nlohmann::json& s = series[r.group_id];
    if (s.is_null()) {
      s = nlohmann::json{{"group_id", r.group_id},
                         {"timestamps", nlohmann::json::array()},
                         {"aggregated_priority", nlohmann::json::array()},
                         {"aggregated_count", nlohmann::json::array()},
                         {"in_maintenance", nlohmann::json::array()}};
    }
    s["timestamps"].push_back(format_timestamp_iso(r.timestamp));
    s["aggregated_priority"].push_back(r.aggregated_priority);
    s["aggregated_count"].push_back(r.aggregated_count);
    s["in_maintenance"].push_back(r.in_maintenance);
  }
  nlohmann::json doc = nlohmann::json::array();
  for (auto& [group, s] : series) doc.push_back(std::move(s));
  std::ofstream f(path);
  if (!f) throw DataError("cannot write '" + path + "'");
  f << doc.dump(2) << "\n";
}

}  // namespace tadkit
