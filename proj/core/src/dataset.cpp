#include "tadkit/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <map>

#include "tadkit/errors.hpp"

namespace tadkit {
namespace {

// Days since 1970-01-01 for a civil date (Howard Hinnant's algorithm).
std::int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  unsigned yoe = static_cast<unsigned>(y - era * 400);
  unsigned doy = static_cast<unsigned>((153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1);
  unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
  z += 719468;
  std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  unsigned doe = static_cast<unsigned>(z - era * 146097);
  unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
  unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  unsigned mp = (5 * doy + 2) / 153;
  d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
  y = static_cast<int>(yy + (m <= 2));
}

bool all_digits(const std::string& s) {
  if (s.empty()) return false;
  size_t i = s[0] == '-' ? 1 : 0;
  if (i >= s.size()) return false;
  for (; i < s.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  }
  return true;
}

}  // namespace

std::int64_t parse_timestamp(const std::string& s, const std::string& context) {
  if (all_digits(s)) return parse_int(s, context);
  // ISO-8601: YYYY-MM-DD[T ]HH:MM:SS[Z]
  int y, mo, d, h, mi, sec;
  char sep;
  if (std::sscanf(s.c_str(), "%4d-%2d-%2d%c%2d:%2d:%2d", &y, &mo, &d, &sep, &h, &mi, &sec) == 7 &&
      (sep == 'T' || sep == ' ')) {
    size_t tail = 19;
    if (s.size() > tail && !(s.size() == tail + 1 && s[tail] == 'Z')) {
      throw DataError(context + ": unsupported timestamp suffix in '" + s + "'");
    }
    if (mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 || mi > 59 || sec > 60) {
      throw DataError(context + ": invalid timestamp '" + s + "'");
    }
    return days_from_civil(y, mo, d) * 86400 + h * 3600 + mi * 60 + sec;
  }
  throw DataError(context + ": cannot parse timestamp '" + s + "'");
}

std::string format_timestamp_iso(std::int64_t t) {
  std::int64_t days = t >= 0 ? t / 86400 : (t - 86399) / 86400;
  std::int64_t rem = t - days * 86400;
  int y, m, d;
  civil_from_days(days, y, m, d);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d", y, m, d,
                static_cast<int>(rem / 3600), static_cast<int>(rem / 60 % 60),
                static_cast<int>(rem % 60));
  return buf;
}

int hour_of_day(std::int64_t t) {
  std::int64_t sec = ((t % 86400) + 86400) % 86400;
  return static_cast<int>(sec / 3600);
}

int day_of_week(std::int64_t t) {
  std::int64_t days = t >= 0 ? t / 86400 : (t - 86399) / 86400;
  // 1970-01-01 was a Thursday; 0 = Monday.
  return static_cast<int>(((days + 3) % 7 + 7) % 7);
}

int TelemetryDataset::ne_index(const std::string& ne_id) const {
  for (size_t i = 0; i < nes.size(); ++i) {
    if (nes[i].ne_id == ne_id) return static_cast<int>(i);
  }
  return -1;
}

TelemetryDataset ingest_csv(const CsvTable& table, const DatasetSchema& schema,
                            bool append_mask_context) {
  const int c_ne = table.require_column(schema.ne_col);
  const int c_ts = table.require_column(schema.ts_col);
  std::vector<int> c_real, c_dcat, c_scat, c_sreal;
  for (const auto& col : schema.dynamic_real) c_real.push_back(table.require_column(col));
  for (const auto& col : schema.dynamic_cat) c_dcat.push_back(table.require_column(col));
  for (const auto& col : schema.static_cat) c_scat.push_back(table.require_column(col));
  for (const auto& col : schema.static_real) c_sreal.push_back(table.require_column(col));
  if (schema.cadence_minutes <= 0) throw ConfigError("cadence_minutes must be positive");
  const std::int64_t step = static_cast<std::int64_t>(schema.cadence_minutes) * 60;

  struct RawNE {
    std::vector<std::int64_t> ts;
    std::vector<std::vector<std::string>> rows;  // original row fields
    std::vector<std::string> static_cat;
    std::vector<double> static_real;
  };
  std::map<std::string, RawNE> by_ne;
  std::vector<std::string> ne_order;

  for (size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::string& ne = row[static_cast<size_t>(c_ne)];
    if (ne.empty()) throw DataError("row " + std::to_string(r + 2) + ": empty ne_id");
    std::string ctx = "row " + std::to_string(r + 2) + " (ne " + ne + ")";
    std::int64_t ts = parse_timestamp(row[static_cast<size_t>(c_ts)], ctx);
    auto [it, fresh] = by_ne.try_emplace(ne);
    RawNE& raw = it->second;
    if (fresh) {
      ne_order.push_back(ne);
      for (int c : c_scat) raw.static_cat.push_back(row[static_cast<size_t>(c)]);
      for (int c : c_sreal) raw.static_real.push_back(parse_double(row[static_cast<size_t>(c)], ctx));
    } else {
      for (size_t i = 0; i < c_scat.size(); ++i) {
        if (row[static_cast<size_t>(c_scat[i])] != raw.static_cat[i]) {
          throw DataError(ctx + ": static column '" + schema.static_cat[i] + "' changes over time");
        }
      }
      if (!raw.ts.empty()) {
        if (ts == raw.ts.back()) throw DataError(ctx + ": duplicate timestamp " + std::to_string(ts));
        if (ts < raw.ts.back()) throw DataError(ctx + ": non-monotone timestamp " + std::to_string(ts));
      }
    }
    if (!raw.ts.empty() && (ts - raw.ts.front()) % step != 0) {
      throw DataError(ctx + ": timestamp off the " + std::to_string(schema.cadence_minutes) +
                      "-minute cadence grid");
    }
    raw.ts.push_back(ts);
    raw.rows.push_back(row);
  }

  TelemetryDataset ds;
  ds.schema = schema;
  if (append_mask_context) {
    for (const auto& kpi : schema.dynamic_real) {
      ds.schema.dynamic_cat.push_back(kpi + "__missing");
    }
  }
  const int k = static_cast<int>(schema.dynamic_real.size());
  const int d_dyn_src = static_cast<int>(schema.dynamic_cat.size());
  const int d_dyn = static_cast<int>(ds.schema.dynamic_cat.size());

  for (const auto& ne : ne_order) {
    const RawNE& raw = by_ne[ne];
    NESeries s;
    s.ne_id = ne;
    s.static_cat_raw = raw.static_cat;
    s.static_real = raw.static_real;
    const std::int64_t t0 = raw.ts.front();
    const int T = static_cast<int>((raw.ts.back() - t0) / step) + 1;
    s.timestamps.resize(static_cast<size_t>(T));
    for (int t = 0; t < T; ++t) s.timestamps[static_cast<size_t>(t)] = t0 + t * step;
    s.x.assign(static_cast<size_t>(T) * k, 0.0);
    s.mask.assign(static_cast<size_t>(T) * k, 1);  // grid gaps stay fully masked
    s.dyn_cat_raw.assign(static_cast<size_t>(T) * d_dyn, "");

    for (size_t r = 0; r < raw.ts.size(); ++r) {
      const int t = static_cast<int>((raw.ts[r] - t0) / step);
      const auto& row = raw.rows[r];
      std::string ctx = "ne " + ne + " ts " + std::to_string(raw.ts[r]);
      for (int f = 0; f < k; ++f) {
        const std::string& cell = row[static_cast<size_t>(c_real[static_cast<size_t>(f)])];
        auto ix = static_cast<size_t>(t) * k + static_cast<size_t>(f);
        if (cell.empty()) {
          s.mask[ix] = 1;  // value stays 0
        } else {
          s.x[ix] = parse_double(cell, ctx);
          s.mask[ix] = 0;
        }
      }
      for (int c = 0; c < d_dyn_src; ++c) {
        s.dyn_cat_raw[static_cast<size_t>(t) * d_dyn + static_cast<size_t>(c)] =
            row[static_cast<size_t>(c_dcat[static_cast<size_t>(c)])];
      }
    }
    if (append_mask_context) {
      for (int t = 0; t < T; ++t) {
        for (int f = 0; f < k; ++f) {
          s.dyn_cat_raw[static_cast<size_t>(t) * d_dyn + static_cast<size_t>(d_dyn_src + f)] =
              s.mask[static_cast<size_t>(t) * k + static_cast<size_t>(f)] ? "1" : "0";
        }
      }
    }
    ds.nes.push_back(std::move(s));
  }
  if (ds.nes.empty()) throw DataError("dataset contains no rows");
  return ds;
}

TelemetryDataset ingest_csv_file(const std::string& path, const DatasetSchema& schema,
                                 bool append_mask_context) {
  return ingest_csv(read_csv(path), schema, append_mask_context);
}

std::vector<LabelKey> read_labels(const CsvTable& table, const TelemetryDataset& ds) {
  const int c_ne = table.require_column("ne_id");
  const int c_f = table.require_column("feature");
  const int c_ts = table.require_column("timestamp");
  const int c_l = table.require_column("label");
  std::map<std::string, int> feat;
  for (size_t i = 0; i < ds.schema.dynamic_real.size(); ++i) {
    feat[ds.schema.dynamic_real[i]] = static_cast<int>(i);
  }
  std::vector<LabelKey> out;
  for (size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    std::string ctx = "labels row " + std::to_string(r + 2);
    const std::string& lab = row[static_cast<size_t>(c_l)];
    if (lab != "0" && lab != "1") throw DataError(ctx + ": label must be 0 or 1");
    if (lab == "0") continue;
    int ne = ds.ne_index(row[static_cast<size_t>(c_ne)]);
    if (ne < 0) throw DataError(ctx + ": unknown ne_id '" + row[static_cast<size_t>(c_ne)] + "'");
    auto it = feat.find(row[static_cast<size_t>(c_f)]);
    if (it == feat.end()) {
      throw DataError(ctx + ": unknown feature '" + row[static_cast<size_t>(c_f)] + "'");
    }
    out.push_back({ne, it->second, parse_timestamp(row[static_cast<size_t>(c_ts)], ctx)});
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<LabelKey> read_labels_file(const std::string& path, const TelemetryDataset& ds) {
  return read_labels(read_csv(path), ds);
}

}  // namespace tadkit
