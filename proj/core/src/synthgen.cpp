#include "tadkit/synthgen.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "tadkit/errors.hpp"
#include "tadkit/rng.hpp"

namespace tadkit {

using nlohmann::json;

void SynthSpec::validate() const {
  if (n_nes < 1) throw ConfigError("n_nes must be >= 1");
  if (T < 2) throw ConfigError("T must be >= 2");
  if (k < 1) throw ConfigError("k must be >= 1");
  if (cadence_minutes < 1) throw ConfigError("cadence_minutes must be >= 1");
  if (!(noise_sigma >= 0.0)) throw ConfigError("noise_sigma must be >= 0");
  if (!(weekend_damping >= 0.0 && weekend_damping <= 1.0)) {
    throw ConfigError("weekend_damping must lie in [0,1]");
  }
  std::set<std::tuple<int, int, int>> cells;
  for (const auto& a : anomalies) {
    if (a.ne < 0 || a.ne >= n_nes) throw ConfigError("anomaly ne out of range");
    if (a.features.empty()) throw ConfigError("anomaly feature subset is empty");
    if (a.start < 0 || a.end >= T || a.start > a.end) {
      throw ConfigError("anomaly interval outside [0,T)");
    }
    if (!(a.magnitude > 0.0)) throw ConfigError("anomaly magnitude must be > 0");
    if (a.kind != "spike" && a.kind != "level_shift" && a.kind != "dropout") {
      throw ConfigError("unknown anomaly kind '" + a.kind + "'");
    }
    for (int f : a.features) {
      if (f < 0 || f >= k) throw ConfigError("anomaly feature out of range");
      for (int t = a.start; t <= a.end; ++t) {
        if (!cells.insert({a.ne, f, t}).second) {
          throw ConfigError("overlapping injections on ne " + std::to_string(a.ne) +
                            " feature " + std::to_string(f) + " t " + std::to_string(t));
        }
      }
    }
  }
}

SynthSpec synth_spec_from_json(const std::string& text, const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(origin + ": invalid JSON: " + e.what());
  }
  SynthSpec spec;
  try {
    spec.n_nes = j.value("n_nes", spec.n_nes);
    spec.T = j.value("T", spec.T);
    spec.k = j.value("k", spec.k);
    spec.cadence_minutes = j.value("cadence_minutes", spec.cadence_minutes);
    spec.start_epoch = j.value("start_epoch", spec.start_epoch);
    spec.noise_sigma = j.value("noise_sigma", spec.noise_sigma);
    spec.weekend_damping = j.value("weekend_damping", spec.weekend_damping);
    spec.static_offset = j.value("static_offset", spec.static_offset);
    spec.seed = j.value("seed", spec.seed);
    for (const auto& ja : j.value("anomalies", json::array())) {
      AnomalyInjection a;
      a.ne = ja.at("ne").get<int>();
      a.features = ja.at("features").get<std::vector<int>>();
      a.start = ja.at("start").get<int>();
      a.end = ja.at("end").get<int>();
      a.kind = ja.value("kind", a.kind);
      a.magnitude = ja.at("magnitude").get<double>();
      spec.anomalies.push_back(std::move(a));
    }
  } catch (const json::exception& e) {
    throw ConfigError(origin + ": malformed spec: " + e.what());
  }
  spec.validate();
  return spec;
}

SynthSpec synth_spec_from_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return synth_spec_from_json(ss.str(), path);
}

std::string synth_spec_to_json(const SynthSpec& spec) {
  json anomalies = json::array();
  for (const auto& a : spec.anomalies) {
    anomalies.push_back({{"ne", a.ne},
                         {"features", a.features},
                         {"start", a.start},
                         {"end", a.end},
                         {"kind", a.kind},
                         {"magnitude", a.magnitude}});
  }
  return json{{"n_nes", spec.n_nes},
              {"T", spec.T},
              {"k", spec.k},
              {"cadence_minutes", spec.cadence_minutes},
              {"start_epoch", spec.start_epoch},
              {"noise_sigma", spec.noise_sigma},
              {"weekend_damping", spec.weekend_damping},
              {"static_offset", spec.static_offset},
              {"seed", spec.seed},
              {"anomalies", anomalies}}
      .dump(2);
}

namespace {

std::string ne_name(int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "ne_%03d", i);
  return buf;
}

const char* kSiteTypes[3] = {"alpha", "beta", "gamma"};

}  // namespace

SynthOutput generate(const SynthSpec& spec) {
  spec.validate();
  SynthOutput out;
  out.schema.ne_col = "ne_id";
  out.schema.ts_col = "timestamp";
  for (int f = 0; f < spec.k; ++f) out.schema.dynamic_real.push_back("kpi_" + std::to_string(f));
  out.schema.dynamic_cat = {"hour", "weekday"};
  out.schema.static_cat = {"site_type"};
  out.schema.static_real = {"capacity"};
  out.schema.cadence_minutes = spec.cadence_minutes;

  out.data.header = {"ne_id", "timestamp"};
  for (const auto& c : out.schema.dynamic_real) out.data.header.push_back(c);
  out.data.header.insert(out.data.header.end(), {"hour", "weekday", "site_type", "capacity"});
  out.labels.header = {"ne_id", "feature", "timestamp", "label"};

  for (int ne = 0; ne < spec.n_nes; ++ne) {
    const std::string id = ne_name(ne);
    Rng params(Rng::derive(spec.seed, "ne-params." + id));
    std::vector<double> base(static_cast<size_t>(spec.k));
    std::vector<double> amp(static_cast<size_t>(spec.k));
    std::vector<double> period(static_cast<size_t>(spec.k));
    std::vector<double> phase(static_cast<size_t>(spec.k));
    const double kPeriods[4] = {6.0, 8.0, 12.0, 24.0};
    for (int f = 0; f < spec.k; ++f) {
      base[static_cast<size_t>(f)] = 1.0 + 9.0 * params.uniform();
      amp[static_cast<size_t>(f)] = 0.5 + 1.5 * params.uniform();
      period[static_cast<size_t>(f)] = kPeriods[params.uniform_int(0, 3)];
      phase[static_cast<size_t>(f)] = 2.0 * M_PI * params.uniform();
    }
    const int site = params.uniform_int(0, 2);
    const double site_offset = static_cast<double>(site) * spec.static_offset;
    const double capacity = 0.5 + params.uniform();

    // Injection offsets per (feature, t) for this NE.
    std::vector<double> inject(static_cast<size_t>(spec.k) * spec.T, 0.0);
    for (const auto& a : spec.anomalies) {
      if (a.ne != ne) continue;
      const double offset = a.kind == "dropout" ? -a.magnitude : a.magnitude;
      for (int f : a.features) {
        for (int t = a.start; t <= a.end; ++t) {
          inject[static_cast<size_t>(f) * spec.T + t] = offset;
        }
      }
    }

    Rng noise(Rng::derive(spec.seed, "noise." + id));
    for (int t = 0; t < spec.T; ++t) {
      const std::int64_t ts = spec.start_epoch + static_cast<std::int64_t>(t) *
                                                     spec.cadence_minutes * 60;
      const double hfrac = static_cast<double>(ts % 86400) / 3600.0;
      const int dow = day_of_week(ts);
      const double damp = dow >= 5 ? spec.weekend_damping : 1.0;
      std::vector<std::string> row = {id, format_timestamp_iso(ts)};
      for (int f = 0; f < spec.k; ++f) {
        const auto fi = static_cast<size_t>(f);
        double v = base[fi] + site_offset +
                   capacity * amp[fi] * damp *
                       std::sin(2.0 * M_PI * hfrac / period[fi] + phase[fi]);
        v += noise.normal() * spec.noise_sigma;
        v += inject[fi * static_cast<size_t>(spec.T) + static_cast<size_t>(t)];
        row.push_back(format_double(v));
      }
      row.push_back(std::to_string(hour_of_day(ts)));
      row.push_back(std::to_string(dow));
      row.push_back(kSiteTypes[site]);
      row.push_back(format_double(capacity));
      out.data.rows.push_back(std::move(row));
    }
  }

  for (const auto& a : spec.anomalies) {
    for (int f : a.features) {
      for (int t = a.start; t <= a.end; ++t) {
        const std::int64_t ts = spec.start_epoch + static_cast<std::int64_t>(t) *
                                                       spec.cadence_minutes * 60;
        out.labels.rows.push_back({ne_name(a.ne), "kpi_" + std::to_string(f),
                                   format_timestamp_iso(ts), "1"});
      }
    }
  }
  return out;
}

TelemetryDataset generate_dataset(const SynthSpec& spec, bool append_mask_context) {
  SynthOutput out = generate(spec);
  return ingest_csv(out.data, out.schema, append_mask_context);
}

nlohmann::json schema_to_json(const DatasetSchema& schema) {
  return json{{"ne_col", schema.ne_col},
              {"ts_col", schema.ts_col},
              {"dynamic_real", schema.dynamic_real},
              {"dynamic_cat", schema.dynamic_cat},
              {"static_cat", schema.static_cat},
              {"static_real", schema.static_real},
              {"cadence_minutes", schema.cadence_minutes}};
}

DatasetSchema schema_from_json(const nlohmann::json& j, const std::string& origin) {
  DatasetSchema schema;
  try {
    schema.ne_col = j.value("ne_col", schema.ne_col);
    schema.ts_col = j.value("ts_col", schema.ts_col);
    schema.dynamic_real = j.at("dynamic_real").get<std::vector<std::string>>();
    schema.dynamic_cat = j.value("dynamic_cat", std::vector<std::string>{});
    schema.static_cat = j.value("static_cat", std::vector<std::string>{});
    schema.static_real = j.value("static_real", std::vector<std::string>{});
    schema.cadence_minutes = j.value("cadence_minutes", schema.cadence_minutes);
  } catch (const json::exception& e) {
    throw DataError(origin + ": malformed schema: " + e.what());
  }
  return schema;
}

void write_schema_json(const std::string& path, const DatasetSchema& schema) {
  std::ofstream f(path);
  if (!f) throw DataError("cannot write '" + path + "'");
  f << schema_to_json(schema).dump(2) << "\n";
}

DatasetSchema read_schema_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open '" + path + "'");
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw DataError(path + ": invalid JSON: " + e.what());
  }
  return schema_from_json(j, path);
}

}  // namespace tadkit
