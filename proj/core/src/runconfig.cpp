#include "tadkit/runconfig.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "tadkit/errors.hpp"
#include "tadkit/synthgen.hpp"

namespace tadkit {

using nlohmann::json;

void RunConfig::validate() const {
  if (data_csv.empty()) throw ConfigError("data.csv path is required");
  if (schema.dynamic_real.empty()) throw ConfigError("schema lists no KPI columns");
  if (L < 2) throw ConfigError("window length L must be >= 2");
  if (H < 1) throw ConfigError("horizon H must be >= 1");
  if (S < 1) throw ConfigError("stride S must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
  if (patience < 0) throw ConfigError("patience must be >= 0");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (!(gamma >= 0.0)) throw ConfigError("gamma must be >= 0");
  if (splits_csv.empty()) {
    if (!(test_frac > 0.0 && test_frac < 1.0) || !(val_frac > 0.0 && val_frac < 1.0)) {
      throw ConfigError("test_frac and val_frac must lie in (0,1)");
    }
  }
  if (!(max_missing_frac >= 0.0 && max_missing_frac <= 1.0)) {
    throw ConfigError("max_missing_frac must lie in [0,1]");
  }
  if (score_stride < 1) throw ConfigError("scoring stride must be >= 1");
  if (score_batch < 1) throw ConfigError("scoring batch_size must be >= 1");
  calibration.validate();
  if (!group_by.empty()) {
    bool known = false;
    for (const auto& c : schema.static_cat) known = known || c == group_by;
    if (!known) throw ConfigError("group_by '" + group_by + "' is not a static categorical");
  }
}

namespace {

Split split_from_name(const std::string& s, const std::string& origin) {
  if (s == "train") return Split::kTrain;
  if (s == "val") return Split::kVal;
  if (s == "test") return Split::kTest;
  throw ConfigError(origin + ": unknown split '" + s + "'");
}

}  // namespace

RunConfig run_config_from_json(const json& j, const std::string& origin) {
  RunConfig cfg;
  try {
    cfg.preset_name = j.value("preset", std::string("synth"));
    if (cfg.preset_name != "custom") {
      const Preset p = preset_by_name(cfg.preset_name);
      cfg.L = p.L;
      cfg.H = p.H;
      cfg.S = p.S;
      cfg.batch_size = p.batch_size;
      cfg.max_epochs = p.max_epochs;
      cfg.gamma = p.gamma;
      cfg.learning_rate = p.learning_rate;
      cfg.calibration.p = p.p;
      cfg.arch = p.arch;
    }

    const auto& jd = j.at("data");
    cfg.data_csv = jd.at("csv").get<std::string>();
    cfg.labels_csv = jd.value("labels", std::string());
    cfg.splits_csv = jd.value("splits", std::string());
    if (jd.contains("schema_file")) {
      cfg.schema = read_schema_json(jd.at("schema_file").get<std::string>());
    } else {
      cfg.schema = schema_from_json(jd.at("schema"), origin);
    }
    cfg.append_mask_context = jd.value("append_mask_context", cfg.append_mask_context);
    cfg.test_frac = jd.value("test_frac", cfg.test_frac);
    cfg.val_frac = jd.value("val_frac", cfg.val_frac);
    cfg.max_missing_frac = jd.value("max_missing_frac", cfg.max_missing_frac);

    if (j.contains("train")) {
      const auto& t = j.at("train");
      cfg.L = t.value("L", cfg.L);
      cfg.H = t.value("H", cfg.H);
      cfg.S = t.value("S", cfg.S);
      cfg.batch_size = t.value("batch_size", cfg.batch_size);
      cfg.max_epochs = t.value("max_epochs", cfg.max_epochs);
      cfg.patience = t.value("patience", cfg.patience);
      cfg.gamma = t.value("gamma", cfg.gamma);
      cfg.learning_rate = t.value("learning_rate", cfg.learning_rate);
    }
    if (j.contains("model")) {
      const auto& m = j.at("model");
      cfg.arch.kernel_size = m.value("kernel_size", cfg.arch.kernel_size);
      cfg.arch.use_gatv2 = m.value("use_gatv2", cfg.arch.use_gatv2);
      cfg.arch.gru_layers = m.value("gru_layers", cfg.arch.gru_layers);
      cfg.arch.gru_hidden = m.value("gru_hidden", cfg.arch.gru_hidden);
      cfg.arch.forecast_layers = m.value("forecast_layers", cfg.arch.forecast_layers);
      cfg.arch.forecast_hidden = m.value("forecast_hidden", cfg.arch.forecast_hidden);
      cfg.arch.recon_layers = m.value("recon_layers", cfg.arch.recon_layers);
      cfg.arch.recon_hidden = m.value("recon_hidden", cfg.arch.recon_hidden);
      cfg.arch.dropout = m.value("dropout", cfg.arch.dropout);
      cfg.arch.embed_dim = m.value("embed_dim", cfg.arch.embed_dim);
      cfg.arch.leaky_slope = m.value("leaky_slope", cfg.arch.leaky_slope);
      if (m.contains("context_blocks")) {
        cfg.arch.context_blocks =
            context_blocks_from_name(m.at("context_blocks").get<std::string>());
      }
      if (m.contains("context_mode")) {
        cfg.arch.context_mode = context_mode_from_name(m.at("context_mode").get<std::string>());
      }
    }
    if (j.contains("calibration")) {
      const auto& c = j.at("calibration");
      cfg.calibration.p = c.value("p", cfg.calibration.p);
      if (c.contains("method")) {
        const std::string m = c.at("method").get<std::string>();
        if (m == "exponential") cfg.calibration.method = ThresholdMethod::kExponential;
        else if (m == "pot") cfg.calibration.method = ThresholdMethod::kPot;
        else throw ConfigError(origin + ": unknown calibration method '" + m + "'");
      }
      cfg.calibration.pot_init_quantile =
          c.value("pot_init_quantile", cfg.calibration.pot_init_quantile);
      if (c.contains("priority_quantiles")) {
        cfg.calibration.priority_quantiles =
            c.at("priority_quantiles").get<std::vector<double>>();
      }
    }
    if (j.contains("scoring")) {
      const auto& s = j.at("scoring");
      cfg.score_stride = s.value("stride", cfg.score_stride);
      cfg.score_batch = s.value("batch_size", cfg.score_batch);
    }
    if (j.contains("evaluation")) {
      const auto& e = j.at("evaluation");
      if (e.contains("split")) {
        cfg.eval_split = split_from_name(e.at("split").get<std::string>(), origin);
      }
      cfg.random_baseline = e.value("random_baseline", cfg.random_baseline);
    }
    if (j.contains("alerting")) {
      const auto& a = j.at("alerting");
      cfg.group_by = a.value("group_by", cfg.group_by);
      cfg.maintenance_csv = a.value("maintenance_csv", cfg.maintenance_csv);
    }
    cfg.seed = j.value("seed", cfg.seed);
    cfg.out_dir = j.value("out_dir", cfg.out_dir);
  } catch (const json::exception& e) {
    throw ConfigError(origin + ": malformed config: " + e.what());
  }
  cfg.arch.L = cfg.L;
  cfg.arch.H = cfg.H;
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open config '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  json j;
  try {
    j = json::parse(ss.str());
  } catch (const json::exception& e) {
    throw ConfigError(path + ": invalid JSON: " + e.what());
  }
  RunConfig cfg = run_config_from_json(j, path);
  cfg.raw_text = ss.str();
  return cfg;
}

nlohmann::json resolved_json(const RunConfig& cfg) {
  return json{
      {"preset", cfg.preset_name},
      {"data",
       {{"csv", cfg.data_csv},
        {"labels", cfg.labels_csv},
        {"splits", cfg.splits_csv},
        {"schema", schema_to_json(cfg.schema)},
        {"append_mask_context", cfg.append_mask_context},
        {"test_frac", cfg.test_frac},
        {"val_frac", cfg.val_frac},
        {"max_missing_frac", cfg.max_missing_frac}}},
      {"train",
       {{"L", cfg.L},
        {"H", cfg.H},
        {"S", cfg.S},
        {"batch_size", cfg.batch_size},
        {"max_epochs", cfg.max_epochs},
        {"patience", cfg.patience},
        {"gamma", cfg.gamma},
        {"learning_rate", cfg.learning_rate}}},
      {"model",
       {{"kernel_size", cfg.arch.kernel_size},
        {"use_gatv2", cfg.arch.use_gatv2},
        {"gru_layers", cfg.arch.gru_layers},
        {"gru_hidden", cfg.arch.gru_hidden},
        {"forecast_layers", cfg.arch.forecast_layers},
        {"forecast_hidden", cfg.arch.forecast_hidden},
        {"recon_layers", cfg.arch.recon_layers},
        {"recon_hidden", cfg.arch.recon_hidden},
        {"dropout", cfg.arch.dropout},
        {"embed_dim", cfg.arch.embed_dim},
        {"leaky_slope", cfg.arch.leaky_slope},
        {"context_blocks", to_string(cfg.arch.context_blocks)},
        {"context_mode", to_string(cfg.arch.context_mode)}}},
      {"calibration",
       {{"p", cfg.calibration.p},
        {"method", std::string(threshold_method_name(cfg.calibration.method))},
        {"pot_init_quantile", cfg.calibration.pot_init_quantile},
        {"priority_quantiles", cfg.calibration.priority_quantiles}}},
      {"scoring", {{"stride", cfg.score_stride}, {"batch_size", cfg.score_batch}}},
      {"evaluation",
       {{"split", std::string(split_name(cfg.eval_split))},
        {"random_baseline", cfg.random_baseline}}},
      {"alerting", {{"group_by", cfg.group_by}, {"maintenance_csv", cfg.maintenance_csv}}},
      {"seed", cfg.seed},
      {"out_dir", cfg.out_dir}};
}

void snapshot_config(const RunConfig& cfg, const std::string& dir) {
  std::filesystem::create_directories(dir);
  if (!cfg.raw_text.empty()) {
    std::ofstream f(dir + "/config.input.json");
    if (!f) throw DataError("cannot write config snapshot in '" + dir + "'");
    f << cfg.raw_text;
  }
  std::ofstream f(dir + "/config.resolved.json");
  if (!f) throw DataError("cannot write config snapshot in '" + dir + "'");
  f << resolved_json(cfg).dump(2) << "\n";
}

LoadedData load_data(const RunConfig& cfg) {
  LoadedData out;
  out.ds = ingest_csv_file(cfg.data_csv, cfg.schema, cfg.append_mask_context);
  out.splits = cfg.splits_csv.empty()
                   ? split_timeline(out.ds, cfg.test_frac, cfg.val_frac)
                   : load_splits_file(cfg.splits_csv, out.ds);
  out.removed = filter_eligible(out.ds, out.splits, cfg.L, cfg.H, cfg.max_missing_frac);
  if (out.ds.nes.empty()) {
    throw DataError("no NE passes the eligibility filter (L=" + std::to_string(cfg.L) +
                    ", H=" + std::to_string(cfg.H) + ")");
  }
  return out;
}

ModelConfig finalize_model_config(const RunConfig& cfg, const TelemetryDataset& ds,
                                  const Scalers& sc) {
  ModelConfig arch = cfg.arch;
  arch.L = cfg.L;
  arch.H = cfg.H;
  arch.k = ds.k();
  arch.dyn_vocab.clear();
  for (int c = 0; c < sc.dyn_encoder.columns(); ++c) arch.dyn_vocab.push_back(sc.dyn_encoder.vocab(c));
  arch.static_vocab.clear();
  for (int c = 0; c < sc.static_encoder.columns(); ++c) {
    arch.static_vocab.push_back(sc.static_encoder.vocab(c));
  }
  arch.static_real_dim = ds.d_static_real();
  arch.validate();
  return arch;
}

void write_scalers_json(const std::string& path, const Scalers& sc) {
  json kpi = json::object();
  for (const auto& [ne_id, ranges] : sc.kpi) {
    json arr = json::array();
    for (const auto& r : ranges) arr.push_back({{"lo", r.lo}, {"hi", r.hi}});
    kpi[ne_id] = std::move(arr);
  }
  json static_real = json::array();
  for (const auto& r : sc.static_real) static_real.push_back({{"lo", r.lo}, {"hi", r.hi}});
  auto encoder_json = [](const OrdinalEncoder& enc) {
    json cols = json::array();
    for (const auto& m : enc.maps()) {
      json col = json::object();
      for (const auto& [value, code] : m) col[value] = code;
      cols.push_back(std::move(col));
    }
    return cols;
  };
  json doc{{"kpi", std::move(kpi)},
           {"static_real", std::move(static_real)},
           {"dyn_encoder", encoder_json(sc.dyn_encoder)},
           {"static_encoder", encoder_json(sc.static_encoder)}};
  std::ofstream f(path);
  if (!f) throw DataError("cannot write '" + path + "'");
  f << doc.dump(2) << "\n";
}

Scalers read_scalers_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open '" + path + "'");
  json doc;
  try {
    f >> doc;
  } catch (const json::exception& e) {
    throw DataError(path + ": invalid JSON: " + e.what());
  }
  Scalers sc;
  try {
    for (const auto& [ne_id, arr] : doc.at("kpi").items()) {
      std::vector<Scalers::Range> ranges;
      for (const auto& r : arr) ranges.push_back({r.at("lo").get<double>(), r.at("hi").get<double>()});
      sc.kpi[ne_id] = std::move(ranges);
    }
    for (const auto& r : doc.at("static_real")) {
      sc.static_real.push_back({r.at("lo").get<double>(), r.at("hi").get<double>()});
    }
    auto encoder_from = [&](const json& cols) {
      std::vector<std::map<std::string, int>> maps;
      for (const auto& col : cols) {
        std::map<std::string, int> m;
        for (const auto& [value, code] : col.items()) m[value] = code.get<int>();
        maps.push_back(std::move(m));
      }
      OrdinalEncoder enc;
      enc.set_maps(std::move(maps));
      return enc;
    };
    sc.dyn_encoder = encoder_from(doc.at("dyn_encoder"));
    sc.static_encoder = encoder_from(doc.at("static_encoder"));
  } catch (const json::exception& e) {
    throw DataError(path + ": malformed scalers: " + e.what());
  }
  return sc;
}

std::map<std::string, std::string> group_map(const RunConfig& cfg, const TelemetryDataset& ds) {
  std::map<std::string, std::string> groups;
  int col = -1;
  if (!cfg.group_by.empty()) {
    for (int c = 0; c < ds.d_static_cat(); ++c) {
      if (ds.schema.static_cat[static_cast<size_t>(c)] == cfg.group_by) col = c;
    }
    if (col < 0) throw ConfigError("group_by '" + cfg.group_by + "' not found in dataset schema");
  }
  for (const auto& ne : ds.nes) {
    groups[ne.ne_id] =
        col < 0 ? ne.ne_id : ne.static_cat_raw[static_cast<size_t>(col)];
  }
  return groups;
}

}  // namespace tadkit
