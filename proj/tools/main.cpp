// tadkit command line tool. One subcommand per pipeline stage so each
// stage's outputs can be inspected, cached, and re-fed independently:
//
//   synth      generate a seeded telemetry corpus with injected anomalies
//   train      fit the detector and write a checkpoint
//   calibrate  fit per-(NE, KPI) thresholds and severity bins
//   score      turn residuals into flag decisions
//   evaluate   score decisions against labels (event + pointwise views)
//   report     roll decisions up into an alert stream
//   ablate     seed-sweep architecture variants and compare
//
// Every command echoes its resolved configuration into the output
// directory, writes deterministic artifacts (re-running with identical
// inputs and seed reproduces them byte for byte), and reports failures as
// one JSON object on stderr with a nonzero exit code.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tadkit/alerting.hpp"
#include "tadkit/calibration.hpp"
#include "tadkit/checkpoint.hpp"
#include "tadkit/csv.hpp"
#include "tadkit/dataset.hpp"
#include "tadkit/errors.hpp"
#include "tadkit/metrics.hpp"
#include "tadkit/model.hpp"
#include "tadkit/pipeline.hpp"
#include "tadkit/report.hpp"
#include "tadkit/residuals.hpp"
#include "tadkit/runconfig.hpp"
#include "tadkit/stats.hpp"
#include "tadkit/synthgen.hpp"
#include "tadkit/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

bool g_quiet = false;

void say(const std::string& line) {
  if (!g_quiet) std::cout << line << "\n";
}

// Default output directory: <root>/<command>, where the root comes from
// TADKIT_OUT_ROOT (falling back to "out"). An explicit --out always wins.
std::string default_out(const std::string& command) {
  const char* root = std::getenv("TADKIT_OUT_ROOT");
  std::string base = (root && *root) ? root : "out";
  return base + "/" + command;
}

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw tadkit::DataError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// Options shared by the config-driven commands. seed/preset/out given on
// the command line override the config file.
struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  std::string preset;
  std::int64_t seed = 0;
  CLI::Option* seed_opt = nullptr;

  bool has_seed() const { return seed_opt && seed_opt->count() > 0; }
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config_path, "Run configuration JSON")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", o.out_dir, "Output directory");
  cmd->add_option("--preset", o.preset, "Override the config's preset")
      ->check(CLI::IsMember({"telco", "ran", "epc", "synth", "custom"}));
  o.seed_opt = cmd->add_option("--seed", o.seed, "Override the config's seed");
  cmd->fallthrough();
}

tadkit::RunConfig load_config(const CommonOpts& o, const std::string& command) {
  const std::string text = slurp(o.config_path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw tadkit::ConfigError(o.config_path + ": invalid JSON: " + e.what());
  }
  // The preset flag replaces the config's preset *before* resolution so
  // explicit config overrides still win, same as a preset named in the file.
  if (!o.preset.empty()) j["preset"] = o.preset;
  tadkit::RunConfig cfg = tadkit::run_config_from_json(j, o.config_path);
  cfg.raw_text = text;
  if (o.has_seed()) cfg.seed = static_cast<std::uint64_t>(o.seed);
  if (!o.out_dir.empty()) {
    cfg.out_dir = o.out_dir;
  } else if (!j.contains("out_dir")) {
    cfg.out_dir = default_out(command);
  }
  return cfg;
}

// Dataset + split loading with the removal log echoed to the output dir.
tadkit::LoadedData load_data_logged(const tadkit::RunConfig& cfg) {
  tadkit::LoadedData data = tadkit::load_data(cfg);
  if (!data.removed.empty()) {
    tadkit::CsvTable t;
    t.header = {"ne_id", "reason"};
    for (const auto& r : data.removed) t.rows.push_back({r.ne_id, r.reason});
    tadkit::write_csv(cfg.out_dir + "/removed_nes.csv", t);
    say("dropped " + std::to_string(data.removed.size()) + " NE(s); see removed_nes.csv");
  }
  return data;
}

// The checkpoint must have been trained on a dataset with the same KPI
// set, categorical vocabularies, and window geometry as the one now
// loaded, otherwise its residuals are meaningless.
void check_model_dataset(const tadkit::Model& model, const tadkit::ModelConfig& derived) {
  const tadkit::ModelConfig& mc = model.config();
  auto fail = [](const std::string& what) {
    throw tadkit::ContractError("checkpoint does not match the dataset: " + what);
  };
  if (mc.L != derived.L || mc.H != derived.H) fail("window geometry (L,H) differs");
  if (mc.k != derived.k) fail("KPI count differs");
  if (mc.dyn_vocab != derived.dyn_vocab) fail("dynamic categorical vocabularies differ");
  if (mc.static_vocab != derived.static_vocab) fail("static categorical vocabularies differ");
  if (mc.static_real_dim != derived.static_real_dim) fail("static real width differs");
}

std::string sibling(const std::string& path, const std::string& name) {
  fs::path p(path);
  return (p.parent_path() / name).string();
}

json priority_bins_json(const tadkit::PriorityBinning& bins, const tadkit::TelemetryDataset& ds) {
  json units = json::array();
  for (const auto& u : bins.units) {
    units.push_back({{"ne_id", ds.nes[static_cast<size_t>(u.ne)].ne_id},
                     {"feature", ds.schema.dynamic_real[static_cast<size_t>(u.feature)]},
                     {"edges", std::vector<double>(u.edges.begin(), u.edges.end())},
                     {"degenerate", u.degenerate},
                     {"pooled_fallback", u.pooled_fallback}});
  }
  return json{{"quantiles", bins.quantiles}, {"units", std::move(units)}};
}

// ---------------------------------------------------------------- synth

struct SynthOpts {
  std::string spec_path;
  std::string out_dir;
  std::int64_t seed = 0;
  bool has_seed = false;
};

void run_synth(const SynthOpts& o) {
  tadkit::SynthSpec spec = tadkit::synth_spec_from_json_file(o.spec_path);
  if (o.has_seed) spec.seed = static_cast<std::uint64_t>(o.seed);
  spec.validate();
  const std::string dir = o.out_dir.empty() ? default_out("synth") : o.out_dir;
  fs::create_directories(dir);

  tadkit::SynthOutput out = tadkit::generate(spec);
  tadkit::write_text_file(dir + "/spec.resolved.json", tadkit::synth_spec_to_json(spec) + "\n");
  tadkit::write_csv(dir + "/dataset.csv", out.data);
  tadkit::write_csv(dir + "/labels.csv", out.labels);
  tadkit::write_schema_json(dir + "/schema.json", out.schema);

  say("synth: " + std::to_string(spec.n_nes) + " NEs x " + std::to_string(spec.T) + " rows x " +
      std::to_string(spec.k) + " KPIs, " + std::to_string(spec.anomalies.size()) +
      " injected anomalies -> " + dir);
}

// ---------------------------------------------------------------- train

void run_train(const CommonOpts& o) {
  tadkit::RunConfig cfg = load_config(o, "train");
  tadkit::snapshot_config(cfg, cfg.out_dir);
  tadkit::LoadedData data = load_data_logged(cfg);

  tadkit::Scalers sc = tadkit::fit_scalers(data.ds, data.splits, tadkit::EncoderFit::kFullDataset);
  tadkit::apply_scalers(data.ds, sc);
  tadkit::ModelConfig arch = tadkit::finalize_model_config(cfg, data.ds, sc);

  auto windows = tadkit::enumerate_windows(data.ds, data.splits, cfg.L, cfg.H, cfg.S);
  tadkit::TrainOptions opts;
  opts.epochs = cfg.max_epochs;
  opts.batch_size = cfg.batch_size;
  opts.lr = cfg.learning_rate;
  opts.gamma = cfg.gamma;
  opts.patience = cfg.patience;

  say("train: " + std::to_string(data.ds.nes.size()) + " NEs, " +
      std::to_string(tadkit::windows_of_split(windows, tadkit::Split::kTrain).size()) +
      " train / " + std::to_string(tadkit::windows_of_split(windows, tadkit::Split::kVal).size()) +
      " val windows, seed " + std::to_string(cfg.seed));

  tadkit::TrainResult result = tadkit::train_model(data.ds, windows, arch, opts, cfg.seed);

  tadkit::save_checkpoint(cfg.out_dir + "/checkpoint.bin", result.model);
  tadkit::write_scalers_json(cfg.out_dir + "/scalers.json", sc);
  tadkit::write_training_log(cfg.out_dir + "/training_log.csv", result.run);

  std::ostringstream line;
  line << "train: best epoch " << result.run.best_epoch << " of "
       << result.run.epochs.size() << ", val total " << result.run.best_val_total << " -> "
       << cfg.out_dir;
  say(line.str());
}

// ------------------------------------------------------------ calibrate

struct ModelOpts {
  std::string model_path;
  std::string scalers_path;
};

void add_model_opts(CLI::App* cmd, ModelOpts& o) {
  cmd->add_option("--model", o.model_path, "Model checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--scalers", o.scalers_path,
                  "Scaler JSON (default: scalers.json next to the checkpoint)");
}

struct ScoredModel {
  tadkit::LoadedData data;
  tadkit::Model model;
  tadkit::ResidualFrame frame;
};

ScoredModel score_checkpoint(const tadkit::RunConfig& cfg, const ModelOpts& mo) {
  tadkit::LoadedData data = load_data_logged(cfg);
  const std::string scalers_path =
      mo.scalers_path.empty() ? sibling(mo.model_path, "scalers.json") : mo.scalers_path;
  tadkit::Scalers sc = tadkit::read_scalers_json(scalers_path);
  tadkit::apply_scalers(data.ds, sc);
  tadkit::Model model = tadkit::load_checkpoint(mo.model_path);
  check_model_dataset(model, tadkit::finalize_model_config(cfg, data.ds, sc));
  tadkit::ResidualFrame frame =
      tadkit::compute_residuals(model, data.ds, data.splits, cfg.score_stride, cfg.score_batch);
  return {std::move(data), std::move(model), std::move(frame)};
}

void run_calibrate(const CommonOpts& o, const ModelOpts& mo) {
  tadkit::RunConfig cfg = load_config(o, "calibrate");
  tadkit::snapshot_config(cfg, cfg.out_dir);
  ScoredModel sm = score_checkpoint(cfg, mo);
  const tadkit::TelemetryDataset& ds = sm.data.ds;

  tadkit::ThresholdTable thresholds =
      cfg.calibration.method == tadkit::ThresholdMethod::kPot
          ? tadkit::fit_pot(sm.frame, ds, cfg.calibration)
          : tadkit::fit_exponential(sm.frame, ds, cfg.calibration);
  tadkit::PriorityBinning bins =
      tadkit::fit_priority_bins(sm.frame, ds, cfg.calibration.priority_quantiles);
  tadkit::AicReport aic = tadkit::compare_exp_gamma(sm.frame);

  tadkit::write_residuals_csv(cfg.out_dir + "/residuals.csv", sm.frame, ds);
  tadkit::write_thresholds_csv(cfg.out_dir + "/thresholds.csv", thresholds, ds);
  tadkit::write_json_file(cfg.out_dir + "/priority_bins.json", priority_bins_json(bins, ds));

  json aic_units = json::array();
  for (const auto& u : aic.units) {
    aic_units.push_back({{"ne_id", ds.nes[static_cast<size_t>(u.ne)].ne_id},
                         {"feature", ds.schema.dynamic_real[static_cast<size_t>(u.feature)]},
                         {"n", u.n},
                         {"aic_exponential", u.aic_exponential},
                         {"aic_gamma", u.aic_gamma},
                         {"gamma_shape", u.gamma_shape},
                         {"gamma_scale", u.gamma_scale},
                         {"gamma_wins", u.gamma_wins},
                         {"small_sample", u.small_sample}});
  }
  tadkit::write_json_file(
      cfg.out_dir + "/aic_report.json",
      json{{"exponential_win_fraction", aic.exponential_win_fraction},
           {"units", std::move(aic_units)}});

  int pooled = 0, degenerate = 0, pot_fb = 0;
  for (const auto& r : thresholds.records) {
    pooled += r.pooled_fallback;
    degenerate += r.degenerate;
    pot_fb += r.pot_fallback;
  }
  std::ostringstream line;
  line << "calibrate: " << thresholds.records.size() << " units, method "
       << tadkit::threshold_method_name(cfg.calibration.method) << ", p=" << thresholds.p
       << " (" << pooled << " pooled, " << degenerate << " degenerate, " << pot_fb
       << " POT fallbacks) -> " << cfg.out_dir;
  say(line.str());
}

// ---------------------------------------------------------------- score

void run_score(const CommonOpts& o, const ModelOpts& mo, const std::string& thresholds_path,
               const std::string& split_arg) {
  tadkit::RunConfig cfg = load_config(o, "score");
  tadkit::snapshot_config(cfg, cfg.out_dir);
  ScoredModel sm = score_checkpoint(cfg, mo);

  tadkit::ThresholdTable thresholds = tadkit::read_thresholds_csv(thresholds_path, sm.data.ds);
  std::optional<tadkit::Split> split;
  if (split_arg == "train") split = tadkit::Split::kTrain;
  else if (split_arg == "val") split = tadkit::Split::kVal;
  else if (split_arg == "test") split = tadkit::Split::kTest;
  // "all" leaves the optional empty: every split is scored.

  tadkit::DecisionFrame decisions = tadkit::flag_anomalies(sm.frame, thresholds, split);
  tadkit::write_residuals_csv(cfg.out_dir + "/residuals.csv", sm.frame, sm.data.ds);
  tadkit::write_decisions_csv(cfg.out_dir + "/decisions.csv", decisions, sm.data.ds);

  std::int64_t flagged = 0;
  for (const auto& d : decisions.decisions) flagged += d.flagged;
  std::ostringstream line;
  line << "score: " << decisions.decisions.size() << " cells on split '" << split_arg << "', "
       << flagged << " flagged";
  if (!decisions.decisions.empty()) {
    line << " (rate " << static_cast<double>(flagged) / decisions.decisions.size() << ")";
  }
  line << " -> " << cfg.out_dir;
  say(line.str());
}

// ------------------------------------------------------------- evaluate

void run_evaluate(const CommonOpts& o, const std::string& decisions_path) {
  tadkit::RunConfig cfg = load_config(o, "evaluate");
  if (cfg.labels_csv.empty()) {
    throw tadkit::ConfigError("evaluate needs ground truth: set data.labels in the config");
  }
  tadkit::snapshot_config(cfg, cfg.out_dir);
  tadkit::LoadedData data = load_data_logged(cfg);

  auto labels = tadkit::read_labels_file(cfg.labels_csv, data.ds);
  tadkit::DecisionFrame decisions = tadkit::read_decisions_csv(decisions_path, data.ds);
  auto streams = tadkit::build_streams(decisions, labels, data.ds, data.splits, cfg.eval_split);

  std::vector<tadkit::NamedReport> models;
  models.push_back({"model", tadkit::evaluate_streams(streams)});
  if (cfg.random_baseline) {
    models.push_back(
        {"random", tadkit::evaluate_streams(tadkit::random_baseline(streams, cfg.seed))});
  }

  json jm = json::object();
  for (const auto& m : models) jm[m.name] = tadkit::metric_report_to_json(m.report);
  tadkit::write_json_file(cfg.out_dir + "/metrics.json",
                          json{{"split", std::string(tadkit::split_name(cfg.eval_split))},
                               {"models", std::move(jm)}});

  std::ostringstream tables;
  tables << "Event metrics (split: " << tadkit::split_name(cfg.eval_split) << ")\n\n"
         << tadkit::render_per_feature_table(models, true) << "\n"
         << tadkit::render_aggregate_table(models, true) << "\n"
         << "Pointwise metrics (split: " << tadkit::split_name(cfg.eval_split) << ")\n\n"
         << tadkit::render_per_feature_table(models, false) << "\n"
         << tadkit::render_aggregate_table(models, false);
  tadkit::write_text_file(cfg.out_dir + "/tables.txt", tables.str());

  const tadkit::MetricReport& r = models.front().report;
  std::ostringstream line;
  line << "evaluate: event F1 macro " << r.macro_affiliation.f1 << " / micro "
       << r.micro_affiliation.f1 << "; pointwise F1 macro " << r.macro_pointwise.f1 << " / micro "
       << r.micro_pointwise.f1 << " -> " << cfg.out_dir;
  say(line.str());
}

// --------------------------------------------------------------- report

void run_report(const CommonOpts& o, const std::string& decisions_path,
                const std::string& residuals_path) {
  tadkit::RunConfig cfg = load_config(o, "report");
  tadkit::snapshot_config(cfg, cfg.out_dir);
  tadkit::LoadedData data = load_data_logged(cfg);

  tadkit::ResidualFrame frame = tadkit::read_residuals_csv(residuals_path, data.ds);
  tadkit::DecisionFrame decisions = tadkit::read_decisions_csv(decisions_path, data.ds);
  tadkit::PriorityBinning bins =
      tadkit::fit_priority_bins(frame, data.ds, cfg.calibration.priority_quantiles);
  auto groups = tadkit::group_map(cfg, data.ds);
  std::vector<tadkit::MaintenanceWindow> maintenance;
  if (!cfg.maintenance_csv.empty()) {
    maintenance = tadkit::read_maintenance_csv(cfg.maintenance_csv);
  }

  auto alerts = tadkit::aggregate_alerts(decisions, bins, groups, maintenance, data.ds);
  tadkit::write_alerts_csv(cfg.out_dir + "/alerts.csv", alerts);
  tadkit::write_alerts_json(cfg.out_dir + "/alerts.json", alerts);

  std::int64_t firing = 0, suppressed = 0;
  for (const auto& a : alerts) {
    firing += a.aggregated_count > 0;
    suppressed += a.aggregated_count > 0 && a.in_maintenance;
  }
  std::ostringstream line;
  line << "report: " << alerts.size() << " (group, timestamp) rows, " << firing
       << " with flags (" << suppressed << " inside maintenance) -> " << cfg.out_dir;
  say(line.str());
}

// --------------------------------------------------------------- ablate

// One architecture variant of the configured baseline.
struct Variant {
  std::string name;
  tadkit::ModelConfig arch;
};

std::vector<Variant> build_variants(const tadkit::ModelConfig& base,
                                    const std::vector<std::string>& axes) {
  std::vector<Variant> out;
  out.push_back({"baseline", base});
  for (const auto& axis : axes) {
    if (axis == "gat_version") {
      Variant v{base.use_gatv2 ? "gatv1" : "gatv2", base};
      v.arch.use_gatv2 = !base.use_gatv2;
      out.push_back(std::move(v));
    } else if (axis == "context_blocks") {
      for (auto b : {tadkit::ContextBlocks::kNone, tadkit::ContextBlocks::kBlock1,
                     tadkit::ContextBlocks::kBlock2, tadkit::ContextBlocks::kBoth}) {
        if (b == base.context_blocks) continue;
        Variant v{"ctx_" + tadkit::to_string(b), base};
        v.arch.context_blocks = b;
        out.push_back(std::move(v));
      }
    } else if (axis == "context_mode") {
      for (auto m : {tadkit::ContextMode::kFull, tadkit::ContextMode::kDynamicOnly,
                     tadkit::ContextMode::kStaticOnly}) {
        if (m == base.context_mode) continue;
        Variant v{"mode_" + tadkit::to_string(m), base};
        v.arch.context_mode = m;
        out.push_back(std::move(v));
      }
    } else {
      throw tadkit::ConfigError("unknown ablation axis '" + axis + "'");
    }
  }
  return out;
}

void run_ablate(const CommonOpts& o, int n_seeds, const std::vector<std::string>& axes) {
  tadkit::RunConfig cfg = load_config(o, "ablate");
  tadkit::snapshot_config(cfg, cfg.out_dir);
  tadkit::LoadedData data = load_data_logged(cfg);

  tadkit::Scalers sc = tadkit::fit_scalers(data.ds, data.splits, tadkit::EncoderFit::kFullDataset);
  tadkit::apply_scalers(data.ds, sc);
  tadkit::ModelConfig base = tadkit::finalize_model_config(cfg, data.ds, sc);
  auto windows = tadkit::enumerate_windows(data.ds, data.splits, cfg.L, cfg.H, cfg.S);

  std::vector<Variant> variants = build_variants(base, axes);

  tadkit::TrainOptions opts;
  opts.epochs = cfg.max_epochs;
  opts.batch_size = cfg.batch_size;
  opts.lr = cfg.learning_rate;
  opts.gamma = cfg.gamma;
  opts.patience = cfg.patience;

  tadkit::AblationReport report;
  report.baseline = 0;
  for (int i = 0; i < n_seeds; ++i) report.seeds.push_back(cfg.seed + static_cast<std::uint64_t>(i));
  for (const auto& v : variants) report.variants.push_back({v.name, {}, {}, {}, {}});

  // Each (variant, seed) cell is an independent training run; they are
  // executed sequentially so the whole sweep is one deterministic stream.
  for (std::size_t si = 0; si < report.seeds.size(); ++si) {
    std::vector<tadkit::LabelKey> baseline_keys;
    for (std::size_t vi = 0; vi < variants.size(); ++vi) {
      const std::uint64_t seed = report.seeds[si];
      say("ablate: seed " + std::to_string(seed) + ", variant " + variants[vi].name);
      tadkit::TrainResult res = tadkit::train_model(data.ds, windows, variants[vi].arch, opts, seed);
      tadkit::AblationVariant& slot = report.variants[vi];
      slot.val_total_min.push_back(res.run.min_val_total());
      slot.val_forecast_min.push_back(res.run.min_val_forecast());
      slot.val_recon_min.push_back(res.run.min_val_recon());

      tadkit::ResidualFrame frame = tadkit::compute_residuals(res.model, data.ds, data.splits,
                                                              cfg.score_stride, cfg.score_batch);
      tadkit::ThresholdTable thresholds =
          cfg.calibration.method == tadkit::ThresholdMethod::kPot
              ? tadkit::fit_pot(frame, data.ds, cfg.calibration)
              : tadkit::fit_exponential(frame, data.ds, cfg.calibration);
      auto keys = tadkit::decision_keys(tadkit::flag_anomalies(frame, thresholds), data.ds);
      if (vi == 0) {
        baseline_keys = std::move(keys);
      } else {
        slot.jaccard_vs_baseline.push_back(tadkit::jaccard_overlap(keys, baseline_keys));
      }
    }
  }

  tadkit::write_json_file(cfg.out_dir + "/ablation.json", tadkit::ablation_report_to_json(report));
  const std::string minima = tadkit::render_ablation_minima(report);
  const std::string deltas = tadkit::render_ablation_deltas(report);
  tadkit::write_text_file(cfg.out_dir + "/ablation_minima.txt", minima);
  tadkit::write_text_file(cfg.out_dir + "/ablation_deltas.txt", deltas);
  say("");
  say(minima);
  say(deltas);
  say("ablate: " + std::to_string(variants.size()) + " variants x " + std::to_string(n_seeds) +
      " seeds -> " + cfg.out_dir);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multivariate KPI anomaly detection for telecom telemetry"};
  app.set_version_flag("--version", "tadkit 1.0.0");
  app.add_flag("--quiet", g_quiet, "Suppress progress output");
  app.require_subcommand(1);

  SynthOpts synth;
  auto* cmd_synth = app.add_subcommand("synth", "Generate a synthetic telemetry corpus");
  cmd_synth->add_option("--spec", synth.spec_path, "Generator spec JSON")
      ->required()
      ->check(CLI::ExistingFile);
  cmd_synth->add_option("--out", synth.out_dir, "Output directory");
  auto* synth_seed = cmd_synth->add_option("--seed", synth.seed, "Override the spec's seed");
  cmd_synth->fallthrough();

  CommonOpts train;
  auto* cmd_train = app.add_subcommand("train", "Train the detector");
  add_common(cmd_train, train);

  CommonOpts calibrate;
  ModelOpts calibrate_model;
  auto* cmd_calibrate = app.add_subcommand("calibrate", "Fit thresholds and severity bins");
  add_common(cmd_calibrate, calibrate);
  add_model_opts(cmd_calibrate, calibrate_model);

  CommonOpts score;
  ModelOpts score_model;
  std::string thresholds_path;
  std::string score_split = "test";
  auto* cmd_score = app.add_subcommand("score", "Flag anomalies against fitted thresholds");
  add_common(cmd_score, score);
  add_model_opts(cmd_score, score_model);
  cmd_score->add_option("--thresholds", thresholds_path, "Threshold CSV from calibrate")
      ->required()
      ->check(CLI::ExistingFile);
  cmd_score->add_option("--split", score_split, "Split to score")
      ->check(CLI::IsMember({"train", "val", "test", "all"}));

  CommonOpts evaluate;
  std::string decisions_path;
  auto* cmd_evaluate = app.add_subcommand("evaluate", "Score decisions against labels");
  add_common(cmd_evaluate, evaluate);
  cmd_evaluate->add_option("--decisions", decisions_path, "Decision CSV from score")
      ->required()
      ->check(CLI::ExistingFile);

  CommonOpts report;
  std::string report_decisions;
  std::string report_residuals;
  auto* cmd_report = app.add_subcommand("report", "Aggregate decisions into an alert stream");
  add_common(cmd_report, report);
  cmd_report->add_option("--decisions", report_decisions, "Decision CSV from score")
      ->required()
      ->check(CLI::ExistingFile);
  cmd_report->add_option("--residuals", report_residuals, "Residual CSV from score/calibrate")
      ->required()
      ->check(CLI::ExistingFile);

  CommonOpts ablate;
  int ablate_seeds = 3;
  std::vector<std::string> ablate_axes = {"gat_version", "context_blocks", "context_mode"};
  auto* cmd_ablate = app.add_subcommand("ablate", "Seed-sweep architecture variants");
  add_common(cmd_ablate, ablate);
  cmd_ablate->add_option("--seeds", ablate_seeds, "Number of consecutive seeds")
      ->check(CLI::PositiveNumber);
  cmd_ablate
      ->add_option("--axes", ablate_axes,
                   "Variant axes: gat_version, context_blocks, context_mode")
      ->delimiter(',');

  try {
    app.parse(argc, argv);

    if (cmd_synth->parsed()) {
      synth.has_seed = synth_seed->count() > 0;
      run_synth(synth);
    } else if (cmd_train->parsed()) {
      run_train(train);
    } else if (cmd_calibrate->parsed()) {
      run_calibrate(calibrate, calibrate_model);
    } else if (cmd_score->parsed()) {
      run_score(score, score_model, thresholds_path, score_split);
    } else if (cmd_evaluate->parsed()) {
      run_evaluate(evaluate, decisions_path);
    } else if (cmd_report->parsed()) {
      run_report(report, report_decisions, report_residuals);
    } else if (cmd_ablate->parsed()) {
      run_ablate(ablate, ablate_seeds, ablate_axes);
    }
    return 0;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
    std::cerr << json{{"error", {{"type", "usage_error"}, {"message", e.what()}}}}.dump() << "\n";
    return 64;
  } catch (const tadkit::Error& e) {
    std::cerr << json{{"error", {{"type", e.type()}, {"message", e.what()}}}}.dump() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", {{"type", "internal_error"}, {"message", e.what()}}}}.dump()
              << "\n";
    return 3;
  }
}
