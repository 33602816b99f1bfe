#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "tadkit/csv.hpp"
#include "tadkit/dataset.hpp"
#include "tadkit/errors.hpp"
#include "tadkit/pipeline.hpp"
#include "tadkit/trainer.hpp"

#include "support/tmpdir.hpp"

using tadkit::ModelConfig;
using tadkit::Split;
using tadkit::TelemetryDataset;
using tadkit::Tensor;
using tadkit::TrainOptions;
using tadkit::WindowRef;

namespace {

struct Prepared {
  TelemetryDataset ds;
  tadkit::SplitTable splits;
  tadkit::Scalers sc;
  std::vector<WindowRef> windows;
  ModelConfig cfg;
};

// One NE, one KPI: a clean daily sinusoid. Easy to forecast and to
// reconstruct, so training quality is measurable against a tight bound.
Prepared prep_sine(int T, int L, int H) {
  tadkit::DatasetSchema schema;
  schema.dynamic_real = {"a"};
  schema.dynamic_cat = {"hour"};
  schema.static_cat = {"site"};
  std::string csv = "ne_id,timestamp,a,hour,site\n";
  const std::int64_t t0 = 1704067200;
  for (int t = 0; t < T; ++t) {
    double v = std::sin(2.0 * M_PI * t / 24.0);
    csv += "s1," + std::to_string(t0 + 3600LL * t) + "," + tadkit::format_double(v) + "," +
           std::to_string(t % 24) + ",alpha\n";
  }
  Prepared p;
  p.ds = tadkit::ingest_csv(tadkit::parse_csv(csv, "test"), schema, false);
  p.splits = tadkit::split_timeline(p.ds, 0.2, 0.2);
  p.sc = tadkit::fit_scalers(p.ds, p.splits, tadkit::EncoderFit::kTrainOnly);
  tadkit::apply_scalers(p.ds, p.sc);
  p.windows = tadkit::enumerate_windows(p.ds, p.splits, L, H, 1);

  ModelConfig c;
  c.L = L;
  c.H = H;
  c.k = 1;
  c.kernel_size = 3;
  c.gru_hidden = 16;
  c.forecast_hidden = 16;
  c.recon_hidden = 16;
  c.embed_dim = 2;
  c.dyn_vocab = {p.sc.dyn_encoder.vocab(0)};
  c.static_vocab = {p.sc.static_encoder.vocab(0)};
  c.static_real_dim = 0;
  p.cfg = c;
  return p;
}

}  // namespace

TEST_CASE("loss terms are pooled root-mean-square errors") {
  tadkit::WindowBatch batch;
  batch.inputs = Tensor({1, 2, 1}, {3, 4});
  batch.targets = Tensor({1, 2, 1}, {0, 1});

  tadkit::Graph g;
  tadkit::ForwardResult fwd;
  fwd.forecast = g.constant(Tensor({1, 2, 1}, {1, 3}));  // errors 1, 2
  fwd.recon = g.constant(Tensor({1, 2, 1}, {0, 0}));     // errors 3, 4
  auto loss = tadkit::compute_loss(g, fwd, batch, 0.5);

  CHECK(g.value(loss.forecast).values()[0] == doctest::Approx(std::sqrt(2.5)).epsilon(1e-12));
  CHECK(g.value(loss.recon).values()[0] == doctest::Approx(std::sqrt(12.5)).epsilon(1e-12));
  CHECK(g.value(loss.total).values()[0] ==
        doctest::Approx(std::sqrt(2.5) + 0.5 * std::sqrt(12.5)).epsilon(1e-12));

  SUBCASE("perfect prediction costs exactly zero") {
    tadkit::Graph g2;
    tadkit::ForwardResult f2;
    f2.forecast = g2.constant(batch.targets);
    f2.recon = g2.constant(batch.inputs);
    auto l2 = tadkit::compute_loss(g2, f2, batch, 1.0);
    CHECK(g2.value(l2.total).values()[0] == 0.0);
  }
}

TEST_CASE("TrainRun minima") {
  tadkit::TrainRun run;
  run.gamma = 2.0;
  run.epochs.push_back({0, 0, 0.5, 0.4});
  run.epochs.push_back({0, 0, 0.3, 0.6});
  run.epochs.push_back({0, 0, 0.6, 0.1});
  CHECK(run.min_val_forecast() == 0.3);
  CHECK(run.min_val_recon() == 0.1);
  // totals: 1.3, 1.5, 0.8
  CHECK(run.min_val_total() == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("training contract errors") {
  Prepared p = prep_sine(120, 8, 2);
  TrainOptions opts;

  SUBCASE("epochs must be positive") {
    opts.epochs = 0;
    CHECK_THROWS_AS(tadkit::train_model(p.ds, p.windows, p.cfg, opts, 1), tadkit::ConfigError);
  }
  SUBCASE("validation windows are required") {
    auto train_only = tadkit::windows_of_split(p.windows, Split::kTrain);
    CHECK_THROWS_AS(tadkit::train_model(p.ds, train_only, p.cfg, opts, 1), tadkit::ContractError);
  }
  SUBCASE("training windows are required") {
    auto val_only = tadkit::windows_of_split(p.windows, Split::kVal);
    CHECK_THROWS_AS(tadkit::train_model(p.ds, val_only, p.cfg, opts, 1), tadkit::ContractError);
  }
}

TEST_CASE("training is deterministic in the seed") {
  Prepared p = prep_sine(120, 8, 2);
  TrainOptions opts;
  opts.epochs = 3;
  opts.batch_size = 32;

  auto a = tadkit::train_model(p.ds, p.windows, p.cfg, opts, 7);
  auto b = tadkit::train_model(p.ds, p.windows, p.cfg, opts, 7);
  auto c = tadkit::train_model(p.ds, p.windows, p.cfg, opts, 8);

  REQUIRE(a.run.epochs.size() == b.run.epochs.size());
  for (size_t e = 0; e < a.run.epochs.size(); ++e) {
    CHECK(a.run.epochs[e].val_forecast == b.run.epochs[e].val_forecast);
    CHECK(a.run.epochs[e].train_recon == b.run.epochs[e].train_recon);
  }
  CHECK(a.model.param("conv1.w").values() == b.model.param("conv1.w").values());
  CHECK(a.model.param("conv1.w").values() != c.model.param("conv1.w").values());
}

TEST_CASE("training learns a clean sinusoid") {
  Prepared p = prep_sine(240, 8, 2);
  TrainOptions opts;
  opts.epochs = 60;
  opts.batch_size = 32;
  opts.lr = 3e-3;
  opts.patience = 60;

  auto res = tadkit::train_model(p.ds, p.windows, p.cfg, opts, 5);
  REQUIRE(!res.run.epochs.empty());

  // Training must actually move: the best epoch beats the first by a wide
  // margin, and on clean periodic data both heads end up tight.
  double first = res.run.epochs.front().val_total(opts.gamma);
  CHECK(res.run.best_val_total < 0.5 * first);
  CHECK(res.run.min_val_forecast() < 0.1);
  CHECK(res.run.min_val_recon() < 0.1);
  CHECK(res.run.best_epoch >= 0);
  CHECK(res.run.best_val_total ==
        doctest::Approx(res.run.min_val_total()).epsilon(1e-12));
}

TEST_CASE("early stopping and best-epoch restore") {
  Prepared p = prep_sine(160, 8, 2);
  TrainOptions opts;
  opts.epochs = 50;
  opts.batch_size = 16;
  opts.lr = 0.5;  // deliberately wild so validation loss bounces
  opts.patience = 2;

  auto res = tadkit::train_model(p.ds, p.windows, p.cfg, opts, 11);
  CHECK(res.run.epochs.size() < 50);  // stopped early

  // The best epoch is the argmin of the recorded totals.
  int argmin = 0;
  for (size_t e = 1; e < res.run.epochs.size(); ++e) {
    if (res.run.epochs[e].val_total(opts.gamma) <
        res.run.epochs[argmin].val_total(opts.gamma)) {
      argmin = static_cast<int>(e);
    }
  }
  CHECK(res.run.best_epoch == argmin);

  // The returned parameters are the best epoch's, not the last: recomputing
  // the pooled validation losses reproduces that epoch's row exactly.
  auto val_refs = tadkit::windows_of_split(p.windows, Split::kVal);
  auto batches = tadkit::plan_batches(val_refs, opts.batch_size, 0, false);
  double sse_f = 0, n_f = 0, sse_r = 0, n_r = 0;
  for (const auto& refs : batches) {
    auto batch = tadkit::build_batch(p.ds, refs, p.cfg.L, p.cfg.H);
    tadkit::Graph g;
    auto fwd = res.model.forward(g, batch, false);
    auto loss = tadkit::compute_loss(g, fwd, batch, opts.gamma);
    double rf = g.value(loss.forecast).values()[0];
    double rr = g.value(loss.recon).values()[0];
    sse_f += rf * rf * batch.B * p.cfg.H * p.cfg.k;
    n_f += batch.B * p.cfg.H * p.cfg.k;
    sse_r += rr * rr * batch.B * p.cfg.L * p.cfg.k;
    n_r += batch.B * p.cfg.L * p.cfg.k;
  }
  const auto& best = res.run.epochs[static_cast<size_t>(res.run.best_epoch)];
  CHECK(std::sqrt(sse_f / n_f) == doctest::Approx(best.val_forecast).epsilon(1e-12));
  CHECK(std::sqrt(sse_r / n_r) == doctest::Approx(best.val_recon).epsilon(1e-12));
}

TEST_CASE("training log format") {
  tadkit::TrainRun run;
  run.gamma = 0.5;
  run.epochs.push_back({0.5, 0.25, 0.4, 0.2});
  run.epochs.push_back({0.25, 0.2, 0.3, 0.1});

  TempDir tmp;
  const std::string path = tmp.file("log.csv");
  tadkit::write_training_log(path, run);

  auto t = tadkit::parse_csv(read_file(path), "log");
  CHECK(t.header == std::vector<std::string>{"epoch", "train_forecast", "train_recon",
                                             "val_forecast", "val_recon", "val_total"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0][0] == "0");
  CHECK(t.rows[1][0] == "1");
  CHECK(std::stod(t.rows[0][1]) == 0.5);
  CHECK(std::stod(t.rows[1][5]) == doctest::Approx(0.3 + 0.5 * 0.1).epsilon(1e-12));
}
