#include "tadkit/trainer.hpp"

#include <cmath>
#include <limits>

#include "tadkit/csv.hpp"
#include "tadkit/errors.hpp"

namespace tadkit {

LossResult compute_loss(Graph& g, const ForwardResult& fwd, const WindowBatch& batch,
                        double gamma) {
  LossResult r;
  NodeId ferr = g.sub(fwd.forecast, g.constant(batch.targets));
  r.forecast = g.sqrt(g.mean_all(g.square(ferr)));
  NodeId rerr = g.sub(fwd.recon, g.constant(batch.inputs));
  r.recon = g.sqrt(g.mean_all(g.square(rerr)));
  r.total = g.add(r.forecast, g.mul(r.recon, g.scalar(gamma)));
  return r;
}

double TrainRun::min_val_total() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& e : epochs) m = std::min(m, e.val_total(gamma));
  return m;
}

double TrainRun::min_val_forecast() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& e : epochs) m = std::min(m, e.val_forecast);
  return m;
}

double TrainRun::min_val_recon() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& e : epochs) m = std::min(m, e.val_recon);
  return m;
}

TrainResult train_model(const TelemetryDataset& ds, const std::vector<WindowRef>& windows,
                        const ModelConfig& cfg, const TrainOptions& opts, std::uint64_t seed) {
  if (opts.epochs <= 0) throw ConfigError("epochs must be positive");
  auto train_refs = windows_of_split(windows, Split::kTrain);
  auto val_refs = windows_of_split(windows, Split::kVal);
  if (train_refs.empty()) throw ContractError("train_model: no training windows");
  if (val_refs.empty()) throw ContractError("train_model: no validation windows");

  Model model(cfg, seed);
  auto params = model.parameters();
  AdamState opt(params);
  AdamConfig adam;
  adam.lr = opts.lr;
  Rng drop_rng = Rng::stream(seed, "dropout");

  TrainRun run;
  run.gamma = opts.gamma;
  double best = std::numeric_limits<double>::infinity();
  int since_best = 0;
  std::vector<std::vector<double>> best_params;

  auto snapshot = [&]() {
    best_params.clear();
    for (Tensor* p : params) best_params.push_back(p->values());
  };

  // Pooled RMSE accumulation: per-batch RMSE folded back into a sum of
  // squared errors so the epoch number is the RMSE over the whole split.
  struct Pool {
    double sse = 0;
    double n = 0;
    void fold(double rmse, std::int64_t count) {
      sse += rmse * rmse * static_cast<double>(count);
      n += static_cast<double>(count);
    }
    double rmse() const { return n > 0 ? std::sqrt(sse / n) : 0.0; }
  };

  const auto val_batches = plan_batches(val_refs, opts.batch_size, 0, false);

  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    auto batches = plan_batches(train_refs, opts.batch_size,
                                Rng::derive(seed, "shuffle." + std::to_string(epoch)), true);
    Pool tr_for, tr_rec;
    for (const auto& refs : batches) {
      WindowBatch batch = build_batch(ds, refs, cfg.L, cfg.H);
      Graph g;
      ForwardResult fwd = model.forward(g, batch, true, &drop_rng);
      LossResult loss = compute_loss(g, fwd, batch, opts.gamma);
      g.backward(loss.total);
      AdamState::clip_global_norm(params, opts.grad_clip);
      opt.step(params, adam);
      tr_for.fold(g.value(loss.forecast).values()[0],
                  static_cast<std::int64_t>(batch.B) * cfg.H * cfg.k);
      tr_rec.fold(g.value(loss.recon).values()[0],
                  static_cast<std::int64_t>(batch.B) * cfg.L * cfg.k);
    }

    Pool va_for, va_rec;
    for (const auto& refs : val_batches) {
      WindowBatch batch = build_batch(ds, refs, cfg.L, cfg.H);
      Graph g;
      ForwardResult fwd = model.forward(g, batch, false, nullptr);
      LossResult loss = compute_loss(g, fwd, batch, opts.gamma);
      va_for.fold(g.value(loss.forecast).values()[0],
                  static_cast<std::int64_t>(batch.B) * cfg.H * cfg.k);
      va_rec.fold(g.value(loss.recon).values()[0],
                  static_cast<std::int64_t>(batch.B) * cfg.L * cfg.k);
    }

    EpochStats st;
    st.train_forecast = tr_for.rmse();
    st.train_recon = tr_rec.rmse();
    st.val_forecast = va_for.rmse();
    st.val_recon = va_rec.rmse();
    run.epochs.push_back(st);

    double vt = st.val_total(opts.gamma);
    if (vt < best) {
      best = vt;
      run.best_epoch = epoch;
      since_best = 0;
      snapshot();
    } else {
      ++since_best;
      if (since_best > opts.patience) break;
    }
  }

  run.best_val_total = best;
  for (size_t i = 0; i < params.size(); ++i) {
    params[i]->mutable_values() = best_params[i];
    params[i]->clear_grad();
  }
  return {std::move(model), std::move(run)};
}

void write_training_log(const std::string& path, const TrainRun& run) {
  CsvTable t;
  t.header = {"epoch", "train_forecast", "train_recon", "val_forecast", "val_recon", "val_total"};
  for (size_t e = 0; e < run.epochs.size(); ++e) {
    const auto& s = run.epochs[e];
    t.rows.push_back({std::to_string(e), format_double(s.train_forecast),
                      format_double(s.train_recon), format_double(s.val_forecast),
                      format_double(s.val_recon), format_double(s.val_total(run.gamma))});
  }
  write_csv(path, t);
}

}  // namespace tadkit
