#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tadkit/adam.hpp"
#include "tadkit/model.hpp"
#include "tadkit/pipeline.hpp"

namespace tadkit {

struct TrainOptions {
  int epochs = 30;
  int batch_size = 100;
  double lr = 1e-3;
  double gamma = 1.0;      // weight of the reconstruction term
  int patience = 10;       // epochs past the best val total before stopping
  double grad_clip = 5.0;  // global norm ceiling
};

struct LossResult {
  NodeId total = -1;
  NodeId forecast = -1;
  NodeId recon = -1;
};

// total = rmse(forecast, targets) + gamma * rmse(recon, inputs); both terms
// are square roots of means over all B*H*k (resp. B*L*k) cells, so a
// perfect prediction yields exactly (0,0,0).
LossResult compute_loss(Graph& g, const ForwardResult& fwd, const WindowBatch& batch,
                        double gamma);

struct EpochStats {
  double train_forecast = 0;
  double train_recon = 0;
  double val_forecast = 0;
  double val_recon = 0;
  double val_total(double gamma) const { return val_forecast + gamma * val_recon; }
};

struct TrainRun {
  std::vector<EpochStats> epochs;
  double gamma = 1.0;
  int best_epoch = -1;  // epoch whose parameters the returned model carries
  double best_val_total = 0;

  double min_val_total() const;
  double min_val_forecast() const;
  double min_val_recon() const;
};

struct TrainResult {
  Model model;
  TrainRun run;
};

// Full training loop: Adam, per-epoch reshuffled batches, gradient norm
// clipping, early stopping on validation total loss, best-epoch parameter
// restore. Deterministic for a fixed (inputs, seed). Validation windows
// are required; epoch losses are pooled RMSEs over the whole split.
TrainResult train_model(const TelemetryDataset& ds, const std::vector<WindowRef>& windows,
                        const ModelConfig& cfg, const TrainOptions& opts, std::uint64_t seed);

// Columns: epoch, train_forecast, train_recon, val_forecast, val_recon,
// val_total. One row per completed epoch.
void write_training_log(const std::string& path, const TrainRun& run);

}  // namespace tadkit
