#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tadkit/graph.hpp"
#include "tadkit/pipeline.hpp"
#include "tadkit/rng.hpp"
#include "tadkit/tensor.hpp"

namespace tadkit {

// Which temporal convolution blocks receive context conditioning.
enum class ContextBlocks { kNone, kBlock1, kBlock2, kBoth };
// Which halves of the context vector are active; the inactive half is
// replaced by zeros of the same width so tensor shapes never change.
enum class ContextMode { kFull, kDynamicOnly, kStaticOnly };

ContextBlocks context_blocks_from_name(const std::string& s);
ContextMode context_mode_from_name(const std::string& s);
std::string to_string(ContextBlocks b);
std::string to_string(ContextMode m);

struct ModelConfig {
  int L = 24;
  int H = 7;
  int k = 1;

  int kernel_size = 7;
  bool use_gatv2 = true;
  int gru_layers = 1;
  int gru_hidden = 64;
  int forecast_layers = 1;
  int forecast_hidden = 64;
  int recon_layers = 1;
  int recon_hidden = 64;
  double dropout = 0.0;
  int embed_dim = 8;
  double leaky_slope = 0.2;

  ContextBlocks context_blocks = ContextBlocks::kBoth;
  ContextMode context_mode = ContextMode::kFull;

  // Dataset-derived: vocabulary sizes (incl. null token) per categorical
  // column and the static real width. Persisted with checkpoints.
  std::vector<int> dyn_vocab;
  std::vector<int> static_vocab;
  int static_real_dim = 0;

  void validate() const;  // ConfigError on nonsense
  int context_dim() const;  // width of the per-timestep context vector
};

// Attention layer output plus its row-stochastic weight matrix
// (introspection for tests and diagnostics).
struct AttentionResult {
  NodeId out = -1;
  NodeId alpha = -1;
};

struct ForwardResult {
  NodeId forecast = -1;       // [B,H,k]
  NodeId recon = -1;          // [B,L,k]
  NodeId feature_alpha = -1;  // [B,k,k]
  NodeId temporal_alpha = -1; // [B,L,L]
};

// Backbone: context-conditioned temporal convolutions, feature- and
// time-axis graph attention over the complete graph with self-loops,
// GRU encoder, dense forecast head and GRU reconstruction decoder that
// feeds back its own hidden state (no teacher forcing).
class Model {
 public:
  Model(ModelConfig cfg, std::uint64_t seed);  // seeded initialization

  const ModelConfig& config() const { return cfg_; }
  std::uint64_t seed() const { return seed_; }

  std::vector<Tensor*> parameters();  // stable registration order
  const std::vector<std::pair<std::string, Tensor>>& named_parameters() const { return params_; }
  Tensor& param(const std::string& name);
  std::int64_t parameter_count() const;

  // Builds the per-timestep context sequence [B,L,ctx_dim]; returns -1 when
  // the dataset carries no context columns.
  NodeId embed_context(Graph& g, const WindowBatch& batch);

  // y = (1+gamma)*conv1d(x)+beta for a conditioned block, plain convolution
  // (plus bias) otherwise. block is 1 or 2. ctx may be -1.
  NodeId film_conv_block(Graph& g, NodeId x, NodeId ctx, int block);

  AttentionResult feature_attention(Graph& g, NodeId h);
  AttentionResult temporal_attention(Graph& g, NodeId h);

  // dropout_rng must be non-null when train_mode and cfg.dropout > 0.
  ForwardResult forward(Graph& g, const WindowBatch& batch, bool train_mode,
                        Rng* dropout_rng = nullptr);

 private:
  Tensor& add_param(const std::string& name, std::vector<int> shape);
  void init_params();
  NodeId gru_cell(Graph& g, const std::string& prefix, NodeId x, NodeId h);
  NodeId dropout(Graph& g, NodeId x, bool train_mode, Rng* rng);
  AttentionResult attention(Graph& g, NodeId nodes3, const std::string& prefix, int n, int dim);

  ModelConfig cfg_;
  std::uint64_t seed_ = 0;
  std::vector<std::pair<std::string, Tensor>> params_;
};

}  // namespace tadkit
