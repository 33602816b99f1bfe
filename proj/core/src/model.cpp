#include "tadkit/model.hpp"

#include <cmath>

#include "tadkit/errors.hpp"

namespace tadkit {

ContextBlocks context_blocks_from_name(const std::string& s) {
  if (s == "none") return ContextBlocks::kNone;
  if (s == "block1") return ContextBlocks::kBlock1;
  if (s == "block2") return ContextBlocks::kBlock2;
  if (s == "both") return ContextBlocks::kBoth;
  throw ConfigError("unknown context_blocks '" + s + "'");
}

ContextMode context_mode_from_name(const std::string& s) {
  if (s == "full") return ContextMode::kFull;
  if (s == "dynamic_only") return ContextMode::kDynamicOnly;
  if (s == "static_only") return ContextMode::kStaticOnly;
  throw ConfigError("unknown context_mode '" + s + "'");
}

std::string to_string(ContextBlocks b) {
  switch (b) {
    case ContextBlocks::kNone: return "none";
    case ContextBlocks::kBlock1: return "block1";
    case ContextBlocks::kBlock2: return "block2";
    case ContextBlocks::kBoth: return "both";
  }
  return "?";
}

std::string to_string(ContextMode m) {
  switch (m) {
    case ContextMode::kFull: return "full";
    case ContextMode::kDynamicOnly: return "dynamic_only";
    case ContextMode::kStaticOnly: return "static_only";
  }
  return "?";
}

void ModelConfig::validate() const {
  auto positive = [](int v, const char* what) {
    if (v <= 0) throw ConfigError(std::string(what) + " must be positive");
  };
  positive(L, "L");
  positive(H, "H");
  positive(k, "k");
  positive(kernel_size, "kernel_size");
  positive(gru_layers, "gru_layers");
  positive(gru_hidden, "gru_hidden");
  positive(forecast_layers, "forecast_layers");
  positive(forecast_hidden, "forecast_hidden");
  positive(recon_layers, "recon_layers");
  positive(recon_hidden, "recon_hidden");
  positive(embed_dim, "embed_dim");
  if (dropout < 0 || dropout >= 1) throw ConfigError("dropout must lie in [0,1)");
  if (leaky_slope <= 0) throw ConfigError("leaky_slope must be positive");
  for (int v : dyn_vocab) {
    if (v < 1) throw ConfigError("dyn_vocab entries must be >= 1");
  }
  for (int v : static_vocab) {
    if (v < 1) throw ConfigError("static_vocab entries must be >= 1");
  }
  if (static_real_dim < 0) throw ConfigError("static_real_dim must be >= 0");
}

int ModelConfig::context_dim() const {
  int dyn = static_cast<int>(dyn_vocab.size()) * embed_dim;
  int stat = static_cast<int>(static_vocab.size()) * embed_dim +
             (static_real_dim > 0 ? embed_dim : 0);
  return dyn + stat;
}

Model::Model(ModelConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)), seed_(seed) {
  cfg_.validate();
  init_params();
}

Tensor& Model::add_param(const std::string& name, std::vector<int> shape) {
  params_.emplace_back(name, Tensor::zeros(std::move(shape), true));
  return params_.back().second;
}

Tensor& Model::param(const std::string& name) {
  for (auto& [n, t] : params_) {
    if (n == name) return t;
  }
  throw ContractError("unknown parameter '" + name + "'");
}

std::vector<Tensor*> Model::parameters() {
  std::vector<Tensor*> out;
  out.reserve(params_.size());
  for (auto& [n, t] : params_) out.push_back(&t);
  return out;
}

std::int64_t Model::parameter_count() const {
  std::int64_t n = 0;
  for (const auto& [name, t] : params_) n += t.size();
  return n;
}

void Model::init_params() {
  const int k = cfg_.k;
  const int E = cfg_.embed_dim;

  for (size_t i = 0; i < cfg_.dyn_vocab.size(); ++i) {
    add_param("embed.dyn." + std::to_string(i), {cfg_.dyn_vocab[i], E});
  }
  for (size_t i = 0; i < cfg_.static_vocab.size(); ++i) {
    add_param("embed.static." + std::to_string(i), {cfg_.static_vocab[i], E});
  }
  if (cfg_.static_real_dim > 0) {
    add_param("embed.static_real.W", {cfg_.static_real_dim, E});
    add_param("embed.static_real.b", {1, E});
  }

  const int ctx = cfg_.context_dim();
  for (int b = 1; b <= 2; ++b) {
    add_param("conv" + std::to_string(b) + ".w", {cfg_.kernel_size, k, k});
    add_param("conv" + std::to_string(b) + ".b", {1, 1, k});
    bool conditioned = ctx > 0 && (cfg_.context_blocks == ContextBlocks::kBoth ||
                                   (b == 1 && cfg_.context_blocks == ContextBlocks::kBlock1) ||
                                   (b == 2 && cfg_.context_blocks == ContextBlocks::kBlock2));
    if (conditioned) {
      add_param("film" + std::to_string(b) + ".W", {ctx, 2 * k});
      add_param("film" + std::to_string(b) + ".b", {1, 2 * k});
    }
  }

  auto add_attention = [&](const std::string& prefix, int dim) {
    if (cfg_.use_gatv2) {
      add_param(prefix + ".Ws", {dim, dim});
      add_param(prefix + ".Wt", {dim, dim});
      add_param(prefix + ".a", {dim, 1});
    } else {
      add_param(prefix + ".W", {dim, dim});
      add_param(prefix + ".a_src", {dim, 1});
      add_param(prefix + ".a_dst", {dim, 1});
    }
  };
  add_attention("fattn", cfg_.L);
  add_attention("tattn", k);

  auto add_gru = [&](const std::string& prefix, int in_dim, int hidden) {
    for (const char* gate : {"z", "r", "h"}) {
      add_param(prefix + ".W" + gate, {in_dim, hidden});
      add_param(prefix + ".U" + gate, {hidden, hidden});
      add_param(prefix + ".b" + gate, {1, hidden});
    }
  };
  for (int l = 0; l < cfg_.gru_layers; ++l) {
    add_gru("gru.enc.l" + std::to_string(l), l == 0 ? 3 * k : cfg_.gru_hidden, cfg_.gru_hidden);
  }

  int fc_in = cfg_.gru_hidden;
  for (int l = 0; l < cfg_.forecast_layers - 1; ++l) {
    add_param("fc.l" + std::to_string(l) + ".W", {fc_in, cfg_.forecast_hidden});
    add_param("fc.l" + std::to_string(l) + ".b", {1, cfg_.forecast_hidden});
    fc_in = cfg_.forecast_hidden;
  }
  add_param("fc.out.W", {fc_in, cfg_.H * k});
  add_param("fc.out.b", {1, cfg_.H * k});

  add_param("rec.proj.W", {cfg_.gru_hidden, cfg_.recon_hidden});
  add_param("rec.proj.b", {1, cfg_.recon_hidden});
  for (int l = 0; l < cfg_.recon_layers; ++l) {
    add_gru("gru.dec.l" + std::to_string(l), cfg_.recon_hidden, cfg_.recon_hidden);
  }
  add_param("rec.out.W", {cfg_.recon_hidden, k});
  add_param("rec.out.b", {1, k});

  // Seeded init: Xavier-uniform for weight matrices/kernels, small normal
  // for embeddings, zeros for biases and the context projections (so the
  // conditioned blocks start as exact identity modulation).
  Rng rng = Rng::stream(seed_, "init");
  for (auto& [name, t] : params_) {
    auto ends_with = [&](const char* suf) {
      std::string_view n = name;
      std::string_view s = suf;
      return n.size() >= s.size() && n.substr(n.size() - s.size()) == s;
    };
    if (name.rfind("film", 0) == 0 || ends_with(".b") || ends_with(".bz") || ends_with(".br") ||
        ends_with(".bh")) {
      continue;  // zeros
    }
    if (name.rfind("embed.dyn", 0) == 0 || name.rfind("embed.static.", 0) == 0) {
      for (double& v : t.mutable_values()) v = rng.normal(0.0, 0.1);
      continue;
    }
    const auto& sh = t.shape();
    double fan_in, fan_out;
    if (sh.size() == 3) {  // conv kernel [K,Cin,Cout]
      fan_in = static_cast<double>(sh[0]) * sh[1];
      fan_out = static_cast<double>(sh[0]) * sh[2];
    } else {
      fan_in = static_cast<double>(sh[0]);
      fan_out = static_cast<double>(sh[sh.size() - 1]);
    }
    double a = std::sqrt(6.0 / (fan_in + fan_out));
    for (double& v : t.mutable_values()) v = rng.uniform(-a, a);
  }
}

NodeId Model::embed_context(Graph& g, const WindowBatch& batch) {
  const int B = batch.B, L = batch.L, E = cfg_.embed_dim;
  const int d_dyn = static_cast<int>(cfg_.dyn_vocab.size());
  const int d_stat = static_cast<int>(cfg_.static_vocab.size());
  const bool has_sreal = cfg_.static_real_dim > 0;
  if (d_dyn == 0 && d_stat == 0 && !has_sreal) return -1;
  if (static_cast<int>(batch.dyn_codes.size()) != B * L * d_dyn) {
    throw DimensionError("embed_context: dynamic code count mismatch");
  }
  const bool want_dyn = cfg_.context_mode != ContextMode::kStaticOnly;
  const bool want_static = cfg_.context_mode != ContextMode::kDynamicOnly;

  std::vector<NodeId> parts;
  if (d_dyn > 0) {
    if (want_dyn) {
      for (int c = 0; c < d_dyn; ++c) {
        std::vector<std::int64_t> idx(static_cast<size_t>(B) * L);
        for (int i = 0; i < B * L; ++i) {
          idx[static_cast<size_t>(i)] = batch.dyn_codes[static_cast<size_t>(i) * d_dyn + c];
        }
        NodeId e = g.gather(g.param(param("embed.dyn." + std::to_string(c))), std::move(idx));
        parts.push_back(g.reshape(e, {B, L, E}));
      }
    } else {
      parts.push_back(g.constant(Tensor::zeros({B, L, d_dyn * E})));
    }
  }

  const int static_dim = d_stat * E + (has_sreal ? E : 0);
  if (static_dim > 0) {
    if (want_static) {
      std::vector<NodeId> sparts;
      for (int c = 0; c < d_stat; ++c) {
        std::vector<std::int64_t> idx(static_cast<size_t>(B));
        for (int i = 0; i < B; ++i) {
          idx[static_cast<size_t>(i)] = batch.static_codes[static_cast<size_t>(i) * d_stat + c];
        }
        sparts.push_back(g.gather(g.param(param("embed.static." + std::to_string(c))), std::move(idx)));
      }
      if (has_sreal) {
        NodeId r = g.matmul(g.constant(batch.static_reals), g.param(param("embed.static_real.W")));
        sparts.push_back(g.add(r, g.param(param("embed.static_real.b"))));
      }
      NodeId stat = sparts.size() == 1 ? sparts[0] : g.concat(sparts, 1);  // [B, static_dim]
      // Broadcast over the window: [B,1,D] + zeros[B,L,D].
      NodeId stat3 = g.reshape(stat, {B, 1, static_dim});
      parts.push_back(g.add(stat3, g.constant(Tensor::zeros({B, L, static_dim}))));
    } else {
      parts.push_back(g.constant(Tensor::zeros({B, L, static_dim})));
    }
  }

  return parts.size() == 1 ? parts[0] : g.concat(parts, 2);
}

NodeId Model::film_conv_block(Graph& g, NodeId x, NodeId ctx, int block) {
  if (block != 1 && block != 2) throw ContractError("film_conv_block: block must be 1 or 2");
  const std::string b = std::to_string(block);
  NodeId y = g.conv1d(x, g.param(param("conv" + b + ".w")));
  y = g.add(y, g.param(param("conv" + b + ".b")));
  bool conditioned = ctx >= 0 && (cfg_.context_blocks == ContextBlocks::kBoth ||
                                  (block == 1 && cfg_.context_blocks == ContextBlocks::kBlock1) ||
                                  (block == 2 && cfg_.context_blocks == ContextBlocks::kBlock2));
  if (!conditioned) return y;
  const auto& cshape = g.value(ctx).shape();
  const int B = cshape[0], L = cshape[1], D = cshape[2];
  const int k = cfg_.k;
  NodeId gb = g.matmul(g.reshape(ctx, {B * L, D}), g.param(param("film" + b + ".W")));
  gb = g.add(gb, g.param(param("film" + b + ".b")));
  gb = g.reshape(gb, {B, L, 2 * k});
  NodeId gamma = g.slice(gb, 2, 0, k);
  NodeId beta = g.slice(gb, 2, k, k);
  return g.affine_modulate(y, gamma, beta);
}

// Shared attention core over a complete graph with self-loops. nodes3 is
// [B,n,dim]; every node attends over all n nodes. GATv2 moves the
// nonlinearity inside the scoring so rankings can vary per target node;
// the v1 form collapses to a static ranking (kept as ablation baseline).
AttentionResult Model::attention(Graph& g, NodeId nodes3, const std::string& prefix, int n,
                                 int dim) {
  const int B = g.value(nodes3).shape()[0];
  NodeId flat = g.reshape(nodes3, {B * n, dim});
  NodeId scores;
  if (cfg_.use_gatv2) {
    NodeId s = g.matmul(flat, g.param(param(prefix + ".Ws")));
    NodeId t = g.matmul(flat, g.param(param(prefix + ".Wt")));
    NodeId pair = g.add(g.reshape(s, {B, n, 1, dim}), g.reshape(t, {B, 1, n, dim}));
    NodeId act = g.leaky_relu(pair, cfg_.leaky_slope);
    scores = g.reshape(g.matmul(g.reshape(act, {B * n * n, dim}), g.param(param(prefix + ".a"))),
                       {B, n, n});
  } else {
    NodeId wh = g.matmul(flat, g.param(param(prefix + ".W")));
    NodeId u = g.reshape(g.matmul(wh, g.param(param(prefix + ".a_src"))), {B, n, 1});
    NodeId v = g.reshape(g.matmul(wh, g.param(param(prefix + ".a_dst"))), {B, 1, n});
    scores = g.leaky_relu(g.add(u, v), cfg_.leaky_slope);
  }
  AttentionResult res;
  res.alpha = g.softmax(scores, 2);
  NodeId mixed = g.matmul(res.alpha, nodes3);  // [B,n,dim]
  res.out = g.sigmoid(mixed);
  return res;
}

AttentionResult Model::feature_attention(Graph& g, NodeId h) {
  const auto& sh = g.value(h).shape();
  if (sh.size() != 3 || sh[2] != cfg_.k || sh[1] != cfg_.L) {
    throw DimensionError("feature_attention: expected [B," + std::to_string(cfg_.L) + "," +
                         std::to_string(cfg_.k) + "], got " + g.value(h).shape_str());
  }
  NodeId nodes = g.transpose(h);  // [B,k,L]: one node per KPI, its window as features
  AttentionResult res = attention(g, nodes, "fattn", cfg_.k, cfg_.L);
  res.out = g.transpose(res.out);  // back to [B,L,k]
  return res;
}

AttentionResult Model::temporal_attention(Graph& g, NodeId h) {
  const auto& sh = g.value(h).shape();
  if (sh.size() != 3 || sh[2] != cfg_.k || sh[1] != cfg_.L) {
    throw DimensionError("temporal_attention: expected [B," + std::to_string(cfg_.L) + "," +
                         std::to_string(cfg_.k) + "], got " + g.value(h).shape_str());
  }
  return attention(g, h, "tattn", cfg_.L, cfg_.k);  // one node per timestep
}

NodeId Model::gru_cell(Graph& g, const std::string& p, NodeId x, NodeId h) {
  NodeId z = g.sigmoid(g.add(g.add(g.matmul(x, g.param(param(p + ".Wz"))),
                                   g.matmul(h, g.param(param(p + ".Uz")))),
                             g.param(param(p + ".bz"))));
  NodeId r = g.sigmoid(g.add(g.add(g.matmul(x, g.param(param(p + ".Wr"))),
                                   g.matmul(h, g.param(param(p + ".Ur")))),
                             g.param(param(p + ".br"))));
  NodeId hh = g.tanh(g.add(g.add(g.matmul(x, g.param(param(p + ".Wh"))),
                                 g.matmul(g.mul(r, h), g.param(param(p + ".Uh")))),
                           g.param(param(p + ".bh"))));
  NodeId keep = g.add(g.mul(z, g.scalar(-1.0)), g.scalar(1.0));  // 1 - z
  return g.add(g.mul(keep, h), g.mul(z, hh));
}

NodeId Model::dropout(Graph& g, NodeId x, bool train_mode, Rng* rng) {
  if (!train_mode || cfg_.dropout <= 0.0) return x;
  if (!rng) throw ContractError("dropout requires an RNG in train mode");
  const Tensor& v = g.value(x);
  std::vector<double> mask(static_cast<size_t>(v.size()));
  const double keep = 1.0 - cfg_.dropout;
  for (auto& m : mask) m = rng->uniform() < keep ? 1.0 / keep : 0.0;
  return g.mul(x, g.constant(Tensor::raw(v.shape(), std::move(mask))));
}

ForwardResult Model::forward(Graph& g, const WindowBatch& batch, bool train_mode, Rng* rng) {
  if (batch.L != cfg_.L || batch.k != cfg_.k || batch.H != cfg_.H) {
    throw DimensionError("forward: batch geometry does not match model config");
  }
  const int B = batch.B, L = cfg_.L, k = cfg_.k;

  NodeId x = g.constant(batch.inputs);
  NodeId ctx = embed_context(g, batch);

  NodeId h = g.relu(film_conv_block(g, x, ctx, 1));
  h = g.relu(film_conv_block(g, h, ctx, 2));

  AttentionResult fa = feature_attention(g, h);
  AttentionResult ta = temporal_attention(g, h);
  NodeId fused = g.concat({h, fa.out, ta.out}, 2);  // [B,L,3k]
  fused = dropout(g, fused, train_mode, rng);

  std::vector<NodeId> hs(static_cast<size_t>(cfg_.gru_layers),
                         g.constant(Tensor::zeros({B, cfg_.gru_hidden})));
  for (int t = 0; t < L; ++t) {
    NodeId xt = g.reshape(g.slice(fused, 1, t, 1), {B, 3 * k});
    for (int l = 0; l < cfg_.gru_layers; ++l) {
      hs[static_cast<size_t>(l)] = gru_cell(g, "gru.enc.l" + std::to_string(l), xt,
                                            hs[static_cast<size_t>(l)]);
      xt = hs[static_cast<size_t>(l)];
    }
  }
  NodeId latent = dropout(g, hs.back(), train_mode, rng);

  NodeId f = latent;
  for (int l = 0; l < cfg_.forecast_layers - 1; ++l) {
    const std::string p = "fc.l" + std::to_string(l);
    f = g.relu(g.add(g.matmul(f, g.param(param(p + ".W"))), g.param(param(p + ".b"))));
    f = dropout(g, f, train_mode, rng);
  }
  f = g.add(g.matmul(f, g.param(param("fc.out.W"))), g.param(param("fc.out.b")));

  ForwardResult res;
  res.forecast = g.reshape(f, {B, cfg_.H, k});
  res.feature_alpha = fa.alpha;
  res.temporal_alpha = ta.alpha;

  NodeId seed = g.add(g.matmul(latent, g.param(param("rec.proj.W"))), g.param(param("rec.proj.b")));
  std::vector<NodeId> dh(static_cast<size_t>(cfg_.recon_layers),
                         g.constant(Tensor::zeros({B, cfg_.recon_hidden})));
  dh[0] = seed;
  std::vector<NodeId> steps;
  steps.reserve(static_cast<size_t>(L));
  for (int t = 0; t < L; ++t) {
    NodeId xin = dh[0];  // the decoder consumes its own previous hidden state
    for (int l = 0; l < cfg_.recon_layers; ++l) {
      dh[static_cast<size_t>(l)] = gru_cell(g, "gru.dec.l" + std::to_string(l), xin,
                                            dh[static_cast<size_t>(l)]);
      xin = dh[static_cast<size_t>(l)];
    }
    NodeId xt = g.add(g.matmul(dh.back(), g.param(param("rec.out.W"))), g.param(param("rec.out.b")));
    steps.push_back(g.reshape(xt, {B, 1, k}));
  }
  res.recon = steps.size() == 1 ? steps[0] : g.concat(steps, 1);
  return res;
}

}  // namespace tadkit
