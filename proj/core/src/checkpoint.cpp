#include "tadkit/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json_util.hpp"
#include "tadkit/errors.hpp"

namespace tadkit {

using nlohmann::json;

nlohmann::json model_config_to_json(const ModelConfig& c) {
  return json{{"L", c.L},
              {"H", c.H},
              {"k", c.k},
              {"kernel_size", c.kernel_size},
              {"use_gatv2", c.use_gatv2},
              {"gru_layers", c.gru_layers},
              {"gru_hidden", c.gru_hidden},
              {"forecast_layers", c.forecast_layers},
              {"forecast_hidden", c.forecast_hidden},
              {"recon_layers", c.recon_layers},
              {"recon_hidden", c.recon_hidden},
              {"dropout", c.dropout},
              {"embed_dim", c.embed_dim},
              {"leaky_slope", c.leaky_slope},
              {"context_blocks", to_string(c.context_blocks)},
              {"context_mode", to_string(c.context_mode)},
              {"dyn_vocab", c.dyn_vocab},
              {"static_vocab", c.static_vocab},
              {"static_real_dim", c.static_real_dim}};
}

ModelConfig model_config_from_json(const json& j) {
  ModelConfig c;
  try {
    c.L = j.at("L").get<int>();
    c.H = j.at("H").get<int>();
    c.k = j.at("k").get<int>();
    c.kernel_size = j.at("kernel_size").get<int>();
    c.use_gatv2 = j.at("use_gatv2").get<bool>();
    c.gru_layers = j.at("gru_layers").get<int>();
    c.gru_hidden = j.at("gru_hidden").get<int>();
    c.forecast_layers = j.at("forecast_layers").get<int>();
    c.forecast_hidden = j.at("forecast_hidden").get<int>();
    c.recon_layers = j.at("recon_layers").get<int>();
    c.recon_hidden = j.at("recon_hidden").get<int>();
    c.dropout = j.at("dropout").get<double>();
    c.embed_dim = j.at("embed_dim").get<int>();
    c.leaky_slope = j.at("leaky_slope").get<double>();
    c.context_blocks = context_blocks_from_name(j.at("context_blocks").get<std::string>());
    c.context_mode = context_mode_from_name(j.at("context_mode").get<std::string>());
    c.dyn_vocab = j.at("dyn_vocab").get<std::vector<int>>();
    c.static_vocab = j.at("static_vocab").get<std::vector<int>>();
    c.static_real_dim = j.at("static_real_dim").get<int>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed model config: ") + e.what());
  }
  c.validate();
  return c;
}

namespace {

constexpr char kMagic[8] = {'T', 'A', 'D', 'C', 'K', 'P', 'T', '1'};

void put_u64_le(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_u64_le(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

void put_f64_le(std::string& out, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, 8);
  put_u64_le(out, bits);
}

double get_f64_le(const unsigned char* p) {
  std::uint64_t bits = get_u64_le(p);
  double d;
  std::memcpy(&d, &bits, 8);
  return d;
}

}  // namespace

void save_checkpoint(const std::string& path, const Model& model) {
  json params = json::array();
  std::int64_t offset = 0;
  for (const auto& [name, t] : model.named_parameters()) {
    params.push_back({{"name", name},
                      {"shape", t.shape()},
                      {"offset", offset},
                      {"count", t.size()}});
    offset += t.size() * 8;
  }
  json header{{"format_version", 1},
              {"rng_seed", model.seed()},
              {"config", model_config_to_json(model.config())},
              {"params", params}};
  std::string head = header.dump();

  std::string blob;
  blob.reserve(16 + head.size() + static_cast<size_t>(offset));
  blob.append(kMagic, 8);
  put_u64_le(blob, head.size());
  blob += head;
  for (const auto& [name, t] : model.named_parameters()) {
    for (double v : t.values()) put_f64_le(blob, v);
  }

  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write checkpoint '" + path + "'");
  f.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!f) throw DataError("short write on checkpoint '" + path + "'");
}

Model load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open checkpoint '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  const std::string blob = ss.str();

  if (blob.size() < 16 || std::memcmp(blob.data(), kMagic, 8) != 0) {
    throw DataError("'" + path + "' is not a checkpoint (bad magic)");
  }
  const auto* bytes = reinterpret_cast<const unsigned char*>(blob.data());
  std::uint64_t head_len = get_u64_le(bytes + 8);
  if (16 + head_len > blob.size()) throw DataError("checkpoint header truncated");

  json header;
  try {
    header = json::parse(blob.substr(16, head_len));
  } catch (const json::exception& e) {
    throw DataError(std::string("checkpoint header is not valid JSON: ") + e.what());
  }
  if (header.value("format_version", -1) != 1) {
    throw DataError("unsupported checkpoint format_version");
  }

  ModelConfig cfg = model_config_from_json(header.at("config"));
  Model model(cfg, header.at("rng_seed").get<std::uint64_t>());

  const auto& params = header.at("params");
  const auto& live = model.named_parameters();
  if (params.size() != live.size()) {
    throw DataError("checkpoint parameter count " + std::to_string(params.size()) +
                    " does not match config-derived layout (" + std::to_string(live.size()) + ")");
  }
  const size_t payload_base = 16 + head_len;
  for (size_t i = 0; i < live.size(); ++i) {
    const auto& rec = params[i];
    const std::string name = rec.at("name").get<std::string>();
    const auto shape = rec.at("shape").get<std::vector<int>>();
    if (name != live[i].first || shape != live[i].second.shape()) {
      throw DataError("checkpoint parameter '" + name + "' " + Tensor::shape_to_string(shape) +
                      " does not match expected '" + live[i].first + "' " +
                      live[i].second.shape_str());
    }
    const auto offset = rec.at("offset").get<std::int64_t>();
    const auto count = rec.at("count").get<std::int64_t>();
    if (count != live[i].second.size()) throw DataError("checkpoint count mismatch for " + name);
    if (payload_base + static_cast<size_t>(offset) + static_cast<size_t>(count) * 8 > blob.size()) {
      throw DataError("checkpoint payload truncated at parameter " + name);
    }
    auto& vals = model.param(name).mutable_values();
    const unsigned char* src = bytes + payload_base + offset;
    for (std::int64_t v = 0; v < count; ++v) {
      vals[static_cast<size_t>(v)] = get_f64_le(src + v * 8);
    }
  }
  return model;
}

}  // namespace tadkit
