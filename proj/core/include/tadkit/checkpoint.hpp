#pragma once

#include <string>

#include "tadkit/model.hpp"

namespace tadkit {

// Model checkpoint container (see docs/checkpoint-format.md):
//   bytes 0..7   magic "TADCKPT1"
//   bytes 8..15  header length N, uint64 little-endian
//   N bytes      UTF-8 JSON header: format_version, rng_seed, config,
//                params: [{name, shape, offset, count}, ...]
//   payload      raw float64 little-endian, offsets relative to its start
// Save->load->forward is bit-identical. Loading rejects bad magic, header
// drift, and any name/shape mismatch against the config-derived layout.
void save_checkpoint(const std::string& path, const Model& model);
Model load_checkpoint(const std::string& path);

}  // namespace tadkit
