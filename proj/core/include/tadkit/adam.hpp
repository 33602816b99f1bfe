#pragma once

#include <cstdint>
#include <vector>

#include "tadkit/tensor.hpp"

namespace tadkit {

// Adam with bias correction. One AdamState per parameter list; `step`
// consumes the accumulated gradients and zeroes them afterwards so the
// next backward pass starts clean.
struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class AdamState {
 public:
  AdamState() = default;
  explicit AdamState(const std::vector<Tensor*>& params);

  // Scales all gradients by min(1, max_norm/global_norm). Returns the
  // pre-clip global norm.
  static double clip_global_norm(const std::vector<Tensor*>& params, double max_norm);

  // Missing gradient on any parameter is a contract error.
  void step(const std::vector<Tensor*>& params, const AdamConfig& cfg);

  std::int64_t t() const { return t_; }

 private:
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  std::int64_t t_ = 0;
};

}  // namespace tadkit
