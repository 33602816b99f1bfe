#include "tadkit/adam.hpp"

#include <cmath>

#include "tadkit/errors.hpp"

namespace tadkit {

AdamState::AdamState(const std::vector<Tensor*>& params) {
  m_.reserve(params.size());
  v_.reserve(params.size());
  for (const Tensor* p : params) {
    m_.emplace_back(static_cast<size_t>(p->size()), 0.0);
    v_.emplace_back(static_cast<size_t>(p->size()), 0.0);
  }
}

double AdamState::clip_global_norm(const std::vector<Tensor*>& params, double max_norm) {
  double sq = 0.0;
  for (const Tensor* p : params) {
    if (!p->has_grad()) throw ContractError("clip_global_norm: parameter missing gradient");
    for (double g : p->grad()) sq += g * g;
  }
  double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    double scale = max_norm / norm;
    for (Tensor* p : params) {
      for (double& g : p->ensure_grad()) g *= scale;
    }
  }
  return norm;
}

void AdamState::step(const std::vector<Tensor*>& params, const AdamConfig& cfg) {
  if (params.size() != m_.size()) {
    throw ContractError("adam step: parameter list does not match optimizer state");
  }
  ++t_;
  double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t_));
  double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t_));
  for (size_t i = 0; i < params.size(); ++i) {
    Tensor* p = params[i];
    if (!p->has_grad()) throw ContractError("adam step: parameter missing gradient");
    const auto& g = p->grad();
    if (g.size() != m_[i].size()) throw ContractError("adam step: gradient size mismatch");
    auto& vals = p->mutable_values();
    for (size_t j = 0; j < g.size(); ++j) {
      m_[i][j] = cfg.beta1 * m_[i][j] + (1.0 - cfg.beta1) * g[j];
      v_[i][j] = cfg.beta2 * v_[i][j] + (1.0 - cfg.beta2) * g[j] * g[j];
      double mhat = m_[i][j] / bc1;
      double vhat = v_[i][j] / bc2;
      vals[j] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
    p->zero_grad();
  }
}

}  // namespace tadkit
