#include "tagformer/optimizer.h"

#include <cmath>

#include "tagformer/error.h"

namespace tagformer {

AdamW::AdamW(const AdamWConfig& cfg, long total_steps) : cfg_(cfg), total_(total_steps) {
  if (total_steps < 1) throw ConfigError("optimizer needs at least one step");
  warmup_ = static_cast<long>(std::ceil(cfg.warmup_fraction * total_steps));
}

double AdamW::learning_rate_at(long t) const {
  if (t <= warmup_) return cfg_.learning_rate * t / warmup_;
  // decays linearly, the last step still moves
  return cfg_.learning_rate * static_cast<double>(total_ - t + 1) / static_cast<double>(total_ - warmup_);
}

void AdamW::step(ParameterStore<float>& params) {
  auto all = params.all();
  if (m_.empty()) {
    for (auto* p : all) {
      m_.emplace_back(p->value.values().size(), 0.0f);
      v_.emplace_back(p->value.values().size(), 0.0f);
    }
  }
  if (m_.size() != all.size()) throw std::logic_error("AdamW: parameter set changed");

  double sq = 0;
  for (auto* p : all) {
    if (p->frozen || p->grad.values().empty()) continue;
    for (float g : p->grad.values()) sq += static_cast<double>(g) * g;
  }
  const double norm = std::sqrt(sq);
  if (!std::isfinite(norm)) throw NumericError("non-finite gradient at step " + std::to_string(t_ + 1));
  last_norm_ = norm;
  const double clip = cfg_.grad_clip > 0 && norm > cfg_.grad_clip ? cfg_.grad_clip / norm : 1.0;

  ++t_;
  const double lr = learning_rate_at(t_);
  const double bc1 = 1 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < all.size(); ++k) {
    auto* p = all[k];
    if (p->frozen || p->grad.values().empty()) continue;
    auto w = p->value.values();
    auto g = p->grad.values();
    auto& m = m_[k];
    auto& v = v_[k];
    const bool decay = p->value.rows() > 1 && p->value.cols() > 1;
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = g[i] * clip;
      m[i] = static_cast<float>(cfg_.beta1 * m[i] + (1 - cfg_.beta1) * gi);
      v[i] = static_cast<float>(cfg_.beta2 * v[i] + (1 - cfg_.beta2) * gi * gi);
      double update = (m[i] / bc1) / (std::sqrt(v[i] / bc2) + cfg_.eps);
      if (decay) update += cfg_.weight_decay * w[i];
      w[i] = static_cast<float>(w[i] - lr * update);
    }
  }
}

}  // namespace tagformer
