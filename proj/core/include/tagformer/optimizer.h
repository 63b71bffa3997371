#pragma once

#include <vector>

#include "tagformer/graph.h"

namespace tagformer {

struct AdamWConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
  double warmup_fraction = 0.1;
  double grad_clip = 1.0;  // global norm, 0 disables
};

// Adam with decoupled weight decay and a linear warmup / linear decay
// schedule over `total_steps`. Weight decay only touches 2-D matrices.
class AdamW {
 public:
  AdamW(const AdamWConfig& cfg, long total_steps);

  // Learning rate used by step number `t` (1-based).
  double learning_rate_at(long t) const;
  // Throws NumericError on non-finite gradients. Frozen parameters are
  // skipped. Gradients are left untouched; callers zero them.
  void step(ParameterStore<float>& params);
  long steps() const { return t_; }
  double last_grad_norm() const { return last_norm_; }

 private:
  AdamWConfig cfg_;
  long total_;
  long warmup_;
  long t_ = 0;
  double last_norm_ = 0;
  std::vector<std::vector<float>> m_;
  std::vector<std::vector<float>> v_;
};

}  // namespace tagformer
