#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "lane/tensor.hpp"

namespace lane {

// Named parameter list; iteration order is the checkpoint order.
using ParamList = std::vector<std::pair<std::string, Tensor>>;

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double lr_max = 1e-4;
  double lr_min = 1e-6;
  int64_t total_steps = 10000;  // cosine decay horizon
};

struct AdamState {
  AdamConfig cfg;
  int64_t step = 0;  // completed steps
  std::vector<std::vector<double>> m, v;

  static AdamState init(const ParamList& params, const AdamConfig& cfg);
};

// Cosine decay from lr_max (step 1) to lr_min (step total_steps), clamped
// at lr_min afterwards.
double cosine_lr(const AdamConfig& cfg, int64_t step);

// Bias-corrected Adam over params' accumulated grads. Throws NumericError
// naming the parameter on a non-finite gradient; parameters with empty
// grads are treated as zero-gradient.
void adam_step(ParamList& params, AdamState& state);

}  // namespace lane
