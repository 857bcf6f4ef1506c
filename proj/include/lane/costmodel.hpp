#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lane/model.hpp"

namespace lane {

enum class CostMode { Lane, FullHistory };

// Closed-form cost of one generation-style forward producing all L token
// logits. FLOPs cover matmul-class work (2 * multiply-accumulates), the
// convention the runtime instrumentation uses; the Lane total matches an
// instrumented run exactly by mirroring its call inventory. FullHistory
// models a dense causal decoder of matched width/depth: it materializes
// the full LxL score matrix, as standard training stacks do.
struct CostBreakdown {
  double flops = 0.0;
  double activation_bytes = 0.0;       // modeled forward activations
  double attention_score_flops = 0.0;  // decoder-side score/value work
};

CostBreakdown flops_account(const ModelConfig& cfg, int64_t length, CostMode mode);

// Smallest L (scanned in l_sub steps) where the Lane total drops below the
// baseline, or -1 if none exists within the config's capacity.
int64_t flops_crossover(const ModelConfig& cfg);

struct SweepRow {
  int64_t length = 0;
  double lane_flops = 0.0;
  double baseline_flops = 0.0;
  double lane_mem = 0.0;
  double baseline_mem = 0.0;
  double score_ratio = 0.0;  // lane / baseline attention-score work
};

std::vector<SweepRow> cost_sweep(const ModelConfig& cfg, const std::vector<int64_t>& lengths);
std::string sweep_to_csv(const std::vector<SweepRow>& rows);

}  // namespace lane
