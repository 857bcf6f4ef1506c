#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lane/mesh.hpp"
#include "lane/ops.hpp"
#include "lane/optim.hpp"
#include "lane/rng.hpp"
#include "lane/tensor.hpp"
#include "lane/tokenizer.hpp"

namespace lane {

struct ModelConfig {
  int64_t d_model = 128;
  int64_t n_heads = 4;
  int64_t k_blocks = 4;       // stacked subsequence-decoder blocks
  int64_t t_sc = 16;          // tokens per latent space
  int64_t m_max = 32;         // latent-space slots; capacity = m_max * l_sub
  int64_t l_sub = 64;         // subsequence token length
  int64_t vocab = tok::kVocabSize;
  int64_t d_ff = 512;
  int64_t n_enc_layers = 2;
  int64_t n_ar_layers = 2;
  int64_t n_freq = 8;         // coordinate featurizer frequency count
  SampleCounts counts;        // N1..N4

  int64_t max_length() const { return m_max * l_sub; }
  int64_t feature_dim() const { return 3 + 6 * n_freq; }
  void validate() const;

  // Subsequence count for a target length; fails if over capacity.
  int64_t m_for_length(int64_t length) const;
};

ModelConfig micro_config();  // smallest config that exercises every path

// Named parameters with deterministic creation order (= checkpoint order).
struct Params {
  ParamList list;
  std::map<std::string, Tensor> by_name;

  Tensor get(const std::string& name) const;
  Tensor add(const std::string& name, std::vector<int64_t> shape, std::vector<double> data);
};

Params init_params(const ModelConfig& cfg, uint64_t seed);

// The M compact latent spaces, flattened to [m_count * t_sc, d_model].
struct LatentHierarchy {
  enum class Stage { Encoded, Autoregressed };
  Tensor spaces;
  int64_t m_count = 0;
  Stage stage = Stage::Encoded;
};

// Execution counters for the single-build contract.
namespace counters {
extern std::atomic<int64_t> extractor_runs;
extern std::atomic<int64_t> ar_runs;
}  // namespace counters

// --- Latent space extractor ---

// Coordinates -> sinusoidal features -> linear. [n, d_model].
Tensor featurize_points(const std::vector<Vec3>& pts, const ModelConfig& cfg, const Params& p);

// Cross-attention encoder: X2 queries X1. [N2, d_model]. Permutation of X1
// rows is a key permutation and cannot change the output (up to fp
// summation order).
Tensor encode_point_cloud(const PointCloudSet& pcs, const ModelConfig& cfg, const Params& p);

// Two cross-attention refinements: X3 then X4 as queries. [N4, d_model].
Tensor upsample(const Tensor& latent, const std::vector<Vec3>& queries, const ModelConfig& cfg,
                const Params& p, int stage);

// Sinusoidal encoding of (L / l_sub, L mod l_sub), projected. [1, d_model].
Tensor length_embedding(int64_t length, const ModelConfig& cfg, const Params& p);

// Per slot m: cross-attend [init_m ; L_e] into Z, keep the t_sc latent
// rows. Weights shared across m; slots differ only through their init.
LatentHierarchy construct_latent_spaces(const Tensor& z, int64_t length, int64_t m_count,
                                        const ModelConfig& cfg, const Params& p);

// Block-causal self-attention at latent-space granularity: tokens of space
// m see spaces 1..m. Stage becomes Autoregressed.
LatentHierarchy autoregress_latents(const LatentHierarchy& h, const ModelConfig& cfg,
                                    const Params& p);

// --- Subsequence decoder ---

// Fused condition: length embedding + index embedding (m is 1-based).
Tensor condition_vector(int64_t length, int64_t m, const ModelConfig& cfg, const Params& p);

// Optional per-generation cache of the latent K/V projections per block.
// Purely an arithmetic-identical hoist: projections are row-independent, so
// serial, batched and uncached paths produce the same bits.
struct HierarchyKV {
  std::vector<Tensor> keys, values;  // per block, [m_count * t_sc, d_model]
};
HierarchyKV project_hierarchy_kv(const LatentHierarchy& h, const ModelConfig& cfg,
                                 const Params& p);

// One decoder block: adaptive layer norm (scale/shift from the condition
// MLP), joint attention over [x ; spaces 1..m] with spaces m+1.. masked
// off, then FFN. tokens is [l_sub, d_model].
Tensor lane_block(const Tensor& tokens, const LatentHierarchy& h, int64_t m, const Tensor& cond,
                  const ModelConfig& cfg, const Params& p, int64_t k,
                  const HierarchyKV* kv_cache = nullptr);

// Full pathway for subsequence m: query bank + index embedding through
// k_blocks lane blocks and the classification head. One forward pass per
// subsequence; no token feedback. [l_sub, vocab].
Tensor predict_subsequence(const LatentHierarchy& h, int64_t m, int64_t length,
                           const ModelConfig& cfg, const Params& p,
                           const HierarchyKV* kv_cache = nullptr);

// Mean cross-entropy with PAD ignored.
Tensor subsequence_loss(const Tensor& logits, const std::vector<uint16_t>& target);

// --- Training ---

struct TrainSample {
  PointCloudSet pcs;
  SubsequenceBatch subs;
};

struct MPolicy {
  enum class Kind { Uniform, Fixed };
  Kind kind = Kind::Uniform;
  int64_t fixed_m = 1;
};

struct TrainStepStats {
  double loss = 0.0;
  int64_t lane_block_peak_bytes = 0;  // activation meter, lane blocks only
};

// One optimizer step over the batch: per sample draw m per policy, run the
// full forward, average the losses, backprop, Adam update. Only one
// subsequence's decoder activations exist per sample.
TrainStepStats train_step(const std::vector<TrainSample>& batch, const MPolicy& policy,
                          const ModelConfig& cfg, Params& params, AdamState& opt, Rng& rng);

}  // namespace lane
