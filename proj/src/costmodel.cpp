#include "lane/costmodel.hpp"

#include <sstream>

namespace lane {

namespace {

struct Dims {
  double d, dff, heads, t, ls, vocab, f3;
  double n1, n2, n3, n4;
  double k_blocks, n_enc, n_ar;
};

Dims dims_of(const ModelConfig& cfg) {
  return {static_cast<double>(cfg.d_model),  static_cast<double>(cfg.d_ff),
          static_cast<double>(cfg.n_heads),  static_cast<double>(cfg.t_sc),
          static_cast<double>(cfg.l_sub),    static_cast<double>(cfg.vocab),
          static_cast<double>(cfg.feature_dim()),
          static_cast<double>(cfg.counts.n1), static_cast<double>(cfg.counts.n2),
          static_cast<double>(cfg.counts.n3), static_cast<double>(cfg.counts.n4),
          static_cast<double>(cfg.k_blocks), static_cast<double>(cfg.n_enc_layers),
          static_cast<double>(cfg.n_ar_layers)};
}

double linear_flops(double rows, double in, double out) { return 2.0 * rows * in * out; }
double attn_flops(double pairs, double d) { return 4.0 * pairs * d; }

// q/k/v/o projections + attention + FFN of one pre-norm block.
double cross_block_flops(const Dims& x, double nq, double nk) {
  return linear_flops(nq, x.d, x.d) * 2.0 + linear_flops(nk, x.d, x.d) * 2.0 +
         attn_flops(nq * nk, x.d) + linear_flops(nq, x.d, x.dff) + linear_flops(nq, x.dff, x.d);
}

double self_block_flops(const Dims& x, double n, double pairs) {
  return linear_flops(n, x.d, x.d) * 4.0 + attn_flops(pairs, x.d) +
         linear_flops(n, x.d, x.dff) + linear_flops(n, x.dff, x.d);
}

// Modeled forward-activation elements of one block (values the runtime
// materializes: normed input, q/k/v, per-head probabilities, attention
// and output projections, FFN intermediates).
double block_act_elems(const Dims& x, double nq, double nk, double pairs) {
  return nq * x.d * 4.0 + nk * x.d * 3.0 + x.heads * pairs + nq * x.dff * 2.0 + nq * x.d * 2.0;
}

}  // namespace

CostBreakdown flops_account(const ModelConfig& cfg, int64_t length, CostMode mode) {
  cfg.validate();
  const Dims x = dims_of(cfg);
  CostBreakdown out;

  if (mode == CostMode::FullHistory) {
    const double L = static_cast<double>(length);
    out.attention_score_flops = x.k_blocks * attn_flops(L * L, x.d);
    out.flops = x.k_blocks * (linear_flops(L, x.d, x.d) * 4.0 + linear_flops(L, x.d, x.dff) +
                              linear_flops(L, x.dff, x.d)) +
                out.attention_score_flops + linear_flops(L, x.d, x.vocab);
    out.activation_bytes =
        8.0 * (x.k_blocks * block_act_elems(x, L, L, L * L) + L * x.vocab + L * x.d);
    return out;
  }

  const double m = static_cast<double>(cfg.m_for_length(length));
  const double mt = m * x.t;
  const double sum_m = m * (m + 1.0) / 2.0;  // sum of 1..M

  // Latent space extractor.
  const double featurize =
      linear_flops(x.n1 + x.n2 + x.n3 + x.n4, x.f3, x.d);
  double extractor = featurize + cross_block_flops(x, x.n2, x.n1);
  extractor += (x.n_enc - 1.0) * self_block_flops(x, x.n2, x.n2 * x.n2);
  extractor += cross_block_flops(x, x.n3, x.n2) + cross_block_flops(x, x.n4, x.n3);

  // Latent space constructor: Z keys/values once, then per-slot queries.
  const double tq = x.t + 1.0;
  double constructor = linear_flops(1, x.d, x.d) /* length embedding */ +
                       linear_flops(x.n4, x.d, x.d) * 2.0;
  constructor += m * (linear_flops(tq, x.d, x.d) * 2.0 + attn_flops(tq * x.n4, x.d) +
                      linear_flops(tq, x.d, x.dff) + linear_flops(tq, x.dff, x.d));

  // Autoregressive block: block-causal pairs = T^2 * M(M+1)/2 per layer.
  const double ar_pairs = x.t * x.t * sum_m;
  const double ar = x.n_ar * self_block_flops(x, mt, ar_pairs);

  // Decoder: hierarchy K/V projected once per block, then M pathways.
  const double kv_cache = x.k_blocks * linear_flops(mt, x.d, x.d) * 2.0;
  const double pathway_pairs = x.ls * (m * x.ls + x.t * sum_m);  // sum over m
  out.attention_score_flops = x.k_blocks * attn_flops(pathway_pairs, x.d);
  double pathways = m * (linear_flops(1, x.d, x.d) /* length embedding */ +
                         x.k_blocks * (linear_flops(1, x.d, x.d) * 3.0 /* condition MLP */ +
                                       linear_flops(x.ls, x.d, x.d) * 4.0 +
                                       linear_flops(x.ls, x.d, x.dff) +
                                       linear_flops(x.ls, x.dff, x.d)) +
                         linear_flops(x.ls, x.d, x.vocab));
  pathways += out.attention_score_flops;

  out.flops = extractor + constructor + ar + kv_cache + pathways;

  // Activations: extractor + hierarchy stay resident; one pathway at a
  // time is live, so the decoder contributes its worst (m = M) block set.
  double act = x.n1 * x.d + x.n2 * x.d + block_act_elems(x, x.n2, x.n1, x.n2 * x.n1) +
               (x.n_enc - 1.0) * block_act_elems(x, x.n2, x.n2, x.n2 * x.n2) +
               block_act_elems(x, x.n3, x.n2, x.n3 * x.n2) +
               block_act_elems(x, x.n4, x.n3, x.n4 * x.n3) +
               m * block_act_elems(x, tq, x.n4, tq * x.n4) +
               x.n_ar * block_act_elems(x, mt, mt, ar_pairs) + mt * x.d;
  const double worst_pathway_pairs = x.ls * (x.ls + mt);
  act += x.k_blocks * block_act_elems(x, x.ls, x.ls + mt, worst_pathway_pairs) +
         x.ls * x.vocab;
  out.activation_bytes = 8.0 * act;
  return out;
}

int64_t flops_crossover(const ModelConfig& cfg) {
  for (int64_t length = cfg.l_sub; length <= cfg.max_length(); length += cfg.l_sub) {
    if (flops_account(cfg, length, CostMode::Lane).flops <
        flops_account(cfg, length, CostMode::FullHistory).flops) {
      return length;
    }
  }
  return -1;
}

std::vector<SweepRow> cost_sweep(const ModelConfig& cfg, const std::vector<int64_t>& lengths) {
  std::vector<SweepRow> rows;
  rows.reserve(lengths.size());
  for (int64_t length : lengths) {
    const CostBreakdown lane = flops_account(cfg, length, CostMode::Lane);
    const CostBreakdown base = flops_account(cfg, length, CostMode::FullHistory);
    rows.push_back({length, lane.flops, base.flops, lane.activation_bytes,
                    base.activation_bytes,
                    lane.attention_score_flops / base.attention_score_flops});
  }
  return rows;
}

std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "L,lane_flops,baseline_flops,lane_mem,baseline_mem,score_ratio\n";
  out.precision(10);
  for (const SweepRow& r : rows) {
    out << r.length << ',' << r.lane_flops << ',' << r.baseline_flops << ',' << r.lane_mem << ','
        << r.baseline_mem << ',' << r.score_ratio << '\n';
  }
  return out.str();
}

}  // namespace lane
