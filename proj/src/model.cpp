#include "lane/model.hpp"

#include <cmath>

namespace lane {

namespace counters {
std::atomic<int64_t> extractor_runs{0};
std::atomic<int64_t> ar_runs{0};
}  // namespace counters

void ModelConfig::validate() const {
  if (d_model % n_heads != 0) throw NumericError("config: n_heads must divide d_model");
  if (d_model % 4 != 0) throw NumericError("config: d_model must be divisible by 4");
  if (k_blocks < 1) throw NumericError("config: k_blocks must be >= 1");
  if (t_sc < 1 || m_max < 1 || l_sub < 1) throw NumericError("config: bad hierarchy dims");
  if (vocab != tok::kVocabSize) throw NumericError("config: vocab must be 517");
  if (!(counts.n2 < counts.n3 && counts.n3 < counts.n4 && counts.n4 < counts.n1)) {
    throw NumericError("config: point counts must satisfy N2<N3<N4<N1");
  }
}

int64_t ModelConfig::m_for_length(int64_t length) const {
  if (length < 2) throw NumericError("length must be >= 2 (BOS/EOS framing)");
  if (length > max_length()) {
    throw NumericError("length " + std::to_string(length) + " exceeds capacity " +
                       std::to_string(max_length()) + " (= m_max * l_sub)");
  }
  return (length + l_sub - 1) / l_sub;
}

ModelConfig micro_config() {
  ModelConfig cfg;
  cfg.d_model = 16;
  cfg.n_heads = 2;
  cfg.k_blocks = 2;
  cfg.t_sc = 4;
  cfg.m_max = 3;
  cfg.l_sub = 8;
  cfg.d_ff = 32;
  cfg.n_enc_layers = 1;
  cfg.n_ar_layers = 1;
  cfg.n_freq = 2;
  cfg.counts = {32, 8, 12, 16};
  return cfg;
}

Tensor Params::get(const std::string& name) const {
  const auto it = by_name.find(name);
  if (it == by_name.end()) throw NumericError("unknown parameter '" + name + "'");
  return it->second;
}

Tensor Params::add(const std::string& name, std::vector<int64_t> shape, std::vector<double> data) {
  Tensor t = Tensor::from_data(std::move(shape), std::move(data), /*requires_grad=*/true);
  list.emplace_back(name, t);
  if (!by_name.emplace(name, t).second) {
    throw NumericError("duplicate parameter '" + name + "'");
  }
  return t;
}

namespace {

std::vector<double> normal_init(Rng& rng, int64_t n, double std_dev) {
  std::vector<double> v(static_cast<size_t>(n));
  for (double& x : v) x = std_dev * rng.normal();
  return v;
}

void add_linear(Params& p, Rng& rng, const std::string& name, int64_t in, int64_t out,
                bool zero = false) {
  p.add(name + ".w", {in, out},
        zero ? std::vector<double>(static_cast<size_t>(in * out), 0.0)
             : normal_init(rng, in * out, 0.02));
  p.add(name + ".b", {out}, std::vector<double>(static_cast<size_t>(out), 0.0));
}

void add_layernorm(Params& p, const std::string& name, int64_t d) {
  p.add(name + ".g", {d}, std::vector<double>(static_cast<size_t>(d), 1.0));
  p.add(name + ".b", {d}, std::vector<double>(static_cast<size_t>(d), 0.0));
}

void add_attn_block(Params& p, Rng& rng, const std::string& prefix, const ModelConfig& cfg,
                    bool cross) {
  const int64_t d = cfg.d_model;
  add_layernorm(p, prefix + ".ln_q", d);
  if (cross) add_layernorm(p, prefix + ".ln_kv", d);
  add_linear(p, rng, prefix + ".q", d, d);
  add_linear(p, rng, prefix + ".k", d, d);
  add_linear(p, rng, prefix + ".v", d, d);
  add_linear(p, rng, prefix + ".o", d, d);
  add_layernorm(p, prefix + ".ln2", d);
  add_linear(p, rng, prefix + ".ff1", d, cfg.d_ff);
  add_linear(p, rng, prefix + ".ff2", cfg.d_ff, d);
}

// Shared attention-block forwards (pre-norm, residual).

Tensor ffn(const Tensor& x, const Params& p, const std::string& prefix) {
  const Tensor h = layer_norm(x, p.get(prefix + ".ln2.g"), p.get(prefix + ".ln2.b"));
  const Tensor a = gelu(linear(h, p.get(prefix + ".ff1.w"), p.get(prefix + ".ff1.b")));
  return add(x, linear(a, p.get(prefix + ".ff2.w"), p.get(prefix + ".ff2.b")));
}

Tensor self_block(const Tensor& x, const BoolMask& mask, const Params& p,
                  const std::string& prefix, const ModelConfig& cfg) {
  const Tensor h = layer_norm(x, p.get(prefix + ".ln_q.g"), p.get(prefix + ".ln_q.b"));
  const Tensor q = linear(h, p.get(prefix + ".q.w"), p.get(prefix + ".q.b"));
  const Tensor k = linear(h, p.get(prefix + ".k.w"), p.get(prefix + ".k.b"));
  const Tensor v = linear(h, p.get(prefix + ".v.w"), p.get(prefix + ".v.b"));
  const Tensor a = attention(q, k, v, mask, static_cast<int>(cfg.n_heads));
  const Tensor x2 = add(x, linear(a, p.get(prefix + ".o.w"), p.get(prefix + ".o.b")));
  return ffn(x2, p, prefix);
}

Tensor cross_block(const Tensor& q_stream, const Tensor& kv_stream, const Params& p,
                   const std::string& prefix, const ModelConfig& cfg) {
  const Tensor hq =
      layer_norm(q_stream, p.get(prefix + ".ln_q.g"), p.get(prefix + ".ln_q.b"));
  const Tensor hk =
      layer_norm(kv_stream, p.get(prefix + ".ln_kv.g"), p.get(prefix + ".ln_kv.b"));
  const Tensor q = linear(hq, p.get(prefix + ".q.w"), p.get(prefix + ".q.b"));
  const Tensor k = linear(hk, p.get(prefix + ".k.w"), p.get(prefix + ".k.b"));
  const Tensor v = linear(hk, p.get(prefix + ".v.w"), p.get(prefix + ".v.b"));
  const BoolMask mask = BoolMask::all_true(q.dim(0), k.dim(0));
  const Tensor a = attention(q, k, v, mask, static_cast<int>(cfg.n_heads));
  const Tensor x = add(q_stream, linear(a, p.get(prefix + ".o.w"), p.get(prefix + ".o.b")));
  return ffn(x, p, prefix);
}

// Layer norm with fixed unit affine, for the adaptively modulated path.
Tensor layer_norm_plain(const Tensor& x) {
  const int64_t n = x.dim(1);
  const Tensor ones = Tensor::from_data({n}, std::vector<double>(static_cast<size_t>(n), 1.0));
  const Tensor zeros = Tensor::zeros({n});
  return layer_norm(x, ones, zeros);
}

}  // namespace

Params init_params(const ModelConfig& cfg, uint64_t seed) {
  cfg.validate();
  Params p;
  Rng rng(seed);
  const int64_t d = cfg.d_model;

  add_linear(p, rng, "feat", cfg.feature_dim(), d);

  add_attn_block(p, rng, "enc0", cfg, /*cross=*/true);
  for (int64_t i = 1; i < cfg.n_enc_layers; ++i) {
    add_attn_block(p, rng, "enc" + std::to_string(i), cfg, /*cross=*/false);
  }
  add_attn_block(p, rng, "up0", cfg, /*cross=*/true);
  add_attn_block(p, rng, "up1", cfg, /*cross=*/true);

  p.add("sc_init", {cfg.m_max * cfg.t_sc, d}, normal_init(rng, cfg.m_max * cfg.t_sc * d, 0.02));
  add_linear(p, rng, "len", d, d);
  add_attn_block(p, rng, "ctor", cfg, /*cross=*/true);

  for (int64_t i = 0; i < cfg.n_ar_layers; ++i) {
    add_attn_block(p, rng, "ar" + std::to_string(i), cfg, /*cross=*/false);
  }

  for (int64_t k = 0; k < cfg.k_blocks; ++k) {
    const std::string prefix = "blk" + std::to_string(k);
    add_linear(p, rng, prefix + ".cond1", d, d);
    // Zero-initialized modulation heads: (alpha, beta) = (0, 0) at start,
    // so the modulated norm begins as identity.
    add_linear(p, rng, prefix + ".alpha", d, d, /*zero=*/true);
    add_linear(p, rng, prefix + ".beta", d, d, /*zero=*/true);
    add_linear(p, rng, prefix + ".q", d, d);
    add_linear(p, rng, prefix + ".k", d, d);
    add_linear(p, rng, prefix + ".v", d, d);
    add_linear(p, rng, prefix + ".o", d, d);
    add_layernorm(p, prefix + ".ln2", d);
    add_linear(p, rng, prefix + ".ff1", d, cfg.d_ff);
    add_linear(p, rng, prefix + ".ff2", cfg.d_ff, d);
  }

  p.add("q_bank", {cfg.l_sub, d}, normal_init(rng, cfg.l_sub * d, 0.02));
  p.add("idx_emb", {cfg.m_max, d}, normal_init(rng, cfg.m_max * d, 0.02));
  add_layernorm(p, "head.ln", d);
  // Zero-initialized head: exactly uniform logits before training.
  add_linear(p, rng, "head", d, cfg.vocab, /*zero=*/true);
  return p;
}

Tensor featurize_points(const std::vector<Vec3>& pts, const ModelConfig& cfg, const Params& p) {
  if (pts.empty()) throw NumericError("featurize_points: empty cloud");
  const int64_t fdim = cfg.feature_dim();
  std::vector<double> feat;
  feat.reserve(pts.size() * static_cast<size_t>(fdim));
  constexpr double pi = 3.14159265358979323846;
  for (const Vec3& pt : pts) {
    const double coords[3] = {pt.x, pt.y, pt.z};
    feat.push_back(pt.x);
    feat.push_back(pt.y);
    feat.push_back(pt.z);
    for (int axis = 0; axis < 3; ++axis) {
      double freq = pi;
      for (int64_t j = 0; j < cfg.n_freq; ++j) {
        feat.push_back(std::sin(freq * coords[axis]));
        feat.push_back(std::cos(freq * coords[axis]));
        freq *= 2.0;
      }
    }
  }
  const Tensor raw =
      Tensor::from_data({static_cast<int64_t>(pts.size()), fdim}, std::move(feat));
  return linear(raw, p.get("feat.w"), p.get("feat.b"));
}

Tensor encode_point_cloud(const PointCloudSet& pcs, const ModelConfig& cfg, const Params& p) {
  counters::extractor_runs.fetch_add(1, std::memory_order_relaxed);
  if (static_cast<int64_t>(pcs.x1.size()) != cfg.counts.n1 ||
      static_cast<int64_t>(pcs.x2.size()) != cfg.counts.n2) {
    throw NumericError("encode_point_cloud: cloud sizes do not match config counts");
  }
  const Tensor fx1 = featurize_points(pcs.x1, cfg, p);
  const Tensor fx2 = featurize_points(pcs.x2, cfg, p);
  Tensor x = cross_block(fx2, fx1, p, "enc0", cfg);
  for (int64_t i = 1; i < cfg.n_enc_layers; ++i) {
    const BoolMask full = BoolMask::all_true(x.dim(0), x.dim(0));
    x = self_block(x, full, p, "enc" + std::to_string(i), cfg);
  }
  return x;
}

Tensor upsample(const Tensor& latent, const std::vector<Vec3>& queries, const ModelConfig& cfg,
                const Params& p, int stage) {
  if (stage != 0 && stage != 1) throw NumericError("upsample: stage must be 0 or 1");
  const Tensor fq = featurize_points(queries, cfg, p);
  return cross_block(fq, latent, p, stage == 0 ? "up0" : "up1", cfg);
}

Tensor length_embedding(int64_t length, const ModelConfig& cfg, const Params& p) {
  if (length < 0 || length > cfg.max_length()) {
    throw NumericError("length_embedding: length " + std::to_string(length) +
                       " outside [0, capacity]");
  }
  const int64_t d = cfg.d_model;
  const int64_t half = d / 2;
  const double parts[2] = {static_cast<double>(length / cfg.l_sub),
                           static_cast<double>(length % cfg.l_sub)};
  std::vector<double> feat(static_cast<size_t>(d));
  for (int part = 0; part < 2; ++part) {
    for (int64_t i = 0; i < half / 2; ++i) {
      const double angle =
          parts[part] / std::pow(10000.0, 2.0 * static_cast<double>(i) / static_cast<double>(half));
      feat[static_cast<size_t>(part * half + 2 * i)] = std::sin(angle);
      feat[static_cast<size_t>(part * half + 2 * i + 1)] = std::cos(angle);
    }
  }
  const Tensor raw = Tensor::from_data({1, d}, std::move(feat));
  return linear(raw, p.get("len.w"), p.get("len.b"));
}

LatentHierarchy construct_latent_spaces(const Tensor& z, int64_t length, int64_t m_count,
                                        const ModelConfig& cfg, const Params& p) {
  if (m_count < 1 || m_count > cfg.m_max) {
    throw NumericError("construct_latent_spaces: m_count " + std::to_string(m_count) +
                       " outside [1, m_max]");
  }
  const Tensor len_e = length_embedding(length, cfg, p);
  const Tensor sc_init = p.get("sc_init");

  // K/V of Z are shared by every slot; project once.
  const Tensor hk = layer_norm(z, p.get("ctor.ln_kv.g"), p.get("ctor.ln_kv.b"));
  const Tensor zk = linear(hk, p.get("ctor.k.w"), p.get("ctor.k.b"));
  const Tensor zv = linear(hk, p.get("ctor.v.w"), p.get("ctor.v.b"));
  const BoolMask mask = BoolMask::all_true(cfg.t_sc + 1, zk.dim(0));

  Tensor spaces;
  for (int64_t m = 0; m < m_count; ++m) {
    const Tensor init_m = slice_rows(sc_init, m * cfg.t_sc, (m + 1) * cfg.t_sc);
    const Tensor q_stream = concat_rows(init_m, len_e);
    const Tensor hq = layer_norm(q_stream, p.get("ctor.ln_q.g"), p.get("ctor.ln_q.b"));
    const Tensor q = linear(hq, p.get("ctor.q.w"), p.get("ctor.q.b"));
    const Tensor a = attention(q, zk, zv, mask, static_cast<int>(cfg.n_heads));
    Tensor x = add(q_stream, linear(a, p.get("ctor.o.w"), p.get("ctor.o.b")));
    x = ffn(x, p, "ctor");
    const Tensor sc_m = slice_rows(x, 0, cfg.t_sc);  // drop the length row
    spaces = (m == 0) ? sc_m : concat_rows(spaces, sc_m);
  }
  return LatentHierarchy{spaces, m_count, LatentHierarchy::Stage::Encoded};
}

LatentHierarchy autoregress_latents(const LatentHierarchy& h, const ModelConfig& cfg,
                                    const Params& p) {
  if (h.stage != LatentHierarchy::Stage::Encoded) {
    throw NumericError("autoregress_latents: hierarchy already autoregressed");
  }
  counters::ar_runs.fetch_add(1, std::memory_order_relaxed);
  const int64_t n = h.m_count * cfg.t_sc;
  BoolMask mask{n, n, std::vector<uint8_t>(static_cast<size_t>(n * n), 0)};
  for (int64_t i = 0; i < n; ++i) {
    for (int64_t j = 0; j < n; ++j) {
      // Block-causal at latent-space granularity.
      mask.set(i, j, j / cfg.t_sc <= i / cfg.t_sc);
    }
  }
  Tensor x = h.spaces;
  for (int64_t i = 0; i < cfg.n_ar_layers; ++i) {
    x = self_block(x, mask, p, "ar" + std::to_string(i), cfg);
  }
  return LatentHierarchy{x, h.m_count, LatentHierarchy::Stage::Autoregressed};
}

Tensor condition_vector(int64_t length, int64_t m, const ModelConfig& cfg, const Params& p) {
  const Tensor idx = embedding(p.get("idx_emb"), {static_cast<int>(m - 1)});
  return add(length_embedding(length, cfg, p), idx);
}

HierarchyKV project_hierarchy_kv(const LatentHierarchy& h, const ModelConfig& cfg,
                                 const Params& p) {
  HierarchyKV kv;
  kv.keys.reserve(cfg.k_blocks);
  kv.values.reserve(cfg.k_blocks);
  for (int64_t k = 0; k < cfg.k_blocks; ++k) {
    const std::string prefix = "blk" + std::to_string(k);
    kv.keys.push_back(linear(h.spaces, p.get(prefix + ".k.w"), p.get(prefix + ".k.b")));
    kv.values.push_back(linear(h.spaces, p.get(prefix + ".v.w"), p.get(prefix + ".v.b")));
  }
  return kv;
}

Tensor lane_block(const Tensor& tokens, const LatentHierarchy& h, int64_t m, const Tensor& cond,
                  const ModelConfig& cfg, const Params& p, int64_t k,
                  const HierarchyKV* kv_cache) {
  if (h.stage != LatentHierarchy::Stage::Autoregressed) {
    throw NumericError("lane_block: hierarchy must be autoregressed");
  }
  if (m < 1 || m > h.m_count) {
    throw NumericError("lane_block: pathway " + std::to_string(m) + " exceeds hierarchy (M=" +
                       std::to_string(h.m_count) + ")");
  }
  MeterScope activation_scope;
  const std::string prefix = "blk" + std::to_string(k);
  const int64_t d = cfg.d_model;
  const int64_t n_latent = h.m_count * cfg.t_sc;

  // Adaptive modulation.
  const Tensor c = gelu(linear(cond, p.get(prefix + ".cond1.w"), p.get(prefix + ".cond1.b")));
  const Tensor alpha =
      reshape(linear(c, p.get(prefix + ".alpha.w"), p.get(prefix + ".alpha.b")), {d});
  const Tensor beta =
      reshape(linear(c, p.get(prefix + ".beta.w"), p.get(prefix + ".beta.b")), {d});
  const Tensor ones = Tensor::from_data({d}, std::vector<double>(static_cast<size_t>(d), 1.0));
  Tensor x = layer_norm_plain(tokens);
  x = add_rowvec(mul_rowvec(x, add(ones, alpha)), beta);

  // Joint attention: queries are the subsequence tokens; keys/values are
  // [x ; all latent tokens], with spaces beyond m masked off. Masked
  // entries contribute exact zeros, so this equals attending to the
  // prefix alone, bit for bit.
  const Tensor q = linear(x, p.get(prefix + ".q.w"), p.get(prefix + ".q.b"));
  const Tensor kx = linear(x, p.get(prefix + ".k.w"), p.get(prefix + ".k.b"));
  const Tensor vx = linear(x, p.get(prefix + ".v.w"), p.get(prefix + ".v.b"));
  const Tensor kl = kv_cache ? kv_cache->keys[static_cast<size_t>(k)]
                             : linear(h.spaces, p.get(prefix + ".k.w"), p.get(prefix + ".k.b"));
  const Tensor vl = kv_cache ? kv_cache->values[static_cast<size_t>(k)]
                             : linear(h.spaces, p.get(prefix + ".v.w"), p.get(prefix + ".v.b"));
  const Tensor keys = concat_rows(kx, kl);
  const Tensor values = concat_rows(vx, vl);

  BoolMask mask{cfg.l_sub, cfg.l_sub + n_latent,
                std::vector<uint8_t>(static_cast<size_t>(cfg.l_sub * (cfg.l_sub + n_latent)), 0)};
  for (int64_t i = 0; i < cfg.l_sub; ++i) {
    for (int64_t j = 0; j < cfg.l_sub + m * cfg.t_sc; ++j) mask.set(i, j, true);
  }

  const Tensor a = attention(q, keys, values, mask, static_cast<int>(cfg.n_heads));
  const Tensor x2 = add(tokens, linear(a, p.get(prefix + ".o.w"), p.get(prefix + ".o.b")));
  return ffn(x2, p, prefix);
}

Tensor predict_subsequence(const LatentHierarchy& h, int64_t m, int64_t length,
                           const ModelConfig& cfg, const Params& p,
                           const HierarchyKV* kv_cache) {
  if (h.stage != LatentHierarchy::Stage::Autoregressed) {
    throw NumericError("predict_subsequence: hierarchy must be autoregressed");
  }
  if (m < 1 || m > h.m_count) {
    throw NumericError("predict_subsequence: pathway " + std::to_string(m) +
                       " exceeds hierarchy (M=" + std::to_string(h.m_count) + ")");
  }
  const Tensor idx = embedding(p.get("idx_emb"), {static_cast<int>(m - 1)});
  const Tensor cond = add(length_embedding(length, cfg, p), idx);
  Tensor tokens = add_rowvec(p.get("q_bank"), reshape(idx, {cfg.d_model}));
  for (int64_t k = 0; k < cfg.k_blocks; ++k) {
    tokens = lane_block(tokens, h, m, cond, cfg, p, k, kv_cache);
  }
  const Tensor hh = layer_norm(tokens, p.get("head.ln.g"), p.get("head.ln.b"));
  return linear(hh, p.get("head.w"), p.get("head.b"));
}

Tensor subsequence_loss(const Tensor& logits, const std::vector<uint16_t>& target) {
  if (logits.dim(0) != static_cast<int64_t>(target.size())) {
    throw NumericError("subsequence_loss: logits rows != target length");
  }
  std::vector<int> ids(target.begin(), target.end());
  return cross_entropy(logits, ids, tok::PAD);
}

TrainStepStats train_step(const std::vector<TrainSample>& batch, const MPolicy& policy,
                          const ModelConfig& cfg, Params& params, AdamState& opt, Rng& rng) {
  if (batch.empty()) throw NumericError("train_step: empty batch");
  for (auto& [name, t] : params.list) t.zero_grad();
  meter::reset_peak();

  const double inv_b = 1.0 / static_cast<double>(batch.size());
  double loss_sum = 0.0;
  for (const TrainSample& sample : batch) {
    const int64_t m_count = sample.subs.m_count;
    if (m_count < 1 || m_count > cfg.m_max) {
      throw NumericError("train_step: sample has " + std::to_string(m_count) +
                         " subsequences, config allows m_max=" + std::to_string(cfg.m_max));
    }
    int64_t m = 1;
    switch (policy.kind) {
      case MPolicy::Kind::Uniform:
        m = 1 + static_cast<int64_t>(rng.below(static_cast<uint64_t>(m_count)));
        break;
      case MPolicy::Kind::Fixed:
        m = std::min<int64_t>(policy.fixed_m, m_count);
        break;
    }

    const Tensor latent = encode_point_cloud(sample.pcs, cfg, params);
    const Tensor up1 = upsample(latent, sample.pcs.x3, cfg, params, 0);
    const Tensor z = upsample(up1, sample.pcs.x4, cfg, params, 1);
    const LatentHierarchy enc =
        construct_latent_spaces(z, sample.subs.true_length, m_count, cfg, params);
    const LatentHierarchy h = autoregress_latents(enc, cfg, params);
    const Tensor logits = predict_subsequence(h, m, sample.subs.true_length, cfg, params);
    const Tensor loss = subsequence_loss(logits, sample.subs.subsequences[m - 1]);
    loss_sum += loss.item();
    // Per-sample backward keeps only one sample's graph alive at a time;
    // gradients accumulate across samples.
    backward(scale(loss, inv_b));
  }

  adam_step(params.list, opt);
  TrainStepStats stats;
  stats.loss = loss_sum * inv_b;
  stats.lane_block_peak_bytes = meter::peak_bytes();
  return stats;
}

}  // namespace lane
