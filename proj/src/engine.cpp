#include "lane/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <thread>

namespace lane {

namespace {

double now_seconds() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

// Greedy argmax, lowest token id wins ties.
uint16_t greedy_pick(const double* row, int64_t vocab) {
  int64_t best = 0;
  for (int64_t j = 1; j < vocab; ++j) {
    if (row[j] > row[best]) best = j;
  }
  return static_cast<uint16_t>(best);
}

struct PathwayOutput {
  std::vector<uint16_t> tokens;
  double max_logit = 0.0;
};

PathwayOutput run_pathway(const LatentHierarchy& h, const HierarchyKV& kv, int64_t m,
                          int64_t length, const ModelConfig& cfg, const Params& params) {
  NoGradGuard ng;
  const Tensor logits = predict_subsequence(h, m, length, cfg, params, &kv);
  PathwayOutput out;
  out.tokens.resize(static_cast<size_t>(cfg.l_sub));
  out.max_logit = logits.data()[0];
  for (int64_t i = 0; i < cfg.l_sub; ++i) {
    const double* row = logits.data().data() + i * cfg.vocab;
    out.tokens[static_cast<size_t>(i)] = greedy_pick(row, cfg.vocab);
    for (int64_t j = 0; j < cfg.vocab; ++j) out.max_logit = std::max(out.max_logit, row[j]);
  }
  return out;
}

GenerationResult assemble_result(std::vector<PathwayOutput> outputs, int64_t length,
                                 const ModelConfig& cfg, DecodeMode mode, int batch_limit,
                                 double decode_s) {
  GenerationResult res;
  res.m_count = static_cast<int64_t>(outputs.size());
  res.requested_length = length;
  res.mode = mode;
  res.batch_limit = batch_limit;
  std::vector<uint16_t> raw;
  raw.reserve(outputs.size() * static_cast<size_t>(cfg.l_sub));
  for (const PathwayOutput& o : outputs) {
    raw.insert(raw.end(), o.tokens.begin(), o.tokens.end());
    res.subsequence_max_logit.push_back(o.max_logit);
  }
  res.tokens = assemble_tokens(raw, length, Scheme::Flat);
  res.timing.decode_s = decode_s;
  res.timing.tok_per_s = decode_s > 0.0 ? static_cast<double>(length) / decode_s : 0.0;
  return res;
}

}  // namespace

int effective_threads() {
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw < 1) hw = 1;
  if (const char* env = std::getenv("LANE_THREADS")) {
    const int cap = std::atoi(env);
    if (cap >= 1) hw = std::min(hw, cap);
  }
  return hw;
}

DecodeMode decode_mode_from_string(const std::string& s) {
  if (s == "serial") return DecodeMode::Serial;
  if (s == "adagraph") return DecodeMode::AdaGraph;
  throw std::runtime_error("unknown mode '" + s + "' (expected serial|adagraph)");
}

const char* decode_mode_name(DecodeMode m) {
  return m == DecodeMode::Serial ? "serial" : "adagraph";
}

LatentHierarchy build_hierarchy(const PointCloudSet& pcs, int64_t length, const ModelConfig& cfg,
                                const Params& params) {
  const int64_t m_count = cfg.m_for_length(length);
  NoGradGuard ng;
  const Tensor latent = encode_point_cloud(pcs, cfg, params);
  const Tensor up1 = upsample(latent, pcs.x3, cfg, params, 0);
  const Tensor z = upsample(up1, pcs.x4, cfg, params, 1);
  const LatentHierarchy enc = construct_latent_spaces(z, length, m_count, cfg, params);
  return autoregress_latents(enc, cfg, params);
}

GenerationResult serial_generate(const LatentHierarchy& h, int64_t length, const ModelConfig& cfg,
                                 const Params& params) {
  NoGradGuard ng;
  const double t0 = now_seconds();
  const HierarchyKV kv = project_hierarchy_kv(h, cfg, params);
  std::vector<PathwayOutput> outputs(static_cast<size_t>(h.m_count));
  for (int64_t m = 1; m <= h.m_count; ++m) {
    outputs[static_cast<size_t>(m - 1)] = run_pathway(h, kv, m, length, cfg, params);
  }
  return assemble_result(std::move(outputs), length, cfg, DecodeMode::Serial, 1,
                         now_seconds() - t0);
}

GenerationResult adagraph_generate(const LatentHierarchy& h, int64_t length,
                                   const ModelConfig& cfg, const Params& params,
                                   int batch_limit) {
  if (batch_limit < 1) throw NumericError("adagraph_generate: batch_limit must be >= 1");
  NoGradGuard ng;
  const double t0 = now_seconds();
  const HierarchyKV kv = project_hierarchy_kv(h, cfg, params);

  std::vector<PathwaySpec> specs(static_cast<size_t>(h.m_count));
  for (int64_t m = 1; m <= h.m_count; ++m) {
    specs[static_cast<size_t>(m - 1)] = PathwaySpec{m, m, PathwaySpec::Status::Pending};
  }

  std::vector<PathwayOutput> outputs(specs.size());
  // Waves of at most batch_limit pathways; each pathway runs the same
  // kernels as serial mode on its own thread and writes only its slot.
  for (size_t wave = 0; wave < specs.size(); wave += static_cast<size_t>(batch_limit)) {
    const size_t end = std::min(specs.size(), wave + static_cast<size_t>(batch_limit));
    std::vector<std::thread> workers;
    workers.reserve(end - wave);
    std::vector<std::exception_ptr> errors(end - wave);
    for (size_t i = wave; i < end; ++i) {
      specs[i].status = PathwaySpec::Status::Running;
      workers.emplace_back([&, i] {
        try {
          outputs[i] = run_pathway(h, kv, specs[i].m, length, cfg, params);
        } catch (...) {
          errors[i - wave] = std::current_exception();
        }
      });
    }
    for (std::thread& w : workers) w.join();
    for (std::exception_ptr& e : errors) {
      if (e) std::rethrow_exception(e);
    }
    for (size_t i = wave; i < end; ++i) specs[i].status = PathwaySpec::Status::Done;
  }
  return assemble_result(std::move(outputs), length, cfg, DecodeMode::AdaGraph, batch_limit,
                         now_seconds() - t0);
}

TokenSequence assemble_tokens(const std::vector<uint16_t>& raw, int64_t length, Scheme scheme) {
  TokenSequence seq;
  seq.scheme = scheme;
  const size_t limit = std::min(raw.size(), static_cast<size_t>(length));
  seq.tokens.assign(raw.begin(), raw.begin() + static_cast<int64_t>(limit));
  while (!seq.tokens.empty() && seq.tokens.back() == tok::PAD) seq.tokens.pop_back();
  bool has_eos = false;
  for (size_t i = 0; i < seq.tokens.size(); ++i) {
    if (seq.tokens[i] == tok::EOS) {
      seq.tokens.resize(i + 1);
      has_eos = true;
      break;
    }
  }
  if (!has_eos) {
    if (static_cast<int64_t>(seq.tokens.size()) < length) {
      seq.tokens.push_back(tok::EOS);
    } else if (!seq.tokens.empty()) {
      seq.tokens.back() = tok::EOS;
    }
  }
  seq.true_length = static_cast<uint32_t>(seq.tokens.size());
  return seq;
}

namespace {

GenerateOutput finish_generation(const PointCloudSet& pcs, const GenerateOptions& opts,
                                 const ModelConfig& cfg, const Params& params) {
  GenerateOutput out;
  const double t0 = now_seconds();
  const LatentHierarchy h = build_hierarchy(pcs, opts.length, cfg, params);
  const double hierarchy_s = now_seconds() - t0;

  const int batch_limit = opts.batch_limit > 0 ? opts.batch_limit : effective_threads();
  out.result = opts.mode == DecodeMode::Serial
                   ? serial_generate(h, opts.length, cfg, params)
                   : adagraph_generate(h, opts.length, cfg, params, batch_limit);
  out.result.timing.hierarchy_s = hierarchy_s;

  const DetokenizeResult detok = detokenize_best_effort(out.result.tokens);
  out.mesh = detok.mesh;
  out.partial = detok.partial;
  out.detok_error = detok.error;
  return out;
}

}  // namespace

GenerateOutput generate_mesh(const Mesh& input, const GenerateOptions& opts,
                             const ModelConfig& cfg, const Params& params) {
  Mesh prepared = input;
  if (opts.corrupt_fraction > 0.0) {
    prepared = corrupt_mesh(prepared, opts.corrupt_fraction, opts.seed);
  }
  prepared = normalize(prepared);
  const PointCloudSet pcs = make_pointcloud_set(prepared, cfg.counts, opts.seed);
  return finish_generation(pcs, opts, cfg, params);
}

GenerateOutput generate_from_cloud(const std::vector<Vec3>& cloud, const GenerateOptions& opts,
                                   const ModelConfig& cfg, const Params& params) {
  const int64_t need = cfg.counts.n1;
  if (static_cast<int64_t>(cloud.size()) < need) {
    throw MeshError("cloud has " + std::to_string(cloud.size()) + " points, config needs N1=" +
                    std::to_string(need));
  }
  // Deterministic subsets via partial Fisher-Yates, one stream per X_i.
  auto subset = [&](int64_t n, uint64_t seed) {
    std::vector<size_t> idx(cloud.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    Rng rng(seed);
    std::vector<Vec3> out;
    out.reserve(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) {
      const size_t j = static_cast<size_t>(i) + static_cast<size_t>(rng.below(idx.size() - i));
      std::swap(idx[static_cast<size_t>(i)], idx[j]);
      out.push_back(cloud[idx[static_cast<size_t>(i)]]);
    }
    return out;
  };
  PointCloudSet pcs;
  pcs.seed = opts.seed;
  pcs.x1 = subset(cfg.counts.n1, opts.seed + 0);
  pcs.x2 = subset(cfg.counts.n2, opts.seed + 1);
  pcs.x3 = subset(cfg.counts.n3, opts.seed + 2);
  pcs.x4 = subset(cfg.counts.n4, opts.seed + 3);
  return finish_generation(pcs, opts, cfg, params);
}

}  // namespace lane
