#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lane/mesh.hpp"
#include "lane/model.hpp"
#include "lane/tokenizer.hpp"

namespace lane {

// Number of worker threads for pathway batching: hardware concurrency,
// optionally capped by the LANE_THREADS environment variable.
int effective_threads();

enum class DecodeMode { Serial, AdaGraph };
DecodeMode decode_mode_from_string(const std::string& s);
const char* decode_mode_name(DecodeMode m);

// One independent decoding pathway: subsequence index, its activated
// latent prefix (always 1..m), and scheduling state.
struct PathwaySpec {
  int64_t m = 1;
  int64_t active_spaces_end = 1;  // spaces 1..m
  enum class Status { Pending, Running, Done } status = Status::Pending;
};

struct GenTiming {
  double hierarchy_s = 0.0;
  double decode_s = 0.0;
  double tok_per_s = 0.0;
};

struct GenerationResult {
  TokenSequence tokens;
  std::vector<double> subsequence_max_logit;  // one summary per pathway
  GenTiming timing;
  int64_t m_count = 0;
  int64_t requested_length = 0;
  DecodeMode mode = DecodeMode::Serial;
  int batch_limit = 1;
};

// Extractor + autoregressive block, exactly once. M = ceil(L / l_sub).
LatentHierarchy build_hierarchy(const PointCloudSet& pcs, int64_t length, const ModelConfig& cfg,
                                const Params& params);

// Reference decode: pathways m = 1..M in order, greedy argmax with
// lowest-id tie-break.
GenerationResult serial_generate(const LatentHierarchy& h, int64_t length, const ModelConfig& cfg,
                                 const Params& params);

// Parallel decode: the same pathway computation, batched across worker
// threads in groups of batch_limit. Token output is bitwise identical to
// serial_generate by construction (same kernels, same reduction orders).
GenerationResult adagraph_generate(const LatentHierarchy& h, int64_t length,
                                   const ModelConfig& cfg, const Params& params, int batch_limit);

// End-to-end: mesh (optionally corrupted first) or bare point cloud in,
// mesh out. Detokenization is best-effort; partial grammars are flagged.
struct GenerateOptions {
  int64_t length = 0;
  DecodeMode mode = DecodeMode::AdaGraph;
  int batch_limit = 0;  // 0 = effective_threads()
  uint64_t seed = 1;
  double corrupt_fraction = 0.0;  // applied to mesh inputs before sampling
};

struct GenerateOutput {
  Mesh mesh;
  GenerationResult result;
  bool partial = false;
  std::string detok_error;
};

GenerateOutput generate_mesh(const Mesh& input, const GenerateOptions& opts,
                             const ModelConfig& cfg, const Params& params);

// Cloud-only entry: X1..X4 are subsampled from the given points.
GenerateOutput generate_from_cloud(const std::vector<Vec3>& cloud, const GenerateOptions& opts,
                                   const ModelConfig& cfg, const Params& params);

// Shared assembly rule: concatenated argmax rows -> trailing PAD dropped
// within the first L positions -> truncated at the first EOS, or EOS
// forced at position L-1 when none was produced.
TokenSequence assemble_tokens(const std::vector<uint16_t>& raw, int64_t length, Scheme scheme);

}  // namespace lane
