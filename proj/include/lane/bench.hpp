#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lane/engine.hpp"
#include "lane/model.hpp"

namespace lane {

struct BenchRun {
  DecodeMode mode = DecodeMode::Serial;
  int batch_limit = 1;
  double median_tok_per_s = 0.0;
  double median_decode_s = 0.0;
  std::vector<double> decode_seconds;
};

struct BenchReport {
  int64_t length = 0;
  int64_t m_count = 0;
  int threads = 1;
  int repeats = 0;
  int warmup = 0;
  double hierarchy_s = 0.0;
  std::vector<BenchRun> runs;
  // adagraph median throughput over serial median, per batch limit.
  std::vector<std::pair<int, double>> speedups;
};

// Decode-throughput comparison on one fixture. The hierarchy is built once
// and shared; every timed run's token output is compared against the first
// run and any mismatch aborts the benchmark (correctness precedes speed).
BenchReport throughput_bench(const ModelConfig& cfg, const Params& params,
                             const PointCloudSet& pcs, int64_t length,
                             const std::vector<int>& batch_limits, int repeats, int warmup);

std::string bench_to_json(const BenchReport& report);

}  // namespace lane
