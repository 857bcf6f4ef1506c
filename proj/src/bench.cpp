#include "lane/bench.hpp"

#include <algorithm>
#include <chrono>

#include <json.hpp>

namespace lane {

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

BenchReport throughput_bench(const ModelConfig& cfg, const Params& params,
                             const PointCloudSet& pcs, int64_t length,
                             const std::vector<int>& batch_limits, int repeats, int warmup) {
  if (repeats < 1) throw NumericError("throughput_bench: repeats must be >= 1");
  if (warmup < 2) throw NumericError("throughput_bench: need >= 2 warmup runs");

  BenchReport report;
  report.length = length;
  report.threads = effective_threads();
  report.repeats = repeats;
  report.warmup = warmup;

  const auto t0 = std::chrono::steady_clock::now();
  const LatentHierarchy h = build_hierarchy(pcs, length, cfg, params);
  report.hierarchy_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  report.m_count = h.m_count;

  std::vector<uint16_t> reference_tokens;
  auto timed = [&](DecodeMode mode, int batch_limit) {
    BenchRun run;
    run.mode = mode;
    run.batch_limit = batch_limit;
    for (int r = 0; r < warmup + repeats; ++r) {
      const GenerationResult res = mode == DecodeMode::Serial
                                       ? serial_generate(h, length, cfg, params)
                                       : adagraph_generate(h, length, cfg, params, batch_limit);
      if (reference_tokens.empty()) {
        reference_tokens = res.tokens.tokens;
      } else if (res.tokens.tokens != reference_tokens) {
        throw NumericError("throughput_bench: token mismatch between timed runs (mode=" +
                           std::string(decode_mode_name(mode)) + ", batch_limit=" +
                           std::to_string(batch_limit) + "); benchmark aborted");
      }
      if (r >= warmup) run.decode_seconds.push_back(res.timing.decode_s);
    }
    run.median_decode_s = median(run.decode_seconds);
    run.median_tok_per_s = static_cast<double>(length) / run.median_decode_s;
    return run;
  };

  const BenchRun serial = timed(DecodeMode::Serial, 1);
  report.runs.push_back(serial);
  for (int b : batch_limits) {
    const BenchRun ada = timed(DecodeMode::AdaGraph, b);
    report.runs.push_back(ada);
    report.speedups.emplace_back(b, ada.median_tok_per_s / serial.median_tok_per_s);
  }
  return report;
}

std::string bench_to_json(const BenchReport& report) {
  nlohmann::json j;
  j["L"] = report.length;
  j["M"] = report.m_count;
  j["threads"] = report.threads;
  j["repeats"] = report.repeats;
  j["warmup"] = report.warmup;
  j["hierarchy_s"] = report.hierarchy_s;
  j["runs"] = nlohmann::json::array();
  for (const BenchRun& run : report.runs) {
    nlohmann::json r;
    r["mode"] = decode_mode_name(run.mode);
    r["batch_limit"] = run.batch_limit;
    r["median_tok_per_s"] = run.median_tok_per_s;
    r["median_decode_s"] = run.median_decode_s;
    r["decode_seconds"] = run.decode_seconds;
    j["runs"].push_back(r);
  }
  j["speedups"] = nlohmann::json::array();
  for (const auto& [b, s] : report.speedups) {
    j["speedups"].push_back({{"batch_limit", b}, {"speedup", s}});
  }
  return j.dump(2);
}

}  // namespace lane
