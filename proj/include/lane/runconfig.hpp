#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lane/model.hpp"
#include "lane/tokenizer.hpp"

namespace lane {

struct ShapeSpec {
  std::string kind = "cube";
  int resolution = 1;
  double jitter = 0.0;
};

struct DatasetSpec {
  std::vector<ShapeSpec> shapes = {{"cube", 1, 0.0}};
  // When > 0, conditioning clouds are sampled from damaged copies while
  // targets stay clean: the repair-training setup.
  double corrupt_fraction = 0.0;
};

struct Schedule {
  int64_t steps = 2000;
  double lr_max = 1e-4;
  double lr_min = 1e-6;
  int64_t batch_size = 4;
  int64_t checkpoint_every = 500;
  int64_t log_every = 10;
  std::string m_policy = "uniform";
};

// Everything a run needs, JSON-backed. Unknown fields are rejected so a
// typo cannot silently fall back to a default.
struct RunConfig {
  ModelConfig model;
  Scheme scheme = Scheme::Flat;
  uint64_t seed = 1;
  DatasetSpec dataset;
  Schedule schedule;
  std::string out_dir = "run_out";

  // Hash over the checkpoint-compatibility subset (model + scheme).
  uint64_t config_hash() const;
};

RunConfig run_config_from_json(const std::string& text);
RunConfig load_run_config(const std::string& path);
std::string run_config_to_json(const RunConfig& cfg);

}  // namespace lane
