#pragma once

#include <cstdint>
#include <string>

#include "lane/optim.hpp"

namespace lane {

// Binary container: magic "LANECKPT", little-endian u32 header length, a
// JSON header {"config_hash", "params": [{"name","shape"}...]}, then raw
// little-endian 64-bit floats per parameter in header order.
void save_checkpoint(const std::string& path, const ParamList& params, uint64_t config_hash);

// Fills the given parameter list in place. Hash, names and shapes must all
// match; a config-hash mismatch is a hard failure.
void load_checkpoint(const std::string& path, ParamList& params, uint64_t expected_hash);

uint64_t checkpoint_hash(const std::string& path);  // peek without loading

// Optimizer state rides in a sibling container with the same format
// ("adam.m.<param>", "adam.v.<param>" entries plus a "step" scalar).
void save_adam_state(const std::string& path, const ParamList& params, const AdamState& state,
                     uint64_t config_hash);
void load_adam_state(const std::string& path, const ParamList& params, AdamState& state,
                     uint64_t expected_hash);

}  // namespace lane
