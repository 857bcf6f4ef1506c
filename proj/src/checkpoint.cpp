#include "lane/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

namespace lane {

namespace {

constexpr char kMagic[8] = {'L', 'A', 'N', 'E', 'C', 'K', 'P', 'T'};

std::string hash_hex(uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_raw(std::ofstream& f, const std::vector<double>& data) {
  // Doubles are written byte-for-byte; this code targets little-endian
  // IEEE-754 hosts, which is asserted at build time below.
  static_assert(sizeof(double) == 8);
  f.write(reinterpret_cast<const char*>(data.data()),
          static_cast<std::streamsize>(data.size() * sizeof(double)));
}

nlohmann::json read_header(std::ifstream& f, const std::string& path) {
  char magic[8];
  f.read(magic, 8);
  if (!f || std::memcmp(magic, kMagic, 8) != 0) {
    throw NumericError("'" + path + "' is not a checkpoint container");
  }
  unsigned char lenb[4];
  f.read(reinterpret_cast<char*>(lenb), 4);
  const uint32_t len = static_cast<uint32_t>(lenb[0]) | (static_cast<uint32_t>(lenb[1]) << 8) |
                       (static_cast<uint32_t>(lenb[2]) << 16) |
                       (static_cast<uint32_t>(lenb[3]) << 24);
  std::string header(len, '\0');
  f.read(header.data(), len);
  if (!f) throw NumericError("'" + path + "': truncated checkpoint header");
  return nlohmann::json::parse(header);
}

void save_container(const std::string& path, const ParamList& params, uint64_t config_hash) {
  nlohmann::json header;
  header["config_hash"] = hash_hex(config_hash);
  header["params"] = nlohmann::json::array();
  for (const auto& [name, t] : params) {
    header["params"].push_back({{"name", name}, {"shape", t.shape()}});
  }
  const std::string hs = header.dump();

  std::ofstream f(path, std::ios::binary);
  if (!f) throw NumericError("cannot write '" + path + "'");
  f.write(kMagic, 8);
  const uint32_t len = static_cast<uint32_t>(hs.size());
  const unsigned char lenb[4] = {
      static_cast<unsigned char>(len), static_cast<unsigned char>(len >> 8),
      static_cast<unsigned char>(len >> 16), static_cast<unsigned char>(len >> 24)};
  f.write(reinterpret_cast<const char*>(lenb), 4);
  f.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  for (const auto& [name, t] : params) write_raw(f, t.data());
  if (!f) throw NumericError("write failed for '" + path + "'");
}

void load_container(const std::string& path, ParamList& params, uint64_t expected_hash) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw NumericError("cannot open '" + path + "'");
  const nlohmann::json header = read_header(f, path);
  if (header.at("config_hash").get<std::string>() != hash_hex(expected_hash)) {
    throw NumericError("'" + path + "': config hash mismatch (checkpoint " +
                       header.at("config_hash").get<std::string>() + ", expected " +
                       hash_hex(expected_hash) + ")");
  }
  const auto& meta = header.at("params");
  if (meta.size() != params.size()) {
    throw NumericError("'" + path + "': checkpoint has " + std::to_string(meta.size()) +
                       " parameters, model has " + std::to_string(params.size()));
  }
  for (size_t i = 0; i < params.size(); ++i) {
    auto& [name, t] = params[i];
    if (meta[i].at("name").get<std::string>() != name) {
      throw NumericError("'" + path + "': parameter order mismatch at '" + name + "'");
    }
    if (meta[i].at("shape").get<std::vector<int64_t>>() != t.shape()) {
      throw NumericError("'" + path + "': shape mismatch for '" + name + "'");
    }
    auto& data = t.mutable_data();
    f.read(reinterpret_cast<char*>(data.data()),
           static_cast<std::streamsize>(data.size() * sizeof(double)));
  }
  if (!f) throw NumericError("'" + path + "': truncated checkpoint payload");
}

}  // namespace

void save_checkpoint(const std::string& path, const ParamList& params, uint64_t config_hash) {
  save_container(path, params, config_hash);
}

void load_checkpoint(const std::string& path, ParamList& params, uint64_t expected_hash) {
  load_container(path, params, expected_hash);
}

uint64_t checkpoint_hash(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw NumericError("cannot open '" + path + "'");
  const nlohmann::json header = read_header(f, path);
  return std::stoull(header.at("config_hash").get<std::string>(), nullptr, 16);
}

void save_adam_state(const std::string& path, const ParamList& params, const AdamState& state,
                     uint64_t config_hash) {
  ParamList shadow;
  shadow.emplace_back("step", Tensor::from_data({1}, {static_cast<double>(state.step)}));
  for (size_t i = 0; i < params.size(); ++i) {
    shadow.emplace_back("adam.m." + params[i].first,
                        Tensor::from_data(params[i].second.shape(), state.m[i]));
    shadow.emplace_back("adam.v." + params[i].first,
                        Tensor::from_data(params[i].second.shape(), state.v[i]));
  }
  save_container(path, shadow, config_hash);
}

void load_adam_state(const std::string& path, const ParamList& params, AdamState& state,
                     uint64_t expected_hash) {
  ParamList shadow;
  shadow.emplace_back("step", Tensor::zeros({1}));
  for (size_t i = 0; i < params.size(); ++i) {
    shadow.emplace_back("adam.m." + params[i].first, Tensor::zeros(params[i].second.shape()));
    shadow.emplace_back("adam.v." + params[i].first, Tensor::zeros(params[i].second.shape()));
  }
  load_container(path, shadow, expected_hash);
  state.step = static_cast<int64_t>(shadow[0].second.data()[0]);
  state.m.resize(params.size());
  state.v.resize(params.size());
  for (size_t i = 0; i < params.size(); ++i) {
    state.m[i] = shadow[1 + 2 * i].second.data();
    state.v[i] = shadow[2 + 2 * i].second.data();
  }
}

}  // namespace lane
