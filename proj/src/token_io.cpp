#include <cstring>
#include <fstream>
#include <sstream>

#include "lane/tokenizer.hpp"

namespace lane {

namespace {
constexpr char kMagic[8] = {'L', 'A', 'N', 'E', 'T', 'O', 'K', '1'};

void put_u32le(std::ostream& out, uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t get_u32le(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}
}  // namespace

void write_tokens(const TokenSequence& seq, const std::string& path) {
  seq.validate();
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write '" + path + "'");
  f.write(kMagic, 8);
  const char scheme = static_cast<char>(seq.scheme);
  f.write(&scheme, 1);
  put_u32le(f, seq.true_length);
  for (uint32_t i = 0; i < seq.true_length; ++i) {
    const uint16_t t = seq.tokens[i];
    const unsigned char b[2] = {static_cast<unsigned char>(t),
                                static_cast<unsigned char>(t >> 8)};
    f.write(reinterpret_cast<const char*>(b), 2);
  }
  if (!f) throw std::runtime_error("write failed for '" + path + "'");
}

TokenSequence read_tokens(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open '" + path + "'");
  char magic[8];
  f.read(magic, 8);
  if (!f || std::memcmp(magic, kMagic, 8) != 0) {
    throw std::runtime_error("'" + path + "' is not a token container");
  }
  char scheme_byte = 0;
  f.read(&scheme_byte, 1);
  if (scheme_byte != 0 && scheme_byte != 1) {
    throw std::runtime_error("'" + path + "': unknown scheme byte");
  }
  TokenSequence seq;
  seq.scheme = static_cast<Scheme>(scheme_byte);
  seq.true_length = get_u32le(f);
  seq.tokens.resize(seq.true_length);
  for (uint32_t i = 0; i < seq.true_length; ++i) {
    unsigned char b[2];
    f.read(reinterpret_cast<char*>(b), 2);
    seq.tokens[i] = static_cast<uint16_t>(b[0]) | (static_cast<uint16_t>(b[1]) << 8);
  }
  if (!f) throw std::runtime_error("'" + path + "': truncated token container");
  seq.validate();
  return seq;
}

std::string tokens_to_text(const TokenSequence& seq) {
  std::ostringstream out;
  out << scheme_name(seq.scheme);
  for (uint32_t i = 0; i < seq.true_length; ++i) out << ' ' << seq.tokens[i];
  return out.str();
}

TokenSequence tokens_from_text(const std::string& text) {
  std::istringstream in(text);
  std::string scheme;
  if (!(in >> scheme)) throw std::runtime_error("empty token text");
  TokenSequence seq;
  seq.scheme = scheme_from_string(scheme);
  int id = 0;
  while (in >> id) {
    if (id < 0 || id >= tok::kVocabSize) {
      throw std::runtime_error("token id out of range: " + std::to_string(id));
    }
    seq.tokens.push_back(static_cast<uint16_t>(id));
  }
  seq.true_length = static_cast<uint32_t>(seq.tokens.size());
  seq.validate();
  return seq;
}

}  // namespace lane
