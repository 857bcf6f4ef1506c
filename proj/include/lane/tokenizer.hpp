#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "lane/mesh.hpp"

namespace lane {

// Token vocabulary: 512 coordinate bins + 5 control tokens.
namespace tok {
inline constexpr uint16_t kCoordBins = 512;
inline constexpr uint16_t BOS = 512;
inline constexpr uint16_t EOS = 513;
inline constexpr uint16_t PAD = 514;
inline constexpr uint16_t END_BRANCH = 515;
inline constexpr uint16_t NEW_COMP = 516;
inline constexpr uint16_t kVocabSize = 517;
inline bool is_coord(uint16_t t) { return t < kCoordBins; }
}  // namespace tok

enum class Scheme : uint8_t { Flat = 0, HalfEdge = 1 };

Scheme scheme_from_string(const std::string& s);
const char* scheme_name(Scheme s);

class TokenError : public std::runtime_error {
 public:
  TokenError(const std::string& what, size_t position)
      : std::runtime_error(what + " (token position " + std::to_string(position) + ")"),
        position(position) {}
  size_t position;
};

// 1D topological sequence. tokens[0] is BOS, tokens[true_length-1] is EOS,
// anything past true_length is PAD. Coordinate tokens come in groups of 3,
// ordered z,y,x within each vertex.
struct TokenSequence {
  std::vector<uint16_t> tokens;
  Scheme scheme = Scheme::Flat;
  uint32_t true_length = 0;

  void validate() const;  // throws TokenError on framing violations
};

// Quantized view of a mesh: vertices snapped to bin indices and deduped,
// faces rotation-canonicalized (lexicographically smallest (z,y,x) vertex
// first), sorted, duplicates and degenerates dropped. This is the exact
// object a token sequence encodes, and the round-trip comparison target.
struct QuantVertex {
  int z = 0, y = 0, x = 0;
  friend auto operator<=>(const QuantVertex&, const QuantVertex&) = default;
};

struct QuantMesh {
  std::vector<QuantVertex> verts;
  std::vector<Face> faces;
  friend bool operator==(const QuantMesh&, const QuantMesh&) = default;
};

QuantMesh quantize_mesh(const Mesh& mesh, const QuantizationGrid& grid = {});
Mesh dequantize_mesh(const QuantMesh& qm, const QuantizationGrid& grid = {});

// FLAT: BOS, then 9 coordinate tokens per face (z,y,x per vertex), EOS.
// L = 9f + 2 over the canonicalized face list.
TokenSequence tokenize_flat(const Mesh& mesh, const QuantizationGrid& grid = {});

// HALFEDGE: depth-first traversal over shared edges; each face after the
// first in its component costs only its apex vertex (3 tokens).
//
// Stack discipline (encoder and decoder replay it identically):
//   - A component opens with its canonically-smallest face: 9 coordinate
//     tokens (NEW_COMP first for every component after the first). Its
//     half-edges (a,b),(b,c),(c,a) are pushed in that order.
//   - Pop (u,v). If a face containing the directed edge (v,u) was already
//     emitted, skip silently -- the decoder can see that face in its own
//     partial reconstruction, so no token is spent. Otherwise, if the input
//     has an unvisited face (v,u,w), emit w's 3 tokens and push (w,v) then
//     (u,w); if there is no such face (boundary), emit END_BRANCH.
//   - Once every face of the current component has been emitted the stack
//     is abandoned: remaining pops could only produce silent skips and
//     END_BRANCH, so the sequence jumps straight to NEW_COMP or EOS and
//     the decoder drops its stack on either token.
//
// Requires consistent winding: a directed edge owned by two faces is
// rejected with the offending edge.
TokenSequence tokenize_halfedge(const Mesh& mesh, const QuantizationGrid& grid = {});

TokenSequence tokenize(const Mesh& mesh, Scheme scheme, const QuantizationGrid& grid = {});

// Strict decoding: any grammar violation throws TokenError with the
// offending position.
Mesh detokenize(const TokenSequence& seq, const QuantizationGrid& grid = {});

// Best-effort decoding: truncates at the last completed face instead of
// throwing, and flags the sequence as partial.
struct DetokenizeResult {
  Mesh mesh;
  bool partial = false;
  size_t error_position = 0;  // meaningful when partial
  std::string error;
};
DetokenizeResult detokenize_best_effort(const TokenSequence& seq,
                                        const QuantizationGrid& grid = {});

// Uniform split into M = ceil(L / l_sub) chunks of exactly l_sub tokens;
// the last chunk is PAD-filled.
struct SubsequenceBatch {
  std::vector<std::vector<uint16_t>> subsequences;
  int m_count = 0;
  int l_sub = 0;
  uint32_t true_length = 0;
  Scheme scheme = Scheme::Flat;
};

SubsequenceBatch split_subsequences(const TokenSequence& seq, int l_sub);
TokenSequence concat_subsequences(const SubsequenceBatch& batch);

struct SeqStats {
  uint32_t length = 0;
  size_t faces = 0;
  double tokens_per_face = 0.0;  // (L-2)/faces; 0 when faces == 0
  size_t control_tokens = 0;
  bool degenerate = false;  // no faces
};

SeqStats seq_stats(const TokenSequence& seq, const QuantizationGrid& grid = {});

// Binary container: magic "LANETOK1", scheme byte, little-endian u32 L,
// then L little-endian u16 ids. PAD tail is not serialized.
void write_tokens(const TokenSequence& seq, const std::string& path);
TokenSequence read_tokens(const std::string& path);

// Debug text form: scheme name then space-separated ids.
std::string tokens_to_text(const TokenSequence& seq);
TokenSequence tokens_from_text(const std::string& text);

}  // namespace lane
