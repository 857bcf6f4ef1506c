#include "lane/tokenizer.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <unordered_map>

namespace lane {

namespace {

struct EdgeKey {
  int a, b;
  bool operator==(const EdgeKey&) const = default;
};

struct EdgeKeyHash {
  size_t operator()(const EdgeKey& e) const {
    return std::hash<uint64_t>()((static_cast<uint64_t>(static_cast<uint32_t>(e.a)) << 32) |
                                 static_cast<uint32_t>(e.b));
  }
};

using EdgeMap = std::unordered_map<EdgeKey, int, EdgeKeyHash>;

// Rotate so the lexicographically smallest (z,y,x) vertex is first. Vertex
// ids are assigned in (z,y,x) order, so id comparison is value comparison.
Face rotate_canonical(Face f) {
  int best = 0;
  for (int k = 1; k < 3; ++k) {
    if (f[k] < f[best]) best = k;
  }
  return {f[best], f[(best + 1) % 3], f[(best + 2) % 3]};
}

void check_normalized(const Mesh& mesh) {
  for (const Vec3& v : mesh.vertices) {
    if (!(v.x >= 0.0 && v.x < 1.0 && v.y >= 0.0 && v.y < 1.0 && v.z >= 0.0 && v.z < 1.0)) {
      throw MeshError("tokenize: mesh is not normalized to [0,1)");
    }
  }
}

void emit_vertex(std::vector<uint16_t>& out, const QuantVertex& v) {
  out.push_back(static_cast<uint16_t>(v.z));
  out.push_back(static_cast<uint16_t>(v.y));
  out.push_back(static_cast<uint16_t>(v.x));
}

// Directed-edge ownership; duplicate direction means inconsistent winding.
EdgeMap build_edge_map(const QuantMesh& qm) {
  EdgeMap edges;
  edges.reserve(qm.faces.size() * 3);
  for (size_t fi = 0; fi < qm.faces.size(); ++fi) {
    const Face& f = qm.faces[fi];
    for (int k = 0; k < 3; ++k) {
      const EdgeKey e{f[k], f[(k + 1) % 3]};
      if (!edges.emplace(e, static_cast<int>(fi)).second) {
        throw MeshError("tokenize_halfedge: inconsistent winding at edge (" +
                        std::to_string(e.a) + "," + std::to_string(e.b) + ")");
      }
    }
  }
  return edges;
}

// Face component labels via undirected shared edges.
std::vector<int> face_components(const QuantMesh& qm, const EdgeMap& edges, int* count_out) {
  std::vector<int> comp(qm.faces.size(), -1);
  int count = 0;
  std::vector<int> stack;
  for (size_t start = 0; start < qm.faces.size(); ++start) {
    if (comp[start] != -1) continue;
    comp[start] = count;
    stack.push_back(static_cast<int>(start));
    while (!stack.empty()) {
      const int fi = stack.back();
      stack.pop_back();
      const Face& f = qm.faces[fi];
      for (int k = 0; k < 3; ++k) {
        const auto it = edges.find(EdgeKey{f[(k + 1) % 3], f[k]});
        if (it != edges.end() && comp[it->second] == -1) {
          comp[it->second] = count;
          stack.push_back(it->second);
        }
      }
    }
    ++count;
  }
  *count_out = count;
  return comp;
}

}  // namespace

Scheme scheme_from_string(const std::string& s) {
  if (s == "flat") return Scheme::Flat;
  if (s == "halfedge") return Scheme::HalfEdge;
  throw std::runtime_error("unknown scheme '" + s + "' (expected flat|halfedge)");
}

const char* scheme_name(Scheme s) { return s == Scheme::Flat ? "flat" : "halfedge"; }

void TokenSequence::validate() const {
  if (true_length < 2 || true_length > tokens.size()) {
    throw TokenError("sequence needs BOS...EOS framing", 0);
  }
  if (tokens[0] != tok::BOS) throw TokenError("first token must be BOS", 0);
  if (tokens[true_length - 1] != tok::EOS) {
    throw TokenError("token at true_length-1 must be EOS", true_length - 1);
  }
  for (size_t i = true_length; i < tokens.size(); ++i) {
    if (tokens[i] != tok::PAD) throw TokenError("non-PAD token past true_length", i);
  }
}

QuantMesh quantize_mesh(const Mesh& mesh, const QuantizationGrid& grid) {
  mesh.validate();
  // Dedupe quantized vertices; the ordered map gives ids in (z,y,x) order,
  // which makes QuantMesh a canonical form: two meshes with the same
  // quantized face set compare equal regardless of original numbering.
  // Unreferenced vertices are not part of the face set and are dropped.
  std::map<QuantVertex, int> ids;
  for (const Face& f : mesh.faces) {
    for (int k = 0; k < 3; ++k) {
      const Vec3& v = mesh.vertices[f[k]];
      ids.emplace(QuantVertex{quantize_coord(v.z, grid), quantize_coord(v.y, grid),
                              quantize_coord(v.x, grid)},
                  0);
    }
  }
  QuantMesh qm;
  qm.verts.reserve(ids.size());
  for (auto& [q, id] : ids) {
    id = static_cast<int>(qm.verts.size());
    qm.verts.push_back(q);
  }
  qm.faces.reserve(mesh.faces.size());
  for (const Face& f : mesh.faces) {
    Face g;
    for (int k = 0; k < 3; ++k) {
      const Vec3& v = mesh.vertices[f[k]];
      g[k] = ids.at(QuantVertex{quantize_coord(v.z, grid), quantize_coord(v.y, grid),
                                quantize_coord(v.x, grid)});
    }
    if (g[0] == g[1] || g[1] == g[2] || g[0] == g[2]) continue;  // collapsed by quantization
    qm.faces.push_back(rotate_canonical(g));
  }
  std::sort(qm.faces.begin(), qm.faces.end());
  qm.faces.erase(std::unique(qm.faces.begin(), qm.faces.end()), qm.faces.end());
  return qm;
}

Mesh dequantize_mesh(const QuantMesh& qm, const QuantizationGrid& grid) {
  Mesh mesh;
  mesh.vertices.reserve(qm.verts.size());
  for (const QuantVertex& q : qm.verts) {
    mesh.vertices.push_back({dequantize_coord(q.x, grid), dequantize_coord(q.y, grid),
                             dequantize_coord(q.z, grid)});
  }
  mesh.faces = qm.faces;
  return mesh;
}

TokenSequence tokenize_flat(const Mesh& mesh, const QuantizationGrid& grid) {
  check_normalized(mesh);
  const QuantMesh qm = quantize_mesh(mesh, grid);
  if (qm.faces.empty()) throw MeshError("tokenize: no faces survive quantization");
  TokenSequence seq;
  seq.scheme = Scheme::Flat;
  seq.tokens.reserve(9 * qm.faces.size() + 2);
  seq.tokens.push_back(tok::BOS);
  for (const Face& f : qm.faces) {
    for (int k = 0; k < 3; ++k) emit_vertex(seq.tokens, qm.verts[f[k]]);
  }
  seq.tokens.push_back(tok::EOS);
  seq.true_length = static_cast<uint32_t>(seq.tokens.size());
  return seq;
}

TokenSequence tokenize_halfedge(const Mesh& mesh, const QuantizationGrid& grid) {
  check_normalized(mesh);
  const QuantMesh qm = quantize_mesh(mesh, grid);
  if (qm.faces.empty()) throw MeshError("tokenize: no faces survive quantization");
  const EdgeMap edges = build_edge_map(qm);
  int n_components = 0;
  const std::vector<int> comp = face_components(qm, edges, &n_components);
  std::vector<int> comp_sizes(n_components, 0);
  for (int c : comp) ++comp_sizes[c];

  TokenSequence seq;
  seq.scheme = Scheme::HalfEdge;
  seq.tokens.push_back(tok::BOS);

  std::vector<bool> visited(qm.faces.size(), false);
  std::vector<std::pair<int, int>> stack;
  size_t next_root = 0;
  bool first_component = true;

  while (true) {
    while (next_root < qm.faces.size() && visited[next_root]) ++next_root;
    if (next_root == qm.faces.size()) break;
    if (!first_component) seq.tokens.push_back(tok::NEW_COMP);
    first_component = false;

    const Face& root = qm.faces[next_root];
    visited[next_root] = true;
    int remaining = comp_sizes[comp[next_root]] - 1;
    for (int k = 0; k < 3; ++k) emit_vertex(seq.tokens, qm.verts[root[k]]);
    stack.clear();
    stack.push_back({root[0], root[1]});
    stack.push_back({root[1], root[2]});
    stack.push_back({root[2], root[0]});

    while (!stack.empty() && remaining > 0) {
      const auto [u, v] = stack.back();
      stack.pop_back();
      const auto it = edges.find(EdgeKey{v, u});
      if (it == edges.end()) {
        seq.tokens.push_back(tok::END_BRANCH);
        continue;
      }
      if (visited[it->second]) continue;  // decoder sees this face too; no token
      visited[it->second] = true;
      --remaining;
      const Face& g = qm.faces[it->second];
      int w = -1;
      for (int k = 0; k < 3; ++k) {
        if (g[k] != u && g[k] != v) w = g[k];
      }
      emit_vertex(seq.tokens, qm.verts[w]);
      stack.push_back({w, v});
      stack.push_back({u, w});
    }
    // Component complete: the rest of the stack can only produce silent
    // skips and END_BRANCH, so it is abandoned.
  }
  seq.tokens.push_back(tok::EOS);
  seq.true_length = static_cast<uint32_t>(seq.tokens.size());
  return seq;
}

TokenSequence tokenize(const Mesh& mesh, Scheme scheme, const QuantizationGrid& grid) {
  return scheme == Scheme::Flat ? tokenize_flat(mesh, grid) : tokenize_halfedge(mesh, grid);
}

namespace {

// Shared decoder for strict and best-effort modes.
struct Decoder {
  const TokenSequence& seq;
  const QuantizationGrid& grid;
  QuantMesh qm;
  std::map<QuantVertex, int> vertex_ids;
  EdgeMap edges;
  std::vector<std::pair<int, int>> stack;
  size_t pos = 0;          // next token to consume
  size_t last_good = 0;    // position after the last completed face

  Decoder(const TokenSequence& s, const QuantizationGrid& g) : seq(s), grid(g) {}

  [[noreturn]] void fail(const std::string& what, size_t at) { throw TokenError(what, at); }

  uint16_t peek() {
    if (pos >= seq.true_length) fail("sequence ends without EOS", pos);
    return seq.tokens[pos];
  }

  uint16_t take() {
    const uint16_t t = peek();
    ++pos;
    return t;
  }

  int read_vertex() {
    const size_t group_start = pos;
    QuantVertex q;
    int* comps[3] = {&q.z, &q.y, &q.x};
    for (int k = 0; k < 3; ++k) {
      const uint16_t t = take();
      if (!tok::is_coord(t)) fail("coordinate group of length != 3", group_start);
      *comps[k] = t;
    }
    auto [it, inserted] = vertex_ids.emplace(q, static_cast<int>(qm.verts.size()));
    if (inserted) qm.verts.push_back(q);
    return it->second;
  }

  void add_face(int a, int b, int c, size_t at) {
    if (a == b || b == c || a == c) fail("degenerate face", at);
    const Face f{a, b, c};
    for (int k = 0; k < 3; ++k) {
      const EdgeKey e{f[k], f[(k + 1) % 3]};
      if (!edges.emplace(e, static_cast<int>(qm.faces.size())).second) {
        fail("edge direction already in use (duplicate or flipped face)", at);
      }
    }
    qm.faces.push_back(f);
    last_good = pos;
  }

  void decode_flat() {
    while (true) {
      const uint16_t t = peek();
      if (t == tok::EOS) {
        ++pos;
        return;
      }
      if (!tok::is_coord(t)) fail("unexpected control token in flat body", pos);
      const size_t at = pos;
      const int a = read_vertex();
      const int b = read_vertex();
      const int c = read_vertex();
      add_face(a, b, c, at);
    }
  }

  void decode_halfedge() {
    bool first_component = true;
    while (true) {
      uint16_t t = peek();
      if (t == tok::EOS) {
        ++pos;
        return;
      }
      if (!first_component) {
        if (t != tok::NEW_COMP) fail("expected NEW_COMP or EOS between components", pos);
        ++pos;
      }
      first_component = false;

      const size_t root_at = pos;
      const int a = read_vertex();
      const int b = read_vertex();
      const int c = read_vertex();
      add_face(a, b, c, root_at);
      stack.clear();
      stack.push_back({a, b});
      stack.push_back({b, c});
      stack.push_back({c, a});

      bool component_open = true;
      while (component_open) {
        if (stack.empty()) break;  // next component or EOS
        const auto [u, v] = stack.back();
        stack.pop_back();
        if (edges.count(EdgeKey{v, u})) continue;  // already reconstructed; encoder spent no token
        const uint16_t next = peek();
        if (next == tok::END_BRANCH) {
          ++pos;
          last_good = pos;
          continue;
        }
        if (next == tok::EOS || next == tok::NEW_COMP) {
          // Encoder abandoned the stack: component finished early.
          stack.clear();
          component_open = false;
          continue;
        }
        if (!tok::is_coord(next)) fail("unexpected token during traversal", pos);
        const size_t at = pos;
        const int w = read_vertex();
        add_face(v, u, w, at);
        stack.push_back({w, v});
        stack.push_back({u, w});
      }
    }
  }

  void run() {
    seq.validate();
    if (seq.tokens[0] != tok::BOS) fail("missing BOS", 0);
    pos = 1;
    last_good = 1;
    for (size_t i = 0; i < seq.true_length; ++i) {
      if (seq.tokens[i] == tok::PAD) fail("PAD inside sequence body", i);
    }
    if (seq.scheme == Scheme::Flat) {
      decode_flat();
    } else {
      decode_halfedge();
    }
    if (pos != seq.true_length) fail("trailing tokens after EOS", pos);
  }
};

}  // namespace

Mesh detokenize(const TokenSequence& seq, const QuantizationGrid& grid) {
  Decoder d(seq, grid);
  d.run();
  return dequantize_mesh(d.qm, grid);
}

DetokenizeResult detokenize_best_effort(const TokenSequence& seq, const QuantizationGrid& grid) {
  Decoder d(seq, grid);
  DetokenizeResult result;
  try {
    d.run();
  } catch (const TokenError& e) {
    result.partial = true;
    result.error_position = e.position;
    result.error = e.what();
    // Faces are appended atomically, so d.qm holds exactly the completed
    // ones. Vertices read for the aborted face are orphans; compact them
    // away so the partial mesh is tidy.
    QuantMesh compact;
    std::map<int, int> remap;
    for (const Face& f : d.qm.faces) {
      Face g;
      for (int k = 0; k < 3; ++k) {
        auto [it, inserted] = remap.emplace(f[k], static_cast<int>(compact.verts.size()));
        if (inserted) compact.verts.push_back(d.qm.verts[f[k]]);
        g[k] = it->second;
      }
      compact.faces.push_back(g);
    }
    d.qm = std::move(compact);
  }
  result.mesh = dequantize_mesh(d.qm, grid);
  return result;
}

SubsequenceBatch split_subsequences(const TokenSequence& seq, int l_sub) {
  if (l_sub < 1) throw std::runtime_error("split_subsequences: l_sub must be >= 1");
  SubsequenceBatch batch;
  batch.l_sub = l_sub;
  batch.true_length = seq.true_length;
  batch.scheme = seq.scheme;
  batch.m_count = static_cast<int>((seq.true_length + l_sub - 1) / l_sub);
  batch.subsequences.resize(batch.m_count);
  for (int m = 0; m < batch.m_count; ++m) {
    auto& sub = batch.subsequences[m];
    sub.assign(l_sub, tok::PAD);
    for (int i = 0; i < l_sub; ++i) {
      const size_t p = static_cast<size_t>(m) * l_sub + i;
      if (p < seq.true_length) sub[i] = seq.tokens[p];
    }
  }
  return batch;
}

TokenSequence concat_subsequences(const SubsequenceBatch& batch) {
  TokenSequence seq;
  seq.scheme = batch.scheme;
  for (const auto& sub : batch.subsequences) {
    seq.tokens.insert(seq.tokens.end(), sub.begin(), sub.end());
  }
  seq.true_length = batch.true_length;
  for (size_t i = seq.true_length; i < seq.tokens.size(); ++i) seq.tokens[i] = tok::PAD;
  return seq;
}

SeqStats seq_stats(const TokenSequence& seq, const QuantizationGrid& grid) {
  SeqStats stats;
  stats.length = seq.true_length;
  for (size_t i = 0; i < seq.true_length; ++i) {
    if (!tok::is_coord(seq.tokens[i])) ++stats.control_tokens;
  }
  const Mesh mesh = detokenize(seq, grid);
  stats.faces = mesh.faces.size();
  if (stats.faces == 0) {
    stats.degenerate = true;
    stats.tokens_per_face = 0.0;
  } else {
    stats.tokens_per_face =
        static_cast<double>(seq.true_length - 2) / static_cast<double>(stats.faces);
  }
  return stats;
}

}  // namespace lane
