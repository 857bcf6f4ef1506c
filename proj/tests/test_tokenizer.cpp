#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdio>

#include "fixtures.hpp"
#include "lane/mesh.hpp"
#include "lane/tokenizer.hpp"

using namespace lane;

namespace {

Mesh tri_in_unit_box() {
  Mesh m;
  m.vertices = {{0.1, 0.1, 0.1}, {0.9, 0.1, 0.1}, {0.1, 0.9, 0.1}};
  m.faces = {{0, 1, 2}};
  return m;
}

// Quantized face-set equality, the round-trip contract.
bool same_quantized(const Mesh& a, const Mesh& b) {
  return quantize_mesh(a) == quantize_mesh(b);
}

}  // namespace

TEST_CASE("flat: sequence lengths") {
  CHECK(tokenize_flat(tri_in_unit_box()).true_length == 11);  // 9*1+2
  const Mesh cube = normalize(synth_shape(ShapeKind::Cube, 1));
  CHECK(tokenize_flat(cube).true_length == 110);  // 9*12+2
}

TEST_CASE("flat: canonicalization makes face order irrelevant") {
  Mesh a = normalize(synth_shape(ShapeKind::UvSphere, 4));
  Mesh b = a;
  std::rotate(b.faces.begin(), b.faces.begin() + 7, b.faces.end());
  for (Face& f : b.faces) f = {f[1], f[2], f[0]};  // rotations keep winding
  CHECK(tokenize_flat(a).tokens == tokenize_flat(b).tokens);
  CHECK(tokenize_halfedge(a).tokens == tokenize_halfedge(b).tokens);
}

TEST_CASE("flat: cube round trip") {
  const Mesh cube = normalize(synth_shape(ShapeKind::Cube, 1));
  const Mesh back = detokenize(tokenize_flat(cube));
  CHECK(back.faces.size() == 12);
  CHECK(back.vertices.size() == 8);
  CHECK(same_quantized(cube, back));
}

TEST_CASE("flat: rejects unnormalized input") {
  CHECK_THROWS_WITH_AS(tokenize_flat(synth_shape(ShapeKind::Cube, 1)),
                       doctest::Contains("not normalized"), MeshError);
}

TEST_CASE("halfedge: single triangle, hand-traced") {
  // Root emits 9 coordinate tokens; the component is then complete, so the
  // three pushed boundary edges are abandoned: BOS + 9 + EOS.
  const TokenSequence seq = tokenize_halfedge(tri_in_unit_box());
  CHECK(seq.true_length == 11);
  CHECK(same_quantized(detokenize(seq), tri_in_unit_box()));
}

TEST_CASE("halfedge: two triangles sharing an edge, hand-traced") {
  // Canonical root (a,b,c); pops: (c,a) boundary -> END_BRANCH, (b,c) ->
  // apex d (3 tokens), then the component is complete.
  // BOS + 9 + 1 + 3 + EOS = 15, vs flat's 20.
  Mesh m;
  m.vertices = {{0.1, 0.1, 0.1}, {0.9, 0.1, 0.1}, {0.1, 0.9, 0.1}, {0.9, 0.9, 0.1}};
  m.faces = {{0, 1, 2}, {1, 3, 2}};
  const TokenSequence he = tokenize_halfedge(m);
  CHECK(he.true_length == 15);
  CHECK(he.tokens[10] == tok::END_BRANCH);
  CHECK(tokenize_flat(m).true_length == 20);
  CHECK(same_quantized(detokenize(he), m));
}

TEST_CASE("halfedge: 50-face strip compression") {
  const Mesh strip = normalize(fixtures::make_strip(50));
  const TokenSequence fl = tokenize_flat(strip);
  const TokenSequence he = tokenize_halfedge(strip);
  CHECK(fl.true_length == 452);
  // Frozen from the traversal: BOS + root 9 + 49 apexes * 3 + 25
  // END_BRANCH + EOS. Tokens per face 3.62, 2.47x smaller than flat.
  CHECK(he.true_length == 183);
  const SeqStats stats = seq_stats(he);
  CHECK(stats.faces == 50);
  CHECK(stats.tokens_per_face < 4.0);
  CHECK(double(fl.true_length) / double(he.true_length) >= 2.4);
  CHECK(same_quantized(detokenize(he), strip));
}

TEST_CASE("halfedge: multi-component mesh uses NEW_COMP") {
  const Mesh m = fixtures::make_two_components();
  const TokenSequence seq = tokenize_halfedge(m);
  int new_comp = 0;
  for (uint32_t i = 0; i < seq.true_length; ++i) {
    if (seq.tokens[i] == tok::NEW_COMP) ++new_comp;
  }
  CHECK(new_comp == 1);
  CHECK(same_quantized(detokenize(seq), m));
}

TEST_CASE("halfedge: inconsistent winding rejected with offending edge") {
  Mesh m;
  m.vertices = {{0.1, 0.1, 0.1}, {0.9, 0.1, 0.1}, {0.1, 0.9, 0.1}, {0.9, 0.9, 0.2}};
  m.faces = {{0, 1, 2}, {0, 1, 3}};  // edge (0,1) twice in the same direction
  CHECK_THROWS_WITH_AS(tokenize_halfedge(m), doctest::Contains("inconsistent winding"),
                       MeshError);
}

TEST_CASE("halfedge: compression property on closed manifolds") {
  for (auto [kind, res] : {std::pair{ShapeKind::Cube, 2}, {ShapeKind::UvSphere, 5},
                           {ShapeKind::Torus, 4}}) {
    const Mesh m = normalize(synth_shape(kind, res));
    REQUIRE(m.faces.size() >= 20);
    const SeqStats he = seq_stats(tokenize_halfedge(m));
    const SeqStats fl = seq_stats(tokenize_flat(m));
    CHECK(he.tokens_per_face < fl.tokens_per_face);
  }
}

TEST_CASE("round trip: fixtures, both schemes") {
  const Mesh shapes[] = {
      normalize(synth_shape(ShapeKind::Cube, 1)),
      normalize(synth_shape(ShapeKind::Cube, 3)),
      normalize(synth_shape(ShapeKind::UvSphere, 6)),
      normalize(synth_shape(ShapeKind::Torus, 5)),
      normalize(synth_shape(ShapeKind::Grid, 4)),
      normalize(fixtures::make_strip(20)),
      fixtures::make_two_components(),
      normalize(corrupt_mesh(synth_shape(ShapeKind::UvSphere, 6), 0.25, 3)),
  };
  for (const Mesh& m : shapes) {
    for (Scheme s : {Scheme::Flat, Scheme::HalfEdge}) {
      CAPTURE(static_cast<int>(s));
      const Mesh back = detokenize(tokenize(m, s));
      CHECK(same_quantized(m, back));
    }
  }
}

TEST_CASE("round trip: fuzzed meshes") {
  Rng rng(2024);
  for (int i = 0; i < 60; ++i) {
    const Mesh m = fixtures::fuzz_mesh(rng);
    if (m.faces.empty()) continue;
    for (Scheme s : {Scheme::Flat, Scheme::HalfEdge}) {
      const Mesh back = detokenize(tokenize(m, s));
      CAPTURE(i);
      CHECK(same_quantized(m, back));
    }
  }
}

TEST_CASE("detokenize: grammar errors carry a position") {
  TokenSequence bad;
  bad.scheme = Scheme::Flat;
  bad.tokens = {tok::BOS, 10, 20, tok::EOS};  // 2-token coordinate group
  bad.true_length = 4;
  try {
    detokenize(bad);
    FAIL("expected TokenError");
  } catch (const TokenError& e) {
    CHECK(e.position == 1);
  }

  TokenSequence ctrl;
  ctrl.scheme = Scheme::Flat;
  ctrl.tokens = {tok::BOS, tok::END_BRANCH, tok::EOS};
  ctrl.true_length = 3;
  CHECK_THROWS_AS(detokenize(ctrl), TokenError);

  TokenSequence pad_inside;
  pad_inside.scheme = Scheme::Flat;
  pad_inside.tokens = {tok::BOS, tok::PAD, tok::EOS};
  pad_inside.true_length = 3;
  CHECK_THROWS_WITH_AS(detokenize(pad_inside), doctest::Contains("PAD"), TokenError);
}

TEST_CASE("detokenize: best-effort truncates at the last completed face") {
  const Mesh cube = normalize(synth_shape(ShapeKind::Cube, 1));
  const TokenSequence seq = tokenize_flat(cube);
  for (int keep_faces : {3, 7}) {
    TokenSequence cut;
    cut.scheme = Scheme::Flat;
    cut.tokens.assign(seq.tokens.begin(), seq.tokens.begin() + 1 + 9 * keep_faces + 4);
    cut.tokens.push_back(tok::EOS);
    cut.true_length = static_cast<uint32_t>(cut.tokens.size());
    const DetokenizeResult r = detokenize_best_effort(cut);
    CHECK(r.partial);
    CHECK(r.mesh.faces.size() == static_cast<size_t>(keep_faces));
    CHECK_THROWS_AS(detokenize(cut), TokenError);
  }
}

TEST_CASE("detokenize: fuzzed token streams never crash") {
  Rng rng(555);
  int accepted = 0;
  for (int i = 0; i < 3000; ++i) {
    TokenSequence seq;
    seq.scheme = (i % 2 == 0) ? Scheme::Flat : Scheme::HalfEdge;
    const int body = static_cast<int>(rng.below(40));
    seq.tokens.push_back(tok::BOS);
    for (int k = 0; k < body; ++k) {
      // Bias toward coordinate tokens so some streams parse.
      const uint16_t t = rng.uniform() < 0.8 ? static_cast<uint16_t>(rng.below(tok::kCoordBins))
                                             : static_cast<uint16_t>(512 + rng.below(5));
      seq.tokens.push_back(t);
    }
    seq.tokens.push_back(tok::EOS);
    seq.true_length = static_cast<uint32_t>(seq.tokens.size());
    try {
      detokenize(seq);
      ++accepted;
    } catch (const TokenError&) {
      // rejected with a position: fine
    }
    const DetokenizeResult r = detokenize_best_effort(seq);  // must not throw
    (void)r;
  }
  CHECK(accepted > 0);
}

TEST_CASE("split_subsequences: arithmetic and padding") {
  TokenSequence seq;
  seq.scheme = Scheme::Flat;
  seq.tokens.assign(1000, 1);
  seq.tokens[0] = tok::BOS;
  seq.tokens[999] = tok::EOS;
  seq.true_length = 1000;

  const SubsequenceBatch b = split_subsequences(seq, 256);
  CHECK(b.m_count == 4);
  CHECK(b.subsequences[3].size() == 256);
  int pad = 0;
  for (uint16_t t : b.subsequences[3]) pad += (t == tok::PAD);
  CHECK(pad == 24);  // 232 real + 24 PAD

  TokenSequence exact;
  exact.scheme = Scheme::Flat;
  exact.tokens.assign(256, 2);
  exact.tokens[0] = tok::BOS;
  exact.tokens[255] = tok::EOS;
  exact.true_length = 256;
  const SubsequenceBatch b2 = split_subsequences(exact, 256);
  CHECK(b2.m_count == 1);
  for (uint16_t t : b2.subsequences[0]) CHECK(t != tok::PAD);
}

TEST_CASE("split/concat: inverse on random sequences") {
  Rng rng(99);
  for (int i = 0; i < 1000; ++i) {
    TokenSequence seq;
    seq.scheme = Scheme::Flat;
    const uint32_t L = 2 + static_cast<uint32_t>(rng.below(700));
    seq.tokens.resize(L);
    seq.tokens[0] = tok::BOS;
    for (uint32_t k = 1; k + 1 < L; ++k) {
      seq.tokens[k] = static_cast<uint16_t>(rng.below(tok::kCoordBins));
    }
    seq.tokens[L - 1] = tok::EOS;
    seq.true_length = L;
    const int l_sub = 1 + static_cast<int>(rng.below(128));
    const TokenSequence back = concat_subsequences(split_subsequences(seq, l_sub));
    REQUIRE(back.true_length == L);
    for (uint32_t k = 0; k < L; ++k) REQUIRE(back.tokens[k] == seq.tokens[k]);
  }
}

TEST_CASE("seq_stats: flat cube and degenerate sequence") {
  const SeqStats s = seq_stats(tokenize_flat(normalize(synth_shape(ShapeKind::Cube, 1))));
  CHECK(s.length == 110);
  CHECK(s.faces == 12);
  CHECK(s.tokens_per_face == doctest::Approx(9.0));
  CHECK(s.control_tokens == 2);

  TokenSequence empty;
  empty.scheme = Scheme::Flat;
  empty.tokens = {tok::BOS, tok::EOS};
  empty.true_length = 2;
  const SeqStats e = seq_stats(empty);
  CHECK(e.faces == 0);
  CHECK(e.degenerate);
  CHECK(e.tokens_per_face == 0.0);
}

TEST_CASE("token container and text round trips") {
  const TokenSequence seq = tokenize_halfedge(normalize(synth_shape(ShapeKind::Torus, 4)));
  write_tokens(seq, "torus.lanetok");
  const TokenSequence back = read_tokens("torus.lanetok");
  CHECK(back.scheme == seq.scheme);
  CHECK(back.true_length == seq.true_length);
  CHECK(std::equal(seq.tokens.begin(), seq.tokens.begin() + seq.true_length,
                   back.tokens.begin()));

  const TokenSequence t2 = tokens_from_text(tokens_to_text(seq));
  CHECK(t2.tokens == back.tokens);

  CHECK_THROWS(read_tokens("does_not_exist.lanetok"));
}
