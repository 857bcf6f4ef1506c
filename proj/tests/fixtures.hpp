#pragma once

// Shared mesh fixtures for tests.

#include <cstdint>

#include "lane/mesh.hpp"
#include "lane/rng.hpp"

namespace lane::fixtures {

// Zigzag triangle strip, n_faces triangles over two vertex rows, consistent
// winding. n_faces must be even.
inline Mesh make_strip(int n_faces) {
  const int cols = n_faces / 2;
  Mesh m;
  const double dx = 0.9 / cols;
  for (int i = 0; i <= cols; ++i) m.vertices.push_back({0.05 + i * dx, 0.2, 0.3});
  for (int i = 0; i <= cols; ++i) m.vertices.push_back({0.05 + i * dx, 0.7, 0.3});
  auto bot = [&](int i) { return i; };
  auto top = [&](int i) { return cols + 1 + i; };
  for (int i = 0; i < cols; ++i) {
    m.faces.push_back({bot(i), bot(i + 1), top(i)});
    m.faces.push_back({top(i), bot(i + 1), top(i + 1)});
  }
  return m;
}

// Two disjoint components (offset cubes), already inside [0,1).
inline Mesh make_two_components() {
  Mesh a = synth_shape(ShapeKind::Cube, 1);
  Mesh b = synth_shape(ShapeKind::Cube, 1);
  Mesh out;
  for (const Vec3& v : a.vertices) out.vertices.push_back(v * 0.3 + Vec3{0.05, 0.05, 0.05});
  for (const Vec3& v : b.vertices) out.vertices.push_back(v * 0.3 + Vec3{0.6, 0.6, 0.6});
  const int off = static_cast<int>(a.vertices.size());
  out.faces = a.faces;
  for (Face f : b.faces) out.faces.push_back({f[0] + off, f[1] + off, f[2] + off});
  return out;
}

// Random valid orientable mesh: synthetic shape, optional jitter, optional
// corruption, random anisotropy-free rescale. Returned normalized.
inline Mesh fuzz_mesh(Rng& rng) {
  const int pick = static_cast<int>(rng.below(5));
  Mesh m;
  switch (pick) {
    case 0: m = synth_shape(ShapeKind::Cube, 1 + static_cast<int>(rng.below(3)), rng.next_u64(),
                            0.03 * rng.uniform()); break;
    case 1: m = synth_shape(ShapeKind::UvSphere, 3 + static_cast<int>(rng.below(6)),
                            rng.next_u64(), 0.02 * rng.uniform()); break;
    case 2: m = synth_shape(ShapeKind::Torus, 3 + static_cast<int>(rng.below(6)), rng.next_u64(),
                            0.02 * rng.uniform()); break;
    case 3: m = synth_shape(ShapeKind::Grid, 1 + static_cast<int>(rng.below(7)), rng.next_u64(),
                            0.02 * rng.uniform()); break;
    default: m = make_strip(2 + 2 * static_cast<int>(rng.below(20))); break;
  }
  if (m.faces.size() >= 4 && rng.uniform() < 0.4) {
    m = corrupt_mesh(m, 0.1 + 0.3 * rng.uniform(), rng.next_u64());
  }
  const double s = 0.5 + 4.0 * rng.uniform();
  for (Vec3& v : m.vertices) v = v * s + Vec3{rng.uniform(), rng.uniform(), rng.uniform()};
  return normalize(m);
}

}  // namespace lane::fixtures
