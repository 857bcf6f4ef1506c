#include <cmath>
#include <map>
#include <tuple>

#include "lane/mesh.hpp"
#include "lane/rng.hpp"

namespace lane {

namespace {

constexpr double kPi = 3.14159265358979323846;

void check_resolution(int r, int lo, int hi, const char* kind) {
  if (r < lo || r > hi) {
    throw MeshError(std::string("synth_shape: ") + kind + " resolution must be in [" +
                    std::to_string(lo) + "," + std::to_string(hi) + "]");
  }
}

// Quad (p00, p00+du, p00+du+dv, p00+dv) as two triangles with normal
// along du x dv.
void emit_quad(Mesh& m, int p00, int p10, int p11, int p01) {
  m.faces.push_back({p00, p10, p11});
  m.faces.push_back({p00, p11, p01});
}

Mesh make_cube(int r) {
  check_resolution(r, 1, 64, "cube");
  Mesh m;
  // Lattice points on the surface, welded across face boundaries.
  std::map<std::tuple<int, int, int>, int> ids;
  auto vertex = [&](int i, int j, int k) {
    auto it = ids.find({i, j, k});
    if (it != ids.end()) return it->second;
    const int id = static_cast<int>(m.vertices.size());
    ids.emplace(std::make_tuple(i, j, k), id);
    const double s = 1.0 / r;
    m.vertices.push_back({i * s, j * s, k * s});
    return id;
  };
  // Each entry: base corner and the two in-face lattice steps, ordered so
  // the step cross product points outward.
  struct FaceSpec {
    int base[3], du[3], dv[3];
  };
  const FaceSpec specs[6] = {
      {{0, 0, 0}, {0, 1, 0}, {1, 0, 0}},  // z=0
      {{0, 0, r}, {1, 0, 0}, {0, 1, 0}},  // z=r
      {{0, 0, 0}, {1, 0, 0}, {0, 0, 1}},  // y=0
      {{0, r, 0}, {0, 0, 1}, {1, 0, 0}},  // y=r
      {{0, 0, 0}, {0, 0, 1}, {0, 1, 0}},  // x=0
      {{r, 0, 0}, {0, 1, 0}, {0, 0, 1}},  // x=r
  };
  for (const FaceSpec& fs : specs) {
    for (int u = 0; u < r; ++u) {
      for (int v = 0; v < r; ++v) {
        auto at = [&](int uu, int vv) {
          return vertex(fs.base[0] + uu * fs.du[0] + vv * fs.dv[0],
                        fs.base[1] + uu * fs.du[1] + vv * fs.dv[1],
                        fs.base[2] + uu * fs.du[2] + vv * fs.dv[2]);
        };
        emit_quad(m, at(u, v), at(u + 1, v), at(u + 1, v + 1), at(u, v + 1));
      }
    }
  }
  return m;
}

Mesh make_uv_sphere(int n) {
  check_resolution(n, 3, 128, "uv_sphere");
  Mesh m;
  const int top = 0;
  m.vertices.push_back({0.0, 0.0, 1.0});
  // rings 1..n-1, n segments each
  for (int i = 1; i < n; ++i) {
    const double theta = kPi * i / n;
    for (int j = 0; j < n; ++j) {
      const double phi = 2.0 * kPi * j / n;
      m.vertices.push_back(
          {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)});
    }
  }
  const int bottom = static_cast<int>(m.vertices.size());
  m.vertices.push_back({0.0, 0.0, -1.0});

  auto ring = [&](int i, int j) { return 1 + (i - 1) * n + (j % n); };
  for (int j = 0; j < n; ++j) {
    m.faces.push_back({top, ring(1, j), ring(1, j + 1)});
  }
  for (int i = 1; i < n - 1; ++i) {
    for (int j = 0; j < n; ++j) {
      emit_quad(m, ring(i, j), ring(i + 1, j), ring(i + 1, j + 1), ring(i, j + 1));
    }
  }
  for (int j = 0; j < n; ++j) {
    m.faces.push_back({bottom, ring(n - 1, j + 1), ring(n - 1, j)});
  }
  return m;  // 2n(n-1) triangles
}

Mesh make_torus(int n) {
  check_resolution(n, 3, 128, "torus");
  const double R = 1.0, r0 = 0.4;
  Mesh m;
  for (int i = 0; i < n; ++i) {
    const double a = 2.0 * kPi * i / n;
    for (int j = 0; j < n; ++j) {
      const double b = 2.0 * kPi * j / n;
      m.vertices.push_back({(R + r0 * std::cos(b)) * std::cos(a),
                            (R + r0 * std::cos(b)) * std::sin(a), r0 * std::sin(b)});
    }
  }
  auto at = [&](int i, int j) { return (i % n) * n + (j % n); };
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      emit_quad(m, at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1));
    }
  }
  return m;  // 2n^2 triangles
}

Mesh make_grid(int r) {
  check_resolution(r, 1, 256, "grid");
  Mesh m;
  for (int j = 0; j <= r; ++j) {
    for (int i = 0; i <= r; ++i) {
      m.vertices.push_back({static_cast<double>(i) / r, static_cast<double>(j) / r, 0.0});
    }
  }
  auto at = [&](int i, int j) { return j * (r + 1) + i; };
  for (int j = 0; j < r; ++j) {
    for (int i = 0; i < r; ++i) {
      emit_quad(m, at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1));
    }
  }
  return m;  // (r+1)^2 vertices, 2r^2 triangles
}

}  // namespace

ShapeKind shape_kind_from_string(const std::string& s) {
  if (s == "cube") return ShapeKind::Cube;
  if (s == "uv_sphere" || s == "sphere") return ShapeKind::UvSphere;
  if (s == "torus") return ShapeKind::Torus;
  if (s == "grid") return ShapeKind::Grid;
  throw MeshError("unknown shape kind '" + s + "'");
}

Mesh synth_shape(ShapeKind kind, int resolution, uint64_t seed, double jitter) {
  Mesh m;
  switch (kind) {
    case ShapeKind::Cube: m = make_cube(resolution); break;
    case ShapeKind::UvSphere: m = make_uv_sphere(resolution); break;
    case ShapeKind::Torus: m = make_torus(resolution); break;
    case ShapeKind::Grid: m = make_grid(resolution); break;
  }
  if (jitter > 0.0) {
    // Displacement relative to unit-ish shape extent; welding happened
    // before this, so closed shapes stay closed.
    Rng rng(seed);
    for (Vec3& v : m.vertices) {
      v.x += jitter * (rng.uniform() - 0.5);
      v.y += jitter * (rng.uniform() - 0.5);
      v.z += jitter * (rng.uniform() - 0.5);
    }
  }
  return m;
}

}  // namespace lane
