#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>
#include <unordered_set>

#include "lane/mesh.hpp"
#include "lane/rng.hpp"

using namespace lane;

namespace {

Mesh single_triangle() {
  Mesh m;
  m.vertices = {{0.1, 0.1, 0.1}, {0.9, 0.2, 0.1}, {0.2, 0.8, 0.3}};
  m.faces = {{0, 1, 2}};
  return m;
}

bool approx_vec(const Vec3& a, const Vec3& b, double tol) {
  return std::abs(a.x - b.x) <= tol && std::abs(a.y - b.y) <= tol && std::abs(a.z - b.z) <= tol;
}

}  // namespace

TEST_CASE("obj: minimal file") {
  const Mesh m = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n");
  CHECK(m.vertices.size() == 3);
  CHECK(m.faces.size() == 1);
  CHECK(m.faces[0] == Face{0, 1, 2});
}

TEST_CASE("obj: quad fan-triangulates") {
  const Mesh m = parse_obj("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n");
  REQUIRE(m.faces.size() == 2);
  CHECK(m.faces[0] == Face{0, 1, 2});
  CHECK(m.faces[1] == Face{0, 2, 3});
}

TEST_CASE("obj: index out of range reports line") {
  CHECK_THROWS_WITH_AS(parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 9\n"),
                       doctest::Contains("line 4"), MeshError);
}

TEST_CASE("obj: slash forms and ignored records") {
  const Mesh m = parse_obj(
      "# comment\nvn 0 0 1\nvt 0 0\nv 0 0 0\nv 1 0 0\nv 0 1 0\nf 1/1/1 2//1 3/1\n");
  CHECK(m.faces.size() == 1);
}

TEST_CASE("obj: write/read round trip") {
  const Mesh m = synth_shape(ShapeKind::Torus, 4);
  const std::string path = "torus_roundtrip.obj";
  save_obj(m, path);
  const Mesh back = load_obj(path);
  REQUIRE(back.vertices.size() == m.vertices.size());
  REQUIRE(back.faces.size() == m.faces.size());
  for (size_t i = 0; i < m.vertices.size(); ++i) {
    CHECK(approx_vec(back.vertices[i], m.vertices[i], 1e-7));
  }
  CHECK(back.faces == m.faces);
}

TEST_CASE("normalize: cube corners map to inset corners") {
  Mesh m;
  for (int z : {-5, 5})
    for (int y : {-5, 5})
      for (int x : {-5, 5}) m.vertices.push_back({double(x), double(y), double(z)});
  m.faces = {{0, 1, 2}};  // content irrelevant here
  const Mesh n = normalize(m);
  const double eps = kNormalizeInset;
  CHECK(approx_vec(n.vertices[0], {eps, eps, eps}, 1e-12));
  CHECK(approx_vec(n.vertices[7], {1.0 - eps, 1.0 - eps, 1.0 - eps}, 1e-12));
}

TEST_CASE("normalize: idempotent") {
  const Mesh m = normalize(synth_shape(ShapeKind::UvSphere, 6));
  const Mesh n = normalize(m);
  for (size_t i = 0; i < m.vertices.size(); ++i) {
    CHECK(approx_vec(n.vertices[i], m.vertices[i], 1e-7));
  }
}

TEST_CASE("normalize: degenerate extent rejected") {
  Mesh m;
  m.vertices = {{1, 1, 1}, {1, 1, 1}, {1, 1, 1}};
  m.faces = {};
  CHECK_THROWS_WITH_AS(normalize(m), doctest::Contains("degenerate"), MeshError);
}

TEST_CASE("quantize: bin arithmetic") {
  CHECK(quantize_coord(0.0) == 0);
  CHECK(quantize_coord(0.5) == 256);
  CHECK(dequantize_coord(0) == 0.0009765625);
  for (int b = 0; b < 512; ++b) {
    CHECK(quantize_coord(dequantize_coord(b)) == b);
  }
  // Clamping absorbs boundary values.
  CHECK(quantize_coord(1.0) == 511);
  CHECK(quantize_coord(-0.001) == 0);
}

TEST_CASE("quantize: round trip moves a vertex by less than half a cell diagonal") {
  const Mesh m = normalize(synth_shape(ShapeKind::Torus, 7));
  const double bound = (std::sqrt(3.0) / 2.0) / 512.0;
  for (const Vec3& v : m.vertices) {
    const Vec3 q{dequantize_coord(quantize_coord(v.x)), dequantize_coord(quantize_coord(v.y)),
                 dequantize_coord(quantize_coord(v.z))};
    CHECK(norm(q - v) < bound);
  }
}

TEST_CASE("sample_surface: points lie on the mesh") {
  const Mesh m = single_triangle();
  const auto pts = sample_surface(m, 1000, 7);
  REQUIRE(pts.size() == 1000);
  for (const Vec3& p : pts) {
    CHECK(point_mesh_distance(p, m) <= 1e-6);
  }
}

TEST_CASE("sample_surface: area weighting") {
  // Two triangles with area ratio 9:1. With n=100000 the binomial standard
  // deviation of the big-face fraction is ~0.00095, so +-0.01 is >10 sigma.
  Mesh m;
  m.vertices = {{0, 0, 0}, {9, 0, 0}, {0, 2, 0}, {10, 0, 0}, {9, 2, 0}};
  m.faces = {{0, 1, 2}, {1, 3, 4}};
  REQUIRE(triangle_area(m.vertices[0], m.vertices[1], m.vertices[2]) ==
          doctest::Approx(9.0 * triangle_area(m.vertices[1], m.vertices[3], m.vertices[4])));
  const auto pts = sample_surface(m, 100000, 42);
  int on_big = 0;
  for (const Vec3& p : pts) {
    if (point_triangle_distance(p, m.vertices[0], m.vertices[1], m.vertices[2]) <= 1e-9) ++on_big;
  }
  const double frac = double(on_big) / 100000.0;
  CHECK(frac > 0.89);
  CHECK(frac < 0.91);
}

TEST_CASE("sample_surface: deterministic under a fixed seed") {
  const Mesh m = synth_shape(ShapeKind::Cube, 2);
  const auto a = sample_surface(m, 500, 123);
  const auto b = sample_surface(m, 500, 123);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].x == b[i].x);
    CHECK(a[i].y == b[i].y);
    CHECK(a[i].z == b[i].z);
  }
  const auto c = sample_surface(m, 500, 124);
  bool any_diff = false;
  for (size_t i = 0; i < a.size(); ++i) any_diff |= (a[i].x != c[i].x);
  CHECK(any_diff);
}

TEST_CASE("make_pointcloud_set: toy counts and surface invariant") {
  const Mesh m = normalize(synth_shape(ShapeKind::Cube, 1));
  const PointCloudSet set = make_pointcloud_set(m, {512, 32, 64, 128}, 9);
  CHECK(set.x1.size() == 512);
  CHECK(set.x2.size() == 32);
  CHECK(set.x3.size() == 64);
  CHECK(set.x4.size() == 128);
  for (const Vec3& p : set.x2) CHECK(point_mesh_distance(p, m) <= 1e-6);
}

TEST_CASE("make_pointcloud_set: ordering violation rejected") {
  const Mesh m = synth_shape(ShapeKind::Cube, 1);
  CHECK_THROWS_WITH_AS(make_pointcloud_set(m, {100, 200, 300, 400}, 1),
                       doctest::Contains("N2<N3<N4<N1"), MeshError);
}

TEST_CASE("corrupt_mesh: face counts") {
  const Mesh cube = synth_shape(ShapeKind::Cube, 1);
  REQUIRE(cube.faces.size() == 12);
  CHECK(corrupt_mesh(cube, 0.25, 1).faces.size() == 9);
  CHECK(corrupt_mesh(cube, 0.99, 1).faces.size() == 1);
  CHECK_THROWS_WITH_AS(corrupt_mesh(cube, 1.0, 1), doctest::Contains("all faces"), MeshError);
}

TEST_CASE("corrupt_mesh: strict subset, vertices retained, deterministic") {
  const Mesh m = synth_shape(ShapeKind::UvSphere, 8);
  const Mesh c = corrupt_mesh(m, 0.3, 77);
  CHECK(c.vertices.size() == m.vertices.size());
  CHECK(c.faces.size() < m.faces.size());
  std::set<Face> original(m.faces.begin(), m.faces.end());
  for (const Face& f : c.faces) CHECK(original.count(f) == 1);
  const Mesh c2 = corrupt_mesh(m, 0.3, 77);
  CHECK(c.faces == c2.faces);
}

TEST_CASE("synth_shape: documented counts") {
  const Mesh cube = synth_shape(ShapeKind::Cube, 1);
  CHECK(cube.vertices.size() == 8);
  CHECK(cube.faces.size() == 12);

  const Mesh sphere = synth_shape(ShapeKind::UvSphere, 8);
  CHECK(sphere.faces.size() == 112);  // 2*8*8 - 2*8

  const Mesh grid = synth_shape(ShapeKind::Grid, 4);
  CHECK(grid.vertices.size() == 25);
  CHECK(grid.faces.size() == 32);

  const Mesh torus = synth_shape(ShapeKind::Torus, 3);
  CHECK(torus.faces.size() == 18);

  CHECK_THROWS_AS(synth_shape(ShapeKind::Cube, 0), MeshError);
  CHECK_THROWS_AS(synth_shape(ShapeKind::UvSphere, 2), MeshError);
}

TEST_CASE("synth_shape: closed shapes are watertight with consistent winding") {
  for (auto [kind, res] : {std::pair{ShapeKind::Cube, 2}, {ShapeKind::UvSphere, 6},
                           {ShapeKind::Torus, 5}}) {
    const Mesh m = synth_shape(kind, res);
    m.validate();
    // Every directed edge appears exactly once and its reverse exists.
    std::set<std::pair<int, int>> edges;
    for (const Face& f : m.faces) {
      for (int k = 0; k < 3; ++k) {
        const auto e = std::make_pair(f[k], f[(k + 1) % 3]);
        CHECK(edges.insert(e).second);
      }
    }
    for (const auto& e : edges) {
      CHECK(edges.count({e.second, e.first}) == 1);
    }
  }
}

TEST_CASE("synth_shape: jitter moves vertices but keeps topology") {
  const Mesh base = synth_shape(ShapeKind::Cube, 2);
  const Mesh j = synth_shape(ShapeKind::Cube, 2, 5, 0.02);
  CHECK(j.faces == base.faces);
  bool moved = false;
  for (size_t i = 0; i < base.vertices.size(); ++i) {
    moved |= (base.vertices[i].x != j.vertices[i].x);
  }
  CHECK(moved);
  const Mesh j2 = synth_shape(ShapeKind::Cube, 2, 5, 0.02);
  for (size_t i = 0; i < j.vertices.size(); ++i) {
    CHECK(j.vertices[i].x == j2.vertices[i].x);
  }
}

TEST_CASE("point_triangle_distance: closed-form cases") {
  const Vec3 a{0, 0, 0}, b{1, 0, 0}, c{0, 1, 0};
  CHECK(point_triangle_distance({0.2, 0.2, 0.0}, a, b, c) == doctest::Approx(0.0));
  CHECK(point_triangle_distance({0.2, 0.2, 0.5}, a, b, c) == doctest::Approx(0.5));
  CHECK(point_triangle_distance({-1.0, -1.0, 0.0}, a, b, c) == doctest::Approx(std::sqrt(2.0)));
  CHECK(point_triangle_distance({2.0, 0.0, 0.0}, a, b, c) == doctest::Approx(1.0));
  CHECK(point_triangle_distance({0.5, 0.5, 1.0}, a, b, c) == doctest::Approx(1.0));
}
