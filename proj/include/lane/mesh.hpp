#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace lane {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
};

inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

using Face = std::array<int, 3>;

class MeshError : public std::runtime_error {
 public:
  explicit MeshError(const std::string& what) : std::runtime_error(what) {}
};

// Triangle mesh in normalized space. Faces index into vertices; quads are
// fan-triangulated at load so everything downstream is triangles-only.
struct Mesh {
  std::vector<Vec3> vertices;
  std::vector<Face> faces;

  // Throws MeshError if an index is out of range, a face repeats a vertex,
  // or a coordinate is non-finite.
  void validate() const;
};

// --- OBJ I/O (v/f records only; vn/vt ignored on read, never written) ---

Mesh load_obj(const std::string& path);
Mesh parse_obj(const std::string& text);  // same grammar, from a string
void save_obj(const Mesh& mesh, const std::string& path);

// --- Normalization & quantization ---

// Half a quantization cell: vertices of a normalized mesh land strictly
// inside [eps, 1-eps] so every coordinate quantizes to an interior bin.
inline constexpr double kNormalizeInset = 1.0 / 1024.0;

struct QuantizationGrid {
  int bins_per_axis = 512;
};

// Scales and recenters so the bounding box is the largest axis-aligned box
// centered in [0,1)^3 with longest side 1 - 2*kNormalizeInset. Aspect ratio
// preserved. Idempotent to ~1e-7. Rejects zero-extent meshes.
Mesh normalize(const Mesh& mesh);

inline int quantize_coord(double c, const QuantizationGrid& grid = {}) {
  int b = static_cast<int>(std::floor(c * grid.bins_per_axis));
  if (b < 0) b = 0;
  if (b >= grid.bins_per_axis) b = grid.bins_per_axis - 1;
  return b;
}

inline double dequantize_coord(int b, const QuantizationGrid& grid = {}) {
  return (static_cast<double>(b) + 0.5) / grid.bins_per_axis;
}

// --- Surface sampling ---

// n points by area-weighted face selection + uniform barycentric sampling.
// Deterministic given seed. Rejects meshes whose total face area is zero.
std::vector<Vec3> sample_surface(const Mesh& mesh, int64_t n, uint64_t seed);

// The four surface samplings consumed by the model. X1 is the conditioning
// cloud; counts must satisfy N2 < N3 < N4 < N1.
struct PointCloudSet {
  std::vector<Vec3> x1, x2, x3, x4;
  uint64_t seed = 0;
};

struct SampleCounts {
  int64_t n1 = 8192, n2 = 512, n3 = 1024, n4 = 2048;
};

PointCloudSet make_pointcloud_set(const Mesh& mesh, const SampleCounts& counts, uint64_t seed);

// --- Corruption (repair experiments) ---

// Removes floor(fraction * face_count) faces chosen uniformly without
// replacement; vertices are kept so indices stay stable. Rejects anything
// that would delete every face.
Mesh corrupt_mesh(const Mesh& mesh, double fraction, uint64_t seed);

// --- Synthetic shapes ---

enum class ShapeKind { Cube, UvSphere, Torus, Grid };

ShapeKind shape_kind_from_string(const std::string& s);

// Deterministic generators; `jitter` (relative to shape size) is the only
// use of `seed`. Resolution bounds: cube 1..64, uv_sphere 3..128,
// torus 3..128, grid 1..256.
Mesh synth_shape(ShapeKind kind, int resolution, uint64_t seed = 0, double jitter = 0.0);

// --- Small geometric helpers shared with metrics/tests ---

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c);
double mesh_surface_area(const Mesh& mesh);

// Exact distance from p to triangle (a,b,c), all closest-feature cases.
double point_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

// Exact distance from p to the nearest point on any face of the mesh.
double point_mesh_distance(const Vec3& p, const Mesh& mesh);

}  // namespace lane
