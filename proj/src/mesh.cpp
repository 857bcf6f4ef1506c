#include "lane/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lane/rng.hpp"

namespace lane {

void Mesh::validate() const {
  const int nv = static_cast<int>(vertices.size());
  for (const Vec3& v : vertices) {
    if (!std::isfinite(v.x) || !std::isfinite(v.y) || !std::isfinite(v.z)) {
      throw MeshError("mesh has a non-finite vertex coordinate");
    }
  }
  for (size_t i = 0; i < faces.size(); ++i) {
    const Face& f = faces[i];
    for (int k = 0; k < 3; ++k) {
      if (f[k] < 0 || f[k] >= nv) {
        throw MeshError("face " + std::to_string(i) + ": index out of range");
      }
    }
    if (f[0] == f[1] || f[1] == f[2] || f[0] == f[2]) {
      throw MeshError("face " + std::to_string(i) + ": repeated vertex index");
    }
  }
}

Mesh normalize(const Mesh& mesh) {
  if (mesh.vertices.empty()) throw MeshError("normalize: empty mesh");
  Vec3 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
          std::numeric_limits<double>::infinity()};
  Vec3 hi{-lo.x, -lo.y, -lo.z};
  for (const Vec3& v : mesh.vertices) {
    lo.x = std::min(lo.x, v.x); lo.y = std::min(lo.y, v.y); lo.z = std::min(lo.z, v.z);
    hi.x = std::max(hi.x, v.x); hi.y = std::max(hi.y, v.y); hi.z = std::max(hi.z, v.z);
  }
  const Vec3 extent = hi - lo;
  const double longest = std::max({extent.x, extent.y, extent.z});
  if (!(longest > 0.0)) throw MeshError("normalize: degenerate extent");

  const double scale = (1.0 - 2.0 * kNormalizeInset) / longest;
  const Vec3 center = (lo + hi) * 0.5;
  Mesh out;
  out.faces = mesh.faces;
  out.vertices.reserve(mesh.vertices.size());
  for (const Vec3& v : mesh.vertices) {
    out.vertices.push_back((v - center) * scale + Vec3{0.5, 0.5, 0.5});
  }
  return out;
}

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
  return 0.5 * norm(cross(b - a, c - a));
}

double mesh_surface_area(const Mesh& mesh) {
  double total = 0.0;
  for (const Face& f : mesh.faces) {
    total += triangle_area(mesh.vertices[f[0]], mesh.vertices[f[1]], mesh.vertices[f[2]]);
  }
  return total;
}

std::vector<Vec3> sample_surface(const Mesh& mesh, int64_t n, uint64_t seed) {
  if (n < 1) throw MeshError("sample_surface: n must be >= 1");
  mesh.validate();

  std::vector<double> cumulative;
  cumulative.reserve(mesh.faces.size());
  double total = 0.0;
  for (const Face& f : mesh.faces) {
    total += triangle_area(mesh.vertices[f[0]], mesh.vertices[f[1]], mesh.vertices[f[2]]);
    cumulative.push_back(total);
  }
  if (!(total > 0.0)) throw MeshError("sample_surface: all faces degenerate");

  Rng rng(seed);
  std::vector<Vec3> points;
  points.reserve(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) {
    const double target = rng.uniform() * total;
    const size_t fi = static_cast<size_t>(
        std::lower_bound(cumulative.begin(), cumulative.end(), target) - cumulative.begin());
    const Face& f = mesh.faces[std::min(fi, mesh.faces.size() - 1)];
    // Uniform barycentric via the sqrt trick.
    const double r1 = std::sqrt(rng.uniform());
    const double r2 = rng.uniform();
    const Vec3& a = mesh.vertices[f[0]];
    const Vec3& b = mesh.vertices[f[1]];
    const Vec3& c = mesh.vertices[f[2]];
    points.push_back(a * (1.0 - r1) + b * (r1 * (1.0 - r2)) + c * (r1 * r2));
  }
  return points;
}

PointCloudSet make_pointcloud_set(const Mesh& mesh, const SampleCounts& counts, uint64_t seed) {
  if (!(counts.n2 < counts.n3 && counts.n3 < counts.n4 && counts.n4 < counts.n1)) {
    throw MeshError("make_pointcloud_set: ordering N2<N3<N4<N1 violated");
  }
  PointCloudSet set;
  set.seed = seed;
  set.x1 = sample_surface(mesh, counts.n1, seed + 0);
  set.x2 = sample_surface(mesh, counts.n2, seed + 1);
  set.x3 = sample_surface(mesh, counts.n3, seed + 2);
  set.x4 = sample_surface(mesh, counts.n4, seed + 3);
  return set;
}

Mesh corrupt_mesh(const Mesh& mesh, double fraction, uint64_t seed) {
  if (mesh.faces.size() < 2) throw MeshError("corrupt_mesh: need at least 2 faces");
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw MeshError("corrupt_mesh: fraction must be in (0,1]");
  }
  const size_t f = mesh.faces.size();
  const size_t remove = static_cast<size_t>(std::floor(fraction * static_cast<double>(f)));
  if (remove >= f) throw MeshError("corrupt_mesh: would remove all faces");

  // Partial Fisher-Yates picks `remove` distinct face indices.
  std::vector<size_t> idx(f);
  for (size_t i = 0; i < f; ++i) idx[i] = i;
  Rng rng(seed);
  std::vector<bool> removed(f, false);
  for (size_t i = 0; i < remove; ++i) {
    const size_t j = i + static_cast<size_t>(rng.below(f - i));
    std::swap(idx[i], idx[j]);
    removed[idx[i]] = true;
  }

  Mesh out;
  out.vertices = mesh.vertices;  // unreferenced vertices retained
  out.faces.reserve(f - remove);
  for (size_t i = 0; i < f; ++i) {
    if (!removed[i]) out.faces.push_back(mesh.faces[i]);
  }
  return out;
}

// --- point/triangle distance ---

double point_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  // Closest-feature classification (Ericson, Real-Time Collision Detection).
  const Vec3 ab = b - a;
  const Vec3 ac = c - a;
  const Vec3 ap = p - a;

  const double d1 = dot(ab, ap);
  const double d2 = dot(ac, ap);
  if (d1 <= 0.0 && d2 <= 0.0) return norm(p - a);

  const Vec3 bp = p - b;
  const double d3 = dot(ab, bp);
  const double d4 = dot(ac, bp);
  if (d3 >= 0.0 && d4 <= d3) return norm(p - b);

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    const double t = d1 / (d1 - d3);
    return norm(p - (a + ab * t));
  }

  const Vec3 cp = p - c;
  const double d5 = dot(ab, cp);
  const double d6 = dot(ac, cp);
  if (d6 >= 0.0 && d5 <= d6) return norm(p - c);

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    const double t = d2 / (d2 - d6);
    return norm(p - (a + ac * t));
  }

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    const double t = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return norm(p - (b + (c - b) * t));
  }

  const double denom = 1.0 / (va + vb + vc);
  const double v = vb * denom;
  const double w = vc * denom;
  return norm(p - (a + ab * v + ac * w));
}

double point_mesh_distance(const Vec3& p, const Mesh& mesh) {
  if (mesh.faces.empty()) throw MeshError("point_mesh_distance: mesh has no faces");
  double best = std::numeric_limits<double>::infinity();
  for (const Face& f : mesh.faces) {
    best = std::min(best, point_triangle_distance(p, mesh.vertices[f[0]], mesh.vertices[f[1]],
                                                  mesh.vertices[f[2]]));
  }
  return best;
}

}  // namespace lane
