#include "lane/metrics.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <utility>

namespace lane {

double chamfer(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  if (a.empty() || b.empty()) throw MeshError("chamfer: empty point set");
  auto directed = [](const std::vector<Vec3>& from, const std::vector<Vec3>& to) {
    double total = 0.0;
    for (const Vec3& p : from) {
      double best = std::numeric_limits<double>::infinity();
      for (const Vec3& q : to) {
        const Vec3 d = p - q;
        best = std::min(best, dot(d, d));
      }
      total += std::sqrt(best);
    }
    return total / static_cast<double>(from.size());
  };
  return 0.5 * (directed(a, b) + directed(b, a));
}

NormalConsistencyReport normal_consistency(const Mesh& mesh) {
  mesh.validate();
  std::map<std::pair<int, int>, int> owner;  // directed edge -> face
  for (size_t fi = 0; fi < mesh.faces.size(); ++fi) {
    const Face& f = mesh.faces[fi];
    for (int k = 0; k < 3; ++k) {
      owner[{f[k], f[(k + 1) % 3]}] = static_cast<int>(fi);
    }
  }

  std::vector<Vec3> normals(mesh.faces.size());
  std::vector<bool> degenerate(mesh.faces.size(), false);
  for (size_t fi = 0; fi < mesh.faces.size(); ++fi) {
    const Face& f = mesh.faces[fi];
    const Vec3 n = cross(mesh.vertices[f[1]] - mesh.vertices[f[0]],
                         mesh.vertices[f[2]] - mesh.vertices[f[0]]);
    const double len = norm(n);
    if (len <= 0.0) {
      degenerate[fi] = true;
    } else {
      normals[fi] = n * (1.0 / len);
    }
  }

  NormalConsistencyReport report;
  double total = 0.0;
  for (const auto& [edge, fa] : owner) {
    if (edge.first > edge.second) continue;  // count each undirected edge once
    const auto rev = owner.find({edge.second, edge.first});
    if (rev == owner.end()) continue;  // boundary
    const int fb = rev->second;
    if (degenerate[static_cast<size_t>(fa)] || degenerate[static_cast<size_t>(fb)]) {
      ++report.skipped_edges;
      continue;
    }
    total += 0.5 * (1.0 - dot(normals[static_cast<size_t>(fa)], normals[static_cast<size_t>(fb)]));
    ++report.interior_edges;
  }
  if (report.interior_edges == 0) {
    throw MeshError("normal_consistency: mesh has no interior edges");
  }
  report.value = total / static_cast<double>(report.interior_edges);
  return report;
}

PointMeshReport point_to_mesh(const std::vector<Vec3>& points, const Mesh& mesh) {
  if (points.empty()) throw MeshError("point_to_mesh: empty point set");
  if (mesh.faces.empty()) throw MeshError("point_to_mesh: mesh has no faces");
  PointMeshReport report;
  for (const Vec3& p : points) {
    const double d = point_mesh_distance(p, mesh);
    report.mean += d;
    report.hausdorff = std::max(report.hausdorff, d);
  }
  report.mean /= static_cast<double>(points.size());
  return report;
}

double surface_chamfer(const Mesh& a, const Mesh& b, int64_t n_samples, uint64_t seed) {
  const std::vector<Vec3> pa = sample_surface(a, n_samples, seed);
  const std::vector<Vec3> pb = sample_surface(b, n_samples, seed + 1);
  return 0.5 * (point_to_mesh(pa, b).mean + point_to_mesh(pb, a).mean);
}

}  // namespace lane
