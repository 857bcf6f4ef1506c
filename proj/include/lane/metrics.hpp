#pragma once

#include <cstdint>
#include <vector>

#include "lane/mesh.hpp"

namespace lane {

// Symmetric mean nearest-neighbor distance between point sets, exact
// (unsquared Euclidean, no approximate index).
double chamfer(const std::vector<Vec3>& a, const std::vector<Vec3>& b);

// Mean over interior edges of (1 - n_a . n_b) / 2 for the two incident
// face normals; 0 for coplanar neighbors, 1 for folded-flat. Edges touching
// a zero-area face are skipped and counted.
struct NormalConsistencyReport {
  double value = 0.0;
  size_t interior_edges = 0;
  size_t skipped_edges = 0;
};
NormalConsistencyReport normal_consistency(const Mesh& mesh);

// Exact point-to-surface distances, reported as (mean, max).
struct PointMeshReport {
  double mean = 0.0;
  double hausdorff = 0.0;
};
PointMeshReport point_to_mesh(const std::vector<Vec3>& points, const Mesh& mesh);

// Mesh-vs-mesh surface distance: sample n points on each mesh (fixed
// seeds), measure each sample set against the other surface exactly, and
// average the two directions. Unlike sample-vs-sample chamfer this is not
// floored by sampling density, so it resolves quantization-level error.
double surface_chamfer(const Mesh& a, const Mesh& b, int64_t n_samples = 10000,
                       uint64_t seed = 7);

}  // namespace lane
