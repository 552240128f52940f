#pragma once

#include <span>
#include <vector>

#include "curlfem/mesh/mesh.hpp"

namespace curlfem::refine {

struct MarkSet {
  std::vector<Index> marked_tets;  // ascending
  double theta = 0.5;
};

/// Doerfler bulk marking: the shortest prefix of tets sorted by descending
/// eta_K^2 (ties by lower tet id) whose mass reaches theta * eta^2.
/// All-zero indicators give an empty set.
MarkSet mark(std::span<const double> eta_k, double theta);

struct BisectionResult {
  mesh::Mesh mesh;
  /// parent[t] is the input tet that output tet t descends from.
  std::vector<Index> parent;
  Index splits = 0;
};

/// Marked-edge bisection of the marked tets followed by conforming closure.
/// Throws Error(kTopology) if the closure exceeds 100 * T splits.
BisectionResult bisect_tracked(const mesh::Mesh& mesh, std::span<const Index> marked);
mesh::Mesh bisect(const mesh::Mesh& mesh, const MarkSet& marks);

/// Three rounds of bisecting every tet (8x the tet count).
BisectionResult uniform_refine_tracked(const mesh::Mesh& mesh);
mesh::Mesh uniform_refine(const mesh::Mesh& mesh);

}  // namespace curlfem::refine
