#pragma once

#include <array>
#include <functional>
#include <span>
#include <vector>

#include "curlfem/linalg/sparse.hpp"
#include "curlfem/mesh/mesh.hpp"

namespace curlfem::fem {

enum class BoundaryCondition {
  /// Tangential trace vanishes: boundary edges carry no dof.
  kEssential,
  /// Every edge is a dof. The vertex space drops the highest vertex id so
  /// that G keeps full column rank.
  kNatural,
};

inline constexpr Index kNoDof = -1;

struct DofMap {
  BoundaryCondition condition = BoundaryCondition::kEssential;
  Index n_dofs = 0;
  std::vector<Index> edge_to_dof;  // kNoDof on eliminated edges
  /// Vertex numbering for the discrete gradient (columns of G).
  Index n_vertex_dofs = 0;
  std::vector<Index> vertex_to_dof;

  /// Global dof of local edge k of tet t, or kNoDof.
  Index dof(const mesh::Mesh& mesh, Index t, int k) const { return edge_to_dof[mesh.tet_edges[t][k]]; }
};

DofMap make_dofmap(const mesh::Mesh& mesh, BoundaryCondition condition = BoundaryCondition::kEssential);

enum class Simplex { kTet, kTriangle };

/// Points are reference coordinates; triangle points have z = 0.
struct QuadratureRule {
  std::vector<Vec3> points;
  std::vector<double> weights;
};

/// Rules on the reference simplex exact for polynomials up to `degree` (<= 4).
QuadratureRule quadrature(Simplex domain, int degree);

/// Whitney edge basis on one tet. Local edge k runs from vertex
/// kLocalEdges[k][0] to kLocalEdges[k][1]; W_ij = l_i grad l_j - l_j grad l_i.
struct ElementBasis {
  std::array<Vec3, 4> corners;
  std::array<Vec3, 4> grad_lambda;
  std::array<Vec3, 6> curls;  // 2 grad l_i x grad l_j
  double volume = 0.0;

  Vec3 value(int k, const std::array<double, 4>& bary) const;
  Vec3 point(const std::array<double, 4>& bary) const;
};

/// Throws Error(kDegenerate) when volume < 1e-14 h_K^3.
ElementBasis whitney_basis(const std::array<Vec3, 4>& corners);

/// Barycentric coordinates of a reference point (x, y, z).
std::array<double, 4> barycentric(Vec3 reference_point);

struct AssembledSystem {
  linalg::SparseMatrix A;  // curl-curl stiffness
  linalg::SparseMatrix M;  // edge mass
  linalg::SparseMatrix G;  // discrete gradient, n_dofs x n_vertex_dofs
};

AssembledSystem assemble(const mesh::Mesh& mesh, const DofMap& dofmap);

/// Sum of sign * coeff * W over the edges of tet t at a barycentric point.
Vec3 evaluate_field(const mesh::Mesh& mesh, const DofMap& dofmap, std::span<const double> coeffs, Index tet,
                    const std::array<double, 4>& bary);

/// Constant curl of the field on tet t.
Vec3 evaluate_curl(const mesh::Mesh& mesh, const DofMap& dofmap, std::span<const double> coeffs, Index tet);

using VectorField = std::function<Vec3(Vec3)>;

/// Edge dofs of `field`: tangential line integrals along the global edge
/// direction (5-point Gauss rule).
std::vector<double> interpolate(const mesh::Mesh& mesh, const DofMap& dofmap, const VectorField& field);

}  // namespace curlfem::fem
