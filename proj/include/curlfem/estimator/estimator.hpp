#pragma once

#include <span>
#include <vector>

#include "curlfem/eigensolver/eigensolver.hpp"
#include "curlfem/fem/fem.hpp"

namespace curlfem::estimator {

struct IndicatorField {
  std::vector<double> eta_k;
  double eta = 0.0;
  /// sum over interior faces F of K of (h_F / 4) ||[u . n_F]||^2_F
  std::vector<double> jump_part;
  /// Element divergence term; identically zero for lowest-order edge elements.
  std::vector<double> div_part;
};

/// Face normal-jump indicators. Each interior face contributes its full term
/// to both adjacent tets. Throws Error(kTopology) on non-conforming meshes.
IndicatorField compute_indicators(const mesh::Mesh& mesh, const fem::DofMap& dofmap, std::span<const double> coeffs,
                                  int face_degree = 2);
IndicatorField compute_indicators(const mesh::Mesh& mesh, const fem::DofMap& dofmap,
                                  const eigensolver::EigenPair& pair);

/// L2 projection onto curl of the edge space: solves A c = b with
/// b_i = (sigma, curl W_i) (degree-4 quadrature) and returns curl(sum c_i W_i) per tet.
std::vector<Vec3> project_onto_curl_space(const mesh::Mesh& mesh, const fem::DofMap& dofmap,
                                          const eigensolver::MaxwellSolver& solver, const fem::VectorField& sigma);

/// ||a - b|| for piecewise-constant fields.
double l2_distance(const mesh::Mesh& mesh, std::span<const Vec3> a, std::span<const Vec3> b);

/// Edge field on a nested finer mesh; parent[t] is the coarse tet containing fine tet t.
struct FineReference {
  const mesh::Mesh* mesh = nullptr;
  const fem::DofMap* dofmap = nullptr;
  std::span<const double> coeffs;
  std::span<const Index> parent;
};

struct RatioStats {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double p95 = 0.0;
};

struct EffectivityReport {
  double eta = 0.0;
  double error_norm = 0.0;
  double effectivity = 0.0;
  /// eta_K / ||e||_{patch of K}, patch = K and its face neighbours.
  std::vector<double> per_tet_ratios;
  RatioStats ratio_stats;
};

/// The reference is rescaled to the L2 norm of u_h and its sign aligned with
/// u_h before the error is measured (degree-4 quadrature). Throws
/// Error(kInvalidArgument) when the reference norm is zero or the error norm is
/// below 1e-12 of the u_h norm.
EffectivityReport effectivity(const mesh::Mesh& mesh, const fem::DofMap& dofmap, std::span<const double> coeffs,
                              const IndicatorField& indicators, const fem::VectorField& reference);
EffectivityReport effectivity(const mesh::Mesh& mesh, const fem::DofMap& dofmap, std::span<const double> coeffs,
                              const IndicatorField& indicators, const FineReference& reference);

/// Linear-interpolated percentile of `values`, q in [0, 1].
double percentile(std::vector<double> values, double q);

}  // namespace curlfem::estimator
