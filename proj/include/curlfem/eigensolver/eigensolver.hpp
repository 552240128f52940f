#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "curlfem/fem/fem.hpp"
#include "curlfem/linalg/cholesky.hpp"

namespace curlfem::eigensolver {

struct EigenPair {
  double lambda_h = 0.0;
  /// Scaled so that (A u, u) = lambda_h^2, i.e. sigma = curl u / lambda_h has unit L2 norm.
  std::vector<double> u_coeffs;
  /// ||A u - lambda_h M u|| / ||M u||
  double residual = 0.0;
  double sigma_scale = 0.0;  // 1 / lambda_h
};

struct SolveOptions {
  Index nev = 1;
  /// Bound on every returned EigenPair::residual.
  double tol = 1e-8;
  /// Ritz tolerance of the spectral-transform Lanczos run. Tightened by 100x
  /// (at most twice) when a returned pair misses `tol`.
  double lanczos_tol = 1e-10;
  Index max_iter = 4000;
  std::uint64_t seed = 1;
};

/// Holds the factorizations of A + M and G^T M G for one assembled system,
/// which must outlive the solver.
class MaxwellSolver {
 public:
  explicit MaxwellSolver(const fem::AssembledSystem& system, linalg::Backend backend = linalg::Backend::kCholmod);

  const fem::AssembledSystem& system() const { return *system_; }
  Index n_dofs() const { return system_->A.nrows(); }

  /// x - G (G^T M G)^{-1} G^T M x, the M-orthogonal removal of discrete gradients.
  void project(std::span<const double> x, std::span<double> y) const;

  /// (A + M)^{-1} M x
  void apply_transform(std::span<const double> x, std::span<double> y) const;

  /// Solves A c = b for b orthogonal to the gradients, with c orthogonal to
  /// the gradients. Throws Error(kNoConvergence) above `tol` relative residual.
  std::vector<double> solve_curl_curl(std::span<const double> b, double tol = 1e-12) const;

  /// The nev smallest positive eigenpairs, ascending.
  std::vector<EigenPair> solve_smallest(const SolveOptions& options) const;

  const linalg::Factorization& shifted_factor() const { return shifted_; }

 private:
  std::vector<EigenPair> lanczos_pairs(const SolveOptions& options, double lanczos_tol) const;

  const fem::AssembledSystem* system_;
  linalg::Factorization shifted_;
  linalg::Factorization gradient_gram_;
};

/// Convenience wrapper: factor, solve, discard the factors.
std::vector<EigenPair> solve_smallest(const fem::AssembledSystem& system, const SolveOptions& options);

/// Rescales `u` so that (A u, u) = lambda^2 and fixes the sign so that the
/// largest-magnitude coefficient (lowest index on ties) is positive.
EigenPair make_pair(const fem::AssembledSystem& system, double lambda, std::vector<double> u);

/// Per-tet constant sigma_h = curl u_h / lambda_h.
std::vector<Vec3> sigma_of(const EigenPair& pair, const mesh::Mesh& mesh, const fem::DofMap& dofmap);

/// L2 norm of a piecewise-constant field.
double l2_norm(const mesh::Mesh& mesh, std::span<const Vec3> field);

}  // namespace curlfem::eigensolver
