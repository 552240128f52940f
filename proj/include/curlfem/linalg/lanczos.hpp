#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "curlfem/common.hpp"

namespace curlfem::linalg {

/// y = Op(x). Callbacks must not alias x and y.
using LinearOperator = std::function<void(std::span<const double> x, std::span<double> y)>;

struct LanczosOptions {
  Index nev = 1;
  /// Ritz pair accepted when ||Op y - theta y||_B <= tol * |theta|.
  double tol = 1e-10;
  /// Budget of operator applications over all restarts.
  Index max_iter = 2000;
  /// Basis size before a thick restart; 0 picks max(2 nev + 20, 40).
  Index max_basis = 0;
  std::uint64_t seed = 1;
  /// Re-run with the converged vectors locked to pick up missed copies of
  /// multiple eigenvalues.
  bool verify_multiplicity = true;
  /// Measure basis orthonormality and projected-matrix symmetry at exit.
  bool diagnostics = false;
};

struct RitzPair {
  double value = 0.0;
  std::vector<double> vector;  // unit length in the B inner product
  double residual = 0.0;       // ||Op y - theta y||_B
};

struct LanczosResult {
  std::vector<RitzPair> pairs;  // descending by value
  Index iterations = 0;
  Index restarts = 0;
  Index breakdowns = 0;
  /// max |V^T B V - I| over the final basis (diagnostics only).
  double orthonormality_drift = 0.0;
  /// max |H_ij - (v_i, Op v_j)_B| over the final basis (diagnostics only).
  double symmetry_defect = 0.0;
};

/// Thick-restart Lanczos with full reorthogonalization in the inner product
/// induced by `apply_inner` (B). Every new Lanczos vector is passed through
/// `project`, which deflates a subspace that Op must leave invariant.
///
/// Throws Error(kNoConvergence) when `max_iter` is exhausted (the message
/// carries the current residuals) or after three consecutive breakdowns
/// without an exhausted search space.
LanczosResult lanczos_largest(const LinearOperator& apply_op, const LinearOperator& apply_inner,
                              const LinearOperator& project, Index dim,
                              const LanczosOptions& options);

}  // namespace curlfem::linalg
