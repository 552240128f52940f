#pragma once

#include <memory>
#include <span>
#include <vector>

#include "curlfem/linalg/sparse.hpp"

namespace curlfem::linalg {

enum class Ordering { kNatural, kApproximateMinimumDegree };

enum class Backend {
  /// Up-looking LDL^T; exposes the factor entries.
  kNative,
  /// CHOLMOD supernodal LL^T; used for large systems.
  kCholmod,
};

class CholmodFactor;

/// Sparse factorization of a symmetric positive definite matrix,
/// P A P^T = L D L^T with L unit lower triangular.
///
/// `permutation[k]` is the original index of the k-th pivot. With the native
/// backend the strict lower part of L is held column by column, i.e.
/// `lower_by_columns` is the CSR form of L^T restricted to the strictly upper
/// triangle. The CHOLMOD backend keeps its factor opaque: `lower_by_columns`
/// and `diagonal` are empty there.
class Factorization {
 public:
  Factorization() = default;

  Index size() const { return static_cast<Index>(permutation_.size()); }
  Backend backend() const { return cholmod_ ? Backend::kCholmod : Backend::kNative; }
  std::span<const Index> permutation() const { return permutation_; }
  const SparseMatrix& lower_by_columns() const { return lower_; }
  std::span<const double> diagonal() const { return diagonal_; }
  std::size_t factor_nnz() const;

  std::vector<double> solve(std::span<const double> b) const;
  void solve_in_place(std::span<double> x) const;

 private:
  friend Factorization cholesky(const SparseMatrix& a, Ordering ordering, Backend backend);

  std::vector<Index> permutation_;
  SparseMatrix lower_;
  std::vector<double> diagonal_;
  std::shared_ptr<const CholmodFactor> cholmod_;
};

/// Throws NotSpdError with the original pivot index on a non-positive pivot.
/// Backend::kCholmod falls back to the native path when cholmod_available()
/// is false; Factorization::backend() reports the path taken.
Factorization cholesky(const SparseMatrix& a, Ordering ordering = Ordering::kApproximateMinimumDegree,
                       Backend backend = Backend::kCholmod);

/// False when the CHOLMOD supernodal path fails its self-check on this machine
/// (seen with OpenBLAS kernels selected for misdetected CPUs; setting
/// OPENBLAS_CORETYPE=Haswell avoids it).
bool cholmod_available();

/// Fill-reducing permutation (AMD on the symmetric pattern of `a`).
std::vector<Index> amd_permutation(const SparseMatrix& a);

}  // namespace curlfem::linalg
