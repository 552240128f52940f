#pragma once

#include <span>
#include <string>
#include <vector>

#include "curlfem/common.hpp"

namespace curlfem::linalg {

struct Triplet {
  Index row;
  Index col;
  double value;
};

/// Compressed sparse row matrix. Symmetric matrices store both triangles.
class SparseMatrix {
 public:
  SparseMatrix() = default;
  SparseMatrix(Index nrows, Index ncols, std::vector<Index> row_offsets,
               std::vector<Index> col_indices, std::vector<double> values);

  /// Zero matrix with the given shape.
  static SparseMatrix zero(Index nrows, Index ncols);

  Index nrows() const { return nrows_; }
  Index ncols() const { return ncols_; }
  std::size_t nnz() const { return values_.size(); }

  std::span<const Index> row_offsets() const { return row_offsets_; }
  std::span<const Index> col_indices() const { return col_indices_; }
  std::span<const double> values() const { return values_; }
  std::span<double> mutable_values() { return values_; }

  std::span<const Index> row_cols(Index r) const {
    return std::span<const Index>(col_indices_).subspan(row_offsets_[r],
                                                        row_offsets_[r + 1] - row_offsets_[r]);
  }
  std::span<const double> row_values(Index r) const {
    return std::span<const double>(values_).subspan(row_offsets_[r],
                                                    row_offsets_[r + 1] - row_offsets_[r]);
  }

  /// Stored value at (r, c), zero when absent.
  double value(Index r, Index c) const;

  /// y = A x
  void multiply(std::span<const double> x, std::span<double> y) const;
  std::vector<double> multiply(std::span<const double> x) const;
  /// y = A^T x
  void multiply_transpose(std::span<const double> x, std::span<double> y) const;
  std::vector<double> multiply_transpose(std::span<const double> x) const;

  SparseMatrix transpose() const;

  /// Largest |value| over stored entries.
  double max_abs() const;

 private:
  Index nrows_ = 0;
  Index ncols_ = 0;
  std::vector<Index> row_offsets_{0};
  std::vector<Index> col_indices_;
  std::vector<double> values_;
};

/// Sums duplicates and produces sorted CSR. Throws on out-of-range indices.
SparseMatrix assemble_from_triplets(Index nrows, Index ncols, std::span<const Triplet> triplets);
SparseMatrix assemble_from_triplets(Index n, std::span<const Triplet> triplets);

/// alpha * A + beta * B; shapes must agree.
SparseMatrix add(const SparseMatrix& a, const SparseMatrix& b, double alpha = 1.0,
                 double beta = 1.0);

/// Product of two sparse matrices.
SparseMatrix multiply(const SparseMatrix& a, const SparseMatrix& b);

struct SymmetryAudit {
  bool symmetric = true;
  double max_asymmetry = 0.0;
  std::string message;
};

/// Compares every stored (i,j) against (j,i), including structural mismatch.
SymmetryAudit audit_symmetry(const SparseMatrix& a, double tolerance = 0.0);

/// Checks the CSR invariants (offsets monotone, columns strictly increasing and in range).
bool is_canonical(const SparseMatrix& a);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
/// y += alpha x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

}  // namespace curlfem::linalg
