#pragma once

#include <span>
#include <vector>

#include "curlfem/linalg/sparse.hpp"

namespace curlfem::linalg {

/// Row-major dense square or rectangular matrix.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(Index rows, Index cols) : rows_(rows), cols_(cols), data_(std::size_t(rows) * cols, 0.0) {}

  static DenseMatrix identity(Index n);
  static DenseMatrix from_sparse(const SparseMatrix& a);

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  double& operator()(Index i, Index j) { return data_[std::size_t(i) * cols_ + j]; }
  double operator()(Index i, Index j) const { return data_[std::size_t(i) * cols_ + j]; }
  std::span<double> row(Index i) { return {data_.data() + std::size_t(i) * cols_, std::size_t(cols_)}; }
  std::span<const double> row(Index i) const {
    return {data_.data() + std::size_t(i) * cols_, std::size_t(cols_)};
  }

 private:
  Index rows_ = 0;
  Index cols_ = 0;
  std::vector<double> data_;
};

struct EigenDecomposition {
  std::vector<double> values;  // ascending
  DenseMatrix vectors;         // column j belongs to values[j]
};

/// Householder tridiagonalization followed by implicit QL.
EigenDecomposition symmetric_eig(const DenseMatrix& a);

/// Cyclic Jacobi rotations; meant for small projected matrices.
EigenDecomposition jacobi_eig(const DenseMatrix& a, double tolerance = 1e-15, int max_sweeps = 100);

/// All eigenpairs of A x = lambda M x, ascending, with x^T M x = 1.
/// Reduces with the Cholesky factor of M. Throws NotSpdError when M is not SPD.
EigenDecomposition dense_generalized_eig(const DenseMatrix& a, const DenseMatrix& m);

/// In-place dense Cholesky, lower factor left in the lower triangle.
void dense_cholesky(DenseMatrix& a);

}  // namespace curlfem::linalg
