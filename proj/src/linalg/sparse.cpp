#include "curlfem/linalg/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace curlfem::linalg {

SparseMatrix::SparseMatrix(Index nrows, Index ncols, std::vector<Index> row_offsets,
                           std::vector<Index> col_indices, std::vector<double> values)
    : nrows_(nrows),
      ncols_(ncols),
      row_offsets_(std::move(row_offsets)),
      col_indices_(std::move(col_indices)),
      values_(std::move(values)) {
  if (nrows_ < 0 || ncols_ < 0 || row_offsets_.size() != static_cast<std::size_t>(nrows_) + 1 ||
      col_indices_.size() != values_.size() ||
      static_cast<std::size_t>(row_offsets_.back()) != values_.size()) {
    throw Error(ErrorCode::kInvalidArgument, "inconsistent CSR arrays");
  }
}

SparseMatrix SparseMatrix::zero(Index nrows, Index ncols) {
  return SparseMatrix(nrows, ncols, std::vector<Index>(nrows + 1, 0), {}, {});
}

double SparseMatrix::value(Index r, Index c) const {
  auto cols = row_cols(r);
  auto it = std::lower_bound(cols.begin(), cols.end(), c);
  if (it == cols.end() || *it != c) return 0.0;
  return values_[row_offsets_[r] + (it - cols.begin())];
}

void SparseMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  for (Index r = 0; r < nrows_; ++r) {
    double s = 0.0;
    for (Index k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) s += values_[k] * x[col_indices_[k]];
    y[r] = s;
  }
}

std::vector<double> SparseMatrix::multiply(std::span<const double> x) const {
  std::vector<double> y(nrows_);
  multiply(x, y);
  return y;
}

void SparseMatrix::multiply_transpose(std::span<const double> x, std::span<double> y) const {
  std::fill(y.begin(), y.end(), 0.0);
  for (Index r = 0; r < nrows_; ++r) {
    for (Index k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) y[col_indices_[k]] += values_[k] * x[r];
  }
}

std::vector<double> SparseMatrix::multiply_transpose(std::span<const double> x) const {
  std::vector<double> y(ncols_);
  multiply_transpose(x, y);
  return y;
}

SparseMatrix SparseMatrix::transpose() const {
  std::vector<Index> offsets(ncols_ + 1, 0);
  for (Index c : col_indices_) ++offsets[c + 1];
  std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
  std::vector<Index> next(offsets.begin(), offsets.end() - 1);
  std::vector<Index> cols(nnz());
  std::vector<double> vals(nnz());
  for (Index r = 0; r < nrows_; ++r) {
    for (Index k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) {
      Index dst = next[col_indices_[k]]++;
      cols[dst] = r;
      vals[dst] = values_[k];
    }
  }
  return SparseMatrix(ncols_, nrows_, std::move(offsets), std::move(cols), std::move(vals));
}

double SparseMatrix::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

SparseMatrix assemble_from_triplets(Index nrows, Index ncols, std::span<const Triplet> triplets) {
  if (nrows < 0 || ncols < 0) throw Error(ErrorCode::kInvalidArgument, "negative matrix dimension");
  std::vector<Index> counts(nrows + 1, 0);
  for (const auto& t : triplets) {
    if (t.row < 0 || t.row >= nrows || t.col < 0 || t.col >= ncols) {
      throw Error(ErrorCode::kInvalidArgument,
                  "triplet index out of range: (" + std::to_string(t.row) + ", " +
                      std::to_string(t.col) + ")");
    }
    ++counts[t.row + 1];
  }
  std::partial_sum(counts.begin(), counts.end(), counts.begin());

  // Bucket by row, then sort and merge within each row.
  std::vector<std::pair<Index, double>> bucket(triplets.size());
  std::vector<Index> next(counts.begin(), counts.end() - 1);
  for (const auto& t : triplets) bucket[next[t.row]++] = {t.col, t.value};

  std::vector<Index> offsets(nrows + 1, 0);
  std::vector<Index> cols;
  std::vector<double> vals;
  cols.reserve(triplets.size());
  vals.reserve(triplets.size());
  for (Index r = 0; r < nrows; ++r) {
    auto first = bucket.begin() + counts[r];
    auto last = bucket.begin() + counts[r + 1];
    std::sort(first, last, [](const auto& a, const auto& b) { return a.first < b.first; });
    for (auto it = first; it != last; ++it) {
      if (!cols.empty() && static_cast<Index>(cols.size()) > offsets[r] && cols.back() == it->first) {
        vals.back() += it->second;
      } else {
        cols.push_back(it->first);
        vals.push_back(it->second);
      }
    }
    offsets[r + 1] = static_cast<Index>(cols.size());
  }
  return SparseMatrix(nrows, ncols, std::move(offsets), std::move(cols), std::move(vals));
}

SparseMatrix assemble_from_triplets(Index n, std::span<const Triplet> triplets) {
  return assemble_from_triplets(n, n, triplets);
}

SparseMatrix add(const SparseMatrix& a, const SparseMatrix& b, double alpha, double beta) {
  if (a.nrows() != b.nrows() || a.ncols() != b.ncols()) {
    throw Error(ErrorCode::kInvalidArgument, "matrix shapes differ in add");
  }
  std::vector<Index> offsets(a.nrows() + 1, 0);
  std::vector<Index> cols;
  std::vector<double> vals;
  cols.reserve(a.nnz() + b.nnz());
  vals.reserve(a.nnz() + b.nnz());
  for (Index r = 0; r < a.nrows(); ++r) {
    auto ca = a.row_cols(r), cb = b.row_cols(r);
    auto va = a.row_values(r), vb = b.row_values(r);
    std::size_t i = 0, j = 0;
    while (i < ca.size() || j < cb.size()) {
      if (j == cb.size() || (i < ca.size() && ca[i] < cb[j])) {
        cols.push_back(ca[i]);
        vals.push_back(alpha * va[i++]);
      } else if (i == ca.size() || cb[j] < ca[i]) {
        cols.push_back(cb[j]);
        vals.push_back(beta * vb[j++]);
      } else {
        cols.push_back(ca[i]);
        vals.push_back(alpha * va[i++] + beta * vb[j++]);
      }
    }
    offsets[r + 1] = static_cast<Index>(cols.size());
  }
  return SparseMatrix(a.nrows(), a.ncols(), std::move(offsets), std::move(cols), std::move(vals));
}

SparseMatrix multiply(const SparseMatrix& a, const SparseMatrix& b) {
  if (a.ncols() != b.nrows()) throw Error(ErrorCode::kInvalidArgument, "shape mismatch in multiply");
  std::vector<Index> offsets(a.nrows() + 1, 0);
  std::vector<Index> cols;
  std::vector<double> vals;
  std::vector<double> accum(b.ncols(), 0.0);
  std::vector<Index> marker(b.ncols(), -1);
  std::vector<Index> pattern;
  for (Index r = 0; r < a.nrows(); ++r) {
    pattern.clear();
    auto ca = a.row_cols(r);
    auto va = a.row_values(r);
    for (std::size_t i = 0; i < ca.size(); ++i) {
      auto cb = b.row_cols(ca[i]);
      auto vb = b.row_values(ca[i]);
      for (std::size_t j = 0; j < cb.size(); ++j) {
        if (marker[cb[j]] != r) {
          marker[cb[j]] = r;
          accum[cb[j]] = 0.0;
          pattern.push_back(cb[j]);
        }
        accum[cb[j]] += va[i] * vb[j];
      }
    }
    std::sort(pattern.begin(), pattern.end());
    for (Index c : pattern) {
      cols.push_back(c);
      vals.push_back(accum[c]);
    }
    offsets[r + 1] = static_cast<Index>(cols.size());
  }
  return SparseMatrix(a.nrows(), b.ncols(), std::move(offsets), std::move(cols), std::move(vals));
}

SymmetryAudit audit_symmetry(const SparseMatrix& a, double tolerance) {
  SymmetryAudit report;
  if (a.nrows() != a.ncols()) {
    report.symmetric = false;
    report.message = "matrix is not square";
    return report;
  }
  for (Index r = 0; r < a.nrows(); ++r) {
    auto cols = a.row_cols(r);
    auto vals = a.row_values(r);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      auto mirror = a.row_cols(cols[k]);
      bool present = std::binary_search(mirror.begin(), mirror.end(), r);
      double diff = std::abs(vals[k] - a.value(cols[k], r));
      report.max_asymmetry = std::max(report.max_asymmetry, diff);
      if ((!present || diff > tolerance) && report.symmetric) {
        report.symmetric = false;
        report.message = "entry (" + std::to_string(r) + ", " + std::to_string(cols[k]) +
                         ") has no matching transpose entry";
      }
    }
  }
  return report;
}

bool is_canonical(const SparseMatrix& a) {
  auto offsets = a.row_offsets();
  if (offsets.front() != 0) return false;
  for (Index r = 0; r < a.nrows(); ++r) {
    if (offsets[r + 1] < offsets[r]) return false;
    auto cols = a.row_cols(r);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      if (cols[k] < 0 || cols[k] >= a.ncols()) return false;
      if (k > 0 && cols[k] <= cols[k - 1]) return false;
    }
  }
  return true;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

}  // namespace curlfem::linalg
