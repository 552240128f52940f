#include "curlfem/linalg/cholesky.hpp"

#include <amd.h>

#include "cholmod_backend.hpp"

#include <cmath>
#include <limits>
#include <numeric>

namespace curlfem::linalg {

bool cholmod_available() { return cholmod_usable(); }

std::vector<Index> amd_permutation(const SparseMatrix& a) {
  const Index n = a.nrows();
  std::vector<Index> perm(n);
  if (n == 0) return perm;
  static_assert(sizeof(Index) == sizeof(int));
  double control[AMD_CONTROL];
  double info[AMD_INFO];
  amd_defaults(control);
  int status = amd_order(n, a.row_offsets().data(), a.col_indices().data(), perm.data(), control, info);
  if (status != AMD_OK && status != AMD_OK_BUT_JUMBLED) {
    throw Error(ErrorCode::kInternal, "AMD ordering failed with status " + std::to_string(status));
  }
  return perm;
}

Factorization cholesky(const SparseMatrix& a, Ordering ordering, Backend backend) {
  if (a.nrows() != a.ncols()) throw Error(ErrorCode::kInvalidArgument, "cholesky needs a square matrix");
  const Index n = a.nrows();

  Factorization f;
  if (backend == Backend::kCholmod && n > 0 && cholmod_usable()) {
    f.cholmod_ = cholmod_factorize(a, ordering, f.permutation_);
    return f;
  }
  if (ordering == Ordering::kApproximateMinimumDegree) {
    f.permutation_ = amd_permutation(a);
  } else {
    f.permutation_.resize(n);
    std::iota(f.permutation_.begin(), f.permutation_.end(), 0);
  }
  std::vector<Index> inverse(n);
  for (Index k = 0; k < n; ++k) inverse[f.permutation_[k]] = k;

  // Upper triangle of P A P^T stored by columns: column j lists rows i <= j.
  std::vector<Index> cp(n + 1, 0);
  for (Index r = 0; r < n; ++r) {
    for (Index c : a.row_cols(r)) {
      Index i = inverse[r], j = inverse[c];
      if (i <= j) ++cp[j + 1];
    }
  }
  std::partial_sum(cp.begin(), cp.end(), cp.begin());
  std::vector<Index> ci(cp.back());
  std::vector<double> cx(cp.back());
  {
    std::vector<Index> next(cp.begin(), cp.end() - 1);
    for (Index r = 0; r < n; ++r) {
      auto cols = a.row_cols(r);
      auto vals = a.row_values(r);
      for (std::size_t k = 0; k < cols.size(); ++k) {
        Index i = inverse[r], j = inverse[cols[k]];
        if (i <= j) {
          ci[next[j]] = i;
          cx[next[j]++] = vals[k];
        }
      }
    }
  }

  // Symbolic: elimination tree and column counts of L.
  std::vector<Index> parent(n), flag(n);
  std::vector<std::int64_t> col_count(n, 0);
  for (Index k = 0; k < n; ++k) {
    parent[k] = -1;
    flag[k] = k;
    for (Index p = cp[k]; p < cp[k + 1]; ++p) {
      for (Index i = ci[p]; i < k && flag[i] != k; i = parent[i]) {
        if (parent[i] == -1) parent[i] = k;
        ++col_count[i];
        flag[i] = k;
      }
    }
  }
  std::vector<Index> lp(n + 1, 0);
  std::int64_t total = 0;
  for (Index k = 0; k < n; ++k) {
    lp[k] = static_cast<Index>(total);
    total += col_count[k];
    if (total > std::numeric_limits<Index>::max()) {
      throw Error(ErrorCode::kInternal, "factor too large for 32-bit indices");
    }
  }
  lp[n] = static_cast<Index>(total);

  // Numeric: up-looking, one row of L per step.
  std::vector<Index> li(total);
  std::vector<double> lx(total);
  std::vector<Index> lnz(n, 0), pattern(n);
  std::vector<double> y(n, 0.0);
  f.diagonal_.assign(n, 0.0);
  for (Index k = 0; k < n; ++k) {
    Index top = n;
    flag[k] = k;
    for (Index p = cp[k]; p < cp[k + 1]; ++p) {
      Index i = ci[p];
      y[i] += cx[p];
      Index len = 0;
      for (; flag[i] != k; i = parent[i]) {
        pattern[len++] = i;
        flag[i] = k;
      }
      while (len > 0) pattern[--top] = pattern[--len];
    }
    double d = y[k];
    y[k] = 0.0;
    for (; top < n; ++top) {
      Index i = pattern[top];
      double yi = y[i];
      y[i] = 0.0;
      Index end = lp[i] + lnz[i];
      for (Index p = lp[i]; p < end; ++p) y[li[p]] -= lx[p] * yi;
      double lki = yi / f.diagonal_[i];
      d -= lki * yi;
      li[end] = k;
      lx[end] = lki;
      ++lnz[i];
    }
    if (!(d > 0.0) || !std::isfinite(d)) throw NotSpdError(f.permutation_[k], d);
    f.diagonal_[k] = d;
  }
  f.lower_ = SparseMatrix(n, n, std::move(lp), std::move(li), std::move(lx));
  return f;
}

std::size_t Factorization::factor_nnz() const {
  return cholmod_ ? cholmod_factor_nnz(*cholmod_) : lower_.nnz() + diagonal_.size();
}

void Factorization::solve_in_place(std::span<double> x) const {
  const Index n = size();
  if (static_cast<Index>(x.size()) != n) throw Error(ErrorCode::kInvalidArgument, "solve: size mismatch");
  if (cholmod_) {
    cholmod_solve_in_place(*cholmod_, x);
    return;
  }
  std::vector<double> work(n);
  for (Index k = 0; k < n; ++k) work[k] = x[permutation_[k]];
  auto lp = lower_.row_offsets();
  auto li = lower_.col_indices();
  auto lx = lower_.values();
  for (Index j = 0; j < n; ++j) {
    const double xj = work[j];
    for (Index p = lp[j]; p < lp[j + 1]; ++p) work[li[p]] -= lx[p] * xj;
  }
  for (Index j = 0; j < n; ++j) work[j] /= diagonal_[j];
  for (Index j = n - 1; j >= 0; --j) {
    double s = work[j];
    for (Index p = lp[j]; p < lp[j + 1]; ++p) s -= lx[p] * work[li[p]];
    work[j] = s;
  }
  for (Index k = 0; k < n; ++k) x[permutation_[k]] = work[k];
}

std::vector<double> Factorization::solve(std::span<const double> b) const {
  std::vector<double> x(b.begin(), b.end());
  solve_in_place(x);
  return x;
}

}  // namespace curlfem::linalg
