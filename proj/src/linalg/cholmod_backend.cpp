#include "cholmod_backend.hpp"

#include <cholmod.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>

namespace curlfem::linalg {

class CholmodFactor {
 public:
  CholmodFactor() { cholmod_start(&common); }
  ~CholmodFactor() {
    if (factor) cholmod_free_factor(&factor, &common);
    cholmod_finish(&common);
  }
  CholmodFactor(const CholmodFactor&) = delete;
  CholmodFactor& operator=(const CholmodFactor&) = delete;

  mutable std::mutex mutex;
  mutable cholmod_common common;
  cholmod_factor* factor = nullptr;
  std::size_t nnz = 0;
};

std::shared_ptr<const CholmodFactor> cholmod_factorize(const SparseMatrix& a, Ordering ordering,
                                                       std::vector<Index>& permutation) {
  static_assert(sizeof(Index) == sizeof(int));
  const Index n = a.nrows();
  auto f = std::make_shared<CholmodFactor>();
  cholmod_common& c = f->common;
  c.print = 0;
  c.error_handler = nullptr;
  c.nmethods = 1;
  c.method[0].ordering = ordering == Ordering::kNatural ? CHOLMOD_NATURAL : CHOLMOD_AMD;
  c.postorder = ordering != Ordering::kNatural;
  c.supernodal = CHOLMOD_SUPERNODAL;

  // A symmetric CSR matrix is its own CSC form; stype = 1 reads the upper triangle.
  cholmod_sparse s{};
  s.nrow = n;
  s.ncol = n;
  s.nzmax = a.nnz();
  s.p = const_cast<Index*>(a.row_offsets().data());
  s.i = const_cast<Index*>(a.col_indices().data());
  s.x = const_cast<double*>(a.values().data());
  s.stype = 1;
  s.itype = CHOLMOD_INT;
  s.xtype = CHOLMOD_REAL;
  s.dtype = CHOLMOD_DOUBLE;
  s.sorted = 1;
  s.packed = 1;

  f->factor = cholmod_analyze(&s, &c);
  if (!f->factor) throw Error(ErrorCode::kInternal, "CHOLMOD analysis failed with status " + std::to_string(c.status));
  f->nnz = static_cast<std::size_t>(c.lnz);
  cholmod_factorize(&s, f->factor, &c);
  const int* perm = static_cast<const int*>(f->factor->Perm);
  if (c.status == CHOLMOD_NOT_POSDEF) {
    throw NotSpdError(perm[f->factor->minor], std::numeric_limits<double>::quiet_NaN());
  }
  if (c.status < CHOLMOD_OK) throw Error(ErrorCode::kInternal, "CHOLMOD factorization failed with status " + std::to_string(c.status));
  permutation.assign(perm, perm + n);
  return f;
}

void cholmod_solve_in_place(const CholmodFactor& f, std::span<double> x) {
  std::lock_guard<std::mutex> lock(f.mutex);
  cholmod_dense b{};
  b.nrow = x.size();
  b.ncol = 1;
  b.nzmax = x.size();
  b.d = x.size();
  b.x = x.data();
  b.xtype = CHOLMOD_REAL;
  b.dtype = CHOLMOD_DOUBLE;
  cholmod_dense* sol = cholmod_solve(CHOLMOD_A, f.factor, &b, &f.common);
  if (!sol) throw Error(ErrorCode::kInternal, "CHOLMOD solve failed with status " + std::to_string(f.common.status));
  const double* sx = static_cast<const double*>(sol->x);
  std::copy(sx, sx + x.size(), x.begin());
  cholmod_free_dense(&sol, &f.common);
}

std::size_t cholmod_factor_nnz(const CholmodFactor& f) { return f.nnz; }

bool cholmod_usable() {
  // Some BLAS builds pick kernels that break the supernodal path on CPUs
  // they misdetect; a shifted 3D Laplacian large enough to form dense
  // supernodes exposes it.
  static const bool ok = [] {
    constexpr Index m = 14;
    const Index n = m * m * m;
    auto id = [&](Index i, Index j, Index k) { return (k * m + j) * m + i; };
    std::vector<Triplet> t;
    for (Index k = 0; k < m; ++k)
      for (Index j = 0; j < m; ++j)
        for (Index i = 0; i < m; ++i) {
          const Index r = id(i, j, k);
          t.push_back({r, r, 7.0});
          if (i + 1 < m) t.push_back({r, id(i + 1, j, k), -1.0}), t.push_back({id(i + 1, j, k), r, -1.0});
          if (j + 1 < m) t.push_back({r, id(i, j + 1, k), -1.0}), t.push_back({id(i, j + 1, k), r, -1.0});
          if (k + 1 < m) t.push_back({r, id(i, j, k + 1), -1.0}), t.push_back({id(i, j, k + 1), r, -1.0});
        }
    const SparseMatrix a = assemble_from_triplets(n, t);
    try {
      std::vector<Index> perm;
      auto f = cholmod_factorize(a, Ordering::kApproximateMinimumDegree, perm);
      std::vector<double> x = a.multiply(std::vector<double>(n, 1.0));
      cholmod_solve_in_place(*f, x);
      for (double v : x)
        if (!(std::abs(v - 1.0) < 1e-10)) return false;
      return true;
    } catch (const Error&) {
      return false;
    }
  }();
  return ok;
}

}  // namespace curlfem::linalg
