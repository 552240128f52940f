#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "curlfem/linalg/cholesky.hpp"
#include "curlfem/linalg/dense.hpp"
#include "curlfem/linalg/lanczos.hpp"
#include "curlfem/linalg/sparse.hpp"

using namespace curlfem;
using namespace curlfem::linalg;

namespace {

// Random sparse SPD matrix: symmetric random off-diagonal pattern plus a dominant diagonal.
SparseMatrix random_spd(Index n, double density, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0), p(0.0, 1.0);
  std::vector<Triplet> t;
  std::vector<double> rowsum(n, 0.0);
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j)
      if (p(rng) < density) {
        const double v = u(rng);
        t.push_back({i, j, v});
        t.push_back({j, i, v});
        rowsum[i] += std::abs(v);
        rowsum[j] += std::abs(v);
      }
  for (Index i = 0; i < n; ++i) t.push_back({i, i, rowsum[i] + 0.5 + p(rng)});
  return assemble_from_triplets(n, t);
}

// 7-point Laplacian on an m^3 grid with a unit shift.
SparseMatrix grid_laplacian(Index m) {
  const Index n = m * m * m;
  std::vector<Triplet> t;
  auto id = [m](Index i, Index j, Index k) { return (k * m + j) * m + i; };
  for (Index k = 0; k < m; ++k)
    for (Index j = 0; j < m; ++j)
      for (Index i = 0; i < m; ++i) {
        const Index r = id(i, j, k);
        t.push_back({r, r, 7.0});
        if (i > 0) t.push_back({r, id(i - 1, j, k), -1.0});
        if (i + 1 < m) t.push_back({r, id(i + 1, j, k), -1.0});
        if (j > 0) t.push_back({r, id(i, j - 1, k), -1.0});
        if (j + 1 < m) t.push_back({r, id(i, j + 1, k), -1.0});
        if (k > 0) t.push_back({r, id(i, j, k - 1), -1.0});
        if (k + 1 < m) t.push_back({r, id(i, j, k + 1), -1.0});
      }
  return assemble_from_triplets(n, t);
}

double relative_residual(const SparseMatrix& a, std::span<const double> x, std::span<const double> b) {
  std::vector<double> r = a.multiply(x);
  axpy(-1.0, b, r);
  return norm2(r) / norm2(b);
}

DenseMatrix random_symmetric(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  DenseMatrix a(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j <= i; ++j) a(i, j) = a(j, i) = u(rng);
  return a;
}

const Backend kBackends[] = {Backend::kNative, Backend::kCholmod};

}  // namespace

TEST_CASE("triplets: duplicates are summed") {
  const std::vector<Triplet> t{{0, 0, 1.0}, {0, 0, 1.0}};
  const SparseMatrix a = assemble_from_triplets(2, t);
  CHECK(a.nnz() == 1);
  CHECK(a.value(0, 0) == 2.0);
  CHECK(is_canonical(a));
}

TEST_CASE("triplets: symmetric input passes the symmetry audit") {
  const std::vector<Triplet> t{{0, 1, 3.0}, {1, 0, 3.0}};
  const SparseMatrix a = assemble_from_triplets(2, t);
  CHECK(audit_symmetry(a).symmetric);

  const std::vector<Triplet> skew{{0, 1, 3.0}, {1, 0, 2.0}};
  const SymmetryAudit bad = audit_symmetry(assemble_from_triplets(2, skew));
  CHECK_FALSE(bad.symmetric);
  CHECK(bad.max_asymmetry == doctest::Approx(1.0));

  const std::vector<Triplet> one_sided{{0, 1, 3.0}};
  CHECK_FALSE(audit_symmetry(assemble_from_triplets(2, one_sided)).symmetric);
}

TEST_CASE("triplets: empty list gives the zero matrix") {
  const SparseMatrix a = assemble_from_triplets(3, std::vector<Triplet>{});
  CHECK(a.nnz() == 0);
  const std::vector<double> y = a.multiply(std::vector<double>{1.0, 2.0, 3.0});
  CHECK(y == std::vector<double>{0.0, 0.0, 0.0});
}

TEST_CASE("triplets: out-of-range index is rejected") {
  const std::vector<Triplet> t{{0, 2, 1.0}};
  CHECK_THROWS_AS(assemble_from_triplets(2, t), Error);
  const std::vector<Triplet> neg{{-1, 0, 1.0}};
  CHECK_THROWS_AS(assemble_from_triplets(2, neg), Error);
}

TEST_CASE("sparse products agree with dense arithmetic") {
  const SparseMatrix a = random_spd(30, 0.2, 7);
  const SparseMatrix b = random_spd(30, 0.1, 8);
  const DenseMatrix da = DenseMatrix::from_sparse(a), db = DenseMatrix::from_sparse(b);
  const SparseMatrix c = multiply(a, b);
  const SparseMatrix s = add(a, b, 2.0, -1.0);
  CHECK(is_canonical(c));
  for (Index i = 0; i < 30; ++i)
    for (Index j = 0; j < 30; ++j) {
      double ref = 0.0;
      for (Index k = 0; k < 30; ++k) ref += da(i, k) * db(k, j);
      CHECK(c.value(i, j) == doctest::Approx(ref).epsilon(1e-12));
      CHECK(s.value(i, j) == doctest::Approx(2.0 * da(i, j) - db(i, j)).epsilon(1e-12));
    }
  const std::vector<Triplet> rect{{0, 2, 1.0}, {1, 0, -2.0}};
  const SparseMatrix r = assemble_from_triplets(2, 3, rect);
  const SparseMatrix rt = r.transpose();
  CHECK(rt.nrows() == 3);
  CHECK(rt.value(2, 0) == 1.0);
  CHECK(rt.value(0, 1) == -2.0);
  CHECK(r.multiply_transpose(std::vector<double>{1.0, 1.0}) == std::vector<double>{-2.0, 0.0, 1.0});
}

TEST_CASE("cholesky: identity solves to the right-hand side") {
  std::vector<Triplet> t;
  for (Index i = 0; i < 5; ++i) t.push_back({i, i, 1.0});
  const SparseMatrix id = assemble_from_triplets(5, t);
  const std::vector<double> b{1, -2, 3, -4, 5};
  for (Backend be : kBackends) CHECK(cholesky(id, Ordering::kApproximateMinimumDegree, be).solve(b) == b);
}

TEST_CASE("cholesky: 2x2 hand elimination") {
  // [[4,2],[2,3]] x = (2,3): x2 = (3 - 2*2/4) / (3 - 2*2/4) = 1, x1 = (2 - 2) / 4 = 0.
  const std::vector<Triplet> t{{0, 0, 4}, {0, 1, 2}, {1, 0, 2}, {1, 1, 3}};
  const SparseMatrix a = assemble_from_triplets(2, t);
  for (Backend be : kBackends)
    for (Ordering o : {Ordering::kNatural, Ordering::kApproximateMinimumDegree}) {
      const std::vector<double> x = cholesky(a, o, be).solve(std::vector<double>{2, 3});
      CHECK(x[0] == doctest::Approx(0.0).scale(1.0).epsilon(1e-14));
      CHECK(x[1] == doctest::Approx(1.0).epsilon(1e-14));
    }
}

TEST_CASE("cholesky: zero pivot raises the SPD error with its index") {
  const std::vector<Triplet> t{{0, 0, 1.0}, {2, 2, 1.0}};
  const SparseMatrix a = assemble_from_triplets(3, t);
  for (Backend be : kBackends) {
    try {
      cholesky(a, Ordering::kNatural, be);
      FAIL("expected NotSpdError");
    } catch (const NotSpdError& e) {
      CHECK(e.code() == ErrorCode::kNotSpd);
      CHECK(e.pivot() == 1);
    }
  }
  const std::vector<Triplet> indefinite{{0, 0, 1.0}, {0, 1, 2.0}, {1, 0, 2.0}, {1, 1, 1.0}};
  for (Backend be : kBackends)
    CHECK_THROWS_AS(cholesky(assemble_from_triplets(2, indefinite), Ordering::kNatural, be), NotSpdError);
}

TEST_CASE("cholesky: residual <= 1e-10 on 100 random right-hand sides") {
  const SparseMatrix a = random_spd(200, 0.03, 11);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  for (Backend be : kBackends) {
    const Factorization f = cholesky(a, Ordering::kApproximateMinimumDegree, be);
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<double> b(200);
      for (double& v : b) v = g(rng);
      CHECK(relative_residual(a, f.solve(b), b) <= 1e-10);
    }
  }
}

TEST_CASE("cholesky: both backends agree on a grid Laplacian") {
  const SparseMatrix a = grid_laplacian(12);
  std::vector<double> b(a.nrows());
  for (Index i = 0; i < a.nrows(); ++i) b[i] = std::sin(0.1 * i);
  const Factorization nat = cholesky(a, Ordering::kApproximateMinimumDegree, Backend::kNative);
  const Factorization chol = cholesky(a, Ordering::kApproximateMinimumDegree, Backend::kCholmod);
  CHECK(nat.backend() == Backend::kNative);
  CHECK(chol.backend() == (cholmod_available() ? Backend::kCholmod : Backend::kNative));
  const std::vector<double> x1 = nat.solve(b), x2 = chol.solve(b);
  CHECK(relative_residual(a, x1, b) <= 1e-10);
  CHECK(relative_residual(a, x2, b) <= 1e-10);
  std::vector<double> d = x1;
  axpy(-1.0, x2, d);
  CHECK(norm2(d) <= 1e-10 * norm2(x1));
  // AMD reduces fill compared with the natural ordering.
  CHECK(nat.factor_nnz() < cholesky(a, Ordering::kNatural, Backend::kNative).factor_nnz());
}

TEST_CASE("cholesky: native factor reproduces P A P^T = L D L^T") {
  const SparseMatrix a = random_spd(40, 0.1, 3);
  const Factorization f = cholesky(a, Ordering::kApproximateMinimumDegree, Backend::kNative);
  const Index n = a.nrows();
  DenseMatrix l = DenseMatrix::identity(n);
  const SparseMatrix& u = f.lower_by_columns();
  for (Index j = 0; j < n; ++j) {
    auto cols = u.row_cols(j);
    auto vals = u.row_values(j);
    for (std::size_t k = 0; k < cols.size(); ++k) l(cols[k], j) = vals[k];
  }
  const auto perm = f.permutation();
  std::vector<Index> sorted(perm.begin(), perm.end());
  std::sort(sorted.begin(), sorted.end());
  for (Index i = 0; i < n; ++i) CHECK(sorted[i] == i);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      double s = 0.0;
      for (Index k = 0; k < n; ++k) s += l(i, k) * f.diagonal()[k] * l(j, k);
      CHECK(s == doctest::Approx(a.value(perm[i], perm[j])).scale(1.0).epsilon(1e-12));
    }
}

TEST_CASE("amd permutation is a permutation") {
  const std::vector<Index> p = amd_permutation(grid_laplacian(6));
  std::vector<Index> s = p;
  std::sort(s.begin(), s.end());
  for (Index i = 0; i < static_cast<Index>(s.size()); ++i) CHECK(s[i] == i);
}

TEST_CASE("dense generalized eig: hand cases") {
  DenseMatrix a(2, 2), m(2, 2);
  a(0, 0) = 2;
  a(1, 1) = 8;
  m(0, 0) = 1;
  m(1, 1) = 2;
  const EigenDecomposition e = dense_generalized_eig(a, m);
  CHECK(e.values[0] == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(e.values[1] == doctest::Approx(4.0).epsilon(1e-14));

  const DenseMatrix s = random_symmetric(6, 9);
  DenseMatrix spd(6, 6);
  for (Index i = 0; i < 6; ++i)
    for (Index j = 0; j < 6; ++j) {
      for (Index k = 0; k < 6; ++k) spd(i, j) += s(i, k) * s(j, k);
      if (i == j) spd(i, j) += 1.0;
    }
  for (double v : dense_generalized_eig(spd, spd).values) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
  for (double v : dense_generalized_eig(DenseMatrix(6, 6), spd).values) CHECK(v == doctest::Approx(0.0).scale(1.0).epsilon(1e-13));

  DenseMatrix not_spd = DenseMatrix::identity(2);
  not_spd(1, 1) = -1.0;
  CHECK_THROWS_AS(dense_generalized_eig(a, not_spd), NotSpdError);
}

TEST_CASE("dense generalized eig: eigenvectors satisfy A x = lambda M x with x^T M x = 1") {
  const DenseMatrix a = random_symmetric(30, 21);
  DenseMatrix m = DenseMatrix::identity(30);
  for (Index i = 0; i < 30; ++i) m(i, i) = 1.0 + 0.1 * i;
  for (Index i = 0; i + 1 < 30; ++i) m(i, i + 1) = m(i + 1, i) = 0.3;
  const EigenDecomposition e = dense_generalized_eig(a, m);
  for (Index j = 0; j < 30; ++j) {
    double xmx = 0.0, res = 0.0;
    for (Index i = 0; i < 30; ++i) {
      double ax = 0.0, mx = 0.0;
      for (Index k = 0; k < 30; ++k) {
        ax += a(i, k) * e.vectors(k, j);
        mx += m(i, k) * e.vectors(k, j);
      }
      xmx += e.vectors(i, j) * mx;
      res = std::max(res, std::abs(ax - e.values[j] * mx));
    }
    CHECK(xmx == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(res <= 1e-11);
  }
  CHECK(std::is_sorted(e.values.begin(), e.values.end()));
}

TEST_CASE("tridiagonal QL and Jacobi agree") {
  const DenseMatrix a = random_symmetric(25, 4);
  const EigenDecomposition ql = symmetric_eig(a);
  const EigenDecomposition jac = jacobi_eig(a);
  for (Index i = 0; i < 25; ++i) CHECK(ql.values[i] == doctest::Approx(jac.values[i]).scale(1.0).epsilon(1e-12));
}

TEST_CASE("lanczos: diag(1,2,3)") {
  const std::vector<double> d{1.0, 2.0, 3.0};
  auto op = [&](std::span<const double> x, std::span<double> y) {
    for (int i = 0; i < 3; ++i) y[i] = d[i] * x[i];
  };
  auto id = [](std::span<const double> x, std::span<double> y) { std::copy(x.begin(), x.end(), y.begin()); };
  auto drop_third = [](std::span<const double> x, std::span<double> y) {
    y[0] = x[0];
    y[1] = x[1];
    y[2] = 0.0;
  };
  LanczosOptions o;
  o.nev = 1;
  const LanczosResult r = lanczos_largest(op, id, id, 3, o);
  CHECK(r.pairs[0].value == doctest::Approx(3.0).epsilon(1e-10));
  const LanczosResult p = lanczos_largest(op, id, drop_third, 3, o);
  CHECK(p.pairs[0].value == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(std::abs(p.pairs[0].vector[2]) <= 1e-14);
}

TEST_CASE("lanczos: random SPD 50x50 matches the dense oracle") {
  const SparseMatrix a = random_spd(50, 0.3, 42);
  auto op = [&](std::span<const double> x, std::span<double> y) { a.multiply(x, y); };
  auto id = [](std::span<const double> x, std::span<double> y) { std::copy(x.begin(), x.end(), y.begin()); };
  LanczosOptions o;
  o.nev = 5;
  o.tol = 1e-12;
  o.diagnostics = true;
  const LanczosResult r = lanczos_largest(op, id, id, 50, o);
  const EigenDecomposition e = symmetric_eig(DenseMatrix::from_sparse(a));
  REQUIRE(r.pairs.size() == 5);
  for (int i = 0; i < 5; ++i) CHECK(std::abs(r.pairs[i].value - e.values[49 - i]) <= 1e-8 * e.values[49 - i]);
  CHECK(r.orthonormality_drift <= 1e-8);
  CHECK(r.symmetry_defect <= 1e-10);
}

TEST_CASE("lanczos: B-inner-product operators of dim <= 200 match the generalized oracle") {
  for (Index n : {20, 80, 200}) {
    const SparseMatrix a = random_spd(n, 0.05, 100 + n);
    std::vector<double> mdiag(n);
    for (Index i = 0; i < n; ++i) mdiag[i] = 1.0 + 0.5 * std::sin(double(i));
    // Op = M^{-1} A is self-adjoint in the M inner product.
    auto op = [&](std::span<const double> x, std::span<double> y) {
      a.multiply(x, y);
      for (Index i = 0; i < n; ++i) y[i] /= mdiag[i];
    };
    auto inner = [&](std::span<const double> x, std::span<double> y) {
      for (Index i = 0; i < n; ++i) y[i] = mdiag[i] * x[i];
    };
    auto id = [](std::span<const double> x, std::span<double> y) { std::copy(x.begin(), x.end(), y.begin()); };
    LanczosOptions o;
    o.nev = 4;
    o.tol = 1e-12;
    o.diagnostics = true;
    const LanczosResult r = lanczos_largest(op, inner, id, n, o);
    DenseMatrix dm(n, n);
    for (Index i = 0; i < n; ++i) dm(i, i) = mdiag[i];
    const EigenDecomposition e = dense_generalized_eig(DenseMatrix::from_sparse(a), dm);
    for (int i = 0; i < 4; ++i) CHECK(std::abs(r.pairs[i].value - e.values[n - 1 - i]) <= 1e-8 * e.values[n - 1 - i]);
    CHECK(r.orthonormality_drift <= 1e-8);
    CHECK(r.symmetry_defect <= 1e-10);
  }
}

TEST_CASE("lanczos: repeated eigenvalue is found with its multiplicity") {
  const std::vector<double> d{1.0, 5.0, 5.0, 5.0, 2.0, 3.0, 0.5, 4.0};
  auto op = [&](std::span<const double> x, std::span<double> y) {
    for (std::size_t i = 0; i < d.size(); ++i) y[i] = d[i] * x[i];
  };
  auto id = [](std::span<const double> x, std::span<double> y) { std::copy(x.begin(), x.end(), y.begin()); };
  LanczosOptions o;
  o.nev = 4;
  const LanczosResult r = lanczos_largest(op, id, id, 8, o);
  CHECK(r.pairs[0].value == doctest::Approx(5.0));
  CHECK(r.pairs[1].value == doctest::Approx(5.0));
  CHECK(r.pairs[2].value == doctest::Approx(5.0));
  CHECK(r.pairs[3].value == doctest::Approx(4.0));
}

TEST_CASE("lanczos: exhausted iteration budget reports no convergence") {
  const SparseMatrix a = random_spd(400, 0.02, 8);
  auto op = [&](std::span<const double> x, std::span<double> y) { a.multiply(x, y); };
  auto id = [](std::span<const double> x, std::span<double> y) { std::copy(x.begin(), x.end(), y.begin()); };
  LanczosOptions o;
  o.nev = 10;
  o.tol = 1e-14;
  o.max_iter = 12;
  try {
    lanczos_largest(op, id, id, 400, o);
    FAIL("expected kNoConvergence");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNoConvergence);
  }
}

TEST_CASE("lanczos: seeded runs are deterministic") {
  const SparseMatrix a = random_spd(60, 0.1, 12);
  auto op = [&](std::span<const double> x, std::span<double> y) { a.multiply(x, y); };
  auto id = [](std::span<const double> x, std::span<double> y) { std::copy(x.begin(), x.end(), y.begin()); };
  LanczosOptions o;
  o.nev = 3;
  const LanczosResult r1 = lanczos_largest(op, id, id, 60, o);
  const LanczosResult r2 = lanczos_largest(op, id, id, 60, o);
  for (int i = 0; i < 3; ++i) {
    CHECK(r1.pairs[i].value == r2.pairs[i].value);
    CHECK(r1.pairs[i].vector == r2.pairs[i].vector);
  }
}
