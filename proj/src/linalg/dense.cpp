#include "curlfem/linalg/dense.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace curlfem::linalg {

DenseMatrix DenseMatrix::identity(Index n) {
  DenseMatrix m(n, n);
  for (Index i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::from_sparse(const SparseMatrix& a) {
  DenseMatrix m(a.nrows(), a.ncols());
  for (Index r = 0; r < a.nrows(); ++r) {
    auto cols = a.row_cols(r);
    auto vals = a.row_values(r);
    for (std::size_t k = 0; k < cols.size(); ++k) m(r, cols[k]) = vals[k];
  }
  return m;
}

namespace {

// Householder reduction to tridiagonal form (EISPACK tred2). On exit v holds
// the accumulated orthogonal transform, d the diagonal, e the subdiagonal in e[1..n-1].
void tridiagonalize(DenseMatrix& v, std::vector<double>& d, std::vector<double>& e) {
  const Index n = v.rows();
  for (Index j = 0; j < n; ++j) d[j] = v(n - 1, j);
  for (Index i = n - 1; i > 0; --i) {
    double scale = 0.0, h = 0.0;
    for (Index k = 0; k < i; ++k) scale += std::abs(d[k]);
    if (scale == 0.0) {
      e[i] = d[i - 1];
      for (Index j = 0; j < i; ++j) {
        d[j] = v(i - 1, j);
        v(i, j) = 0.0;
        v(j, i) = 0.0;
      }
    } else {
      for (Index k = 0; k < i; ++k) {
        d[k] /= scale;
        h += d[k] * d[k];
      }
      double f = d[i - 1];
      double g = std::sqrt(h);
      if (f > 0) g = -g;
      e[i] = scale * g;
      h -= f * g;
      d[i - 1] = f - g;
      for (Index j = 0; j < i; ++j) e[j] = 0.0;
      for (Index j = 0; j < i; ++j) {
        f = d[j];
        v(j, i) = f;
        g = e[j] + v(j, j) * f;
        for (Index k = j + 1; k <= i - 1; ++k) {
          g += v(k, j) * d[k];
          e[k] += v(k, j) * f;
        }
        e[j] = g;
      }
      f = 0.0;
      for (Index j = 0; j < i; ++j) {
        e[j] /= h;
        f += e[j] * d[j];
      }
      const double hh = f / (h + h);
      for (Index j = 0; j < i; ++j) e[j] -= hh * d[j];
      for (Index j = 0; j < i; ++j) {
        f = d[j];
        g = e[j];
        for (Index k = j; k <= i - 1; ++k) v(k, j) -= (f * e[k] + g * d[k]);
        d[j] = v(i - 1, j);
        v(i, j) = 0.0;
      }
    }
    d[i] = h;
  }
  for (Index i = 0; i < n - 1; ++i) {
    v(n - 1, i) = v(i, i);
    v(i, i) = 1.0;
    const double h = d[i + 1];
    if (h != 0.0) {
      for (Index k = 0; k <= i; ++k) d[k] = v(k, i + 1) / h;
      for (Index j = 0; j <= i; ++j) {
        double g = 0.0;
        for (Index k = 0; k <= i; ++k) g += v(k, i + 1) * v(k, j);
        for (Index k = 0; k <= i; ++k) v(k, j) -= g * d[k];
      }
    }
    for (Index k = 0; k <= i; ++k) v(k, i + 1) = 0.0;
  }
  for (Index j = 0; j < n; ++j) {
    d[j] = v(n - 1, j);
    v(n - 1, j) = 0.0;
  }
  v(n - 1, n - 1) = 1.0;
  e[0] = 0.0;
}

// Implicit QL on the tridiagonal (EISPACK tql2). `vt` is the transposed
// transform so that rotations touch contiguous rows.
void tridiagonal_ql(DenseMatrix& vt, std::vector<double>& d, std::vector<double>& e) {
  const Index n = vt.rows();
  for (Index i = 1; i < n; ++i) e[i - 1] = e[i];
  e[n - 1] = 0.0;
  double f = 0.0, tst1 = 0.0;
  const double eps = std::ldexp(1.0, -52);
  for (Index l = 0; l < n; ++l) {
    tst1 = std::max(tst1, std::abs(d[l]) + std::abs(e[l]));
    Index m = l;
    while (m < n) {
      if (std::abs(e[m]) <= eps * tst1) break;
      ++m;
    }
    if (m > l) {
      int iter = 0;
      do {
        if (++iter > 60) throw Error(ErrorCode::kNoConvergence, "tridiagonal QL did not converge");
        double g = d[l];
        double p = (d[l + 1] - g) / (2.0 * e[l]);
        double r = std::hypot(p, 1.0);
        if (p < 0) r = -r;
        d[l] = e[l] / (p + r);
        d[l + 1] = e[l] * (p + r);
        const double dl1 = d[l + 1];
        double h = g - d[l];
        for (Index i = l + 2; i < n; ++i) d[i] -= h;
        f += h;
        p = d[m];
        double c = 1.0, c2 = c, c3 = c;
        const double el1 = e[l + 1];
        double s = 0.0, s2 = 0.0;
        for (Index i = m - 1; i >= l; --i) {
          c3 = c2;
          c2 = c;
          s2 = s;
          g = c * e[i];
          h = c * p;
          r = std::hypot(p, e[i]);
          e[i + 1] = s * r;
          s = e[i] / r;
          c = p / r;
          p = c * d[i] - s * g;
          d[i + 1] = h + s * (c * g + s * d[i]);
          auto ri = vt.row(i);
          auto rn = vt.row(i + 1);
          for (Index k = 0; k < n; ++k) {
            h = rn[k];
            rn[k] = s * ri[k] + c * h;
            ri[k] = c * ri[k] - s * h;
          }
        }
        p = -s * s2 * c3 * el1 * e[l] / dl1;
        e[l] = s * p;
        d[l] = c * p;
      } while (std::abs(e[l]) > eps * tst1);
    }
    d[l] += f;
    e[l] = 0.0;
  }
}

EigenDecomposition sorted(std::vector<double> values, const DenseMatrix& vt) {
  const Index n = static_cast<Index>(values.size());
  std::vector<Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return values[a] < values[b]; });
  EigenDecomposition out;
  out.values.resize(n);
  out.vectors = DenseMatrix(n, n);
  for (Index j = 0; j < n; ++j) {
    out.values[j] = values[order[j]];
    auto src = vt.row(order[j]);
    for (Index i = 0; i < n; ++i) out.vectors(i, j) = src[i];
  }
  return out;
}

}  // namespace

EigenDecomposition symmetric_eig(const DenseMatrix& a) {
  const Index n = a.rows();
  if (a.cols() != n) throw Error(ErrorCode::kInvalidArgument, "symmetric_eig needs a square matrix");
  if (n == 0) return {};
  DenseMatrix v = a;
  std::vector<double> d(n), e(n);
  tridiagonalize(v, d, e);
  DenseMatrix vt(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) vt(j, i) = v(i, j);
  tridiagonal_ql(vt, d, e);
  return sorted(std::move(d), vt);
}

EigenDecomposition jacobi_eig(const DenseMatrix& a, double tolerance, int max_sweeps) {
  const Index n = a.rows();
  if (a.cols() != n) throw Error(ErrorCode::kInvalidArgument, "jacobi_eig needs a square matrix");
  DenseMatrix w = a;
  DenseMatrix vt = DenseMatrix::identity(n);
  double total = 0.0;
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) total += w(i, j) * w(i, j);
  const double threshold = tolerance * tolerance * std::max(total, 1e-300);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (Index i = 0; i < n; ++i)
      for (Index j = i + 1; j < n; ++j) off += 2.0 * w(i, j) * w(i, j);
    if (off <= threshold) break;
    for (Index p = 0; p < n; ++p) {
      for (Index q = p + 1; q < n; ++q) {
        const double apq = w(p, q);
        if (apq == 0.0) continue;
        const double theta = (w(q, q) - w(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Index k = 0; k < n; ++k) {
          const double wkp = w(k, p), wkq = w(k, q);
          w(k, p) = c * wkp - s * wkq;
          w(k, q) = s * wkp + c * wkq;
        }
        for (Index k = 0; k < n; ++k) {
          const double wpk = w(p, k), wqk = w(q, k);
          w(p, k) = c * wpk - s * wqk;
          w(q, k) = s * wpk + c * wqk;
        }
        auto vp = vt.row(p), vq = vt.row(q);
        for (Index k = 0; k < n; ++k) {
          const double a1 = vp[k], a2 = vq[k];
          vp[k] = c * a1 - s * a2;
          vq[k] = s * a1 + c * a2;
        }
      }
    }
  }
  std::vector<double> d(n);
  for (Index i = 0; i < n; ++i) d[i] = w(i, i);
  return sorted(std::move(d), vt);
}

void dense_cholesky(DenseMatrix& a) {
  const Index n = a.rows();
  for (Index j = 0; j < n; ++j) {
    double d = a(j, j);
    for (Index k = 0; k < j; ++k) d -= a(j, k) * a(j, k);
    if (!(d > 0.0)) throw NotSpdError(j, d);
    const double ljj = std::sqrt(d);
    a(j, j) = ljj;
    for (Index i = j + 1; i < n; ++i) {
      double s = a(i, j);
      auto ri = a.row(i);
      auto rj = a.row(j);
      for (Index k = 0; k < j; ++k) s -= ri[k] * rj[k];
      a(i, j) = s / ljj;
    }
  }
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) a(i, j) = 0.0;
}

EigenDecomposition dense_generalized_eig(const DenseMatrix& a, const DenseMatrix& m) {
  const Index n = a.rows();
  if (a.cols() != n || m.rows() != n || m.cols() != n) {
    throw Error(ErrorCode::kInvalidArgument, "dense_generalized_eig: shape mismatch");
  }
  DenseMatrix l = m;
  dense_cholesky(l);
  // C = L^{-1} A L^{-T}, computed as L^{-1} (L^{-1} A)^T with row-wise substitutions.
  auto forward_rows = [&](DenseMatrix& x) {
    for (Index i = 0; i < n; ++i) {
      auto xi = x.row(i);
      for (Index k = 0; k < i; ++k) {
        const double lik = l(i, k);
        if (lik == 0.0) continue;
        auto xk = x.row(k);
        for (Index j = 0; j < n; ++j) xi[j] -= lik * xk[j];
      }
      const double inv = 1.0 / l(i, i);
      for (Index j = 0; j < n; ++j) xi[j] *= inv;
    }
  };
  DenseMatrix x = a;
  forward_rows(x);
  DenseMatrix c(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) c(i, j) = x(j, i);
  forward_rows(c);
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) {
      const double avg = 0.5 * (c(i, j) + c(j, i));
      c(i, j) = avg;
      c(j, i) = avg;
    }
  EigenDecomposition eig = symmetric_eig(c);
  // x = L^{-T} y
  DenseMatrix& z = eig.vectors;
  for (Index i = n - 1; i >= 0; --i) {
    auto zi = z.row(i);
    for (Index k = i + 1; k < n; ++k) {
      const double lki = l(k, i);
      if (lki == 0.0) continue;
      auto zk = z.row(k);
      for (Index j = 0; j < n; ++j) zi[j] -= lki * zk[j];
    }
    const double inv = 1.0 / l(i, i);
    for (Index j = 0; j < n; ++j) zi[j] *= inv;
  }
  return eig;
}

}  // namespace curlfem::linalg
