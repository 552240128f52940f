#include "curlfem/linalg/lanczos.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "curlfem/linalg/dense.hpp"
#include "curlfem/linalg/sparse.hpp"

namespace curlfem::linalg {

namespace {

using Basis = std::vector<std::vector<double>>;

constexpr double kBreakdownRatio = 1e-10;
constexpr double kExhaustedRatio = 1e-8;
constexpr int kMaxBreakdowns = 3;

class LanczosDriver {
 public:
  LanczosDriver(const LinearOperator& op, const LinearOperator& inner, const LinearOperator& project,
                Index dim, const LanczosOptions& options)
      : op_(op), inner_(inner), project_(project), dim_(dim), options_(options), rng_(options.seed),
        scratch_(dim), bw_(dim) {}

  LanczosResult run(Index nev, const Basis& locked);

 private:
  // Two-pass classical Gram-Schmidt against `locked` and the first `count`
  // basis vectors; coefficients against the basis are accumulated into
  // `coeffs`. Returns the B-norm of what remains.
  double orthogonalize(std::vector<double>& w, const Basis& basis, std::size_t count, const Basis& locked,
                       std::vector<double>* coeffs) {
    if (coeffs) coeffs->assign(count, 0.0);
    for (int pass = 0; pass < 2; ++pass) {
      inner_(w, bw_);
      for (const auto& q : locked) axpy(-dot(q, bw_), q, w);
      for (std::size_t i = 0; i < count; ++i) {
        const double c = dot(basis[i], bw_);
        axpy(-c, basis[i], w);
        if (coeffs) (*coeffs)[i] += c;
      }
    }
    inner_(w, bw_);
    return std::sqrt(std::max(dot(w, bw_), 0.0));
  }

  double b_norm(std::span<const double> w) {
    inner_(w, bw_);
    return std::sqrt(std::max(dot(w, bw_), 0.0));
  }

  // Random start vector, deflated and orthogonalized. False when nothing is left.
  bool fresh_vector(std::vector<double>& out, const Basis& basis, std::size_t count, const Basis& locked) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (auto& x : scratch_) x = dist(rng_);
    out.assign(dim_, 0.0);
    project_(scratch_, out);
    const double before = b_norm(out);
    if (!(before > 0.0)) return false;
    const double after = orthogonalize(out, basis, count, locked, nullptr);
    if (after <= kExhaustedRatio * before) return false;
    for (auto& x : out) x /= after;
    return true;
  }

  void apply(std::span<const double> v, std::vector<double>& w) {
    op_(v, scratch_);
    w.assign(dim_, 0.0);
    project_(scratch_, w);
  }

  const LinearOperator& op_;
  const LinearOperator& inner_;
  const LinearOperator& project_;
  Index dim_;
  LanczosOptions options_;
  std::mt19937_64 rng_;
  std::vector<double> scratch_;
  std::vector<double> bw_;
  Index iterations_ = 0;

  friend LanczosResult curlfem::linalg::lanczos_largest(const LinearOperator&, const LinearOperator&,
                                                         const LinearOperator&, Index,
                                                         const LanczosOptions&);
};

LanczosResult LanczosDriver::run(Index nev, const Basis& locked) {
  const Index max_basis = std::max<Index>(
      nev + 2, options_.max_basis > 0 ? options_.max_basis : std::max<Index>(2 * nev + 20, 40));

  LanczosResult result;
  Basis basis;
  basis.reserve(max_basis + 1);
  DenseMatrix h(max_basis + 1, max_basis + 1);
  std::vector<double> w, coeffs;

  basis.emplace_back();
  if (!fresh_vector(basis.back(), basis, 0, locked)) {
    throw Error(ErrorCode::kInvalidArgument, "lanczos: deflated space is empty");
  }

  int consecutive_breakdowns = 0;
  bool exhausted = false;
  EigenDecomposition ritz;
  double last_beta = 0.0;
  std::size_t computed = 0;  // columns of h that are filled

  auto converged_count = [&](std::size_t m) {
    Index ok = 0;
    for (Index i = 0; i < nev && i < static_cast<Index>(m); ++i) {
      const std::size_t col = m - 1 - i;
      const double theta = ritz.values[col];
      const double res = std::abs(last_beta * ritz.vectors(m - 1, col));
      if (res <= options_.tol * std::abs(theta) || exhausted) ++ok;
    }
    return ok;
  };

  auto projected = [&](std::size_t m) {
    DenseMatrix t(m, m);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) t(i, j) = h(i, j);
    return jacobi_eig(t);
  };

  for (;;) {
    // Expand the basis one vector at a time.
    bool done = false;
    while (basis.size() <= static_cast<std::size_t>(max_basis)) {
      const std::size_t j = basis.size() - 1;
      if (iterations_ >= options_.max_iter) {
        std::ostringstream msg;
        msg << "lanczos: max_iter " << options_.max_iter << " exceeded; residuals:";
        if (computed > 0) {
          ritz = projected(computed);
          for (Index i = 0; i < nev && i < static_cast<Index>(computed); ++i) {
            const std::size_t col = computed - 1 - i;
            msg << ' ' << std::abs(last_beta * ritz.vectors(computed - 1, col)) / std::abs(ritz.values[col]);
          }
        }
        throw Error(ErrorCode::kNoConvergence, msg.str());
      }
      apply(basis[j], w);
      ++iterations_;
      const double before = b_norm(w);
      const double beta = orthogonalize(w, basis, j + 1, locked, &coeffs);
      for (std::size_t i = 0; i <= j; ++i) {
        h(i, j) = coeffs[i];
        h(j, i) = coeffs[i];
      }
      computed = j + 1;

      bool restarted_direction = false;
      if (beta <= kBreakdownRatio * before || beta == 0.0) {
        ++result.breakdowns;
        restarted_direction = true;
        last_beta = 0.0;
        basis.emplace_back();
        if (!fresh_vector(basis.back(), basis, j + 1, locked)) {
          basis.pop_back();
          exhausted = true;
        } else if (++consecutive_breakdowns > kMaxBreakdowns) {
          throw Error(ErrorCode::kNoConvergence, "lanczos: repeated breakdown");
        } else {
          for (std::size_t i = 0; i <= j; ++i) h(i, j + 1) = h(j + 1, i) = 0.0;
        }
      } else {
        consecutive_breakdowns = 0;
        last_beta = beta;
        for (auto& x : w) x /= beta;
        basis.push_back(w);
      }

      // After a fresh restart direction the invariant subspace found so far
      // need not contain the wanted pairs, so keep expanding.
      if ((static_cast<Index>(computed) >= nev && !(restarted_direction && !exhausted)) || exhausted) {
        ritz = projected(computed);
        if (exhausted && static_cast<Index>(computed) < nev) {
          throw Error(ErrorCode::kInvalidArgument,
                      "lanczos: requested more eigenpairs than the deflated space holds");
        }
        if (converged_count(computed) == nev) {
          done = true;
          break;
        }
      }
      if (exhausted) break;
    }
    if (done) break;
    if (exhausted) {
      throw Error(ErrorCode::kNoConvergence, "lanczos: search space exhausted before convergence");
    }

    // Thick restart: keep the leading Ritz vectors plus the residual direction.
    const std::size_t m = computed;
    ritz = projected(m);
    const std::size_t keep = std::min<std::size_t>(m - 1, nev + (m - nev) / 2);
    Basis next;
    next.reserve(max_basis + 1);
    for (std::size_t k = 0; k < keep; ++k) {
      const std::size_t col = m - 1 - k;
      std::vector<double> y(dim_, 0.0);
      for (std::size_t i = 0; i < m; ++i) axpy(ritz.vectors(i, col), basis[i], y);
      next.push_back(std::move(y));
    }
    const std::vector<double> residual_dir = basis[m];
    h = DenseMatrix(max_basis + 1, max_basis + 1);
    for (std::size_t k = 0; k < keep; ++k) {
      const std::size_t col = m - 1 - k;
      h(k, k) = ritz.values[col];
      h(k, keep) = h(keep, k) = last_beta * ritz.vectors(m - 1, col);
    }
    next.push_back(residual_dir);
    basis = std::move(next);
    computed = keep;
    ++result.restarts;
  }

  const std::size_t m = computed;
  for (Index i = 0; i < nev; ++i) {
    const std::size_t col = m - 1 - i;
    RitzPair pair;
    pair.value = ritz.values[col];
    pair.residual = std::abs(last_beta * ritz.vectors(m - 1, col));
    pair.vector.assign(dim_, 0.0);
    for (std::size_t k = 0; k < m; ++k) axpy(ritz.vectors(k, col), basis[k], pair.vector);
    const double nrm = b_norm(pair.vector);
    for (auto& x : pair.vector) x /= nrm;
    result.pairs.push_back(std::move(pair));
  }

  if (options_.diagnostics) {
    Basis bq;
    for (std::size_t i = 0; i < m; ++i) {
      inner_(basis[i], bw_);
      bq.push_back(bw_);
    }
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) {
        const double g = dot(basis[i], bq[j]) - (i == j ? 1.0 : 0.0);
        result.orthonormality_drift = std::max(result.orthonormality_drift, std::abs(g));
      }
    for (std::size_t j = 0; j < m; ++j) {
      apply(basis[j], w);
      for (std::size_t i = 0; i < m; ++i) {
        result.symmetry_defect = std::max(result.symmetry_defect, std::abs(h(i, j) - dot(w, bq[i])));
      }
    }
  }
  result.iterations = iterations_;
  return result;
}

}  // namespace

LanczosResult lanczos_largest(const LinearOperator& apply_op, const LinearOperator& apply_inner,
                              const LinearOperator& project, Index dim, const LanczosOptions& options) {
  if (dim <= 0 || options.nev < 1) throw Error(ErrorCode::kInvalidArgument, "lanczos: empty problem");
  if (!(options.tol > 0.0)) throw Error(ErrorCode::kInvalidArgument, "lanczos: tol must be positive");
  LanczosDriver driver(apply_op, apply_inner, project, dim, options);
  LanczosResult result = driver.run(options.nev, {});
  if (!options.verify_multiplicity) return result;

  // Lock what was found and look for a larger value in the complement.
  for (Index round = 0; round < options.nev; ++round) {
    Basis locked;
    for (const auto& p : result.pairs) locked.push_back(p.vector);
    LanczosResult probe;
    try {
      probe = driver.run(1, locked);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kInvalidArgument) break;  // complement is empty
      throw;
    }
    const double smallest = result.pairs.back().value;
    const RitzPair& candidate = probe.pairs.front();
    if (candidate.value <= smallest + 10.0 * options.tol * std::abs(smallest)) break;
    result.pairs.back() = candidate;
    std::stable_sort(result.pairs.begin(), result.pairs.end(),
                     [](const RitzPair& a, const RitzPair& b) { return a.value > b.value; });
    result.restarts += probe.restarts;
    result.breakdowns += probe.breakdowns;
    if (options.diagnostics) {
      result.orthonormality_drift = std::max(result.orthonormality_drift, probe.orthonormality_drift);
      result.symmetry_defect = std::max(result.symmetry_defect, probe.symmetry_defect);
    }
  }
  result.iterations = driver.iterations_;
  return result;
}

}  // namespace curlfem::linalg
