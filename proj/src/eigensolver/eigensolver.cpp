#include "curlfem/eigensolver/eigensolver.hpp"

#include <algorithm>
#include <cmath>

#include "curlfem/linalg/dense.hpp"
#include "curlfem/linalg/lanczos.hpp"

namespace curlfem::eigensolver {

using linalg::dot;
using linalg::SparseMatrix;

MaxwellSolver::MaxwellSolver(const fem::AssembledSystem& system, linalg::Backend backend) : system_(&system) {
  if (system.A.nrows() == 0) throw Error(ErrorCode::kInvalidArgument, "system has no degrees of freedom");
  shifted_ = linalg::cholesky(linalg::add(system.A, system.M), linalg::Ordering::kApproximateMinimumDegree, backend);
  if (system.G.ncols() > 0) {
    const SparseMatrix mg = linalg::multiply(system.M, system.G);
    gradient_gram_ = linalg::cholesky(linalg::multiply(system.G.transpose(), mg),
                                     linalg::Ordering::kApproximateMinimumDegree, backend);
  }
}

void MaxwellSolver::project(std::span<const double> x, std::span<double> y) const {
  std::copy(x.begin(), x.end(), y.begin());
  const SparseMatrix& g = system_->G;
  if (g.ncols() == 0) return;
  const std::vector<double> mx = system_->M.multiply(x);
  std::vector<double> p = g.multiply_transpose(mx);
  gradient_gram_.solve_in_place(p);
  const std::vector<double> gp = g.multiply(p);
  linalg::axpy(-1.0, gp, y);
}

void MaxwellSolver::apply_transform(std::span<const double> x, std::span<double> y) const {
  system_->M.multiply(x, y);
  shifted_.solve_in_place(y);
}

std::vector<double> MaxwellSolver::solve_curl_curl(std::span<const double> b, double tol) const {
  // A c = b  <=>  c = (A + M)^{-1} (b + M c); the iteration contracts by
  // 1 / (1 + lambda_1) on the complement of the gradients.
  const Index n = n_dofs();
  std::vector<double> rhs(b.begin(), b.end());
  std::vector<double> c(n, 0.0), next(n), mc(n), ac(n);
  const double b_norm = linalg::norm2(b);
  if (b_norm == 0.0) return c;
  double rel = 0.0;
  for (int it = 0; it < 500; ++it) {
    system_->M.multiply(c, mc);
    for (Index i = 0; i < n; ++i) next[i] = rhs[i] + mc[i];
    shifted_.solve_in_place(next);
    project(next, c);
    system_->A.multiply(c, ac);
    double r2 = 0.0;
    for (Index i = 0; i < n; ++i) r2 += (ac[i] - b[i]) * (ac[i] - b[i]);
    rel = std::sqrt(r2) / b_norm;
    if (rel <= tol) return c;
  }
  throw Error(ErrorCode::kNoConvergence, "curl-curl solve stalled at relative residual " + std::to_string(rel));
}

EigenPair make_pair(const fem::AssembledSystem& system, double lambda, std::vector<double> u) {
  EigenPair p;
  p.lambda_h = lambda;
  const std::vector<double> au = system.A.multiply(u);
  const std::vector<double> mu = system.M.multiply(u);
  double r2 = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) r2 += (au[i] - lambda * mu[i]) * (au[i] - lambda * mu[i]);
  p.residual = std::sqrt(r2) / linalg::norm2(mu);
  const double energy = dot(au, u);
  if (!(energy > 0.0) || !(lambda > 0.0)) throw Error(ErrorCode::kInvalidArgument, "eigenvector has no curl energy");
  double scale = lambda / std::sqrt(energy);
  std::size_t big = 0;
  for (std::size_t i = 1; i < u.size(); ++i)
    if (std::abs(u[i]) > std::abs(u[big])) big = i;
  if (u[big] < 0.0) scale = -scale;
  for (auto& x : u) x *= scale;
  p.u_coeffs = std::move(u);
  p.sigma_scale = 1.0 / lambda;
  return p;
}

std::vector<EigenPair> MaxwellSolver::solve_smallest(const SolveOptions& options) const {
  const Index n = n_dofs();
  if (options.nev < 1) throw Error(ErrorCode::kInvalidArgument, "nev must be >= 1");
  if (options.nev > n - system_->G.ncols()) {
    throw Error(ErrorCode::kInvalidArgument, "nev exceeds the number of positive discrete eigenvalues (" +
                                                 std::to_string(n - system_->G.ncols()) + ")");
  }
  double lanczos_tol = options.lanczos_tol;
  for (int attempt = 0;; ++attempt) {
    std::vector<EigenPair> pairs = lanczos_pairs(options, lanczos_tol);
    double worst = 0.0;
    for (const auto& p : pairs) worst = std::max(worst, p.residual);
    if (worst <= options.tol) return pairs;
    if (attempt == 2) {
      throw Error(ErrorCode::kNoConvergence, "eigenpair residual " + std::to_string(worst) + " above tolerance " +
                                                 std::to_string(options.tol));
    }
    lanczos_tol *= 1e-2;
  }
}

std::vector<EigenPair> MaxwellSolver::lanczos_pairs(const SolveOptions& options, double lanczos_tol) const {
  const Index n = n_dofs();
  linalg::LanczosOptions lo;
  lo.nev = options.nev;
  lo.tol = lanczos_tol;
  lo.max_iter = options.max_iter;
  lo.seed = options.seed;
  const SparseMatrix& m = system_->M;
  const auto result = linalg::lanczos_largest(
      [this](std::span<const double> x, std::span<double> y) { apply_transform(x, y); },
      [&m](std::span<const double> x, std::span<double> y) { m.multiply(x, y); },
      [this](std::span<const double> x, std::span<double> y) { project(x, y); }, n, lo);

  // One more transform step followed by Rayleigh-Ritz on the block damps the
  // high-frequency content left in the Ritz vectors by 1 / (1 + lambda_j).
  const std::size_t k = result.pairs.size();
  std::vector<std::vector<double>> z(k, std::vector<double>(n));
  std::vector<double> tmp(n);
  for (std::size_t i = 0; i < k; ++i) {
    apply_transform(result.pairs[i].vector, tmp);
    project(tmp, z[i]);
  }
  linalg::DenseMatrix a_small(k, k), m_small(k, k);
  std::vector<std::vector<double>> az(k), mz(k);
  for (std::size_t i = 0; i < k; ++i) {
    az[i] = system_->A.multiply(z[i]);
    mz[i] = m.multiply(z[i]);
  }
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      a_small(i, j) = 0.5 * (dot(z[i], az[j]) + dot(z[j], az[i]));
      m_small(i, j) = 0.5 * (dot(z[i], mz[j]) + dot(z[j], mz[i]));
    }
  const auto eig = linalg::dense_generalized_eig(a_small, m_small);

  std::vector<EigenPair> pairs;
  for (std::size_t c = 0; c < k; ++c) {
    std::vector<double> u(n, 0.0);
    for (std::size_t i = 0; i < k; ++i) linalg::axpy(eig.vectors(i, c), z[i], u);
    pairs.push_back(make_pair(*system_, eig.values[c], std::move(u)));
  }
  return pairs;
}

std::vector<EigenPair> solve_smallest(const fem::AssembledSystem& system, const SolveOptions& options) {
  return MaxwellSolver(system).solve_smallest(options);
}

std::vector<Vec3> sigma_of(const EigenPair& pair, const mesh::Mesh& mesh, const fem::DofMap& dofmap) {
  if (!(pair.lambda_h > 0.0)) throw Error(ErrorCode::kInvalidArgument, "sigma requires lambda_h > 0");
  std::vector<Vec3> sigma(mesh.num_tets());
  for (Index t = 0; t < mesh.num_tets(); ++t) sigma[t] = fem::evaluate_curl(mesh, dofmap, pair.u_coeffs, t);
  const double scale = l2_norm(mesh, sigma);
  if (!(scale > 0.0)) throw Error(ErrorCode::kInvalidArgument, "eigenvector has no curl");
  for (auto& s : sigma) s = s / scale;
  return sigma;
}

double l2_norm(const mesh::Mesh& mesh, std::span<const Vec3> field) {
  double sum = 0.0;
  for (Index t = 0; t < mesh.num_tets(); ++t) sum += mesh::tet_volume(mesh, t) * dot(field[t], field[t]);
  return std::sqrt(sum);
}

}  // namespace curlfem::eigensolver
