#pragma once

#include <memory>
#include <span>
#include <vector>

#include "curlfem/linalg/cholesky.hpp"

namespace curlfem::linalg {

/// Supernodal CHOLMOD factor. Solves are serialized on an internal mutex
/// because CHOLMOD keeps workspace in its common object.
std::shared_ptr<const CholmodFactor> cholmod_factorize(const SparseMatrix& a, Ordering ordering,
                                                       std::vector<Index>& permutation);
void cholmod_solve_in_place(const CholmodFactor& f, std::span<double> x);
std::size_t cholmod_factor_nnz(const CholmodFactor& f);

/// One-time self-check of the supernodal path against a known solution.
bool cholmod_usable();

}  // namespace curlfem::linalg
