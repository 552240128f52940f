#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "curlfem/eigensolver/eigensolver.hpp"
#include "curlfem/estimator/estimator.hpp"
#include "curlfem/mesh/mesh.hpp"
#include "curlfem/refine/refine.hpp"

namespace curlfem::study {

enum class Mode { kUniform, kAdaptive };

Mode parse_mode(const std::string& name);
std::string to_string(Mode mode);

struct RunRecord {
  Index iteration = 0;
  Index n_tets = 0;
  Index n_dofs = 0;
  double lambda_h = 0.0;
  double eta = 0.0;
  double err_lambda = 0.0;  // |lambda_h - lambda_ref|
  double h = 0.0;
  double wall_time = 0.0;  // seconds; 0 unless timing is recorded
};

struct StudyConfig {
  mesh::DomainSpec domain = mesh::DomainSpec::fichera();
  std::array<Index, 3> divisions{4, 4, 4};
  Mode mode = Mode::kAdaptive;
  double theta = 0.5;
  /// Number of solved levels.
  Index max_iters = 10;
  /// A refined mesh above this size is not solved; 0 gives a single solve.
  Index max_tets = 400000;
  /// First-level selection: the discrete eigenvalue closest to this value.
  double target_lambda = 12.92;
  /// err_lambda reference.
  double lambda_ref = 12.92;
  Index nev = 1;
  double tol = 1e-8;
  std::uint64_t seed = 1;
  /// Write measured wall times into the CSV instead of 0 (breaks byte-identical reruns).
  bool record_timing = false;

  /// Defaults for a domain: fichera targets 12.92, the unit cube 2 pi^2
  /// with nev = 3 to hold the split triple eigenvalue.
  static StudyConfig defaults_for(mesh::DomainKind kind);
};

/// What each solved level exposes to an observer.
struct LevelView {
  const RunRecord& record;
  const mesh::Mesh& mesh;
  const fem::DofMap& dofmap;
  const eigensolver::EigenPair& pair;
  const estimator::IndicatorField& indicators;
  /// Adaptive mode only: the tets marked for the next refinement (empty otherwise).
  const refine::MarkSet& marks;
};

using LevelObserver = std::function<void(const LevelView&)>;

/// Runs the solve-estimate-mark-refine loop (adaptive) or repeated uniform
/// refinement. Each record is written to `csv` (header first) and flushed
/// as soon as its level finishes, so a failing level leaves the earlier rows.
std::vector<RunRecord> run_study(const StudyConfig& config, std::ostream* csv = nullptr,
                                 const LevelObserver& observer = {});

inline constexpr const char* kCsvHeader = "iter,n_tets,n_dofs,lambda_h,eta,err_lambda,h,wall_time";

std::string csv_row(const RunRecord& record);
std::vector<RunRecord> read_csv(const std::string& text);

/// Shortest round-trip decimal form.
std::string format_double(double value);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

/// Field names match the CSV header (iter, n_tets, n_dofs, lambda_h, eta, err_lambda, h, wall_time).
double record_field(const RunRecord& record, const std::string& name);

/// Least squares line through (log x, log y) over records[skip:].
SlopeFit fit_slope(const std::vector<RunRecord>& records, const std::string& x, const std::string& y,
                   std::size_t skip = 0);
SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

struct Extrapolation {
  double lambda_ref = 0.0;
  double rate = 0.0;  // r in lambda_h = lambda + C N^-r, N = n_tets
  double constant = 0.0;
  /// Constant input sequence: rate is meaningless.
  bool degenerate = false;
  /// Non-monotone sequence: lambda_ref is the last lambda_h.
  bool fallback = false;
  std::string warning;
};

/// Gauss-Newton (Levenberg-damped) fit of lambda_h = lambda + C N^-r,
/// started from the Aitken values of the last three records.
Extrapolation extrapolate_lambda(const std::vector<RunRecord>& records);

}  // namespace curlfem::study
