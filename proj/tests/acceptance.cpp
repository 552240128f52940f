// Runs every acceptance criterion at its stated tolerance and prints one
// PASS/FAIL line per criterion. Exit status is nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "cube_oracle.hpp"
#include "curlfem/linalg/dense.hpp"
#include "curlfem/study/study.hpp"
#include "jump_oracle.hpp"

using namespace curlfem;
using mesh::DomainSpec;

namespace {

constexpr double kFicheraReference = 12.92;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += " [failed: " + what + "]";
    }
  }
  void note(const std::string& text) { detail += " " + text; }
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

int failures = 0;

void report(int id, const char* name, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string(" exception: ") + e.what();
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!o.pass) ++failures;
  std::printf("%s %d %s:%s (%.1fs)\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), secs);
  std::fflush(stdout);
}

// Fichera studies shared by criteria 2-4.
std::vector<study::RunRecord> g_uniform, g_adaptive;

std::vector<study::RunRecord> fichera_study(study::Mode mode) {
  study::StudyConfig c = study::StudyConfig::defaults_for(mesh::DomainKind::kFichera);
  c.mode = mode;
  if (mode == study::Mode::kUniform) {
    c.max_iters = 4;
    c.max_tets = 300000;
  } else {
    c.theta = 0.5;
    c.max_iters = 40;
    c.max_tets = 250000;
  }
  return study::run_study(c);
}

std::vector<double> errors(const std::vector<study::RunRecord>& r, double ref) {
  std::vector<double> out;
  for (const auto& x : r) out.push_back(std::abs(x.lambda_h - ref));
  return out;
}

std::vector<double> tets(const std::vector<study::RunRecord>& r) {
  std::vector<double> out;
  for (const auto& x : r) out.push_back(static_cast<double>(x.n_tets));
  return out;
}

Outcome cube_rate() {
  Outcome o;
  std::vector<double> h, smallest, tracked;
  double previous = 19.74;
  for (Index n : {4, 8, 16}) {
    const mesh::Mesh m = mesh::generate_structured(DomainSpec::unit_cube(), {n, n, n});
    const fem::DofMap d = fem::make_dofmap(m);
    const fem::AssembledSystem s = fem::assemble(m, d);
    eigensolver::SolveOptions so;
    so.nev = 3;
    const auto pairs = eigensolver::MaxwellSolver(s).solve_smallest(so);
    double best = pairs[0].lambda_h;
    for (const auto& p : pairs)
      if (std::abs(p.lambda_h - previous) < std::abs(best - previous)) best = p.lambda_h;
    previous = best;
    h.push_back(mesh::diameters(m).h);
    smallest.push_back(std::abs(pairs[0].lambda_h - cube_oracle::kLambda));
    tracked.push_back(std::abs(best - cube_oracle::kLambda));
    o.note("n=" + std::to_string(n) + " lambda_h=" + num(pairs[0].lambda_h));
  }
  const double rate = study::fit_loglog(h, smallest).slope;
  const double tracked_rate = study::fit_loglog(h, tracked).slope;
  o.note("rate=" + num(rate) + " tracked-branch rate=" + num(tracked_rate));
  o.require(std::abs(rate - 2.0) <= 0.3, "rate 2.0 +- 0.3");
  o.require(smallest.back() < smallest.front(), "converging");
  return o;
}

Outcome fichera_extrapolation() {
  Outcome o;
  g_uniform = fichera_study(study::Mode::kUniform);
  for (const auto& r : g_uniform) o.note(std::to_string(r.n_tets) + ":" + num(r.lambda_h));
  const study::Extrapolation e = study::extrapolate_lambda(g_uniform);
  o.note("lambda_ref=" + num(e.lambda_ref) + " rate=" + num(e.rate));
  o.require(g_uniform.size() >= 3 && g_uniform.size() <= 4, "3-4 levels");
  o.require(!e.fallback && !e.degenerate, "regular extrapolation");
  o.require(std::abs(e.lambda_ref - kFicheraReference) <= 0.01 * kFicheraReference, "within 1% of 12.92");
  return o;
}

Outcome uniform_slope() {
  Outcome o;
  if (g_uniform.empty()) g_uniform = fichera_study(study::Mode::kUniform);
  const double slope = study::fit_loglog(tets(g_uniform), errors(g_uniform, kFicheraReference)).slope;
  o.note("slope=" + num(slope) + " (reference 12.92)");
  const double extrap = study::extrapolate_lambda(g_uniform).lambda_ref;
  o.note("slope vs extrapolated reference=" + num(study::fit_loglog(tets(g_uniform), errors(g_uniform, extrap)).slope));
  o.require(std::abs(slope + 0.44) <= 0.08, "slope -0.44 +- 0.08");
  return o;
}

Outcome adaptive_slope() {
  Outcome o;
  if (g_uniform.empty()) g_uniform = fichera_study(study::Mode::kUniform);
  g_adaptive = fichera_study(study::Mode::kAdaptive);
  const double uniform = study::fit_loglog(tets(g_uniform), errors(g_uniform, kFicheraReference)).slope;
  const double adaptive = study::fit_loglog(tets(g_adaptive), errors(g_adaptive, kFicheraReference)).slope;
  o.note("levels=" + std::to_string(g_adaptive.size()) + " final N=" + std::to_string(g_adaptive.back().n_tets) +
         " lambda_h=" + num(g_adaptive.back().lambda_h) + " slope=" + num(adaptive) + " uniform=" + num(uniform));
  o.require(adaptive < uniform, "steeper than uniform");
  o.require(adaptive >= -0.9 && adaptive <= -0.6, "slope in [-0.9, -0.6]");
  // Comparable N: the largest adaptive mesh no bigger than each refined uniform mesh.
  for (std::size_t i = 1; i < g_uniform.size(); ++i) {
    const study::RunRecord* best = nullptr;
    for (const auto& a : g_adaptive)
      if (a.n_tets <= g_uniform[i].n_tets) best = &a;
    if (!best) continue;
    const double ea = std::abs(best->lambda_h - kFicheraReference);
    const double eu = std::abs(g_uniform[i].lambda_h - kFicheraReference);
    o.note("N~" + std::to_string(g_uniform[i].n_tets) + ": " + num(ea) + "<" + num(eu));
    o.require(ea < eu, "adaptive error below uniform at N=" + std::to_string(g_uniform[i].n_tets));
  }
  return o;
}

Outcome dense_oracle() {
  Outcome o;
  std::vector<mesh::Mesh> meshes;
  meshes.push_back(mesh::generate_structured(DomainSpec::unit_cube(), {2, 2, 2}));
  meshes.push_back(mesh::generate_structured(DomainSpec::unit_cube(), {3, 3, 3}));
  meshes.push_back(mesh::generate_structured(DomainSpec::fichera(), {2, 2, 2}));
  meshes.push_back(mesh::generate_structured(DomainSpec::fichera(), {4, 4, 4}));
  meshes.push_back(refine::uniform_refine(mesh::generate_structured(DomainSpec::unit_cube(), {1, 1, 1})));
  {
    const mesh::Mesh f = mesh::generate_structured(DomainSpec::fichera(), {2, 2, 2});
    meshes.push_back(refine::bisect_tracked(f, std::vector<Index>{0, 7, 20}).mesh);
  }
  int checked = 0;
  double worst = 0.0;
  for (const mesh::Mesh& m : meshes) {
    const fem::DofMap d = fem::make_dofmap(m);
    if (d.n_dofs > 2000) continue;
    const fem::AssembledSystem s = fem::assemble(m, d);
    const auto da = linalg::DenseMatrix::from_sparse(s.A);
    const auto pencil = linalg::dense_generalized_eig(da, linalg::DenseMatrix::from_sparse(s.M));
    std::vector<double> positive;
    for (double v : pencil.values)
      if (v >= 1e-8 * pencil.values.back()) positive.push_back(v);

    const auto spectrum = linalg::symmetric_eig(da);
    Index zero = 0;
    for (double v : spectrum.values) zero += std::abs(v) < 1e-8 * spectrum.values.back() ? 1 : 0;
    Index interior = 0;
    for (char b : m.boundary_vertex) interior += b ? 0 : 1;
    o.require(zero == interior, "dim ker A = interior vertices on a " + std::to_string(d.n_dofs) + "-dof mesh");

    eigensolver::SolveOptions so;
    so.nev = std::min<Index>(6, static_cast<Index>(positive.size()));
    const auto pairs = eigensolver::MaxwellSolver(s).solve_smallest(so);
    for (Index i = 0; i < so.nev; ++i) worst = std::max(worst, std::abs(pairs[i].lambda_h - positive[i]) / positive[i]);
    ++checked;
  }
  o.note("meshes=" + std::to_string(checked) + " worst relative difference=" + num(worst));
  o.require(worst <= 1e-8, "relative agreement 1e-8");
  return o;
}

Outcome estimator_exactness() {
  Outcome o;
  // Hand-built two-tet meshes: a generic pair and a symmetric one.
  const std::vector<std::vector<Vec3>> pairs{
      {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {0.9, 1.1, 0.8}},
      {{0, 0, 0}, {1, 0, 0}, {0.5, 0.9, 0}, {0.5, 0.3, 0.8}, {0.5, 0.3, -0.8}},
  };
  double worst_oracle = 0.0, worst_constant = 0.0;
  bool exact_scaling = true;
  for (const auto& verts : pairs) {
    std::vector<Vec3> v = verts;
    std::vector<mesh::Tet> t{{0, 1, 2, 3}, {1, 2, 3, 4}};
    if (verts[4].z < 0) t = {{0, 1, 2, 3}, {0, 1, 2, 4}};
    mesh::orient_positive(v, t);
    mesh::Mesh m = mesh::build_mesh(std::move(v), std::move(t));
    mesh::assign_initial_marks(m);
    const fem::DofMap d = fem::make_dofmap(m, fem::BoundaryCondition::kNatural);
    std::vector<double> c(d.n_dofs);
    for (Index k = 0; k < d.n_dofs; ++k) c[k] = std::sin(1.0 + k) + 0.1 * k;
    const auto ind = estimator::compute_indicators(m, d, c);
    const auto ref = jump_oracle::eta_squared(m, d, c);
    for (Index k = 0; k < m.num_tets(); ++k)
      worst_oracle = std::max(worst_oracle, std::abs(ind.eta_k[k] * ind.eta_k[k] - ref[k]) / ref[k]);

    const auto constant = fem::interpolate(m, d, [](Vec3) { return Vec3{1.0, -2.0, 0.5}; });
    worst_constant = std::max(worst_constant, estimator::compute_indicators(m, d, constant).eta);

    for (double s : {-2.0, 0.5, 4.0}) {
      std::vector<double> cs(c);
      for (double& x : cs) x *= s;
      const auto scaled = estimator::compute_indicators(m, d, cs);
      for (Index k = 0; k < m.num_tets(); ++k) exact_scaling = exact_scaling && scaled.eta_k[k] == std::abs(s) * ind.eta_k[k];
    }
  }
  o.note("oracle relative difference=" + num(worst_oracle) + " constant-field eta=" + num(worst_constant));
  o.require(worst_oracle <= 1e-12, "brute-force oracle 1e-12");
  o.require(worst_constant <= 1e-12, "constant interpolant eta = 0");
  o.require(exact_scaling, "exact scaling covariance");
  return o;
}

Outcome superconvergence() {
  Outcome o;
  std::vector<double> h, super, plain;
  for (Index n : {4, 8, 16}) {
    const cube_oracle::Level level = cube_oracle::measure(n);
    h.push_back(level.h);
    super.push_back(level.superconvergence);
    plain.push_back(level.sigma_error);
    o.note("n=" + std::to_string(n) + " effectivity=" + num(level.effectivity.effectivity));
  }
  const double rs = study::fit_loglog(h, super).slope;
  const double rp = study::fit_loglog(h, plain).slope;
  o.note("||P_h sigma - sigma_h|| rate=" + num(rs) + " ||sigma - sigma_h|| rate=" + num(rp));
  o.require(rs >= 1.5, "projection rate >= 1.5");
  o.require(std::abs(rp - 1.0) <= 0.3, "plain rate 1.0 +- 0.3");
  return o;
}

void audit_mesh(Outcome& o, const mesh::Mesh& m, double volume, double& min_angle) {
  const mesh::AuditReport a = mesh::topology_audit(m);
  o.require(a.ok, "conformity: " + a.message);
  const double v = mesh::total_volume(m);
  o.require(std::abs(v - volume) <= 1e-12 * volume, "volume conservation");
  min_angle = std::min(min_angle, mesh::min_dihedral_angle(m) * 180.0 / std::numbers::pi);
}

Outcome mesh_properties() {
  Outcome o;
  for (const DomainSpec& spec : {DomainSpec::fichera(), DomainSpec::unit_cube()}) {
    study::StudyConfig c = study::StudyConfig::defaults_for(spec.kind);
    c.mode = study::Mode::kAdaptive;
    c.max_iters = 13;  // 12 refinement rounds
    c.max_tets = 1000000;
    double min_angle = 180.0;
    Index rounds = -1;
    study::run_study(c, nullptr, [&](const study::LevelView& v) {
      audit_mesh(o, v.mesh, spec.volume(), min_angle);
      ++rounds;
    });
    mesh::Mesh u = mesh::generate_structured(spec, {2, 2, 2});
    for (int r = 0; r < 3; ++r) {
      u = refine::uniform_refine(u);
      audit_mesh(o, u, spec.volume(), min_angle);
    }
    o.note(mesh::to_string(spec.kind) + ": rounds=" + std::to_string(rounds) + " min dihedral=" + num(min_angle));
    o.require(rounds == 12, "12 adaptive rounds");
    o.require(min_angle > 5.0, "min dihedral > 5 deg");
  }
  study::StudyConfig c = study::StudyConfig::defaults_for(mesh::DomainKind::kFichera);
  c.max_iters = 8;
  std::ostringstream a, b;
  study::run_study(c, &a);
  study::run_study(c, &b);
  o.require(a.str() == b.str(), "byte-identical CSV");
  o.note("rerun CSV bytes=" + std::to_string(a.str().size()));
  return o;
}

}  // namespace

int main() {
  report(1, "cube eigenvalue rate", cube_rate);
  report(2, "fichera extrapolated eigenvalue", fichera_extrapolation);
  report(3, "uniform slope", uniform_slope);
  report(4, "adaptive slope", adaptive_slope);
  report(5, "dense-oracle equivalence", dense_oracle);
  report(6, "estimator exactness", estimator_exactness);
  report(7, "superconvergence", superconvergence);
  report(8, "mesh and refinement properties", mesh_properties);
  std::printf("%d of 8 criteria passed\n", 8 - failures);
  return failures == 0 ? 0 : 1;
}
