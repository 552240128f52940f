#include "curlfem/estimator/estimator.hpp"

#include <algorithm>
#include <cmath>

namespace curlfem::estimator {

using fem::ElementBasis;
using mesh::Mesh;

namespace {

int local_index(const mesh::Tet& tet, Index v) {
  for (int i = 0; i < 4; ++i)
    if (tet[i] == v) return i;
  throw Error(ErrorCode::kTopology, "face vertex not in adjacent tet");
}

Vec3 field_at(const ElementBasis& b, const mesh::Mesh& mesh, const fem::DofMap& dofmap,
              std::span<const double> coeffs, Index t, const std::array<double, 4>& bary) {
  Vec3 u;
  for (int k = 0; k < 6; ++k) {
    const Index d = dofmap.dof(mesh, t, k);
    if (d != fem::kNoDof) u += (mesh.tet_edge_signs[t][k] * coeffs[d]) * b.value(k, bary);
  }
  return u;
}

std::array<double, 4> barycentric_of(const ElementBasis& b, Vec3 x) {
  const Vec3 d = x - b.corners[0];
  std::array<double, 4> l;
  for (int i = 1; i < 4; ++i) l[i] = dot(b.grad_lambda[i], d);
  l[0] = 1.0 - l[1] - l[2] - l[3];
  return l;
}

}  // namespace

IndicatorField compute_indicators(const Mesh& mesh, const fem::DofMap& dofmap, std::span<const double> coeffs,
                                  int face_degree) {
  if (mesh.overshared_faces != 0) throw Error(ErrorCode::kTopology, "non-conforming mesh");
  if (static_cast<Index>(coeffs.size()) != dofmap.n_dofs) throw Error(ErrorCode::kInvalidArgument, "coefficient size mismatch");
  const Index nt = mesh.num_tets();
  IndicatorField out;
  out.jump_part.assign(nt, 0.0);
  out.div_part.assign(nt, 0.0);
  out.eta_k.assign(nt, 0.0);
  const fem::QuadratureRule q = fem::quadrature(fem::Simplex::kTriangle, face_degree);

  for (Index f = 0; f < mesh.num_faces(); ++f) {
    const auto [t0, t1] = mesh.face_tets[f];
    if (t1 < 0) continue;
    const auto& fv = mesh.faces[f];
    const Vec3 a = mesh.vertices[fv[0]], b = mesh.vertices[fv[1]], c = mesh.vertices[fv[2]];
    const Vec3 nn = cross(b - a, c - a);
    const double area = 0.5 * norm(nn);
    const Vec3 n = nn / (2.0 * area);
    const double h_f = std::max({norm(b - a), norm(c - a), norm(c - b)});

    const ElementBasis b0 = fem::whitney_basis(mesh.corners(t0));
    const ElementBasis b1 = fem::whitney_basis(mesh.corners(t1));
    std::array<int, 3> l0, l1;
    for (int i = 0; i < 3; ++i) {
      l0[i] = local_index(mesh.tets[t0], fv[i]);
      l1[i] = local_index(mesh.tets[t1], fv[i]);
    }
    double jump2 = 0.0;
    for (std::size_t iq = 0; iq < q.points.size(); ++iq) {
      const double x = q.points[iq].x, y = q.points[iq].y;
      std::array<double, 4> bary0{}, bary1{};
      bary0[l0[0]] = bary1[l1[0]] = 1.0 - x - y;
      bary0[l0[1]] = bary1[l1[1]] = x;
      bary0[l0[2]] = bary1[l1[2]] = y;
      const double j = dot(field_at(b0, mesh, dofmap, coeffs, t0, bary0) - field_at(b1, mesh, dofmap, coeffs, t1, bary1), n);
      jump2 += q.weights[iq] * j * j;
    }
    const double term = 0.25 * h_f * 2.0 * area * jump2;
    out.jump_part[t0] += term;
    out.jump_part[t1] += term;
  }
  double total = 0.0;
  for (Index t = 0; t < nt; ++t) {
    const double e2 = out.div_part[t] + out.jump_part[t];
    out.eta_k[t] = std::sqrt(e2);
    total += e2;
  }
  out.eta = std::sqrt(total);
  return out;
}

IndicatorField compute_indicators(const Mesh& mesh, const fem::DofMap& dofmap, const eigensolver::EigenPair& pair) {
  return compute_indicators(mesh, dofmap, pair.u_coeffs);
}

std::vector<Vec3> project_onto_curl_space(const Mesh& mesh, const fem::DofMap& dofmap,
                                          const eigensolver::MaxwellSolver& solver, const fem::VectorField& sigma) {
  const fem::QuadratureRule q = fem::quadrature(fem::Simplex::kTet, 4);
  std::vector<double> b(dofmap.n_dofs, 0.0);
  for (Index t = 0; t < mesh.num_tets(); ++t) {
    const ElementBasis eb = fem::whitney_basis(mesh.corners(t));
    Vec3 mean;
    for (std::size_t iq = 0; iq < q.points.size(); ++iq) {
      mean += q.weights[iq] * sigma(eb.point(fem::barycentric(q.points[iq])));
    }
    const Vec3 integral = 6.0 * eb.volume * mean;
    for (int k = 0; k < 6; ++k) {
      const Index d = dofmap.dof(mesh, t, k);
      if (d != fem::kNoDof) b[d] += mesh.tet_edge_signs[t][k] * dot(integral, eb.curls[k]);
    }
  }
  const std::vector<double> c = solver.solve_curl_curl(b);
  std::vector<Vec3> out(mesh.num_tets());
  for (Index t = 0; t < mesh.num_tets(); ++t) out[t] = fem::evaluate_curl(mesh, dofmap, c, t);
  return out;
}

double l2_distance(const Mesh& mesh, std::span<const Vec3> a, std::span<const Vec3> b) {
  double sum = 0.0;
  for (Index t = 0; t < mesh.num_tets(); ++t) {
    const Vec3 d = a[t] - b[t];
    sum += mesh::tet_volume(mesh, t) * dot(d, d);
  }
  return std::sqrt(sum);
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(q, 0.0, 1.0) * (values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - lo) * (values[hi] - values[lo]);
}

namespace {

// Visits quadrature points of the integration cells; `visit(coarse_tet,
// weight, reference_value, uh_value)` with weights that integrate over the cell.
using PointVisitor = std::function<void(Index, double, Vec3, Vec3)>;
using CellSweep = std::function<void(const PointVisitor&)>;

EffectivityReport finish_effectivity(const Mesh& mesh, const IndicatorField& indicators, const CellSweep& sweep) {
  if (static_cast<Index>(indicators.eta_k.size()) != mesh.num_tets()) {
    throw Error(ErrorCode::kInvalidArgument, "indicator field does not match mesh");
  }
  double rr = 0.0, ru = 0.0, uu = 0.0;
  sweep([&](Index, double w, Vec3 r, Vec3 u) {
    rr += w * dot(r, r);
    ru += w * dot(r, u);
    uu += w * dot(u, u);
  });
  if (!(rr > 0.0)) throw Error(ErrorCode::kInvalidArgument, "reference field has zero norm");
  const double s = (ru < 0.0 ? -1.0 : 1.0) * std::sqrt(uu / rr);
  std::vector<double> e2(mesh.num_tets(), 0.0);
  sweep([&](Index t, double w, Vec3 r, Vec3 u) {
    const Vec3 d = s * r - u;
    e2[t] += w * dot(d, d);
  });
  EffectivityReport rep;
  rep.eta = indicators.eta;
  double total = 0.0;
  for (double v : e2) total += v;
  rep.error_norm = std::sqrt(total);
  // Rounding-level differences count as zero: the ratio would be noise.
  if (!(rep.error_norm > 1e-12 * std::sqrt(uu))) throw Error(ErrorCode::kInvalidArgument, "error norm is zero");
  rep.effectivity = rep.eta / rep.error_norm;

  rep.per_tet_ratios.assign(mesh.num_tets(), 0.0);
  std::vector<double> valid;
  for (Index t = 0; t < mesh.num_tets(); ++t) {
    double patch = e2[t];
    for (Index f : mesh.tet_faces[t]) {
      const auto [a, b] = mesh.face_tets[f];
      const Index other = a == t ? b : a;
      if (other >= 0) patch += e2[other];
    }
    if (patch > 0.0) {
      rep.per_tet_ratios[t] = indicators.eta_k[t] / std::sqrt(patch);
      valid.push_back(rep.per_tet_ratios[t]);
    }
  }
  if (!valid.empty()) {
    rep.ratio_stats.min = *std::min_element(valid.begin(), valid.end());
    rep.ratio_stats.max = *std::max_element(valid.begin(), valid.end());
    double sum = 0.0;
    for (double v : valid) sum += v;
    rep.ratio_stats.mean = sum / valid.size();
    rep.ratio_stats.p95 = percentile(std::move(valid), 0.95);
  }
  return rep;
}

}  // namespace

EffectivityReport effectivity(const Mesh& mesh, const fem::DofMap& dofmap, std::span<const double> coeffs,
                              const IndicatorField& indicators, const fem::VectorField& reference) {
  const fem::QuadratureRule q = fem::quadrature(fem::Simplex::kTet, 4);
  auto sweep = [&](const PointVisitor& visit) {
    for (Index t = 0; t < mesh.num_tets(); ++t) {
      const ElementBasis b = fem::whitney_basis(mesh.corners(t));
      for (std::size_t iq = 0; iq < q.points.size(); ++iq) {
        const auto bary = fem::barycentric(q.points[iq]);
        visit(t, 6.0 * b.volume * q.weights[iq], reference(b.point(bary)), field_at(b, mesh, dofmap, coeffs, t, bary));
      }
    }
  };
  return finish_effectivity(mesh, indicators, sweep);
}

EffectivityReport effectivity(const Mesh& mesh, const fem::DofMap& dofmap, std::span<const double> coeffs,
                              const IndicatorField& indicators, const FineReference& fine) {
  if (!fine.mesh || !fine.dofmap || static_cast<Index>(fine.parent.size()) != fine.mesh->num_tets()) {
    throw Error(ErrorCode::kInvalidArgument, "incomplete fine-mesh reference");
  }
  const fem::QuadratureRule q = fem::quadrature(fem::Simplex::kTet, 4);
  auto sweep = [&](const PointVisitor& visit) {
    for (Index tf = 0; tf < fine.mesh->num_tets(); ++tf) {
      const Index tc = fine.parent[tf];
      if (tc < 0 || tc >= mesh.num_tets()) throw Error(ErrorCode::kInvalidArgument, "parent map out of range");
      const ElementBasis bf = fem::whitney_basis(fine.mesh->corners(tf));
      const ElementBasis bc = fem::whitney_basis(mesh.corners(tc));
      for (std::size_t iq = 0; iq < q.points.size(); ++iq) {
        const auto bary = fem::barycentric(q.points[iq]);
        const Vec3 x = bf.point(bary);
        visit(tc, 6.0 * bf.volume * q.weights[iq], field_at(bf, *fine.mesh, *fine.dofmap, fine.coeffs, tf, bary),
              field_at(bc, mesh, dofmap, coeffs, tc, barycentric_of(bc, x)));
      }
    }
  };
  return finish_effectivity(mesh, indicators, sweep);
}

}  // namespace curlfem::estimator
