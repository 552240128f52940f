#include "curlfem/fem/fem.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace curlfem::fem {

using mesh::kLocalEdges;
using mesh::Mesh;

DofMap make_dofmap(const Mesh& mesh, BoundaryCondition condition) {
  DofMap d;
  d.condition = condition;
  d.edge_to_dof.assign(mesh.num_edges(), kNoDof);
  for (Index e = 0; e < mesh.num_edges(); ++e) {
    if (condition == BoundaryCondition::kEssential && mesh.boundary_edge[e]) continue;
    d.edge_to_dof[e] = d.n_dofs++;
  }
  d.vertex_to_dof.assign(mesh.num_vertices(), kNoDof);
  const Index nv = mesh.num_vertices();
  for (Index v = 0; v < nv; ++v) {
    if (condition == BoundaryCondition::kEssential ? mesh.boundary_vertex[v] : v == nv - 1) continue;
    d.vertex_to_dof[v] = d.n_vertex_dofs++;
  }
  return d;
}

namespace {

// Gauss-Legendre nodes and weights on [0, 1].
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double t = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = t;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (t * p1 - p0) / (t * t - 1.0);
      const double step = p1 / dp;
      t -= step;
      if (std::abs(step) < 1e-16) break;
    }
    x[i] = 0.5 * (1.0 - t);
    w[i] = 1.0 / ((1.0 - t * t) * dp * dp);
  }
}

QuadratureRule collapsed_tet(int n) {
  std::vector<double> x, w;
  gauss_legendre(n, x, w);
  QuadratureRule q;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const double u = x[i], v = x[j], s = x[k];
        q.points.push_back({u, v * (1 - u), s * (1 - u) * (1 - v)});
        q.weights.push_back(w[i] * w[j] * w[k] * (1 - u) * (1 - u) * (1 - v));
      }
  return q;
}

QuadratureRule collapsed_triangle(int n) {
  std::vector<double> x, w;
  gauss_legendre(n, x, w);
  QuadratureRule q;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      q.points.push_back({x[i], x[j] * (1 - x[i]), 0.0});
      q.weights.push_back(w[i] * w[j] * (1 - x[i]));
    }
  return q;
}

}  // namespace

QuadratureRule quadrature(Simplex domain, int degree) {
  if (degree < 0 || degree > 4) throw Error(ErrorCode::kInvalidArgument, "unsupported quadrature degree");
  if (domain == Simplex::kTet) {
    if (degree <= 1) return {{{0.25, 0.25, 0.25}}, {1.0 / 6.0}};
    if (degree == 2) {
      const double a = 0.5854101966249685, b = 0.1381966011250105;
      return {{{b, b, b}, {a, b, b}, {b, a, b}, {b, b, a}}, std::vector<double>(4, 1.0 / 24.0)};
    }
    return collapsed_tet(degree == 3 ? 3 : 4);
  }
  if (degree <= 1) return {{{1.0 / 3.0, 1.0 / 3.0, 0.0}}, {0.5}};
  if (degree == 2) {
    return {{{1.0 / 6.0, 1.0 / 6.0, 0.0}, {2.0 / 3.0, 1.0 / 6.0, 0.0}, {1.0 / 6.0, 2.0 / 3.0, 0.0}},
            std::vector<double>(3, 1.0 / 6.0)};
  }
  return collapsed_triangle(3);
}

std::array<double, 4> barycentric(Vec3 p) { return {1.0 - p.x - p.y - p.z, p.x, p.y, p.z}; }

Vec3 ElementBasis::value(int k, const std::array<double, 4>& bary) const {
  const int i = kLocalEdges[k][0], j = kLocalEdges[k][1];
  return bary[i] * grad_lambda[j] - bary[j] * grad_lambda[i];
}

Vec3 ElementBasis::point(const std::array<double, 4>& bary) const {
  return bary[0] * corners[0] + bary[1] * corners[1] + bary[2] * corners[2] + bary[3] * corners[3];
}

ElementBasis whitney_basis(const std::array<Vec3, 4>& p) {
  ElementBasis b;
  b.corners = p;
  const Vec3 e1 = p[1] - p[0], e2 = p[2] - p[0], e3 = p[3] - p[0];
  const double det = dot(e1, cross(e2, e3));
  double h = 0.0;
  for (const auto& e : kLocalEdges) h = std::max(h, norm(p[e[1]] - p[e[0]]));
  b.volume = std::abs(det) / 6.0;
  if (!(b.volume >= 1e-14 * h * h * h) || h == 0.0) throw Error(ErrorCode::kDegenerate, "degenerate tetrahedron");
  b.grad_lambda[1] = cross(e2, e3) / det;
  b.grad_lambda[2] = cross(e3, e1) / det;
  b.grad_lambda[3] = cross(e1, e2) / det;
  b.grad_lambda[0] = -(b.grad_lambda[1] + b.grad_lambda[2] + b.grad_lambda[3]);
  for (int k = 0; k < 6; ++k) b.curls[k] = 2.0 * cross(b.grad_lambda[kLocalEdges[k][0]], b.grad_lambda[kLocalEdges[k][1]]);
  return b;
}

namespace {

// Sorted (row, col) pattern of all dof pairs coupled through some tet.
linalg::SparseMatrix coupling_pattern(const Mesh& mesh, const DofMap& dofmap) {
  std::vector<std::uint64_t> codes;
  codes.reserve(std::size_t(mesh.num_tets()) * 36);
  for (Index t = 0; t < mesh.num_tets(); ++t) {
    std::array<Index, 6> d;
    for (int k = 0; k < 6; ++k) d[k] = dofmap.dof(mesh, t, k);
    for (Index r : d) {
      if (r == kNoDof) continue;
      for (Index c : d)
        if (c != kNoDof) codes.push_back((std::uint64_t(r) << 32) | std::uint32_t(c));
    }
  }
  std::sort(codes.begin(), codes.end());
  codes.erase(std::unique(codes.begin(), codes.end()), codes.end());
  const Index n = dofmap.n_dofs;
  std::vector<Index> offsets(n + 1, 0), cols(codes.size());
  for (std::size_t i = 0; i < codes.size(); ++i) {
    ++offsets[(codes[i] >> 32) + 1];
    cols[i] = static_cast<Index>(codes[i] & 0xffffffffu);
  }
  for (Index r = 0; r < n; ++r) offsets[r + 1] += offsets[r];
  std::vector<double> values(codes.size(), 0.0);
  return linalg::SparseMatrix(n, n, std::move(offsets), std::move(cols), std::move(values));
}

std::size_t slot(const linalg::SparseMatrix& m, Index r, Index c) {
  auto cols = m.row_cols(r);
  return m.row_offsets()[r] + (std::lower_bound(cols.begin(), cols.end(), c) - cols.begin());
}

}  // namespace

AssembledSystem assemble(const Mesh& mesh, const DofMap& dofmap) {
  if (static_cast<Index>(dofmap.edge_to_dof.size()) != mesh.num_edges() ||
      static_cast<Index>(dofmap.vertex_to_dof.size()) != mesh.num_vertices()) {
    throw Error(ErrorCode::kInvalidArgument, "dofmap does not match mesh");
  }
  AssembledSystem s;
  s.A = coupling_pattern(mesh, dofmap);
  s.M = s.A;
  auto a_values = s.A.mutable_values();
  auto m_values = s.M.mutable_values();
  const QuadratureRule q = quadrature(Simplex::kTet, 2);

  for (Index t = 0; t < mesh.num_tets(); ++t) {
    const ElementBasis b = whitney_basis(mesh.corners(t));
    std::array<Index, 6> d;
    std::array<double, 6> sign;
    for (int k = 0; k < 6; ++k) {
      d[k] = dofmap.dof(mesh, t, k);
      sign[k] = mesh.tet_edge_signs[t][k];
    }
    std::array<std::array<Vec3, 6>, 4> w;
    for (std::size_t iq = 0; iq < q.points.size(); ++iq) {
      const auto bary = barycentric(q.points[iq]);
      for (int k = 0; k < 6; ++k) w[iq][k] = b.value(k, bary);
    }
    for (int k = 0; k < 6; ++k) {
      if (d[k] == kNoDof) continue;
      for (int l = 0; l < 6; ++l) {
        if (d[l] == kNoDof) continue;
        const double s_kl = sign[k] * sign[l];
        double mass = 0.0;
        for (std::size_t iq = 0; iq < q.points.size(); ++iq) mass += q.weights[iq] * dot(w[iq][k], w[iq][l]);
        const std::size_t at = slot(s.A, d[k], d[l]);
        a_values[at] += s_kl * b.volume * dot(b.curls[k], b.curls[l]);
        m_values[at] += s_kl * 6.0 * b.volume * mass;
      }
    }
  }

  std::vector<linalg::Triplet> g;
  g.reserve(2 * std::size_t(dofmap.n_dofs));
  for (Index e = 0; e < mesh.num_edges(); ++e) {
    const Index row = dofmap.edge_to_dof[e];
    if (row == kNoDof) continue;
    const Index va = dofmap.vertex_to_dof[mesh.edges[e][0]], vb = dofmap.vertex_to_dof[mesh.edges[e][1]];
    if (va != kNoDof) g.push_back({row, va, -1.0});
    if (vb != kNoDof) g.push_back({row, vb, 1.0});
  }
  s.G = linalg::assemble_from_triplets(dofmap.n_dofs, dofmap.n_vertex_dofs, g);
  return s;
}

Vec3 evaluate_field(const Mesh& mesh, const DofMap& dofmap, std::span<const double> coeffs, Index tet,
                    const std::array<double, 4>& bary) {
  if (tet < 0 || tet >= mesh.num_tets()) throw Error(ErrorCode::kInvalidArgument, "unknown tet");
  const ElementBasis b = whitney_basis(mesh.corners(tet));
  Vec3 u;
  for (int k = 0; k < 6; ++k) {
    const Index d = dofmap.dof(mesh, tet, k);
    if (d != kNoDof) u += (mesh.tet_edge_signs[tet][k] * coeffs[d]) * b.value(k, bary);
  }
  return u;
}

Vec3 evaluate_curl(const Mesh& mesh, const DofMap& dofmap, std::span<const double> coeffs, Index tet) {
  if (tet < 0 || tet >= mesh.num_tets()) throw Error(ErrorCode::kInvalidArgument, "unknown tet");
  const ElementBasis b = whitney_basis(mesh.corners(tet));
  Vec3 c;
  for (int k = 0; k < 6; ++k) {
    const Index d = dofmap.dof(mesh, tet, k);
    if (d != kNoDof) c += (mesh.tet_edge_signs[tet][k] * coeffs[d]) * b.curls[k];
  }
  return c;
}

std::vector<double> interpolate(const Mesh& mesh, const DofMap& dofmap, const VectorField& field) {
  std::vector<double> x, w;
  gauss_legendre(5, x, w);
  std::vector<double> coeffs(dofmap.n_dofs, 0.0);
  for (Index e = 0; e < mesh.num_edges(); ++e) {
    const Index d = dofmap.edge_to_dof[e];
    if (d == kNoDof) continue;
    const Vec3 a = mesh.vertices[mesh.edges[e][0]], t = mesh.vertices[mesh.edges[e][1]] - a;
    double sum = 0.0;
    for (int i = 0; i < 5; ++i) sum += w[i] * dot(field(a + x[i] * t), t);
    coeffs[d] = sum;
  }
  return coeffs;
}

}  // namespace curlfem::fem
