#include "curlfem/mesh/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace curlfem::mesh {

namespace {

std::uint64_t edge_code(Index a, Index b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

FaceKey sorted_face(Index a, Index b, Index c) {
  FaceKey f{a, b, c};
  std::sort(f.begin(), f.end());
  return f;
}

}  // namespace

int Mesh::refinement_edge(Index t) const {
  const auto& r = marks[t].refinement_edge;
  const Tet& v = tets[t];
  for (int k = 0; k < 6; ++k) {
    Index a = v[kLocalEdges[k][0]], b = v[kLocalEdges[k][1]];
    if ((a == r[0] && b == r[1]) || (a == r[1] && b == r[0])) return k;
  }
  return -1;
}

double signed_volume(Vec3 a, Vec3 b, Vec3 c, Vec3 d) { return dot(b - a, cross(c - a, d - a)) / 6.0; }

double tet_volume(const Mesh& mesh, Index t) {
  auto p = mesh.corners(t);
  return signed_volume(p[0], p[1], p[2], p[3]);
}

double total_volume(const Mesh& mesh) {
  double v = 0.0;
  for (Index t = 0; t < mesh.num_tets(); ++t) v += tet_volume(mesh, t);
  return v;
}

void orient_positive(std::span<const Vec3> vertices, std::span<Tet> tets, std::span<TetMarks> marks) {
  for (std::size_t t = 0; t < tets.size(); ++t) {
    Tet& v = tets[t];
    if (signed_volume(vertices[v[0]], vertices[v[1]], vertices[v[2]], vertices[v[3]]) < 0.0) {
      std::swap(v[0], v[1]);
      if (!marks.empty()) std::swap(marks[t].face_marks[0], marks[t].face_marks[1]);
    }
  }
}

Mesh build_mesh(std::vector<Vec3> vertices, std::vector<Tet> tets, std::vector<TetMarks> marks) {
  Mesh m;
  m.vertices = std::move(vertices);
  m.tets = std::move(tets);
  m.marks = std::move(marks);
  const Index nt = m.num_tets();
  if (m.marks.size() != m.tets.size()) m.marks.assign(nt, TetMarks{});

  // Edges, numbered in lexicographic order of their sorted vertex pairs.
  {
    std::vector<std::pair<std::uint64_t, Index>> keys;
    keys.reserve(std::size_t(nt) * 6);
    for (Index t = 0; t < nt; ++t)
      for (int k = 0; k < 6; ++k)
        keys.emplace_back(edge_code(m.tets[t][kLocalEdges[k][0]], m.tets[t][kLocalEdges[k][1]]), t * 6 + k);
    std::sort(keys.begin(), keys.end());
    m.tet_edges.assign(nt, {});
    m.tet_edge_signs.assign(nt, {});
    for (std::size_t i = 0; i < keys.size(); ++i) {
      if (i == 0 || keys[i].first != keys[i - 1].first) {
        m.edges.push_back({static_cast<Index>(keys[i].first >> 32),
                           static_cast<Index>(keys[i].first & 0xffffffffu)});
      }
      const Index t = keys[i].second / 6;
      const int k = keys[i].second % 6;
      m.tet_edges[t][k] = m.num_edges() - 1;
      m.tet_edge_signs[t][k] = m.tets[t][kLocalEdges[k][0]] < m.tets[t][kLocalEdges[k][1]] ? 1 : -1;
    }
  }

  // Faces with their adjacent tets.
  {
    std::vector<std::pair<FaceKey, Index>> keys;
    keys.reserve(std::size_t(nt) * 4);
    for (Index t = 0; t < nt; ++t)
      for (int i = 0; i < 4; ++i) {
        const auto& lf = kLocalFaces[i];
        keys.emplace_back(sorted_face(m.tets[t][lf[0]], m.tets[t][lf[1]], m.tets[t][lf[2]]), t * 4 + i);
      }
    std::sort(keys.begin(), keys.end());
    m.tet_faces.assign(nt, {});
    Index count = 0;
    for (std::size_t i = 0; i < keys.size(); ++i) {
      const Index t = keys[i].second / 4;
      const int local = keys[i].second % 4;
      if (i == 0 || keys[i].first != keys[i - 1].first) {
        m.faces.push_back(keys[i].first);
        m.face_tets.push_back({t, -1});
        count = 1;
      } else {
        if (++count == 2) {
          m.face_tets.back()[1] = t;
        } else if (count == 3) {
          ++m.overshared_faces;
        }
      }
      m.tet_faces[t][local] = m.num_faces() - 1;
    }
  }

  m.boundary_face.assign(m.num_faces(), 0);
  m.boundary_edge.assign(m.num_edges(), 0);
  m.boundary_vertex.assign(m.num_vertices(), 0);
  for (Index f = 0; f < m.num_faces(); ++f) {
    if (m.face_tets[f][1] != -1) continue;
    m.boundary_face[f] = 1;
    const Index t = m.face_tets[f][0];
    int local = 0;
    while (m.tet_faces[t][local] != f) ++local;
    for (int k = 0; k < 6; ++k) {
      if (kLocalEdges[k][0] != local && kLocalEdges[k][1] != local) m.boundary_edge[m.tet_edges[t][k]] = 1;
    }
    for (Index v : m.faces[f]) m.boundary_vertex[v] = 1;
  }
  return m;
}

void assign_initial_marks(Mesh& mesh) {
  // Strict order: longer first, then lower edge id. Lengths within a relative
  // 1e-12 count as equal so that grid round-off does not decide ties.
  auto better = [&](Index t, int k1, int k2) {
    auto p = mesh.corners(t);
    auto len2 = [&](int k) {
      Vec3 d = p[kLocalEdges[k][1]] - p[kLocalEdges[k][0]];
      return dot(d, d);
    };
    const double l1 = len2(k1), l2 = len2(k2);
    if (std::abs(l1 - l2) > 1e-12 * std::max(l1, l2)) return l1 > l2;
    return mesh.tet_edges[t][k1] < mesh.tet_edges[t][k2];
  };
  for (Index t = 0; t < mesh.num_tets(); ++t) {
    const Tet& v = mesh.tets[t];
    auto key = [&](int k) {
      EdgeKey e{v[kLocalEdges[k][0]], v[kLocalEdges[k][1]]};
      if (e[0] > e[1]) std::swap(e[0], e[1]);
      return e;
    };
    int best = 0;
    for (int k = 1; k < 6; ++k)
      if (better(t, k, best)) best = k;
    TetMarks& tm = mesh.marks[t];
    tm.refinement_edge = key(best);
    tm.flagged = false;
    for (int i = 0; i < 4; ++i) {
      int face_best = -1;
      for (int k = 0; k < 6; ++k) {
        if (kLocalEdges[k][0] == i || kLocalEdges[k][1] == i) continue;
        if (face_best < 0 || better(t, k, face_best)) face_best = k;
      }
      tm.face_marks[i] = key(face_best);
    }
  }
}

DomainSpec DomainSpec::unit_cube() { return {DomainKind::kUnitCube, {{0, 0, 0}, {1, 1, 1}}, {}}; }

DomainSpec DomainSpec::fichera() {
  return {DomainKind::kFichera, {{0, 0, 0}, {0.8, 1.0, 1.2}}, {{0, 0, 0}, {0.4, 0.5, 0.6}}};
}

DomainSpec DomainSpec::box(Vec3 lower, Vec3 upper) { return {DomainKind::kBox, {lower, upper}, {}}; }

double DomainSpec::volume() const {
  auto vol = [](const Box& b) {
    return (b.upper.x - b.lower.x) * (b.upper.y - b.lower.y) * (b.upper.z - b.lower.z);
  };
  return vol(bounds) - (kind == DomainKind::kFichera ? vol(hole) : 0.0);
}

DomainKind parse_domain_kind(const std::string& name) {
  if (name == "cube" || name == "unit_cube") return DomainKind::kUnitCube;
  if (name == "fichera") return DomainKind::kFichera;
  if (name == "box") return DomainKind::kBox;
  throw Error(ErrorCode::kInvalidArgument, "unknown domain '" + name + "'");
}

std::string to_string(DomainKind kind) {
  switch (kind) {
    case DomainKind::kUnitCube:
      return "cube";
    case DomainKind::kFichera:
      return "fichera";
    case DomainKind::kBox:
      return "box";
  }
  return "unknown";
}

Mesh generate_structured(const DomainSpec& spec, std::array<Index, 3> divisions) {
  for (Index d : divisions)
    if (d < 1) throw Error(ErrorCode::kInvalidArgument, "divisions must be >= 1 per axis");
  const Vec3 lo = spec.bounds.lower;
  Vec3 step;
  for (int d = 0; d < 3; ++d) {
    step[d] = (spec.bounds.upper[d] - lo[d]) / divisions[d];
    if (!(step[d] > 0.0)) throw Error(ErrorCode::kInvalidArgument, "empty domain bounds");
  }
  const bool with_hole = spec.kind == DomainKind::kFichera;
  std::array<Index, 3> hole_lo{}, hole_hi{};
  if (with_hole) {
    for (int d = 0; d < 3; ++d) {
      const double a = (spec.hole.lower[d] - lo[d]) / step[d];
      const double b = (spec.hole.upper[d] - lo[d]) / step[d];
      if (std::abs(a - std::round(a)) > 1e-9 || std::abs(b - std::round(b)) > 1e-9) {
        throw Error(ErrorCode::kInvalidArgument,
                    "divisions incompatible with hole boundary on axis " + std::to_string(d));
      }
      hole_lo[d] = static_cast<Index>(std::lround(a));
      hole_hi[d] = static_cast<Index>(std::lround(b));
    }
  }
  auto in_hole = [&](Index i, Index j, Index k) {
    return with_hole && i >= hole_lo[0] && i < hole_hi[0] && j >= hole_lo[1] && j < hole_hi[1] &&
           k >= hole_lo[2] && k < hole_hi[2];
  };

  const Index nx = divisions[0], ny = divisions[1], nz = divisions[2];
  auto grid = [&](Index i, Index j, Index k) { return (k * (ny + 1) + j) * (nx + 1) + i; };
  std::vector<Index> id(std::size_t(nx + 1) * (ny + 1) * (nz + 1), -1);
  std::vector<Vec3> vertices;
  std::vector<Tet> tets;

  // Kuhn paths: one tetrahedron per ordering of the three axis steps.
  static constexpr std::array<std::array<int, 3>, 6> kPerms{
      {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
  auto vertex = [&](Index i, Index j, Index k) {
    Index& slot = id[grid(i, j, k)];
    if (slot < 0) {
      // Exact multiples of the step keep coordinates on the hole planes bit-exact.
      Vec3 p{lo.x + i * step.x, lo.y + j * step.y, lo.z + k * step.z};
      if (i == nx) p.x = spec.bounds.upper.x;
      if (j == ny) p.y = spec.bounds.upper.y;
      if (k == nz) p.z = spec.bounds.upper.z;
      slot = static_cast<Index>(vertices.size());
      vertices.push_back(p);
    }
    return slot;
  };
  for (Index k = 0; k < nz; ++k)
    for (Index j = 0; j < ny; ++j)
      for (Index i = 0; i < nx; ++i) {
        if (in_hole(i, j, k)) continue;
        for (const auto& perm : kPerms) {
          std::array<Index, 3> c{i, j, k};
          Tet t;
          t[0] = vertex(c[0], c[1], c[2]);
          for (int s = 0; s < 3; ++s) {
            ++c[perm[s]];
            t[s + 1] = vertex(c[0], c[1], c[2]);
          }
          tets.push_back(t);
        }
      }
  orient_positive(vertices, tets);
  Mesh m = build_mesh(std::move(vertices), std::move(tets));
  assign_initial_marks(m);
  return m;
}

AuditReport topology_audit(const Mesh& mesh) {
  auto fail = [](std::string msg) { return AuditReport{false, std::move(msg)}; };
  const Index nv = mesh.num_vertices();
  std::vector<char> used(nv, 0);
  for (Index t = 0; t < mesh.num_tets(); ++t) {
    const Tet& v = mesh.tets[t];
    for (int i = 0; i < 4; ++i) {
      if (v[i] < 0 || v[i] >= nv) return fail("tet " + std::to_string(t) + ": vertex id out of range");
      for (int j = 0; j < i; ++j)
        if (v[i] == v[j]) return fail("tet " + std::to_string(t) + ": repeated vertex");
      used[v[i]] = 1;
    }
    if (!(tet_volume(mesh, t) > 0.0)) return fail("tet " + std::to_string(t) + ": negative volume");
  }
  for (Index i = 0; i < nv; ++i)
    if (!used[i]) return fail("vertex " + std::to_string(i) + " unreferenced");

  // Face incidences recounted from the raw tets.
  std::vector<FaceKey> all;
  all.reserve(std::size_t(mesh.num_tets()) * 4);
  for (const Tet& v : mesh.tets)
    for (const auto& lf : kLocalFaces) all.push_back(sorted_face(v[lf[0]], v[lf[1]], v[lf[2]]));
  std::sort(all.begin(), all.end());
  Index boundary_faces = 0, interior_faces = 0;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    while (j < all.size() && all[j] == all[i]) ++j;
    const std::size_t count = j - i;
    if (count > 2) {
      return fail("face (" + std::to_string(all[i][0]) + "," + std::to_string(all[i][1]) + "," +
                  std::to_string(all[i][2]) + ") shared by " + std::to_string(count) + " tets");
    }
    (count == 1 ? boundary_faces : interior_faces)++;
    i = j;
  }
  if (2 * interior_faces != 4 * mesh.num_tets() - boundary_faces) return fail("interior face count mismatch");
  if (mesh.overshared_faces != 0 || mesh.num_faces() != boundary_faces + interior_faces) {
    return fail("stored face table inconsistent with tets");
  }
  if (static_cast<Index>(mesh.tet_edges.size()) != mesh.num_tets() ||
      static_cast<Index>(mesh.face_tets.size()) != mesh.num_faces()) {
    return fail("topology arrays not built");
  }

  for (Index e = 0; e < mesh.num_edges(); ++e)
    if (mesh.edges[e][0] >= mesh.edges[e][1]) return fail("edge " + std::to_string(e) + " not sorted");
  for (Index t = 0; t < mesh.num_tets(); ++t) {
    for (int k = 0; k < 6; ++k) {
      const Index a = mesh.tets[t][kLocalEdges[k][0]], b = mesh.tets[t][kLocalEdges[k][1]];
      const auto& e = mesh.edges[mesh.tet_edges[t][k]];
      const int sign = mesh.tet_edge_signs[t][k];
      const bool match = sign > 0 ? (e[0] == a && e[1] == b) : (e[0] == b && e[1] == a);
      if (!match) return fail("tet " + std::to_string(t) + ": edge orientation sign mismatch");
    }
  }

  // An edge is boundary iff it lies on a boundary face; the boundary surface
  // must be closed (every boundary edge on exactly two boundary faces).
  std::vector<int> boundary_face_count(mesh.num_edges(), 0);
  for (Index f = 0; f < mesh.num_faces(); ++f) {
    const bool is_boundary = mesh.face_tets[f][1] == -1;
    if (is_boundary != static_cast<bool>(mesh.boundary_face[f])) return fail("boundary face flag mismatch");
    if (!is_boundary) continue;
    const Index t = mesh.face_tets[f][0];
    int local = 0;
    while (local < 4 && mesh.tet_faces[t][local] != f) ++local;
    if (local == 4) return fail("face/tet incidence mismatch");
    for (int k = 0; k < 6; ++k)
      if (kLocalEdges[k][0] != local && kLocalEdges[k][1] != local) ++boundary_face_count[mesh.tet_edges[t][k]];
  }
  for (Index e = 0; e < mesh.num_edges(); ++e) {
    const bool on_boundary = boundary_face_count[e] > 0;
    if (on_boundary != static_cast<bool>(mesh.boundary_edge[e])) return fail("boundary edge flag mismatch");
    if (on_boundary && boundary_face_count[e] != 2) {
      return fail("edge " + std::to_string(e) + " lies on " + std::to_string(boundary_face_count[e]) +
                  " boundary faces (non-conforming)");
    }
  }
  return {};
}

Diameters diameters(const Mesh& mesh) {
  Diameters d;
  d.tet.resize(mesh.num_tets());
  d.face.resize(mesh.num_faces());
  for (Index t = 0; t < mesh.num_tets(); ++t) {
    auto p = mesh.corners(t);
    double h = 0.0;
    for (const auto& e : kLocalEdges) h = std::max(h, norm(p[e[1]] - p[e[0]]));
    d.tet[t] = h;
    d.h = std::max(d.h, h);
  }
  for (Index f = 0; f < mesh.num_faces(); ++f) {
    const auto& v = mesh.faces[f];
    const Vec3 a = mesh.vertices[v[0]], b = mesh.vertices[v[1]], c = mesh.vertices[v[2]];
    d.face[f] = std::max({norm(b - a), norm(c - a), norm(c - b)});
  }
  return d;
}

double min_dihedral_angle(const Mesh& mesh, Index t) {
  auto p = mesh.corners(t);
  // Area-weighted outward normals of the faces opposite each vertex.
  std::array<Vec3, 4> n;
  for (int i = 0; i < 4; ++i) {
    const auto& f = kLocalFaces[i];
    Vec3 nn = cross(p[f[1]] - p[f[0]], p[f[2]] - p[f[0]]);
    if (dot(nn, p[i] - p[f[0]]) > 0) nn = -nn;
    n[i] = nn / norm(nn);
  }
  double angle = std::numbers::pi;
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) {
      const double c = std::clamp(-dot(n[i], n[j]), -1.0, 1.0);
      angle = std::min(angle, std::acos(c));
    }
  return angle;
}

double min_dihedral_angle(const Mesh& mesh) {
  double angle = std::numbers::pi;
  for (Index t = 0; t < mesh.num_tets(); ++t) angle = std::min(angle, min_dihedral_angle(mesh, t));
  return angle;
}

long euler_characteristic(const Mesh& mesh) {
  return static_cast<long>(mesh.num_vertices()) - mesh.num_edges() + mesh.num_faces() - mesh.num_tets();
}

}  // namespace curlfem::mesh
