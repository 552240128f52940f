#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "curlfem/common.hpp"

namespace curlfem::mesh {

using Tet = std::array<Index, 4>;
using EdgeKey = std::array<Index, 2>;  // sorted vertex ids
using FaceKey = std::array<Index, 3>;  // sorted vertex ids

/// Local edge table: edge k joins local vertices kLocalEdges[k][0] -> kLocalEdges[k][1].
inline constexpr std::array<std::array<int, 2>, 6> kLocalEdges{{{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};
/// Local face i is opposite local vertex i.
inline constexpr std::array<std::array<int, 3>, 4> kLocalFaces{{{1, 2, 3}, {0, 2, 3}, {0, 1, 3}, {0, 1, 2}}};

/// Bisection bookkeeping carried by every tetrahedron. Marks are global
/// vertex pairs; `face_marks[i]` belongs to the face opposite tets[t][i].
struct TetMarks {
  EdgeKey refinement_edge{};
  std::array<EdgeKey, 4> face_marks{};
  bool flagged = false;
};

/// Tetrahedral mesh with derived edge/face topology. Immutable once built.
struct Mesh {
  std::vector<Vec3> vertices;
  std::vector<Tet> tets;
  std::vector<TetMarks> marks;

  std::vector<EdgeKey> edges;
  std::vector<FaceKey> faces;
  std::vector<std::array<Index, 6>> tet_edges;
  std::vector<std::array<std::int8_t, 6>> tet_edge_signs;
  std::vector<std::array<Index, 4>> tet_faces;
  /// Adjacent tets per face; second entry -1 on boundary faces.
  std::vector<std::array<Index, 2>> face_tets;
  std::vector<char> boundary_edge;
  std::vector<char> boundary_face;
  std::vector<char> boundary_vertex;
  /// Faces shared by more than two tets; nonzero only for corrupted input.
  Index overshared_faces = 0;

  Index num_vertices() const { return static_cast<Index>(vertices.size()); }
  Index num_tets() const { return static_cast<Index>(tets.size()); }
  Index num_edges() const { return static_cast<Index>(edges.size()); }
  Index num_faces() const { return static_cast<Index>(faces.size()); }

  /// Local edge index (0..5) of `refinement_edge` in tet t.
  int refinement_edge(Index t) const;

  std::array<Vec3, 4> corners(Index t) const {
    const Tet& v = tets[t];
    return {vertices[v[0]], vertices[v[1]], vertices[v[2]], vertices[v[3]]};
  }
};

/// Builds the derived topology; does not reorient or validate.
Mesh build_mesh(std::vector<Vec3> vertices, std::vector<Tet> tets, std::vector<TetMarks> marks = {});

/// Swaps vertices of negatively oriented tets.
void orient_positive(std::span<const Vec3> vertices, std::span<Tet> tets, std::span<TetMarks> marks = {});

/// Longest-edge refinement edges and longest-edge face marks (ties by lowest edge id).
void assign_initial_marks(Mesh& mesh);

double signed_volume(Vec3 a, Vec3 b, Vec3 c, Vec3 d);
double tet_volume(const Mesh& mesh, Index t);
double total_volume(const Mesh& mesh);

enum class DomainKind { kUnitCube, kFichera, kBox };

struct Box {
  Vec3 lower;
  Vec3 upper;
};

struct DomainSpec {
  DomainKind kind = DomainKind::kUnitCube;
  Box bounds{{0, 0, 0}, {1, 1, 1}};
  /// Removed corner block, fichera only.
  Box hole{{0, 0, 0}, {0, 0, 0}};

  static DomainSpec unit_cube();
  static DomainSpec fichera();
  static DomainSpec box(Vec3 lower, Vec3 upper);
  double volume() const;
};

DomainKind parse_domain_kind(const std::string& name);
std::string to_string(DomainKind kind);

/// Equal hexahedra split into six Kuhn tetrahedra; hexahedra in the hole are dropped.
Mesh generate_structured(const DomainSpec& spec, std::array<Index, 3> divisions);

/// ASCII TetGen .node/.ele contents.
Mesh import_tetgen(const std::string& node_text, const std::string& ele_text);

struct AuditReport {
  bool ok = true;
  std::string message;  // first violation
};

AuditReport topology_audit(const Mesh& mesh);

struct Diameters {
  std::vector<double> tet;   // h_K
  std::vector<double> face;  // h_F
  double h = 0.0;
};

Diameters diameters(const Mesh& mesh);

/// Minimum dihedral angle (radians) of tet t and over the mesh.
double min_dihedral_angle(const Mesh& mesh, Index t);
double min_dihedral_angle(const Mesh& mesh);

/// Euler characteristic V - E + F - T.
long euler_characteristic(const Mesh& mesh);

std::string to_json(const Mesh& mesh);
/// Reads the vertices/tets dump written by to_json.
Mesh from_json(const std::string& text);

}  // namespace curlfem::mesh
