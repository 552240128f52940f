#include "curlfem/refine/refine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

namespace curlfem::refine {

using mesh::EdgeKey;
using mesh::Mesh;
using mesh::Tet;
using mesh::TetMarks;

MarkSet mark(std::span<const double> eta_k, double theta) {
  if (!(theta > 0.0 && theta <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "theta must lie in (0, 1]");
  MarkSet out;
  out.theta = theta;
  const Index n = static_cast<Index>(eta_k.size());
  std::vector<Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return eta_k[a] * eta_k[a] > eta_k[b] * eta_k[b]; });
  double total = 0.0;
  for (Index t : order) total += eta_k[t] * eta_k[t];
  if (!(total > 0.0)) return out;
  // theta = 1 must also take indicators below the rounding of the total.
  const double target = theta < 1.0 ? theta * total * (1.0 - 1e-12) : INFINITY;
  double mass = 0.0;
  for (Index t : order) {
    if (mass >= target || eta_k[t] == 0.0) break;
    mass += eta_k[t] * eta_k[t];
    out.marked_tets.push_back(t);
  }
  std::sort(out.marked_tets.begin(), out.marked_tets.end());
  return out;
}

namespace {

std::uint64_t edge_code(Index a, Index b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

EdgeKey key(Index a, Index b) { return a < b ? EdgeKey{a, b} : EdgeKey{b, a}; }

bool contains(const EdgeKey& e, Index v) { return e[0] == v || e[1] == v; }
Index other(const EdgeKey& e, Index v) { return e[0] == v ? e[1] : e[0]; }

class Bisector {
 public:
  explicit Bisector(const Mesh& m)
      : vertices_(m.vertices), tets_(m.tets), marks_(m.marks), parent_(m.tets.size()),
        need_(m.tets.size(), 0) {
    std::iota(parent_.begin(), parent_.end(), 0);
    limit_ = 100 * static_cast<long>(std::max<std::size_t>(m.tets.size(), 1));
  }

  void request(std::span<const Index> marked) {
    for (Index t : marked) {
      if (t < 0 || t >= static_cast<Index>(tets_.size())) throw Error(ErrorCode::kInvalidArgument, "marked tet out of range");
      need_[t] = 1;
    }
  }

  void run() {
    bool changed = true;
    while (changed) {
      changed = false;
      for (std::size_t i = 0; i < tets_.size(); ++i) {
        while (needs_split(i)) {
          split(i);
          changed = true;
        }
      }
    }
  }

  BisectionResult finish() {
    BisectionResult r;
    mesh::orient_positive(vertices_, tets_, marks_);
    r.mesh = mesh::build_mesh(std::move(vertices_), std::move(tets_), std::move(marks_));
    r.parent = std::move(parent_);
    r.splits = static_cast<Index>(splits_);
    return r;
  }

 private:
  bool needs_split(std::size_t i) const {
    if (need_[i]) return true;
    if (midpoints_.empty()) return false;
    const Tet& v = tets_[i];
    for (const auto& e : mesh::kLocalEdges)
      if (midpoints_.count(edge_code(v[e[0]], v[e[1]]))) return true;
    return false;
  }

  Index midpoint(Index a, Index b) {
    auto [it, inserted] = midpoints_.try_emplace(edge_code(a, b), static_cast<Index>(vertices_.size()));
    if (inserted) vertices_.push_back(0.5 * (vertices_[a] + vertices_[b]));
    return it->second;
  }

  int local_of(const Tet& v, Index g) const {
    for (int i = 0; i < 4; ++i)
      if (v[i] == g) return i;
    throw Error(ErrorCode::kTopology, "refinement edge is not an edge of its tet");
  }

  // Split tets_[i] at its refinement edge. Child on the `a` side stays at i.
  void split(std::size_t i) {
    if (++splits_ > limit_) throw Error(ErrorCode::kTopology, "non-terminating closure");
    const Tet v = tets_[i];
    const TetMarks tm = marks_[i];
    const Index a = tm.refinement_edge[0], b = tm.refinement_edge[1];
    const int la = local_of(v, a), lb = local_of(v, b);
    if (la == lb) throw Error(ErrorCode::kTopology, "refinement edge is not an edge of its tet");
    Index cd[2];
    int n = 0;
    for (int k = 0; k < 4; ++k)
      if (k != la && k != lb) cd[n++] = v[k];
    const Index c = cd[0], d = cd[1];
    const EdgeKey mark_a = tm.face_marks[la];  // face b c d
    const EdgeKey mark_b = tm.face_marks[lb];  // face a c d
    const Index z = midpoint(a, b);

    // Planar: both non-refinement faces are marked at the same third vertex x.
    const bool planar = contains(mark_a, b) && contains(mark_b, a) && other(mark_a, b) == other(mark_b, a);
    const EdgeKey new_face_mark = (planar && tm.flagged) ? key(z, other(mark_a, b)) : key(c, d);
    const bool child_flag = planar && !tm.flagged;

    // Children (p, c, d, z): faces opposite p, c, d, z.
    auto make = [&](Index p, EdgeKey inherited) {
      TetMarks m;
      m.refinement_edge = inherited;
      m.flagged = child_flag;
      m.face_marks = {new_face_mark, key(p, d), key(p, c), inherited};
      return std::pair<Tet, TetMarks>{Tet{p, c, d, z}, m};
    };
    auto [ta, ma] = make(a, mark_b);
    auto [tb, mb] = make(b, mark_a);
    tets_[i] = ta;
    marks_[i] = ma;
    need_[i] = 0;
    tets_.push_back(tb);
    marks_.push_back(mb);
    parent_.push_back(parent_[i]);
    need_.push_back(0);
  }

  std::vector<Vec3> vertices_;
  std::vector<Tet> tets_;
  std::vector<TetMarks> marks_;
  std::vector<Index> parent_;
  std::vector<char> need_;
  std::unordered_map<std::uint64_t, Index> midpoints_;
  long splits_ = 0;
  long limit_ = 0;
};

}  // namespace

BisectionResult bisect_tracked(const Mesh& mesh, std::span<const Index> marked) {
  if (mesh.marks.size() != mesh.tets.size()) throw Error(ErrorCode::kInvalidArgument, "mesh has no refinement marks");
  Bisector b(mesh);
  b.request(marked);
  b.run();
  return b.finish();
}

Mesh bisect(const Mesh& mesh, const MarkSet& marks) { return bisect_tracked(mesh, marks.marked_tets).mesh; }

BisectionResult uniform_refine_tracked(const Mesh& mesh) {
  BisectionResult r;
  r.mesh = mesh;
  r.parent.resize(mesh.tets.size());
  std::iota(r.parent.begin(), r.parent.end(), 0);
  for (int round = 0; round < 3; ++round) {
    std::vector<Index> all(r.mesh.num_tets());
    std::iota(all.begin(), all.end(), 0);
    BisectionResult step = bisect_tracked(r.mesh, all);
    for (auto& p : step.parent) p = r.parent[p];
    r.parent = std::move(step.parent);
    r.mesh = std::move(step.mesh);
    r.splits += step.splits;
  }
  return r;
}

Mesh uniform_refine(const Mesh& mesh) { return uniform_refine_tracked(mesh).mesh; }

}  // namespace curlfem::refine
