#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "curlfem/refine/refine.hpp"

using namespace curlfem;
using namespace curlfem::mesh;
using namespace curlfem::refine;

namespace {

constexpr double kDeg = 180.0 / 3.14159265358979323846;

// Two tets glued along the face (1,2,3); the shared edge 1-2 is the longest edge of both.
Mesh two_tet_mesh() {
  return import_tetgen("5 3 0 0\n0 0.2 0.2 0.5\n1 2 0 0\n2 0 1 0\n3 0 0 0\n4 0.2 0.2 -0.5\n",
                       "2 4 0\n0 0 1 2 3\n1 4 1 2 3\n");
}

Vec3 centroid(const Mesh& m, Index t) {
  const auto c = m.corners(t);
  return (c[0] + c[1] + c[2] + c[3]) / 4.0;
}

void check_child_volumes(const Mesh& parent, const BisectionResult& r) {
  std::vector<double> sum(parent.num_tets(), 0.0);
  for (Index t = 0; t < r.mesh.num_tets(); ++t) sum[r.parent[t]] += tet_volume(r.mesh, t);
  for (Index t = 0; t < parent.num_tets(); ++t) CHECK(sum[t] == doctest::Approx(tet_volume(parent, t)).epsilon(1e-12));
}

}  // namespace

TEST_CASE("mark: prefix-sum oracle") {
  const std::vector<double> eta{2.0, std::sqrt(3.0), std::sqrt(2.0), 1.0};
  const MarkSet m = mark(eta, 0.5);
  CHECK(m.marked_tets == std::vector<Index>{0, 1});
  CHECK(m.theta == 0.5);
}

TEST_CASE("mark: theta = 1 marks every tet with a positive indicator") {
  const std::vector<double> eta{0.3, 0.0, 2.0, 1e-9};
  CHECK(mark(eta, 1.0).marked_tets == std::vector<Index>{0, 2, 3});
}

TEST_CASE("mark: equal indicators break ties by id") {
  const std::vector<double> eta(10, 0.7);
  CHECK(mark(eta, 0.3).marked_tets == std::vector<Index>{0, 1, 2});
  const std::vector<double> eta7(7, 1.0);
  CHECK(mark(eta7, 0.3).marked_tets == std::vector<Index>{0, 1, 2});
}

TEST_CASE("mark: zero indicators and bad theta") {
  CHECK(mark(std::vector<double>(5, 0.0), 0.5).marked_tets.empty());
  CHECK_THROWS_AS(mark(std::vector<double>{1.0}, 0.0), Error);
  CHECK_THROWS_AS(mark(std::vector<double>{1.0}, 1.5), Error);
}

TEST_CASE("mark: minimal-cardinality prefix on random indicators") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> eta(200);
    for (double& e : eta) e = u(rng) * u(rng);
    const double theta = 0.05 + 0.9 * u(rng);
    const MarkSet m = mark(eta, theta);
    double total = 0.0, marked = 0.0, smallest = INFINITY;
    for (double e : eta) total += e * e;
    for (Index t : m.marked_tets) {
      marked += eta[t] * eta[t];
      smallest = std::min(smallest, eta[t] * eta[t]);
    }
    CHECK(marked >= theta * total * (1.0 - 1e-12));
    CHECK(marked - smallest < theta * total);
    // Every marked indicator is at least every unmarked one.
    for (Index t = 0; t < 200; ++t)
      if (!std::binary_search(m.marked_tets.begin(), m.marked_tets.end(), t)) CHECK(eta[t] * eta[t] <= smallest);
  }
}

TEST_CASE("bisect: single tet gives two children of equal total volume") {
  const Mesh m = import_tetgen("4 3 0 0\n0 0 0 0\n1 1 0 0\n2 0 1 0\n3 0 0 1\n", "1 4 0\n0 0 1 2 3\n");
  const std::vector<Index> marked{0};
  const BisectionResult r = bisect_tracked(m, marked);
  CHECK(r.mesh.num_tets() == 2);
  CHECK(std::abs(total_volume(r.mesh) - 1.0 / 6.0) <= 1e-14);
  CHECK(topology_audit(r.mesh).ok);
}

TEST_CASE("bisect: closure splits the neighbour sharing the refinement edge") {
  const Mesh m = two_tet_mesh();
  REQUIRE(topology_audit(m).ok);
  MarkSet marks;
  marks.marked_tets = {0};
  const Mesh r = bisect(m, marks);
  CHECK(r.num_tets() == 4);
  CHECK(r.num_vertices() == 6);
  CHECK(topology_audit(r).ok);
  // The new vertex is the midpoint of the shared edge.
  CHECK(norm(r.vertices[5] - Vec3{1.0, 0.5, 0.0}) <= 1e-15);
}

TEST_CASE("bisect: empty mark set leaves the mesh unchanged") {
  const Mesh m = generate_structured(DomainSpec::unit_cube(), {2, 2, 2});
  const Mesh r = bisect(m, MarkSet{});
  CHECK(r.tets == m.tets);
  CHECK(r.num_vertices() == m.num_vertices());
}

TEST_CASE("bisect: rejects bad input") {
  const Mesh m = generate_structured(DomainSpec::unit_cube(), {1, 1, 1});
  const std::vector<Index> out_of_range{6};
  CHECK_THROWS_AS(bisect_tracked(m, out_of_range), Error);
  Mesh corrupted = m;
  corrupted.marks[0].refinement_edge = {0, 0};
  const std::vector<Index> first{0};
  try {
    bisect_tracked(corrupted, first);
    FAIL("expected a topology error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kTopology);
  }
}

TEST_CASE("uniform refine: 8x tets, volume, shape") {
  Mesh m = generate_structured(DomainSpec::unit_cube(), {1, 1, 1});
  const double initial_angle = min_dihedral_angle(m);
  const double initial_h = diameters(m).h;
  for (int round = 1; round <= 3; ++round) {
    const Index before = m.num_tets();
    const BisectionResult r = uniform_refine_tracked(m);
    check_child_volumes(m, r);
    m = r.mesh;
    CHECK(m.num_tets() == 8 * before);
    CHECK(std::abs(total_volume(m) - 1.0) <= 1e-12);
    CHECK(topology_audit(m).ok);
    CHECK(min_dihedral_angle(m) >= 0.5 * initial_angle);
  }
  CHECK(m.num_tets() == 6 * 512);
  CHECK(diameters(m).h == doctest::Approx(initial_h / 8.0).epsilon(1e-12));
}

TEST_CASE("adaptive bisection keeps conformity, volume and shape for 12 rounds") {
  for (const DomainSpec& spec : {DomainSpec::fichera(), DomainSpec::unit_cube()}) {
    Mesh m = generate_structured(spec, {4, 4, 4});
    const double volume = total_volume(m);
    const Vec3 corner = spec.kind == DomainKind::kFichera ? Vec3{0.4, 0.5, 0.6} : Vec3{0.1, 0.9, 0.3};
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.5, 1.5);
    for (int round = 0; round < 12; ++round) {
      std::vector<double> eta(m.num_tets());
      for (Index t = 0; t < m.num_tets(); ++t) eta[t] = u(rng) / (1e-3 + norm(centroid(m, t) - corner));
      const MarkSet marks = mark(eta, 0.3);
      const BisectionResult r = bisect_tracked(m, marks.marked_tets);
      check_child_volumes(m, r);
      // Old vertices keep their ids and coordinates.
      for (Index v = 0; v < m.num_vertices(); ++v) CHECK(norm(r.mesh.vertices[v] - m.vertices[v]) == 0.0);
      // Every marked tet was split.
      std::vector<int> children(m.num_tets(), 0);
      for (Index p : r.parent) ++children[p];
      for (Index t : marks.marked_tets) CHECK(children[t] >= 2);
      m = r.mesh;
      const AuditReport audit = topology_audit(m);
      CHECK_MESSAGE(audit.ok, audit.message);
      CHECK(std::abs(total_volume(m) - volume) <= 1e-12 * volume);
      CHECK(min_dihedral_angle(m) * kDeg > 5.0);
      CHECK(euler_characteristic(m) == 1);
    }
  }
}
