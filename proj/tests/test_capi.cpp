// Exercises the shared library through its C header only.
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "curlfem/curlfem.h"

namespace {

std::string slurp(const char* path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void count_levels(const curlfem_run_record* r, void* user) {
  auto* seen = static_cast<std::vector<int>*>(user);
  seen->push_back(r->iteration);
}

}  // namespace

TEST_CASE("status names and version") {
  CHECK(std::string(curlfem_status_name(CURLFEM_OK)) == "ok");
  CHECK(std::string(curlfem_status_name(CURLFEM_TOPOLOGY)) == "topology error");
  CHECK(std::string(curlfem_version()).size() > 0);
  CHECK(curlfem_cholmod_available() >= 0);
}

TEST_CASE("argument errors set the last error") {
  curlfem_mesh* m = nullptr;
  CHECK(curlfem_mesh_generate(CURLFEM_DOMAIN_UNIT_CUBE, 0, 2, 2, &m) == CURLFEM_INVALID_ARGUMENT);
  CHECK(m == nullptr);
  CHECK(std::strlen(curlfem_last_error()) > 0);
  CHECK(curlfem_mesh_generate(static_cast<curlfem_domain>(7), 2, 2, 2, &m) == CURLFEM_INVALID_ARGUMENT);
  CHECK(curlfem_mesh_generate(CURLFEM_DOMAIN_UNIT_CUBE, 2, 2, 2, nullptr) == CURLFEM_INVALID_ARGUMENT);
  CHECK(curlfem_mesh_from_json("{not json", &m) == CURLFEM_PARSE);
  CHECK(curlfem_mesh_import_tetgen("1 3 0 0\n", "", &m) == CURLFEM_PARSE);
  curlfem_records* r = nullptr;
  CHECK(curlfem_records_from_csv("a,b\n", &r) == CURLFEM_PARSE);
  CHECK(r == nullptr);
  // Null handles are accepted by the free functions and counters.
  curlfem_mesh_free(nullptr);
  curlfem_solution_free(nullptr);
  curlfem_records_free(nullptr);
  CHECK(curlfem_records_count(nullptr) == 0);
}

TEST_CASE("mesh lifecycle") {
  curlfem_mesh* m = nullptr;
  REQUIRE(curlfem_mesh_generate(CURLFEM_DOMAIN_FICHERA, 2, 2, 2, &m) == CURLFEM_OK);
  curlfem_mesh_info info{};
  REQUIRE(curlfem_mesh_get_info(m, &info) == CURLFEM_OK);
  CHECK(info.n_tets == 42);
  CHECK(info.volume == doctest::Approx(0.84));
  CHECK(info.euler_characteristic == 1);
  CHECK(info.n_vertices - info.n_edges + info.n_faces - info.n_tets == 1);
  CHECK(curlfem_mesh_audit(m) == CURLFEM_OK);

  curlfem_mesh* fine = nullptr;
  REQUIRE(curlfem_mesh_refine_uniform(m, &fine) == CURLFEM_OK);
  curlfem_mesh_info fi{};
  curlfem_mesh_get_info(fine, &fi);
  CHECK(fi.n_tets == 8 * info.n_tets);
  CHECK(fi.volume == doctest::Approx(info.volume).epsilon(1e-12));

  const int32_t marked[] = {0, 5};
  curlfem_mesh* local = nullptr;
  REQUIRE(curlfem_mesh_refine_marked(m, marked, 2, &local) == CURLFEM_OK);
  curlfem_mesh_info li{};
  curlfem_mesh_get_info(local, &li);
  CHECK(li.n_tets > info.n_tets);
  CHECK(curlfem_mesh_audit(local) == CURLFEM_OK);
  const int32_t bad[] = {42};
  curlfem_mesh* none = nullptr;
  CHECK(curlfem_mesh_refine_marked(m, bad, 1, &none) == CURLFEM_INVALID_ARGUMENT);

  char* json = nullptr;
  REQUIRE(curlfem_mesh_to_json(local, &json) == CURLFEM_OK);
  curlfem_mesh* back = nullptr;
  REQUIRE(curlfem_mesh_from_json(json, &back) == CURLFEM_OK);
  curlfem_mesh_info bi{};
  curlfem_mesh_get_info(back, &bi);
  CHECK(bi.n_tets == li.n_tets);
  CHECK(bi.n_edges == li.n_edges);
  curlfem_string_free(json);

  curlfem_mesh_free(back);
  curlfem_mesh_free(local);
  curlfem_mesh_free(fine);
  curlfem_mesh_free(m);
}

TEST_CASE("solve") {
  curlfem_mesh* m = nullptr;
  REQUIRE(curlfem_mesh_generate(CURLFEM_DOMAIN_UNIT_CUBE, 4, 4, 4, &m) == CURLFEM_OK);
  curlfem_solve_options o;
  curlfem_solve_options_default(&o);
  o.nev = 3;
  curlfem_solution* s = nullptr;
  REQUIRE(curlfem_solve(m, &o, &s) == CURLFEM_OK);
  REQUIRE(curlfem_solution_count(s) == 3);
  double prev = 0.0;
  for (int32_t k = 0; k < 3; ++k) {
    curlfem_eigenpair_info p{};
    REQUIRE(curlfem_solution_get(s, k, &p) == CURLFEM_OK);
    CHECK(p.lambda_h >= prev);
    CHECK(p.lambda_h == doctest::Approx(2.0 * M_PI * M_PI).epsilon(0.1));
    CHECK(p.residual <= o.tol);
    CHECK(p.eta > 0.0);
    prev = p.lambda_h;
  }
  std::vector<double> u(curlfem_solution_n_dofs(s));
  CHECK(curlfem_solution_coefficients(s, 0, u.data(), u.size()) == CURLFEM_OK);
  CHECK(curlfem_solution_coefficients(s, 0, u.data(), u.size() - 1) == CURLFEM_INVALID_ARGUMENT);
  std::vector<double> eta(384);
  CHECK(curlfem_solution_indicators(s, 1, eta.data(), eta.size()) == CURLFEM_OK);
  double sum = 0.0;
  for (double e : eta) sum += e * e;
  curlfem_eigenpair_info p1{};
  curlfem_solution_get(s, 1, &p1);
  CHECK(std::sqrt(sum) == doctest::Approx(p1.eta).epsilon(1e-12));
  curlfem_eigenpair_info dummy{};
  CHECK(curlfem_solution_get(s, 3, &dummy) == CURLFEM_INVALID_ARGUMENT);
  curlfem_solution_free(s);

  o.tol = -1.0;
  CHECK(curlfem_solve(m, &o, &s) == CURLFEM_INVALID_ARGUMENT);
  curlfem_mesh_free(m);
}

TEST_CASE("study, records and fits") {
  curlfem_study_config c{};
  REQUIRE(curlfem_study_config_default(CURLFEM_DOMAIN_FICHERA, &c) == CURLFEM_OK);
  CHECK(c.theta == 0.5);
  CHECK(c.lambda_ref == 12.92);
  c.max_iters = 4;
  const char* path = "capi_study.csv";
  std::vector<int> seen;
  curlfem_records* r = nullptr;
  REQUIRE(curlfem_study_run(&c, path, count_levels, &seen, &r) == CURLFEM_OK);
  CHECK(seen == std::vector<int>{0, 1, 2, 3});
  REQUIRE(curlfem_records_count(r) == 4);

  char* csv = nullptr;
  REQUIRE(curlfem_records_to_csv(r, &csv) == CURLFEM_OK);
  CHECK(slurp(path) == csv);
  curlfem_records* back = nullptr;
  REQUIRE(curlfem_records_from_csv(csv, &back) == CURLFEM_OK);
  curlfem_string_free(csv);
  curlfem_run_record a{}, b{};
  curlfem_records_get(r, 3, &a);
  curlfem_records_get(back, 3, &b);
  CHECK(std::memcmp(&a, &b, sizeof(a)) == 0);
  CHECK(a.err_lambda == std::abs(a.lambda_h - 12.92));

  REQUIRE(curlfem_records_set_lambda_ref(back, 13.0) == CURLFEM_OK);
  curlfem_records_get(back, 3, &b);
  CHECK(b.err_lambda == std::abs(b.lambda_h - 13.0));

  curlfem_slope_fit f{};
  REQUIRE(curlfem_fit_slope(r, "n_tets", "eta", 0, &f) == CURLFEM_OK);
  CHECK(f.slope < 0.0);
  CHECK(curlfem_fit_slope(r, "n_tets", "bogus", 0, &f) == CURLFEM_INVALID_ARGUMENT);
  CHECK(curlfem_fit_slope(r, "n_tets", "eta", 2, &f) == CURLFEM_INVALID_ARGUMENT);
  curlfem_extrapolation e{};
  CHECK(curlfem_extrapolate_lambda(r, &e) == CURLFEM_OK);
  CHECK(std::isfinite(e.lambda_ref));

  curlfem_records_free(back);
  curlfem_records_free(r);
  std::remove(path);

  c.theta = 2.0;
  CHECK(curlfem_study_run(&c, nullptr, nullptr, nullptr, &r) == CURLFEM_INVALID_ARGUMENT);
  CHECK(r == nullptr);
  c.theta = 0.5;
  CHECK(curlfem_study_run(&c, "/nonexistent-dir/x.csv", nullptr, nullptr, &r) == CURLFEM_IO);
}
