#include "curlfem/curlfem.h"

#include <cmath>
#include <cstring>
#include <fstream>
#include <memory>
#include <new>
#include <numbers>
#include <string>
#include <vector>

#include "curlfem/eigensolver/eigensolver.hpp"
#include "curlfem/estimator/estimator.hpp"
#include "curlfem/linalg/cholesky.hpp"
#include "curlfem/mesh/mesh.hpp"
#include "curlfem/refine/refine.hpp"
#include "curlfem/study/study.hpp"

using namespace curlfem;

struct curlfem_mesh {
  mesh::Mesh mesh;
};

struct curlfem_solution {
  Index n_tets = 0;
  Index n_dofs = 0;
  std::vector<eigensolver::EigenPair> pairs;
  std::vector<estimator::IndicatorField> indicators;
};

struct curlfem_records {
  std::vector<study::RunRecord> records;
};

namespace {

thread_local std::string g_last_error;

curlfem_status fail(curlfem_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

template <typename F>
curlfem_status guarded(F&& body) {
  try {
    body();
    return CURLFEM_OK;
  } catch (const Error& e) {
    return fail(static_cast<curlfem_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(CURLFEM_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(CURLFEM_INTERNAL, e.what());
  } catch (...) {
    return fail(CURLFEM_INTERNAL, "unknown exception");
  }
}

void require(bool condition, const char* message) {
  if (!condition) throw Error(ErrorCode::kInvalidArgument, message);
}

mesh::DomainSpec domain_spec(curlfem_domain domain) {
  switch (domain) {
    case CURLFEM_DOMAIN_UNIT_CUBE:
      return mesh::DomainSpec::unit_cube();
    case CURLFEM_DOMAIN_FICHERA:
      return mesh::DomainSpec::fichera();
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown domain");
}

mesh::DomainKind domain_kind(curlfem_domain domain) { return domain_spec(domain).kind; }

char* copy_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

curlfem_run_record to_c(const study::RunRecord& r) {
  return {r.iteration, r.n_tets, r.n_dofs, r.lambda_h, r.eta, r.err_lambda, r.h, r.wall_time};
}

}  // namespace

extern "C" {

const char* curlfem_last_error(void) { return g_last_error.c_str(); }

const char* curlfem_status_name(curlfem_status status) {
  switch (status) {
    case CURLFEM_OK: return "ok";
    case CURLFEM_INVALID_ARGUMENT: return "invalid argument";
    case CURLFEM_PARSE: return "parse error";
    case CURLFEM_IO: return "i/o error";
    case CURLFEM_NOT_SPD: return "matrix not SPD";
    case CURLFEM_NO_CONVERGENCE: return "no convergence";
    case CURLFEM_TOPOLOGY: return "topology error";
    case CURLFEM_DEGENERATE: return "degenerate element";
    case CURLFEM_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* curlfem_version(void) { return "0.1.0"; }

int curlfem_cholmod_available(void) { return linalg::cholmod_available() ? 1 : 0; }

void curlfem_string_free(char* text) { delete[] text; }

curlfem_status curlfem_mesh_generate(curlfem_domain domain, int32_t nx, int32_t ny, int32_t nz, curlfem_mesh** out) {
  return guarded([&] {
    require(out != nullptr, "null output pointer");
    *out = nullptr;
    auto m = std::make_unique<curlfem_mesh>();
    m->mesh = mesh::generate_structured(domain_spec(domain), {nx, ny, nz});
    *out = m.release();
  });
}

curlfem_status curlfem_mesh_import_tetgen(const char* node_text, const char* ele_text, curlfem_mesh** out) {
  return guarded([&] {
    require(out != nullptr && node_text != nullptr && ele_text != nullptr, "null argument");
    *out = nullptr;
    auto m = std::make_unique<curlfem_mesh>();
    m->mesh = mesh::import_tetgen(node_text, ele_text);
    *out = m.release();
  });
}

curlfem_status curlfem_mesh_from_json(const char* json, curlfem_mesh** out) {
  return guarded([&] {
    require(out != nullptr && json != nullptr, "null argument");
    *out = nullptr;
    auto m = std::make_unique<curlfem_mesh>();
    m->mesh = mesh::from_json(json);
    *out = m.release();
  });
}

curlfem_status curlfem_mesh_to_json(const curlfem_mesh* m, char** out) {
  return guarded([&] {
    require(m != nullptr && out != nullptr, "null argument");
    *out = copy_string(mesh::to_json(m->mesh));
  });
}

curlfem_status curlfem_mesh_get_info(const curlfem_mesh* m, curlfem_mesh_info* out) {
  return guarded([&] {
    require(m != nullptr && out != nullptr, "null argument");
    const mesh::Mesh& mm = m->mesh;
    curlfem_mesh_info info{};
    info.n_vertices = mm.num_vertices();
    info.n_edges = mm.num_edges();
    info.n_faces = mm.num_faces();
    info.n_tets = mm.num_tets();
    for (char b : mm.boundary_face) info.n_boundary_faces += b ? 1 : 0;
    for (char b : mm.boundary_vertex) info.n_interior_vertices += b ? 0 : 1;
    info.volume = mesh::total_volume(mm);
    info.h = mm.num_tets() > 0 ? mesh::diameters(mm).h : 0.0;
    info.min_dihedral_deg = mm.num_tets() > 0 ? mesh::min_dihedral_angle(mm) * 180.0 / std::numbers::pi : 0.0;
    info.euler_characteristic = mesh::euler_characteristic(mm);
    *out = info;
  });
}

curlfem_status curlfem_mesh_audit(const curlfem_mesh* m) {
  return guarded([&] {
    require(m != nullptr, "null mesh");
    const mesh::AuditReport report = mesh::topology_audit(m->mesh);
    if (!report.ok) throw Error(ErrorCode::kTopology, report.message);
  });
}

curlfem_status curlfem_mesh_refine_uniform(const curlfem_mesh* m, curlfem_mesh** out) {
  return guarded([&] {
    require(m != nullptr && out != nullptr, "null argument");
    *out = nullptr;
    auto r = std::make_unique<curlfem_mesh>();
    r->mesh = refine::uniform_refine(m->mesh);
    *out = r.release();
  });
}

curlfem_status curlfem_mesh_refine_marked(const curlfem_mesh* m, const int32_t* tets, size_t count,
                                          curlfem_mesh** out) {
  return guarded([&] {
    require(m != nullptr && out != nullptr && (tets != nullptr || count == 0), "null argument");
    *out = nullptr;
    for (size_t i = 0; i < count; ++i) require(tets[i] >= 0 && tets[i] < m->mesh.num_tets(), "tet index out of range");
    auto r = std::make_unique<curlfem_mesh>();
    r->mesh = refine::bisect_tracked(m->mesh, std::span<const Index>(tets, count)).mesh;
    *out = r.release();
  });
}

void curlfem_mesh_free(curlfem_mesh* m) { delete m; }

void curlfem_solve_options_default(curlfem_solve_options* out) {
  if (!out) return;
  const eigensolver::SolveOptions d;
  *out = {d.nev, d.tol, d.seed};
}

curlfem_status curlfem_solve(const curlfem_mesh* m, const curlfem_solve_options* options, curlfem_solution** out) {
  return guarded([&] {
    require(m != nullptr && out != nullptr, "null argument");
    *out = nullptr;
    eigensolver::SolveOptions so;
    if (options) {
      so.nev = options->nev;
      so.tol = options->tol;
      so.seed = options->seed;
    }
    require(so.tol > 0.0, "tol must be positive");
    const fem::DofMap dofmap = fem::make_dofmap(m->mesh);
    const fem::AssembledSystem system = fem::assemble(m->mesh, dofmap);
    auto s = std::make_unique<curlfem_solution>();
    s->n_tets = m->mesh.num_tets();
    s->n_dofs = dofmap.n_dofs;
    s->pairs = eigensolver::MaxwellSolver(system).solve_smallest(so);
    for (const auto& p : s->pairs) s->indicators.push_back(estimator::compute_indicators(m->mesh, dofmap, p));
    *out = s.release();
  });
}

int64_t curlfem_solution_n_dofs(const curlfem_solution* s) { return s ? s->n_dofs : 0; }

int32_t curlfem_solution_count(const curlfem_solution* s) { return s ? static_cast<int32_t>(s->pairs.size()) : 0; }

curlfem_status curlfem_solution_get(const curlfem_solution* s, int32_t index, curlfem_eigenpair_info* out) {
  return guarded([&] {
    require(s != nullptr && out != nullptr, "null argument");
    require(index >= 0 && index < static_cast<int32_t>(s->pairs.size()), "pair index out of range");
    *out = {s->pairs[index].lambda_h, s->pairs[index].residual, s->indicators[index].eta};
  });
}

curlfem_status curlfem_solution_coefficients(const curlfem_solution* s, int32_t index, double* coeffs,
                                             size_t capacity) {
  return guarded([&] {
    require(s != nullptr && coeffs != nullptr, "null argument");
    require(index >= 0 && index < static_cast<int32_t>(s->pairs.size()), "pair index out of range");
    const auto& u = s->pairs[index].u_coeffs;
    require(capacity >= u.size(), "buffer too small");
    std::copy(u.begin(), u.end(), coeffs);
  });
}

curlfem_status curlfem_solution_indicators(const curlfem_solution* s, int32_t index, double* eta_k, size_t capacity) {
  return guarded([&] {
    require(s != nullptr && eta_k != nullptr, "null argument");
    require(index >= 0 && index < static_cast<int32_t>(s->pairs.size()), "pair index out of range");
    const auto& e = s->indicators[index].eta_k;
    require(capacity >= e.size(), "buffer too small");
    std::copy(e.begin(), e.end(), eta_k);
  });
}

void curlfem_solution_free(curlfem_solution* s) { delete s; }

curlfem_status curlfem_study_config_default(curlfem_domain domain, curlfem_study_config* out) {
  return guarded([&] {
    require(out != nullptr, "null argument");
    const study::StudyConfig c = study::StudyConfig::defaults_for(domain_kind(domain));
    curlfem_study_config r{};
    r.domain = domain;
    for (int i = 0; i < 3; ++i) r.divisions[i] = c.divisions[i];
    r.mode = c.mode == study::Mode::kUniform ? CURLFEM_MODE_UNIFORM : CURLFEM_MODE_ADAPTIVE;
    r.theta = c.theta;
    r.max_iters = c.max_iters;
    r.max_tets = c.max_tets;
    r.target_lambda = c.target_lambda;
    r.lambda_ref = c.lambda_ref;
    r.nev = c.nev;
    r.tol = c.tol;
    r.seed = c.seed;
    r.record_timing = c.record_timing ? 1 : 0;
    *out = r;
  });
}

curlfem_status curlfem_study_run(const curlfem_study_config* config, const char* csv_path,
                                 curlfem_level_callback on_level, void* user, curlfem_records** out) {
  return guarded([&] {
    require(config != nullptr && out != nullptr, "null argument");
    *out = nullptr;
    require(config->mode == CURLFEM_MODE_UNIFORM || config->mode == CURLFEM_MODE_ADAPTIVE, "unknown mode");
    study::StudyConfig c;
    c.domain = domain_spec(config->domain);
    c.divisions = {config->divisions[0], config->divisions[1], config->divisions[2]};
    c.mode = config->mode == CURLFEM_MODE_UNIFORM ? study::Mode::kUniform : study::Mode::kAdaptive;
    c.theta = config->theta;
    c.max_iters = config->max_iters;
    c.max_tets = config->max_tets;
    c.target_lambda = config->target_lambda;
    c.lambda_ref = config->lambda_ref;
    c.nev = config->nev;
    c.tol = config->tol;
    c.seed = config->seed;
    c.record_timing = config->record_timing != 0;
    require(c.tol > 0.0, "tol must be positive");

    std::ofstream file;
    if (csv_path) {
      file.open(csv_path, std::ios::binary | std::ios::trunc);
      if (!file) throw Error(ErrorCode::kIo, std::string("cannot open ") + csv_path);
    }
    study::LevelObserver observer;
    if (on_level) {
      observer = [&](const study::LevelView& view) {
        const curlfem_run_record r = to_c(view.record);
        on_level(&r, user);
      };
    }
    auto r = std::make_unique<curlfem_records>();
    r->records = study::run_study(c, csv_path ? &file : nullptr, observer);
    if (csv_path && !file) throw Error(ErrorCode::kIo, std::string("write failed: ") + csv_path);
    *out = r.release();
  });
}

curlfem_status curlfem_records_from_csv(const char* csv_text, curlfem_records** out) {
  return guarded([&] {
    require(csv_text != nullptr && out != nullptr, "null argument");
    *out = nullptr;
    auto r = std::make_unique<curlfem_records>();
    r->records = study::read_csv(csv_text);
    *out = r.release();
  });
}

curlfem_status curlfem_records_to_csv(const curlfem_records* records, char** out) {
  return guarded([&] {
    require(records != nullptr && out != nullptr, "null argument");
    std::string s = std::string(study::kCsvHeader) + "\n";
    for (const auto& r : records->records) s += study::csv_row(r) + "\n";
    *out = copy_string(s);
  });
}

size_t curlfem_records_count(const curlfem_records* records) { return records ? records->records.size() : 0; }

curlfem_status curlfem_records_get(const curlfem_records* records, size_t index, curlfem_run_record* out) {
  return guarded([&] {
    require(records != nullptr && out != nullptr, "null argument");
    require(index < records->records.size(), "record index out of range");
    *out = to_c(records->records[index]);
  });
}

curlfem_status curlfem_records_set_lambda_ref(curlfem_records* records, double lambda_ref) {
  return guarded([&] {
    require(records != nullptr, "null argument");
    require(std::isfinite(lambda_ref), "lambda_ref must be finite");
    for (auto& r : records->records) r.err_lambda = std::abs(r.lambda_h - lambda_ref);
  });
}

void curlfem_records_free(curlfem_records* records) { delete records; }

curlfem_status curlfem_fit_slope(const curlfem_records* records, const char* x, const char* y, size_t skip,
                                 curlfem_slope_fit* out) {
  return guarded([&] {
    require(records != nullptr && x != nullptr && y != nullptr && out != nullptr, "null argument");
    const study::SlopeFit f = study::fit_slope(records->records, x, y, skip);
    *out = {f.slope, f.intercept, f.r2};
  });
}

curlfem_status curlfem_extrapolate_lambda(const curlfem_records* records, curlfem_extrapolation* out) {
  return guarded([&] {
    require(records != nullptr && out != nullptr, "null argument");
    const study::Extrapolation e = study::extrapolate_lambda(records->records);
    curlfem_extrapolation r{};
    r.lambda_ref = e.lambda_ref;
    r.rate = e.rate;
    r.constant = e.constant;
    r.degenerate = e.degenerate ? 1 : 0;
    r.fallback = e.fallback ? 1 : 0;
    std::strncpy(r.warning, e.warning.c_str(), sizeof(r.warning) - 1);
    *out = r;
  });
}

}  // extern "C"
