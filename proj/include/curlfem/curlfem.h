#ifndef CURLFEM_CURLFEM_H
#define CURLFEM_CURLFEM_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define CURLFEM_API __declspec(dllexport)
#else
#define CURLFEM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Every fallible call returns a status; on failure curlfem_last_error()
   holds the message for the calling thread until its next failing call. */
typedef enum curlfem_status {
  CURLFEM_OK = 0,
  CURLFEM_INVALID_ARGUMENT = 1,
  CURLFEM_PARSE = 2,
  CURLFEM_IO = 3,
  CURLFEM_NOT_SPD = 4,
  CURLFEM_NO_CONVERGENCE = 5,
  CURLFEM_TOPOLOGY = 6,
  CURLFEM_DEGENERATE = 7,
  CURLFEM_INTERNAL = 8
} curlfem_status;

typedef enum curlfem_domain {
  CURLFEM_DOMAIN_UNIT_CUBE = 0,
  CURLFEM_DOMAIN_FICHERA = 1
} curlfem_domain;

typedef enum curlfem_mode { CURLFEM_MODE_UNIFORM = 0, CURLFEM_MODE_ADAPTIVE = 1 } curlfem_mode;

typedef struct curlfem_mesh curlfem_mesh;
typedef struct curlfem_solution curlfem_solution;
typedef struct curlfem_records curlfem_records;

CURLFEM_API const char* curlfem_last_error(void);
CURLFEM_API const char* curlfem_status_name(curlfem_status status);
CURLFEM_API const char* curlfem_version(void);
/* 0 when the CHOLMOD self-check failed and factorizations use the native
   LDL^T path (see OPENBLAS_CORETYPE in the README). */
CURLFEM_API int curlfem_cholmod_available(void);

/* Strings returned through char** are owned by the caller. */
CURLFEM_API void curlfem_string_free(char* text);

/* ---- meshes ---- */

typedef struct curlfem_mesh_info {
  int64_t n_vertices;
  int64_t n_edges;
  int64_t n_faces;
  int64_t n_tets;
  int64_t n_boundary_faces;
  int64_t n_interior_vertices;
  double volume;
  double h;
  double min_dihedral_deg;
  int64_t euler_characteristic;
} curlfem_mesh_info;

CURLFEM_API curlfem_status curlfem_mesh_generate(curlfem_domain domain, int32_t nx, int32_t ny, int32_t nz,
                                                 curlfem_mesh** out);
CURLFEM_API curlfem_status curlfem_mesh_import_tetgen(const char* node_text, const char* ele_text,
                                                      curlfem_mesh** out);
CURLFEM_API curlfem_status curlfem_mesh_from_json(const char* json, curlfem_mesh** out);
CURLFEM_API curlfem_status curlfem_mesh_to_json(const curlfem_mesh* mesh, char** out);
CURLFEM_API curlfem_status curlfem_mesh_get_info(const curlfem_mesh* mesh, curlfem_mesh_info* out);
/* Fails with CURLFEM_TOPOLOGY and the first violation when the mesh is not conforming. */
CURLFEM_API curlfem_status curlfem_mesh_audit(const curlfem_mesh* mesh);
CURLFEM_API curlfem_status curlfem_mesh_refine_uniform(const curlfem_mesh* mesh, curlfem_mesh** out);
/* Bisects the given tets and whatever closure conformity requires. */
CURLFEM_API curlfem_status curlfem_mesh_refine_marked(const curlfem_mesh* mesh, const int32_t* tets, size_t count,
                                                      curlfem_mesh** out);
CURLFEM_API void curlfem_mesh_free(curlfem_mesh* mesh);

/* ---- eigensolves ---- */

typedef struct curlfem_solve_options {
  int32_t nev;
  double tol;
  uint64_t seed;
} curlfem_solve_options;

typedef struct curlfem_eigenpair_info {
  double lambda_h;
  double residual;
  double eta; /* estimator applied to this pair */
} curlfem_eigenpair_info;

CURLFEM_API void curlfem_solve_options_default(curlfem_solve_options* out);
CURLFEM_API curlfem_status curlfem_solve(const curlfem_mesh* mesh, const curlfem_solve_options* options,
                                         curlfem_solution** out);
CURLFEM_API int64_t curlfem_solution_n_dofs(const curlfem_solution* solution);
CURLFEM_API int32_t curlfem_solution_count(const curlfem_solution* solution);
CURLFEM_API curlfem_status curlfem_solution_get(const curlfem_solution* solution, int32_t index,
                                                curlfem_eigenpair_info* out);
/* Copies n_dofs coefficients of pair `index` into `coeffs`. */
CURLFEM_API curlfem_status curlfem_solution_coefficients(const curlfem_solution* solution, int32_t index,
                                                         double* coeffs, size_t capacity);
/* Per-tet indicators eta_K of pair `index`; capacity must be at least n_tets. */
CURLFEM_API curlfem_status curlfem_solution_indicators(const curlfem_solution* solution, int32_t index,
                                                       double* eta_k, size_t capacity);
CURLFEM_API void curlfem_solution_free(curlfem_solution* solution);

/* ---- studies ---- */

typedef struct curlfem_study_config {
  curlfem_domain domain;
  int32_t divisions[3];
  curlfem_mode mode;
  double theta;
  int32_t max_iters;
  int32_t max_tets;
  double target_lambda;
  double lambda_ref;
  int32_t nev;
  double tol;
  uint64_t seed;
  int record_timing;
} curlfem_study_config;

typedef struct curlfem_run_record {
  int32_t iteration;
  int32_t n_tets;
  int32_t n_dofs;
  double lambda_h;
  double eta;
  double err_lambda;
  double h;
  double wall_time;
} curlfem_run_record;

typedef void (*curlfem_level_callback)(const curlfem_run_record* record, void* user);

CURLFEM_API curlfem_status curlfem_study_config_default(curlfem_domain domain, curlfem_study_config* out);
/* csv_path may be NULL. Rows are flushed per level; on failure the file keeps
   the finished rows and *out is left NULL. */
CURLFEM_API curlfem_status curlfem_study_run(const curlfem_study_config* config, const char* csv_path,
                                             curlfem_level_callback on_level, void* user, curlfem_records** out);
CURLFEM_API curlfem_status curlfem_records_from_csv(const char* csv_text, curlfem_records** out);
CURLFEM_API curlfem_status curlfem_records_to_csv(const curlfem_records* records, char** out);
CURLFEM_API size_t curlfem_records_count(const curlfem_records* records);
CURLFEM_API curlfem_status curlfem_records_get(const curlfem_records* records, size_t index,
                                               curlfem_run_record* out);
/* Recomputes err_lambda = |lambda_h - lambda_ref| for every record. */
CURLFEM_API curlfem_status curlfem_records_set_lambda_ref(curlfem_records* records, double lambda_ref);
CURLFEM_API void curlfem_records_free(curlfem_records* records);

typedef struct curlfem_slope_fit {
  double slope;
  double intercept;
  double r2;
} curlfem_slope_fit;

/* x and y name CSV columns. */
CURLFEM_API curlfem_status curlfem_fit_slope(const curlfem_records* records, const char* x, const char* y,
                                             size_t skip, curlfem_slope_fit* out);

typedef struct curlfem_extrapolation {
  double lambda_ref;
  double rate;
  double constant;
  int degenerate;
  int fallback;
  char warning[128];
} curlfem_extrapolation;

CURLFEM_API curlfem_status curlfem_extrapolate_lambda(const curlfem_records* records, curlfem_extrapolation* out);

#ifdef __cplusplus
}
#endif

#endif
