#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "curlfem/curlfem.h"

namespace {

struct Failure {
  curlfem_status status;
};

void check(curlfem_status status) {
  if (status != CURLFEM_OK) throw Failure{status};
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !(out << text)) throw std::runtime_error("cannot write " + path);
}

curlfem_domain parse_domain(const std::string& name) {
  if (name == "cube" || name == "unit_cube") return CURLFEM_DOMAIN_UNIT_CUBE;
  if (name == "fichera") return CURLFEM_DOMAIN_FICHERA;
  throw CLI::ValidationError("--domain", "expected cube or fichera, got '" + name + "'");
}

// "4" means 4,4,4.
std::array<int32_t, 3> expand_divisions(const std::vector<int32_t>& d) {
  if (d.size() == 1) return {d[0], d[0], d[0]};
  if (d.size() == 3) return {d[0], d[1], d[2]};
  throw CLI::ValidationError("--divisions", "expected one or three integers");
}

void warn_backend() {
  if (!curlfem_cholmod_available()) {
    std::cerr << "warning: CHOLMOD self-check failed, using the native factorization (much slower); "
                 "try OPENBLAS_CORETYPE=Haswell\n";
  }
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

class MeshHandle {
 public:
  MeshHandle() = default;
  MeshHandle(const MeshHandle&) = delete;
  MeshHandle& operator=(const MeshHandle&) = delete;
  ~MeshHandle() { curlfem_mesh_free(p_); }
  curlfem_mesh** out() {
    curlfem_mesh_free(p_);
    p_ = nullptr;
    return &p_;
  }
  const curlfem_mesh* get() const { return p_; }
  void reset(curlfem_mesh* m) {
    curlfem_mesh_free(p_);
    p_ = m;
  }

 private:
  curlfem_mesh* p_ = nullptr;
};

void print_mesh_info(const curlfem_mesh* mesh) {
  curlfem_mesh_info info;
  check(curlfem_mesh_get_info(mesh, &info));
  std::cout << "tets " << info.n_tets << "\nvertices " << info.n_vertices << "\nedges " << info.n_edges << "\nfaces "
            << info.n_faces << "\nboundary_faces " << info.n_boundary_faces << "\ninterior_vertices "
            << info.n_interior_vertices << "\nvolume " << fmt(info.volume) << "\nh " << fmt(info.h)
            << "\nmin_dihedral_deg " << fmt(info.min_dihedral_deg) << "\neuler " << info.euler_characteristic
            << "\n";
}

void finish_mesh(MeshHandle& mesh, int refine, const std::string& out) {
  for (int i = 0; i < refine; ++i) {
    curlfem_mesh* next = nullptr;
    check(curlfem_mesh_refine_uniform(mesh.get(), &next));
    mesh.reset(next);
  }
  check(curlfem_mesh_audit(mesh.get()));
  print_mesh_info(mesh.get());
  if (!out.empty()) {
    char* json = nullptr;
    check(curlfem_mesh_to_json(mesh.get(), &json));
    std::string text(json);
    curlfem_string_free(json);
    write_file(out, text);
  }
}

struct RecordsHandle {
  curlfem_records* p = nullptr;
  ~RecordsHandle() { curlfem_records_free(p); }
};

void write_plot(const std::string& path, const curlfem_records* records, const std::string& x, const std::string& y,
                size_t skip, const curlfem_slope_fit& fit) {
  auto field = [](const curlfem_run_record& r, const std::string& name) -> double {
    if (name == "iter") return r.iteration;
    if (name == "n_tets") return r.n_tets;
    if (name == "n_dofs") return r.n_dofs;
    if (name == "lambda_h") return r.lambda_h;
    if (name == "eta") return r.eta;
    if (name == "err_lambda") return r.err_lambda;
    if (name == "h") return r.h;
    return r.wall_time;
  };
  std::ostringstream s;
  s << "# " << x << " " << y << "\n";
  std::vector<double> xs;
  for (size_t i = skip; i < curlfem_records_count(records); ++i) {
    curlfem_run_record r;
    check(curlfem_records_get(records, i, &r));
    xs.push_back(field(r, x));
    s << fmt(field(r, x)) << " " << fmt(field(r, y)) << "\n";
  }
  // Second gnuplot data block: the fitted line at the end points.
  s << "\n\n# fit slope " << fmt(fit.slope) << " intercept " << fmt(fit.intercept) << "\n";
  for (double v : {xs.front(), xs.back()}) s << fmt(v) << " " << fmt(std::exp(fit.intercept) * std::pow(v, fit.slope)) << "\n";
  write_file(path, s.str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive edge-element eigensolver for the Maxwell cavity problem"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(curlfem_version()));

  std::string domain = "fichera";
  std::vector<int32_t> divisions{4};
  std::string out;

  // mesh gen / mesh import
  CLI::App* mesh_cmd = app.add_subcommand("mesh", "Generate or import meshes");
  mesh_cmd->require_subcommand(1);
  CLI::App* gen = mesh_cmd->add_subcommand("gen", "Structured mesh of a domain");
  int refine = 0;
  gen->add_option("--domain", domain, "cube or fichera")->capture_default_str();
  gen->add_option("--divisions", divisions, "Cells per axis: n or nx,ny,nz")->delimiter(',')->capture_default_str();
  gen->add_option("--refine", refine, "Uniform bisection rounds applied afterwards")->check(CLI::NonNegativeNumber);
  gen->add_option("--out", out, "Write the mesh as JSON");
  CLI::App* imp = mesh_cmd->add_subcommand("import", "Read TetGen .node/.ele files");
  std::string node_path, ele_path;
  imp->add_option("--node", node_path, "TetGen .node file")->required()->check(CLI::ExistingFile);
  imp->add_option("--ele", ele_path, "TetGen .ele file")->required()->check(CLI::ExistingFile);
  imp->add_option("--out", out, "Write the mesh as JSON");

  // solve
  CLI::App* solve = app.add_subcommand("solve", "Smallest positive eigenvalues on one mesh");
  std::string mesh_path;
  curlfem_solve_options so;
  curlfem_solve_options_default(&so);
  double lambda_ref = NAN;
  solve->add_option("--domain", domain, "cube or fichera")->capture_default_str();
  solve->add_option("--divisions", divisions, "Cells per axis: n or nx,ny,nz")->delimiter(',')->capture_default_str();
  solve->add_option("--mesh", mesh_path, "Mesh JSON instead of --domain/--divisions")->check(CLI::ExistingFile);
  solve->add_option("--nev", so.nev, "Number of eigenpairs")->capture_default_str()->check(CLI::PositiveNumber);
  solve->add_option("--tol", so.tol, "Residual bound per pair")->capture_default_str()->check(CLI::PositiveNumber);
  solve->add_option("--seed", so.seed, "Lanczos start vector seed")->capture_default_str();
  solve->add_option("--lambda-ref", lambda_ref, "Also print |lambda_h - lambda_ref|");

  // study
  CLI::App* study = app.add_subcommand("study", "Adaptive or uniform refinement study, CSV output");
  std::string mode = "adaptive";
  double theta = 0.5, tol = 1e-8, target = NAN;
  int32_t max_iters = 10, max_tets = 400000, nev = 0;
  uint64_t seed = 1;
  bool timing = false;
  study->add_option("--domain", domain, "cube or fichera")->capture_default_str();
  study->add_option("--divisions", divisions, "Start mesh cells per axis (default: per domain)")->delimiter(',');
  study->add_option("--mode", mode, "adaptive or uniform")->capture_default_str()->check(CLI::IsMember({"adaptive", "uniform"}));
  study->add_option("--theta", theta, "Marking fraction in (0, 1]")->capture_default_str()->check(CLI::Range(0.0, 1.0));
  study->add_option("--max-iters", max_iters, "Number of solved levels")->capture_default_str()->check(CLI::PositiveNumber);
  study->add_option("--max-tets", max_tets, "Stop before solving a larger mesh")->capture_default_str()->check(CLI::NonNegativeNumber);
  study->add_option("--nev", nev, "Eigenpairs per level (default: per domain)")->check(CLI::PositiveNumber);
  study->add_option("--tol", tol, "Residual bound per pair")->capture_default_str()->check(CLI::PositiveNumber);
  study->add_option("--seed", seed, "Lanczos start vector seed")->capture_default_str();
  study->add_option("--lambda-ref", lambda_ref, "Reference for err_lambda (default: per domain)");
  study->add_option("--target-lambda", target, "Track the eigenvalue closest to this (default: per domain)");
  study->add_option("--out", out, "CSV path (default: stdout)");
  study->add_flag("--timing", timing, "Record wall times instead of 0 in the CSV");

  // fit
  CLI::App* fit = app.add_subcommand("fit", "Log-log slope of a study CSV");
  std::string in_path, x_name = "n_tets", y_name = "err_lambda", plot_path;
  size_t skip = 0;
  bool extrapolate = false;
  const auto columns = CLI::IsMember({"iter", "n_tets", "n_dofs", "lambda_h", "eta", "err_lambda", "h", "wall_time"});
  fit->add_option("--in", in_path, "Study CSV")->required()->check(CLI::ExistingFile);
  fit->add_option("--x", x_name, "Column for x")->capture_default_str()->check(columns);
  fit->add_option("--y", y_name, "Column for y")->capture_default_str()->check(columns);
  fit->add_option("--skip", skip, "Drop the first rows")->capture_default_str();
  fit->add_option("--lambda-ref", lambda_ref, "Recompute err_lambda against this value");
  fit->add_flag("--extrapolate", extrapolate, "Extrapolate lambda from the rows and use it as the reference");
  fit->add_option("--emit-plot", plot_path, "Write two-column data and the fitted line for gnuplot");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      const auto d = expand_divisions(divisions);
      MeshHandle mesh;
      check(curlfem_mesh_generate(parse_domain(domain), d[0], d[1], d[2], mesh.out()));
      finish_mesh(mesh, refine, out);
    } else if (imp->parsed()) {
      MeshHandle mesh;
      check(curlfem_mesh_import_tetgen(read_file(node_path).c_str(), read_file(ele_path).c_str(), mesh.out()));
      finish_mesh(mesh, 0, out);
    } else if (solve->parsed()) {
      warn_backend();
      MeshHandle mesh;
      if (!mesh_path.empty()) {
        check(curlfem_mesh_from_json(read_file(mesh_path).c_str(), mesh.out()));
      } else {
        const auto d = expand_divisions(divisions);
        check(curlfem_mesh_generate(parse_domain(domain), d[0], d[1], d[2], mesh.out()));
      }
      curlfem_solution* sol = nullptr;
      const curlfem_status st = curlfem_solve(mesh.get(), &so, &sol);
      check(st);
      std::cout << "n_dofs " << curlfem_solution_n_dofs(sol) << "\n";
      std::cout << "k lambda_h residual eta" << (std::isnan(lambda_ref) ? "" : " err_lambda") << "\n";
      for (int32_t k = 0; k < curlfem_solution_count(sol); ++k) {
        curlfem_eigenpair_info p;
        check(curlfem_solution_get(sol, k, &p));
        std::cout << k << " " << fmt(p.lambda_h) << " " << fmt(p.residual) << " " << fmt(p.eta);
        if (!std::isnan(lambda_ref)) std::cout << " " << fmt(std::abs(p.lambda_h - lambda_ref));
        std::cout << "\n";
      }
      curlfem_solution_free(sol);
    } else if (study->parsed()) {
      warn_backend();
      curlfem_study_config c;
      check(curlfem_study_config_default(parse_domain(domain), &c));
      if (study->count("--divisions")) {
        const auto d = expand_divisions(divisions);
        for (int i = 0; i < 3; ++i) c.divisions[i] = d[i];
      }
      c.mode = mode == "uniform" ? CURLFEM_MODE_UNIFORM : CURLFEM_MODE_ADAPTIVE;
      c.theta = theta;
      c.max_iters = max_iters;
      c.max_tets = max_tets;
      if (nev > 0) c.nev = nev;
      c.tol = tol;
      c.seed = seed;
      if (!std::isnan(lambda_ref)) c.lambda_ref = lambda_ref;
      if (!std::isnan(target)) c.target_lambda = target;
      c.record_timing = timing ? 1 : 0;
      auto progress = [](const curlfem_run_record* r, void*) {
        std::cerr << "level " << r->iteration << ": tets " << r->n_tets << ", dofs " << r->n_dofs << ", lambda_h "
                  << fmt(r->lambda_h) << ", eta " << fmt(r->eta) << "\n";
      };
      RecordsHandle records;
      check(curlfem_study_run(&c, out.empty() ? nullptr : out.c_str(), progress, nullptr, &records.p));
      if (out.empty()) {
        char* csv = nullptr;
        check(curlfem_records_to_csv(records.p, &csv));
        std::cout << csv;
        curlfem_string_free(csv);
      }
    } else if (fit->parsed()) {
      RecordsHandle records;
      check(curlfem_records_from_csv(read_file(in_path).c_str(), &records.p));
      if (extrapolate) {
        curlfem_extrapolation e;
        check(curlfem_extrapolate_lambda(records.p, &e));
        if (e.warning[0]) std::cerr << "warning: " << e.warning << "\n";
        std::cout << "lambda_ref " << fmt(e.lambda_ref) << "\nrate " << fmt(e.rate) << "\n";
        if (std::isnan(lambda_ref)) lambda_ref = e.lambda_ref;
      }
      if (!std::isnan(lambda_ref)) check(curlfem_records_set_lambda_ref(records.p, lambda_ref));
      curlfem_slope_fit f;
      check(curlfem_fit_slope(records.p, x_name.c_str(), y_name.c_str(), skip, &f));
      std::cout << "slope " << fmt(f.slope) << "\nintercept " << fmt(f.intercept) << "\nr2 " << fmt(f.r2) << "\n";
      if (!plot_path.empty()) write_plot(plot_path, records.p, x_name, y_name, skip, f);
    }
  } catch (const Failure& f) {
    std::cerr << "error: " << curlfem_status_name(f.status) << ": " << curlfem_last_error() << "\n";
    return 1;
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
