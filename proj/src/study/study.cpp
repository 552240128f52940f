#include "curlfem/study/study.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>

#include "curlfem/linalg/dense.hpp"

namespace curlfem::study {

Mode parse_mode(const std::string& name) {
  if (name == "uniform") return Mode::kUniform;
  if (name == "adaptive") return Mode::kAdaptive;
  throw Error(ErrorCode::kInvalidArgument, "unknown mode '" + name + "'");
}

std::string to_string(Mode mode) { return mode == Mode::kUniform ? "uniform" : "adaptive"; }

StudyConfig StudyConfig::defaults_for(mesh::DomainKind kind) {
  StudyConfig c;
  switch (kind) {
    case mesh::DomainKind::kFichera:
      c.domain = mesh::DomainSpec::fichera();
      break;
    case mesh::DomainKind::kUnitCube:
      c.domain = mesh::DomainSpec::unit_cube();
      c.target_lambda = 19.74;
      c.lambda_ref = 2.0 * std::numbers::pi * std::numbers::pi;
      c.nev = 3;
      break;
    case mesh::DomainKind::kBox:
      c.domain = mesh::DomainSpec::box({0, 0, 0}, {1, 1, 1});
      c.divisions = {2, 2, 2};
      c.target_lambda = 0.0;
      c.lambda_ref = 2.0 * std::numbers::pi * std::numbers::pi;
      break;
  }
  return c;
}

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

std::string csv_row(const RunRecord& r) {
  std::string s = std::to_string(r.iteration) + "," + std::to_string(r.n_tets) + "," + std::to_string(r.n_dofs);
  for (double v : {r.lambda_h, r.eta, r.err_lambda, r.h, r.wall_time}) s += "," + format_double(v);
  return s;
}

namespace {

std::string trim(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
  return s.substr(i);
}

double parse_number(const std::string& tok) {
  const char* begin = tok.data();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (tok.empty() || end != begin + tok.size()) throw Error(ErrorCode::kParse, "csv: bad number '" + tok + "'");
  return v;
}

}  // namespace

std::vector<RunRecord> read_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || trim(line) != kCsvHeader) throw Error(ErrorCode::kParse, "csv: unexpected header");
  std::vector<RunRecord> out;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    std::vector<std::string> tok;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) tok.push_back(trim(cell));
    if (tok.size() != 8) throw Error(ErrorCode::kParse, "csv: expected 8 fields, got " + std::to_string(tok.size()));
    RunRecord r;
    r.iteration = static_cast<Index>(parse_number(tok[0]));
    r.n_tets = static_cast<Index>(parse_number(tok[1]));
    r.n_dofs = static_cast<Index>(parse_number(tok[2]));
    r.lambda_h = parse_number(tok[3]);
    r.eta = parse_number(tok[4]);
    r.err_lambda = parse_number(tok[5]);
    r.h = parse_number(tok[6]);
    r.wall_time = parse_number(tok[7]);
    out.push_back(r);
  }
  return out;
}

std::vector<RunRecord> run_study(const StudyConfig& config, std::ostream* csv, const LevelObserver& observer) {
  if (!(config.theta > 0.0 && config.theta <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "theta must lie in (0, 1]");
  if (config.max_iters < 1) throw Error(ErrorCode::kInvalidArgument, "max_iters must be >= 1");
  if (config.max_tets < 0) throw Error(ErrorCode::kInvalidArgument, "max_tets must be >= 0");
  if (config.nev < 1) throw Error(ErrorCode::kInvalidArgument, "nev must be >= 1");

  mesh::Mesh current = mesh::generate_structured(config.domain, config.divisions);
  std::vector<RunRecord> records;
  double previous = config.target_lambda;
  if (csv) *csv << kCsvHeader << '\n' << std::flush;

  for (Index it = 0;; ++it) {
    const auto start = std::chrono::steady_clock::now();
    const fem::DofMap dofmap = fem::make_dofmap(current);
    const fem::AssembledSystem system = fem::assemble(current, dofmap);
    const eigensolver::MaxwellSolver solver(system);
    eigensolver::SolveOptions so;
    so.nev = config.nev;
    so.tol = config.tol;
    so.seed = config.seed;
    const std::vector<eigensolver::EigenPair> pairs = solver.solve_smallest(so);
    std::size_t pick = 0;
    for (std::size_t i = 1; i < pairs.size(); ++i)
      if (std::abs(pairs[i].lambda_h - previous) < std::abs(pairs[pick].lambda_h - previous)) pick = i;
    const eigensolver::EigenPair& pair = pairs[pick];
    previous = pair.lambda_h;

    const estimator::IndicatorField indicators = estimator::compute_indicators(current, dofmap, pair);
    refine::MarkSet marks;
    marks.theta = config.theta;
    if (config.mode == Mode::kAdaptive) marks = refine::mark(indicators.eta_k, config.theta);

    RunRecord r;
    r.iteration = it;
    r.n_tets = current.num_tets();
    r.n_dofs = dofmap.n_dofs;
    r.lambda_h = pair.lambda_h;
    r.eta = indicators.eta;
    r.err_lambda = std::abs(pair.lambda_h - config.lambda_ref);
    r.h = mesh::diameters(current).h;
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    r.wall_time = config.record_timing ? elapsed : 0.0;
    records.push_back(r);
    if (csv) *csv << csv_row(r) << '\n' << std::flush;
    if (observer) observer(LevelView{records.back(), current, dofmap, pair, indicators, marks});

    if (it + 1 >= config.max_iters) break;
    if (config.mode == Mode::kUniform) {
      if (8.0 * current.num_tets() > config.max_tets) break;
      current = refine::uniform_refine(current);
    } else {
      if (marks.marked_tets.empty()) break;
      mesh::Mesh next = refine::bisect(current, marks);
      if (next.num_tets() > config.max_tets) break;
      current = std::move(next);
    }
  }
  return records;
}

double record_field(const RunRecord& r, const std::string& name) {
  if (name == "iter") return r.iteration;
  if (name == "n_tets") return r.n_tets;
  if (name == "n_dofs") return r.n_dofs;
  if (name == "lambda_h") return r.lambda_h;
  if (name == "eta") return r.eta;
  if (name == "err_lambda") return r.err_lambda;
  if (name == "h") return r.h;
  if (name == "wall_time") return r.wall_time;
  throw Error(ErrorCode::kInvalidArgument, "unknown record field '" + name + "'");
}

SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw Error(ErrorCode::kInvalidArgument, "fit: size mismatch");
  if (x.size() < 3) throw Error(ErrorCode::kInvalidArgument, "fit needs at least 3 points");
  const std::size_t n = x.size();
  std::vector<double> lx(n), ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw Error(ErrorCode::kInvalidArgument, "fit: non-positive value");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) throw Error(ErrorCode::kInvalidArgument, "fit: x values are all equal");
  SlopeFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
  return f;
}

SlopeFit fit_slope(const std::vector<RunRecord>& records, const std::string& x, const std::string& y,
                   std::size_t skip) {
  std::vector<double> xs, ys;
  for (std::size_t i = skip; i < records.size(); ++i) {
    xs.push_back(record_field(records[i], x));
    ys.push_back(record_field(records[i], y));
  }
  return fit_loglog(xs, ys);
}

namespace {

// r with (N1^-r - N2^-r) / (N2^-r - N3^-r) = rho, by bisection.
double aitken_rate(double n1, double n2, double n3, double rho) {
  auto f = [&](double r) {
    return (std::pow(n1, -r) - std::pow(n2, -r)) / (std::pow(n2, -r) - std::pow(n3, -r)) - rho;
  };
  double lo = 1e-6, hi = 20.0;
  if (f(lo) * f(hi) > 0.0) return std::abs(std::log(rho) / std::log(n2 / n1));
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (f(lo) * f(mid) <= 0.0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

Extrapolation extrapolate_lambda(const std::vector<RunRecord>& records) {
  if (records.size() < 3) throw Error(ErrorCode::kInvalidArgument, "extrapolation needs at least 3 records");
  const std::size_t n = records.size();
  std::vector<double> big_n(n), lam(n);
  for (std::size_t i = 0; i < n; ++i) {
    big_n[i] = records[i].n_tets;
    lam[i] = records[i].lambda_h;
    if (!(big_n[i] > 0.0)) throw Error(ErrorCode::kInvalidArgument, "extrapolation needs n_tets > 0");
  }
  Extrapolation e;
  const double scale = std::max(std::abs(lam.back()), 1e-300);
  bool constant = true, increasing = true, decreasing = true;
  for (std::size_t i = 1; i < n; ++i) {
    const double d = lam[i] - lam[i - 1];
    if (std::abs(d) > 1e-14 * scale) constant = false;
    if (!(d > 0.0)) increasing = false;
    if (!(d < 0.0)) decreasing = false;
  }
  if (constant) {
    e.lambda_ref = lam.back();
    e.degenerate = true;
    e.warning = "constant eigenvalue sequence; rate undefined";
    return e;
  }
  if (!increasing && !decreasing) {
    e.lambda_ref = lam.back();
    e.fallback = true;
    e.warning = "non-monotone eigenvalue sequence; using the last level";
    return e;
  }

  // Aitken start from the last three levels.
  const double d1 = lam[n - 3] - lam[n - 2], d2 = lam[n - 2] - lam[n - 1];
  double r = aitken_rate(big_n[n - 3], big_n[n - 2], big_n[n - 1], d1 / d2);
  double c = (lam[n - 2] - lam[n - 1]) / (std::pow(big_n[n - 2], -r) - std::pow(big_n[n - 1], -r));
  double l = lam[n - 1] - c * std::pow(big_n[n - 1], -r);

  auto cost = [&](double pl, double pc, double pr) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double res = pl + pc * std::pow(big_n[i], -pr) - lam[i];
      s += res * res;
    }
    return s;
  };
  double mu = 1e-3;
  double current = cost(l, c, r);
  for (int it = 0; it < 500 && current > 0.0; ++it) {
    double jtj[3][3] = {}, jtr[3] = {};
    for (std::size_t i = 0; i < n; ++i) {
      const double p = std::pow(big_n[i], -r);
      const double jac[3] = {1.0, p, -c * std::log(big_n[i]) * p};
      const double res = l + c * p - lam[i];
      for (int a = 0; a < 3; ++a) {
        jtr[a] += jac[a] * res;
        for (int b = 0; b < 3; ++b) jtj[a][b] += jac[a] * jac[b];
      }
    }
    linalg::DenseMatrix sys(3, 3);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) sys(a, b) = jtj[a][b] + (a == b ? mu * jtj[a][a] : 0.0);
    bool ok = true;
    try {
      linalg::dense_cholesky(sys);
    } catch (const Error&) {
      ok = false;
    }
    if (!ok) {
      mu *= 10.0;
      if (mu > 1e12) break;
      continue;
    }
    double y[3];
    for (int a = 0; a < 3; ++a) {
      double s = -jtr[a];
      for (int b = 0; b < a; ++b) s -= sys(a, b) * y[b];
      y[a] = s / sys(a, a);
    }
    double step[3];
    for (int a = 2; a >= 0; --a) {
      double s = y[a];
      for (int b = a + 1; b < 3; ++b) s -= sys(b, a) * step[b];
      step[a] = s / sys(a, a);
    }
    const double trial = cost(l + step[0], c + step[1], r + step[2]);
    if (trial < current) {
      l += step[0];
      c += step[1];
      r += step[2];
      const bool small = std::abs(step[0]) <= 1e-15 * std::abs(l) && std::abs(step[2]) <= 1e-15 * std::abs(r);
      current = trial;
      mu = std::max(mu * 0.1, 1e-15);
      if (small) break;
    } else {
      mu *= 10.0;
      if (mu > 1e12) break;
    }
  }
  e.lambda_ref = l;
  e.constant = c;
  e.rate = r;
  return e;
}

}  // namespace curlfem::study
