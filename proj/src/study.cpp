#include "nlfem/study.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "nlfem/quadrature.hpp"

namespace nlfem {

namespace {

double now_seconds() {
  using clk = std::chrono::steady_clock;
  return std::chrono::duration<double>(clk::now().time_since_epoch()).count();
}

std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

ScalarFn eval_fn(const Polynomial& p) {
  return [p](Vec x) { return p.eval(x); };
}

}  // namespace

SolveOutput solve_problem(const ElementTable& et, const Kernel& kernel,
                          const ScalarFn& f, const ScalarFn& g,
                          const SolveConfig& cfg) {
  SolveOutput out;
  out.dofs = build_dofmap(et);
  for (Index t = 0; t < et.count; ++t) {
    if (et.region[t] == 0) ++out.interior_elements;
  }

  AssemblyConfig acfg;
  acfg.strategy = cfg.strategy;
  acfg.threads = cfg.threads;
  acfg.seed = cfg.seed;
  acfg.mc_samples = cfg.mc_samples;
  LinearSystem sys = assemble(et, out.dofs, kernel, f, g, acfg, &out.assembly);
  out.assembly_s = out.assembly.seconds;

  const double t0 = now_seconds();
  const int maxit = cfg.cg_max_factor * std::max<Index>(out.dofs.unknowns, 1);
  out.u = cg_solve(sys, sys.rhs, cfg.cg_tol, maxit, &out.cg);
  out.solve_s = now_seconds() - t0;

  out.u_node = node_values(et, out.dofs, out.u, g);
  return out;
}

std::vector<double> node_values(const ElementTable& et, const DofMap& dofs,
                                std::span<const double> u, const ScalarFn& g) {
  if (Index(u.size()) != dofs.unknowns) {
    fail(ErrorCode::BadConfig, "coefficient count does not match the dof map");
  }
  std::vector<double> vals(dofs.node_count, 0.0);
  for (Index j = 0; j < dofs.node_count; ++j) {
    vals[j] = dofs.constrained[j] ? g(et.node[j]) : u[dofs.dof_of_node[j]];
  }
  return vals;
}

double l2_error(const ElementTable& et, std::span<const double> node_vals,
                const ScalarFn& exact) {
  if (Index(node_vals.size()) != et.node_count) {
    fail(ErrorCode::BadConfig, "node value count does not match the mesh");
  }
  const QuadratureRule& rule = gauss_rule(et.n, 4);
  double acc = 0;
  for (Index t = 0; t < et.count; ++t) {
    if (et.region[t] != 0) continue;
    const auto& vx = et.verts[t];
    for (int q = 0; q < rule.npts; ++q) {
      Vec p{};
      double uh = 0;
      for (int i = 0; i <= et.n; ++i) {
        const double b = rule.bary[q][i];
        p = p + b * et.node[vx[i]];
        uh += b * node_vals[vx[i]];
      }
      const double d = uh - exact(p);
      acc += et.volume[t] * rule.w[q] * d * d;
    }
  }
  return std::sqrt(acc);
}

double fit_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    fail(ErrorCode::BadConfig, "slope fit needs two or more samples");
  }
  const double m = double(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0) || !(y[i] > 0)) {
      fail(ErrorCode::BadConfig, "slope fit needs positive samples");
    }
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double den = m * sxx - sx * sx;
  if (den == 0) fail(ErrorCode::BadConfig, "slope fit abscissae coincide");
  return (m * sxy - sx * sy) / den;
}

double DeltaPolicy::radius(int res) const {
  return kind == Kind::Fixed ? value : value / double(res);
}

DeltaPolicy parse_delta_policy(std::string_view text) {
  const auto colon = text.find(':');
  if (colon != std::string_view::npos) {
    const std::string_view head = text.substr(0, colon);
    const std::string tail(text.substr(colon + 1));
    char* end = nullptr;
    const double v = std::strtod(tail.c_str(), &end);
    if (end == tail.c_str() + tail.size() && tail.size() > 0 && v > 0 &&
        std::isfinite(v)) {
      if (head == "fixed") return {DeltaPolicy::Kind::Fixed, v};
      if (head == "ratio") return {DeltaPolicy::Kind::Ratio, v};
    }
  }
  fail(ErrorCode::BadConfig, "delta policy must be fixed:<radius> or "
                             "ratio:<multiple of 1/res>, got '" +
                                 std::string(text) + "'");
}

std::vector<StudyRow> convergence_study(const StudyConfig& cfg,
                                        std::ostream* log) {
  if (cfg.n != 2 && cfg.n != 3) fail(ErrorCode::BadConfig, "dimension must be 2 or 3");
  if (cfg.resolutions.empty()) fail(ErrorCode::BadConfig, "no resolutions given");
  if (cfg.strategies.empty()) fail(ErrorCode::BadConfig, "no strategies given");

  const std::size_t nres = cfg.resolutions.size();
  std::vector<StudyRow> rows(cfg.strategies.size() * nres);

  for (std::size_t ri = 0; ri < nres; ++ri) {
    const int res = cfg.resolutions[ri];
    if (res < 2) fail(ErrorCode::BadConfig, "resolution must be at least 2");
    const double delta = cfg.delta.radius(res);
    const Kernel kernel = make_kernel(cfg.n, delta, cfg.solve.norm);
    const ManufacturedProblem prob =
        cfg.solution ? make_problem_from(*cfg.solution, kernel)
                     : make_poly_problem(cfg.n, kernel);
    const ScalarFn f = eval_fn(prob.f);
    const ScalarFn g = eval_fn(prob.u);

    const MeshData md = generate_mesh(cfg.n, res, delta);
    const CMap cm = build_cmap(md.n, md.coords, md.cells, md.region);
    const ElementTable et = build_element_table(cm);
    const HStats hs = mesh_h_stats(cm);

    for (std::size_t si = 0; si < cfg.strategies.size(); ++si) {
      SolveConfig scfg = cfg.solve;
      scfg.strategy = cfg.strategies[si];
      const SolveOutput sol = solve_problem(et, kernel, f, g, scfg);

      StudyRow& row = rows[si * nres + ri];
      row.h_avg = hs.h_avg;
      row.h_min = hs.h_min;
      row.dof = sol.dofs.unknowns;
      row.k_omega = sol.interior_elements;
      row.strategy = scfg.strategy;
      row.l2 = l2_error(et, sol.u_node, eval_fn(prob.u));
      row.assembly_s = sol.assembly_s;
      row.solve_s = sol.solve_s;
      if (log) {
        *log << "res " << res << " delta " << delta << " "
             << strategy_name(row.strategy) << ": dof " << row.dof << " l2 "
             << row.l2 << " asm " << row.assembly_s << "s cg " << sol.cg.iterations
             << " it" << (sol.cg.converged ? "" : " (not converged)") << "\n";
        log->flush();
      }
    }
  }

  for (std::size_t si = 0; si < cfg.strategies.size(); ++si) {
    for (std::size_t ri = 0; ri < nres; ++ri) {
      StudyRow& row = rows[si * nres + ri];
      if (ri == 0) {
        row.lambda = std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      const StudyRow& prev = rows[si * nres + ri - 1];
      const double tp = prev.assembly_s + prev.solve_s;
      const double tc = row.assembly_s + row.solve_s;
      row.lambda = -std::log(prev.l2 / row.l2) / std::log(tp / tc);
    }
  }
  return rows;
}

static const char kStudyHeader[] =
    "h_avg,h_min,dof,K_omega,strategy,l2_error,assembly_s,solve_s,lambda";

void write_study_csv(std::ostream& out, std::span<const StudyRow> rows) {
  out << kStudyHeader << "\n";
  for (const StudyRow& r : rows) {
    out << fmt_double(r.h_avg) << ',' << fmt_double(r.h_min) << ',' << r.dof
        << ',' << r.k_omega << ',' << strategy_name(r.strategy) << ','
        << fmt_double(r.l2) << ',' << fmt_double(r.assembly_s) << ','
        << fmt_double(r.solve_s) << ',' << fmt_double(r.lambda) << "\n";
  }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

double parse_csv_double(const std::string& s, int lineno) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    fail(ErrorCode::BadConfig,
         "study csv line " + std::to_string(lineno) + ": bad number '" + s + "'");
  }
  return v;
}

Index parse_csv_index(const std::string& s, int lineno) {
  const double v = parse_csv_double(s, lineno);
  const Index i = Index(v);
  if (double(i) != v || i < 0) {
    fail(ErrorCode::BadConfig,
         "study csv line " + std::to_string(lineno) + ": bad count '" + s + "'");
  }
  return i;
}

}  // namespace

std::vector<StudyRow> read_study_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) {
    fail(ErrorCode::BadConfig, "study csv line 1: missing header");
  }
  while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) {
    line.pop_back();
  }
  if (line != kStudyHeader) {
    fail(ErrorCode::BadConfig, "study csv line 1: unexpected header '" + line + "'");
  }
  std::vector<StudyRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    if (f.size() != 9) {
      fail(ErrorCode::BadConfig, "study csv line " + std::to_string(lineno) +
                                     ": expected 9 fields, got " +
                                     std::to_string(f.size()));
    }
    StudyRow r;
    r.h_avg = parse_csv_double(f[0], lineno);
    r.h_min = parse_csv_double(f[1], lineno);
    r.dof = parse_csv_index(f[2], lineno);
    r.k_omega = parse_csv_index(f[3], lineno);
    r.strategy = parse_strategy(f[4]);
    r.l2 = parse_csv_double(f[5], lineno);
    r.assembly_s = parse_csv_double(f[6], lineno);
    r.solve_s = parse_csv_double(f[7], lineno);
    r.lambda = parse_csv_double(f[8], lineno);
    rows.push_back(r);
  }
  return rows;
}

std::vector<GeoRow> geo_error_study(const GeoConfig& cfg, std::ostream* log) {
  if (cfg.n != 2 && cfg.n != 3) fail(ErrorCode::BadConfig, "dimension must be 2 or 3");
  if (cfg.h_seq.empty()) fail(ErrorCode::BadConfig, "no grid pitches given");
  if (cfg.strategies.empty()) fail(ErrorCode::BadConfig, "no strategies given");
  if (cfg.points < 1) fail(ErrorCode::BadConfig, "need at least one ball center");
  if (!(cfg.delta > 0)) fail(ErrorCode::BadConfig, "delta must be positive");
  for (double h : cfg.h_seq) {
    if (!(h > 0)) fail(ErrorCode::BadConfig, "grid pitch must be positive");
  }

  // Offsets inside the grid cell at the origin; scaled by the pitch per
  // level, so every center sees the same lattice up to dilation and the
  // levels differ only in h.
  std::vector<Vec> offsets(cfg.points);
  Rng rng(splitmix64(cfg.seed ^ 0x67656f65727200ULL));
  for (Vec& c : offsets) {
    c = {rng.uniform(), rng.uniform(), cfg.n == 3 ? rng.uniform() : 0.0};
  }

  const std::size_t nlev = cfg.h_seq.size();
  std::vector<GeoRow> rows(cfg.strategies.size() * nlev);

  for (std::size_t ri = 0; ri < nlev; ++ri) {
    const double h = cfg.h_seq[ri];
    // Patch reaching delta plus a safety margin past the origin cell on every
    // side; the balls can never see its boundary.
    const Index m = Index(std::ceil(cfg.delta / h)) + 3;
    const MeshData md = patch_mesh(cfg.n, -m, m, h);
    const CMap cm = build_cmap(md.n, md.coords, md.cells, md.region);
    const ElementTable et = build_element_table(cm);
    const HStats hs = mesh_h_stats(cm);
    const double pad = cfg.pad < 0 ? hs.h_max : cfg.pad;

    for (std::size_t si = 0; si < cfg.strategies.size(); ++si) {
      const Strategy strat = cfg.strategies[si];
      double sum = 0;
      for (int pi = 0; pi < cfg.points; ++pi) {
        const Vec center = h * offsets[pi];
        const Index seed_elem = patch_locate(md, -m, m, h, center);
        const ApproxBall ball =
            build_approx_ball(et, center, seed_elem, cfg.delta, strat);
        sum += estimate_symmetric_difference(
            ball, pad, cfg.samples, mix_seed(cfg.seed, std::uint64_t(pi), 0, 0));
      }
      GeoRow& row = rows[si * nlev + ri];
      row.h = h;
      row.h_avg = hs.h_avg;
      row.delta = cfg.delta;
      row.strategy = strat;
      row.sym_diff = sum / cfg.points;
      if (log) {
        *log << "h " << h << " " << strategy_name(strat) << ": symdiff "
             << row.sym_diff << "\n";
        log->flush();
      }
    }
  }
  return rows;
}

void write_geo_csv(std::ostream& out, std::span<const GeoRow> rows) {
  out << "h,h_avg,delta,strategy,symdiff\n";
  for (const GeoRow& r : rows) {
    out << fmt_double(r.h) << ',' << fmt_double(r.h_avg) << ','
        << fmt_double(r.delta) << ',' << strategy_name(r.strategy) << ','
        << fmt_double(r.sym_diff) << "\n";
  }
}

Polynomial read_polynomial(std::istream& in) {
  Polynomial p;
  std::string line;
  int lineno = 0;
  int terms = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    double c = 0;
    std::array<int, 3> e{0, 0, 0};
    if (!(ls >> c >> e[0] >> e[1] >> e[2])) {
      fail(ErrorCode::BadConfig, "polynomial line " + std::to_string(lineno) +
                                     ": expected <coeff> <e0> <e1> <e2>");
    }
    std::string rest;
    if (ls >> rest) {
      fail(ErrorCode::BadConfig, "polynomial line " + std::to_string(lineno) +
                                     ": trailing token '" + rest + "'");
    }
    if (e[0] < 0 || e[1] < 0 || e[2] < 0) {
      fail(ErrorCode::BadConfig, "polynomial line " + std::to_string(lineno) +
                                     ": negative exponent");
    }
    p = p + Polynomial::monomial(e, c);
    ++terms;
  }
  if (terms == 0) {
    fail(ErrorCode::BadConfig, "polynomial file holds no terms");
  }
  return p;
}

Polynomial read_polynomial_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::BadConfig, "cannot open polynomial file " + path);
  return read_polynomial(in);
}

}  // namespace nlfem
