// Command line driver: structured mesh generation, single solves, and the
// refinement studies, all on top of the library. Machine output (mesh files,
// solution files, CSV tables) goes to --out; progress and summaries go to
// stderr so tables can be piped.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nlfem/study.hpp"

using namespace nlfem;

namespace {

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::string cur;
  std::istringstream ss(text);
  while (std::getline(ss, cur, ',')) {
    try {
      std::size_t used = 0;
      const int v = std::stoi(cur, &used);
      if (used != cur.size()) throw std::invalid_argument(cur);
      out.push_back(v);
    } catch (const std::exception&) {
      fail(ErrorCode::BadConfig, "bad integer '" + cur + "' in list '" + text + "'");
    }
  }
  if (out.empty()) fail(ErrorCode::BadConfig, "empty integer list");
  return out;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  std::string cur;
  std::istringstream ss(text);
  while (std::getline(ss, cur, ',')) {
    try {
      std::size_t used = 0;
      const double v = std::stod(cur, &used);
      if (used != cur.size()) throw std::invalid_argument(cur);
      out.push_back(v);
    } catch (const std::exception&) {
      fail(ErrorCode::BadConfig, "bad number '" + cur + "' in list '" + text + "'");
    }
  }
  if (out.empty()) fail(ErrorCode::BadConfig, "empty number list");
  return out;
}

std::vector<Strategy> parse_strategy_list(const std::string& text) {
  std::vector<Strategy> out;
  std::string cur;
  std::istringstream ss(text);
  while (std::getline(ss, cur, ',')) out.push_back(parse_strategy(cur));
  if (out.empty()) fail(ErrorCode::BadConfig, "empty strategy list");
  return out;
}

Normalization parse_normalization(const std::string& text) {
  if (text == "mass") return Normalization::Mass;
  if (text == "moment2") return Normalization::SecondMoment;
  fail(ErrorCode::BadConfig,
       "normalization must be mass or moment2, got '" + text + "'");
}

// "poly2d" and "poly3d" pick the built-in solution for that dimension;
// anything else is a path to a polynomial term file.
std::optional<Polynomial> custom_solution(const std::string& spec, int dim) {
  if (spec.empty()) return std::nullopt;
  if (spec == "poly2d" || spec == "poly3d") {
    const int want = spec == "poly2d" ? 2 : 3;
    if (want != dim) {
      fail(ErrorCode::BadConfig, spec + " needs a " + std::to_string(want) +
                                     "d mesh, got dimension " +
                                     std::to_string(dim));
    }
    return std::nullopt;
  }
  return read_polynomial_file(spec);
}

template <class Fn>
void with_output(const std::string& path, Fn&& fn) {
  if (path == "-") {
    fn(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream out(path);
  if (!out) fail(ErrorCode::BadConfig, "cannot open output file " + path);
  fn(out);
  out.flush();
  if (!out) fail(ErrorCode::BadConfig, "failed writing " + path);
}

struct SolveArgs {
  int dim = 2;
  int res = 0;
  std::string mesh_path;
  std::string delta_policy = "fixed:0.1";
  std::string strategy = "nocaps";
  std::string normalization = "mass";
  std::string problem;
  std::string out_path;
  SolveConfig solve;
};

void run_solve(const SolveArgs& a) {
  const DeltaPolicy policy = parse_delta_policy(a.delta_policy);

  MeshData md;
  double delta = 0;
  if (!a.mesh_path.empty()) {
    if (policy.kind == DeltaPolicy::Kind::Ratio) {
      fail(ErrorCode::BadConfig,
           "ratio delta policy needs a generated mesh; use --res, not --mesh");
    }
    md = read_mesh_file(a.mesh_path);
    delta = policy.value;
  } else {
    if (a.res < 2) {
      fail(ErrorCode::BadConfig, "need --res >= 2 or --mesh <file>");
    }
    delta = policy.radius(a.res);
    md = generate_mesh(a.dim, a.res, delta);
  }

  SolveConfig cfg = a.solve;
  cfg.strategy = parse_strategy(a.strategy);
  cfg.norm = parse_normalization(a.normalization);

  const Kernel kernel = make_kernel(md.n, delta, cfg.norm);
  const std::optional<Polynomial> custom = custom_solution(a.problem, md.n);
  const ManufacturedProblem prob = custom ? make_problem_from(*custom, kernel)
                                          : make_poly_problem(md.n, kernel);

  const CMap cm = build_cmap(md.n, md.coords, md.cells, md.region);
  const ElementTable et = build_element_table(cm);
  const HStats hs = mesh_h_stats(cm);

  const SolveOutput sol = solve_problem(
      et, kernel, [&](Vec p) { return prob.f.eval(p); },
      [&](Vec p) { return prob.u.eval(p); }, cfg);
  const double err =
      l2_error(et, sol.u_node, [&](Vec p) { return prob.u.eval(p); });

  std::ostream& os = std::cerr;
  os << "mesh: " << et.node_count << " nodes, " << et.count << " elements ("
     << sol.interior_elements << " interior), h_avg " << hs.h_avg << ", h_min "
     << hs.h_min << "\n";
  os << "solve: strategy " << strategy_name(cfg.strategy) << ", delta " << delta
     << ", dof " << sol.dofs.unknowns << "\n";
  os << "assembly " << sol.assembly_s << " s on " << sol.assembly.threads
     << " thread(s); cg " << sol.cg.iterations << " iterations, residual "
     << sol.cg.relative_residual << ", " << sol.solve_s << " s\n";
  os << "l2_error " << err << "\n";

  if (!a.out_path.empty()) {
    with_output(a.out_path, [&](std::ostream& out) {
      out << "nlfem-solution v1 nodes " << sol.u_node.size() << "\n";
      char buf[40];
      for (double v : sol.u_node) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << buf << "\n";
      }
    });
  }
  if (!sol.cg.converged) {
    fail(ErrorCode::BadConfig, "conjugate gradient did not converge");
  }
}

void report_slopes(std::span<const StudyRow> rows) {
  // consecutive rows of one strategy share everything but the resolution
  std::size_t start = 0;
  while (start < rows.size()) {
    std::size_t stop = start + 1;
    while (stop < rows.size() && rows[stop].strategy == rows[start].strategy) {
      ++stop;
    }
    if (stop - start >= 2) {
      std::vector<double> h, e;
      for (std::size_t i = start; i < stop; ++i) {
        h.push_back(rows[i].h_avg);
        e.push_back(rows[i].l2);
      }
      std::cerr << "slope " << strategy_name(rows[start].strategy) << " "
                << fit_slope(h, e) << "\n";
    }
    start = stop;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"piecewise linear finite elements for constrained nonlocal "
               "diffusion on the unit box"};
  app.require_subcommand(1);

  // mesh
  auto* mesh_cmd =
      app.add_subcommand("mesh", "generate a structured mesh with its "
                                 "constraint layer and write it as text");
  int mesh_dim = 2, mesh_res = 0;
  double mesh_delta = 0.1;
  std::string mesh_out = "-";
  mesh_cmd->add_option("--dim", mesh_dim, "space dimension (2 or 3)")
      ->check(CLI::IsMember({2, 3}));
  mesh_cmd->add_option("--res", mesh_res, "cells per unit box edge")->required();
  mesh_cmd->add_option("--delta", mesh_delta, "interaction radius the layer must cover")
      ->required();
  mesh_cmd->add_option("--out", mesh_out, "output file, - for stdout");
  mesh_cmd->callback([&] {
    const MeshData md = generate_mesh(mesh_dim, mesh_res, mesh_delta);
    with_output(mesh_out, [&](std::ostream& out) { write_mesh(out, md); });
    std::cerr << "mesh: " << md.coords.size() << " vertices, " << md.cells.size()
              << " cells\n";
  });

  // solve
  auto* solve_cmd = app.add_subcommand(
      "solve", "assemble and solve one problem, reporting the L2 error");
  SolveArgs sa;
  solve_cmd->add_option("--dim", sa.dim, "space dimension (2 or 3)")
      ->check(CLI::IsMember({2, 3}));
  solve_cmd->add_option("--res", sa.res, "cells per unit box edge");
  solve_cmd->add_option("--mesh", sa.mesh_path, "mesh file instead of --res");
  solve_cmd->add_option("--delta-policy", sa.delta_policy,
                        "fixed:<radius> or ratio:<multiple of 1/res>");
  solve_cmd->add_option("--strategy", sa.strategy,
                        "inside|overlap|barycenter|nocaps|approxcaps|fullcaps");
  solve_cmd->add_option("--normalization", sa.normalization, "mass or moment2");
  solve_cmd->add_option("--problem", sa.problem,
                        "poly2d, poly3d, or a polynomial term file");
  solve_cmd->add_option("--threads", sa.solve.threads,
                        "worker threads, 0 uses NLFEM_THREADS or the machine");
  solve_cmd->add_option("--seed", sa.solve.seed, "Monte Carlo seed");
  solve_cmd->add_option("--mc-samples", sa.solve.mc_samples,
                        "samples per fullcap sub-simplex");
  solve_cmd->add_option("--cg-tol", sa.solve.cg_tol, "relative residual target");
  solve_cmd->add_option("--out", sa.out_path, "write nodal values to this file");
  solve_cmd->callback([&] { run_solve(sa); });

  // convergence
  auto* conv_cmd = app.add_subcommand(
      "convergence", "solve a refinement sequence and tabulate errors as CSV");
  std::string conv_res = "20,40,80", conv_strategies = "nocaps";
  std::string conv_out = "-";
  SolveArgs ca;  // reuse the shared solver options
  conv_cmd->add_option("--dim", ca.dim, "space dimension (2 or 3)")
      ->check(CLI::IsMember({2, 3}));
  conv_cmd->add_option("--res", conv_res, "comma separated resolutions");
  conv_cmd->add_option("--delta-policy", ca.delta_policy,
                       "fixed:<radius> or ratio:<multiple of 1/res>");
  conv_cmd->add_option("--strategies", conv_strategies,
                       "comma separated ball strategies");
  conv_cmd->add_option("--normalization", ca.normalization, "mass or moment2");
  conv_cmd->add_option("--problem", ca.problem,
                       "poly2d, poly3d, or a polynomial term file");
  conv_cmd->add_option("--threads", ca.solve.threads,
                       "worker threads, 0 uses NLFEM_THREADS or the machine");
  conv_cmd->add_option("--seed", ca.solve.seed, "Monte Carlo seed");
  conv_cmd->add_option("--mc-samples", ca.solve.mc_samples,
                       "samples per fullcap sub-simplex");
  conv_cmd->add_option("--cg-tol", ca.solve.cg_tol, "relative residual target");
  conv_cmd->add_option("--out", conv_out, "CSV file, - for stdout");
  conv_cmd->callback([&] {
    StudyConfig cfg;
    cfg.n = ca.dim;
    cfg.resolutions = parse_int_list(conv_res);
    cfg.delta = parse_delta_policy(ca.delta_policy);
    cfg.strategies = parse_strategy_list(conv_strategies);
    cfg.solve = ca.solve;
    cfg.solve.norm = parse_normalization(ca.normalization);
    cfg.solution = custom_solution(ca.problem, ca.dim);
    const std::vector<StudyRow> rows = convergence_study(cfg, &std::cerr);
    with_output(conv_out, [&](std::ostream& out) { write_study_csv(out, rows); });
    report_slopes(rows);
  });

  // geoerr
  auto* geo_cmd = app.add_subcommand(
      "geoerr", "measure ball approximation quality under mesh refinement");
  GeoConfig gc;
  std::string geo_h = "0.0625,0.03125,0.015625", geo_strategies = "nocaps",
              geo_out = "-";
  geo_cmd->add_option("--dim", gc.n, "space dimension (2 or 3)")
      ->check(CLI::IsMember({2, 3}));
  geo_cmd->add_option("--delta", gc.delta, "interaction radius")->required();
  geo_cmd->add_option("--h-seq", geo_h, "comma separated grid pitches");
  geo_cmd->add_option("--strategy,--strategies", geo_strategies,
                      "comma separated ball strategies");
  geo_cmd->add_option("--points", gc.points, "ball centers per level");
  geo_cmd->add_option("--mc,--samples", gc.samples,
                      "Monte Carlo samples per symmetric difference");
  geo_cmd->add_option("--seed", gc.seed, "sampling seed");
  geo_cmd->add_option("--pad", gc.pad,
                      "sampling radius beyond delta, negative picks h_max");
  geo_cmd->add_option("--out", geo_out, "CSV file, - for stdout");
  geo_cmd->callback([&] {
    gc.h_seq = parse_double_list(geo_h);
    gc.strategies = parse_strategy_list(geo_strategies);
    const std::vector<GeoRow> rows = geo_error_study(gc, &std::cerr);
    with_output(geo_out, [&](std::ostream& out) { write_geo_csv(out, rows); });
    for (std::size_t s = 0; s + 1 < rows.size(); ) {
      std::size_t stop = s + 1;
      while (stop < rows.size() && rows[stop].strategy == rows[s].strategy) ++stop;
      if (stop - s >= 2) {
        std::vector<double> h, e;
        for (std::size_t i = s; i < stop; ++i) {
          h.push_back(rows[i].h);
          e.push_back(rows[i].sym_diff);
        }
        std::cerr << "slope " << strategy_name(rows[s].strategy) << " "
                  << fit_slope(h, e) << "\n";
      }
      s = stop;
    }
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
