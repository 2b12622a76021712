#include <cmath>
#include <sstream>

#include "doctest.h"
#include "nlfem/study.hpp"

using namespace nlfem;

namespace {

ElementTable table_for(int n, int res, double delta) {
  MeshData md = generate_mesh(n, res, delta);
  return build_element_table(build_cmap(md.n, md.coords, md.cells, md.region));
}

}  // namespace

TEST_CASE("slope fit recovers a power law") {
  std::vector<double> x = {1.0, 2.0, 4.0, 8.0};
  std::vector<double> y;
  for (double v : x) y.push_back(3.0 * std::pow(v, 1.7));
  CHECK(fit_slope(x, y) == doctest::Approx(1.7).epsilon(1e-12));

  std::vector<double> one = {1.0};
  CHECK_THROWS_AS(fit_slope(one, one), Error);
  std::vector<double> neg = {1.0, -2.0};
  std::vector<double> pos = {1.0, 2.0};
  CHECK_THROWS_AS(fit_slope(neg, pos), Error);
  std::vector<double> same = {2.0, 2.0};
  CHECK_THROWS_AS(fit_slope(same, pos), Error);
}

TEST_CASE("delta policy parsing") {
  DeltaPolicy fixed = parse_delta_policy("fixed:0.1");
  CHECK(fixed.radius(20) == 0.1);
  CHECK(fixed.radius(80) == 0.1);

  DeltaPolicy ratio = parse_delta_policy("ratio:3");
  CHECK(ratio.radius(20) == doctest::Approx(0.15));
  CHECK(ratio.radius(40) == doctest::Approx(0.075));

  for (const char* bad :
       {"fixed", "fixed:", "fixed:-1", "fixed:nanx", "jam:2", "fixed:0.1x", ""}) {
    CHECK_THROWS_AS(parse_delta_policy(bad), Error);
  }
}

TEST_CASE("node values merge unknowns and boundary data") {
  ElementTable et = table_for(2, 3, 0.3);
  DofMap dofs = build_dofmap(et);
  std::vector<double> u(dofs.unknowns);
  for (Index d = 0; d < dofs.unknowns; ++d) u[d] = double(d + 1);
  auto g = [](Vec p) { return p.x + 2 * p.y; };

  std::vector<double> vals = node_values(et, dofs, u, g);
  REQUIRE(Index(vals.size()) == dofs.node_count);
  for (Index j = 0; j < dofs.node_count; ++j) {
    if (dofs.constrained[j]) {
      CHECK(vals[j] == g(et.node[j]));
    } else {
      CHECK(vals[j] == u[dofs.dof_of_node[j]]);
    }
  }

  std::vector<double> short_u(u.size() + 1);
  CHECK_THROWS_AS(node_values(et, dofs, short_u, g), Error);
}

TEST_CASE("l2 norm of interpolation errors") {
  ElementTable et = table_for(2, 4, 0.25);
  DofMap dofs = build_dofmap(et);

  // a linear field is reproduced exactly
  auto lin = [](Vec p) { return 2 * p.x - p.y + 0.5; };
  std::vector<double> vals(et.node_count);
  for (Index j = 0; j < et.node_count; ++j) vals[j] = lin(et.node[j]);
  CHECK(l2_error(et, vals, lin) < 1e-13);

  // constant one against zero integrates the unit box
  std::vector<double> ones(et.node_count, 1.0);
  CHECK(l2_error(et, ones, [](Vec) { return 0.0; }) == doctest::Approx(1.0));

  // quadratic interpolation error scales like h^2
  auto quad = [](Vec p) { return p.x * p.x; };
  double err[2];
  int k = 0;
  for (int res : {4, 8}) {
    ElementTable fine = table_for(2, res, 0.25);
    std::vector<double> v(fine.node_count);
    for (Index j = 0; j < fine.node_count; ++j) v[j] = quad(fine.node[j]);
    err[k++] = l2_error(fine, v, quad);
  }
  CHECK(err[0] / err[1] == doctest::Approx(4.0).epsilon(0.3));

  std::vector<double> wrong(et.node_count + 2, 0.0);
  CHECK_THROWS_AS(l2_error(et, wrong, lin), Error);
}

TEST_CASE("manufactured solve reproduces the known solution") {
  ElementTable et = table_for(2, 8, 0.2);
  const Kernel kernel = make_kernel(2, 0.2, Normalization::Mass);
  const ManufacturedProblem prob = make_poly_problem(2, kernel);
  auto f = [&](Vec p) { return prob.f.eval(p); };
  auto g = [&](Vec p) { return prob.u.eval(p); };

  SolveConfig cfg;
  cfg.strategy = Strategy::Nocaps;
  SolveOutput sol = solve_problem(et, kernel, f, g, cfg);

  CHECK(sol.cg.converged);
  CHECK(sol.interior_elements == 128);
  CHECK(sol.dofs.unknowns == 49);
  for (Index j = 0; j < sol.dofs.node_count; ++j) {
    if (sol.dofs.constrained[j]) CHECK(sol.u_node[j] == g(et.node[j]));
  }
  const double err = l2_error(et, sol.u_node, g);
  CHECK(err < 0.01);
  CHECK(err > 0);
}

TEST_CASE("zero data solves to zero") {
  ElementTable et = table_for(2, 4, 0.25);
  const Kernel kernel = make_kernel(2, 0.25, Normalization::Mass);
  SolveConfig cfg;
  SolveOutput sol = solve_problem(et, kernel, [](Vec) { return 0.0; },
                                  [](Vec) { return 0.0; }, cfg);
  CHECK(sol.cg.iterations == 0);
  CHECK(sol.cg.converged);
  for (double v : sol.u_node) CHECK(v == 0.0);
  CHECK(l2_error(et, sol.u_node, [](Vec) { return 0.0; }) == 0.0);
}

TEST_CASE("convergence study rows, ordering, and rates") {
  StudyConfig cfg;
  cfg.n = 2;
  cfg.resolutions = {4, 8};
  cfg.delta = parse_delta_policy("fixed:0.25");
  cfg.strategies = {Strategy::Nocaps, Strategy::Overlap};

  std::vector<StudyRow> rows = convergence_study(cfg);
  REQUIRE(rows.size() == 4);

  // strategy-major, resolutions in the given order
  CHECK(rows[0].strategy == Strategy::Nocaps);
  CHECK(rows[1].strategy == Strategy::Nocaps);
  CHECK(rows[2].strategy == Strategy::Overlap);
  CHECK(rows[3].strategy == Strategy::Overlap);
  CHECK(rows[0].dof == 9);
  CHECK(rows[0].k_omega == 32);
  CHECK(rows[1].dof == 49);
  CHECK(rows[1].k_omega == 128);
  CHECK(rows[0].h_avg > rows[1].h_avg);
  CHECK(rows[1].h_min == 0.125);

  for (int s : {0, 2}) {
    CHECK(std::isnan(rows[s].lambda));
    CHECK(std::isfinite(rows[s + 1].lambda));
    CHECK(rows[s].l2 > rows[s + 1].l2);
    CHECK(rows[s + 1].l2 > 0);
  }

  StudyConfig bad = cfg;
  bad.resolutions.clear();
  CHECK_THROWS_AS(convergence_study(bad), Error);
  bad = cfg;
  bad.n = 4;
  CHECK_THROWS_AS(convergence_study(bad), Error);
}

TEST_CASE("study csv round trips every field") {
  StudyConfig cfg;
  cfg.n = 2;
  cfg.resolutions = {4, 8};
  cfg.delta = parse_delta_policy("fixed:0.25");
  cfg.strategies = {Strategy::Barycenter};
  std::vector<StudyRow> rows = convergence_study(cfg);

  std::stringstream ss;
  write_study_csv(ss, rows);
  std::vector<StudyRow> back = read_study_csv(ss);
  REQUIRE(back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(back[i].h_avg == rows[i].h_avg);
    CHECK(back[i].h_min == rows[i].h_min);
    CHECK(back[i].dof == rows[i].dof);
    CHECK(back[i].k_omega == rows[i].k_omega);
    CHECK(back[i].strategy == rows[i].strategy);
    CHECK(back[i].l2 == rows[i].l2);
    CHECK(back[i].assembly_s == rows[i].assembly_s);
    CHECK(back[i].solve_s == rows[i].solve_s);
    if (std::isnan(rows[i].lambda)) {
      CHECK(std::isnan(back[i].lambda));
    } else {
      CHECK(back[i].lambda == rows[i].lambda);
    }
  }

  std::stringstream bad1("h_avg,h_min\n");
  CHECK_THROWS_AS(read_study_csv(bad1), Error);
  std::stringstream bad2(
      "h_avg,h_min,dof,K_omega,strategy,l2_error,assembly_s,solve_s,lambda\n"
      "1,2,3\n");
  CHECK_THROWS_AS(read_study_csv(bad2), Error);
  std::stringstream bad3(
      "h_avg,h_min,dof,K_omega,strategy,l2_error,assembly_s,solve_s,lambda\n"
      "0.1,0.1,3,4,wedge,1e-3,0.1,0.1,nan\n");
  CHECK_THROWS_AS(read_study_csv(bad3), Error);
  std::stringstream bad4(
      "h_avg,h_min,dof,K_omega,strategy,l2_error,assembly_s,solve_s,lambda\n"
      "0.1,0.1,3.5,4,nocaps,1e-3,0.1,0.1,nan\n");
  CHECK_THROWS_AS(read_study_csv(bad4), Error);
}

TEST_CASE("geometric error study shrinks under refinement") {
  GeoConfig cfg;
  cfg.n = 2;
  cfg.delta = 0.25;
  cfg.h_seq = {0.25, 0.125};
  cfg.strategies = {Strategy::Nocaps, Strategy::Overlap};
  cfg.points = 4;
  cfg.samples = 20000;
  cfg.seed = 99;

  std::vector<GeoRow> rows = geo_error_study(cfg);
  REQUIRE(rows.size() == 4);
  for (const GeoRow& r : rows) {
    CHECK(r.sym_diff > 0);
    CHECK(r.delta == 0.25);
  }
  CHECK(rows[0].h == 0.25);
  CHECK(rows[1].h == 0.125);
  CHECK(rows[1].sym_diff < rows[0].sym_diff);  // nocaps refines
  CHECK(rows[3].sym_diff < rows[2].sym_diff);  // overlap refines
  CHECK(rows[1].sym_diff < rows[3].sym_diff);  // nocaps beats overlap

  std::stringstream ss;
  write_geo_csv(ss, rows);
  std::string header;
  std::getline(ss, header);
  CHECK(header == "h,h_avg,delta,strategy,symdiff");
}

TEST_CASE("polynomial files") {
  std::stringstream good(
      "# quadratic test polynomial\n"
      "\n"
      "2.5 2 1 0\n"
      "-1 0 0 0\n");
  Polynomial p = read_polynomial(good);
  Vec at{1.5, 2.0, 0.0};
  CHECK(p.eval(at) == doctest::Approx(2.5 * 1.5 * 1.5 * 2.0 - 1.0));

  std::stringstream dup("1 1 0 0\n1 1 0 0\n");
  CHECK(read_polynomial(dup).eval({3, 0, 0}) == doctest::Approx(6.0));

  std::stringstream trailing("1 1 0 0 junk\n");
  CHECK_THROWS_AS(read_polynomial(trailing), Error);
  std::stringstream negexp("1 -1 0 0\n");
  CHECK_THROWS_AS(read_polynomial(negexp), Error);
  std::stringstream empty("# nothing\n");
  CHECK_THROWS_AS(read_polynomial(empty), Error);
  std::stringstream garbage("x 1 0 0\n");
  CHECK_THROWS_AS(read_polynomial(garbage), Error);
  CHECK_THROWS_AS(read_polynomial_file("/nonexistent/poly.txt"), Error);
}
