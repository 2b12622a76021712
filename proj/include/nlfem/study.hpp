#pragma once
// Driver layer: set up a constrained problem on a generated mesh, solve it,
// measure errors, and run refinement studies that report observed rates.

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nlfem/assembly.hpp"
#include "nlfem/mesh.hpp"
#include "nlfem/problem.hpp"
#include "nlfem/solver.hpp"

namespace nlfem {

struct SolveConfig {
  Strategy strategy = Strategy::Nocaps;
  Normalization norm = Normalization::Mass;
  int threads = 0;  // 0: NLFEM_THREADS env var, else hardware concurrency
  std::uint64_t seed = 0x5eedULL;
  int mc_samples = 200;
  double cg_tol = 1e-10;
  int cg_max_factor = 20;  // iteration cap = factor * unknowns
};

struct SolveOutput {
  DofMap dofs;
  std::vector<double> u;       // coefficients on the unknown nodes
  std::vector<double> u_node;  // all nodes; constrained ones carry g
  AssemblyStats assembly;
  SolveReport cg;
  double assembly_s = 0;
  double solve_s = 0;
  Index interior_elements = 0;
};

SolveOutput solve_problem(const ElementTable& et, const Kernel& kernel,
                          const ScalarFn& f, const ScalarFn& g,
                          const SolveConfig& cfg);

// Per-node coefficient vector: unknowns from u, constrained nodes from g.
std::vector<double> node_values(const ElementTable& et, const DofMap& dofs,
                                std::span<const double> u, const ScalarFn& g);

// || u_h - exact || in L2 over the interior elements, u_h the piecewise
// linear field given by per-node coefficients.
double l2_error(const ElementTable& et, std::span<const double> node_vals,
                const ScalarFn& exact);

// Least-squares slope of log(y) against log(x); x and y positive.
double fit_slope(std::span<const double> x, std::span<const double> y);

// Interaction radius as a function of grid resolution: either a constant or
// a fixed multiple of the grid pitch 1/res.
struct DeltaPolicy {
  enum class Kind { Fixed, Ratio };
  Kind kind = Kind::Fixed;
  double value = 0.1;

  double radius(int res) const;
};

// "fixed:0.1" or "ratio:3"; throws BadConfig otherwise.
DeltaPolicy parse_delta_policy(std::string_view text);

struct StudyConfig {
  int n = 2;
  std::vector<int> resolutions;
  DeltaPolicy delta;
  std::vector<Strategy> strategies = {Strategy::Nocaps};
  SolveConfig solve;                   // per-row strategy overrides this one
  std::optional<Polynomial> solution;  // default: make_poly_problem(n, ...)
};

struct StudyRow {
  double h_avg = 0;
  double h_min = 0;
  Index dof = 0;
  Index k_omega = 0;  // interior element count
  Strategy strategy = Strategy::Nocaps;
  double l2 = 0;
  double assembly_s = 0;
  double solve_s = 0;
  double lambda = 0;  // work-rate against the previous row, NaN on the first
};

// One solve per (strategy, resolution), finest last. lambda compares
// consecutive rows of the same strategy: -log(e_prev/e_cur) / log(t_prev/
// t_cur) with t the assembly+solve time. Progress lines go to `log` if given.
std::vector<StudyRow> convergence_study(const StudyConfig& cfg,
                                        std::ostream* log = nullptr);

// CSV with header h_avg,h_min,dof,K_omega,strategy,l2_error,assembly_s,
// solve_s,lambda; doubles in full precision, missing lambda as nan.
void write_study_csv(std::ostream& out, std::span<const StudyRow> rows);
std::vector<StudyRow> read_study_csv(std::istream& in);  // throws BadConfig

struct GeoConfig {
  int n = 2;
  double delta = 0.25;
  std::vector<double> h_seq;     // grid pitches, coarse to fine
  std::vector<Strategy> strategies = {Strategy::Nocaps};
  int points = 8;                // ball centers per level, same lattice offsets
  std::int64_t samples = 200000;  // per symmetric-difference estimate
  std::uint64_t seed = 0x5eedULL;
  double pad = -1;  // sampling radius beyond delta; < 0 picks h_max
};

struct GeoRow {
  double h = 0;  // nominal grid pitch of the level
  double h_avg = 0;
  double delta = 0;
  Strategy strategy = Strategy::Nocaps;
  double sym_diff = 0;  // averaged over the sampled centers
};

// Mean symmetric-difference volume between the approximate and exact balls
// over a sequence of grid pitches. Each level is measured on a grid patch
// just big enough to hold the balls; the centers keep the same offsets
// relative to their grid cell on every level, so the levels stay comparable.
std::vector<GeoRow> geo_error_study(const GeoConfig& cfg,
                                    std::ostream* log = nullptr);

void write_geo_csv(std::ostream& out, std::span<const GeoRow> rows);

// One polynomial term per line: <coeff> <e0> <e1> <e2>. Blank lines and
// lines starting with '#' are skipped. Throws BadConfig naming the line.
Polynomial read_polynomial(std::istream& in);
Polynomial read_polynomial_file(const std::string& path);

}  // namespace nlfem
