#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "nlfem/ball_approx.hpp"
#include "nlfem/core.hpp"
#include "nlfem/polynomial.hpp"

namespace nlfem {

// Node partition induced by the element regions: a node is constrained when
// any element containing it carries the constraint tag; it additionally lies
// on the interface when it also touches an interior element. Unknowns are the
// unconstrained nodes, numbered by ascending node id.
struct DofMap {
  Index node_count = 0;
  Index unknowns = 0;
  std::vector<Index> dof_of_node;          // kNull for constrained nodes
  std::vector<Index> node_of_dof;
  std::vector<std::uint8_t> constrained;
  std::vector<std::uint8_t> on_interface;  // constrained and touching interior
};

DofMap build_dofmap(const ElementTable& et);

struct Triplet {
  Index row = 0;
  Index col = 0;
  double value = 0;
};

// Square sparse system in CSR form with sorted column indices per row.
struct LinearSystem {
  Index rows = 0;
  std::vector<Index> row_ptr;
  std::vector<Index> col_idx;
  std::vector<double> values;
  std::vector<double> rhs;
};

// Sums duplicate triplets (first-come order per key) and returns the CSR
// matrix; rhs is left zero-sized.
LinearSystem merge_triplets(std::vector<Triplet> triplets, Index rows);

using ScalarFn = std::function<double(Vec)>;

struct AssemblyConfig {
  Strategy strategy = Strategy::Nocaps;
  int threads = 0;  // 0: NLFEM_THREADS env var, else hardware concurrency
  std::uint64_t seed = 0x5eedULL;
  int mc_samples = 200;  // per outer sub-simplex of a fullcap piece
};

struct AssemblyStats {
  double seconds = 0;
  int threads = 1;
  Index blocks = 0;
  std::uint64_t mc_samples = 0;
  std::uint64_t mc_hits = 0;
};

// Stiffness matrix and load vector on the unknown nodes, with constrained
// values folded into the right-hand side using g at the constrained nodes.
// The result is bitwise identical for any thread count: work is claimed in
// fixed blocks of 32 interior elements, per-block contributions are combined
// in a fixed binary merge tree, and Monte Carlo streams are seeded per
// (element, quadrature point, piece).
LinearSystem assemble(const ElementTable& et, const DofMap& dofs,
                      const Kernel& kernel, const ScalarFn& f, const ScalarFn& g,
                      const AssemblyConfig& cfg, AssemblyStats* stats = nullptr);

// Basis values of element t's vertices at p (barycentric coordinates).
std::array<double, 4> basis_eval(const ElementTable& et, Index t, Vec p);

}  // namespace nlfem
