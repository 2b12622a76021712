#pragma once
// Independent reference computations the unit and acceptance tests check the
// library against.

#include <array>
#include <functional>
#include <vector>

#include "nlfem/assembly.hpp"
#include "nlfem/ball_approx.hpp"
#include "nlfem/cmap.hpp"
#include "nlfem/geometry.hpp"
#include "support/test_meshes.hpp"

namespace nlfem::testing {

// Facet-sharing neighbors straight from the raw cell list.
std::vector<std::vector<Index>> neighbor_sets(const RawMesh& rm);

// Sorted darts carrying the same i-cell id as d.
std::vector<Index> orbit_scan(const CMap& m, int i, Index d);

// Shoelace area of a 2D hull boundary; positive for CCW facets.
double polygon_area(const Hull& h);

// Divergence-theorem volume of a 3D hull; positive for outward facets.
double surface_volume(const Hull& h);

// Integral of prod x_i^e_i over the unit reference simplex in R^n.
double reference_moment(int n, std::array<int, 3> e);

// Integral of f over the ball B_radius(0), by nested quadrature in polar /
// spherical coordinates with grid doubling until |change| <= tol * scale.
double ball_integral(int n, double radius, const std::function<double(Vec)>& f,
                     double tol);

// Dense LU solve with partial pivoting; A is rows x rows row-major.
std::vector<double> dense_solve(std::vector<double> A, std::vector<double> b);

// CSR expanded to a dense row-major matrix.
std::vector<double> csr_to_dense(const LinearSystem& sys);

struct DenseSystem {
  Index unknowns = 0;
  std::vector<double> A;  // unknowns x unknowns row-major
  std::vector<double> b;
};

// Reference assembler: walks every (interior element, quadrature point, any
// element) triple without the ball search, evaluates basis differences
// pointwise without moment aggregation, accumulates a full node-by-node dense
// matrix, and folds the constrained columns at the end. Monte Carlo pieces
// are not supported; use polytope strategies only.
DenseSystem assemble_dense_reference(const ElementTable& et, const DofMap& dm,
                                     const Kernel& kernel, const ScalarFn& f,
                                     const ScalarFn& g, Strategy strat);

}  // namespace nlfem::testing
