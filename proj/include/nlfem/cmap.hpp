#pragma once
// Combinatorial-map kernel for oriented simplicial meshes in 2D and 3D.
//
// A dart is a directed edge of an oriented face: 3 darts per triangle in 2D,
// 12 per tetrahedron in 3D (3 per oriented face).  Dart numbering is fixed by
// construction: dart 3*k+e is edge e of triangle k, dart 12*k+3*f+e is edge e
// of face f of tetrahedron k, so rebuilding the same input yields identical
// tables.
//
//   beta[1]  next directed edge in the same face cycle (permutation)
//   beta[2]  2D: matching dart in the facet-adjacent triangle (kNull on the
//            boundary); 3D: the reversed directed edge in the other face of
//            the same tetrahedron (involution, total)
//   beta[3]  3D only: matching dart in the facet-adjacent tetrahedron
//            (kNull on the boundary)
//
// Cell ids: vertices keep their input ids; edges and faces are numbered by
// first appearance in dart scan order; n-cells keep input order.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "nlfem/core.hpp"

namespace nlfem {

struct CMap {
  int n = 2;  // top dimension, 2 or 3

  std::array<std::vector<Index>, 4> beta;  // beta[0] unused
  std::vector<Index> beta1_inv;
  std::array<std::vector<Index>, 4> cell_of;   // cell_of[i][dart] = i-cell id
  std::array<std::vector<Index>, 4> cell_dart; // representative dart per cell

  std::vector<Vec> coords;              // per 0-cell
  std::vector<std::uint8_t> region;     // per n-cell: 0 interior, 1 constraint layer
  std::vector<std::uint8_t> flipped;    // per n-cell: input order swapped to orient

  Index dart_count() const { return Index(beta[1].size()); }
  Index cell_count(int i) const { return Index(cell_dart[i].size()); }
  Index vertex_count() const { return cell_count(0); }
  Index ncell_count() const { return cell_count(n); }

  // Vertex ids of n-cell t in the orientation-adjusted order used to lay out
  // its darts.
  std::array<Index, 4> ncell_vertices(Index t) const;

  Vec vertex(Index v) const { return coords[v]; }
};

struct Violation {
  std::string law;
  Index dart = kNull;
};

// Builds the map from raw simplices.  Throws Error on out-of-range or
// repeated vertex ids (BadIndex), vertices not referenced by any cell
// (DanglingVertex), facets shared by more than two cells or inconsistent
// orientability (NonManifold).
CMap build_cmap(int n, const std::vector<Vec>& coords,
                const std::vector<std::array<Index, 4>>& cells,
                const std::vector<std::uint8_t>& region);

// Checks the structural laws (beta arities, involutions, boundary flags,
// cell-label invariance, cell consistency).  Violations are returned as
// data, not thrown.
std::vector<Violation> validate_cmap(const CMap& m);

// Darts of the i-cell orbit containing d, in BFS discovery order from d.
std::vector<Index> orbit(const CMap& m, int i, Index d);

// Facet-adjacent n-cells of t, each exactly once, in the fixed dart-walk
// order around t's representative dart.
void neighbor_ncells(const CMap& m, Index t, std::vector<Index>& out);
std::vector<Index> neighbor_ncells(const CMap& m, Index t);

}  // namespace nlfem
