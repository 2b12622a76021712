#pragma once
// Simplex-ball predicates, edge crossings, convex hulls, and measures used by
// the ball approximation strategies.

#include <array>
#include <span>
#include <vector>

#include "nlfem/core.hpp"

namespace nlfem {

struct Ball {
  Vec center;
  double radius = 0;
};

struct Simplex {
  int n = 2;                 // intrinsic dimension; n+1 vertices are used
  std::array<Vec, 4> v{};
  Index parent = kNull;      // owning mesh element when derived from one
};

enum class SimplexClass : std::uint8_t { Outside, Inside, Straddle };

struct Classification {
  SimplexClass kind = SimplexClass::Outside;
  int inside_count = 0;            // number of strictly inside vertices
  std::array<bool, 4> inside{};    // per-vertex flags
};

// A vertex counts as inside only when |v - c| < radius - eps_geo(radius);
// vertices numerically on the sphere classify as outside.
Classification classify_simplex(const Simplex& s, const Ball& b);

// Parameter t of the sphere crossing on segment a + t*(b-a).  Requires a
// strictly inside and b outside; uses the subtraction-free root form, so the
// crossing point sits on the sphere to relative accuracy ~1e-12.
double edge_sphere_crossing(Vec a, Vec b, const Ball& ball);

struct CrossingPoint {
  Vec p;
  int inside_slot = -1;
  int outside_slot = -1;
};

// All inside-outside edge crossings of a straddling simplex, ordered by
// (inside slot, outside slot); exactly m*(n+1-m) entries.
std::vector<CrossingPoint> crossing_points(const Simplex& s, const Ball& b,
                                           const Classification& cls);
void crossing_points(const Simplex& s, const Ball& b, const Classification& cls,
                     std::vector<CrossingPoint>& out);

// Convex hull.  2D facets are CCW boundary edges (slots [0],[1], third is
// kNull); 3D facets are outward-oriented triangles.  Indices refer to the
// input span.  Throws DegenerateHull when the points are affinely degenerate.
struct Hull {
  int n = 2;
  std::vector<Vec> points;
  std::vector<std::array<int, 3>> facets;
};
Hull convex_hull(std::span<const Vec> pts, int n);

// Fan of simplices from the centroid of the hull's vertices; appends one
// simplex per facet with the given parent id.  Volumes are nonnegative and
// sum to the hull volume.
void triangulate_polytope(const Hull& h, Index parent, std::vector<Simplex>& out);

double simplex_volume(const Simplex& s);

// Euclidean distance from p to the (closed) simplex, 0 when inside.
double distance_point_simplex(Vec p, const Simplex& s);
double point_segment_distance(Vec p, Vec a, Vec b);
double point_triangle_distance(Vec p, Vec a, Vec b, Vec c);

// Barycentric coordinates of p; for n = 2 the z component is ignored.
std::array<double, 4> barycentric(const Simplex& s, Vec p);
bool point_in_simplex(Vec p, const Simplex& s, double tol);

// Monte Carlo source region of one fullcap piece: sub-simplices of the outer
// hull, each intersected with the ball by rejection at sampling time.
struct FullcapRegion {
  std::vector<Simplex> outer;
  Ball ball;
  Index parent = kNull;
};

}  // namespace nlfem
