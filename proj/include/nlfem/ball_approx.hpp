#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "nlfem/cmap.hpp"
#include "nlfem/core.hpp"
#include "nlfem/geometry.hpp"
#include "nlfem/quadrature.hpp"

namespace nlfem {

enum class Strategy : std::uint8_t {
  Inside,
  Overlap,
  Barycenter,
  Nocaps,
  Approxcaps,
  Fullcaps,
};

inline constexpr std::array<Strategy, 6> kAllStrategies = {
    Strategy::Inside,    Strategy::Overlap,    Strategy::Barycenter,
    Strategy::Nocaps,    Strategy::Approxcaps, Strategy::Fullcaps,
};

const char* strategy_name(Strategy s);
Strategy parse_strategy(std::string_view name);  // throws BadConfig

// Flat per-element view of an n-cell complex. Everything the ball walk and the
// assembler touch per element lives here, contiguous and index-addressed.
// neighbor[t][i] is the element across the facet opposite vertex slot i
// (kNull on the boundary); slots follow CMap::ncell_vertices order.
struct ElementTable {
  int n = 0;
  Index count = 0;
  Index node_count = 0;
  std::vector<Vec> node;
  std::vector<std::array<Index, 4>> verts;
  std::vector<std::array<Index, 4>> neighbor;
  std::vector<Simplex> simplex;
  std::vector<Vec> center;       // barycenter
  std::vector<double> radius;    // max vertex distance from barycenter
  std::vector<double> volume;    // positive measure
  std::vector<double> diam;      // longest edge
  std::vector<std::uint8_t> region;

  // Barycentric coordinates of p with respect to element t, all n+1 slots
  // (trailing slots zero in 2D). Uses a precomputed inverse, so results are
  // bitwise reproducible for equal inputs.
  std::array<double, 4> bary(Index t, Vec p) const;

  std::vector<std::array<double, 9>> inv_edges;  // row-major (v_i - v_0) inverse
};

ElementTable build_element_table(const CMap& m);

// One region of an approximate ball. SubSimplex pieces carry their geometry in
// `sub`; WholeElement pieces duplicate the element simplex there so consumers
// can treat both uniformly. Fullcap pieces are integrated by Monte Carlo over
// cap.outer with the ball indicator.
struct IntegrationPiece {
  enum class Kind : std::uint8_t { WholeElement, SubSimplex, Fullcap };
  Kind kind = Kind::WholeElement;
  Index parent = kNull;
  Simplex sub;
  FullcapRegion cap;
};

struct ApproxBall {
  int n = 0;
  Vec center;
  double delta = 0;
  Strategy strategy = Strategy::Nocaps;
  std::vector<IntegrationPiece> pieces;
};

// Reusable buffers for walk_ball; one per worker thread.
struct WalkScratch {
  std::vector<Index> queue;
  std::vector<std::uint32_t> stamp;  // marks elements whose guard has been decided
  std::uint32_t epoch = 0;
  std::vector<Vec> pts;
  std::vector<Simplex> tris;
  std::vector<CrossingPoint> crossings;

  void begin(Index element_count) {
    if (stamp.size() < static_cast<std::size_t>(element_count)) {
      stamp.assign(element_count, 0);
      epoch = 0;
    }
    ++epoch;
    queue.clear();
  }
};

namespace detail {

double facet_distance(const ElementTable& et, Index t, int slot, Vec p);

// Polytope pieces of a straddling element. The inner routine fills ws.tris
// with a triangulation of hull(inside vertices + crossings [+ sphere points]);
// the outer one with hull(outside vertices + crossings). Pieces below the
// element's volume floor are dropped; degenerate hulls yield no pieces.
void straddle_inner(const ElementTable& et, WalkScratch& ws, Index t, Ball ball,
                    const Classification& cls, bool sphere_points);
void straddle_outer(const ElementTable& et, WalkScratch& ws, Index t, Ball ball,
                    const Classification& cls);

}  // namespace detail

// Emit the integration pieces that element t contributes to the ball under
// the given strategy, in a fixed order. Sink receives:
//   sink.whole(Index t)                                element fully counted
//   sink.sub(Index t, const Simplex& s)                clipped sub-simplex
//   sink.cap(Index t, std::span<const Simplex> outer)  Monte Carlo region
// `overlaps` must be true iff dist(center, element t) < delta; the Overlap
// strategy is defined by exactly that predicate.
template <class Sink>
void emit_element_pieces(const ElementTable& et, WalkScratch& ws, Index t,
                         Ball ball, Strategy strat, bool overlaps, Sink&& sink) {
  switch (strat) {
    case Strategy::Overlap:
      if (overlaps) sink.whole(t);
      break;
    case Strategy::Barycenter:
      if (dist(et.center[t], ball.center) < ball.radius) sink.whole(t);
      break;
    case Strategy::Inside:
    case Strategy::Nocaps:
    case Strategy::Approxcaps:
    case Strategy::Fullcaps: {
      const Classification cls = classify_simplex(et.simplex[t], ball);
      if (cls.kind == SimplexClass::Inside) {
        sink.whole(t);
      } else if (strat != Strategy::Inside && cls.kind == SimplexClass::Straddle) {
        detail::straddle_inner(et, ws, t, ball, cls, strat == Strategy::Approxcaps);
        for (const Simplex& s : ws.tris) sink.sub(t, s);
        if (strat == Strategy::Fullcaps) {
          detail::straddle_outer(et, ws, t, ball, cls);
          if (!ws.tris.empty()) sink.cap(t, std::span<const Simplex>(ws.tris));
        }
      } else if (strat == Strategy::Fullcaps && cls.kind == SimplexClass::Outside &&
                 overlaps) {
        // Every vertex is outside yet the element meets the ball: the whole
        // element is one Monte Carlo region.
        sink.cap(t, std::span<const Simplex>(&et.simplex[t], 1));
      }
      break;
    }
  }
}

// Breadth-first walk over elements reachable from `seed` through facets,
// visiting every element that comes within `delta` of `center`, and emitting
// integration pieces for `strat`. Calls for one element are contiguous;
// elements appear in BFS order with facet slots scanned in ascending order.
// Throws BallExitsMesh when the ball pokes through an unglued facet.
template <class Sink>
void walk_ball(const ElementTable& et, WalkScratch& ws, Vec center, double delta,
               Index seed, Strategy strat, Sink&& sink) {
  const Ball ball{center, delta};
  const double slack = eps_geo(delta);
  ws.begin(et.count);
  ws.queue.push_back(seed);
  ws.stamp[seed] = ws.epoch;
  for (std::size_t qi = 0; qi < ws.queue.size(); ++qi) {
    const Index t = ws.queue[qi];
    for (int f = 0; f <= et.n; ++f) {
      if (et.neighbor[t][f] == kNull &&
          detail::facet_distance(et, t, f, center) < delta - slack) {
        fail(ErrorCode::BallExitsMesh,
             "ball reaches past an unglued facet of element " + std::to_string(t));
      }
    }

    emit_element_pieces(et, ws, t, ball, strat, /*overlaps=*/true, sink);

    for (int f = 0; f <= et.n; ++f) {
      const Index nb = et.neighbor[t][f];
      if (nb == kNull || ws.stamp[nb] == ws.epoch) continue;
      ws.stamp[nb] = ws.epoch;  // the guard depends only on (nb, center)
      const double gap = dist(et.center[nb], center);
      if (gap >= et.radius[nb] + delta) continue;
      if (gap + et.radius[nb] >= delta &&
          distance_point_simplex(center, et.simplex[nb]) >= delta) {
        continue;
      }
      ws.queue.push_back(nb);
    }
  }
}

// Materialized ball around p, whose containing element is `seed`; throws
// SeedMismatch when p does not lie in that element.
ApproxBall build_approx_ball(const ElementTable& et, Vec p, Index seed,
                             double delta, Strategy strat);

// Total measure of the approximation; Fullcap pieces are integrated with
// cfg.samples draws per outer simplex, seeded per piece index.
double piece_volume_sum(const ApproxBall& b, const McConfig& cfg);

// Monte Carlo estimate of |approximation symmetric-difference exact ball|.
// Counts only polytope pieces (Fullcap regions excluded), so for the fullcaps
// strategy this measures its inner polytope. Samples are drawn uniformly from
// B_{delta+pad}(center); pad must be at least the diameter of the largest
// element near the ball, or parts of the difference fall outside the sampled
// region and the skip radius inside it.
double estimate_symmetric_difference(const ApproxBall& b, double pad,
                                     std::int64_t samples, std::uint64_t seed);

}  // namespace nlfem
