#include "nlfem/ball_approx.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>

namespace nlfem {

const char* strategy_name(Strategy s) {
  switch (s) {
    case Strategy::Inside: return "inside";
    case Strategy::Overlap: return "overlap";
    case Strategy::Barycenter: return "barycenter";
    case Strategy::Nocaps: return "nocaps";
    case Strategy::Approxcaps: return "approxcaps";
    case Strategy::Fullcaps: return "fullcaps";
  }
  return "?";
}

Strategy parse_strategy(std::string_view name) {
  for (Strategy s : kAllStrategies) {
    if (name == strategy_name(s)) return s;
  }
  fail(ErrorCode::BadConfig,
       "unknown strategy '" + std::string(name) +
           "' (expected inside, overlap, barycenter, nocaps, approxcaps, or fullcaps)");
}

// ---------------------------------------------------------------------------
// element table

ElementTable build_element_table(const CMap& m) {
  ElementTable et;
  et.n = m.n;
  et.count = m.ncell_count();
  et.node_count = static_cast<Index>(m.coords.size());
  et.node = m.coords;
  et.verts.resize(et.count);
  et.neighbor.resize(et.count);
  et.simplex.resize(et.count);
  et.center.resize(et.count);
  et.radius.resize(et.count);
  et.volume.resize(et.count);
  et.diam.resize(et.count);
  et.region.resize(et.count);
  et.inv_edges.resize(et.count);

  const int n = et.n;
  const int per = (n == 2) ? 3 : 12;
  for (Index t = 0; t < et.count; ++t) {
    et.verts[t] = m.ncell_vertices(t);
    Simplex& s = et.simplex[t];
    s.n = n;
    s.parent = t;
    for (int i = 0; i <= n; ++i) s.v[i] = m.coords[et.verts[t][i]];

    Vec c = s.v[0];
    for (int i = 1; i <= n; ++i) c = c + s.v[i];
    et.center[t] = (1.0 / (n + 1)) * c;
    double r2 = 0, d2 = 0;
    for (int i = 0; i <= n; ++i) {
      r2 = std::max(r2, norm2(s.v[i] - et.center[t]));
      for (int j = i + 1; j <= n; ++j) d2 = std::max(d2, norm2(s.v[i] - s.v[j]));
    }
    et.radius[t] = std::sqrt(r2);
    et.diam[t] = std::sqrt(d2);
    et.volume[t] = simplex_volume(s);
    et.region[t] = m.region[t];

    const Vec e1 = s.v[1] - s.v[0];
    const Vec e2 = s.v[2] - s.v[0];
    auto& inv = et.inv_edges[t];
    if (n == 2) {
      const double det = e1.x * e2.y - e2.x * e1.y;
      if (det == 0) fail(ErrorCode::BadConfig, "degenerate element " + std::to_string(t));
      inv = {e2.y / det, -e2.x / det, -e1.y / det, e1.x / det, 0, 0, 0, 0, 0};
      for (int i = 0; i < 3; ++i) {
        et.neighbor[t][i] = kNull;
        const Index d = m.beta[2][3 * t + (i + 1) % 3];
        if (d != kNull) et.neighbor[t][i] = m.cell_of[2][d];
      }
    } else {
      const Vec e3 = s.v[3] - s.v[0];
      const double det = dot(e1, cross(e2, e3));
      if (det == 0) fail(ErrorCode::BadConfig, "degenerate element " + std::to_string(t));
      const Vec r1 = cross(e2, e3), r2v = cross(e3, e1), r3 = cross(e1, e2);
      inv = {r1.x / det, r1.y / det, r1.z / det, r2v.x / det, r2v.y / det,
             r2v.z / det, r3.x / det, r3.y / det, r3.z / det};
      for (int f = 0; f < 4; ++f) {
        et.neighbor[t][f] = kNull;
        const Index d = m.beta[3][per * t + 3 * f];
        if (d != kNull) et.neighbor[t][f] = m.cell_of[3][d];
      }
    }
  }
  return et;
}

std::array<double, 4> ElementTable::bary(Index t, Vec p) const {
  const auto& inv = inv_edges[t];
  const Vec d = p - simplex[t].v[0];
  std::array<double, 4> out{};
  if (n == 2) {
    out[1] = inv[0] * d.x + inv[1] * d.y;
    out[2] = inv[2] * d.x + inv[3] * d.y;
    out[0] = 1.0 - out[1] - out[2];
  } else {
    out[1] = inv[0] * d.x + inv[1] * d.y + inv[2] * d.z;
    out[2] = inv[3] * d.x + inv[4] * d.y + inv[5] * d.z;
    out[3] = inv[6] * d.x + inv[7] * d.y + inv[8] * d.z;
    out[0] = 1.0 - out[1] - out[2] - out[3];
  }
  return out;
}

// ---------------------------------------------------------------------------
// straddle pieces

namespace detail {

double facet_distance(const ElementTable& et, Index t, int slot, Vec p) {
  const Simplex& s = et.simplex[t];
  Vec f[3];
  int k = 0;
  for (int i = 0; i <= et.n; ++i) {
    if (i != slot) f[k++] = s.v[i];
  }
  if (et.n == 2) return point_segment_distance(p, f[0], f[1]);
  return point_triangle_distance(p, f[0], f[1], f[2]);
}

namespace {

void push_piece(std::vector<Simplex>& out, int n, Index parent, Vec a, Vec b,
                Vec c, Vec d, double tau) {
  Simplex s;
  s.n = n;
  s.parent = parent;
  s.v = {a, b, c, d};
  if (simplex_volume(s) > tau) out.push_back(s);
}

double tet_volume(Vec a, Vec b, Vec c, Vec d) {
  return std::abs(dot(cross(b - a, c - a), d - a)) / 6.0;
}

// Standard three-tet split of a (possibly warped) prism with triangle faces
// A and B and side edges A[i]-B[i].
void split_prism(std::vector<Simplex>& out, Index parent, const Vec A[3],
                 const Vec B[3], double tau) {
  push_piece(out, 3, parent, A[0], A[1], A[2], B[0], tau);
  push_piece(out, 3, parent, A[1], A[2], B[0], B[1], tau);
  push_piece(out, 3, parent, A[2], B[0], B[1], B[2], tau);
}

// Split the prism both ways across its one warped quad (between A[1]A[2] and
// B[1]B[2]) and keep whichever covers more volume; that choice reproduces the
// convex hull of the six points. The quads through A[0],B[0] must be planar.
void split_warped_prism(std::vector<Simplex>& out, Index parent, const Vec A[3],
                        const Vec B[3], double tau) {
  const double va = tet_volume(A[0], A[1], A[2], B[0]) +
                    tet_volume(A[1], A[2], B[0], B[1]) +
                    tet_volume(A[2], B[0], B[1], B[2]);
  const double vb = tet_volume(A[0], A[2], A[1], B[0]) +
                    tet_volume(A[2], A[1], B[0], B[2]) +
                    tet_volume(A[1], B[0], B[2], B[1]);
  if (vb > va) {
    const Vec A2[3] = {A[0], A[2], A[1]};
    const Vec B2[3] = {B[0], B[2], B[1]};
    split_prism(out, parent, A2, B2, tau);
  } else {
    split_prism(out, parent, A, B, tau);
  }
}

void hull_pieces(const std::vector<Vec>& pts, int n, Index parent, double tau,
                 std::vector<Simplex>& out) {
  Hull h;
  try {
    h = convex_hull(pts, n);
  } catch (const Error& e) {
    if (e.code == ErrorCode::DegenerateHull) return;
    throw;
  }
  std::vector<Simplex> fan;
  triangulate_polytope(h, parent, fan);
  for (const Simplex& s : fan) {
    if (simplex_volume(s) > tau) out.push_back(s);
  }
}

}  // namespace

void straddle_inner(const ElementTable& et, WalkScratch& ws, Index t, Ball ball,
                    const Classification& cls, bool sphere_points) {
  const Simplex& s = et.simplex[t];
  const int n = et.n;
  const double tau = tau_vol(et.diam[t], n);
  ws.tris.clear();
  crossing_points(s, ball, cls, ws.crossings);
  const auto& q = ws.crossings;

  int in_slot[4] = {0, 0, 0, 0};
  int m = 0;
  for (int i = 0; i <= n; ++i) {
    if (cls.inside[i]) in_slot[m++] = i;
  }

  if (sphere_points) {
    // Inside vertices, crossings, and one sphere point per crossing pair that
    // shares an edge endpoint; generic hull since the shape varies.
    ws.pts.clear();
    for (int i = 0; i < m; ++i) ws.pts.push_back(s.v[in_slot[i]]);
    for (const CrossingPoint& c : q) ws.pts.push_back(c.p);
    for (std::size_t i = 0; i < q.size(); ++i) {
      for (std::size_t j = i + 1; j < q.size(); ++j) {
        if (q[i].inside_slot != q[j].inside_slot &&
            q[i].outside_slot != q[j].outside_slot) {
          continue;
        }
        const Vec mid = 0.5 * (q[i].p + q[j].p) - ball.center;
        const double len = norm(mid);
        if (len <= 0) continue;
        ws.pts.push_back(ball.center + (ball.radius / len) * mid);
      }
    }
    hull_pieces(ws.pts, n, t, tau, ws.tris);
    return;
  }

  if (n == 2) {
    if (m == 1) {
      push_piece(ws.tris, 2, t, s.v[in_slot[0]], q[0].p, q[1].p, {}, tau);
    } else {  // m == 2: the chord cuts off one corner, quad fans from a
      push_piece(ws.tris, 2, t, s.v[in_slot[0]], s.v[in_slot[1]], q[1].p, {}, tau);
      push_piece(ws.tris, 2, t, s.v[in_slot[0]], q[1].p, q[0].p, {}, tau);
    }
    return;
  }

  if (m == 1) {
    push_piece(ws.tris, 3, t, s.v[in_slot[0]], q[0].p, q[1].p, q[2].p, tau);
  } else if (m == 2) {
    // Crossings in order: a->o0, a->o1, b->o0, b->o1. Side quads through the
    // a-b edge lie in the faces (a,b,o0) and (a,b,o1); the crossing quad warps.
    const Vec A[3] = {s.v[in_slot[0]], q[0].p, q[1].p};
    const Vec B[3] = {s.v[in_slot[1]], q[2].p, q[3].p};
    split_warped_prism(ws.tris, t, A, B, tau);
  } else {  // m == 3: frustum below the cut plane; all side quads are planar
    const Vec A[3] = {s.v[in_slot[0]], s.v[in_slot[1]], s.v[in_slot[2]]};
    const Vec B[3] = {q[0].p, q[1].p, q[2].p};
    split_prism(ws.tris, t, A, B, tau);
  }
}

void straddle_outer(const ElementTable& et, WalkScratch& ws, Index t, Ball ball,
                    const Classification& cls) {
  const Simplex& s = et.simplex[t];
  const int n = et.n;
  const double tau = tau_vol(et.diam[t], n);
  ws.tris.clear();
  crossing_points(s, ball, cls, ws.crossings);
  const auto& q = ws.crossings;

  int out_slot[4] = {0, 0, 0, 0};
  int m = 0, mo = 0;
  for (int i = 0; i <= n; ++i) {
    if (cls.inside[i]) ++m;
    else out_slot[mo++] = i;
  }

  if (n == 2) {
    if (m == 1) {  // chord cuts the triangle; outer part holds both o vertices
      push_piece(ws.tris, 2, t, s.v[out_slot[0]], s.v[out_slot[1]], q[1].p, {}, tau);
      push_piece(ws.tris, 2, t, s.v[out_slot[0]], q[1].p, q[0].p, {}, tau);
    } else {  // m == 2: corner triangle at the outside vertex
      push_piece(ws.tris, 2, t, s.v[out_slot[0]], q[0].p, q[1].p, {}, tau);
    }
    return;
  }

  if (m == 1) {
    // Frustum between the crossing triangle and the outside face; side quads
    // lie in the faces (a, o_i, o_j).
    const Vec A[3] = {q[0].p, q[1].p, q[2].p};
    const Vec B[3] = {s.v[out_slot[0]], s.v[out_slot[1]], s.v[out_slot[2]]};
    split_prism(ws.tris, t, A, B, tau);
  } else if (m == 2) {
    // Side edges pair c-d, a->c with a->d, b->c with b->d; quads through the
    // c-d edge lie in the faces (a,c,d) and (b,c,d); the crossing quad warps.
    const Vec A[3] = {s.v[out_slot[0]], q[0].p, q[2].p};
    const Vec B[3] = {s.v[out_slot[1]], q[1].p, q[3].p};
    split_warped_prism(ws.tris, t, A, B, tau);
  } else {  // m == 3: corner tet at the one outside vertex
    push_piece(ws.tris, 3, t, s.v[out_slot[0]], q[0].p, q[1].p, q[2].p, tau);
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// materialized balls

namespace {

struct CollectSink {
  const ElementTable& et;
  ApproxBall& out;

  void whole(Index t) {
    IntegrationPiece pc;
    pc.kind = IntegrationPiece::Kind::WholeElement;
    pc.parent = t;
    pc.sub = et.simplex[t];
    out.pieces.push_back(std::move(pc));
  }
  void sub(Index t, const Simplex& s) {
    IntegrationPiece pc;
    pc.kind = IntegrationPiece::Kind::SubSimplex;
    pc.parent = t;
    pc.sub = s;
    out.pieces.push_back(std::move(pc));
  }
  void cap(Index t, std::span<const Simplex> outer) {
    IntegrationPiece pc;
    pc.kind = IntegrationPiece::Kind::Fullcap;
    pc.parent = t;
    pc.cap.outer.assign(outer.begin(), outer.end());
    pc.cap.ball = {out.center, out.delta};
    pc.cap.parent = t;
    out.pieces.push_back(std::move(pc));
  }
};

}  // namespace

ApproxBall build_approx_ball(const ElementTable& et, Vec p, Index seed,
                             double delta, Strategy strat) {
  if (seed < 0 || seed >= et.count) {
    fail(ErrorCode::BadIndex, "seed element " + std::to_string(seed) +
                                  " out of range [0, " + std::to_string(et.count) + ")");
  }
  if (!point_in_simplex(p, et.simplex[seed], 1e-10)) {
    fail(ErrorCode::SeedMismatch,
         "point does not lie in seed element " + std::to_string(seed));
  }
  if (!(delta > 0)) fail(ErrorCode::BadConfig, "delta must be positive");
  ApproxBall b;
  b.n = et.n;
  b.center = p;
  b.delta = delta;
  b.strategy = strat;
  WalkScratch ws;
  CollectSink sink{et, b};
  walk_ball(et, ws, p, delta, seed, strat, sink);
  return b;
}

double piece_volume_sum(const ApproxBall& b, const McConfig& cfg) {
  double acc = 0;
  for (std::size_t i = 0; i < b.pieces.size(); ++i) {
    const IntegrationPiece& pc = b.pieces[i];
    if (pc.kind == IntegrationPiece::Kind::Fullcap) {
      McConfig c = cfg;
      c.seed = mix_seed(cfg.seed, std::uint64_t(pc.parent), 0, i);
      acc += mc_integrate_fullcap(pc.cap, [](Vec) { return 1.0; }, c, nullptr);
    } else {
      acc += simplex_volume(pc.sub);
    }
  }
  return acc;
}

double estimate_symmetric_difference(const ApproxBall& b, double pad,
                                     std::int64_t samples, std::uint64_t seed) {
  const int n = b.n;
  const double R = b.delta + pad;
  const Vec lo = b.center - Vec{R, R, n == 3 ? R : 0.0};

  // Bin the polytope pieces over the sampling region's bounding box so each
  // sample only tests nearby pieces.
  const int G = 24;
  const int bins = (n == 2) ? G * G : G * G * G;
  std::vector<std::vector<std::int32_t>> bin(bins);
  const double cell = 2.0 * R / G;
  auto clampi = [&](int v) { return std::min(G - 1, std::max(0, v)); };
  for (std::size_t i = 0; i < b.pieces.size(); ++i) {
    const IntegrationPiece& pc = b.pieces[i];
    if (pc.kind == IntegrationPiece::Kind::Fullcap) continue;
    Vec mn = pc.sub.v[0], mx = pc.sub.v[0];
    for (int k = 1; k <= n; ++k) {
      for (int a = 0; a < 3; ++a) {
        mn[a] = std::min(mn[a], pc.sub.v[k][a]);
        mx[a] = std::max(mx[a], pc.sub.v[k][a]);
      }
    }
    int lo_ix = clampi(int((mn.x - lo.x) / cell)), hi_ix = clampi(int((mx.x - lo.x) / cell));
    int lo_iy = clampi(int((mn.y - lo.y) / cell)), hi_iy = clampi(int((mx.y - lo.y) / cell));
    int lo_iz = 0, hi_iz = 0;
    if (n == 3) {
      lo_iz = clampi(int((mn.z - lo.z) / cell));
      hi_iz = clampi(int((mx.z - lo.z) / cell));
    }
    for (int iz = lo_iz; iz <= hi_iz; ++iz) {
      for (int iy = lo_iy; iy <= hi_iy; ++iy) {
        for (int ix = lo_ix; ix <= hi_ix; ++ix) {
          bin[(iz * G + iy) * G + ix].push_back(std::int32_t(i));
        }
      }
    }
  }

  Rng rng(seed);
  const double r2 = b.delta * b.delta;
  // Samples closer to the center than delta - pad lie in the exact ball and,
  // because every element they touch sits strictly inside it, in a whole or
  // clipped piece of the approximation as well; they can never contribute.
  // The eps_geo margin covers the vertex slack classify_simplex applies.
  const double rin = b.delta - pad - 10.0 * eps_geo(b.delta);
  const double rin2 = rin > 0 ? rin * rin : 0.0;
  std::int64_t hits = 0;
  for (std::int64_t s = 0; s < samples; ++s) {
    // Uniform draw from the ball of radius R around the center, by rejection
    // from its bounding box.
    Vec d;
    double d2;
    do {
      d.x = 2.0 * rng.uniform() - 1.0;
      d.y = 2.0 * rng.uniform() - 1.0;
      d.z = n == 3 ? 2.0 * rng.uniform() - 1.0 : 0.0;
      d2 = norm2(d);
    } while (d2 >= 1.0);
    const Vec x = b.center + R * d;
    const double rho2 = d2 * R * R;
    if (rho2 < rin2) continue;
    const bool exact = rho2 < r2;
    bool approx = false;
    const int ix = clampi(int((x.x - lo.x) / cell));
    const int iy = clampi(int((x.y - lo.y) / cell));
    const int iz = (n == 3) ? clampi(int((x.z - lo.z) / cell)) : 0;
    for (std::int32_t pi : bin[(iz * G + iy) * G + ix]) {
      if (point_in_simplex(x, b.pieces[pi].sub, 1e-13)) {
        approx = true;
        break;
      }
    }
    if (approx != exact) ++hits;
  }
  const double ball_vol =
      (n == 2) ? M_PI * R * R : (4.0 / 3.0) * M_PI * R * R * R;
  return ball_vol * double(hits) / double(samples);
}

}  // namespace nlfem
