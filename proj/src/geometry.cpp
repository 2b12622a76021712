#include "nlfem/geometry.hpp"

#include <algorithm>
#include <cstddef>

namespace nlfem {

Classification classify_simplex(const Simplex& s, const Ball& b) {
  Classification c;
  const double r_in = b.radius - eps_geo(b.radius);
  const double r2 = r_in * r_in;
  for (int i = 0; i <= s.n; ++i) {
    bool in = norm2(s.v[i] - b.center) < r2;
    c.inside[i] = in;
    if (in) ++c.inside_count;
  }
  if (c.inside_count == s.n + 1)
    c.kind = SimplexClass::Inside;
  else if (c.inside_count == 0)
    c.kind = SimplexClass::Outside;
  else
    c.kind = SimplexClass::Straddle;
  return c;
}

double edge_sphere_crossing(Vec a, Vec b, const Ball& ball) {
  Vec d = b - a;
  Vec u = a - ball.center;
  const double A = norm2(d);
  const double B = dot(u, d);
  const double C = norm2(u) - ball.radius * ball.radius;
  double disc = B * B - A * C;
  if (disc < 0) disc = 0;
  const double sq = std::sqrt(disc);
  double t = (B <= 0) ? (-B + sq) / A : -C / (B + sq);
  return std::clamp(t, 0.0, 1.0);
}

void crossing_points(const Simplex& s, const Ball& b, const Classification& cls,
                     std::vector<CrossingPoint>& out) {
  out.clear();
  for (int i = 0; i <= s.n; ++i) {
    if (!cls.inside[i]) continue;
    for (int o = 0; o <= s.n; ++o) {
      if (cls.inside[o]) continue;
      double t = edge_sphere_crossing(s.v[i], s.v[o], b);
      out.push_back({s.v[i] + t * (s.v[o] - s.v[i]), i, o});
    }
  }
}

std::vector<CrossingPoint> crossing_points(const Simplex& s, const Ball& b,
                                           const Classification& cls) {
  std::vector<CrossingPoint> out;
  crossing_points(s, b, cls, out);
  return out;
}

double simplex_volume(const Simplex& s) {
  if (s.n == 2) return 0.5 * norm(cross(s.v[1] - s.v[0], s.v[2] - s.v[0]));
  return std::abs(dot(cross(s.v[1] - s.v[0], s.v[2] - s.v[0]), s.v[3] - s.v[0])) / 6.0;
}

std::array<double, 4> barycentric(const Simplex& s, Vec p) {
  std::array<double, 4> l{0, 0, 0, 0};
  if (s.n == 2) {
    Vec e1 = s.v[1] - s.v[0], e2 = s.v[2] - s.v[0], b = p - s.v[0];
    double det = e1.x * e2.y - e1.y * e2.x;
    l[1] = (b.x * e2.y - b.y * e2.x) / det;
    l[2] = (e1.x * b.y - e1.y * b.x) / det;
    l[0] = 1.0 - l[1] - l[2];
  } else {
    Vec e1 = s.v[1] - s.v[0], e2 = s.v[2] - s.v[0], e3 = s.v[3] - s.v[0];
    Vec b = p - s.v[0];
    double det = dot(e1, cross(e2, e3));
    l[1] = dot(b, cross(e2, e3)) / det;
    l[2] = dot(e1, cross(b, e3)) / det;
    l[3] = dot(e1, cross(e2, b)) / det;
    l[0] = 1.0 - l[1] - l[2] - l[3];
  }
  return l;
}

bool point_in_simplex(Vec p, const Simplex& s, double tol) {
  auto l = barycentric(s, p);
  for (int i = 0; i <= s.n; ++i)
    if (l[i] < -tol) return false;
  return true;
}

double point_segment_distance(Vec p, Vec a, Vec b) {
  Vec d = b - a;
  double len2 = norm2(d);
  double t = len2 > 0 ? std::clamp(dot(p - a, d) / len2, 0.0, 1.0) : 0.0;
  return dist(p, a + t * d);
}

// closest point on triangle abc (Ericson's region walk)
double point_triangle_distance(Vec p, Vec a, Vec b, Vec c) {
  Vec ab = b - a, ac = c - a, ap = p - a;
  double d1 = dot(ab, ap), d2 = dot(ac, ap);
  if (d1 <= 0 && d2 <= 0) return dist(p, a);
  Vec bp = p - b;
  double d3 = dot(ab, bp), d4 = dot(ac, bp);
  if (d3 >= 0 && d4 <= d3) return dist(p, b);
  double vc = d1 * d4 - d3 * d2;
  if (vc <= 0 && d1 >= 0 && d3 <= 0) {
    double t = d1 / (d1 - d3);
    return dist(p, a + t * ab);
  }
  Vec cp = p - c;
  double d5 = dot(ab, cp), d6 = dot(ac, cp);
  if (d6 >= 0 && d5 <= d6) return dist(p, c);
  double vb = d5 * d2 - d1 * d6;
  if (vb <= 0 && d2 >= 0 && d6 <= 0) {
    double t = d2 / (d2 - d6);
    return dist(p, a + t * ac);
  }
  double va = d3 * d6 - d5 * d4;
  if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) {
    double t = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return dist(p, b + t * (c - b));
  }
  double denom = 1.0 / (va + vb + vc);
  double v = vb * denom, w = vc * denom;
  return dist(p, a + v * ab + w * ac);
}

double distance_point_simplex(Vec p, const Simplex& s) {
  auto l = barycentric(s, p);
  bool inside = true;
  for (int i = 0; i <= s.n; ++i)
    if (l[i] < 0) inside = false;
  if (inside) return 0.0;
  if (s.n == 2) {
    double d = point_segment_distance(p, s.v[0], s.v[1]);
    d = std::min(d, point_segment_distance(p, s.v[1], s.v[2]));
    return std::min(d, point_segment_distance(p, s.v[2], s.v[0]));
  }
  double d = point_triangle_distance(p, s.v[1], s.v[2], s.v[3]);
  d = std::min(d, point_triangle_distance(p, s.v[0], s.v[2], s.v[3]));
  d = std::min(d, point_triangle_distance(p, s.v[0], s.v[1], s.v[3]));
  return std::min(d, point_triangle_distance(p, s.v[0], s.v[1], s.v[2]));
}

// ---------------------------------------------------------------------------
// convex hull

namespace {

double hull_scale(std::span<const Vec> pts) {
  Vec lo = pts[0], hi = pts[0];
  for (const Vec& p : pts)
    for (int i = 0; i < 3; ++i) {
      lo[i] = std::min(lo[i], p[i]);
      hi[i] = std::max(hi[i], p[i]);
    }
  return std::max(norm(hi - lo), 1e-300);
}

Hull hull2d(std::span<const Vec> pts) {
  std::vector<int> idx(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) idx[i] = int(i);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    if (pts[a].x != pts[b].x) return pts[a].x < pts[b].x;
    return pts[a].y < pts[b].y;
  });
  idx.erase(std::unique(idx.begin(), idx.end(),
                        [&](int a, int b) {
                          return pts[a].x == pts[b].x && pts[a].y == pts[b].y;
                        }),
            idx.end());
  auto cr = [&](int o, int a, int b) {
    return (pts[a].x - pts[o].x) * (pts[b].y - pts[o].y) -
           (pts[a].y - pts[o].y) * (pts[b].x - pts[o].x);
  };
  std::vector<int> ring(2 * idx.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < idx.size(); ++i) {  // lower chain
    while (k >= 2 && cr(ring[k - 2], ring[k - 1], idx[i]) <= 0) --k;
    ring[k++] = idx[i];
  }
  for (std::size_t i = idx.size() - 1, t = k + 1; i-- > 0;) {  // upper chain
    while (k >= t && cr(ring[k - 2], ring[k - 1], idx[i]) <= 0) --k;
    ring[k++] = idx[i];
  }
  if (k < 4)  // closed ring repeats the start; <3 distinct points is degenerate
    fail(ErrorCode::DegenerateHull, "2D hull has fewer than 3 extreme points");
  ring.resize(k - 1);
  Hull h;
  h.n = 2;
  h.points.assign(pts.begin(), pts.end());
  for (std::size_t i = 0; i < ring.size(); ++i)
    h.facets.push_back({ring[i], ring[(i + 1) % ring.size()], int(kNull)});
  return h;
}

Hull hull3d(std::span<const Vec> pts) {
  const double scale = hull_scale(pts);
  const double eps = 1e-12 * scale;

  // affinely independent seed
  int s0 = 0, s1 = -1, s2 = -1, s3 = -1;
  for (std::size_t i = 1; i < pts.size(); ++i)
    if (dist(pts[i], pts[s0]) > eps) {
      s1 = int(i);
      break;
    }
  if (s1 < 0) fail(ErrorCode::DegenerateHull, "3D hull points coincide");
  Vec d01 = pts[s1] - pts[s0];
  for (std::size_t i = 0; i < pts.size(); ++i) {
    double a = norm(cross(d01, pts[i] - pts[s0])) / norm(d01);
    if (a > eps) {
      s2 = int(i);
      break;
    }
  }
  if (s2 < 0) fail(ErrorCode::DegenerateHull, "3D hull points are collinear");
  Vec nrm = cross(d01, pts[s2] - pts[s0]);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (std::abs(dot(nrm, pts[i] - pts[s0])) / norm(nrm) > eps) {
      s3 = int(i);
      break;
    }
  }
  if (s3 < 0) fail(ErrorCode::DegenerateHull, "3D hull points are coplanar");

  if (dot(nrm, pts[s3] - pts[s0]) > 0) std::swap(s1, s2);
  std::vector<std::array<int, 3>> faces{
      {s0, s2, s1}, {s0, s1, s3}, {s1, s2, s3}, {s0, s3, s2}};
  Vec inner = 0.25 * (pts[s0] + pts[s1] + pts[s2] + pts[s3]);

  auto outward = [&](std::array<int, 3>& f) {
    Vec nn = cross(pts[f[1]] - pts[f[0]], pts[f[2]] - pts[f[0]]);
    if (dot(nn, inner - pts[f[0]]) > 0) std::swap(f[1], f[2]);
  };
  for (auto& f : faces) outward(f);

  std::vector<char> used(pts.size(), 0);
  used[std::size_t(s0)] = used[std::size_t(s1)] = 1;
  used[std::size_t(s2)] = used[std::size_t(s3)] = 1;

  std::vector<char> visible;
  for (std::size_t pi = 0; pi < pts.size(); ++pi) {
    if (used[pi]) continue;
    used[pi] = 1;
    Vec p = pts[pi];
    bool dup = false;
    for (const auto& f : faces)
      for (int v : f)
        if (dist(p, pts[v]) <= eps) dup = true;
    if (dup) continue;

    visible.assign(faces.size(), 0);
    bool any = false;
    for (std::size_t fi = 0; fi < faces.size(); ++fi) {
      const auto& f = faces[fi];
      Vec nn = cross(pts[f[1]] - pts[f[0]], pts[f[2]] - pts[f[0]]);
      if (dot(nn, p - pts[f[0]]) > eps * norm(nn)) {
        visible[fi] = 1;
        any = true;
      }
    }
    if (!any) continue;

    // horizon edges: directed edges of visible faces whose reverse lies in an
    // invisible face
    std::vector<std::array<int, 2>> horizon;
    for (std::size_t fi = 0; fi < faces.size(); ++fi) {
      if (!visible[fi]) continue;
      for (int e = 0; e < 3; ++e) {
        int a = faces[fi][e], b = faces[fi][(e + 1) % 3];
        bool open = true;
        for (std::size_t fj = 0; fj < faces.size() && open; ++fj) {
          if (visible[fj]) continue;
          for (int e2 = 0; e2 < 3; ++e2)
            if (faces[fj][e2] == b && faces[fj][(e2 + 1) % 3] == a) open = false;
        }
        if (!open) horizon.push_back({a, b});
      }
    }
    std::vector<std::array<int, 3>> next;
    for (std::size_t fi = 0; fi < faces.size(); ++fi)
      if (!visible[fi]) next.push_back(faces[fi]);
    for (auto [a, b] : horizon) {
      std::array<int, 3> f{a, b, int(pi)};
      outward(f);
      next.push_back(f);
    }
    faces.swap(next);
  }

  Hull h;
  h.n = 3;
  h.points.assign(pts.begin(), pts.end());
  h.facets = std::move(faces);
  return h;
}

}  // namespace

Hull convex_hull(std::span<const Vec> pts, int n) {
  if (pts.empty()) fail(ErrorCode::DegenerateHull, "no points");
  return n == 2 ? hull2d(pts) : hull3d(pts);
}

void triangulate_polytope(const Hull& h, Index parent, std::vector<Simplex>& out) {
  Vec c{};
  {
    std::vector<int> vs;
    for (const auto& f : h.facets)
      for (int i = 0; i < (h.n == 2 ? 2 : 3); ++i) vs.push_back(f[i]);
    std::sort(vs.begin(), vs.end());
    vs.erase(std::unique(vs.begin(), vs.end()), vs.end());
    for (int v : vs) c = c + h.points[v];
    c = (1.0 / double(vs.size())) * c;
  }
  for (const auto& f : h.facets) {
    Simplex s;
    s.n = h.n;
    s.parent = parent;
    s.v[0] = c;
    s.v[1] = h.points[f[0]];
    s.v[2] = h.points[f[1]];
    if (h.n == 3) s.v[3] = h.points[f[2]];
    out.push_back(s);
  }
}

}  // namespace nlfem
