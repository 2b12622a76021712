#include "nlfem/quadrature.hpp"

#include <algorithm>

namespace nlfem {

namespace {

QuadratureRule make_rule(int n, int degree) {
  QuadratureRule r;
  r.n = n;
  r.degree = degree;
  auto set = [&](int i, double a, double b, double c, double d, double w) {
    r.bary[i] = {a, b, c, d};
    r.w[i] = w;
  };
  if (n == 2 && degree == 2) {
    r.npts = 3;  // edge midpoints
    set(0, 0.5, 0.5, 0.0, 0.0, 1.0 / 3.0);
    set(1, 0.0, 0.5, 0.5, 0.0, 1.0 / 3.0);
    set(2, 0.5, 0.0, 0.5, 0.0, 1.0 / 3.0);
  } else if (n == 3 && degree == 2) {
    r.npts = 4;
    const double a = 0.5854101966249685;  // (5 + 3*sqrt(5)) / 20
    const double b = 0.1381966011250105;  // (5 - sqrt(5)) / 20
    set(0, a, b, b, b, 0.25);
    set(1, b, a, b, b, 0.25);
    set(2, b, b, a, b, 0.25);
    set(3, b, b, b, a, 0.25);
  } else if (n == 2 && degree == 4) {
    r.npts = 6;
    const double a1 = 0.816847572980459, b1 = 0.091576213509771;
    const double w1 = 0.109951743655322;
    const double a2 = 0.108103018168070, b2 = 0.445948490915965;
    const double w2 = 0.223381589678011;
    set(0, a1, b1, b1, 0.0, w1);
    set(1, b1, a1, b1, 0.0, w1);
    set(2, b1, b1, a1, 0.0, w1);
    set(3, a2, b2, b2, 0.0, w2);
    set(4, b2, a2, b2, 0.0, w2);
    set(5, b2, b2, a2, 0.0, w2);
  } else if (n == 3 && degree == 4) {
    r.npts = 14;  // degree 5
    const double a = 0.3108859192633005, wa = 0.1126879257180162;
    const double b = 0.0927352503108912, wb = 0.0734930431163619;
    const double c = 0.0455037041256497, d = 0.5 - c;
    const double wc = 0.0425460207770812;
    const double a4 = 1.0 - 3.0 * a, b4 = 1.0 - 3.0 * b;
    set(0, a4, a, a, a, wa);
    set(1, a, a4, a, a, wa);
    set(2, a, a, a4, a, wa);
    set(3, a, a, a, a4, wa);
    set(4, b4, b, b, b, wb);
    set(5, b, b4, b, b, wb);
    set(6, b, b, b4, b, wb);
    set(7, b, b, b, b4, wb);
    set(8, c, c, d, d, wc);
    set(9, c, d, c, d, wc);
    set(10, c, d, d, c, wc);
    set(11, d, c, c, d, wc);
    set(12, d, c, d, c, wc);
    set(13, d, d, c, c, wc);
  } else {
    fail(ErrorCode::BadConfig, "no quadrature rule for n=" + std::to_string(n) +
                                   " degree=" + std::to_string(degree));
  }
  return r;
}

}  // namespace

const QuadratureRule& gauss_rule(int n, int degree) {
  static const QuadratureRule r22 = make_rule(2, 2);
  static const QuadratureRule r32 = make_rule(3, 2);
  static const QuadratureRule r24 = make_rule(2, 4);
  static const QuadratureRule r34 = make_rule(3, 4);
  if (n == 2) return degree <= 2 ? r22 : r24;
  if (n == 3) return degree <= 2 ? r32 : r34;
  fail(ErrorCode::BadConfig, "no quadrature rule for n=" + std::to_string(n));
}

double integrate_simplex(const Simplex& s, const QuadratureRule& rule,
                         const std::function<double(Vec)>& f) {
  double vol = simplex_volume(s);
  double acc = 0;
  for (int q = 0; q < rule.npts; ++q) {
    Vec p{};
    for (int i = 0; i <= s.n; ++i) p = p + rule.bary[q][i] * s.v[i];
    acc += rule.w[q] * f(p);
  }
  return acc * vol;
}

Vec sample_simplex(const Simplex& s, Rng& rng) {
  double u[3] = {0, 0, 0};
  const int n = s.n;
  for (int i = 0; i < n; ++i) u[i] = rng.uniform();
  if (n == 2) {
    if (u[0] > u[1]) std::swap(u[0], u[1]);
    double l0 = u[0], l1 = u[1] - u[0], l2 = 1.0 - u[1];
    return l0 * s.v[0] + l1 * s.v[1] + l2 * s.v[2];
  }
  if (u[0] > u[1]) std::swap(u[0], u[1]);
  if (u[1] > u[2]) std::swap(u[1], u[2]);
  if (u[0] > u[1]) std::swap(u[0], u[1]);
  double l0 = u[0], l1 = u[1] - u[0], l2 = u[2] - u[1], l3 = 1.0 - u[2];
  return l0 * s.v[0] + l1 * s.v[1] + l2 * s.v[2] + l3 * s.v[3];
}

void mc_sample_simplex(const Simplex& s, Rng& rng, int count,
                       std::vector<Vec>& out) {
  out.clear();
  out.reserve(std::size_t(count));
  for (int i = 0; i < count; ++i) out.push_back(sample_simplex(s, rng));
}

double mc_integrate_fullcap(const FullcapRegion& region,
                            const std::function<double(Vec)>& f,
                            const McConfig& cfg, McStats* stats) {
  Rng rng(cfg.seed);
  const double r2 = region.ball.radius * region.ball.radius;
  double total = 0;
  for (const Simplex& s : region.outer) {
    const double vol = simplex_volume(s);
    double acc = 0;
    std::uint64_t hits = 0;
    for (int i = 0; i < cfg.samples; ++i) {
      Vec p = sample_simplex(s, rng);
      if (norm2(p - region.ball.center) < r2) {
        acc += f(p);
        ++hits;
      }
    }
    total += vol * acc / double(cfg.samples);
    if (stats) {
      stats->samples += std::uint64_t(cfg.samples);
      stats->hits += hits;
    }
  }
  return total;
}

}  // namespace nlfem
