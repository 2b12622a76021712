#include <cmath>

#include "doctest.h"
#include "nlfem/polynomial.hpp"
#include "nlfem/quadrature.hpp"
#include "support/oracles.hpp"

using namespace nlfem;
using namespace nlfem::testing;

namespace {

Simplex reference_simplex(int n) {
  Simplex s;
  s.n = n;
  s.v[0] = {0, 0, 0};
  s.v[1] = {1, 0, 0};
  s.v[2] = {0, 1, 0};
  if (n == 3) s.v[3] = {0, 0, 1};
  return s;
}

double rule_integral_reference(int n, const QuadratureRule& r,
                               std::array<int, 3> e) {
  // on the reference simplex the cartesian point is (b1, b2[, b3])
  double acc = 0;
  for (int q = 0; q < r.npts; ++q) {
    double v = 1;
    for (int a = 0; a < n; ++a)
      for (int i = 0; i < e[a]; ++i) v *= r.bary[q][a + 1];
    acc += r.w[q] * v;
  }
  double vol = n == 2 ? 0.5 : 1.0 / 6.0;
  return acc * vol;
}

// substitute x_i = v0_i + sum_j J_ij xi_j into a monomial, returning a
// polynomial in the reference coordinates
Polynomial pullback_monomial(int n, std::array<int, 3> e, const Simplex& s) {
  Polynomial acc = Polynomial::constant(1.0);
  for (int a = 0; a < n; ++a) {
    Polynomial axis = Polynomial::constant(s.v[0][a]);
    for (int j = 0; j < n; ++j) {
      std::array<int, 3> unit{0, 0, 0};
      unit[j] = 1;
      axis = axis + Polynomial::monomial(unit, s.v[j + 1][a] - s.v[0][a]);
    }
    for (int i = 0; i < e[a]; ++i) acc = acc * axis;
  }
  return acc;
}

double exact_integral(int n, std::array<int, 3> e, const Simplex& s) {
  Polynomial p = pullback_monomial(n, e, s);
  double acc = 0;
  for (const auto& t : p.terms) acc += t.c * reference_moment(n, t.e);
  double jac = simplex_volume(s) * (n == 2 ? 2.0 : 6.0);
  return acc * jac;
}

Simplex rand_simplex(int n, Rng& rng) {
  for (;;) {
    Simplex s;
    s.n = n;
    for (int i = 0; i <= n; ++i) {
      s.v[i] = {2 * rng.uniform() - 1, 2 * rng.uniform() - 1,
                n == 3 ? 2 * rng.uniform() - 1 : 0};
    }
    if (simplex_volume(s) > 1e-3) return s;
  }
}

}  // namespace

TEST_CASE("rule tables are well formed") {
  for (int n : {2, 3}) {
    for (int deg : {2, 4}) {
      const auto& r = gauss_rule(n, deg);
      CHECK(r.n == n);
      double wsum = 0;
      for (int q = 0; q < r.npts; ++q) {
        wsum += r.w[q];
        double bsum = 0;
        for (int i = 0; i <= n; ++i) {
          CHECK(r.bary[q][i] >= 0);
          bsum += r.bary[q][i];
        }
        CHECK(bsum == doctest::Approx(1.0).epsilon(1e-14));
      }
      CHECK(wsum == doctest::Approx(1.0).epsilon(1e-14));
    }
  }
}

TEST_CASE("rules are exact to their degree on the reference simplex") {
  for (int n : {2, 3}) {
    for (int deg : {2, 4}) {
      const auto& r = gauss_rule(n, deg);
      int upto = r.degree + (n == 3 && deg == 4 ? 1 : 0);  // 14-point rule is degree 5
      std::array<int, 3> e{};
      for (e[0] = 0; e[0] <= upto; ++e[0])
        for (e[1] = 0; e[0] + e[1] <= upto; ++e[1])
          for (e[2] = 0; e[0] + e[1] + e[2] <= (n == 3 ? upto : 0); ++e[2]) {
            double got = rule_integral_reference(n, r, e);
            double want = reference_moment(n, e);
            CHECK(got == doctest::Approx(want).epsilon(1e-12));
          }
    }
  }
}

TEST_CASE("integrate_simplex is exact on mapped monomials") {
  Rng rng(55);
  for (int n : {2, 3}) {
    for (int trial = 0; trial < 25; ++trial) {
      Simplex s = rand_simplex(n, rng);
      const auto& r = gauss_rule(n, 2);
      std::array<int, 3> e{};
      for (e[0] = 0; e[0] <= 2; ++e[0])
        for (e[1] = 0; e[0] + e[1] <= 2; ++e[1])
          for (e[2] = 0; e[0] + e[1] + e[2] <= (n == 3 ? 2 : 0); ++e[2]) {
            double got = integrate_simplex(s, r, [&](Vec p) {
              double v = 1;
              for (int a = 0; a < n; ++a)
                for (int i = 0; i < e[a]; ++i) v *= p[a];
              return v;
            });
            double want = exact_integral(n, e, s);
            CHECK(got == doctest::Approx(want).epsilon(1e-12));
          }
    }
  }
}

TEST_CASE("degree-4 rules integrate quartics on mapped simplices") {
  Rng rng(57);
  for (int n : {2, 3}) {
    Simplex s = rand_simplex(n, rng);
    const auto& r = gauss_rule(n, 4);
    std::array<int, 3> e{};
    for (e[0] = 0; e[0] <= 4; ++e[0])
      for (e[1] = 0; e[0] + e[1] <= 4; ++e[1])
        for (e[2] = 0; e[0] + e[1] + e[2] <= (n == 3 ? 4 : 0); ++e[2]) {
          double got = integrate_simplex(s, r, [&](Vec p) {
            double v = 1;
            for (int a = 0; a < n; ++a)
              for (int i = 0; i < e[a]; ++i) v *= p[a];
            return v;
          });
          CHECK(got == doctest::Approx(exact_integral(n, e, s)).epsilon(1e-11));
        }
  }
}

TEST_CASE("simplex sampling is uniform and reproducible") {
  Rng rng(59);
  for (int n : {2, 3}) {
    Simplex s = reference_simplex(n);
    Rng r1(123), r2(123);
    std::vector<Vec> a, b;
    mc_sample_simplex(s, r1, 500, a);
    mc_sample_simplex(s, r2, 500, b);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].x == b[i].x);
      CHECK(a[i].y == b[i].y);
      CHECK(a[i].z == b[i].z);
    }

    // mean converges to the centroid; fraction below the median plane of
    // vertex 0 matches the volume split
    const int N = 40000;
    Rng r3(777);
    Vec mean{};
    int half = 0;
    for (int i = 0; i < N; ++i) {
      Vec p = sample_simplex(s, r3);
      CHECK(p.x >= -1e-15);
      CHECK(p.y >= -1e-15);
      double bsum = p.x + p.y + (n == 3 ? p.z : 0.0);
      CHECK(bsum <= 1 + 1e-15);
      mean = mean + (1.0 / N) * p;
      // scaled copy of the simplex at vertex 0 with factor 1/2 has volume
      // (1/2)^n of the whole
      if (bsum < 0.5) ++half;
    }
    Vec cent{};
    for (int i = 0; i <= n; ++i) cent = cent + (1.0 / (n + 1)) * s.v[i];
    double sigma = 1.0 / std::sqrt(double(N));
    CHECK(std::abs(mean.x - cent.x) < 5 * sigma);
    CHECK(std::abs(mean.y - cent.y) < 5 * sigma);
    double want = std::pow(0.5, n);
    CHECK(std::abs(double(half) / N - want) < 5 * sigma);
  }
}

TEST_CASE("fullcap integrator on a tetrahedron inside the ball") {
  // the whole tetrahedron is inside: every sample hits, so constants are
  // integrated exactly
  FullcapRegion region;
  region.ball = {{0, 0, 0}, 10.0};
  Simplex s = reference_simplex(3);
  region.outer = {s};
  McStats st;
  double got = mc_integrate_fullcap(region, [](Vec) { return 3.0; },
                                    {500, 42}, &st);
  CHECK(got == doctest::Approx(3.0 / 6.0).epsilon(1e-14));
  CHECK(st.samples == 500);
  CHECK(st.hits == 500);
}

TEST_CASE("fullcap integrator estimates clipped volumes") {
  // unit cube corner tet clipped by a ball of radius 1 centered at the
  // origin: volume of the intersection known from the octant volume
  FullcapRegion region;
  region.ball = {{0, 0, 0}, 0.8};
  Simplex s;
  s.n = 3;
  s.v = {Vec{0, 0, 0}, Vec{2, 0, 0}, Vec{0, 2, 0}, Vec{0, 0, 2}};
  region.outer = {s};
  const int N = 200000;
  McStats st;
  double got = mc_integrate_fullcap(region, [](Vec) { return 1.0; }, {N, 99}, &st);
  double want = 4.0 / 3.0 * M_PI * std::pow(0.8, 3) / 8.0;  // octant
  double vol = simplex_volume(s);
  double q = want / vol;
  double sigma = vol * std::sqrt(q * (1 - q) / N);
  CHECK(std::abs(got - want) < 5 * sigma);
  CHECK(st.hits < st.samples);
  CHECK(st.hits > 0);
}

TEST_CASE("fullcap integrator is a pure function of the config") {
  FullcapRegion region;
  region.ball = {{0.1, 0.2, 0.3}, 0.7};
  Simplex s;
  s.n = 3;
  s.v = {Vec{0, 0, 0}, Vec{1, 0, 0}, Vec{0, 1, 0}, Vec{0, 0, 1}};
  region.outer = {s, s};
  auto f = [](Vec p) { return p.x + 2 * p.y; };
  double a = mc_integrate_fullcap(region, f, {100, 7});
  double b = mc_integrate_fullcap(region, f, {100, 7});
  double c = mc_integrate_fullcap(region, f, {100, 8});
  CHECK(a == b);
  CHECK(a != c);
}
