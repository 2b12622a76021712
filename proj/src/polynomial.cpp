#include "nlfem/polynomial.hpp"

#include <algorithm>
#include <cmath>

namespace nlfem {

namespace {

void normalize(std::vector<Polynomial::Term>& ts) {
  std::sort(ts.begin(), ts.end(),
            [](const auto& a, const auto& b) { return a.e < b.e; });
  std::vector<Polynomial::Term> out;
  for (const auto& t : ts) {
    if (!out.empty() && out.back().e == t.e)
      out.back().c += t.c;
    else
      out.push_back(t);
  }
  out.erase(std::remove_if(out.begin(), out.end(),
                           [](const auto& t) { return t.c == 0.0; }),
            out.end());
  ts = std::move(out);
}

}  // namespace

double Polynomial::eval(Vec p) const {
  double acc = 0;
  for (const auto& t : terms) {
    double v = t.c;
    for (int a = 0; a < 3; ++a)
      for (int i = 0; i < t.e[a]; ++i) v *= p[a];
    acc += v;
  }
  return acc;
}

Polynomial Polynomial::derivative(int axis) const {
  Polynomial d;
  for (const auto& t : terms) {
    if (t.e[axis] == 0) continue;
    Term nt = t;
    nt.c *= t.e[axis];
    nt.e[axis] -= 1;
    d.terms.push_back(nt);
  }
  normalize(d.terms);
  return d;
}

int Polynomial::degree() const {
  int deg = 0;
  for (const auto& t : terms) deg = std::max(deg, t.e[0] + t.e[1] + t.e[2]);
  return deg;
}

Polynomial Polynomial::constant(double c) {
  Polynomial p;
  if (c != 0) p.terms.push_back({{0, 0, 0}, c});
  return p;
}

Polynomial Polynomial::monomial(std::array<int, 3> e, double c) {
  Polynomial p;
  if (c != 0) p.terms.push_back({e, c});
  return p;
}

Polynomial operator+(const Polynomial& a, const Polynomial& b) {
  Polynomial r;
  r.terms = a.terms;
  r.terms.insert(r.terms.end(), b.terms.begin(), b.terms.end());
  normalize(r.terms);
  return r;
}

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
  Polynomial r;
  for (const auto& ta : a.terms)
    for (const auto& tb : b.terms)
      r.terms.push_back({{ta.e[0] + tb.e[0], ta.e[1] + tb.e[1], ta.e[2] + tb.e[2]},
                         ta.c * tb.c});
  normalize(r.terms);
  return r;
}

Polynomial operator*(double s, const Polynomial& a) {
  Polynomial r = a;
  for (auto& t : r.terms) t.c *= s;
  if (s == 0) r.terms.clear();
  return r;
}

double ball_moment(int n, std::array<int, 3> e, double r) {
  int total = 0;
  for (int a = 0; a < n; ++a) {
    if (e[a] % 2 != 0) return 0.0;
    total += e[a];
  }
  for (int a = n; a < 3; ++a)
    if (e[a] != 0) fail(ErrorCode::BadConfig, "moment exponent beyond dimension");
  // prod (e_i - 1)!! * pi^(n/2) / (2^(|e|/2) * Gamma((n+|e|)/2 + 1)) * r^(n+|e|)
  double dfac = 1;
  for (int a = 0; a < n; ++a)
    for (int k = e[a] - 1; k >= 2; k -= 2) dfac *= k;
  double num = dfac * std::pow(M_PI, 0.5 * n);
  double den = std::pow(2.0, 0.5 * total) * std::tgamma(0.5 * (n + total) + 1.0);
  return num / den * std::pow(r, n + total);
}

Kernel make_kernel(int n, double delta, Normalization norm) {
  if (n != 2 && n != 3) fail(ErrorCode::BadConfig, "kernel dimension must be 2 or 3");
  if (!(delta > 0)) fail(ErrorCode::BadConfig, "kernel horizon must be positive");
  Kernel k{n, delta, norm, 0};
  // C = n / (mass or second moment of the unit-coefficient indicator)
  double mass = ball_moment(n, {0, 0, 0}, delta);
  if (norm == Normalization::Mass) {
    k.C = double(n) / mass;
  } else {
    double m2 = ball_moment(n, {2, 0, 0}, delta) * n;  // sum over axes
    k.C = double(n) / m2;
  }
  return k;
}

Polynomial nonlocal_apply_polynomial(const Polynomial& u, const Kernel& k) {
  // Lu(x) = 2C * sum over even alpha != 0 of D^alpha u(x) / alpha! * M_alpha
  Polynomial acc;
  const int deg = u.degree();
  std::array<int, 3> a{0, 0, 0};
  for (a[0] = 0; a[0] <= deg; a[0] += 2) {
    for (a[1] = 0; a[0] + a[1] <= deg; a[1] += 2) {
      const int zmax = (k.n == 3) ? deg - a[0] - a[1] : 0;
      for (a[2] = 0; a[2] <= zmax; a[2] += 2) {
        if (a[0] + a[1] + a[2] == 0) continue;
        Polynomial d = u;
        double fact = 1;
        for (int ax = 0; ax < 3; ++ax)
          for (int i = 0; i < a[ax]; ++i) {
            d = d.derivative(ax);
            fact *= (i + 1);
          }
        if (d.terms.empty()) continue;
        acc = acc + (ball_moment(k.n, a, k.delta) / fact) * d;
      }
    }
  }
  return (2.0 * k.C) * acc;
}

}  // namespace nlfem
