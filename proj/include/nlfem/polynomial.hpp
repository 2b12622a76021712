#pragma once
// Sparse multivariate polynomials and closed-form ball moments; enough to
// push the nonlocal operator through a polynomial solution and get exact
// forcing terms.

#include <array>
#include <vector>

#include "nlfem/core.hpp"

namespace nlfem {

struct Polynomial {
  struct Term {
    std::array<int, 3> e{0, 0, 0};
    double c = 0;
  };
  std::vector<Term> terms;  // sorted by exponent tuple, coefficients nonzero

  double eval(Vec p) const;
  Polynomial derivative(int axis) const;
  int degree() const;

  static Polynomial constant(double c);
  static Polynomial monomial(std::array<int, 3> e, double c);
};

Polynomial operator+(const Polynomial& a, const Polynomial& b);
Polynomial operator*(const Polynomial& a, const Polynomial& b);
Polynomial operator*(double s, const Polynomial& a);

// Moment of the centered radius-r ball: integral of prod x_i^{e_i} over
// B_r(0) in R^n.  Zero unless every exponent is even.
double ball_moment(int n, std::array<int, 3> e, double r);

enum class Normalization { Mass, SecondMoment };

// Kernel is the radial indicator C * 1[|x-y| < delta]; C makes either the
// mass integral or the second moment equal to the dimension n.
struct Kernel {
  int n = 2;
  double delta = 0.1;
  Normalization norm = Normalization::Mass;
  double C = 0;
};
Kernel make_kernel(int n, double delta, Normalization norm);

// Exact image of u under the nonlocal operator
//   Lu(x) = 2 * integral over B_delta(x) of (u(y) - u(x)) * C dy,
// valid for polynomial u; uses the Taylor expansion and ball moments.
Polynomial nonlocal_apply_polynomial(const Polynomial& u, const Kernel& k);

}  // namespace nlfem
