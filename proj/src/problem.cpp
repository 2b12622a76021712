#include "nlfem/problem.hpp"

namespace nlfem {

ManufacturedProblem make_problem_from(const Polynomial& u, const Kernel& k) {
  ManufacturedProblem p;
  p.n = k.n;
  p.u = u;
  p.f = -1.0 * nonlocal_apply_polynomial(u, k);
  return p;
}

ManufacturedProblem make_poly_problem(int n, const Kernel& k) {
  if (n != k.n) fail(ErrorCode::BadConfig, "problem/kernel dimension mismatch");
  if (n == 2) {
    Polynomial u = Polynomial::monomial({2, 1, 0}, 1.0) +
                   Polynomial::monomial({0, 2, 0}, 1.0);
    return make_problem_from(u, k);
  }
  auto leg = [](int axis) {
    return Polynomial::monomial({axis == 0, axis == 1, axis == 2}, 1.0) +
           Polynomial::monomial({2 * (axis == 0), 2 * (axis == 1), 2 * (axis == 2)},
                                -1.0);
  };
  Polynomial u = leg(0) * leg(1) * leg(2);  // x(1-x) y(1-y) z(1-z)
  return make_problem_from(u, k);
}

}  // namespace nlfem
