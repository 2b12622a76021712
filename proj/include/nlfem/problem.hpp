#pragma once
// Manufactured polynomial problems: a chosen solution u, the matching forcing
// f = -Lu, and the volume constraint g = u on the outer layer.

#include "nlfem/polynomial.hpp"

namespace nlfem {

struct ManufacturedProblem {
  int n = 2;
  Polynomial u;  // exact solution, also the constraint data g
  Polynomial f;  // forcing, -Lu for the given kernel
};

// n = 2: u = x^2 y + y^2 on the unit square
// n = 3: u = x(1-x) y(1-y) z(1-z) on the unit cube
ManufacturedProblem make_poly_problem(int n, const Kernel& k);

// Caller-supplied solution polynomial; forcing derived from the kernel.
ManufacturedProblem make_problem_from(const Polynomial& u, const Kernel& k);

}  // namespace nlfem
