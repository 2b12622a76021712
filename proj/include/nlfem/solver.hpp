#pragma once

#include <span>
#include <vector>

#include "nlfem/assembly.hpp"

namespace nlfem {

struct SolveReport {
  int iterations = 0;
  double relative_residual = 0;
  bool converged = false;
};

void csr_matvec(const LinearSystem& sys, std::span<const double> x,
                std::span<double> y);

// Plain conjugate gradients from a zero start; stops when ||r|| <= tol*||b||
// or after max_iterations. A zero right-hand side returns the zero vector
// immediately with zero iterations.
std::vector<double> cg_solve(const LinearSystem& sys, std::span<const double> b,
                             double tol, int max_iterations,
                             SolveReport* report = nullptr);

}  // namespace nlfem
