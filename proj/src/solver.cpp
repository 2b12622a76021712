#include "nlfem/solver.hpp"

#include <cmath>

namespace nlfem {

void csr_matvec(const LinearSystem& sys, std::span<const double> x,
                std::span<double> y) {
  for (Index r = 0; r < sys.rows; ++r) {
    double acc = 0;
    for (Index k = sys.row_ptr[r]; k < sys.row_ptr[r + 1]; ++k) {
      acc += sys.values[k] * x[sys.col_idx[k]];
    }
    y[r] = acc;
  }
}

namespace {
double dot_vec(std::span<const double> a, std::span<const double> b) {
  double acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}
}  // namespace

std::vector<double> cg_solve(const LinearSystem& sys, std::span<const double> b,
                             double tol, int max_iterations, SolveReport* report) {
  if (Index(b.size()) != sys.rows) {
    fail(ErrorCode::BadConfig, "right-hand side length does not match the matrix");
  }
  const Index nr = sys.rows;
  std::vector<double> x(nr, 0.0);
  SolveReport rep;
  const double bnorm = std::sqrt(dot_vec(b, b));
  if (bnorm == 0) {
    rep.converged = true;
    if (report) *report = rep;
    return x;
  }

  std::vector<double> r(b.begin(), b.end()), p(r), Ap(nr);
  double rr = dot_vec(r, r);
  while (rep.iterations < max_iterations) {
    csr_matvec(sys, p, Ap);
    const double pAp = dot_vec(p, Ap);
    if (!(pAp > 0)) break;  // lost positive definiteness in finite precision
    const double alpha = rr / pAp;
    for (Index i = 0; i < nr; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * Ap[i];
    }
    ++rep.iterations;
    const double rr_next = dot_vec(r, r);
    if (std::sqrt(rr_next) <= tol * bnorm) {
      rr = rr_next;
      rep.converged = true;
      break;
    }
    const double beta = rr_next / rr;
    rr = rr_next;
    for (Index i = 0; i < nr; ++i) p[i] = r[i] + beta * p[i];
  }
  rep.relative_residual = std::sqrt(rr) / bnorm;
  if (report) *report = rep;
  return x;
}

}  // namespace nlfem
