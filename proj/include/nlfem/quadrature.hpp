#pragma once
// Fixed barycentric Gauss rules on simplices, uniform simplex sampling, and
// the Monte Carlo integrator for fullcap regions.

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "nlfem/core.hpp"
#include "nlfem/geometry.hpp"

namespace nlfem {

struct QuadratureRule {
  int n = 2;
  int npts = 0;
  int degree = 0;
  std::array<std::array<double, 4>, 14> bary{};
  std::array<double, 14> w{};  // weights sum to 1; scale by simplex volume
};

// degree 2 rules for assembly, degree 4 (2D) / 5 (3D) for error norms
const QuadratureRule& gauss_rule(int n, int degree);

double integrate_simplex(const Simplex& s, const QuadratureRule& rule,
                         const std::function<double(Vec)>& f);

struct McConfig {
  int samples = 200;            // per outer sub-simplex
  std::uint64_t seed = 0x5eedULL;
};

struct McStats {
  std::uint64_t samples = 0;
  std::uint64_t hits = 0;
};

// Uniformly distributed point in a simplex (sorted spacings construction).
Vec sample_simplex(const Simplex& s, Rng& rng);
void mc_sample_simplex(const Simplex& s, Rng& rng, int count, std::vector<Vec>& out);

// Integral of f over (union of outer sub-simplices) ∩ ball, estimated by
// rejection sampling each sub-simplex with cfg.samples points.  One RNG
// stream seeded from cfg.seed covers the whole region, so the result is a
// pure function of (region, f, cfg).
double mc_integrate_fullcap(const FullcapRegion& region,
                            const std::function<double(Vec)>& f,
                            const McConfig& cfg, McStats* stats = nullptr);

}  // namespace nlfem
