#pragma once
// Shared scalar types, error reporting, tolerances, and a small fast RNG.

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace nlfem {

using Index = std::int32_t;
inline constexpr Index kNull = -1;

// ---------------------------------------------------------------------------
// errors

enum class ErrorCode {
  BadIndex,
  DanglingVertex,
  NonManifold,
  SeedMismatch,
  BallExitsMesh,
  DegenerateHull,
  BadMeshFile,
  BadConfig,
};

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::BadIndex: return "BadIndex";
    case ErrorCode::DanglingVertex: return "DanglingVertex";
    case ErrorCode::NonManifold: return "NonManifold";
    case ErrorCode::SeedMismatch: return "SeedMismatch";
    case ErrorCode::BallExitsMesh: return "BallExitsMesh";
    case ErrorCode::DegenerateHull: return "DegenerateHull";
    case ErrorCode::BadMeshFile: return "BadMeshFile";
    case ErrorCode::BadConfig: return "BadConfig";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what),
        code(code) {}
  ErrorCode code;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

// ---------------------------------------------------------------------------
// points
//
// Points live in R^3; 2D meshes keep z = 0 so distance and measure code is
// shared between dimensions.

struct Vec {
  double x = 0, y = 0, z = 0;
  double& operator[](int i) { return (&x)[i]; }
  double operator[](int i) const { return (&x)[i]; }
};

inline Vec operator+(Vec a, Vec b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Vec operator-(Vec a, Vec b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline Vec operator*(double s, Vec a) { return {s * a.x, s * a.y, s * a.z}; }
inline double dot(Vec a, Vec b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec cross(Vec a, Vec b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm2(Vec a) { return dot(a, a); }
inline double norm(Vec a) { return std::sqrt(norm2(a)); }
inline double dist(Vec a, Vec b) { return norm(a - b); }

// ---------------------------------------------------------------------------
// tolerances
//
// Vertices within eps_geo of the sphere count as outside; keeps straddle
// classification stable when a vertex sits numerically on the sphere.
inline double eps_geo(double delta) { return 1e-10 * delta; }
// Volume floor below which a sub-simplex is dropped as degenerate.
inline double tau_vol(double h, int n) { return 1e-14 * std::pow(h, n); }

// ---------------------------------------------------------------------------
// hashing / rng

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Stream seed for Monte Carlo: one hash chain over (element, quadrature
// point, piece) so every piece gets an independent reproducible stream no
// matter which thread integrates it.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t element,
                              std::uint64_t qp, std::uint64_t piece) {
  std::uint64_t h = splitmix64(seed ^ 0x243f6a8885a308d3ull);
  h = splitmix64(h ^ element);
  h = splitmix64(h ^ qp);
  return splitmix64(h ^ piece);
}

class Rng {  // xoshiro256++
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& w : s_) w = x = splitmix64(x);
  }
  std::uint64_t next() {
    auto rotl = [](std::uint64_t v, int k) {
      return (v << k) | (v >> (64 - k));
    };
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }
  // uniform in [0,1)
  double uniform() { return double(next() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t s_[4];
};

}  // namespace nlfem
