#include "nlfem/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "nlfem/geometry.hpp"

namespace nlfem {

namespace {

Index layer_width(int res, double delta) {
  // Guard against values like 0.2*20 landing a hair above the integer.
  return Index(std::ceil(delta * res - 1e-9));
}

// Vertex order of the six Kuhn tetrahedra of the unit cube: walk from corner
// 0 to corner 7 adding one axis at a time, one tet per axis permutation. Odd
// permutations get their last two vertices swapped to keep the volume
// positive.
constexpr int kPerms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                              {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
constexpr bool kOdd[6] = {false, true, true, false, false, true};

// Simplicial grid over the cube index range [lo, hi)^n with corners at
// integer multiples of h; cubes whose indices all lie in [in_lo, in_hi) are
// tagged 0, the rest 1.
MeshData lattice_mesh(int n, Index lo, Index hi, double h, Index in_lo,
                      Index in_hi) {
  const Index nv1 = hi - lo + 1;  // vertices per axis

  MeshData md;
  md.n = n;
  auto vid = [&](Index i, Index j, Index k) {
    return ((k - (n == 3 ? lo : 0)) * (n == 3 ? nv1 : 1) + (j - lo)) * nv1 + (i - lo);
  };
  auto interior = [&](Index v) { return v >= in_lo && v < in_hi; };

  if (n == 2) {
    md.coords.reserve(std::size_t(nv1) * nv1);
    for (Index j = lo; j <= hi; ++j) {
      for (Index i = lo; i <= hi; ++i) {
        md.coords.push_back({i * h, j * h, 0.0});
      }
    }
    for (Index j = lo; j < hi; ++j) {
      for (Index i = lo; i < hi; ++i) {
        const std::uint8_t tag = !(interior(i) && interior(j));
        const Index v00 = vid(i, j, 0), v10 = vid(i + 1, j, 0);
        const Index v01 = vid(i, j + 1, 0), v11 = vid(i + 1, j + 1, 0);
        md.cells.push_back({v00, v10, v11, kNull});
        md.cells.push_back({v00, v11, v01, kNull});
        md.region.push_back(tag);
        md.region.push_back(tag);
      }
    }
  } else {
    md.coords.reserve(std::size_t(nv1) * nv1 * nv1);
    for (Index k = lo; k <= hi; ++k) {
      for (Index j = lo; j <= hi; ++j) {
        for (Index i = lo; i <= hi; ++i) {
          md.coords.push_back({i * h, j * h, k * h});
        }
      }
    }
    for (Index k = lo; k < hi; ++k) {
      for (Index j = lo; j < hi; ++j) {
        for (Index i = lo; i < hi; ++i) {
          const std::uint8_t tag = !(interior(i) && interior(j) && interior(k));
          for (int t = 0; t < 6; ++t) {
            Index c[3] = {i, j, k};
            std::array<Index, 4> tet;
            tet[0] = vid(c[0], c[1], c[2]);
            for (int s = 0; s < 3; ++s) {
              ++c[kPerms[t][s]];
              tet[s + 1] = vid(c[0], c[1], c[2]);
            }
            if (kOdd[t]) std::swap(tet[2], tet[3]);
            md.cells.push_back(tet);
            md.region.push_back(tag);
          }
        }
      }
    }
  }
  return md;
}

// Cell of a lattice cube whose barycentric minimum at p is largest; ties
// cannot matter since the candidates partition the cube.
Index pick_in_cube(const MeshData& md, std::size_t base, int per, Vec p) {
  Index best = Index(base);
  double best_min = -1e300;
  for (int t = 0; t < per; ++t) {
    const Index cell = Index(base + t);
    Simplex s;
    s.n = md.n;
    for (int i = 0; i <= md.n; ++i) s.v[i] = md.coords[md.cells[cell][i]];
    const auto l = barycentric(s, p);
    double mn = l[0];
    for (int i = 1; i <= md.n; ++i) mn = std::min(mn, l[i]);
    if (mn > best_min) {
      best_min = mn;
      best = cell;
    }
  }
  return best;
}

}  // namespace

MeshData generate_mesh(int n, int res, double delta) {
  if (n != 2 && n != 3) fail(ErrorCode::BadConfig, "dimension must be 2 or 3");
  if (res < 1) fail(ErrorCode::BadConfig, "resolution must be at least 1");
  if (!(delta > 0)) fail(ErrorCode::BadConfig, "delta must be positive");
  const Index L = layer_width(res, delta);
  return lattice_mesh(n, -L, res + L, 1.0 / res, 0, res);
}

MeshData patch_mesh(int n, Index lo, Index hi, double h) {
  if (n != 2 && n != 3) fail(ErrorCode::BadConfig, "dimension must be 2 or 3");
  if (hi <= lo) fail(ErrorCode::BadConfig, "empty cube range");
  if (!(h > 0)) fail(ErrorCode::BadConfig, "grid pitch must be positive");
  return lattice_mesh(n, lo, hi, h, lo, hi);
}

Index patch_locate(const MeshData& md, Index lo, Index hi, double h, Vec p) {
  const Index span = hi - lo;
  auto cube = [&](double x) {
    Index i = Index(std::floor(x / h));
    return std::min(hi - 1, std::max(lo, i));
  };
  const Index ci = cube(p.x), cj = cube(p.y);
  std::size_t base;
  int per;
  if (md.n == 2) {
    per = 2;
    base = std::size_t((cj - lo) * span + (ci - lo)) * per;
  } else {
    per = 6;
    const Index ck = cube(p.z);
    base = std::size_t(((ck - lo) * span + (cj - lo)) * span + (ci - lo)) * per;
  }
  return pick_in_cube(md, base, per, p);
}

Index structured_locate(const MeshData& md, int res, double delta, Vec p) {
  const Index L = layer_width(res, delta);
  const Index lo = -L, hi = res + L;
  const Index span = hi - lo;
  auto cube = [&](double x) {
    Index i = Index(std::floor(x * res));
    return std::min(hi - 1, std::max(lo, i));
  };
  const Index ci = cube(p.x), cj = cube(p.y);
  std::size_t base;
  int per;
  if (md.n == 2) {
    per = 2;
    base = std::size_t((cj - lo) * span + (ci - lo)) * per;
  } else {
    per = 6;
    const Index ck = cube(p.z);
    base = std::size_t(((ck - lo) * span + (cj - lo)) * span + (ci - lo)) * per;
  }
  return pick_in_cube(md, base, per, p);
}

// ---------------------------------------------------------------------------
// file IO

namespace {

[[noreturn]] void bad_line(int line, const std::string& what) {
  fail(ErrorCode::BadMeshFile, "line " + std::to_string(line) + ": " + what);
}

}  // namespace

MeshData read_mesh(std::istream& in) {
  MeshData md;
  std::string line;
  int lineno = 0;
  auto next_line = [&](const char* what) {
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) return;
    }
    ++lineno;
    bad_line(lineno, std::string("expected ") + what + ", found end of file");
  };

  next_line("header");
  {
    std::istringstream ss(line);
    std::string magic, version, dim;
    ss >> magic >> version >> dim;
    if (magic != "nlfem-mesh" || version != "v1" || dim.rfind("dim=", 0) != 0) {
      bad_line(lineno, "expected 'nlfem-mesh v1 dim=<n>'");
    }
    if (dim == "dim=2") md.n = 2;
    else if (dim == "dim=3") md.n = 3;
    else bad_line(lineno, "dimension must be 2 or 3");
  }

  next_line("'vertices <count>'");
  long nverts = -1;
  {
    std::istringstream ss(line);
    std::string kw;
    ss >> kw >> nverts;
    if (kw != "vertices" || ss.fail() || nverts < 0) {
      bad_line(lineno, "expected 'vertices <count>'");
    }
  }
  md.coords.reserve(nverts);
  for (long i = 0; i < nverts; ++i) {
    next_line("vertex coordinates");
    std::istringstream ss(line);
    Vec v;
    ss >> v.x >> v.y;
    if (md.n == 3) ss >> v.z;
    if (ss.fail()) bad_line(lineno, "malformed vertex coordinates");
    std::string extra;
    if (ss >> extra) bad_line(lineno, "trailing tokens after vertex coordinates");
    md.coords.push_back(v);
  }

  next_line("'cells <count>'");
  long ncells = -1;
  {
    std::istringstream ss(line);
    std::string kw;
    ss >> kw >> ncells;
    if (kw != "cells" || ss.fail() || ncells < 0) {
      bad_line(lineno, "expected 'cells <count>'");
    }
  }
  md.cells.reserve(ncells);
  md.region.reserve(ncells);
  for (long i = 0; i < ncells; ++i) {
    next_line("cell line");
    std::istringstream ss(line);
    std::array<Index, 4> cell = {kNull, kNull, kNull, kNull};
    for (int k = 0; k <= md.n; ++k) ss >> cell[k];
    int tag = -1;
    ss >> tag;
    if (ss.fail()) bad_line(lineno, "malformed cell line");
    std::string extra;
    if (ss >> extra) bad_line(lineno, "trailing tokens after cell line");
    if (tag != 0 && tag != 1) bad_line(lineno, "region tag must be 0 or 1");
    for (int k = 0; k <= md.n; ++k) {
      if (cell[k] < 0 || cell[k] >= Index(md.coords.size())) {
        bad_line(lineno, "vertex index out of range");
      }
    }
    md.cells.push_back(cell);
    md.region.push_back(std::uint8_t(tag));
  }
  return md;
}

MeshData read_mesh_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::BadMeshFile, "cannot open '" + path + "'");
  return read_mesh(in);
}

void write_mesh(std::ostream& out, const MeshData& m) {
  out << "nlfem-mesh v1 dim=" << m.n << "\n";
  out << "vertices " << m.coords.size() << "\n";
  char buf[96];
  for (const Vec& v : m.coords) {
    if (m.n == 2) std::snprintf(buf, sizeof buf, "%.17g %.17g", v.x, v.y);
    else std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g", v.x, v.y, v.z);
    out << buf << "\n";
  }
  out << "cells " << m.cells.size() << "\n";
  for (std::size_t t = 0; t < m.cells.size(); ++t) {
    for (int i = 0; i <= m.n; ++i) out << m.cells[t][i] << ' ';
    out << int(m.region[t]) << "\n";
  }
}

void write_mesh_file(const std::string& path, const MeshData& m) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::BadMeshFile, "cannot open '" + path + "' for writing");
  write_mesh(out, m);
  if (!out) fail(ErrorCode::BadMeshFile, "write to '" + path + "' failed");
}

HStats mesh_h_stats(const CMap& m) {
  HStats hs;
  const Index edges = m.cell_count(1);
  if (edges == 0) return hs;
  hs.h_min = 1e300;
  double sum = 0;
  for (Index e = 0; e < edges; ++e) {
    const Index d = m.cell_dart[1][e];
    const Index a = m.cell_of[0][d];
    const Index b = m.cell_of[0][m.beta[1][d]];
    const double len = dist(m.coords[a], m.coords[b]);
    sum += len;
    hs.h_min = std::min(hs.h_min, len);
    hs.h_max = std::max(hs.h_max, len);
  }
  hs.h_avg = sum / edges;
  return hs;
}

}  // namespace nlfem
