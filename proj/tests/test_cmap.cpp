#include <algorithm>
#include <set>

#include "doctest.h"
#include "nlfem/cmap.hpp"
#include "support/oracles.hpp"
#include "support/test_meshes.hpp"

using namespace nlfem;
using namespace nlfem::testing;

namespace {

CMap build(const RawMesh& rm) {
  return build_cmap(rm.n, rm.coords, rm.cells, rm.region);
}

bool same_tables(const CMap& a, const CMap& b) {
  for (int i = 1; i <= a.n; ++i)
    if (a.beta[i] != b.beta[i]) return false;
  for (int i = 0; i <= a.n; ++i)
    if (a.cell_of[i] != b.cell_of[i] || a.cell_dart[i] != b.cell_dart[i])
      return false;
  return a.beta1_inv == b.beta1_inv;
}

}  // namespace

TEST_CASE("single triangle") {
  RawMesh rm;
  rm.n = 2;
  rm.coords = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  rm.cells = {{0, 1, 2, kNull}};
  rm.region = {0};
  CMap m = build(rm);
  CHECK(m.dart_count() == 3);
  CHECK(m.cell_count(0) == 3);
  CHECK(m.cell_count(1) == 3);
  CHECK(m.cell_count(2) == 1);
  for (Index d = 0; d < 3; ++d) CHECK(m.beta[2][d] == kNull);
  CHECK(m.beta[1][0] == 1);
  CHECK(m.beta[1][2] == 0);
  CHECK(validate_cmap(m).empty());
  auto w = m.ncell_vertices(0);
  CHECK(w[0] == 0);
  CHECK(w[1] == 1);
  CHECK(w[2] == 2);
}

TEST_CASE("two glued triangles") {
  RawMesh rm;
  rm.n = 2;
  rm.coords = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}};
  rm.cells = {{0, 1, 2, kNull}, {0, 2, 3, kNull}};
  rm.region = {0, 1};
  CMap m = build(rm);
  CHECK(m.dart_count() == 6);
  CHECK(m.cell_count(1) == 5);
  CHECK(validate_cmap(m).empty());
  int glued = 0;
  for (Index d = 0; d < 6; ++d)
    if (m.beta[2][d] != kNull) {
      ++glued;
      CHECK(m.beta[2][m.beta[2][d]] == d);
      CHECK(m.cell_of[1][m.beta[2][d]] == m.cell_of[1][d]);
      CHECK(m.cell_of[2][m.beta[2][d]] != m.cell_of[2][d]);
    }
  CHECK(glued == 2);
  CHECK(neighbor_ncells(m, 0) == std::vector<Index>{1});
  CHECK(neighbor_ncells(m, 1) == std::vector<Index>{0});
}

TEST_CASE("single tetrahedron") {
  RawMesh rm;
  rm.n = 3;
  rm.coords = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  rm.cells = {{0, 1, 2, 3}};
  rm.region = {0};
  CMap m = build(rm);
  CHECK(m.dart_count() == 12);
  CHECK(m.cell_count(0) == 4);
  CHECK(m.cell_count(1) == 6);
  CHECK(m.cell_count(2) == 4);
  CHECK(m.cell_count(3) == 1);
  CHECK(validate_cmap(m).empty());
  for (Index d = 0; d < 12; ++d) {
    CHECK(m.beta[3][d] == kNull);
    CHECK(m.beta[2][m.beta[2][d]] == d);
    CHECK(m.beta[2][d] != d);
  }
  auto w = m.ncell_vertices(0);
  std::set<Index> ws(w.begin(), w.end());
  CHECK(ws == std::set<Index>{0, 1, 2, 3});
}

TEST_CASE("two glued tetrahedra") {
  RawMesh rm;
  rm.n = 3;
  rm.coords = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 1, 1}};
  rm.cells = {{0, 1, 2, 3}, {1, 2, 3, 4}};
  rm.region = {0, 0};
  CMap m = build(rm);
  CHECK(m.cell_count(2) == 7);
  CHECK(m.cell_count(1) == 9);
  CHECK(validate_cmap(m).empty());
  int glued = 0;
  for (Index d = 0; d < m.dart_count(); ++d)
    if (m.beta[3][d] != kNull) {
      ++glued;
      CHECK(m.beta[3][m.beta[3][d]] == d);
      CHECK(m.cell_of[2][m.beta[3][d]] == m.cell_of[2][d]);
      CHECK(m.cell_of[1][m.beta[3][d]] == m.cell_of[1][d]);
    }
  CHECK(glued == 6);
  CHECK(neighbor_ncells(m, 0) == std::vector<Index>{1});
}

TEST_CASE("structured grids validate clean") {
  for (int res : {1, 2, 3}) {
    CMap m2 = build(grid_tri(res));
    CHECK(validate_cmap(m2).empty());
    CMap m3 = build(grid_tet(res));
    CHECK(validate_cmap(m3).empty());
  }
}

TEST_CASE("grid cell counts") {
  int res = 3;
  CMap m = build(grid_tri(res));
  CHECK(m.cell_count(2) == 2 * res * res);
  CHECK(m.cell_count(0) == (res + 1) * (res + 1));
  // Euler: V - E + F for a disk = 1
  CHECK(m.cell_count(0) - m.cell_count(1) + m.cell_count(2) == 1);
  int boundary = 0;
  for (Index d = 0; d < m.dart_count(); ++d)
    if (m.beta[2][d] == kNull) ++boundary;
  CHECK(boundary == 4 * res);
}

TEST_CASE("rebuild is bit-identical") {
  Rng rng(7);
  for (int n : {2, 3}) {
    RawMesh rm = random_mesh(n, rng, 200);
    CMap a = build(rm);
    CMap b = build(rm);
    CHECK(same_tables(a, b));
  }
}

TEST_CASE("orientation flips do not change the map") {
  Rng rng(11);
  RawMesh rm = random_mesh(3, rng, 100);
  CMap a = build(rm);
  // orientation propagates from cell 0, so scrambling any other cell's
  // vertex order must not change the built tables
  RawMesh flipped = rm;
  for (std::size_t c = 1; c < flipped.cells.size(); c += 2)
    std::swap(flipped.cells[c][2], flipped.cells[c][3]);
  CMap b = build(flipped);
  CHECK(same_tables(a, b));
}

TEST_CASE("input errors") {
  RawMesh rm;
  rm.n = 2;
  rm.coords = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  rm.cells = {{0, 1, 7, kNull}};
  rm.region = {0};
  CHECK_THROWS_AS_MESSAGE(build(rm), Error, doctest::Contains("BadIndex"));
  rm.cells = {{0, 1, 1, kNull}};
  CHECK_THROWS_AS_MESSAGE(build(rm), Error, doctest::Contains("BadIndex"));
  rm.coords.push_back({2, 2, 0});
  rm.cells = {{0, 1, 2, kNull}};
  CHECK_THROWS_AS_MESSAGE(build(rm), Error, doctest::Contains("DanglingVertex"));
}

TEST_CASE("non-manifold edge rejected") {
  RawMesh rm;
  rm.n = 2;
  rm.coords = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}};
  rm.cells = {{0, 1, 2, kNull}, {0, 1, 3, kNull}, {0, 1, 4, kNull}};
  rm.region = {0, 0, 0};
  try {
    build(rm);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code == ErrorCode::NonManifold);
  }
}

TEST_CASE("moebius band is not orientable") {
  RawMesh rm;
  rm.n = 2;
  for (int i = 0; i < 5; ++i)
    rm.coords.push_back({std::cos(2 * M_PI * i / 5), std::sin(2 * M_PI * i / 5),
                         double(i % 2)});
  for (int i = 0; i < 5; ++i)
    rm.cells.push_back({Index(i), Index((i + 1) % 5), Index((i + 2) % 5), kNull});
  rm.region.assign(5, 0);
  try {
    build(rm);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code == ErrorCode::NonManifold);
  }
}

TEST_CASE("neighbors match facet scan on random meshes") {
  Rng rng(13);
  for (int n : {2, 3}) {
    for (int trial = 0; trial < 8; ++trial) {
      RawMesh rm = random_mesh(n, rng, 300);
      CMap m = build(rm);
      auto ref = neighbor_sets(rm);
      for (Index t = 0; t < m.ncell_count(); ++t) {
        auto got = neighbor_ncells(m, t);
        std::sort(got.begin(), got.end());
        CHECK(got == ref[t]);
      }
    }
  }
}

TEST_CASE("orbits match id scans on random meshes") {
  Rng rng(17);
  for (int n : {2, 3}) {
    for (int trial = 0; trial < 6; ++trial) {
      RawMesh rm = random_mesh(n, rng, 200);
      CMap m = build(rm);
      CHECK(validate_cmap(m).empty());
      for (int i = 0; i <= n; ++i) {
        for (int k = 0; k < 20; ++k) {
          Index d = Index(rng.next() % std::uint64_t(m.dart_count()));
          auto got = orbit(m, i, d);
          CHECK(got.front() == d);
          std::sort(got.begin(), got.end());
          CHECK(std::adjacent_find(got.begin(), got.end()) == got.end());
          CHECK(got == orbit_scan(m, i, d));
        }
      }
    }
  }
}

TEST_CASE("orbit visit order is stable") {
  Rng rng(19);
  RawMesh rm = random_mesh(3, rng, 150);
  CMap m = build(rm);
  for (int i = 0; i <= 3; ++i) {
    auto a = orbit(m, i, 5 % m.dart_count());
    auto b = orbit(m, i, 5 % m.dart_count());
    CHECK(a == b);
  }
}

TEST_CASE("validate flags corrupted maps") {
  CMap m = build(grid_tri(2));
  SUBCASE("broken beta1") {
    m.beta[1][0] = m.beta[1][1];
    CHECK(!validate_cmap(m).empty());
  }
  SUBCASE("broken beta2 pairing") {
    Index d = kNull;
    for (Index i = 0; i < m.dart_count(); ++i)
      if (m.beta[2][i] != kNull) d = i;
    m.beta[2][d] = d;
    CHECK(!validate_cmap(m).empty());
  }
  SUBCASE("boundary dart glued to itself") {
    Index d = kNull;
    for (Index i = 0; i < m.dart_count(); ++i)
      if (m.beta[2][i] == kNull) d = i;
    m.beta[2][d] = d;
    CHECK(!validate_cmap(m).empty());
  }
  SUBCASE("wrong edge label") {
    m.cell_of[1][0] = (m.cell_of[1][0] + 1) % m.cell_count(1);
    CHECK(!validate_cmap(m).empty());
  }
  SUBCASE("wrong representative") {
    m.cell_dart[2][0] = m.cell_dart[2][1];
    CHECK(!validate_cmap(m).empty());
  }
}

TEST_CASE("ncell_vertices returns the laid-out order") {
  Rng rng(23);
  for (int n : {2, 3}) {
    RawMesh rm = random_mesh(n, rng, 100);
    CMap m = build(rm);
    for (Index t = 0; t < m.ncell_count(); ++t) {
      auto w = m.ncell_vertices(t);
      std::set<Index> got(w.begin(), w.begin() + n + 1);
      std::set<Index> want(rm.cells[t].begin(), rm.cells[t].begin() + n + 1);
      CHECK(got == want);
      // darts of t only reference t's vertices
      int dpc = n == 2 ? 3 : 12;
      for (int i = 0; i < dpc; ++i)
        CHECK(want.count(m.cell_of[0][t * dpc + i]) == 1);
    }
  }
}
