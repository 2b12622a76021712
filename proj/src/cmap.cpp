#include "nlfem/cmap.hpp"

#include <algorithm>
#include <cstdint>
#include <unordered_map>
#include <unordered_set>

namespace nlfem {

namespace {

struct FacetKey {
  std::array<Index, 3> v;  // sorted, v[2] = kNull in 2D
  bool operator==(const FacetKey& o) const { return v == o.v; }
};

struct FacetKeyHash {
  std::size_t operator()(const FacetKey& k) const {
    std::uint64_t h = 0x1234abcd;
    for (Index x : k.v) h = splitmix64(h ^ std::uint64_t(std::uint32_t(x)));
    return std::size_t(h);
  }
};

struct FacetUse {
  Index cell;
  int slot;     // input-order slot of the opposite vertex
  int parity;   // parity of the induced facet orientation, input order
};

// Parity of the permutation sorting a short tuple.
int sort_parity(const Index* t, int len) {
  int inv = 0;
  for (int i = 0; i < len; ++i)
    for (int j = i + 1; j < len; ++j)
      if (t[i] > t[j]) ++inv;
  return inv & 1;
}

}  // namespace

std::array<Index, 4> CMap::ncell_vertices(Index t) const {
  std::array<Index, 4> w{kNull, kNull, kNull, kNull};
  if (n == 2) {
    for (int e = 0; e < 3; ++e) w[e] = cell_of[0][3 * t + e];
  } else {
    // face 0 carries (w1,w2,w3); dart 1 of face 1 starts at w0
    w[0] = cell_of[0][12 * t + 3 * 1 + 1];
    w[1] = cell_of[0][12 * t + 0];
    w[2] = cell_of[0][12 * t + 1];
    w[3] = cell_of[0][12 * t + 2];
  }
  return w;
}

CMap build_cmap(int n, const std::vector<Vec>& coords,
                const std::vector<std::array<Index, 4>>& cells,
                const std::vector<std::uint8_t>& region) {
  if (n != 2 && n != 3) fail(ErrorCode::BadConfig, "dimension must be 2 or 3");
  if (region.size() != cells.size())
    fail(ErrorCode::BadConfig, "region size does not match cell count");
  const Index V = Index(coords.size());
  const Index K = Index(cells.size());
  const int nv = n + 1;

  std::vector<std::uint8_t> referenced(V, 0);
  for (Index k = 0; k < K; ++k) {
    for (int i = 0; i < nv; ++i) {
      Index v = cells[k][i];
      if (v < 0 || v >= V)
        fail(ErrorCode::BadIndex, "cell " + std::to_string(k) +
                                      " references vertex " + std::to_string(v));
      for (int j = i + 1; j < nv; ++j)
        if (cells[k][j] == v)
          fail(ErrorCode::BadIndex,
               "cell " + std::to_string(k) + " repeats vertex " + std::to_string(v));
      referenced[v] = 1;
    }
  }
  for (Index v = 0; v < V; ++v)
    if (!referenced[v])
      fail(ErrorCode::DanglingVertex,
           "vertex " + std::to_string(v) + " is not used by any cell");

  // facet incidence on input order
  std::unordered_map<FacetKey, std::vector<FacetUse>, FacetKeyHash> facets;
  facets.reserve(std::size_t(K) * nv);
  for (Index k = 0; k < K; ++k) {
    for (int s = 0; s < nv; ++s) {
      FacetKey key{{kNull, kNull, kNull}};
      Index tup[3];
      int m = 0;
      for (int i = 0; i < nv; ++i)
        if (i != s) tup[m++] = cells[k][i];
      int par = sort_parity(tup, n) ^ (s & 1);
      std::array<Index, 3> sorted{kNull, kNull, kNull};
      for (int i = 0; i < n; ++i) sorted[i] = tup[i];
      std::sort(sorted.begin(), sorted.begin() + n);
      key.v = sorted;
      auto& uses = facets[key];
      if (uses.size() == 2)
        fail(ErrorCode::NonManifold, "facet shared by more than two cells");
      uses.push_back({k, s, par});
    }
  }

  // orientation: BFS over facet adjacency, flipping cells so adjacent cells
  // induce opposite orientations on their shared facet
  std::vector<std::uint8_t> flipped(K, 0), seen(K, 0);
  {
    std::vector<std::vector<std::pair<Index, int>>> adj(K);  // (other, parity sum)
    for (auto& [key, uses] : facets) {
      if (uses.size() != 2) continue;
      auto& a = uses[0];
      auto& b = uses[1];
      adj[a.cell].push_back({b.cell, a.parity ^ b.parity});
      adj[b.cell].push_back({a.cell, a.parity ^ b.parity});
    }
    std::vector<Index> queue;
    for (Index root = 0; root < K; ++root) {
      if (seen[root]) continue;
      seen[root] = 1;
      queue.clear();
      queue.push_back(root);
      for (std::size_t qi = 0; qi < queue.size(); ++qi) {
        Index c = queue[qi];
        for (auto [o, psum] : adj[c]) {
          // consistent when induced parities differ: psum ^ flips == 1
          std::uint8_t want = std::uint8_t(flipped[c] ^ psum ^ 1);
          if (!seen[o]) {
            seen[o] = 1;
            flipped[o] = want;
            queue.push_back(o);
          } else if (flipped[o] != want) {
            fail(ErrorCode::NonManifold, "mesh is not orientable");
          }
        }
      }
    }
  }

  auto eff_slot = [&](Index k, int s) {
    if (!flipped[k]) return s;
    if (n == 2) return s == 1 ? 2 : (s == 2 ? 1 : 0);
    return s == 2 ? 3 : (s == 3 ? 2 : s);
  };
  auto eff_verts = [&](Index k) {
    std::array<Index, 4> w = cells[k];
    if (flipped[k]) std::swap(w[n - 1], w[n]);
    return w;
  };

  CMap m;
  m.n = n;
  m.coords = coords;
  m.region = region;
  m.flipped = flipped;
  const Index dpc = (n == 2) ? 3 : 12;
  const Index D = K * dpc;
  for (int b = 1; b <= n; ++b) m.beta[b].assign(D, kNull);
  m.beta1_inv.assign(D, kNull);
  for (int i = 0; i <= n; ++i) m.cell_of[i].assign(D, kNull);

  // dart tails and in-face cycles
  std::vector<Index> tail(D, kNull);
  if (n == 2) {
    for (Index k = 0; k < K; ++k) {
      auto w = eff_verts(k);
      for (int e = 0; e < 3; ++e) {
        tail[3 * k + e] = w[e];
        m.beta[1][3 * k + e] = 3 * k + (e + 1) % 3;
        m.cell_of[2][3 * k + e] = k;
      }
    }
  } else {
    for (Index k = 0; k < K; ++k) {
      auto w = eff_verts(k);
      for (int f = 0; f < 4; ++f) {
        Index tri[3];
        int c = 0;
        for (int i = 0; i < 4; ++i)
          if (i != f) tri[c++] = w[i];
        if (f & 1) std::swap(tri[0], tri[1]);  // absorb (-1)^f
        for (int e = 0; e < 3; ++e) {
          Index d = 12 * k + 3 * f + e;
          tail[d] = tri[e];
          m.beta[1][d] = 12 * k + 3 * f + (e + 1) % 3;
          m.cell_of[3][d] = k;
        }
      }
    }
  }
  for (Index d = 0; d < D; ++d) m.beta1_inv[m.beta[1][d]] = d;
  auto head = [&](Index d) { return tail[m.beta[1][d]]; };

  // 3D beta2: reversed directed edge within the same tetrahedron
  if (n == 3) {
    for (Index k = 0; k < K; ++k) {
      for (int i = 0; i < 12; ++i) {
        Index d = 12 * k + i;
        if (m.beta[2][d] != kNull) continue;
        for (int j = i + 1; j < 12; ++j) {
          Index e = 12 * k + j;
          if (tail[e] == head(d) && head(e) == tail[d]) {
            m.beta[2][d] = e;
            m.beta[2][e] = d;
            break;
          }
        }
        if (m.beta[2][d] == kNull)
          fail(ErrorCode::NonManifold, "tetrahedron faces do not pair up");
      }
    }
  }

  // beta_n: glue darts across shared facets
  for (auto& [key, uses] : facets) {
    if (uses.size() != 2) continue;
    const FacetUse& A = uses[0];
    const FacetUse& B = uses[1];
    if (n == 2) {
      Index da = 3 * A.cell + (eff_slot(A.cell, A.slot) + 1) % 3;
      Index db = 3 * B.cell + (eff_slot(B.cell, B.slot) + 1) % 3;
      if (tail[da] != head(db) || head(da) != tail[db])
        fail(ErrorCode::NonManifold, "shared edge darts are parallel");
      m.beta[2][da] = db;
      m.beta[2][db] = da;
    } else {
      Index fa = 12 * A.cell + 3 * eff_slot(A.cell, A.slot);
      Index fb = 12 * B.cell + 3 * eff_slot(B.cell, B.slot);
      for (int e = 0; e < 3; ++e) {
        Index da = fa + e;
        Index db = kNull;
        for (int e2 = 0; e2 < 3; ++e2)
          if (tail[fb + e2] == head(da) && head(fb + e2) == tail[da]) db = fb + e2;
        if (db == kNull)
          fail(ErrorCode::NonManifold, "shared face darts do not reverse");
        m.beta[3][da] = db;
        m.beta[3][db] = da;
      }
    }
  }

  // cell ids: vertices keep input ids; edges and 3D faces numbered by first
  // appearance in dart scan order
  m.cell_of[0] = tail;
  m.cell_dart[0].assign(V, kNull);
  for (Index d = 0; d < D; ++d)
    if (m.cell_dart[0][tail[d]] == kNull) m.cell_dart[0][tail[d]] = d;

  {
    std::unordered_map<std::uint64_t, Index> edge_id;
    edge_id.reserve(std::size_t(D));
    for (Index d = 0; d < D; ++d) {
      Index a = tail[d], b = head(d);
      if (a > b) std::swap(a, b);
      std::uint64_t key = (std::uint64_t(std::uint32_t(a)) << 32) | std::uint32_t(b);
      auto [it, fresh] = edge_id.try_emplace(key, Index(m.cell_dart[1].size()));
      if (fresh) m.cell_dart[1].push_back(d);
      m.cell_of[1][d] = it->second;
    }
  }
  if (n == 3) {
    std::unordered_map<FacetKey, Index, FacetKeyHash> face_id;
    face_id.reserve(std::size_t(D) / 3);
    for (Index d = 0; d < D; ++d) {
      Index base = (d / 3) * 3;
      FacetKey key{{tail[base], tail[base + 1], tail[base + 2]}};
      std::sort(key.v.begin(), key.v.end());
      auto [it, fresh] = face_id.try_emplace(key, Index(m.cell_dart[2].size()));
      if (fresh) m.cell_dart[2].push_back(d);
      m.cell_of[2][d] = it->second;
    }
  }
  m.cell_dart[n].assign(K, kNull);
  for (Index k = 0; k < K; ++k) m.cell_dart[n][k] = k * dpc;
  return m;
}

std::vector<Violation> validate_cmap(const CMap& m) {
  std::vector<Violation> out;
  const Index D = m.dart_count();
  const int n = m.n;
  auto bad = [&](const char* law, Index d) { out.push_back({law, d}); };
  auto in_range = [&](Index d) { return d >= 0 && d < D; };

  for (Index d = 0; d < D; ++d) {
    Index b1 = m.beta[1][d];
    if (!in_range(b1)) {
      bad("beta1 total", d);
      continue;
    }
    if (m.beta1_inv[b1] != d) bad("beta1 inverse", d);
    if (m.beta[1][m.beta[1][b1]] != d) bad("beta1 triangle cycle", d);
    for (int i = 2; i <= n; ++i)
      if (m.cell_of[i][b1] != m.cell_of[i][d]) bad("beta1 preserves high cells", d);
  }

  if (n == 3) {
    for (Index d = 0; d < D; ++d) {
      Index b2 = m.beta[2][d];
      if (!in_range(b2) || b2 == d) {
        bad("beta2 involution", d);
        continue;
      }
      if (m.beta[2][b2] != d) bad("beta2 involution", d);
      if (m.cell_of[1][b2] != m.cell_of[1][d]) bad("beta2 preserves edge", d);
      if (m.cell_of[3][b2] != m.cell_of[3][d]) bad("beta2 preserves cell", d);
      if (m.cell_of[2][b2] == m.cell_of[2][d]) bad("beta2 changes face", d);
    }
  }

  // beta_n partial involution
  for (Index d = 0; d < D; ++d) {
    Index bn = m.beta[n][d];
    if (bn == kNull) continue;
    if (!in_range(bn) || bn == d || m.beta[n][bn] != d) {
      bad("beta_n involution", d);
      continue;
    }
    if (m.cell_of[n][bn] == m.cell_of[n][d]) bad("beta_n changes cell", d);
    if (m.cell_of[n - 1][bn] != m.cell_of[n - 1][d]) bad("beta_n preserves facet", d);
    if (n == 3 && m.cell_of[1][bn] != m.cell_of[1][d]) bad("beta_n preserves edge", d);
  }

  // boundary consistency: a facet lies in one n-cell (all darts unglued) or
  // two (all glued)
  {
    const Index F = m.cell_count(n - 1);
    std::vector<Index> cell_a(F, kNull), cell_b(F, kNull);
    std::vector<std::uint8_t> facet_bad(F, 0);
    for (Index d = 0; d < D; ++d) {
      Index f = m.cell_of[n - 1][d];
      if (f < 0 || f >= F) {
        bad("facet id range", d);
        continue;
      }
      Index c = m.cell_of[n][d];
      if (cell_a[f] == kNull || cell_a[f] == c) {
        cell_a[f] = c;
      } else if (cell_b[f] == kNull || cell_b[f] == c) {
        cell_b[f] = c;
      } else {
        facet_bad[f] = 1;
      }
    }
    for (Index d = 0; d < D; ++d) {
      Index f = m.cell_of[n - 1][d];
      if (f < 0 || f >= F) continue;
      if (facet_bad[f]) {
        bad("facet incidence", d);
        continue;
      }
      bool interior = cell_b[f] != kNull;
      if (interior && m.beta[n][d] == kNull) bad("beta_n null on interior facet", d);
      if (!interior && m.beta[n][d] != kNull) bad("beta_n set on boundary facet", d);
    }
  }

  // cell consistency: same edge id, same vertex pair; same face id, same
  // vertex triple; representative darts name their own cell
  {
    std::unordered_map<Index, std::pair<Index, Index>> edge_verts;
    for (Index d = 0; d < D; ++d) {
      Index a = m.cell_of[0][d], b = m.cell_of[0][m.beta[1][d]];
      if (a > b) std::swap(a, b);
      auto [it, fresh] = edge_verts.try_emplace(m.cell_of[1][d], std::make_pair(a, b));
      if (!fresh && it->second != std::make_pair(a, b)) bad("edge vertex set", d);
    }
    if (n == 3) {
      std::unordered_map<Index, std::array<Index, 3>> face_verts;
      for (Index d = 0; d < D; ++d) {
        Index base = (d / 3) * 3;
        std::array<Index, 3> t{m.cell_of[0][base], m.cell_of[0][base + 1],
                               m.cell_of[0][base + 2]};
        std::sort(t.begin(), t.end());
        auto [it, fresh] = face_verts.try_emplace(m.cell_of[2][d], t);
        if (!fresh && it->second != t) bad("face vertex set", d);
      }
    }
    for (int i = 0; i <= n; ++i) {
      for (Index c = 0; c < m.cell_count(i); ++c) {
        Index d = m.cell_dart[i][c];
        if (!in_range(d) || m.cell_of[i][d] != c) bad("representative dart", d);
      }
    }
  }
  return out;
}

namespace {

struct OrbitStep {
  int a = 0, b = 0;  // apply beta_b then beta_a; b == 0 means single
  bool inv = false;
};

Index apply_beta(const CMap& m, int a, bool inv, Index d) {
  if (a == 1 && inv) return m.beta1_inv[d];
  return m.beta[a][d];
}

Index apply_step(const CMap& m, const OrbitStep& s, Index d) {
  if (s.b == 0) return apply_beta(m, s.a, s.inv, d);
  // pair: forward is beta_a(beta_b(.)), inverse is beta_b^-1(beta_a^-1(.))
  Index e = s.inv ? apply_beta(m, s.a, true, d) : apply_beta(m, s.b, false, d);
  if (e == kNull) return kNull;
  return s.inv ? apply_beta(m, s.b, true, e) : apply_beta(m, s.a, false, e);
}

}  // namespace

std::vector<Index> orbit(const CMap& m, int i, Index d) {
  if (i < 0 || i > m.n) fail(ErrorCode::BadConfig, "orbit dimension out of range");
  if (d < 0 || d >= m.dart_count()) fail(ErrorCode::BadIndex, "orbit start dart");
  std::vector<OrbitStep> steps;
  if (i == 0) {
    for (int a = 1; a <= m.n; ++a)
      for (int b = a + 1; b <= m.n; ++b) {
        steps.push_back({a, b, false});
        steps.push_back({a, b, true});
      }
  } else {
    for (int a = 1; a <= m.n; ++a) {
      if (a == i) continue;
      steps.push_back({a, 0, false});
      steps.push_back({a, 0, true});
    }
  }
  std::vector<Index> out{d};
  std::unordered_set<Index> seen{d};
  for (std::size_t qi = 0; qi < out.size(); ++qi) {
    Index cur = out[qi];
    for (const auto& s : steps) {
      Index nx = apply_step(m, s, cur);
      if (nx != kNull && seen.insert(nx).second) out.push_back(nx);
    }
  }
  return out;
}

void neighbor_ncells(const CMap& m, Index t, std::vector<Index>& out) {
  out.clear();
  if (t < 0 || t >= m.ncell_count()) fail(ErrorCode::BadIndex, "n-cell id");
  auto push = [&](Index c) {
    for (Index x : out)
      if (x == c) return;
    out.push_back(c);
  };
  Index d0 = m.cell_dart[m.n][t];
  if (m.n == 3) {
    if (m.beta[3][d0] != kNull) push(m.cell_of[3][m.beta[3][d0]]);
    Index d = d0;
    do {
      Index e = m.beta[3][m.beta[2][d]];
      if (e != kNull) push(m.cell_of[3][e]);
      d = m.beta[1][d];
    } while (d != d0);
  } else {
    if (m.beta[2][d0] != kNull) push(m.cell_of[2][m.beta[2][d0]]);
    for (Index d = m.beta[1][d0]; d != d0; d = m.beta[1][d]) {
      Index e = m.beta[2][d];
      if (e != kNull) push(m.cell_of[2][e]);
    }
  }
}

std::vector<Index> neighbor_ncells(const CMap& m, Index t) {
  std::vector<Index> out;
  neighbor_ncells(m, t, out);
  return out;
}

}  // namespace nlfem
