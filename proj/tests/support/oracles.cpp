#include "support/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace nlfem::testing {

std::vector<std::vector<Index>> neighbor_sets(const RawMesh& rm) {
  using FacetKey = std::array<Index, 3>;
  std::map<FacetKey, std::vector<Index>> by_facet;
  for (Index c = 0; c < Index(rm.cells.size()); ++c)
    for (int s = 0; s <= rm.n; ++s) {
      FacetKey f{kNull, kNull, kNull};
      int m = 0;
      for (int i = 0; i <= rm.n; ++i)
        if (i != s) f[m++] = rm.cells[c][i];
      std::sort(f.begin(), f.begin() + rm.n);
      by_facet[f].push_back(c);
    }
  std::vector<std::vector<Index>> out(rm.cells.size());
  for (auto& [f, cs] : by_facet)
    if (cs.size() == 2) {
      out[cs[0]].push_back(cs[1]);
      out[cs[1]].push_back(cs[0]);
    }
  for (auto& v : out) std::sort(v.begin(), v.end());
  return out;
}

std::vector<Index> orbit_scan(const CMap& m, int i, Index d) {
  std::vector<Index> out;
  Index target = m.cell_of[i][d];
  for (Index e = 0; e < m.dart_count(); ++e)
    if (m.cell_of[i][e] == target) out.push_back(e);
  return out;
}

double polygon_area(const Hull& h) {
  double acc = 0;
  for (const auto& f : h.facets) {
    const Vec& a = h.points[f[0]];
    const Vec& b = h.points[f[1]];
    acc += a.x * b.y - a.y * b.x;
  }
  return 0.5 * acc;
}

double surface_volume(const Hull& h) {
  double acc = 0;
  for (const auto& f : h.facets) {
    const Vec& a = h.points[f[0]];
    const Vec& b = h.points[f[1]];
    const Vec& c = h.points[f[2]];
    acc += dot(a, cross(b, c));
  }
  return acc / 6.0;
}

double reference_moment(int n, std::array<int, 3> e) {
  auto fact = [](int k) {
    double r = 1;
    for (int i = 2; i <= k; ++i) r *= i;
    return r;
  };
  double num = 1;
  int total = n;
  for (int a = 0; a < n; ++a) {
    num *= fact(e[a]);
    total += e[a];
  }
  return num / fact(total);
}

namespace {

// composite Simpson over [lo, hi] with m (even) intervals
double simpson(double lo, double hi, int m,
               const std::function<double(double)>& f) {
  double s = f(lo) + f(hi);
  double dx = (hi - lo) / m;
  for (int i = 1; i < m; ++i) s += f(lo + i * dx) * (i % 2 ? 4.0 : 2.0);
  return s * dx / 3.0;
}

double ball_integral_level(int n, double radius,
                           const std::function<double(Vec)>& f, int level) {
  int nr = 16 << level;
  int nt = 16 << level;
  // The periodic rectangle rule is exact once the count tops the trig degree,
  // so the azimuthal count saturates.
  int nphi = std::min(32 << level, 128);
  if (n == 2) {
    return simpson(0, radius, nr, [&](double r) {
      double s = 0;
      for (int i = 0; i < nphi; ++i) {
        double phi = 2.0 * M_PI * i / nphi;
        s += f({r * std::cos(phi), r * std::sin(phi), 0});
      }
      return r * s * (2.0 * M_PI / nphi);
    });
  }
  return simpson(0, radius, nr, [&](double r) {
    double ang = simpson(-1.0, 1.0, nt, [&](double t) {
      double rho = std::sqrt(std::max(0.0, 1.0 - t * t));
      double s = 0;
      for (int i = 0; i < nphi; ++i) {
        double phi = 2.0 * M_PI * i / nphi;
        s += f({r * rho * std::cos(phi), r * rho * std::sin(phi), r * t});
      }
      return s * (2.0 * M_PI / nphi);
    });
    return r * r * ang;
  });
}

}  // namespace

double ball_integral(int n, double radius, const std::function<double(Vec)>& f,
                     double tol) {
  double prev = ball_integral_level(n, radius, f, 0);
  for (int level = 1; level <= 3; ++level) {
    double cur = ball_integral_level(n, radius, f, level);
    double scale = std::max({std::abs(cur), std::abs(prev), 1e-30});
    if (std::abs(cur - prev) <= tol * scale) return cur;
    prev = cur;
  }
  return prev;
}

std::vector<double> dense_solve(std::vector<double> A, std::vector<double> b) {
  const Index n = Index(b.size());
  std::vector<Index> perm(n);
  for (Index i = 0; i < n; ++i) perm[i] = i;
  for (Index k = 0; k < n; ++k) {
    Index piv = k;
    for (Index i = k + 1; i < n; ++i) {
      if (std::abs(A[i * n + k]) > std::abs(A[piv * n + k])) piv = i;
    }
    if (A[piv * n + k] == 0) throw std::runtime_error("singular matrix");
    if (piv != k) {
      for (Index j = 0; j < n; ++j) std::swap(A[k * n + j], A[piv * n + j]);
      std::swap(b[k], b[piv]);
    }
    for (Index i = k + 1; i < n; ++i) {
      const double m = A[i * n + k] / A[k * n + k];
      A[i * n + k] = 0;
      for (Index j = k + 1; j < n; ++j) A[i * n + j] -= m * A[k * n + j];
      b[i] -= m * b[k];
    }
  }
  std::vector<double> x(n, 0.0);
  for (Index i = n - 1; i >= 0; --i) {
    double acc = b[i];
    for (Index j = i + 1; j < n; ++j) acc -= A[i * n + j] * x[j];
    x[i] = acc / A[i * n + i];
  }
  return x;
}

std::vector<double> csr_to_dense(const LinearSystem& sys) {
  std::vector<double> d(std::size_t(sys.rows) * sys.rows, 0.0);
  for (Index r = 0; r < sys.rows; ++r) {
    for (Index k = sys.row_ptr[r]; k < sys.row_ptr[r + 1]; ++k) {
      d[std::size_t(r) * sys.rows + sys.col_idx[k]] += sys.values[k];
    }
  }
  return d;
}

namespace {

// Hat-function value of global node `node` at y, assuming y lies in element t.
double hat_on(const ElementTable& et, Index t, Index node, Vec y) {
  for (int i = 0; i <= et.n; ++i) {
    if (et.verts[t][i] == node) return barycentric(et.simplex[t], y)[i];
  }
  return 0.0;
}

struct PieceList {
  std::vector<Simplex> polys;
  void whole(Index t) { (void)t; }
  void sub(Index t, const Simplex& s) {
    (void)t;
    polys.push_back(s);
  }
  void cap(Index, std::span<const Simplex>) {
    throw std::runtime_error("reference assembler does not support fullcaps");
  }
};

}  // namespace

DenseSystem assemble_dense_reference(const ElementTable& et, const DofMap& dm,
                                     const Kernel& kernel, const ScalarFn& f,
                                     const ScalarFn& g, Strategy strat) {
  const int n = et.n;
  const Index N = et.node_count;
  std::vector<double> A(std::size_t(N) * N, 0.0);
  std::vector<double> b(N, 0.0);
  const QuadratureRule& rule = gauss_rule(n, 2);
  const double C = kernel.C;
  WalkScratch ws;

  for (Index tN = 0; tN < et.count; ++tN) {
    if (et.region[tN]) continue;
    const Simplex& sN = et.simplex[tN];
    for (int k = 0; k < rule.npts; ++k) {
      Vec p = rule.bary[k][0] * sN.v[0];
      for (int i = 1; i <= n; ++i) p = p + rule.bary[k][i] * sN.v[i];
      const double w = rule.w[k] * et.volume[tN];

      for (int a = 0; a <= n; ++a) {
        b[et.verts[tN][a]] += w * rule.bary[k][a] * f(p);
      }

      const Ball ball{p, kernel.delta};
      for (Index tM = 0; tM < et.count; ++tM) {
        const bool overlaps =
            distance_point_simplex(p, et.simplex[tM]) < kernel.delta;
        // Whole elements and clipped sub-simplices both reduce to a list of
        // simplices to integrate over.
        PieceList pieces;
        struct {
          PieceList* out;
          const ElementTable* et;
          void whole(Index t) { out->polys.push_back(et->simplex[t]); }
          void sub(Index t, const Simplex& s) { out->sub(t, s); }
          void cap(Index t, std::span<const Simplex> sp) { out->cap(t, sp); }
        } sink{&pieces, &et};
        emit_element_pieces(et, ws, tM, ball, strat, overlaps, sink);
        if (pieces.polys.empty()) continue;

        // Union of nodes of the outer and parent elements.
        std::vector<Index> un;
        for (int i = 0; i <= n; ++i) un.push_back(et.verts[tN][i]);
        for (int i = 0; i <= n; ++i) {
          const Index v = et.verts[tM][i];
          if (std::find(un.begin(), un.end(), v) == un.end()) un.push_back(v);
        }

        for (const Simplex& piece : pieces.polys) {
          const double vol = simplex_volume(piece);
          for (int q = 0; q < rule.npts; ++q) {
            Vec y = rule.bary[q][0] * piece.v[0];
            for (int i = 1; i <= n; ++i) y = y + rule.bary[q][i] * piece.v[i];
            const double wq = rule.w[q] * vol;
            if (et.region[tM]) {
              for (int a = 0; a <= n; ++a) {
                const Index na = et.verts[tN][a];
                const double pa = rule.bary[k][a];
                b[na] += w * 2.0 * C * pa * wq * g(y);
                for (int bb = 0; bb <= n; ++bb) {
                  A[std::size_t(na) * N + et.verts[tN][bb]] +=
                      w * 2.0 * C * pa * rule.bary[k][bb] * wq;
                }
              }
            } else {
              for (Index u : un) {
                const double du = hat_on(et, tM, u, y) - hat_on(et, tN, u, p);
                for (Index v : un) {
                  const double dv = hat_on(et, tM, v, y) - hat_on(et, tN, v, p);
                  A[std::size_t(u) * N + v] += C * w * wq * du * dv;
                }
              }
            }
          }
        }
      }
    }
  }

  // Fold the constrained columns and extract the unknown block.
  DenseSystem out;
  out.unknowns = dm.unknowns;
  out.A.assign(std::size_t(dm.unknowns) * dm.unknowns, 0.0);
  out.b.assign(dm.unknowns, 0.0);
  for (Index u = 0; u < N; ++u) {
    const Index du = dm.dof_of_node[u];
    if (du == kNull) continue;
    double acc = b[u];
    for (Index v = 0; v < N; ++v) {
      const Index dv = dm.dof_of_node[v];
      if (dv == kNull) {
        acc -= A[std::size_t(u) * N + v] * g(et.node[v]);
      } else {
        out.A[std::size_t(du) * dm.unknowns + dv] = A[std::size_t(u) * N + v];
      }
    }
    out.b[du] = acc;
  }
  return out;
}

}  // namespace nlfem::testing
