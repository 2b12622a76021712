#include "nlfem/assembly.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <map>
#include <mutex>
#include <thread>
#include <utility>

#include "nlfem/quadrature.hpp"

namespace nlfem {

DofMap build_dofmap(const ElementTable& et) {
  DofMap dm;
  dm.node_count = et.node_count;
  dm.constrained.assign(et.node_count, 0);
  std::vector<std::uint8_t> touches_interior(et.node_count, 0);
  for (Index t = 0; t < et.count; ++t) {
    for (int i = 0; i <= et.n; ++i) {
      const Index v = et.verts[t][i];
      if (et.region[t]) dm.constrained[v] = 1;
      else touches_interior[v] = 1;
    }
  }
  dm.on_interface.assign(et.node_count, 0);
  dm.dof_of_node.assign(et.node_count, kNull);
  for (Index v = 0; v < et.node_count; ++v) {
    if (dm.constrained[v]) {
      dm.on_interface[v] = touches_interior[v];
    } else {
      dm.dof_of_node[v] = dm.unknowns;
      dm.node_of_dof.push_back(v);
      ++dm.unknowns;
    }
  }
  return dm;
}

std::array<double, 4> basis_eval(const ElementTable& et, Index t, Vec p) {
  return et.bary(t, p);
}

LinearSystem merge_triplets(std::vector<Triplet> triplets, Index rows) {
  for (const Triplet& t : triplets) {
    if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= rows) {
      fail(ErrorCode::BadIndex, "triplet index outside the matrix");
    }
  }
  std::stable_sort(triplets.begin(), triplets.end(),
                   [](const Triplet& a, const Triplet& b) {
                     return a.row != b.row ? a.row < b.row : a.col < b.col;
                   });
  LinearSystem sys;
  sys.rows = rows;
  sys.row_ptr.assign(rows + 1, 0);
  std::size_t i = 0;
  while (i < triplets.size()) {
    std::size_t j = i;
    double v = 0;
    while (j < triplets.size() && triplets[j].row == triplets[i].row &&
           triplets[j].col == triplets[i].col) {
      v += triplets[j].value;
      ++j;
    }
    sys.col_idx.push_back(triplets[i].col);
    sys.values.push_back(v);
    ++sys.row_ptr[triplets[i].row + 1];
    i = j;
  }
  for (Index r = 0; r < rows; ++r) sys.row_ptr[r + 1] += sys.row_ptr[r];
  return sys;
}

// ---------------------------------------------------------------------------
// deterministic parallel accumulation
//
// Interior elements are claimed in fixed blocks of 32. Each block produces a
// sorted run of (key, value) entries, where key = row<<32 | col for matrix
// entries and col = kRhsCol for right-hand-side entries (only the upper
// triangle row <= col is generated). Runs combine pairwise in a fixed binary
// tree over block indices, so the summation order never depends on thread
// scheduling.

namespace {

constexpr Index kBlock = 32;
constexpr std::uint64_t kRhsCol = 0xFFFFFFFFull;

struct Entry {
  std::uint64_t key;
  double val;
};

std::vector<Entry> merge_runs(const std::vector<Entry>& a, const std::vector<Entry>& b) {
  std::vector<Entry> out;
  out.reserve(a.size() + b.size());
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i].key < b[j].key) out.push_back(a[i++]);
    else if (b[j].key < a[i].key) out.push_back(b[j++]);
    else {
      out.push_back({a[i].key, a[i].val + b[j].val});
      ++i, ++j;
    }
  }
  while (i < a.size()) out.push_back(a[i++]);
  while (j < b.size()) out.push_back(b[j++]);
  return out;
}

struct MergeTree {
  explicit MergeTree(Index blocks) : nblocks(blocks) {}

  Index count_at(int level) const {
    Index c = nblocks;
    for (int l = 0; l < level; ++l) c = (c + 1) / 2;
    return c;
  }

  // Deliver a finished run for tree node (level, idx); merges with its
  // sibling when that run is already present, recursing up the tree. Merging
  // happens outside the lock.
  void complete(int level, Index idx, std::vector<Entry>&& run) {
    while (true) {
      const Index cnt = count_at(level);
      if (cnt <= 1) {
        std::lock_guard<std::mutex> lk(mu);
        result = std::move(run);
        return;
      }
      if ((idx ^ 1) >= cnt) {  // odd tail: no sibling at this level
        ++level;
        idx >>= 1;
        continue;
      }
      std::vector<Entry> other;
      {
        std::lock_guard<std::mutex> lk(mu);
        auto it = pending.find({level, idx ^ 1});
        if (it == pending.end()) {
          pending.emplace(std::make_pair(level, idx), std::move(run));
          return;
        }
        other = std::move(it->second);
        pending.erase(it);
      }
      run = (idx & 1) ? merge_runs(other, run) : merge_runs(run, other);
      ++level;
      idx >>= 1;
    }
  }

  Index nblocks;
  std::mutex mu;
  std::map<std::pair<int, Index>, std::vector<Entry>> pending;
  std::vector<Entry> result;
};

// Open-addressing accumulator for one block's (key -> value) sums.
struct PairMap {
  std::vector<std::uint64_t> keys;
  std::vector<double> vals;
  std::vector<std::uint32_t> stamp;
  std::vector<std::uint32_t> used;
  std::uint32_t epoch = 0;
  std::size_t mask = 0;

  void init(std::size_t cap_pow2) {
    keys.assign(cap_pow2, 0);
    vals.assign(cap_pow2, 0);
    stamp.assign(cap_pow2, 0);
    used.clear();
    epoch = 0;
    mask = cap_pow2 - 1;
  }

  void reset() {
    used.clear();
    if (++epoch == 0) {
      std::fill(stamp.begin(), stamp.end(), 0u);
      epoch = 1;
    }
  }

  double& slot(std::uint64_t key) {
    if (used.size() * 2 >= keys.size()) grow();
    std::size_t i = splitmix64(key) & mask;
    while (true) {
      if (stamp[i] != epoch) {
        stamp[i] = epoch;
        keys[i] = key;
        vals[i] = 0;
        used.push_back(std::uint32_t(i));
        return vals[i];
      }
      if (keys[i] == key) return vals[i];
      i = (i + 1) & mask;
    }
  }

  void grow() {
    std::vector<Entry> live;
    live.reserve(used.size());
    for (std::uint32_t s : used) live.push_back({keys[s], vals[s]});
    init(keys.size() * 2);
    epoch = 1;
    for (const Entry& e : live) slot(e.key) = e.val;
  }
};

struct RhsScratch {
  std::vector<double> val;
  std::vector<std::uint32_t> stamp;
  std::vector<Index> touched;
  std::uint32_t epoch = 0;

  void init(Index n) {
    val.assign(n, 0);
    stamp.assign(n, 0);
    touched.clear();
    epoch = 0;
  }
  void reset() {
    touched.clear();
    if (++epoch == 0) {
      std::fill(stamp.begin(), stamp.end(), 0u);
      epoch = 1;
    }
  }
  double& at(Index i) {
    if (stamp[i] != epoch) {
      stamp[i] = epoch;
      val[i] = 0;
      touched.push_back(i);
    }
    return val[i];
  }
};

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("NLFEM_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0 && v <= 1024) return int(v);
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc ? int(hc) : 1;
}

// Streams ball pieces for one (element, quadrature point) pair, aggregates
// zeroth/first/second basis moments per parent element, and turns each
// finished parent into matrix and right-hand-side contributions.
struct AsmSink {
  const ElementTable& et;
  const DofMap& dm;
  const Kernel& kk;
  const ScalarFn& g;
  const std::vector<double>& g_node;
  const QuadratureRule& inner;
  std::uint64_t seed = 0;
  int mc_samples = 0;

  PairMap* pm = nullptr;
  RhsScratch* rhs = nullptr;

  // outer-rule moment sums: sum_k w_k, sum_k w_k b_a, sum_k w_k b_a b_b;
  // multiplied by the parent volume they aggregate a ball element that is
  // inside the ball of every outer quadrature point in one pass
  double rW0 = 0;
  std::array<double, 4> rWA{};
  double rWAB[4][4] = {};

  // state for the current parent element
  Index elemN = kNull;
  double volN = 0;
  std::array<Index, 4> nodeN{};
  std::array<Index, 4> dofN{};

  // state for the current outer quadrature point
  int qp = 0;
  double wN = 0;
  Vec p{};
  std::array<double, 4> cN{};

  // aggregation state for the current parent
  Index cur = kNull;
  bool cur_constraint = false;
  double S0 = 0, Sg = 0;
  double S1[4] = {};
  double S2[4][4] = {};
  int piece_idx = 0;

  std::uint64_t mc_done = 0, mc_hit = 0;

  void begin_parent(Index n_elem, double vol) {
    elemN = n_elem;
    volN = vol;
    for (int a = 0; a <= et.n; ++a) {
      nodeN[a] = et.verts[n_elem][a];
      dofN[a] = dm.dof_of_node[nodeN[a]];
    }
  }

  void begin_walk(int k, double w, Vec point, const std::array<double, 4>& bary_at_p) {
    qp = k;
    wN = w;
    p = point;
    cN = bary_at_p;
    cur = kNull;
    piece_idx = 0;
  }

  void end_walk() {
    if (cur != kNull) flush();
  }

  void start_parent(Index t) {
    if (cur != kNull) flush();
    cur = t;
    cur_constraint = et.region[t] != 0;
    S0 = Sg = 0;
    for (int i = 0; i < 4; ++i) {
      S1[i] = 0;
      for (int j = 0; j < 4; ++j) S2[i][j] = 0;
    }
  }

  void accumulate_point(Vec y, double w) {
    S0 += w;
    if (cur_constraint) {
      Sg += w * g(y);
      return;
    }
    const std::array<double, 4> b = et.bary(cur, y);
    for (int i = 0; i <= et.n; ++i) {
      const double wb = w * b[i];
      S1[i] += wb;
      for (int j = 0; j <= et.n; ++j) S2[i][j] += wb * b[j];
    }
  }

  void whole(Index t) {
    if (t != cur) start_parent(t);
    ++piece_idx;
    const double vol = et.volume[t];
    if (cur_constraint) {
      // Only the measure and the g-average matter on constraint elements.
      S0 += vol;
      const Simplex& s = et.simplex[t];
      for (int k = 0; k < inner.npts; ++k) {
        Vec y = inner.bary[k][0] * s.v[0];
        for (int i = 1; i <= et.n; ++i) y = y + inner.bary[k][i] * s.v[i];
        Sg += vol * inner.w[k] * g(y);
      }
      return;
    }
    // Exact basis moments of a full element in its own coordinates.
    const int n = et.n;
    S0 += vol;
    const double s1 = vol / (n + 1);
    const double off = vol / double((n + 1) * (n + 2));
    for (int i = 0; i <= n; ++i) {
      S1[i] += s1;
      for (int j = 0; j <= n; ++j) S2[i][j] += off * (i == j ? 2.0 : 1.0);
    }
  }

  void sub(Index t, const Simplex& s) {
    if (t != cur) start_parent(t);
    ++piece_idx;
    const double vol = simplex_volume(s);
    for (int k = 0; k < inner.npts; ++k) {
      Vec y = inner.bary[k][0] * s.v[0];
      for (int i = 1; i <= et.n; ++i) y = y + inner.bary[k][i] * s.v[i];
      accumulate_point(y, vol * inner.w[k]);
    }
  }

  void cap(Index t, std::span<const Simplex> outer) {
    if (t != cur) start_parent(t);
    ++piece_idx;
    Rng rng(mix_seed(seed, std::uint64_t(elemN), std::uint64_t(qp),
                     std::uint64_t(piece_idx)));
    const double r2 = kk.delta * kk.delta;
    for (const Simplex& s : outer) {
      const double w = simplex_volume(s) / mc_samples;
      for (int k = 0; k < mc_samples; ++k) {
        const Vec y = sample_simplex(s, rng);
        ++mc_done;
        if (norm2(y - p) >= r2) continue;
        ++mc_hit;
        accumulate_point(y, w);
      }
    }
  }

  void add_pair(Index dof_a, Index node_a, Index dof_b, Index node_b, double v) {
    if (dof_a != kNull && dof_b != kNull) {
      const std::uint64_t lo = std::uint64_t(std::min(dof_a, dof_b));
      const std::uint64_t hi = std::uint64_t(std::max(dof_a, dof_b));
      pm->slot((lo << 32) | hi) += v;
    } else if (dof_a != kNull) {
      rhs->at(dof_a) -= v * g_node[node_b];
    } else if (dof_b != kNull) {
      rhs->at(dof_b) -= v * g_node[node_a];
    }
  }

  void flush() {
    const Index M = cur;
    const double C = kk.C;
    if (cur_constraint) {
      // 2 * u(x) v(x) * (measure of the constraint part of the ball), plus
      // the matching g term on the right-hand side.
      const double base = wN * 2.0 * C;
      for (int a = 0; a <= et.n; ++a) {
        if (dofN[a] != kNull) rhs->at(dofN[a]) += base * Sg * cN[a];
        for (int b = a; b <= et.n; ++b) {
          add_pair(dofN[a], nodeN[a], dofN[b], nodeN[b], base * S0 * cN[a] * cN[b]);
        }
      }
      cur = kNull;
      return;
    }

    // Union of the outer element's nodes and the parent's nodes.
    struct Slot {
      Index node, dof;
      double c;
      int mslot;
    };
    Slot U[8];
    int cnt = 0;
    const auto& vm = et.verts[M];
    for (int a = 0; a <= et.n; ++a) {
      int ms = -1;
      for (int j = 0; j <= et.n; ++j) {
        if (vm[j] == nodeN[a]) {
          ms = j;
          break;
        }
      }
      U[cnt++] = {nodeN[a], dofN[a], cN[a], ms};
    }
    for (int j = 0; j <= et.n; ++j) {
      bool shared = false;
      for (int a = 0; a <= et.n; ++a) {
        if (nodeN[a] == vm[j]) {
          shared = true;
          break;
        }
      }
      if (!shared) U[cnt++] = {vm[j], dm.dof_of_node[vm[j]], 0.0, j};
    }

    const double scale = C * wN;
    for (int x = 0; x < cnt; ++x) {
      const double s1x = U[x].mslot >= 0 ? S1[U[x].mslot] : 0.0;
      for (int y = x; y < cnt; ++y) {
        const double s1y = U[y].mslot >= 0 ? S1[U[y].mslot] : 0.0;
        const double s2 =
            (U[x].mslot >= 0 && U[y].mslot >= 0) ? S2[U[x].mslot][U[y].mslot] : 0.0;
        const double v =
            scale * (s2 - U[x].c * s1y - U[y].c * s1x + U[x].c * U[y].c * S0);
        add_pair(U[x].dof, U[x].node, U[y].dof, U[y].node, v);
      }
    }
    cur = kNull;
  }

  // One element fully inside the ball of every outer quadrature point of the
  // parent: the basis moments are the closed whole-element ones and do not
  // depend on the ball center, so the four per-point flushes collapse into a
  // single pass with the rule moment sums standing in for (w, c) products.
  void core_whole(Index t) {
    const double C = kk.C;
    const double vol = et.volume[t];
    if (et.region[t]) {
      double sg = 0;
      const Simplex& s = et.simplex[t];
      for (int k = 0; k < inner.npts; ++k) {
        Vec y = inner.bary[k][0] * s.v[0];
        for (int i = 1; i <= et.n; ++i) y = y + inner.bary[k][i] * s.v[i];
        sg += vol * inner.w[k] * g(y);
      }
      const double base = 2.0 * C * volN;
      for (int a = 0; a <= et.n; ++a) {
        if (dofN[a] != kNull) rhs->at(dofN[a]) += base * rWA[a] * sg;
        for (int b = a; b <= et.n; ++b) {
          add_pair(dofN[a], nodeN[a], dofN[b], nodeN[b], base * rWAB[a][b] * vol);
        }
      }
      return;
    }

    const int n = et.n;
    const double s1 = vol / (n + 1);
    const double off = vol / double((n + 1) * (n + 2));

    struct Slot {
      Index node, dof;
      int mslot, nslot;
    };
    Slot U[8];
    int cnt = 0;
    const auto& vm = et.verts[t];
    for (int a = 0; a <= n; ++a) {
      int ms = -1;
      for (int j = 0; j <= n; ++j) {
        if (vm[j] == nodeN[a]) {
          ms = j;
          break;
        }
      }
      U[cnt++] = {nodeN[a], dofN[a], ms, a};
    }
    for (int j = 0; j <= n; ++j) {
      bool shared = false;
      for (int a = 0; a <= n; ++a) {
        if (nodeN[a] == vm[j]) {
          shared = true;
          break;
        }
      }
      if (!shared) U[cnt++] = {vm[j], dm.dof_of_node[vm[j]], j, -1};
    }

    const double scale = C * volN;
    for (int x = 0; x < cnt; ++x) {
      const double s1x = U[x].mslot >= 0 ? s1 : 0.0;
      const double wax = U[x].nslot >= 0 ? rWA[U[x].nslot] : 0.0;
      for (int y = x; y < cnt; ++y) {
        const double s1y = U[y].mslot >= 0 ? s1 : 0.0;
        const double way = U[y].nslot >= 0 ? rWA[U[y].nslot] : 0.0;
        const double s2 = (U[x].mslot >= 0 && U[y].mslot >= 0)
                              ? off * (U[x].mslot == U[y].mslot ? 2.0 : 1.0)
                              : 0.0;
        const double wab = (U[x].nslot >= 0 && U[y].nslot >= 0)
                               ? rWAB[U[x].nslot][U[y].nslot]
                               : 0.0;
        const double v = scale * (rW0 * s2 - wax * s1y - way * s1x + wab * vol);
        add_pair(U[x].dof, U[x].node, U[y].dof, U[y].node, v);
      }
    }
  }
};

// Element sets one parent's four ball walks share. `core` holds elements
// certain to classify Inside for every outer quadrature point; `rest` is the
// remainder of the reachable superset in breadth-first order; `boundary`
// lists reachable elements with an unglued facet so the per-point escape
// check can run without another walk.
struct Candidates {
  std::vector<Index> core;
  std::vector<Index> rest;
  std::vector<Index> boundary;
  std::vector<double> gaps;
};

// One breadth-first pass from the parent with radius delta + spread, where
// spread bounds the distance from the parent barycenter to its quadrature
// points. Any element within delta of some quadrature point is within
// delta + spread of the barycenter, so the per-point loops never need their
// own walks. Never throws: escape checks are per quadrature point.
void collect_candidates(const ElementTable& et, WalkScratch& ws, Index seedEl,
                        Vec cN, const Vec* qpts, int nq, double delta,
                        Candidates& out) {
  double spread = 0;
  for (int k = 0; k < nq; ++k) spread = std::max(spread, dist(qpts[k], cN));
  const double R = delta + spread;
  // Below this center distance an element's every vertex stays strictly under
  // the classifier's inside threshold for each quadrature point; the extra
  // 1e-12 absorbs the triangle-inequality rounding.
  const double core_cut = delta - eps_geo(delta) - 1e-12 * delta - spread;

  out.core.clear();
  out.rest.clear();
  out.boundary.clear();
  out.gaps.clear();
  ws.begin(et.count);
  ws.queue.push_back(seedEl);
  ws.stamp[seedEl] = ws.epoch;
  out.gaps.push_back(dist(et.center[seedEl], cN));
  for (std::size_t qi = 0; qi < ws.queue.size(); ++qi) {
    const Index t = ws.queue[qi];
    for (int f = 0; f <= et.n; ++f) {
      if (et.neighbor[t][f] == kNull) {
        out.boundary.push_back(t);
        break;
      }
    }
    if (out.gaps[qi] + et.radius[t] < core_cut) out.core.push_back(t);
    else out.rest.push_back(t);

    for (int f = 0; f <= et.n; ++f) {
      const Index nb = et.neighbor[t][f];
      if (nb == kNull || ws.stamp[nb] == ws.epoch) continue;
      ws.stamp[nb] = ws.epoch;  // the guard depends only on (nb, cN)
      const double gap = dist(et.center[nb], cN);
      if (gap >= et.radius[nb] + R) continue;
      if (gap + et.radius[nb] >= R &&
          distance_point_simplex(cN, et.simplex[nb]) >= R) {
        continue;
      }
      ws.queue.push_back(nb);
      out.gaps.push_back(gap);
    }
  }
}

}  // namespace

LinearSystem assemble(const ElementTable& et, const DofMap& dofs,
                      const Kernel& kernel, const ScalarFn& f, const ScalarFn& g,
                      const AssemblyConfig& cfg, AssemblyStats* stats) {
  if (kernel.n != et.n) fail(ErrorCode::BadConfig, "kernel dimension does not match mesh");
  if (!(kernel.delta > 0)) fail(ErrorCode::BadConfig, "delta must be positive");
  if (cfg.mc_samples <= 0) fail(ErrorCode::BadConfig, "mc_samples must be positive");
  const auto t0 = std::chrono::steady_clock::now();

  std::vector<Index> interior;
  for (Index t = 0; t < et.count; ++t) {
    if (!et.region[t]) interior.push_back(t);
  }
  const Index nblocks = Index((interior.size() + kBlock - 1) / kBlock);

  std::vector<double> g_node(et.node_count, 0.0);
  for (Index v = 0; v < et.node_count; ++v) {
    if (dofs.constrained[v]) g_node[v] = g(et.node[v]);
  }

  const QuadratureRule& rule = gauss_rule(et.n, 2);
  double rW0 = 0;
  std::array<double, 4> rWA{};
  double rWAB[4][4] = {};
  for (int k = 0; k < rule.npts; ++k) {
    rW0 += rule.w[k];
    for (int a = 0; a <= et.n; ++a) {
      rWA[a] += rule.w[k] * rule.bary[k][a];
      for (int b = 0; b <= et.n; ++b) {
        rWAB[a][b] += rule.w[k] * rule.bary[k][a] * rule.bary[k][b];
      }
    }
  }
  const int T = std::max(1, std::min(resolve_threads(cfg.threads),
                                     std::max<Index>(nblocks, 1)));

  MergeTree tree(std::max<Index>(nblocks, 1));
  std::atomic<Index> next{0};
  std::atomic<std::uint64_t> mc_done{0}, mc_hit{0};

  const double delta = kernel.delta;
  const double slack = eps_geo(delta);
  // Elements whose bounding sphere clears this classify Inside outright.
  const double inside_cut = delta - slack - 1e-12 * delta;

  auto worker = [&]() {
    PairMap pm;
    pm.init(std::size_t(1) << 15);
    RhsScratch rs;
    rs.init(dofs.unknowns);
    WalkScratch ws;
    Candidates cand;
    AsmSink sink{et,     dofs, kernel, g, g_node, rule, cfg.seed,
                 cfg.mc_samples};
    sink.pm = &pm;
    sink.rhs = &rs;
    sink.rW0 = rW0;
    sink.rWA = rWA;
    for (int a = 0; a < 4; ++a)
      for (int b2 = 0; b2 < 4; ++b2) sink.rWAB[a][b2] = rWAB[a][b2];
    std::vector<Entry> out;

    while (true) {
      const Index b = next.fetch_add(1);
      if (b >= nblocks) break;
      pm.reset();
      rs.reset();
      const std::size_t lo = std::size_t(b) * kBlock;
      const std::size_t hi = std::min(lo + kBlock, interior.size());
      for (std::size_t e = lo; e < hi; ++e) {
        const Index nEl = interior[e];
        const Simplex& s = et.simplex[nEl];
        const double vol = et.volume[nEl];
        Vec qpts[4];
        for (int k = 0; k < rule.npts; ++k) {
          Vec p = rule.bary[k][0] * s.v[0];
          for (int i = 1; i <= et.n; ++i) p = p + rule.bary[k][i] * s.v[i];
          qpts[k] = p;
        }
        sink.begin_parent(nEl, vol);
        collect_candidates(et, ws, nEl, et.center[nEl], qpts, rule.npts, delta,
                           cand);
        for (Index t : cand.core) sink.core_whole(t);

        for (int k = 0; k < rule.npts; ++k) {
          const Vec p = qpts[k];
          const double w = rule.w[k] * vol;
          const double fv = f(p);
          std::array<double, 4> bary_at_p{};
          for (int a = 0; a <= et.n; ++a) bary_at_p[a] = rule.bary[k][a];
          sink.begin_walk(k, w, p, bary_at_p);
          for (int a = 0; a <= et.n; ++a) {
            if (sink.dofN[a] != kNull) rs.at(sink.dofN[a]) += w * bary_at_p[a] * fv;
          }
          for (Index t : cand.boundary) {
            for (int fct = 0; fct <= et.n; ++fct) {
              if (et.neighbor[t][fct] == kNull &&
                  detail::facet_distance(et, t, fct, p) < delta - slack) {
                fail(ErrorCode::BallExitsMesh,
                     "ball reaches past an unglued facet of element " +
                         std::to_string(t));
              }
            }
          }

          const Ball ball{p, delta};
          for (Index t : cand.rest) {
            const double gap = dist(et.center[t], p);
            if (gap >= et.radius[t] + delta) continue;
            switch (cfg.strategy) {
              case Strategy::Barycenter:
                if (gap < delta) sink.whole(t);
                break;
              case Strategy::Overlap:
                if (gap + et.radius[t] < delta ||
                    distance_point_simplex(p, et.simplex[t]) < delta) {
                  sink.whole(t);
                }
                break;
              default: {
                if (gap + et.radius[t] < inside_cut) {
                  sink.whole(t);
                  break;
                }
                const Classification cls = classify_simplex(et.simplex[t], ball);
                if (cls.kind == SimplexClass::Inside) {
                  sink.whole(t);
                } else if (cls.kind == SimplexClass::Straddle) {
                  if (cfg.strategy == Strategy::Inside) break;
                  detail::straddle_inner(et, ws, t, ball, cls,
                                         cfg.strategy == Strategy::Approxcaps);
                  for (const Simplex& sub : ws.tris) sink.sub(t, sub);
                  if (cfg.strategy == Strategy::Fullcaps) {
                    detail::straddle_outer(et, ws, t, ball, cls);
                    if (!ws.tris.empty()) {
                      sink.cap(t, std::span<const Simplex>(ws.tris));
                    }
                  }
                } else if (cfg.strategy == Strategy::Fullcaps &&
                           distance_point_simplex(p, et.simplex[t]) < delta) {
                  // every vertex outside yet the element meets the ball: one
                  // whole-element Monte Carlo region
                  sink.cap(t, std::span<const Simplex>(&et.simplex[t], 1));
                }
                break;
              }
            }
          }
          sink.end_walk();
        }
      }
      out.clear();
      out.reserve(pm.used.size() + rs.touched.size());
      for (std::uint32_t sl : pm.used) out.push_back({pm.keys[sl], pm.vals[sl]});
      for (Index r : rs.touched) {
        out.push_back({(std::uint64_t(r) << 32) | kRhsCol, rs.val[r]});
      }
      std::sort(out.begin(), out.end(),
                [](const Entry& a, const Entry& b) { return a.key < b.key; });
      tree.complete(0, b, std::move(out));
      out = {};
    }
    mc_done.fetch_add(sink.mc_done);
    mc_hit.fetch_add(sink.mc_hit);
  };

  if (nblocks > 0) {
    std::vector<std::thread> pool;
    for (int i = 1; i < T; ++i) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
  }

  // Expand the merged upper-triangle stream into a full CSR matrix with
  // sorted columns: mirrored entries of row r all have columns < r and arrive
  // in ascending order, so they fill the row prefix.
  LinearSystem sys;
  sys.rows = dofs.unknowns;
  sys.rhs.assign(dofs.unknowns, 0.0);
  const std::vector<Entry>& run = tree.result;
  std::vector<Index> deg(dofs.unknowns, 0), lower(dofs.unknowns, 0);
  for (const Entry& e : run) {
    const Index r = Index(e.key >> 32);
    const std::uint64_t craw = e.key & 0xFFFFFFFFull;
    if (craw == kRhsCol) {
      sys.rhs[r] += e.val;
      continue;
    }
    const Index c = Index(craw);
    ++deg[r];
    if (c != r) {
      ++deg[c];
      ++lower[c];
    }
  }
  sys.row_ptr.assign(dofs.unknowns + 1, 0);
  for (Index r = 0; r < dofs.unknowns; ++r) sys.row_ptr[r + 1] = sys.row_ptr[r] + deg[r];
  sys.col_idx.assign(sys.row_ptr.back(), 0);
  sys.values.assign(sys.row_ptr.back(), 0.0);
  std::vector<Index> up(dofs.unknowns), lo_cur(dofs.unknowns);
  for (Index r = 0; r < dofs.unknowns; ++r) {
    lo_cur[r] = sys.row_ptr[r];
    up[r] = sys.row_ptr[r] + lower[r];
  }
  for (const Entry& e : run) {
    const Index r = Index(e.key >> 32);
    const std::uint64_t craw = e.key & 0xFFFFFFFFull;
    if (craw == kRhsCol) continue;
    const Index c = Index(craw);
    sys.col_idx[up[r]] = c;
    sys.values[up[r]] = e.val;
    ++up[r];
    if (c != r) {
      sys.col_idx[lo_cur[c]] = r;
      sys.values[lo_cur[c]] = e.val;
      ++lo_cur[c];
    }
  }

  if (stats) {
    stats->seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    stats->threads = T;
    stats->blocks = nblocks;
    stats->mc_samples = mc_done.load();
    stats->mc_hits = mc_hit.load();
  }
  return sys;
}

}  // namespace nlfem
