// Python bindings. Meshes cross the boundary as (coords, cells, region)
// arrays; problems as polynomial term arrays so assembly never calls back
// into the interpreter from worker threads.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

#include "nlfem/study.hpp"

namespace py = pybind11;
using namespace nlfem;

namespace {

MeshData mesh_from_arrays(py::array_t<double, py::array::c_style | py::array::forcecast> coords,
                          py::array_t<std::int64_t, py::array::c_style | py::array::forcecast> cells,
                          py::array_t<std::int64_t, py::array::c_style | py::array::forcecast> region) {
  if (coords.ndim() != 2 || (coords.shape(1) != 2 && coords.shape(1) != 3)) {
    throw py::value_error("coords must have shape (nodes, 2) or (nodes, 3)");
  }
  MeshData md;
  md.n = int(coords.shape(1));
  if (cells.ndim() != 2 || cells.shape(1) != md.n + 1) {
    throw py::value_error("cells must have shape (count, dim + 1)");
  }
  if (region.ndim() != 1 || region.shape(0) != cells.shape(0)) {
    throw py::value_error("region must have shape (cell count,)");
  }
  const auto c = coords.unchecked<2>();
  md.coords.resize(coords.shape(0));
  for (py::ssize_t i = 0; i < coords.shape(0); ++i) {
    md.coords[i] = {c(i, 0), c(i, 1), md.n == 3 ? c(i, 2) : 0.0};
  }
  const auto k = cells.unchecked<2>();
  const auto r = region.unchecked<1>();
  md.cells.resize(cells.shape(0));
  md.region.resize(cells.shape(0));
  for (py::ssize_t i = 0; i < cells.shape(0); ++i) {
    std::array<Index, 4> cell{0, 0, 0, 0};
    for (int j = 0; j <= md.n; ++j) {
      const std::int64_t v = k(i, j);
      if (v < 0 || v >= coords.shape(0)) {
        throw py::value_error("cell vertex index out of range");
      }
      cell[j] = Index(v);
    }
    md.cells[i] = cell;
    if (r(i) != 0 && r(i) != 1) throw py::value_error("region must be 0 or 1");
    md.region[i] = std::uint8_t(r(i));
  }
  return md;
}

// The (shape, data) array constructors copy from a staging buffer; they
// derive strides from sizeof(T) and stay correct across numpy ABI changes.
template <class T>
py::array_t<T> make_array(std::vector<py::ssize_t> shape, const std::vector<T>& flat) {
  return py::array_t<T>(std::move(shape), flat.data());
}

py::dict mesh_to_dict(const MeshData& md) {
  std::vector<double> coords;
  coords.reserve(md.coords.size() * std::size_t(md.n));
  for (const Vec& p : md.coords) {
    for (int j = 0; j < md.n; ++j) coords.push_back(p[j]);
  }
  std::vector<std::int32_t> cells;
  cells.reserve(md.cells.size() * std::size_t(md.n + 1));
  for (const auto& cell : md.cells) {
    for (int j = 0; j <= md.n; ++j) cells.push_back(cell[j]);
  }
  py::dict out;
  out["coords"] = make_array({py::ssize_t(md.coords.size()), py::ssize_t(md.n)}, coords);
  out["cells"] = make_array({py::ssize_t(md.cells.size()), py::ssize_t(md.n + 1)}, cells);
  out["region"] = make_array({py::ssize_t(md.region.size())}, md.region);
  return out;
}

std::optional<Polynomial> terms_to_polynomial(py::object terms) {
  if (terms.is_none()) return std::nullopt;
  const auto arr = py::array_t<double, py::array::c_style | py::array::forcecast>(terms);
  if (arr.ndim() != 2 || arr.shape(1) != 4) {
    throw py::value_error("problem_terms must have shape (terms, 4): c, e0, e1, e2");
  }
  const auto t = arr.unchecked<2>();
  Polynomial p;
  for (py::ssize_t i = 0; i < arr.shape(0); ++i) {
    std::array<int, 3> e{};
    for (int j = 0; j < 3; ++j) {
      const double raw = t(i, j + 1);
      e[j] = int(raw);
      if (double(e[j]) != raw || e[j] < 0) {
        throw py::value_error("exponents must be nonnegative integers");
      }
    }
    p = p + Polynomial::monomial(e, t(i, 0));
  }
  if (p.terms.empty()) throw py::value_error("problem_terms is empty");
  return p;
}

struct Assembled {
  ElementTable et;
  DofMap dofs;
  Kernel kernel;
  ManufacturedProblem prob;
  LinearSystem sys;
  AssemblyStats stats;
};

Assembled assemble_impl(const MeshData& md, double delta,
                        const std::string& strategy, const std::string& norm,
                        py::object problem_terms, int threads,
                        std::uint64_t seed, int mc_samples) {
  Assembled a;
  a.kernel = make_kernel(md.n, delta,
                         norm == "mass" ? Normalization::Mass
                         : norm == "moment2"
                             ? Normalization::SecondMoment
                             : throw py::value_error("normalization must be mass or moment2"));
  const std::optional<Polynomial> custom = terms_to_polynomial(problem_terms);
  a.prob = custom ? make_problem_from(*custom, a.kernel)
                  : make_poly_problem(md.n, a.kernel);
  a.et = build_element_table(build_cmap(md.n, md.coords, md.cells, md.region));
  a.dofs = build_dofmap(a.et);
  AssemblyConfig cfg;
  cfg.strategy = parse_strategy(strategy);
  cfg.threads = threads;
  cfg.seed = seed;
  cfg.mc_samples = mc_samples;
  const Polynomial f = a.prob.f, u = a.prob.u;
  a.sys = assemble(
      a.et, a.dofs, a.kernel, [f](Vec p) { return f.eval(p); },
      [u](Vec p) { return u.eval(p); }, cfg, &a.stats);
  return a;
}

template <class T>
py::array_t<T> to_array(const std::vector<T>& v) {
  return make_array({py::ssize_t(v.size())}, v);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "piecewise linear finite elements for constrained nonlocal diffusion";

  py::register_exception<Error>(m, "NlfemError");

  m.def(
      "generate_mesh",
      [](int n, int res, double delta) {
        return mesh_to_dict(generate_mesh(n, res, delta));
      },
      py::arg("n"), py::arg("res"), py::arg("delta"),
      "structured unit box mesh with a constraint layer of width >= delta");

  m.def(
      "read_mesh",
      [](const std::string& path) { return mesh_to_dict(read_mesh_file(path)); },
      py::arg("path"));

  m.def(
      "write_mesh",
      [](const std::string& path, py::array_t<double, py::array::c_style | py::array::forcecast> coords,
         py::array_t<std::int64_t, py::array::c_style | py::array::forcecast> cells,
         py::array_t<std::int64_t, py::array::c_style | py::array::forcecast> region) {
        write_mesh_file(path, mesh_from_arrays(coords, cells, region));
      },
      py::arg("path"), py::arg("coords"), py::arg("cells"), py::arg("region"));

  m.def(
      "mesh_stats",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> coords,
         py::array_t<std::int64_t, py::array::c_style | py::array::forcecast> cells,
         py::array_t<std::int64_t, py::array::c_style | py::array::forcecast> region) {
        const MeshData md = mesh_from_arrays(coords, cells, region);
        const CMap cm = build_cmap(md.n, md.coords, md.cells, md.region);
        const HStats hs = mesh_h_stats(cm);
        const ElementTable et = build_element_table(cm);
        const DofMap dofs = build_dofmap(et);
        Index interior = 0;
        for (Index t = 0; t < et.count; ++t) {
          if (et.region[t] == 0) ++interior;
        }
        py::dict out;
        out["nodes"] = et.node_count;
        out["elements"] = et.count;
        out["interior_elements"] = interior;
        out["dof"] = dofs.unknowns;
        out["h_avg"] = hs.h_avg;
        out["h_min"] = hs.h_min;
        out["h_max"] = hs.h_max;
        return out;
      },
      py::arg("coords"), py::arg("cells"), py::arg("region"),
      "validates the mesh (throws NlfemError) and reports size statistics");

  m.def(
      "assemble_system",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> coords,
         py::array_t<std::int64_t, py::array::c_style | py::array::forcecast> cells,
         py::array_t<std::int64_t, py::array::c_style | py::array::forcecast> region,
         double delta, const std::string& strategy, const std::string& normalization,
         py::object problem_terms, int threads, std::uint64_t seed, int mc_samples) {
        const MeshData md = mesh_from_arrays(coords, cells, region);
        Assembled a = assemble_impl(md, delta, strategy, normalization,
                                    problem_terms, threads, seed, mc_samples);
        py::dict out;
        out["row_ptr"] = to_array(a.sys.row_ptr);
        out["col_idx"] = to_array(a.sys.col_idx);
        out["values"] = to_array(a.sys.values);
        out["rhs"] = to_array(a.sys.rhs);
        out["node_of_dof"] = to_array(a.dofs.node_of_dof);
        out["constrained"] = to_array(a.dofs.constrained);
        out["assembly_s"] = a.stats.seconds;
        out["threads"] = a.stats.threads;
        return out;
      },
      py::arg("coords"), py::arg("cells"), py::arg("region"), py::arg("delta"),
      py::arg("strategy") = "nocaps", py::arg("normalization") = "mass",
      py::arg("problem_terms") = py::none(), py::arg("threads") = 0,
      py::arg("seed") = 0x5eedULL, py::arg("mc_samples") = 200,
      "stiffness matrix in CSR form plus the constrained load vector");

  m.def(
      "cg",
      [](py::array_t<std::int32_t, py::array::c_style | py::array::forcecast> row_ptr,
         py::array_t<std::int32_t, py::array::c_style | py::array::forcecast> col_idx,
         py::array_t<double, py::array::c_style | py::array::forcecast> values,
         py::array_t<double, py::array::c_style | py::array::forcecast> rhs,
         double tol, int max_iterations) {
        LinearSystem sys;
        sys.rows = Index(rhs.shape(0));
        sys.row_ptr.assign(row_ptr.data(), row_ptr.data() + row_ptr.shape(0));
        sys.col_idx.assign(col_idx.data(), col_idx.data() + col_idx.shape(0));
        sys.values.assign(values.data(), values.data() + values.shape(0));
        if (Index(sys.row_ptr.size()) != sys.rows + 1) {
          throw py::value_error("row_ptr length must be len(rhs) + 1");
        }
        SolveReport rep;
        std::vector<double> x = cg_solve(
            sys, std::span<const double>(rhs.data(), std::size_t(rhs.shape(0))),
            tol, max_iterations, &rep);
        py::dict out;
        out["x"] = to_array(x);
        out["iterations"] = rep.iterations;
        out["converged"] = rep.converged;
        out["relative_residual"] = rep.relative_residual;
        return out;
      },
      py::arg("row_ptr"), py::arg("col_idx"), py::arg("values"), py::arg("rhs"),
      py::arg("tol") = 1e-10, py::arg("max_iterations") = 10000);

  m.def(
      "solve",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> coords,
         py::array_t<std::int64_t, py::array::c_style | py::array::forcecast> cells,
         py::array_t<std::int64_t, py::array::c_style | py::array::forcecast> region,
         double delta, const std::string& strategy, const std::string& normalization,
         py::object problem_terms, int threads, std::uint64_t seed, int mc_samples,
         double cg_tol) {
        const MeshData md = mesh_from_arrays(coords, cells, region);
        Assembled a = assemble_impl(md, delta, strategy, normalization,
                                    problem_terms, threads, seed, mc_samples);
        SolveReport rep;
        const int maxit = 20 * std::max<Index>(a.dofs.unknowns, 1);
        std::vector<double> u = cg_solve(a.sys, a.sys.rhs, cg_tol, maxit, &rep);
        const Polynomial exact = a.prob.u;
        std::vector<double> vals = node_values(
            a.et, a.dofs, u, [exact](Vec p) { return exact.eval(p); });
        py::dict out;
        out["u_node"] = to_array(vals);
        out["u"] = to_array(u);
        out["dof"] = a.dofs.unknowns;
        out["interior_elements"] = [&] {
          Index k = 0;
          for (Index t = 0; t < a.et.count; ++t) {
            if (a.et.region[t] == 0) ++k;
          }
          return k;
        }();
        out["l2_error"] = l2_error(a.et, vals,
                                   [exact](Vec p) { return exact.eval(p); });
        out["iterations"] = rep.iterations;
        out["converged"] = rep.converged;
        out["assembly_s"] = a.stats.seconds;
        return out;
      },
      py::arg("coords"), py::arg("cells"), py::arg("region"), py::arg("delta"),
      py::arg("strategy") = "nocaps", py::arg("normalization") = "mass",
      py::arg("problem_terms") = py::none(), py::arg("threads") = 0,
      py::arg("seed") = 0x5eedULL, py::arg("mc_samples") = 200,
      py::arg("cg_tol") = 1e-10,
      "assemble and solve one constrained problem, reporting the L2 error "
      "against the manufactured solution");

  m.def(
      "convergence_study",
      [](int n, const std::vector<int>& resolutions, const std::string& delta_policy,
         const std::vector<std::string>& strategies, const std::string& normalization,
         py::object problem_terms, int threads, std::uint64_t seed, int mc_samples,
         double cg_tol) {
        StudyConfig cfg;
        cfg.n = n;
        cfg.resolutions = resolutions;
        cfg.delta = parse_delta_policy(delta_policy);
        cfg.strategies.clear();
        for (const std::string& s : strategies) {
          cfg.strategies.push_back(parse_strategy(s));
        }
        cfg.solve.norm = normalization == "mass" ? Normalization::Mass
                         : normalization == "moment2"
                             ? Normalization::SecondMoment
                             : throw py::value_error("normalization must be mass or moment2");
        cfg.solve.threads = threads;
        cfg.solve.seed = seed;
        cfg.solve.mc_samples = mc_samples;
        cfg.solve.cg_tol = cg_tol;
        cfg.solution = terms_to_polynomial(problem_terms);
        const std::vector<StudyRow> rows = convergence_study(cfg, nullptr);
        py::list out;
        for (const StudyRow& r : rows) {
          py::dict d;
          d["h_avg"] = r.h_avg;
          d["h_min"] = r.h_min;
          d["dof"] = r.dof;
          d["K_omega"] = r.k_omega;
          d["strategy"] = strategy_name(r.strategy);
          d["l2_error"] = r.l2;
          d["assembly_s"] = r.assembly_s;
          d["solve_s"] = r.solve_s;
          d["lambda"] = r.lambda;
          out.append(d);
        }
        return out;
      },
      py::arg("n"), py::arg("resolutions"), py::arg("delta_policy") = "fixed:0.1",
      py::arg("strategies") = std::vector<std::string>{"nocaps"},
      py::arg("normalization") = "mass", py::arg("problem_terms") = py::none(),
      py::arg("threads") = 0, py::arg("seed") = 0x5eedULL,
      py::arg("mc_samples") = 200, py::arg("cg_tol") = 1e-10);

  m.def("strategy_names", [] {
    std::vector<std::string> names;
    for (Strategy s : kAllStrategies) names.emplace_back(strategy_name(s));
    return names;
  });
}
