#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "spinchaos/basis.hpp"
#include "spinchaos/chaos_metrics.hpp"
#include "spinchaos/eigensolver.hpp"
#include "spinchaos/entanglement.hpp"
#include "spinchaos/error.hpp"
#include "spinchaos/observables.hpp"
#include "spinchaos/operators.hpp"
#include "spinchaos/sweep.hpp"

namespace py = pybind11;
using namespace spinchaos;

namespace {

// Everything a caller needs from one sector solve, kept together so that the
// eigenvector-dependent helpers below can take a single object.
struct Solution {
  Lattice lattice;
  SectorBasis basis;
  EigenData eig;
  std::string model;
  double coupling;
};

Solution solve(const std::string& model, const std::string& lattice, double coupling, const std::string& sector,
               bool vectors) {
  auto lat = Lattice::parse(lattice);
  auto basis = sector == "full" ? SectorBasis::full(lat) : SectorBasis::build(lat, Sector::parse(sector));
  auto eig = diagonalize(materialize(build_model(model, lat, coupling), basis),
                         vectors ? SolveMode::values_and_vectors : SolveMode::values_only);
  return {std::move(lat), std::move(basis), std::move(eig), model, coupling};
}

EigenbasisOperator observable_in(const Solution& s, const std::string& name) {
  if (!s.eig.has_vectors()) throw Error(ErrorCode::invalid_argument, "solution was computed without eigenvectors");
  return to_eigenbasis(materialize(build_observable(name, s.lattice), s.basis), s.eig);
}

py::dict stats_dict(const SpectrumStats& s) {
  py::dict d;
  d["r_ave"] = s.r_ave;
  d["omega_h"] = s.omega_h;
  d["ratios"] = s.ratios;
  d["degenerate_pairs"] = s.degenerate_pairs;
  d["window"] = py::make_tuple(s.window.begin, s.window.end);
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Exact diagonalization of strong-field spin models";
  m.attr("__version__") = SPINCHAOS_VERSION;

  py::register_exception<Error>(m, "SpinchaosError", PyExc_ValueError);

  py::class_<Lattice>(m, "Lattice")
      .def_static("chain", &Lattice::chain, py::arg("length"))
      .def_static("torus", &Lattice::torus, py::arg("lx"), py::arg("ly"))
      .def_static("parse", &Lattice::parse)
      .def_property_readonly("sites", &Lattice::sites)
      .def_property_readonly("label", &Lattice::label)
      .def("__repr__", [](const Lattice& l) { return "<Lattice " + l.label() + ">"; });

  py::class_<Sector>(m, "Sector")
      .def_static("parse", &Sector::parse)
      .def_readonly("kx", &Sector::kx)
      .def_readonly("ky", &Sector::ky)
      .def_readonly("z2", &Sector::z2)
      .def("label", &Sector::label);

  m.def(
      "sectors",
      [](const std::string& lattice, bool mirrors) {
        const auto lat = Lattice::parse(lattice);
        std::vector<std::pair<std::string, std::size_t>> out;
        for (const auto& s : all_sectors(lat, mirrors))
          out.emplace_back(s.label(lat), SectorBasis::build(lat, s).dim());
        return out;
      },
      py::arg("lattice"), py::arg("mirrors") = true, "(label, dimension) of every sector of a lattice");

  m.def(
      "hamiltonian",
      [](const std::string& model, const std::string& lattice, double coupling, const std::string& sector) {
        const auto lat = Lattice::parse(lattice);
        const auto basis = sector == "full" ? SectorBasis::full(lat) : SectorBasis::build(lat, Sector::parse(sector));
        return materialize(build_model(model, lat, coupling), basis).entries;
      },
      py::arg("model"), py::arg("lattice"), py::arg("J"), py::arg("sector") = "full",
      "Dense Hamiltonian in a symmetry sector, or in the product basis for sector='full'");

  py::class_<Solution>(m, "Solution")
      .def_property_readonly("values", [](const Solution& s) { return s.eig.values; })
      .def_property_readonly("vectors", [](const Solution& s) { return s.eig.vectors; })
      .def_property_readonly("dim", [](const Solution& s) { return s.eig.dim(); })
      .def_property_readonly("sector", [](const Solution& s) { return s.eig.sector; })
      .def_property_readonly("volume", [](const Solution& s) { return s.eig.volume; })
      .def_readonly("model", &Solution::model)
      .def_readonly("J", &Solution::coupling);

  m.def("solve", &solve, py::arg("model"), py::arg("lattice"), py::arg("J"), py::arg("sector"),
        py::arg("vectors") = true, "Diagonalize one sector ('k=3,z2=-1', or 'full')");

  m.def("central_window", [](std::size_t n, double fraction) {
    const auto w = central_window(n, fraction);
    return py::make_tuple(w.begin, w.end);
  }, py::arg("count"), py::arg("fraction") = 0.2);

  m.def(
      "r_statistics",
      [](const std::vector<double>& values, double fraction) {
        return stats_dict(r_statistics(values, central_window(values.size(), fraction)));
      },
      py::arg("values"), py::arg("fraction") = 0.2, "Gap ratios over the central window of a sorted spectrum");

  m.def(
      "fidelity_susceptibility",
      [](const Solution& s, const std::string& observable) {
        const auto r = fidelity_susceptibility(observable_in(s, observable), s.eig);
        py::dict d;
        d["chi"] = r.chi;
        d["chi_typ"] = r.chi_typ;
        d["omega_h"] = r.omega_h;
        d["zero_states"] = r.zero_states;
        d["skipped_pairs"] = r.skipped_pairs;
        return d;
      },
      py::arg("solution"), py::arg("observable") = "v");

  m.def(
      "spectral_function",
      [](const Solution& s, const std::string& observable, const std::string& kernel, std::vector<double> omega,
         double fraction) {
        SpectralOptions opt;
        opt.kernel = parse_kernel(kernel);
        opt.omega = std::move(omega);
        const auto f = spectral_function(observable_in(s, observable), s.eig,
                                         central_window(static_cast<std::size_t>(s.eig.dim()), fraction), opt);
        return py::make_tuple(f.omega, f.values, f.eta);
      },
      py::arg("solution"), py::arg("observable") = "v", py::arg("kernel") = "gaussian",
      py::arg("omega") = std::vector<double>{}, py::arg("fraction") = 0.2, "(omega, F_ave, eta)");

  m.def(
      "diagonal_eev",
      [](const Solution& s, const std::string& observable, double fraction) {
        return diagonal_eev(observable_in(s, observable), s.eig, fraction);
      },
      py::arg("solution"), py::arg("observable") = "sz", py::arg("fraction") = 0.8, "(eps_n, O_nn) pairs");

  m.def(
      "entanglement",
      [](const Solution& s, double fraction) {
        if (!s.eig.has_vectors()) throw Error(ErrorCode::invalid_argument, "solution was computed without eigenvectors");
        const auto r = s_ave(s.eig, s.basis, Cut::half(s.lattice),
                             central_window(static_cast<std::size_t>(s.eig.dim()), fraction));
        py::dict d;
        d["s_ave"] = r.s_ave;
        d["energy_density"] = r.energy_density;
        d["entropy"] = r.entropy;
        d["normalized"] = r.normalized;
        return d;
      },
      py::arg("solution"), py::arg("fraction") = 0.2, "Half-system entanglement over the central window");

  m.def(
      "entropy_of_state",
      [](const Eigen::VectorXcd& psi, const std::vector<int>& sites, int total_sites) {
        return entanglement_entropy(reduced_density_matrix(psi, Cut{sites, "custom"}, total_sites));
      },
      py::arg("psi"), py::arg("sites"), py::arg("total_sites"), "S_A of a product-basis state vector");

  m.def("log_couplings", &log_couplings, py::arg("lo"), py::arg("hi"), py::arg("count"));

  m.def(
      "sweep",
      [](const std::string& model, const std::vector<std::string>& lattices, const std::vector<double>& couplings,
         const std::string& sectors, const std::vector<std::string>& sector_list, bool merge_conjugates,
         const std::vector<std::string>& observables, bool entanglement, const std::string& output_dir,
         const std::string& cache, int workers, const std::string& chi_rescale) {
        RunConfig c;
        c.model = model;
        c.lattices = lattices;
        c.couplings = couplings;
        c.sectors = parse_sector_selection(sectors);
        c.sector_list = sector_list;
        c.merge_conjugates = merge_conjugates;
        c.observables = observables;
        c.entanglement = entanglement;
        c.output_dir = output_dir;
        c.cache = parse_cache_policy(cache);
        c.workers = workers;
        c.chi_rescale = chi_rescale;
        c.validate();
        RunSummary s;
        {
          py::gil_scoped_release release;
          s = plan_and_run(c);
        }
        py::dict d;
        d["tasks"] = s.tasks;
        d["failed"] = s.failed;
        d["diagonalizations"] = s.diagonalizations;
        d["cache_hits"] = s.cache_hits;
        d["warnings"] = s.warnings;
        return d;
      },
      py::arg("model"), py::arg("lattices"), py::arg("couplings"), py::arg("sectors") = "all",
      py::arg("sector_list") = std::vector<std::string>{}, py::arg("merge_conjugates") = false,
      py::arg("observables") = std::vector<std::string>{}, py::arg("entanglement") = false,
      py::arg("output_dir") = "run", py::arg("cache") = "use", py::arg("workers") = 0,
      py::arg("chi_rescale") = "none", "Run a sweep and write its outputs; returns the run summary");

  m.def(
      "fit_power_law",
      [](const std::vector<double>& x, const std::vector<double>& y) {
        const auto f = fit_power_law(x, y);
        return py::make_tuple(f.a, f.b, f.residual);
      },
      py::arg("x"), py::arg("y"), "(a, b, residual) of y = a x^b");

  m.def(
      "locate_peak",
      [](const std::vector<double>& x, const std::vector<double>& y) {
        const auto p = locate_peak(x, y);
        return py::make_tuple(p.x, p.y);
      },
      py::arg("x"), py::arg("y"), "Vertex of the log-log parabola about the sampled maximum");

  m.def("chi_rescale_factor", &chi_rescale_factor, py::arg("expression"), py::arg("omega_h"), py::arg("sites"),
        py::arg("dim"));
}
