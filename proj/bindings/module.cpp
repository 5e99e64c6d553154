// Python bindings for the response-kernel laboratory. Exposes system
// construction, spectra, ensembles, 1RDMs, kernel characterization,
// Lehmann response evaluation, time propagation and the JSON experiment
// runner.
#include "lrkernel/experiment.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <sstream>

namespace py = pybind11;
using namespace pybind11::literals;

namespace {

struct PySystem {
  lrk::FockBasisPtr basis;
  std::shared_ptr<lrk::ManyBodyOperator> hamiltonian;
  lrk::SpectrumPtr spectrum;
};

lrk::Sector make_sector(std::optional<int> n, std::optional<double> sz) {
  if (!n) {
    if (sz) throw lrk::ValidationError("Sz requires N");
    return lrk::Sector::full();
  }
  if (sz) return lrk::Sector::fixed(*n, *sz);
  return lrk::Sector::fixed(*n);
}

PySystem make_hubbard(int sites, double t, double u, bool periodic, std::optional<int> n,
                      std::optional<double> sz, double tol_e) {
  lrk::ModelSpec model = lrk::HubbardChainSpec{sites, t, u, periodic};
  PySystem sys;
  sys.basis = lrk::build_basis(lrk::model_orbitals(model), make_sector(n, sz));
  sys.hamiltonian = std::make_shared<lrk::ManyBodyOperator>(lrk::build_model(model, sys.basis));
  sys.spectrum = lrk::diagonalize(*sys.hamiltonian, tol_e);
  return sys;
}

PySystem make_custom(const lrk::CMatrix& h,
                     const std::vector<std::tuple<int, int, double>>& density_density,
                     std::optional<int> n, std::optional<double> sz, double tol_e) {
  lrk::CustomModelSpec spec;
  spec.h = h;
  for (const auto& [p, q, u] : density_density) spec.density_density.push_back({p, q, u});
  lrk::ModelSpec model = spec;
  PySystem sys;
  sys.basis = lrk::build_basis(lrk::model_orbitals(model), make_sector(n, sz));
  sys.hamiltonian = std::make_shared<lrk::ManyBodyOperator>(lrk::build_model(model, sys.basis));
  sys.spectrum = lrk::diagonalize(*sys.hamiltonian, tol_e);
  return sys;
}

lrk::Ensemble make_ensemble(const PySystem& sys, const std::string& kind, double beta,
                            double mu, std::optional<lrk::RVector> weights) {
  if (kind == "pure") return lrk::pure_ground_state(sys.spectrum);
  if (kind == "canonical") return lrk::canonical_weights(sys.spectrum, beta);
  if (kind == "grand_canonical") {
    // re-diagonalize the shifted generator
    const auto generator = lrk::grand_canonical_generator(*sys.hamiltonian, mu);
    return lrk::grand_canonical_weights(lrk::diagonalize(generator, sys.spectrum->tol_e()),
                                        beta, mu);
  }
  if (kind == "custom") {
    if (!weights) throw lrk::ValidationError("custom ensemble needs weights");
    return lrk::custom_weights(sys.spectrum, *weights);
  }
  throw lrk::ValidationError("unknown ensemble kind '" + kind + "'");
}

lrk::ProbeSet make_probes(const lrk::FockBasisPtr& basis, const std::string& kind,
                          const std::vector<lrk::CMatrix>& custom) {
  if (kind == "site_density") return lrk::site_density_probes(basis);
  if (kind == "one_body_full") return lrk::one_body_hermitian_basis(basis);
  if (kind == "custom") {
    std::vector<lrk::OneBodyCoefficients> coeffs;
    for (const auto& m : custom) coeffs.emplace_back(m);
    return lrk::custom_probes(basis, std::move(coeffs));
  }
  throw lrk::ValidationError("unknown probe family '" + kind + "'");
}

py::object json_to_py(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "response-kernel laboratory for finite fermion systems";

  py::register_exception<lrk::ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<lrk::AssertionFailure>(m, "AssertionFailure", PyExc_RuntimeError);

  py::class_<PySystem>(m, "System")
      .def_property_readonly("dim", [](const PySystem& s) { return s.basis->dim(); })
      .def_property_readonly("n_orbitals",
                             [](const PySystem& s) { return s.basis->num_orbitals(); })
      .def_property_readonly("energies",
                             [](const PySystem& s) { return s.spectrum->energies(); })
      .def_property_readonly(
          "eigenvectors", [](const PySystem& s) { return s.spectrum->eigenvectors(); })
      .def_property_readonly(
          "degeneracy_groups",
          [](const PySystem& s) { return s.spectrum->degeneracy_groups(); })
      .def_property_readonly("hamiltonian",
                             [](const PySystem& s) { return s.hamiltonian->matrix(); })
      .def_property_readonly("states", [](const PySystem& s) { return s.basis->states(); })
      .def("__repr__", [](const PySystem& s) {
        std::ostringstream os;
        os << "<System " << lrk::to_string(s.basis->sector()) << ", dim " << s.basis->dim()
           << ">";
        return os.str();
      });

  m.def("hubbard_chain", &make_hubbard, "sites"_a, "t"_a = 1.0, "U"_a = 0.0,
        "periodic"_a = false, "N"_a = py::none(), "Sz"_a = py::none(), "tol_e"_a = 1e-9,
        "Build and diagonalize a spinful Hubbard chain.");
  m.def("custom_system", &make_custom, "h"_a,
        "density_density"_a = std::vector<std::tuple<int, int, double>>{},
        "N"_a = py::none(), "Sz"_a = py::none(), "tol_e"_a = 1e-9,
        "Build a model from a Hermitian one-body matrix plus density-density terms.");

  m.def(
      "ensemble_weights",
      [](const PySystem& sys, const std::string& kind, double beta, double mu,
         std::optional<lrk::RVector> weights) {
        return make_ensemble(sys, kind, beta, mu, std::move(weights)).weights();
      },
      "system"_a, "kind"_a, "beta"_a = 1.0, "mu"_a = 0.0, "weights"_a = py::none());

  m.def(
      "natural_occupations",
      [](const PySystem& sys, const std::string& kind, double beta, double mu,
         std::optional<lrk::RVector> weights, double tol_occ) {
        const auto ens = make_ensemble(sys, kind, beta, mu, std::move(weights));
        return lrk::ensemble_1rdm(ens, tol_occ).occupations;
      },
      "system"_a, "kind"_a = "pure", "beta"_a = 1.0, "mu"_a = 0.0, "weights"_a = py::none(),
      "tol_occ"_a = 1e-8);

  m.def(
      "kernel",
      [](const PySystem& sys, const std::string& ensemble, double beta, double mu,
         std::optional<lrk::RVector> weights, const std::string& probes,
         const std::vector<lrk::CMatrix>& custom_probes, double tol_rank) {
        const auto ens = make_ensemble(sys, ensemble, beta, mu, std::move(weights));
        const auto probe_set = make_probes(ens.spectrum().basis_ptr(), probes, custom_probes);
        lrk::KernelOptions options;
        options.tol_rank = tol_rank;
        options.enforce_commutant_match = false;
        const lrk::KernelReport report = lrk::compute_kernel(probe_set, ens, options);
        return py::dict(
            "kernel_dim"_a = report.kernel_dim(),
            "candidate_dim"_a = report.candidate_dim(),
            "commutant_dim"_a = report.commutant_dim(), "n_pairs"_a = report.n_pairs,
            "kernel_basis"_a = report.kernel_basis, "commutant_basis"_a = report.commutant,
            "necessary_singular_values"_a = report.necessary_singular_values,
            "necessary_gap"_a = report.necessary_gap,
            "max_principal_angle"_a = report.max_principal_angle,
            "commutant_match"_a = report.commutant_match,
            "sufficiency_skipped"_a = report.sufficiency_skipped,
            "probe_labels"_a = probe_set.labels());
      },
      "system"_a, "ensemble"_a = "canonical", "beta"_a = 1.0, "mu"_a = 0.0,
      "weights"_a = py::none(), "probes"_a = "one_body_full",
      "custom_probes"_a = std::vector<lrk::CMatrix>{}, "tol_rank"_a = 1e-10);

  m.def(
      "chi",
      [](const PySystem& sys, double tau, const std::string& ensemble, double beta, double mu,
         std::optional<lrk::RVector> weights, const std::string& probes,
         const std::vector<lrk::CMatrix>& custom_probes) {
        const auto ens = make_ensemble(sys, ensemble, beta, mu, std::move(weights));
        const auto probe_set = make_probes(ens.spectrum().basis_ptr(), probes, custom_probes);
        return lrk::chi_time(probe_set, ens, tau);
      },
      "system"_a, "tau"_a, "ensemble"_a = "canonical", "beta"_a = 1.0, "mu"_a = 0.0,
      "weights"_a = py::none(), "probes"_a = "site_density",
      "custom_probes"_a = std::vector<lrk::CMatrix>{});

  m.def(
      "propagate",
      [](const PySystem& sys, const lrk::RVector& direction, const std::string& ensemble,
         double beta, double mu, std::optional<lrk::RVector> weights,
         const std::string& probes, const std::vector<lrk::CMatrix>& custom_probes,
         const std::string& shape, double omega, double center, double width,
         double amplitude, double t_end, int n_steps) {
        const auto ens = make_ensemble(sys, ensemble, beta, mu, std::move(weights));
        const auto probe_set = make_probes(ens.spectrum().basis_ptr(), probes, custom_probes);
        lrk::PulseSpec pulse;
        if (shape == "sinusoid") {
          pulse.shape = lrk::PulseShape::sinusoid(omega);
        } else if (shape == "gaussian") {
          pulse.shape = lrk::PulseShape::gaussian(center, width);
        } else if (shape == "step") {
          pulse.shape = lrk::PulseShape::step();
        } else {
          throw lrk::ValidationError("unknown pulse shape '" + shape + "'");
        }
        pulse.amplitude = amplitude;
        pulse.t_end = t_end;
        pulse.direction = direction;
        pulse.n_steps = n_steps > 0 ? n_steps
                                    : std::max(1000, lrk::minimum_resolved_steps(
                                                         ens.spectrum(), t_end));
        const auto traj =
            lrk::propagate_response(ens.spectrum().hamiltonian(), ens, probe_set, pulse);
        const auto reference = lrk::convolution_reference(probe_set, ens, pulse);
        return py::dict("times"_a = traj.times, "delta_q"_a = traj.delta_q,
                        "lehmann_delta_q"_a = reference.delta_q,
                        "labels"_a = traj.labels,
                        "max_norm_drift"_a = traj.max_norm_drift);
      },
      "system"_a, "direction"_a, "ensemble"_a = "canonical", "beta"_a = 1.0, "mu"_a = 0.0,
      "weights"_a = py::none(), "probes"_a = "site_density",
      "custom_probes"_a = std::vector<lrk::CMatrix>{}, "shape"_a = "gaussian",
      "omega"_a = 1.0, "center"_a = 2.0, "width"_a = 0.5, "amplitude"_a = 1e-4,
      "t_end"_a = 10.0, "n_steps"_a = 0);

  m.def(
      "static_thermal_response",
      [](const PySystem& sys, const lrk::RVector& direction, const std::string& kind,
         double beta, double mu, const std::string& probes,
         const std::vector<lrk::CMatrix>& custom_probes, double step) {
        const auto probe_set = make_probes(sys.basis, probes, custom_probes);
        const lrk::EnsembleKind ens_kind = kind == "grand_canonical"
                                               ? lrk::EnsembleKind::grand_canonical
                                               : lrk::EnsembleKind::canonical;
        return lrk::static_thermal_response(*sys.hamiltonian, probe_set, ens_kind, beta, mu,
                                            direction, step);
      },
      "system"_a, "direction"_a, "kind"_a = "canonical", "beta"_a = 1.0, "mu"_a = 0.0,
      "probes"_a = "one_body_full", "custom_probes"_a = std::vector<lrk::CMatrix>{},
      "step"_a = 1e-5);

  m.def(
      "run_experiment",
      [](const std::string& spec_json, const std::string& analysis, const std::string& out_dir,
         bool quiet, std::uint64_t seed) {
        const auto config = lrk::parse_experiment(nlohmann::json::parse(spec_json));
        lrk::RunFlags flags;
        flags.out_dir = out_dir;
        flags.quiet = quiet;
        flags.seed = seed;
        const auto result =
            lrk::run_experiment(config, lrk::analysis_kind_from_string(analysis), flags);
        return py::dict("exit_code"_a = result.exit_code,
                        "report"_a = json_to_py(result.report),
                        "artifacts"_a = result.artifacts);
      },
      "spec_json"_a, "analysis"_a = "kernel", "out_dir"_a = ".", "quiet"_a = true,
      "seed"_a = 12345,
      "Run a JSON experiment spec; returns the exit code, report and artifact paths.");

  m.attr("__version__") = "0.1.0";
}
