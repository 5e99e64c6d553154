#include "lrkernel/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

namespace lrk {

namespace {

using nlohmann::json;

// ------------------------------ strict parsing ------------------------------

void check_keys(const json& obj, const std::string& path,
                const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ValidationError(path + ": expected a JSON object");
  for (const auto& item : obj.items()) {
    if (!allowed.count(item.key())) {
      throw ValidationError(path + ": unknown key '" + item.key() + "'");
    }
  }
}

const json& require(const json& obj, const std::string& path, const std::string& key) {
  if (!obj.contains(key)) throw ValidationError(path + ": missing required key '" + key + "'");
  return obj.at(key);
}

double as_number(const json& value, const std::string& path) {
  if (!value.is_number()) throw ValidationError(path + ": expected a number");
  return value.get<double>();
}

int as_int(const json& value, const std::string& path) {
  if (!value.is_number_integer()) throw ValidationError(path + ": expected an integer");
  return value.get<int>();
}

bool as_bool(const json& value, const std::string& path) {
  if (!value.is_boolean()) throw ValidationError(path + ": expected a boolean");
  return value.get<bool>();
}

std::string as_string(const json& value, const std::string& path) {
  if (!value.is_string()) throw ValidationError(path + ": expected a string");
  return value.get<std::string>();
}

// An entry is either a real number or an [re, im] pair.
Complex as_complex(const json& value, const std::string& path) {
  if (value.is_number()) return Complex(value.get<double>(), 0.0);
  if (value.is_array() && value.size() == 2 && value[0].is_number() && value[1].is_number()) {
    return Complex(value[0].get<double>(), value[1].get<double>());
  }
  throw ValidationError(path + ": expected a number or an [re, im] pair");
}

CMatrix as_matrix(const json& value, const std::string& path) {
  if (!value.is_array() || value.empty()) {
    throw ValidationError(path + ": expected a non-empty array of rows");
  }
  const int n = static_cast<int>(value.size());
  CMatrix out(n, n);
  for (int r = 0; r < n; ++r) {
    const json& row = value[r];
    if (!row.is_array() || static_cast<int>(row.size()) != n) {
      throw ValidationError(path + ": expected a square matrix");
    }
    for (int c = 0; c < n; ++c) {
      out(r, c) = as_complex(row[c], path + "[" + std::to_string(r) + "]");
    }
  }
  return out;
}

ModelSpec parse_model(const json& obj) {
  const std::string name = as_string(require(obj, "model", "model"), "model.model");
  if (name == "hubbard_chain") {
    check_keys(obj, "model", {"model", "sites", "t", "U", "periodic"});
    HubbardChainSpec spec;
    spec.sites = as_int(require(obj, "model", "sites"), "model.sites");
    spec.t = as_number(require(obj, "model", "t"), "model.t");
    spec.u = as_number(require(obj, "model", "U"), "model.U");
    if (obj.contains("periodic")) spec.periodic = as_bool(obj["periodic"], "model.periodic");
    return spec;
  }
  if (name == "custom") {
    check_keys(obj, "model", {"model", "h", "density_density"});
    CustomModelSpec spec;
    spec.h = as_matrix(require(obj, "model", "h"), "model.h");
    if (obj.contains("density_density")) {
      const json& terms = obj["density_density"];
      if (!terms.is_array()) throw ValidationError("model.density_density: expected an array");
      for (const json& term : terms) {
        if (!term.is_array() || term.size() != 3) {
          throw ValidationError("model.density_density: expected [p, q, u] triples");
        }
        spec.density_density.push_back({as_int(term[0], "model.density_density"),
                                        as_int(term[1], "model.density_density"),
                                        as_number(term[2], "model.density_density")});
      }
    }
    return spec;
  }
  throw ValidationError("model.model: unknown model '" + name +
                        "' (expected hubbard_chain or custom)");
}

Sector parse_sector(const json& obj) {
  check_keys(obj, "sector", {"N", "Sz"});
  if (!obj.contains("N")) {
    if (obj.contains("Sz")) throw ValidationError("sector: Sz requires N");
    return Sector::full();
  }
  const int n = as_int(obj["N"], "sector.N");
  if (obj.contains("Sz")) return Sector::fixed(n, as_number(obj["Sz"], "sector.Sz"));
  return Sector::fixed(n);
}

EnsembleConfig parse_ensemble(const json& obj) {
  check_keys(obj, "ensemble", {"kind", "beta", "mu", "weights"});
  EnsembleConfig config;
  const std::string kind = as_string(require(obj, "ensemble", "kind"), "ensemble.kind");
  if (kind == "pure") {
    config.kind = EnsembleKind::pure;
  } else if (kind == "custom") {
    config.kind = EnsembleKind::custom;
    const json& w = require(obj, "ensemble", "weights");
    if (!w.is_array()) throw ValidationError("ensemble.weights: expected an array");
    for (const json& x : w) config.weights.push_back(as_number(x, "ensemble.weights"));
  } else if (kind == "canonical") {
    config.kind = EnsembleKind::canonical;
    config.beta = as_number(require(obj, "ensemble", "beta"), "ensemble.beta");
  } else if (kind == "grand_canonical") {
    config.kind = EnsembleKind::grand_canonical;
    config.beta = as_number(require(obj, "ensemble", "beta"), "ensemble.beta");
    config.mu = as_number(require(obj, "ensemble", "mu"), "ensemble.mu");
  } else {
    throw ValidationError("ensemble.kind: unknown kind '" + kind + "'");
  }
  return config;
}

ProbeConfig parse_probes(const json& value) {
  ProbeConfig config;
  if (value.is_string()) {
    const std::string name = value.get<std::string>();
    if (name == "site_density") {
      config.kind = SpanKind::site_density;
    } else if (name == "one_body_full") {
      config.kind = SpanKind::one_body_full;
    } else {
      throw ValidationError("probes: unknown probe family '" + name + "'");
    }
    return config;
  }
  check_keys(value, "probes", {"custom"});
  config.kind = SpanKind::custom;
  const json& list = require(value, "probes", "custom");
  if (!list.is_array() || list.empty()) {
    throw ValidationError("probes.custom: expected a non-empty array of matrices");
  }
  for (std::size_t i = 0; i < list.size(); ++i) {
    config.custom.push_back(as_matrix(list[i], "probes.custom[" + std::to_string(i) + "]"));
  }
  return config;
}

PulseConfig parse_pulse(const json& obj) {
  check_keys(obj, "analysis.pulse",
             {"shape", "omega", "center", "width", "amplitude", "t_end", "n_steps",
              "direction"});
  PulseConfig config;
  if (obj.contains("shape")) {
    const std::string shape = as_string(obj["shape"], "analysis.pulse.shape");
    if (shape == "sinusoid") {
      config.shape = PulseShape::sinusoid(
          obj.contains("omega") ? as_number(obj["omega"], "analysis.pulse.omega") : 1.0);
    } else if (shape == "gaussian") {
      const double center =
          obj.contains("center") ? as_number(obj["center"], "analysis.pulse.center") : 2.0;
      const double width =
          obj.contains("width") ? as_number(obj["width"], "analysis.pulse.width") : 0.5;
      config.shape = PulseShape::gaussian(center, width);
    } else if (shape == "step") {
      config.shape = PulseShape::step();
    } else {
      throw ValidationError("analysis.pulse.shape: unknown shape '" + shape + "'");
    }
  }
  if (obj.contains("amplitude")) {
    config.amplitude = as_number(obj["amplitude"], "analysis.pulse.amplitude");
  }
  if (obj.contains("t_end")) config.t_end = as_number(obj["t_end"], "analysis.pulse.t_end");
  if (obj.contains("n_steps")) config.n_steps = as_int(obj["n_steps"], "analysis.pulse.n_steps");
  if (obj.contains("direction")) {
    const json& dir = obj["direction"];
    if (!dir.is_array()) throw ValidationError("analysis.pulse.direction: expected an array");
    std::vector<double> v;
    for (const json& x : dir) v.push_back(as_number(x, "analysis.pulse.direction"));
    config.direction = v;
  }
  return config;
}

AnalysisConfig parse_analysis(const json& obj) {
  check_keys(obj, "analysis", {"type", "betas", "pulse"});
  AnalysisConfig config;
  if (obj.contains("type")) {
    config.kind = analysis_kind_from_string(as_string(obj["type"], "analysis.type"));
  }
  if (obj.contains("betas")) {
    const json& betas = obj["betas"];
    if (!betas.is_array() || betas.empty()) {
      throw ValidationError("analysis.betas: expected a non-empty array");
    }
    config.betas.clear();
    for (const json& b : betas) config.betas.push_back(as_number(b, "analysis.betas"));
  }
  if (obj.contains("pulse")) config.pulse = parse_pulse(obj["pulse"]);
  return config;
}

ToleranceConfig parse_tolerances(const json& obj) {
  check_keys(obj, "tolerances", {"tol_e", "tol_w", "tol_rank", "tol_occ", "tol_angle"});
  ToleranceConfig config;
  auto positive = [&](const char* key, double fallback) {
    if (!obj.contains(key)) return fallback;
    const double value = as_number(obj[key], std::string("tolerances.") + key);
    if (!(value > 0.0)) {
      throw ValidationError(std::string("tolerances.") + key + ": must be positive");
    }
    return value;
  };
  config.tol_e = positive("tol_e", config.tol_e);
  config.tol_w = positive("tol_w", config.tol_w);
  config.tol_rank = positive("tol_rank", config.tol_rank);
  config.tol_occ = positive("tol_occ", config.tol_occ);
  config.tol_angle = positive("tol_angle", config.tol_angle);
  return config;
}

OutputConfig parse_output(const json& obj) {
  check_keys(obj, "output", {"dir", "report", "trajectory"});
  OutputConfig config;
  if (obj.contains("dir")) config.dir = as_string(obj["dir"], "output.dir");
  if (obj.contains("report")) config.report = as_string(obj["report"], "output.report");
  if (obj.contains("trajectory")) {
    config.trajectory = as_string(obj["trajectory"], "output.trajectory");
  }
  return config;
}

// ------------------------------ serialization -------------------------------

json number_or_null(double x) {
  if (!std::isfinite(x)) return nullptr;
  return x;
}

json vector_to_json(const RVector& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json basis_to_json(const RMatrix& basis) {
  json out = json::array();
  for (int c = 0; c < basis.cols(); ++c) out.push_back(vector_to_json(basis.col(c)));
  return out;
}

json spectrum_to_json(const SpectralDecomposition& spec) {
  json groups = json::array();
  for (const auto& group : spec.degeneracy_groups()) groups.push_back(group);
  return json{{"dim", spec.dim()},
              {"sector", to_string(spec.basis_ptr()->sector())},
              {"energies", vector_to_json(spec.energies())},
              {"degeneracy_groups", groups},
              {"tol_e", spec.tol_e()},
              {"residual_norm", spec.residual_norm()}};
}

json ensemble_to_json(const Ensemble& ensemble) {
  const auto violations = check_monotone(ensemble);
  json violation_list = json::array();
  for (const auto& v : violations) violation_list.push_back(json::array({v.k, v.l}));
  return json{{"kind", to_string(ensemble.kind())},
              {"beta", number_or_null(ensemble.beta())},
              {"mu", ensemble.mu()},
              {"weights", vector_to_json(ensemble.weights())},
              {"monotone", violations.empty()},
              {"violating_pairs", violation_list},
              {"tol_w", ensemble.tol_w()}};
}

json kernel_report_to_json(const KernelReport& report, const ProbeSet& probes) {
  return json{{"n_probes", report.n_probes},
              {"probe_labels", probes.labels()},
              {"probe_scale", report.probe_scale},
              {"n_pairs", report.n_pairs},
              {"candidate_dim", report.candidate_dim()},
              {"kernel_dim", report.kernel_dim()},
              {"commutant_dim", report.commutant_dim()},
              {"necessary_singular_values", vector_to_json(report.necessary_singular_values)},
              {"necessary_rank", report.necessary_rank},
              {"necessary_gap", number_or_null(report.necessary_gap)},
              {"sufficiency_skipped", report.sufficiency_skipped},
              {"candidate_residual_max", report.candidate_residual_max},
              {"candidate_residual_form_gap", report.candidate_residual_form_gap},
              {"candidate_basis", basis_to_json(report.candidate_basis)},
              {"kernel_basis", basis_to_json(report.kernel_basis)},
              {"commutant_basis", basis_to_json(report.commutant)},
              {"commutant_singular_values", vector_to_json(report.commutant_singular_values)},
              {"commutant_gap", number_or_null(report.commutant_gap)},
              {"principal_angles", vector_to_json(report.principal_angles)},
              {"max_principal_angle", report.max_principal_angle},
              {"commutant_match", report.commutant_match},
              {"tol_rank", report.tol_rank},
              {"tol_angle", report.tol_angle}};
}

std::string timestamp_utc() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buffer[32];
  std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buffer;
}

class StageTimer {
 public:
  void start(const std::string& name) {
    name_ = name;
    begin_ = std::chrono::steady_clock::now();
  }
  void stop() {
    const auto end = std::chrono::steady_clock::now();
    timings_[name_] = std::chrono::duration<double>(end - begin_).count();
  }
  json to_json() const { return timings_; }

 private:
  std::string name_;
  std::chrono::steady_clock::time_point begin_;
  json timings_ = json::object();
};

}  // namespace

AnalysisKind analysis_kind_from_string(const std::string& name) {
  if (name == "spectrum") return AnalysisKind::spectrum;
  if (name == "kernel") return AnalysisKind::kernel;
  if (name == "verify") return AnalysisKind::verify;
  if (name == "propagate") return AnalysisKind::propagate;
  if (name == "sweep_beta" || name == "sweep-beta") return AnalysisKind::sweep_beta;
  throw ValidationError("analysis.type: unknown analysis '" + name + "'");
}

const char* to_string(AnalysisKind kind) {
  switch (kind) {
    case AnalysisKind::spectrum: return "spectrum";
    case AnalysisKind::kernel: return "kernel";
    case AnalysisKind::verify: return "verify";
    case AnalysisKind::propagate: return "propagate";
    case AnalysisKind::sweep_beta: return "sweep_beta";
  }
  return "unknown";
}

ExperimentConfig parse_experiment(const nlohmann::json& spec) {
  check_keys(spec, "spec",
             {"model", "sector", "ensemble", "probes", "analysis", "tolerances", "output"});
  ExperimentConfig config;
  config.model = parse_model(require(spec, "spec", "model"));
  if (spec.contains("sector")) config.sector = parse_sector(spec["sector"]);
  config.ensemble = parse_ensemble(require(spec, "spec", "ensemble"));
  config.probes = parse_probes(require(spec, "spec", "probes"));
  if (spec.contains("analysis")) config.analysis = parse_analysis(spec["analysis"]);
  if (spec.contains("tolerances")) config.tolerances = parse_tolerances(spec["tolerances"]);
  if (spec.contains("output")) config.output = parse_output(spec["output"]);

  if (config.ensemble.kind == EnsembleKind::grand_canonical &&
      config.sector != Sector::full()) {
    throw ValidationError("ensemble: grand_canonical requires the full Fock sector");
  }
  return config;
}

ExperimentConfig load_experiment(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open spec file '" + path + "'");
  json spec;
  try {
    in >> spec;
  } catch (const json::parse_error& e) {
    throw ValidationError("spec file '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_experiment(spec);
}

nlohmann::json error_json(int exit_code, const std::string& kind, const std::string& message) {
  return json{{"error", {{"exit_code", exit_code}, {"kind", kind}, {"message", message}}}};
}

void write_text_atomically(const std::string& path, const std::string& contents) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out << contents;
  }
  fs::rename(tmp, target);
}

namespace {

struct Workspace {
  FockBasisPtr basis;
  ManyBodyOperator hamiltonian;  // generator used by the theory (H - mu N for GC)
  SpectrumPtr spectrum;
  Ensemble ensemble;
  ProbeSet probes;
};

Workspace build_workspace(const ExperimentConfig& config, const RunFlags& flags) {
  EnsembleConfig ens = config.ensemble;
  if (flags.beta) ens.beta = *flags.beta;
  if (flags.mu) ens.mu = *flags.mu;

  FockBasisPtr basis = build_basis(model_orbitals(config.model), config.sector);
  ManyBodyOperator h0 = build_model(config.model, basis);
  ManyBodyOperator generator =
      ens.kind == EnsembleKind::grand_canonical ? grand_canonical_generator(h0, ens.mu) : h0;
  SpectrumPtr spectrum = diagonalize(generator, config.tolerances.tol_e);

  auto make_ensemble = [&]() -> Ensemble {
    switch (ens.kind) {
      case EnsembleKind::pure: return pure_ground_state(spectrum, config.tolerances.tol_w);
      case EnsembleKind::canonical:
        return canonical_weights(spectrum, ens.beta, config.tolerances.tol_w);
      case EnsembleKind::grand_canonical:
        return grand_canonical_weights(spectrum, ens.beta, ens.mu, config.tolerances.tol_w);
      case EnsembleKind::custom: {
        RVector w(static_cast<int>(ens.weights.size()));
        for (std::size_t i = 0; i < ens.weights.size(); ++i) {
          w(static_cast<int>(i)) = ens.weights[i];
        }
        return custom_weights(spectrum, std::move(w), config.tolerances.tol_w);
      }
    }
    throw ValidationError("ensemble.kind: unknown kind");
  };

  auto make_probes = [&]() -> ProbeSet {
    switch (config.probes.kind) {
      case SpanKind::site_density: return site_density_probes(basis);
      case SpanKind::one_body_full: return one_body_hermitian_basis(basis);
      case SpanKind::custom: {
        std::vector<OneBodyCoefficients> coeffs;
        for (const auto& m : config.probes.custom) coeffs.emplace_back(m);
        return custom_probes(basis, std::move(coeffs));
      }
    }
    throw ValidationError("probes: unknown probe family");
  };

  return Workspace{basis, std::move(h0), spectrum, make_ensemble(), make_probes()};
}

KernelOptions kernel_options(const ExperimentConfig& config, const RunFlags& flags) {
  KernelOptions options;
  options.tol_rank = flags.tol_rank.value_or(config.tolerances.tol_rank);
  options.tol_angle = config.tolerances.tol_angle;
  options.enforce_commutant_match = false;  // reported; the runner maps it to exit code 3
  return options;
}

PulseSpec make_pulse(const PulseConfig& config, const SpectralDecomposition& spectrum,
                     const RVector& direction) {
  PulseSpec pulse;
  pulse.shape = config.shape;
  pulse.amplitude = config.amplitude;
  pulse.t_end = config.t_end;
  pulse.direction = direction;
  const int need = minimum_resolved_steps(spectrum, config.t_end);
  pulse.n_steps = config.n_steps > 0 ? config.n_steps : std::max(need, 1000);
  return pulse;
}

json pulse_to_json(const PulseSpec& pulse) {
  json shape;
  switch (pulse.shape.kind) {
    case PulseShape::Kind::sinusoid:
      shape = json{{"shape", "sinusoid"}, {"omega", pulse.shape.omega}};
      break;
    case PulseShape::Kind::gaussian:
      shape = json{{"shape", "gaussian"},
                   {"center", pulse.shape.center},
                   {"width", pulse.shape.width}};
      break;
    case PulseShape::Kind::step: shape = json{{"shape", "step"}}; break;
  }
  shape["amplitude"] = pulse.amplitude;
  shape["t_end"] = pulse.t_end;
  shape["n_steps"] = pulse.n_steps;
  shape["direction"] = vector_to_json(pulse.direction);
  return shape;
}

// Deterministic unit vector outside the kernel span, seeded; empty when
// the kernel exhausts the probe space.
std::optional<RVector> non_kernel_direction(const RMatrix& kernel, int n_probes,
                                            std::uint64_t seed) {
  if (kernel.cols() >= n_probes) return std::nullopt;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int attempt = 0; attempt < 64; ++attempt) {
    RVector v(n_probes);
    for (int i = 0; i < n_probes; ++i) v(i) = gauss(rng);
    if (kernel.cols() > 0) v -= kernel * (kernel.transpose() * v);
    const double norm = v.norm();
    if (norm > 1e-8) return RVector(v / norm);
  }
  return std::nullopt;
}

void print_kernel_summary(std::ostream& os, const KernelReport& report) {
  os << "pairs in necessary map : " << report.n_pairs << "\n"
     << "candidate dimension    : " << report.candidate_dim() << "\n"
     << "kernel dimension       : " << report.kernel_dim() << "\n"
     << "commutant dimension    : " << report.commutant_dim() << "\n"
     << "max principal angle    : " << report.max_principal_angle << "\n"
     << "singular-value gap     : " << report.necessary_gap << "\n"
     << "sufficiency skipped    : " << (report.sufficiency_skipped ? "yes (energy-only)" : "no")
     << "\n"
     << "kernel == commutant    : " << (report.commutant_match ? "yes" : "no") << "\n";
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& config, AnalysisKind analysis,
                         const RunFlags& flags) {
  RunResult result;
  StageTimer timer;
  json report{{"spectrum", nullptr},
              {"ensemble", nullptr},
              {"kernel_report", nullptr},
              {"dynamics_certification", nullptr},
              {"timings", nullptr},
              {"timestamp", timestamp_utc()}};

  timer.start("build");
  Workspace ws = build_workspace(config, flags);
  timer.stop();
  report["spectrum"] = spectrum_to_json(*ws.spectrum);
  report["ensemble"] = ensemble_to_json(ws.ensemble);

  std::ostream& out = std::cout;
  const bool chatty = !flags.quiet;

  switch (analysis) {
    case AnalysisKind::spectrum: {
      if (chatty) {
        out << "spectrum (" << to_string(ws.basis->sector()) << ", dim " << ws.spectrum->dim()
            << ")\n";
        const auto& groups = ws.spectrum->degeneracy_groups();
        for (std::size_t g = 0; g < groups.size(); ++g) {
          out << "  E = " << ws.spectrum->group_energy(static_cast<int>(g)) << "  (x"
              << groups[g].size() << ")\n";
        }
      }
      break;
    }
    case AnalysisKind::kernel: {
      timer.start("kernel");
      const KernelReport kernel = compute_kernel(ws.probes, ws.ensemble,
                                                 kernel_options(config, flags));
      timer.stop();
      report["kernel_report"] = kernel_report_to_json(kernel, ws.probes);
      if (ws.ensemble.energy_only() && !kernel.commutant_match) result.exit_code = 3;
      if (chatty) print_kernel_summary(out, kernel);
      break;
    }
    case AnalysisKind::sweep_beta: {
      if (ws.ensemble.kind() != EnsembleKind::canonical &&
          ws.ensemble.kind() != EnsembleKind::grand_canonical) {
        throw ValidationError("sweep-beta requires a canonical or grand_canonical ensemble");
      }
      timer.start("kernel");
      json entries = json::array();
      if (chatty) out << "beta    kernel_dim  commutant_dim  max_angle\n";
      for (double beta : config.analysis.betas) {
        const Ensemble ens =
            ws.ensemble.kind() == EnsembleKind::canonical
                ? canonical_weights(ws.spectrum, beta, config.tolerances.tol_w)
                : grand_canonical_weights(ws.spectrum, beta, ws.ensemble.mu(),
                                          config.tolerances.tol_w);
        const KernelReport kernel =
            compute_kernel(ws.probes, ens, kernel_options(config, flags));
        entries.push_back(json{{"beta", beta},
                               {"kernel_dim", kernel.kernel_dim()},
                               {"commutant_dim", kernel.commutant_dim()},
                               {"max_principal_angle", kernel.max_principal_angle},
                               {"commutant_match", kernel.commutant_match}});
        if (!kernel.commutant_match) result.exit_code = 3;
        if (chatty) {
          char line[96];
          std::snprintf(line, sizeof(line), "%-7g %-11d %-14d %.3e\n", beta,
                        kernel.kernel_dim(), kernel.commutant_dim(),
                        kernel.max_principal_angle);
          out << line;
        }
      }
      timer.stop();
      report["kernel_report"] = json{{"sweep_beta", entries}};
      break;
    }
    case AnalysisKind::propagate: {
      if (!config.analysis.pulse.direction) {
        throw ValidationError("analysis.pulse.direction is required for propagate");
      }
      if (static_cast<int>(config.analysis.pulse.direction->size()) != ws.probes.size()) {
        throw ValidationError("analysis.pulse.direction: length does not match probe count");
      }
      RVector direction(ws.probes.size());
      for (int i = 0; i < ws.probes.size(); ++i) {
        direction(i) = (*config.analysis.pulse.direction)[i];
      }
      const PulseSpec pulse = make_pulse(config.analysis.pulse, *ws.spectrum, direction);
      timer.start("dynamics");
      const ResponseTrajectory trajectory =
          propagate_response(ws.hamiltonian, ws.ensemble, ws.probes, pulse);
      timer.stop();
      std::ostringstream csv;
      write_csv(trajectory, csv);
      const std::string dir =
          !flags.out_dir.empty() ? flags.out_dir
                                 : (config.output.dir.empty() ? "." : config.output.dir);
      const std::string name =
          config.output.trajectory.empty() ? "trajectory.csv" : config.output.trajectory;
      const std::string path = dir + "/" + name;
      write_text_atomically(path, csv.str());
      result.artifacts.push_back(path);
      report["dynamics_certification"] =
          json{{"pulse", pulse_to_json(pulse)},
               {"trajectory", name},
               {"max_norm_drift", trajectory.max_norm_drift},
               {"max_abs_response", trajectory.max_abs()}};
      if (chatty) out << "wrote " << path << "\n";
      break;
    }
    case AnalysisKind::verify: {
      timer.start("kernel");
      const KernelReport kernel =
          compute_kernel(ws.probes, ws.ensemble, kernel_options(config, flags));
      timer.stop();
      report["kernel_report"] = kernel_report_to_json(kernel, ws.probes);
      bool ok = true;
      if (ws.ensemble.energy_only() && !kernel.commutant_match) ok = false;

      timer.start("dynamics");
      const double scale = ws.probes.max_norm();
      json cert{{"kernel_vectors", json::array()},
                {"non_kernel", nullptr},
                {"convolution_rel_l2", nullptr}};
      PulseSpec pulse;
      for (int c = 0; c < kernel.kernel_dim(); ++c) {
        pulse = make_pulse(config.analysis.pulse, *ws.spectrum, kernel.kernel_basis.col(c));
        const ResponseTrajectory traj =
            propagate_response(ws.hamiltonian, ws.ensemble, ws.probes, pulse);
        const double response = traj.max_abs() / std::abs(pulse.amplitude);
        const bool pass = response <= 1e-6 * scale;
        ok = ok && pass;
        cert["kernel_vectors"].push_back(
            json{{"index", c}, {"max_response_over_lambda", response}, {"pass", pass}});
        if (chatty) {
          out << "kernel vector " << c << ": max |dQ|/lambda = " << response << "  ["
              << (pass ? "pass" : "FAIL") << "]\n";
        }
      }
      const auto random_dir =
          non_kernel_direction(kernel.kernel_basis, ws.probes.size(), flags.seed);
      if (random_dir) {
        pulse = make_pulse(config.analysis.pulse, *ws.spectrum, *random_dir);
        const ResponseTrajectory traj =
            propagate_response(ws.hamiltonian, ws.ensemble, ws.probes, pulse);
        const ResponseTrajectory reference =
            convolution_reference(ws.probes, ws.ensemble, pulse);
        const double response = traj.max_abs() / std::abs(pulse.amplitude);
        const bool responds = response >= 1e-2 * scale;
        const double rel_l2 = relative_l2_difference(traj, reference);
        const bool conv_ok = rel_l2 <= 1e-3;
        ok = ok && responds && conv_ok;
        cert["non_kernel"] = json{{"seed", flags.seed},
                                  {"max_response_over_lambda", response},
                                  {"pass", responds}};
        cert["convolution_rel_l2"] = rel_l2;
        if (chatty) {
          out << "non-kernel direction: max |dQ|/lambda = " << response << "  ["
              << (responds ? "pass" : "FAIL") << "]\n"
              << "lehmann convolution vs propagation: rel L2 = " << rel_l2 << "  ["
              << (conv_ok ? "pass" : "FAIL") << "]\n";
        }
      }
      timer.stop();
      cert["pass"] = ok;
      report["dynamics_certification"] = cert;
      if (!ok) result.exit_code = 3;
      if (chatty) print_kernel_summary(out, kernel);
      break;
    }
  }

  report["timings"] = timer.to_json();
  result.report = report;

  const std::string dir = !flags.out_dir.empty()
                              ? flags.out_dir
                              : (config.output.dir.empty() ? "." : config.output.dir);
  const std::string name = config.output.report.empty() ? "report.json" : config.output.report;
  const std::string path = dir + "/" + name;
  write_text_atomically(path, report.dump(2) + "\n");
  result.artifacts.push_back(path);
  if (!flags.quiet) std::cout << "wrote " << path << "\n";
  return result;
}

}  // namespace lrk
