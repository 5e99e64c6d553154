// JSON experiment front end: strict spec parsing, analysis runners
// (spectrum / kernel / verify / propagate / sweep-beta), deterministic
// JSON reports and CSV trajectories written atomically.
#pragma once

#include "lrkernel/dynamics.hpp"

#include "json.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace lrk {

struct EnsembleConfig {
  EnsembleKind kind = EnsembleKind::canonical;
  double beta = 1.0;
  double mu = 0.0;
  std::vector<double> weights;  // custom kind only
};

struct ProbeConfig {
  SpanKind kind = SpanKind::site_density;
  std::vector<CMatrix> custom;
};

struct PulseConfig {
  PulseShape shape = PulseShape::gaussian(2.0, 0.5);
  double amplitude = 1e-4;
  double t_end = 10.0;
  int n_steps = 0;  // 0 = choose automatically from the spectrum
  std::optional<std::vector<double>> direction;
};

enum class AnalysisKind { spectrum, kernel, verify, propagate, sweep_beta };

AnalysisKind analysis_kind_from_string(const std::string& name);
const char* to_string(AnalysisKind kind);

struct AnalysisConfig {
  std::optional<AnalysisKind> kind;
  std::vector<double> betas{0.5, 1.0, 2.0, 5.0};
  PulseConfig pulse;
};

struct ToleranceConfig {
  double tol_e = 1e-9;
  double tol_w = 1e-12;
  double tol_rank = 1e-10;
  double tol_occ = 1e-8;
  double tol_angle = 1e-8;
};

struct OutputConfig {
  std::string dir;
  std::string report;      // default "report.json"
  std::string trajectory;  // default "trajectory.csv"
};

struct ExperimentConfig {
  ModelSpec model = HubbardChainSpec{};
  Sector sector = Sector::full();
  EnsembleConfig ensemble;
  ProbeConfig probes;
  AnalysisConfig analysis;
  ToleranceConfig tolerances;
  OutputConfig output;
};

// Strict parse: unknown keys anywhere are rejected with the field path.
ExperimentConfig parse_experiment(const nlohmann::json& spec);
ExperimentConfig load_experiment(const std::string& path);

struct RunFlags {
  std::string out_dir;  // overrides output.dir when nonempty
  bool quiet = false;
  std::uint64_t seed = 12345;
  std::optional<double> tol_rank;
  std::optional<double> beta;
  std::optional<double> mu;
};

struct RunResult {
  int exit_code = 0;  // 0 ok, 3 assertion failure (validation errors throw)
  nlohmann::json report;
  std::vector<std::string> artifacts;
};

// Runs one analysis. The subcommand wins over the spec's analysis.type;
// pulse/beta parameters are still read from the spec's analysis block.
RunResult run_experiment(const ExperimentConfig& config, AnalysisKind analysis,
                         const RunFlags& flags = {});

nlohmann::json error_json(int exit_code, const std::string& kind, const std::string& message);

void write_text_atomically(const std::string& path, const std::string& contents);

}  // namespace lrk
