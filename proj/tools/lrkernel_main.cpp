// Command-line front end: reads a JSON experiment spec, runs one analysis
// and writes a JSON report (plus CSV trajectories for propagate).
// Exit codes: 0 success, 2 validation failure, 3 assertion failure.
#include "lrkernel/experiment.hpp"

#include "CLI11.hpp"

#include <iostream>
#include <string>

namespace {

struct CommonArgs {
  std::string spec_path;
  lrk::RunFlags flags;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--spec", args.spec_path, "experiment spec (JSON)")->required();
  cmd->add_option("--out", args.flags.out_dir, "output directory (overrides spec)");
  cmd->add_flag("--quiet", args.flags.quiet, "suppress tables on stdout");
  cmd->add_option("--seed", args.flags.seed, "seed for randomized checks");
  cmd->add_option("--tol-rank", [&args](const std::vector<std::string>& v) {
        args.flags.tol_rank = std::stod(v.front());
        return true;
      },
      "null-space rank threshold (overrides spec)");
  cmd->add_option("--beta", [&args](const std::vector<std::string>& v) {
        args.flags.beta = std::stod(v.front());
        return true;
      },
      "inverse temperature (overrides spec)");
  cmd->add_option("--mu", [&args](const std::vector<std::string>& v) {
        args.flags.mu = std::stod(v.front());
        return true;
      },
      "chemical potential (overrides spec)");
}

int run(const CommonArgs& args, lrk::AnalysisKind kind) {
  try {
    const lrk::ExperimentConfig config = lrk::load_experiment(args.spec_path);
    const lrk::RunResult result = lrk::run_experiment(config, kind, args.flags);
    if (result.exit_code == 3) {
      std::cerr << lrk::error_json(3, "assertion",
                                   "a theory-guaranteed check failed; see the report")
                       .dump()
                << "\n";
    }
    return result.exit_code;
  } catch (const lrk::ValidationError& e) {
    std::cerr << lrk::error_json(2, "validation", e.what()).dump() << "\n";
    return 2;
  } catch (const lrk::AssertionFailure& e) {
    std::cerr << lrk::error_json(3, "assertion", e.what()).dump() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << lrk::error_json(1, "internal", e.what()).dump() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"response-kernel laboratory for finite fermion systems"};
  app.require_subcommand(1);

  struct Sub {
    const char* name;
    const char* help;
    lrk::AnalysisKind kind;
  };
  const Sub subs[] = {
      {"spectrum", "energies and degeneracy groups", lrk::AnalysisKind::spectrum},
      {"kernel", "characterize the response kernel", lrk::AnalysisKind::kernel},
      {"verify", "kernel plus time-propagation certification", lrk::AnalysisKind::verify},
      {"propagate", "time propagation of one direction, CSV output",
       lrk::AnalysisKind::propagate},
      {"sweep-beta", "kernel dimension across temperatures", lrk::AnalysisKind::sweep_beta},
  };

  std::vector<std::pair<CommonArgs, lrk::AnalysisKind>> jobs(std::size(subs));
  for (std::size_t i = 0; i < std::size(subs); ++i) {
    CLI::App* cmd = app.add_subcommand(subs[i].name, subs[i].help);
    jobs[i].second = subs[i].kind;
    add_common(cmd, jobs[i].first);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  for (std::size_t i = 0; i < std::size(subs); ++i) {
    if (app.get_subcommand(subs[i].name)->parsed()) return run(jobs[i].first, jobs[i].second);
  }
  return 1;
}
