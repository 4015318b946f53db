#include <string>

#include <CLI11.hpp>

#include "turnpike/pipeline.hpp"

namespace {

struct SubArgs {
  std::string config;
  std::string output;
  std::string seed;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Partial exponential turnpike analysis for linear-convex optimal control"};
  app.require_subcommand(1);

  const struct {
    const char* name;
    const char* help;
  } commands[] = {
      {"decompose", "Controllability decomposition of the system"},
      {"feasibility", "Certify the initial states against the feasible set"},
      {"steady", "Steady pairs for the feasible initial states"},
      {"solve", "Finite-horizon optimal trajectories for each state and horizon"},
      {"turnpike", "Full analysis: certificates, steady pairs, trajectories, envelope fits"},
      {"sweep", "Value-gap and envelope sweep over the horizons (no trajectory files)"},
      {"validate", "Run the oracle and assumption diagnostics on the configured instance"},
  };

  SubArgs args;
  for (const auto& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--config", args.config, "Path to the JSON run configuration")->required();
    sub->add_option("--output", args.output, "Override the configured output directory");
    sub->add_option("--seed", args.seed, "Override the configured sampling seed");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 4;  // usage problems are configuration errors
  }

  return turnpike::run_cli(app.get_subcommands().front()->get_name(), args.config, args.output,
                           args.seed);
}
