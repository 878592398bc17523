// Command-line front end: bowtie {run,sweep,diagram,converge,oracle} --config FILE [--out DIR]
// Exit codes: 0 success, 2 configuration error, 3 numerical failure.

#include <CLI11.hpp>
#include <iostream>
#include <optional>

#include "bowtie/errors.hpp"
#include "bowtie/experiments.hpp"

namespace {

struct Common {
  std::string config;
  std::string out = "out";
  std::optional<int> workers;
  std::optional<long long> seed;
  std::optional<std::string> scheme;
};

void add_common(CLI::App* cmd, Common& c, bool parallel) {
  cmd->add_option("--config", c.config, "key = value configuration file")->required();
  cmd->add_option("--out", c.out, "output directory")->capture_default_str();
  cmd->add_option("--seed", c.seed, "override ansatz.seed");
  cmd->add_option("--scheme", c.scheme, "override bath.scheme")->check(CLI::IsMember({"density", "linear"}));
  if (parallel) cmd->add_option("--workers", c.workers, "worker threads (default: BOWTIE_WORKERS or 1)");
}

bowtie::KeyValues load(const Common& c) {
  bowtie::KeyValues kv = bowtie::KeyValues::load(c.config);
  if (c.seed) {
    if (*c.seed < 0) throw bowtie::ConfigError("--seed must be non-negative");
    kv.set("ansatz.seed", std::to_string(*c.seed));
  }
  if (c.scheme) kv.set("bath.scheme", *c.scheme);
  return kv;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dissipative Landau-Zener dynamics of the three-level bow-tie model (multi-D2 ansatz)"};
  app.require_subcommand(1);
  app.set_version_flag("--version", bowtie::kVersion);

  Common run_opt, sweep_opt, diagram_opt, converge_opt, oracle_opt;
  auto* run = app.add_subcommand("run", "propagate one configuration");
  add_common(run, run_opt, false);
  auto* sweep = app.add_subcommand("sweep", "one trajectory per sweep.values entry");
  add_common(sweep, sweep_opt, true);
  auto* diagram = app.add_subcommand("diagram", "adiabatic spectrum and crossing taxonomy (single mode)");
  add_common(diagram, diagram_opt, false);
  auto* converge = app.add_subcommand("converge", "pairwise deviations across converge.values");
  add_common(converge, converge_opt, true);
  auto* oracle = app.add_subcommand("oracle", "truncated-Fock or bare asymptotic reference");
  add_common(oracle, oracle_opt, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run) {
      const auto kv = load(run_opt);
      bowtie::cmd_run(bowtie::parse_run_config(kv), run_opt.out);
    } else if (*sweep) {
      const auto kv = load(sweep_opt);
      const auto spec = bowtie::parse_sweep_spec(kv);
      const std::size_t failed = bowtie::cmd_sweep(spec, sweep_opt.out, bowtie::resolve_workers(sweep_opt.workers));
      if (failed > 0) {
        std::cerr << "bowtie: " << failed << " sweep point(s) failed; see " << sweep_opt.out << "/manifest.txt\n";
        return 3;
      }
    } else if (*diagram) {
      const auto kv = load(diagram_opt);
      const auto base = bowtie::parse_run_config(kv);
      bowtie::cmd_diagram(base, bowtie::parse_diagram_spec(kv, base), diagram_opt.out);
    } else if (*converge) {
      const auto kv = load(converge_opt);
      bowtie::cmd_converge(bowtie::parse_converge_spec(kv), converge_opt.out,
                           bowtie::resolve_workers(converge_opt.workers));
    } else if (*oracle) {
      const auto kv = load(oracle_opt);
      bowtie::cmd_oracle(bowtie::parse_run_config(kv), bowtie::parse_oracle_spec(kv), oracle_opt.out);
    }
  } catch (const bowtie::ConfigError& e) {
    std::cerr << "bowtie: configuration error: " << e.what() << "\n";
    return 2;
  } catch (const bowtie::NumericalError& e) {
    std::cerr << "bowtie: numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "bowtie: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
