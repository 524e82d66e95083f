#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "zr/config.hpp"
#include "zr/errors.hpp"
#include "zr/experiments.hpp"

namespace {

struct Common {
  std::string config_path;
  std::string out_dir;
  std::string gamma_policy;
  int threads = 1;
  long seed = -1;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "Experiment config file")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", c.out_dir,
                  "Output directory (overrides [output] dir)");
  cmd->add_option("--threads", c.threads,
                  "Worker threads for seed batches and scan grids")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--seed", c.seed,
                  "RNG seed override (overrides [seeds] rng_seed)")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--gamma-policy", c.gamma_policy,
                  "Interface policy: terminate | continue-hyperbolic")
      ->check(CLI::IsMember({"terminate", "continue-hyperbolic"}));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Generalized-ray tracing, control-condition checking, and damped-wave "
      "experiments over mixed-boundary domains"};
  app.require_subcommand(1);

  Common c;
  auto* trace = app.add_subcommand(
      "trace", "Flow the configured seeds; one JSON-lines file per seed");
  add_common(trace, c);
  auto* classify = app.add_subcommand(
      "classify", "Boundary classification table for the configured seeds");
  add_common(classify, c);
  auto* mgcc = app.add_subcommand(
      "mgcc", "Control-condition check over the seed lattice");
  add_common(mgcc, c);
  auto* evolve = app.add_subcommand(
      "evolve", "Damped-wave energy decay from the ground state");
  add_common(evolve, c);
  auto* resolvent = app.add_subcommand(
      "resolvent", "Resolvent-norm scan along the imaginary axis");
  add_common(resolvent, c);
  auto* spectrum =
      app.add_subcommand("spectrum", "Eigenvalues of the damped generator");
  add_common(spectrum, c);
  auto* airy = app.add_subcommand(
      "airy-verify", "Airy barrier/envelope property table");

  CLI11_PARSE(app, argc, argv);

  try {
    const zr::exp::Overrides ov{c.out_dir, c.threads, c.seed, c.gamma_policy};
    if (app.got_subcommand(airy)) return zr::exp::cmd_airy_verify(std::cout);
    const auto cfg = zr::config::parse_file(c.config_path);
    if (app.got_subcommand(trace))
      return zr::exp::cmd_trace(cfg, ov, std::cout);
    if (app.got_subcommand(classify))
      return zr::exp::cmd_classify(cfg, ov, std::cout);
    if (app.got_subcommand(mgcc)) return zr::exp::cmd_mgcc(cfg, ov, std::cout);
    if (app.got_subcommand(evolve))
      return zr::exp::cmd_evolve(cfg, ov, std::cout);
    if (app.got_subcommand(resolvent))
      return zr::exp::cmd_resolvent(cfg, ov, std::cout);
    if (app.got_subcommand(spectrum))
      return zr::exp::cmd_spectrum(cfg, ov, std::cout);
  } catch (const zr::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const zr::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
