// Experiment drivers behind the CLI subcommands: each one reads the parsed
// config, runs the corresponding module, writes its files under [output],
// prints a one-line summary to `log`, and returns the process exit code.
#pragma once

#include <iosfwd>
#include <string>

#include "zr/config.hpp"

namespace zr::exp {

// Flag overrides applied on top of the config file. The interface policy is
// carried separately from the config value because the two flow-driving
// commands default differently: trace terminates at the interface, the
// control checker continues through hyperbolic crossings.
struct Overrides {
  std::string out_dir;       // --out
  int threads = 1;           // --threads
  long rng_seed = -1;        // --seed (applied when >= 0)
  std::string gamma_policy;  // --gamma-policy (applied when non-empty)
};

int cmd_trace(const config::RunConfig& cfg, const Overrides& ov,
              std::ostream& log);
int cmd_classify(const config::RunConfig& cfg, const Overrides& ov,
                 std::ostream& log);
int cmd_mgcc(const config::RunConfig& cfg, const Overrides& ov,
             std::ostream& log);
int cmd_evolve(const config::RunConfig& cfg, const Overrides& ov,
               std::ostream& log);
int cmd_resolvent(const config::RunConfig& cfg, const Overrides& ov,
                  std::ostream& log);
int cmd_spectrum(const config::RunConfig& cfg, const Overrides& ov,
                 std::ostream& log);
int cmd_airy_verify(std::ostream& out);

}  // namespace zr::exp
