#include "zr/experiments.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <vector>

#include "json.hpp"
#include "zr/airy.hpp"
#include "zr/errors.hpp"
#include "zr/flow.hpp"
#include "zr/log.hpp"
#include "zr/mgcc.hpp"
#include "zr/waves.hpp"

namespace zr::exp {

namespace {

std::string fmt(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

config::RunConfig apply_common(config::RunConfig cfg, const Overrides& ov) {
  if (!ov.out_dir.empty()) cfg.output.dir = ov.out_dir;
  if (ov.rng_seed >= 0) cfg.seeds.rng_seed = ov.rng_seed;
  return cfg;
}

flow::GammaPolicy parse_policy(const std::string& s) {
  if (s == "terminate") return flow::GammaPolicy::Terminate;
  if (s == "continue-hyperbolic") return flow::GammaPolicy::ContinueHyperbolic;
  throw ConfigError("unknown gamma policy '" + s +
                    "' (terminate | continue-hyperbolic)");
}

std::ofstream open_out(const std::string& dir, const std::string& name) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  const fs::path path = fs::path(dir) / name;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write output file '" + path.string() + "'");
  return out;
}

std::vector<sym::PhasePoint> seeds_for(const config::RunConfig& cfg,
                                       const geom::DomainSpec& dom,
                                       const geom::MetricField& metric) {
  if (!cfg.seeds.x.empty()) return {config::make_seed(cfg)};
  mgcc::LatticeOptions lo;
  lo.rng_seed = static_cast<unsigned>(cfg.seeds.rng_seed);
  return mgcc::seed_lattice(dom, metric, cfg.seeds.resolution, lo);
}

}  // namespace

int cmd_trace(const config::RunConfig& cfg0, const Overrides& ov,
              std::ostream& log) {
  auto cfg = apply_common(cfg0, ov);
  if (!ov.gamma_policy.empty()) cfg.flow.gamma_policy = ov.gamma_policy;
  const auto dom = config::make_domain(cfg);
  const auto metric = config::make_metric(cfg);
  const auto opts = config::make_flow_options(cfg);
  const auto seeds = seeds_for(cfg, dom, metric);

  int errors = 0;
  for (size_t k = 0; k < seeds.size(); ++k) {
    auto out = open_out(cfg.output.dir,
                        cfg.output.stem + "_trace_" + std::to_string(k) +
                            ".jsonl");
    try {
      const auto traj =
          flow::evolve(dom, metric, seeds[k], cfg.flow.horizon, opts);
      flow::write_jsonl(traj, out);
    } catch (const Error& e) {
      nlohmann::json j;
      j["type"] = "error";
      j["what"] = e.what();
      out << j.dump() << "\n";
      ++errors;
      zr::log::warn("trace seed ", k, ": ", e.what());
    }
  }
  log << "trace: " << seeds.size() << " seed(s), " << errors
      << " error(s), files " << cfg.output.stem << "_trace_*.jsonl in "
      << cfg.output.dir << "\n";
  return errors == 0 ? 0 : 1;
}

int cmd_classify(const config::RunConfig& cfg0, const Overrides& ov,
                 std::ostream& log) {
  const auto cfg = apply_common(cfg0, ov);
  const auto dom = config::make_domain(cfg);
  const auto metric = config::make_metric(cfg);
  const auto copts = config::make_classify_options(cfg);
  const auto seeds = seeds_for(cfg, dom, metric);

  auto out = open_out(cfg.output.dir, cfg.output.stem + "_classify.csv");
  out << std::setprecision(17);
  out << "seed";
  for (int i = 0; i < dom.dim; ++i) out << ",x" << i;
  out << ",class,r,dxd_r,k,alpha\n";

  int classified = 0, interior = 0;
  for (size_t k = 0; k < seeds.size(); ++k) {
    if (seeds[k].kind == sym::PhasePoint::Kind::Interior) {
      ++interior;
      continue;
    }
    const auto cls =
        sym::classify_boundary(dom, metric, seeds[k].x, seeds[k].xi, copts);
    out << k;
    for (int i = 0; i < dom.dim; ++i) out << "," << seeds[k].x[i];
    out << "," << sym::tag_name(cls.tag) << "," << cls.r_value << ","
        << cls.dxd_r << "," << cls.contact_order << "," << cls.alpha << "\n";
    ++classified;
  }
  log << "classify: " << classified << " boundary seed(s) tabulated, "
      << interior << " interior seed(s) skipped, file " << cfg.output.stem
      << "_classify.csv in " << cfg.output.dir << "\n";
  return 0;
}

int cmd_mgcc(const config::RunConfig& cfg0, const Overrides& ov,
             std::ostream& log) {
  const auto cfg = apply_common(cfg0, ov);
  const auto dom = config::make_domain(cfg);
  const auto metric = config::make_metric(cfg);
  const auto damping = config::make_damping(cfg);
  const auto seeds = seeds_for(cfg, dom, metric);

  mgcc::MgccOptions mo;
  mo.threads = ov.threads;
  mo.flow = config::make_flow_options(cfg);
  // Control certification admits hyperbolic interface crossings by default;
  // only an explicit flag reverts to terminate-at-interface.
  mo.flow.gamma_policy = ov.gamma_policy.empty()
                             ? flow::GammaPolicy::ContinueHyperbolic
                             : parse_policy(ov.gamma_policy);

  const auto report =
      mgcc::check_mgcc(dom, metric, damping, cfg.flow.horizon, seeds, mo);

  {
    auto out = open_out(cfg.output.dir, cfg.output.stem + "_mgcc.json");
    mgcc::write_summary_json(report, out);
  }
  {
    auto out = open_out(cfg.output.dir, cfg.output.stem + "_mgcc_seeds.jsonl");
    mgcc::write_seed_jsonl(report, out);
  }
  log << "mgcc: " << report.seed_count << " seed(s): " << report.controlled
      << " controlled, " << report.failed << " failed, "
      << report.undetermined << " undetermined, horizon "
      << fmt(report.horizon) << ", files " << cfg.output.stem
      << "_mgcc.json + _mgcc_seeds.jsonl in " << cfg.output.dir << "\n";
  return report.exit_code();
}

int cmd_evolve(const config::RunConfig& cfg0, const Overrides& ov,
               std::ostream& log) {
  const auto cfg = apply_common(cfg0, ov);
  const auto op =
      waves::assemble(config::make_domain(cfg), config::make_metric(cfg),
                      config::make_damping(cfg), cfg.solver.resolution);
  const auto U0 = waves::ground_state(op);
  const auto trace = waves::evolve_wave(op, U0, cfg.solver.T, cfg.solver.dt);
  const auto [C, c] = waves::fit_decay(trace);

  auto out = open_out(cfg.output.dir, cfg.output.stem + "_energy.csv");
  waves::write_energy_csv(trace, out);
  log << "evolve: " << op.dofs() << " dof(s), E(0) "
      << fmt(trace.samples.front().second) << ", E(T) "
      << fmt(trace.samples.back().second) << ", fitted rate " << fmt(c)
      << ", file " << cfg.output.stem << "_energy.csv in " << cfg.output.dir
      << "\n";
  return 0;
}

int cmd_resolvent(const config::RunConfig& cfg0, const Overrides& ov,
                  std::ostream& log) {
  const auto cfg = apply_common(cfg0, ov);
  const auto op =
      waves::assemble(config::make_domain(cfg), config::make_metric(cfg),
                      config::make_damping(cfg), cfg.solver.resolution);
  const auto scan = waves::scan_resolvent(op, cfg.scan.mu_min, cfg.scan.mu_max,
                                          cfg.scan.mu_step, ov.threads);

  auto out = open_out(cfg.output.dir, cfg.output.stem + "_scan.csv");
  waves::write_scan_csv(scan, out);
  double top = 0.0;
  for (double v : scan.norms) top = std::max(top, v);
  log << "resolvent: " << scan.mu_grid.size() << " point(s), sup "
      << fmt(top) << ", abscissa " << fmt(scan.spectral_abscissa) << ", file "
      << cfg.output.stem << "_scan.csv in " << cfg.output.dir << "\n";
  return 0;
}

int cmd_spectrum(const config::RunConfig& cfg0, const Overrides& ov,
                 std::ostream& log) {
  const auto cfg = apply_common(cfg0, ov);
  const auto op =
      waves::assemble(config::make_domain(cfg), config::make_metric(cfg),
                      config::make_damping(cfg), cfg.solver.resolution);
  const auto eigs = waves::spectrum(op);

  auto out = open_out(cfg.output.dir, cfg.output.stem + "_spectrum.csv");
  waves::write_spectrum_csv(eigs, out);
  log << "spectrum: " << eigs.size() << " eigenvalue(s), abscissa "
      << fmt(waves::spectral_abscissa(eigs)) << ", file " << cfg.output.stem
      << "_spectrum.csv in " << cfg.output.dir << "\n";
  return 0;
}

int cmd_airy_verify(std::ostream& out) {
  const auto rows = airy::verify_properties();
  bool all = true;
  for (const auto& row : rows) {
    char line[128];
    std::snprintf(line, sizeof(line), "%-44s %13.6e %13.6e  %s\n",
                  row.name.c_str(), row.worst, row.bound,
                  row.pass ? "pass" : "FAIL");
    out << line;
    all = all && row.pass;
  }
  out << (all ? "airy-verify: all properties hold\n"
              : "airy-verify: PROPERTY FAILURE\n");
  return all ? 0 : 1;
}

}  // namespace zr::exp
