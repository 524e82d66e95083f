// Experiment configs: INI-style sections with a fixed schema, a canonical
// emitter whose output parses back byte-identically, and bridges from the
// parsed sections into the library types.
#pragma once

#include <string>
#include <vector>

#include "zr/damping.hpp"
#include "zr/flow.hpp"
#include "zr/geometry.hpp"
#include "zr/symbol.hpp"

namespace zr::config {

struct RunConfig {
  struct Domain {
    std::string catalog = "interval";
    int dim = 2;  // halfspace only; catalog shapes carry their own dimension
    double rect_x = 1.0;
    double rect_y = 1.0;
    double inner_radius = 0.5;
    bool operator==(const Domain&) const = default;
  } domain;

  struct Metric {
    std::string kind = "euclidean";  // euclidean | diagonal
    std::vector<double> diag;        // principal coefficients when diagonal
    bool operator==(const Metric&) const = default;
  } metric;

  struct Damping {
    std::string kind = "zero";  // zero|constant|box|ball|radial_step
    double amplitude = 1.0;
    double ramp = 0.0;
    double radius = 0.25;        // ball
    double r0 = 0.9;             // radial_step threshold
    std::vector<double> lo, hi;  // box corners
    std::vector<double> center;  // ball center
    bool operator==(const Damping&) const = default;
  } damping;

  struct Partition {
    std::string source = "catalog";
    bool flip = false;  // swap the Dirichlet and Neumann parts
    bool operator==(const Partition&) const = default;
  } partition;

  struct Flow {
    double tol_ode = 1e-12;
    double tol_event = 1e-10;
    double tol_char = 1e-8;
    double eps_glance = 1e-7;
    double sample_ds = 0.05;
    double glide_ds = 0.02;
    double horizon = 10.0;
    int k_max = 6;
    std::string gamma_policy = "terminate";  // terminate|continue-hyperbolic
    bool operator==(const Flow&) const = default;
  } flow;

  struct Solver {
    int resolution = 200;
    double dt = 0.02;
    double T = 40.0;
    bool operator==(const Solver&) const = default;
  } solver;

  struct Scan {
    double mu_min = -50.0;
    double mu_max = 50.0;
    double mu_step = 0.5;
    bool operator==(const Scan&) const = default;
  } scan;

  struct Seeds {
    int resolution = 5;
    long rng_seed = 0;
    // Explicit single seed; the lattice is used when x is empty.
    std::string kind = "interior";  // interior|boundary|interface
    std::vector<double> x, xi;
    bool operator==(const Seeds&) const = default;
  } seeds;

  struct Output {
    std::string dir = ".";
    std::string stem = "run";
    bool operator==(const Output&) const = default;
  } output;

  bool operator==(const RunConfig&) const = default;
};

// Accepts [section] headers, `key = value` lines, blank lines, and comment
// lines starting with # or ;. Unknown sections or keys, malformed or
// out-of-range values, and duplicate keys throw ConfigError naming the line
// and column.
RunConfig parse(const std::string& text);
RunConfig parse_file(const std::string& path);

// Canonical form: fixed section and key order, `key = value` with single
// spaces, LF endings, one blank line between sections, list-valued keys
// omitted while empty. emit(parse(s)) == s whenever s is canonical.
std::string emit(const RunConfig& cfg);
std::string canonicalize(const std::string& text);

// Bridges into the library types. Dimension and kind mismatches throw
// ConfigError.
geom::DomainSpec make_domain(const RunConfig& cfg);
geom::MetricField make_metric(const RunConfig& cfg);
DampingField make_damping(const RunConfig& cfg);
flow::FlowOptions make_flow_options(const RunConfig& cfg);
sym::ClassifyOptions make_classify_options(const RunConfig& cfg);
// The explicit seed from [seeds] x/xi/kind; throws when x is empty.
sym::PhasePoint make_seed(const RunConfig& cfg);

}  // namespace zr::config
