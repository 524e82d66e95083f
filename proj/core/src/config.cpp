#include "zr/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <utility>

#include "zr/errors.hpp"

namespace zr::config {

namespace {

struct Pos {
  int line;
  int col;
};

[[noreturn]] void fail(Pos p, const std::string& msg) {
  throw ConfigError("line " + std::to_string(p.line) + ", column " +
                    std::to_string(p.col) + ": " + msg);
}

std::string fmt_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string fmt_list(const std::vector<double>& v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += fmt_double(v[i]);
  }
  return out;
}

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  size_t e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

double parse_double_at(const std::string& v, Pos p) {
  double out{};
  const char* b = v.data();
  const auto res = std::from_chars(b, b + v.size(), out);
  if (v.empty() || res.ec != std::errc() || res.ptr != b + v.size())
    fail(p, "invalid number '" + v + "'");
  return out;
}

long parse_long_at(const std::string& v, Pos p) {
  long out{};
  const char* b = v.data();
  const auto res = std::from_chars(b, b + v.size(), out);
  if (v.empty() || res.ec != std::errc() || res.ptr != b + v.size())
    fail(p, "invalid integer '" + v + "'");
  return out;
}

std::vector<double> parse_list_at(const std::string& v, Pos p) {
  std::vector<double> out;
  size_t start = 0;
  while (start <= v.size()) {
    size_t comma = v.find(',', start);
    if (comma == std::string::npos) comma = v.size();
    const std::string item = trim(v.substr(start, comma - start));
    if (item.empty()) fail(p, "empty list element");
    out.push_back(parse_double_at(item, p));
    start = comma + 1;
  }
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string&, Pos)>;
using Getter = std::function<std::optional<std::string>(const RunConfig&)>;

struct Field {
  std::string name;
  Setter set;
  Getter get;
};

struct SectionSpec {
  std::string name;
  std::vector<Field> fields;
};

template <class S>
Field dbl_gt(const char* name, S RunConfig::* sec, double S::* mem,
             double lo) {
  std::string nm = name;
  return {nm,
          [=](RunConfig& c, const std::string& v, Pos p) {
            const double x = parse_double_at(v, p);
            if (!(x > lo))
              fail(p, "'" + nm + "' must be > " + fmt_double(lo));
            (c.*sec).*mem = x;
          },
          [=](const RunConfig& c) -> std::optional<std::string> {
            return fmt_double((c.*sec).*mem);
          }};
}

template <class S>
Field dbl_ge(const char* name, S RunConfig::* sec, double S::* mem,
             double lo) {
  std::string nm = name;
  return {nm,
          [=](RunConfig& c, const std::string& v, Pos p) {
            const double x = parse_double_at(v, p);
            if (!(x >= lo))
              fail(p, "'" + nm + "' must be >= " + fmt_double(lo));
            (c.*sec).*mem = x;
          },
          [=](const RunConfig& c) -> std::optional<std::string> {
            return fmt_double((c.*sec).*mem);
          }};
}

template <class S>
Field dbl_any(const char* name, S RunConfig::* sec, double S::* mem) {
  constexpr double ninf = -std::numeric_limits<double>::infinity();
  return dbl_gt(name, sec, mem, ninf);
}

template <class S>
Field dbl_open(const char* name, S RunConfig::* sec, double S::* mem,
               double lo, double hi) {
  std::string nm = name;
  return {nm,
          [=](RunConfig& c, const std::string& v, Pos p) {
            const double x = parse_double_at(v, p);
            if (!(x > lo && x < hi))
              fail(p, "'" + nm + "' must be in (" + fmt_double(lo) + ", " +
                          fmt_double(hi) + ")");
            (c.*sec).*mem = x;
          },
          [=](const RunConfig& c) -> std::optional<std::string> {
            return fmt_double((c.*sec).*mem);
          }};
}

template <class S>
Field ifield(const char* name, S RunConfig::* sec, int S::* mem, long lo,
             long hi) {
  std::string nm = name;
  return {nm,
          [=](RunConfig& c, const std::string& v, Pos p) {
            const long x = parse_long_at(v, p);
            if (x < lo || x > hi)
              fail(p, "'" + nm + "' must be in [" + std::to_string(lo) + ", " +
                          std::to_string(hi) + "]");
            (c.*sec).*mem = static_cast<int>(x);
          },
          [=](const RunConfig& c) -> std::optional<std::string> {
            return std::to_string((c.*sec).*mem);
          }};
}

template <class S>
Field lfield(const char* name, S RunConfig::* sec, long S::* mem, long lo) {
  std::string nm = name;
  return {nm,
          [=](RunConfig& c, const std::string& v, Pos p) {
            const long x = parse_long_at(v, p);
            if (x < lo) fail(p, "'" + nm + "' must be >= " + std::to_string(lo));
            (c.*sec).*mem = x;
          },
          [=](const RunConfig& c) -> std::optional<std::string> {
            return std::to_string((c.*sec).*mem);
          }};
}

template <class S>
Field bfield(const char* name, S RunConfig::* sec, bool S::* mem) {
  std::string nm = name;
  return {nm,
          [=](RunConfig& c, const std::string& v, Pos p) {
            if (v == "true")
              (c.*sec).*mem = true;
            else if (v == "false")
              (c.*sec).*mem = false;
            else
              fail(p, "'" + nm + "' must be true or false");
          },
          [=](const RunConfig& c) -> std::optional<std::string> {
            return std::string((c.*sec).*mem ? "true" : "false");
          }};
}

template <class S>
Field efield(const char* name, S RunConfig::* sec, std::string S::* mem,
             std::vector<std::string> allowed) {
  std::string nm = name;
  return {nm,
          [=](RunConfig& c, const std::string& v, Pos p) {
            for (const auto& a : allowed)
              if (v == a) {
                (c.*sec).*mem = v;
                return;
              }
            std::string list;
            for (size_t i = 0; i < allowed.size(); ++i)
              list += (i ? ", " : "") + allowed[i];
            fail(p, "'" + nm + "' must be one of: " + list);
          },
          [=](const RunConfig& c) -> std::optional<std::string> {
            return (c.*sec).*mem;
          }};
}

template <class S>
Field sfield(const char* name, S RunConfig::* sec, std::string S::* mem) {
  std::string nm = name;
  return {nm,
          [=](RunConfig& c, const std::string& v, Pos p) {
            if (v.empty()) fail(p, "'" + nm + "' must be non-empty");
            (c.*sec).*mem = v;
          },
          [=](const RunConfig& c) -> std::optional<std::string> {
            return (c.*sec).*mem;
          }};
}

template <class S>
Field vfield(const char* name, S RunConfig::* sec,
             std::vector<double> S::* mem, bool positive_elems) {
  std::string nm = name;
  return {nm,
          [=](RunConfig& c, const std::string& v, Pos p) {
            auto list = parse_list_at(v, p);
            if (positive_elems)
              for (double x : list)
                if (!(x > 0.0))
                  fail(p, "'" + nm + "' entries must be > 0");
            (c.*sec).*mem = std::move(list);
          },
          [=](const RunConfig& c) -> std::optional<std::string> {
            if (((c.*sec).*mem).empty()) return std::nullopt;
            return fmt_list((c.*sec).*mem);
          }};
}

const std::vector<SectionSpec>& schema() {
  using R = RunConfig;
  static const std::vector<SectionSpec> spec = {
      {"domain",
       {
           efield("catalog", &R::domain, &R::Domain::catalog,
                  {"interval", "rectangle", "disc", "annulus", "ball",
                   "halfspace", "disc_exterior"}),
           ifield("dim", &R::domain, &R::Domain::dim, 1, 3),
           dbl_gt("rect_x", &R::domain, &R::Domain::rect_x, 0.0),
           dbl_gt("rect_y", &R::domain, &R::Domain::rect_y, 0.0),
           dbl_open("inner_radius", &R::domain, &R::Domain::inner_radius, 0.0,
                    1.0),
       }},
      {"metric",
       {
           efield("kind", &R::metric, &R::Metric::kind,
                  {"euclidean", "diagonal"}),
           vfield("diag", &R::metric, &R::Metric::diag, true),
       }},
      {"damping",
       {
           efield("kind", &R::damping, &R::Damping::kind,
                  {"zero", "constant", "box", "ball", "radial_step"}),
           dbl_ge("amplitude", &R::damping, &R::Damping::amplitude, 0.0),
           dbl_ge("ramp", &R::damping, &R::Damping::ramp, 0.0),
           dbl_gt("radius", &R::damping, &R::Damping::radius, 0.0),
           dbl_gt("r0", &R::damping, &R::Damping::r0, 0.0),
           vfield("lo", &R::damping, &R::Damping::lo, false),
           vfield("hi", &R::damping, &R::Damping::hi, false),
           vfield("center", &R::damping, &R::Damping::center, false),
       }},
      {"partition",
       {
           efield("source", &R::partition, &R::Partition::source, {"catalog"}),
           bfield("flip", &R::partition, &R::Partition::flip),
       }},
      {"flow",
       {
           dbl_gt("tol_ode", &R::flow, &R::Flow::tol_ode, 0.0),
           dbl_gt("tol_event", &R::flow, &R::Flow::tol_event, 0.0),
           dbl_gt("tol_char", &R::flow, &R::Flow::tol_char, 0.0),
           dbl_gt("eps_glance", &R::flow, &R::Flow::eps_glance, 0.0),
           dbl_gt("sample_ds", &R::flow, &R::Flow::sample_ds, 0.0),
           dbl_gt("glide_ds", &R::flow, &R::Flow::glide_ds, 0.0),
           dbl_gt("horizon", &R::flow, &R::Flow::horizon, 0.0),
           ifield("k_max", &R::flow, &R::Flow::k_max, 2, 12),
           efield("gamma_policy", &R::flow, &R::Flow::gamma_policy,
                  {"terminate", "continue-hyperbolic"}),
       }},
      {"solver",
       {
           ifield("resolution", &R::solver, &R::Solver::resolution, 4, 100000),
           dbl_gt("dt", &R::solver, &R::Solver::dt, 0.0),
           dbl_gt("T", &R::solver, &R::Solver::T, 0.0),
       }},
      {"scan",
       {
           dbl_any("mu_min", &R::scan, &R::Scan::mu_min),
           dbl_any("mu_max", &R::scan, &R::Scan::mu_max),
           dbl_gt("mu_step", &R::scan, &R::Scan::mu_step, 0.0),
       }},
      {"seeds",
       {
           ifield("resolution", &R::seeds, &R::Seeds::resolution, 1, 1000),
           lfield("rng_seed", &R::seeds, &R::Seeds::rng_seed, 0),
           efield("kind", &R::seeds, &R::Seeds::kind,
                  {"interior", "boundary", "interface"}),
           vfield("x", &R::seeds, &R::Seeds::x, false),
           vfield("xi", &R::seeds, &R::Seeds::xi, false),
       }},
      {"output",
       {
           sfield("dir", &R::output, &R::Output::dir),
           sfield("stem", &R::output, &R::Output::stem),
       }},
  };
  return spec;
}

// Constraints that tie several keys together; checked after the line scan,
// so messages carry the section, not a single line.
void finalize_checks(const RunConfig& cfg) {
  if (cfg.metric.kind == "diagonal" && cfg.metric.diag.empty())
    throw ConfigError("in [metric]: kind 'diagonal' requires 'diag'");
  if (cfg.damping.kind == "box") {
    if (cfg.damping.lo.empty() || cfg.damping.hi.empty())
      throw ConfigError("in [damping]: kind 'box' requires 'lo' and 'hi'");
    if (cfg.damping.lo.size() != cfg.damping.hi.size())
      throw ConfigError("in [damping]: 'lo' and 'hi' must have equal length");
    for (size_t i = 0; i < cfg.damping.lo.size(); ++i)
      if (!(cfg.damping.lo[i] < cfg.damping.hi[i]))
        throw ConfigError("in [damping]: 'lo' must be below 'hi' componentwise");
  }
  if (cfg.damping.kind == "ball" && cfg.damping.center.empty())
    throw ConfigError("in [damping]: kind 'ball' requires 'center'");
  if (!(cfg.scan.mu_max > cfg.scan.mu_min))
    throw ConfigError("in [scan]: 'mu_max' must exceed 'mu_min'");
  if (!cfg.seeds.x.empty() && cfg.seeds.xi.size() != cfg.seeds.x.size())
    throw ConfigError(
        "in [seeds]: explicit seed needs 'xi' with the same length as 'x'");
}

int domain_dim(const RunConfig& cfg) {
  const auto& c = cfg.domain.catalog;
  if (c == "interval") return 1;
  if (c == "ball") return 3;
  if (c == "halfspace") return cfg.domain.dim;
  return 2;
}

Eigen::VectorXd to_vec(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(),
                                           static_cast<Eigen::Index>(v.size()));
}

}  // namespace

RunConfig parse(const std::string& text) {
  RunConfig cfg;
  const auto& sch = schema();
  const SectionSpec* cur = nullptr;
  std::set<std::string> seen;

  std::vector<std::string> lines;
  for (size_t start = 0, i = 0; i <= text.size(); ++i) {
    if (i == text.size() || text[i] == '\n') {
      lines.emplace_back(text.substr(start, i - start));
      start = i + 1;
    }
  }
  if (!text.empty() && text.back() == '\n') lines.pop_back();

  for (size_t li = 0; li < lines.size(); ++li) {
    std::string line = lines[li];
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const int line_no = static_cast<int>(li) + 1;

    const size_t first = line.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    if (line[first] == '#' || line[first] == ';') continue;

    if (line[first] == '[') {
      const size_t close = line.find(']', first);
      const Pos p{line_no, static_cast<int>(first) + 1};
      if (close == std::string::npos ||
          !trim(line.substr(close + 1)).empty())
        fail(p, "malformed section header");
      const std::string name = trim(line.substr(first + 1, close - first - 1));
      cur = nullptr;
      for (const auto& sec : sch)
        if (sec.name == name) cur = &sec;
      if (!cur) fail(p, "unknown section '[" + name + "]'");
      continue;
    }

    const size_t eq = line.find('=');
    const Pos key_pos{line_no, static_cast<int>(first) + 1};
    if (eq == std::string::npos) fail(key_pos, "expected 'key = value'");
    const std::string key = trim(line.substr(first, eq - first));
    if (key.empty()) fail(key_pos, "expected 'key = value'");
    if (!cur) fail(key_pos, "key '" + key + "' outside any section");

    const Field* field = nullptr;
    for (const auto& f : cur->fields)
      if (f.name == key) field = &f;
    if (!field)
      fail(key_pos, "unknown key '" + key + "' in [" + cur->name + "]");
    if (!seen.insert(cur->name + "." + key).second)
      fail(key_pos, "duplicate key '" + key + "' in [" + cur->name + "]");

    size_t vstart = line.find_first_not_of(" \t", eq + 1);
    if (vstart == std::string::npos) vstart = line.size();
    const Pos val_pos{line_no, static_cast<int>(vstart) + 1};
    field->set(cfg, trim(line.substr(eq + 1)), val_pos);
  }

  finalize_checks(cfg);
  return cfg;
}

RunConfig parse_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::string emit(const RunConfig& cfg) {
  std::string out;
  bool first = true;
  for (const auto& sec : schema()) {
    std::string body;
    for (const auto& f : sec.fields)
      if (auto v = f.get(cfg)) body += f.name + " = " + *v + "\n";
    if (body.empty()) continue;
    if (!first) out += "\n";
    out += "[" + sec.name + "]\n" + body;
    first = false;
  }
  return out;
}

std::string canonicalize(const std::string& text) { return emit(parse(text)); }

geom::DomainSpec make_domain(const RunConfig& cfg) {
  const auto& d = cfg.domain;
  geom::DomainSpec dom;
  if (d.catalog == "interval")
    dom = geom::DomainSpec::interval();
  else if (d.catalog == "rectangle")
    dom = geom::DomainSpec::rectangle(d.rect_x, d.rect_y);
  else if (d.catalog == "disc")
    dom = geom::DomainSpec::disc();
  else if (d.catalog == "annulus")
    dom = geom::DomainSpec::annulus(d.inner_radius);
  else if (d.catalog == "ball")
    dom = geom::DomainSpec::ball();
  else if (d.catalog == "halfspace")
    dom = geom::DomainSpec::halfspace(d.dim);
  else if (d.catalog == "disc_exterior")
    dom = geom::DomainSpec::disc_exterior();
  else
    throw ConfigError("unknown catalog domain '" + d.catalog + "'");

  if (cfg.partition.flip) {
    const auto base_psi = dom.psi;
    const auto base_grad = dom.grad_psi;
    dom.psi = [base_psi](const Eigen::VectorXd& x) { return -base_psi(x); };
    dom.grad_psi = [base_grad](const Eigen::VectorXd& x) {
      return Eigen::VectorXd(-base_grad(x));
    };
  }
  return dom;
}

geom::MetricField make_metric(const RunConfig& cfg) {
  const int dim = domain_dim(cfg);
  if (cfg.metric.kind == "euclidean") return geom::MetricField::euclidean(dim);
  if (static_cast<int>(cfg.metric.diag.size()) != dim)
    throw ConfigError("in [metric]: 'diag' needs " + std::to_string(dim) +
                      " entries for domain '" + cfg.domain.catalog + "'");
  return geom::MetricField::constant_diagonal(to_vec(cfg.metric.diag));
}

DampingField make_damping(const RunConfig& cfg) {
  const int dim = domain_dim(cfg);
  const auto& d = cfg.damping;
  const auto need_dim = [&](const std::vector<double>& v, const char* key) {
    if (static_cast<int>(v.size()) != dim)
      throw ConfigError("in [damping]: '" + std::string(key) + "' needs " +
                        std::to_string(dim) + " entries for domain '" +
                        cfg.domain.catalog + "'");
  };
  if (d.kind == "zero") return DampingField::zero(dim);
  if (d.kind == "constant") return DampingField::constant(dim, d.amplitude);
  if (d.kind == "box") {
    need_dim(d.lo, "lo");
    need_dim(d.hi, "hi");
    return DampingField::box(to_vec(d.lo), to_vec(d.hi), d.amplitude, d.ramp);
  }
  if (d.kind == "ball") {
    need_dim(d.center, "center");
    return DampingField::ball(to_vec(d.center), d.radius, d.amplitude, d.ramp);
  }
  return DampingField::radial_step(d.r0, d.ramp, d.amplitude, dim);
}

flow::FlowOptions make_flow_options(const RunConfig& cfg) {
  flow::FlowOptions opts = flow::FlowOptions::for_domain(make_domain(cfg));
  opts.tol_ode = cfg.flow.tol_ode;
  opts.tol_event = cfg.flow.tol_event;
  opts.tol_char = cfg.flow.tol_char;
  opts.eps_glance = cfg.flow.eps_glance;
  opts.sample_ds = cfg.flow.sample_ds;
  opts.glide_ds = cfg.flow.glide_ds;
  opts.gamma_policy = cfg.flow.gamma_policy == "terminate"
                          ? flow::GammaPolicy::Terminate
                          : flow::GammaPolicy::ContinueHyperbolic;
  return opts;
}

sym::ClassifyOptions make_classify_options(const RunConfig& cfg) {
  sym::ClassifyOptions opts;
  opts.eps_glance = cfg.flow.eps_glance;
  opts.k_max = cfg.flow.k_max;
  return opts;
}

sym::PhasePoint make_seed(const RunConfig& cfg) {
  if (cfg.seeds.x.empty())
    throw ConfigError("in [seeds]: explicit seed requires 'x'");
  const int dim = domain_dim(cfg);
  if (static_cast<int>(cfg.seeds.x.size()) != dim)
    throw ConfigError("in [seeds]: 'x' needs " + std::to_string(dim) +
                      " entries for domain '" + cfg.domain.catalog + "'");
  const Eigen::VectorXd x = to_vec(cfg.seeds.x);
  const Eigen::VectorXd xi = to_vec(cfg.seeds.xi);
  if (cfg.seeds.kind == "interior") return sym::make_interior(x, xi);
  const auto dom = make_domain(cfg);
  const auto metric = make_metric(cfg);
  if (cfg.seeds.kind == "boundary")
    return sym::make_boundary(dom, metric, x, xi);
  return sym::make_interface(dom, metric, x, xi);
}

}  // namespace zr::config
