// End-to-end exercise of the installed CLI: every subcommand runs against
// real config files in a scratch directory, and the spec'd behaviors are
// checked through the process boundary (exit codes, file bytes, diagnostics).
#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void expect(bool ok, const std::string& what) {
  if (!ok) {
    ++g_failures;
    std::fprintf(stderr, "FAIL: %s\n", what.c_str());
  } else {
    std::fprintf(stdout, "ok: %s\n", what.c_str());
  }
}

struct RunResult {
  int code = -1;
  std::string out;
};

RunResult run(const std::string& cmd) {
  RunResult r;
  FILE* pipe = popen((cmd + " 2>&1").c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  size_t n;
  while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void put(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

int count_lines_with(const std::string& text, const std::string& needle) {
  int count = 0;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line))
    if (line.find(needle) != std::string::npos) ++count;
  return count;
}

// Parses the E column of an energy CSV ("t,E" header).
std::vector<double> energy_column(const std::string& csv) {
  std::vector<double> out;
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    const auto comma = line.find(',');
    if (comma == std::string::npos) continue;
    out.push_back(std::stod(line.substr(comma + 1)));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: zr_cli_smoke <path-to-zr>\n");
    return 2;
  }
  const std::string zr = std::string("\"") + argv[1] + "\"";
  const fs::path work =
      fs::temp_directory_path() /
      ("zr_smoke_" + std::to_string(static_cast<long>(getpid())));
  fs::create_directories(work);
  const std::string outdir = (work / "out").string();
  const auto cfgpath = [&](const char* name) { return (work / name).string(); };

  // --- help and argument validation --------------------------------------
  {
    const auto r = run(zr + " --help");
    expect(r.code == 0, "--help exits 0");
    expect(r.out.find("trace") != std::string::npos &&
               r.out.find("mgcc") != std::string::npos &&
               r.out.find("airy-verify") != std::string::npos,
           "--help lists the subcommands");
  }
  {
    put(work / "bad.cfg", "[solver]\ndtt = 1\n");
    const auto r = run(zr + " evolve --config " + cfgpath("bad.cfg"));
    expect(r.code == 2, "malformed config exits 2");
    expect(r.out.find("dtt") != std::string::npos &&
               r.out.find("line 2") != std::string::npos,
           "diagnostic names the offending key with its line");
  }
  {
    put(work / "mirror.cfg", "");
    const auto r = run(zr + " trace --config " + cfgpath("mirror.cfg") +
                       " --gamma-policy bounce");
    expect(r.code != 0, "unknown gamma policy is rejected by the parser");
  }

  // --- half-space mirror trace: two segments, byte-identical reruns ------
  put(work / "mirror.cfg",
      "[domain]\n"
      "catalog = halfspace\n"
      "dim = 2\n"
      "\n"
      "[flow]\n"
      "horizon = 1\n"
      "gamma_policy = continue-hyperbolic\n"
      "\n"
      "[seeds]\n"
      "kind = interior\n"
      "x = 0, 1\n"
      "xi = 0, -1\n"
      "\n"
      "[output]\n"
      "stem = mirror\n");
  {
    const auto r = run(zr + " trace --config " + cfgpath("mirror.cfg") +
                       " --out " + outdir);
    expect(r.code == 0, "mirror trace exits 0");
    const std::string jsonl = slurp(fs::path(outdir) / "mirror_trace_0.jsonl");
    expect(count_lines_with(jsonl, "\"type\":\"segment\"") == 2,
           "mirror trajectory has two segments");
    expect(count_lines_with(jsonl, "\"action\":\"reflect\"") == 1,
           "mirror trajectory reflects once");
    const auto again = run(zr + " trace --config " + cfgpath("mirror.cfg") +
                           " --out " + (work / "out2").string());
    expect(again.code == 0, "mirror trace rerun exits 0");
    expect(slurp(work / "out2" / "mirror_trace_0.jsonl") == jsonl,
           "mirror trace rerun is byte-identical");
  }
  {
    // Default policy: the config value "terminate" applies when the section
    // is left out, and the run stops at the interface contact.
    put(work / "mirror_default.cfg",
        "[domain]\n"
        "catalog = halfspace\n"
        "dim = 2\n"
        "\n"
        "[flow]\n"
        "horizon = 1\n"
        "\n"
        "[seeds]\n"
        "kind = interior\n"
        "x = 0, 1\n"
        "xi = 0, -1\n"
        "\n"
        "[output]\n"
        "stem = mirror_default\n");
    const auto r = run(zr + " trace --config " + cfgpath("mirror_default.cfg") +
                       " --out " + outdir);
    expect(r.code == 0, "default-policy mirror trace exits 0");
    const std::string jsonl =
        slurp(fs::path(outdir) / "mirror_default_trace_0.jsonl");
    expect(jsonl.find("interface contact") != std::string::npos,
           "default policy terminates at the interface");
  }

  // --- disc tangent seed: a single gliding record ------------------------
  put(work / "glide.cfg",
      "[domain]\n"
      "catalog = disc\n"
      "\n"
      "[flow]\n"
      "horizon = 0.5\n"
      "\n"
      "[seeds]\n"
      "kind = boundary\n"
      "x = 1, 0\n"
      "xi = 0, 1\n"
      "\n"
      "[output]\n"
      "stem = glide\n");
  {
    const auto r = run(zr + " trace --config " + cfgpath("glide.cfg") +
                       " --out " + outdir);
    expect(r.code == 0, "disc tangent trace exits 0");
    const std::string jsonl = slurp(fs::path(outdir) / "glide_trace_0.jsonl");
    expect(count_lines_with(jsonl, "\"type\":\"segment\"") == 1,
           "disc tangent trajectory is a single segment");
    expect(count_lines_with(jsonl, "\"kind\":\"gliding\"") == 1,
           "disc tangent segment is a gliding arc");
  }
  {
    const auto r = run(zr + " classify --config " + cfgpath("glide.cfg") +
                       " --out " + outdir);
    expect(r.code == 0, "classify exits 0");
    const std::string csv = slurp(fs::path(outdir) / "glide_classify.csv");
    expect(csv.rfind("seed,x0,x1,class,r,dxd_r,k,alpha\n", 0) == 0,
           "classify CSV header is fixed");
    expect(count_lines_with(csv, ",gliding,") == 1,
           "disc tangent seed classifies gliding");
  }

  // --- bouncing-ball mgcc: designed failure with a witness ---------------
  put(work / "bounce.cfg",
      "[domain]\n"
      "catalog = rectangle\n"
      "rect_x = 2\n"
      "rect_y = 1\n"
      "\n"
      "[damping]\n"
      "kind = box\n"
      "amplitude = 1\n"
      "ramp = 0.05\n"
      "lo = 0, 0\n"
      "hi = 0.3, 1\n"
      "\n"
      "[flow]\n"
      "horizon = 4\n"
      "\n"
      "[seeds]\n"
      "kind = interior\n"
      "x = 0.5, 0.5\n"
      "xi = 0, 1\n"
      "\n"
      "[output]\n"
      "stem = bounce\n");
  {
    const auto r = run(zr + " mgcc --config " + cfgpath("bounce.cfg") +
                       " --out " + outdir);
    expect(r.code == 1, "bouncing-ball mgcc exits 1");
    const std::string summary = slurp(fs::path(outdir) / "bounce_mgcc.json");
    expect(summary.find("\"failed\":1") != std::string::npos,
           "summary counts the failed orbit");
    const std::string seeds =
        slurp(fs::path(outdir) / "bounce_mgcc_seeds.jsonl");
    expect(seeds.find("\"verdict\":\"failed\"") != std::string::npos,
           "per-seed report carries the failed verdict");
    expect(seeds.find("witness") != std::string::npos,
           "failed verdict carries a witness");
    const auto again = run(zr + " mgcc --config " + cfgpath("bounce.cfg") +
                           " --out " + (work / "out2").string());
    expect(again.code == 1, "mgcc rerun exits 1");
    expect(slurp(work / "out2" / "bounce_mgcc.json") == summary,
           "mgcc rerun summary is byte-identical");
  }

  // --- evolve: undamped conservation, damped decay -----------------------
  put(work / "undamped.cfg",
      "[domain]\n"
      "catalog = interval\n"
      "\n"
      "[solver]\n"
      "resolution = 64\n"
      "dt = 0.01\n"
      "T = 2\n"
      "\n"
      "[output]\n"
      "stem = undamped\n");
  {
    const auto r = run(zr + " evolve --config " + cfgpath("undamped.cfg") +
                       " --out " + outdir);
    expect(r.code == 0, "undamped evolve exits 0");
    const std::string csv = slurp(fs::path(outdir) / "undamped_energy.csv");
    expect(csv.rfind("t,E\n", 0) == 0, "energy CSV header is fixed");
    const auto E = energy_column(csv);
    expect(E.size() == 201, "energy CSV has one row per step");
    double lo = E[0], hi = E[0];
    for (double e : E) {
      lo = std::min(lo, e);
      hi = std::max(hi, e);
    }
    expect(hi - lo <= 1e-9 * hi, "undamped energy column is flat");
  }
  put(work / "damped.cfg",
      "[domain]\n"
      "catalog = interval\n"
      "\n"
      "[damping]\n"
      "kind = box\n"
      "lo = 0.3\n"
      "hi = 0.7\n"
      "\n"
      "[solver]\n"
      "resolution = 64\n"
      "dt = 0.01\n"
      "T = 10\n"
      "\n"
      "[scan]\n"
      "mu_min = -5\n"
      "mu_max = 5\n"
      "mu_step = 1\n"
      "\n"
      "[output]\n"
      "stem = damped\n");
  {
    const auto r = run(zr + " evolve --config " + cfgpath("damped.cfg") +
                       " --out " + outdir);
    expect(r.code == 0, "damped evolve exits 0");
    const auto E = energy_column(slurp(fs::path(outdir) / "damped_energy.csv"));
    expect(!E.empty() && E.back() < 0.5 * E.front(),
           "damped energy decays");
  }

  // --- resolvent scan and spectrum ----------------------------------------
  {
    const auto r = run(zr + " resolvent --config " + cfgpath("damped.cfg") +
                       " --out " + outdir + " --threads 2");
    expect(r.code == 0, "resolvent scan exits 0");
    const std::string csv = slurp(fs::path(outdir) / "damped_scan.csv");
    expect(csv.rfind("mu,norm\n", 0) == 0, "scan CSV header is fixed");
    expect(count_lines_with(csv, ",") == 12, "scan CSV has 11 grid rows");
  }
  {
    const auto r = run(zr + " spectrum --config " + cfgpath("damped.cfg") +
                       " --out " + outdir);
    expect(r.code == 0, "spectrum exits 0");
    const std::string csv = slurp(fs::path(outdir) / "damped_spectrum.csv");
    expect(csv.rfind("re,im\n", 0) == 0, "spectrum CSV header is fixed");
    expect(count_lines_with(csv, ",") == 129,
           "spectrum CSV has two eigenvalues per dof");
  }

  // --- airy property table -------------------------------------------------
  {
    const auto r = run(zr + " airy-verify");
    expect(r.code == 0, "airy-verify exits 0");
    expect(r.out.find("FAIL") == std::string::npos,
           "airy-verify table has no failures");
    expect(count_lines_with(r.out, "pass") >= 5,
           "airy-verify table lists the property rows");
  }

  // --- ZR_LOG plumbing ------------------------------------------------------
  {
    const auto r = run("ZR_LOG=debug " + zr + " evolve --config " +
                       cfgpath("undamped.cfg") + " --out " +
                       (work / "out3").string());
    expect(r.code == 0, "ZR_LOG=debug run exits 0");
  }

  std::error_code ec;
  if (g_failures == 0) fs::remove_all(work, ec);
  if (g_failures != 0)
    std::fprintf(stderr, "%d smoke check(s) failed; artifacts kept in %s\n",
                 g_failures, work.string().c_str());
  return g_failures == 0 ? 0 : 1;
}
