// Command-line driver: run a configured optimization, analyze a density image, or sweep the hole
// budget. Talks to the library only through the C interface.
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "topoforge/topoforge.h"

namespace {

struct ConfigDeleter {
  void operator()(tf_config* c) const { tf_config_free(c); }
};
struct ResultDeleter {
  void operator()(tf_result* r) const { tf_result_free(r); }
};
using ConfigPtr = std::unique_ptr<tf_config, ConfigDeleter>;
using ResultPtr = std::unique_ptr<tf_result, ResultDeleter>;

int report(tf_status s, const std::string& what) {
  std::fprintf(stderr, "topoforge: %s: %s\n", what.c_str(), tf_last_error());
  return static_cast<int>(s);
}

struct RunFlags {
  std::string out;
  int snapshot_every = -1;
  int max_iter = -1;
  long long seed = 0;
  std::vector<std::string> overrides;
  bool quiet = false;
};

void add_run_flags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("--out", f.out, "output directory (default: config output_dir, else ./out)");
  cmd->add_option("--snapshot-every", f.snapshot_every, "write snapshots every K iterations (0: final only)")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--max-iter", f.max_iter, "iteration limit")->check(CLI::NonNegativeNumber);
  cmd->add_option("--seed", f.seed, "accepted for compatibility; runs are deterministic");
  cmd->add_option("--set", f.overrides, "override a config value, e.g. --set topology.mu1=2");
  cmd->add_flag("-q,--quiet", f.quiet, "no per-iteration progress");
}

// Loads the config file and applies command-line overrides.
tf_status load_config(const std::string& path, const RunFlags& f, ConfigPtr& cfg) {
  tf_config* raw = nullptr;
  if (tf_status s = tf_config_from_file(path.c_str(), &raw); s != TF_OK) return s;
  cfg.reset(raw);
  auto set = [&](const std::string& key, const std::string& value) { return tf_config_set(cfg.get(), key.c_str(), value.c_str()); };
  if (f.snapshot_every >= 0)
    if (tf_status s = set("output.snapshot_every", std::to_string(f.snapshot_every)); s != TF_OK) return s;
  if (f.max_iter >= 0)
    if (tf_status s = set("optimizer.max_iter", std::to_string(f.max_iter)); s != TF_OK) return s;
  for (const auto& kv : f.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "topoforge: --set expects key=value, got '%s'\n", kv.c_str());
      return TF_ERR_INVALID_ARGUMENT;
    }
    if (tf_status s = set(kv.substr(0, eq), kv.substr(eq + 1)); s != TF_OK) return s;
  }
  return TF_OK;
}

// Output directory: --out, else the config's output_dir, else ./out.
std::string output_dir(const RunFlags& f, tf_config* cfg) {
  if (!f.out.empty()) return f.out;
  char* text = nullptr;
  std::string dir;
  if (tf_config_serialize(cfg, &text) == TF_OK) {
    const std::string s(text);
    tf_string_free(text);
    const auto at = s.find("output_dir = \"");
    if (at != std::string::npos) {
      const auto b = at + 14;
      dir = s.substr(b, s.find('"', b) - b);
    }
  }
  return dir.empty() ? "out" : dir;
}

void progress(const tf_record* r, void*) {
  if (r->iter % 10 != 0) return;
  std::printf("iter %4d  c = %.6g  V = %.4f  N0 = %d  N1 = %d%s%s\n", r->iter, r->compliance, r->volume, r->n0, r->n1,
              r->topology_active ? "  [topology]" : "", r->freeze_active ? "  [freeze]" : "");
  std::fflush(stdout);
}

int cmd_run(const std::string& path, const RunFlags& f) {
  ConfigPtr cfg;
  if (tf_status s = load_config(path, f, cfg); s != TF_OK) return report(s, path);
  const std::string dir = output_dir(f, cfg.get());
  tf_result* raw = nullptr;
  if (tf_status s = tf_optimize(cfg.get(), dir.c_str(), f.quiet ? nullptr : progress, nullptr, &raw); s != TF_OK)
    return report(s, "run");
  ResultPtr res(raw);
  tf_summary sum{};
  tf_result_summary(res.get(), &sum);
  std::printf("final  iter %d  compliance %.9g  volume %.6f  N0 %d  N1 %d\n", sum.iterations, sum.compliance,
              sum.volume, sum.n0, sum.n1);
  std::printf("topology %s, volume %s, %s\n", sum.topology_satisfied ? "satisfied" : "VIOLATED",
              sum.volume_satisfied ? "satisfied" : "VIOLATED", sum.converged ? "converged" : "not converged");
  std::printf("output written to %s\n", dir.c_str());
  return sum.topology_satisfied && sum.volume_satisfied ? 0 : 3;
}

int cmd_analyze(const std::string& path, double threshold, const std::string& pd_solid, const std::string& pd_void) {
  tf_analysis a{};
  const tf_status s = tf_analyze_pgm(path.c_str(), threshold, pd_solid.empty() ? nullptr : pd_solid.c_str(),
                                     pd_void.empty() ? nullptr : pd_void.c_str(), &a);
  if (s != TF_OK) return report(s, path);
  std::printf("image %dx%d threshold %g\n", a.width, a.height, threshold);
  std::printf("N0 = %d\nN1 = %d\n", a.n0, a.n1);
  std::printf("betti0 = %d\nbetti1 = %d\n", a.betti0, a.betti1);
  return 0;
}

bool parse_range(const std::string& text, int& lo, int& hi) {
  const auto dots = text.find("..");
  try {
    if (dots == std::string::npos) {
      lo = hi = std::stoi(text);
    } else {
      lo = std::stoi(text.substr(0, dots));
      hi = std::stoi(text.substr(dots + 2));
    }
  } catch (const std::exception&) {
    return false;
  }
  return lo >= 0 && lo <= hi;
}

int cmd_sweep(const std::string& path, const std::string& range, const RunFlags& f) {
  int lo = 0, hi = 0;
  if (!parse_range(range, lo, hi)) {
    std::fprintf(stderr, "topoforge: --nbar expects A..B with 0 <= A <= B, got '%s'\n", range.c_str());
    return TF_ERR_INVALID_ARGUMENT;
  }
  ConfigPtr cfg;
  if (tf_status s = load_config(path, f, cfg); s != TF_OK) return report(s, path);
  const std::string root = output_dir(f, cfg.get());
  std::vector<std::string> rows;
  int worst = 0;
  for (int nbar = lo; nbar <= hi; ++nbar) {
    if (tf_status s = tf_config_set(cfg.get(), "problem.max_holes", std::to_string(nbar).c_str()); s != TF_OK)
      return report(s, "sweep");
    const std::string dir = root + "/nbar_" + std::to_string(nbar);
    if (!f.quiet) std::printf("== max_holes = %d -> %s\n", nbar, dir.c_str());
    tf_result* raw = nullptr;
    if (tf_status s = tf_optimize(cfg.get(), dir.c_str(), f.quiet ? nullptr : progress, nullptr, &raw); s != TF_OK)
      return report(s, "sweep");
    ResultPtr res(raw);
    tf_summary sum{};
    tf_result_summary(res.get(), &sum);
    char line[160];
    std::snprintf(line, sizeof line, "%d,%.9g,%.6f,%d,%d,%d", nbar, sum.compliance, sum.volume, sum.n0, sum.n1,
                  sum.topology_satisfied && sum.volume_satisfied ? 1 : 0);
    rows.emplace_back(line);
    if (!(sum.topology_satisfied && sum.volume_satisfied)) worst = 3;
  }
  std::printf("max_holes,compliance,volume,N0,N1,satisfied\n");
  for (const auto& r : rows) std::printf("%s\n", r.c_str());
  return worst;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Persistence-controlled topology optimization"};
  app.set_version_flag("--version", tf_version());
  app.require_subcommand(1);

  RunFlags run_flags, sweep_flags;
  std::string run_config, sweep_config, pgm, nbar = "1..6", pd_solid, pd_void;
  double threshold = 0.4;

  auto* run = app.add_subcommand("run", "optimize the design described by a config file");
  run->add_option("config", run_config, "config file")->required()->check(CLI::ExistingFile);
  add_run_flags(run, run_flags);

  auto* analyze = app.add_subcommand("analyze", "report N0 and N1 of a grey PGM image");
  analyze->add_option("image", pgm, "8-bit P5 image")->required()->check(CLI::ExistingFile);
  analyze->add_option("--threshold", threshold, "solid where density >= threshold")->check(CLI::Range(0.0, 1.0));
  analyze->add_option("--pd-solid", pd_solid, "write the solid-phase diagram CSV here");
  analyze->add_option("--pd-void", pd_void, "write the void-phase diagram CSV here");

  auto* sweep = app.add_subcommand("sweep", "run once per hole budget and tabulate final compliance");
  sweep->add_option("config", sweep_config, "config file")->required()->check(CLI::ExistingFile);
  sweep->add_option("--nbar", nbar, "hole budgets A..B (inclusive)");
  add_run_flags(sweep, sweep_flags);

  CLI11_PARSE(app, argc, argv);

  if (*run) return cmd_run(run_config, run_flags);
  if (*analyze) return cmd_analyze(pgm, threshold, pd_solid, pd_void);
  return cmd_sweep(sweep_config, nbar, sweep_flags);
}
