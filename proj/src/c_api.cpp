#include "topoforge/topoforge.h"

#include <cstring>
#include <exception>
#include <new>
#include <string>

#include "topoforge/config.hpp"
#include "topoforge/error.hpp"
#include "topoforge/io.hpp"
#include "topoforge/runner.hpp"
#include "topoforge/topo_objective.hpp"

struct tf_config {
  topoforge::RunConfig cfg;
};

struct tf_result {
  topoforge::RunResult run;
};

namespace {

thread_local std::string last_error;

tf_status to_status(topoforge::ErrorCode code) {
  using topoforge::ErrorCode;
  switch (code) {
    case ErrorCode::InvalidArgument: return TF_ERR_INVALID_ARGUMENT;
    case ErrorCode::Domain: return TF_ERR_DOMAIN;
    case ErrorCode::SingularGeometry: return TF_ERR_SINGULAR_GEOMETRY;
    case ErrorCode::SingularSystem: return TF_ERR_SINGULAR_SYSTEM;
    case ErrorCode::Parse: return TF_ERR_PARSE;
    case ErrorCode::Io: return TF_ERR_IO;
    case ErrorCode::Numeric: return TF_ERR_NUMERIC;
    case ErrorCode::Infeasible: return TF_ERR_INFEASIBLE;
  }
  return TF_ERR_INTERNAL;
}

template <class F>
tf_status guarded(F&& body) {
  try {
    body();
    last_error.clear();
    return TF_OK;
  } catch (const topoforge::Error& e) {
    last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
  } catch (const std::exception& e) {
    last_error = e.what();
  } catch (...) {
    last_error = "unknown failure";
  }
  return TF_ERR_INTERNAL;
}

tf_status null_arg(const char* what) {
  last_error = std::string(what) + " must not be NULL";
  return TF_ERR_INVALID_ARGUMENT;
}

tf_record to_c(const topoforge::IterationRecord& r) {
  return {r.iter,           r.compliance,        r.volume,       r.n0,     r.n1,        r.c_top0,
          r.c_top1,         r.topology_active,   r.freeze_active, r.frozen, r.max_change};
}

}  // namespace

extern "C" {

const char* tf_version(void) { return "0.1.0"; }

const char* tf_last_error(void) { return last_error.c_str(); }

tf_status tf_config_from_file(const char* path, tf_config** out) {
  if (!path) return null_arg("path");
  if (!out) return null_arg("out");
  return guarded([&] { *out = new tf_config{topoforge::parse_config(path)}; });
}

tf_status tf_config_from_preset(const char* preset, tf_config** out) {
  if (!preset) return null_arg("preset");
  if (!out) return null_arg("out");
  return guarded([&] { *out = new tf_config{topoforge::preset_config(preset)}; });
}

tf_status tf_config_set(tf_config* config, const char* key, const char* value) {
  if (!config) return null_arg("config");
  if (!key || !value) return null_arg("key/value");
  return guarded([&] {
    topoforge::RunConfig next = config->cfg;
    topoforge::set_config_value(next, key, value);
    if (std::string_view(key) == "preset") {
      // Switching preset resets the benchmark defaults but keeps the output location.
      const std::string dir = next.output_dir;
      next = topoforge::preset_config(next.preset);
      next.output_dir = dir;
    }
    next.validate();
    config->cfg = next;
  });
}

tf_status tf_config_serialize(const tf_config* config, char** text) {
  if (!config) return null_arg("config");
  if (!text) return null_arg("text");
  return guarded([&] {
    const std::string s = topoforge::serialize_config(config->cfg);
    char* buf = new char[s.size() + 1];
    std::memcpy(buf, s.c_str(), s.size() + 1);
    *text = buf;
  });
}

void tf_config_free(tf_config* config) { delete config; }

void tf_string_free(char* text) { delete[] text; }

tf_status tf_optimize(const tf_config* config, const char* out_dir, tf_progress_fn progress, void* user,
                      tf_result** out) {
  if (!config) return null_arg("config");
  if (!out) return null_arg("out");
  return guarded([&] {
    topoforge::RunConfig cfg = config->cfg;
    cfg.output_dir = out_dir ? out_dir : "";
    topoforge::IterationObserver obs;
    if (progress)
      obs = [&](const topoforge::IterationRecord& r) {
        const tf_record rec = to_c(r);
        progress(&rec, user);
      };
    *out = new tf_result{topoforge::optimize(cfg, obs)};
  });
}

tf_status tf_result_summary(const tf_result* result, tf_summary* summary) {
  if (!result) return null_arg("result");
  if (!summary) return null_arg("summary");
  return guarded([&] {
    const auto& run = result->run;
    const auto& f = run.final_record();
    *summary = {f.iter,  f.compliance,     f.volume, f.n0, f.n1, run.converged, run.topology_satisfied,
                run.volume_satisfied};
  });
}

size_t tf_result_history_size(const tf_result* result) { return result ? result->run.history.size() : 0; }

tf_status tf_result_record(const tf_result* result, size_t index, tf_record* record) {
  if (!result) return null_arg("result");
  if (!record) return null_arg("record");
  if (index >= result->run.history.size()) {
    last_error = "history index out of range";
    return TF_ERR_INVALID_ARGUMENT;
  }
  *record = to_c(result->run.history[index]);
  last_error.clear();
  return TF_OK;
}

void tf_result_free(tf_result* result) { delete result; }

tf_status tf_analyze_pgm(const char* path, double threshold, const char* pd_solid_csv, const char* pd_void_csv,
                         tf_analysis* out) {
  if (!path) return null_arg("path");
  if (!out) return null_arg("out");
  return guarded([&] {
    using namespace topoforge;
    if (!(threshold > 0.0 && threshold < 1.0)) fail(ErrorCode::InvalidArgument, "threshold must lie in (0, 1)");
    const GreyImage px = read_pgm(path);
    const RasterField raster = raster_from_pixels(px);
    const ZeroDimObjective solid = zero_dim_objective(raster, threshold);
    const HoleDetection voids = detect_holes(raster, threshold);
    const BettiNumbers betti = betti_numbers(binarize(raster, threshold));
    if (pd_solid_csv) write_diagram_csv(pd_solid_csv, solid.pairs);
    if (pd_void_csv) write_diagram_csv(pd_void_csv, voids.pairs);
    *out = {px.rows(), px.cols(), solid.n0, static_cast<int>(voids.holes.size()), betti.b0, betti.b1};
  });
}

}  // extern "C"
