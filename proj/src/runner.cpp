#include "topoforge/runner.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>

#include "topoforge/config.hpp"
#include "topoforge/error.hpp"
#include "topoforge/io.hpp"
#include "topoforge/mma.hpp"

namespace topoforge {

void RunConfig::validate() const {
  auto bad = [](const std::string& what) { fail(ErrorCode::InvalidArgument, what); };
  if (control_u < 2 || control_v < 2) bad("mesh.control_u/control_v must be at least 2");
  if (degree_u < 1 || degree_v < 1) bad("mesh.degree_u/degree_v must be at least 1");
  if (degree_u >= control_u || degree_v >= control_v) bad("mesh: degree must be below the control point count");
  if (!(load > 0.0) || !std::isfinite(load)) bad("load.magnitude must be positive");
  material.validate();
  if (!(volume_fraction > 0.0 && volume_fraction < 1.0)) bad("problem.volume_fraction must lie in (0, 1)");
  if (max_holes < -1) bad("problem.max_holes must be >= 0, or -1 for unlimited");
  if (!(threshold > 0.0 && threshold < 1.0)) bad("problem.threshold must lie in (0, 1)");
  if (!(rho_min > 0.0 && rho_min < 1.0)) bad("problem.rho_min must lie in (0, 1)");
  if (initial_density >= 0.0 && !(initial_density >= rho_min && initial_density <= 1.0))
    bad("problem.initial_density must lie in [rho_min, 1] (or be negative)");
  if (volume_fraction < rho_min) bad("problem.volume_fraction must not be below rho_min");
  if (!(mu0 >= 0.0) || !(mu1 >= 0.0)) bad("topology.mu0/mu1 must be non-negative");
  if (activation_iter < 0) bad("topology.activation_iter must be non-negative");
  if (ph_res_u < 2 || ph_res_v < 2) bad("topology.ph_resolution must be at least 2 in each direction");
  if (max_iter < 0) bad("optimizer.max_iter must be non-negative");
  if (!(move_limit > 0.0 && move_limit <= 1.0)) bad("optimizer.move_limit must lie in (0, 1]");
  if (!(filter_radius >= 0.0)) bad("optimizer.filter_radius must be non-negative");
  if (!(compliance_weight > 0.0)) bad("optimizer.compliance_weight must be positive");
  if (!(convergence_tol > 0.0)) bad("optimizer.convergence_tol must be positive");
  if (convergence_window < 1) bad("optimizer.convergence_window must be at least 1");
  if (snapshot_every < 0) bad("output.snapshot_every must be non-negative (0 = final only)");
}

bool excess_material_exists(int n0, int n1, int max_holes, double volume, double volume_fraction) {
  const bool topology_ok = n0 == 1 && (max_holes < 0 || n1 <= max_holes);
  return topology_ok && volume > volume_fraction + 0.005;
}

std::vector<int> coefficients_inside(const DensityField& field, const Grid2D<std::uint8_t>& cells) {
  const KnotVector& ku = field.knots_u();
  const KnotVector& kv = field.knots_v();
  const int p = ku.degree(), q = kv.degree();
  const int ru = cells.rows(), rv = cells.cols();
  std::vector<int> out;
  for (int i = 0; i < field.count_u(); ++i) {
    // Raster cells whose centres fall in the open support interval.
    const int a0 = std::max(0, static_cast<int>(std::floor(ku[i] * ru - 0.5)) + 1);
    const int a1 = std::min(ru - 1, static_cast<int>(std::ceil(ku[i + p + 1] * ru - 0.5)) - 1);
    for (int j = 0; j < field.count_v(); ++j) {
      const int b0 = std::max(0, static_cast<int>(std::floor(kv[j] * rv - 0.5)) + 1);
      const int b1 = std::min(rv - 1, static_cast<int>(std::ceil(kv[j + q + 1] * rv - 0.5)) - 1);
      if (a0 > a1 || b0 > b1) continue;
      bool all = true;
      for (int a = a0; a <= a1 && all; ++a)
        for (int b = b0; b <= b1 && all; ++b) all = cells(a, b) != 0;
      if (all) out.push_back(i * field.count_v() + j);
    }
  }
  return out;
}

namespace {

bool topology_ok(int n0, int n1, int max_holes) { return n0 == 1 && (max_holes < 0 || n1 <= max_holes); }

bool all_finite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

class Output {
 public:
  explicit Output(const std::string& dir) : dir_(dir) {
    if (!dir_.empty()) std::filesystem::create_directories(dir_);
  }
  bool enabled() const { return !dir_.empty(); }
  std::filesystem::path path(const std::string& name) const { return dir_ / name; }

  void snapshot(int iter, const RasterField& raster, double threshold, const ZeroDimObjective& solid,
                const HoleDetection& voids) const {
    if (!enabled()) return;
    const std::string k = std::to_string(iter);
    write_pgm(path("snapshot_" + k + ".pgm"), density_pixels(raster));
    write_pgm(path("binary_" + k + ".pgm"), binary_pixels(binarize(raster, threshold)));
    write_diagram_csv(path("pd_solid_" + k + ".csv"), solid.pairs);
    write_diagram_csv(path("pd_void_" + k + ".csv"), voids.pairs);
  }

  void logs(const std::vector<IterationRecord>& history) const {
    if (!enabled()) return;
    write_text(path("history.csv"), history_csv(history));
    write_text(path("topology.csv"), topology_csv(history));
  }

 private:
  std::filesystem::path dir_;
};

}  // namespace

RunResult optimize(const RunConfig& config, const IterationObserver& observer) {
  config.validate();
  return optimize(config, build_problem(config), observer);
}

RunResult optimize(const RunConfig& config, const Problem& problem, const IterationObserver& observer) {
  config.validate();
  const NurbsSurface& geom = problem.geometry;
  const int n = geom.count_u() * geom.count_v();
  if (!problem.pinned.empty() && static_cast<int>(problem.pinned.size()) != n)
    fail(ErrorCode::InvalidArgument, "pinned mask does not match the control net");
  auto pinned = [&](int k) { return !problem.pinned.empty() && problem.pinned[k] != 0; };

  if (!problem.initial.empty() && static_cast<int>(problem.initial.size()) != n)
    fail(ErrorCode::InvalidArgument, "initial design does not match the control net");
  const double start = config.initial_density < 0.0 ? config.volume_fraction : config.initial_density;
  Grid2D<double> coeffs(geom.count_u(), geom.count_v(), start);
  for (int k = 0; k < n; ++k) {
    if (!problem.initial.empty()) coeffs.data()[k] = std::clamp(problem.initial[k], config.rho_min, 1.0);
    if (pinned(k)) coeffs.data()[k] = config.rho_min;
  }
  DensityField field(geom.knots_u(), geom.knots_v(), geom.weights(), std::move(coeffs), config.rho_min);

  const IgaModel model(geom, problem.domain);
  const RasterBasisCache cache(field, config.ph_res_u, config.ph_res_v, problem.domain);
  const Output out(config.output_dir);

  MmaSettings settings;
  settings.move = config.move_limit;
  MmaState mma;

  RunResult result{field, {}, false, false, false};
  auto& history = result.history;
  history.reserve(static_cast<std::size_t>(config.max_iter) + 1);

  double c_ref = 0.0;
  int quiet = 0;  // consecutive small updates with constraints satisfied
  bool stop = false;

  for (int iter = 0;; ++iter) {
    // mechanics
    MechanicalState state = assemble(model, field, config.material);
    solve(state, model, problem.bc);
    std::vector<double> dc = compliance_sensitivity(state, model, field, config.material);
    const VolumeAndGradient vol = volume_and_sensitivity(model, field);

    // topology of the current design
    const RasterField raster = cache.rasterize(field);
    const ZeroDimObjective solid = zero_dim_objective(raster, config.threshold);
    const HoleDetection voids = detect_holes(raster, config.threshold);
    const OneDimObjective holes = one_dim_objective(voids.holes, config.max_holes, config.threshold);

    IterationRecord rec;
    rec.iter = iter;
    rec.compliance = state.compliance;
    rec.volume = vol.fraction;
    rec.n0 = solid.n0;
    rec.n1 = static_cast<int>(voids.holes.size());
    rec.c_top0 = solid.value;
    rec.c_top1 = holes.value;

    if (!std::isfinite(state.compliance) || !std::isfinite(vol.fraction) || !all_finite(dc)) {
      if (out.enabled()) {
        write_pgm(out.path("abort_" + std::to_string(iter) + ".pgm"), density_pixels(raster));
        history.push_back(rec);
        out.logs(history);
      }
      fail(ErrorCode::Numeric, "non-finite compliance or sensitivity at iteration " + std::to_string(iter));
    }

    const bool ok = topology_ok(rec.n0, rec.n1, config.max_holes);
    const bool late = iter >= config.activation_iter;
    rec.topology_active = late && !ok;
    rec.freeze_active = late && config.freeze_excess &&
                        excess_material_exists(rec.n0, rec.n1, config.max_holes, rec.volume, config.volume_fraction);

    const bool last = iter == config.max_iter || stop;
    const bool snap = last || (config.snapshot_every > 0 && iter % config.snapshot_every == 0);

    if (last) {
      history.push_back(rec);
      if (observer) observer(rec);
      if (snap) out.snapshot(iter, raster, config.threshold, solid, voids);
      break;
    }

    // Objective: weighted normalized compliance plus the topology penalties while violated.
    if (iter == 0) c_ref = state.compliance > 0.0 ? state.compliance : 1.0;
    const std::vector<double> dc_f = sensitivity_filter(dc, field.coeffs(), config.filter_radius);
    const double wc = config.compliance_weight / c_ref;

    MmaProblem mp;
    mp.x = field.coeffs().data();
    mp.x_min.assign(n, config.rho_min);
    mp.x_max.assign(n, 1.0);
    mp.f0 = wc * state.compliance;
    mp.df0.resize(n);
    for (int k = 0; k < n; ++k) mp.df0[k] = wc * dc_f[k];

    if (rec.topology_active) {
      mp.f0 += config.mu0 * solid.value + config.mu1 * holes.value;
      if (config.mu0 > 0.0) {
        const auto g0 = topo_gradient(solid.terms, cache, n);
        for (int k = 0; k < n; ++k) mp.df0[k] += config.mu0 * g0[k];
      }
      if (config.mu1 > 0.0) {
        const auto g1 = topo_gradient(holes.terms, cache, n);
        for (int k = 0; k < n; ++k) mp.df0[k] += config.mu1 * g1[k];
      }
    }

    for (int k = 0; k < n; ++k)
      if (pinned(k)) mp.x_min[k] = mp.x_max[k] = mp.x[k];

    if (rec.freeze_active) {
      // Hold the coefficients inside every detected hole at their current value.
      Grid2D<std::uint8_t> hole_cells(raster.res_u(), raster.res_v(), 0);
      std::vector<std::uint8_t> is_hole(static_cast<std::size_t>(voids.void_labels.count), 0);
      for (const auto& h : voids.holes) is_hole[h.component_label] = 1;
      for (std::size_t c = 0; c < hole_cells.size(); ++c) {
        const int label = voids.void_labels.labels.data()[c];
        if (label >= 0 && is_hole[label]) hole_cells.data()[c] = 1;
      }
      for (int k : coefficients_inside(field, hole_cells)) {
        if (!pinned(k)) ++rec.frozen;
        mp.x_min[k] = mp.x_max[k] = mp.x[k];
        mp.df0[k] = 0.0;
      }
    }

    mp.g = {vol.fraction / config.volume_fraction - 1.0};
    mp.dg.assign(1, std::vector<double>(n));
    for (int k = 0; k < n; ++k) mp.dg[0][k] = vol.gradient[k] / config.volume_fraction;

    if (!all_finite(mp.df0)) {
      if (out.enabled()) write_pgm(out.path("abort_" + std::to_string(iter) + ".pgm"), density_pixels(raster));
      fail(ErrorCode::Numeric, "non-finite objective gradient at iteration " + std::to_string(iter));
    }

    // update
    const std::vector<double> x_new = mma_step(mp, mma, settings);
    double change = 0.0;
    for (int k = 0; k < n; ++k) change = std::max(change, std::abs(x_new[k] - mp.x[k]));
    field.set_coeffs_clamped(x_new);
    rec.max_change = change;

    history.push_back(rec);
    if (observer) observer(rec);
    if (snap) out.snapshot(iter, raster, config.threshold, solid, voids);

    const bool feasible = ok && rec.volume <= config.volume_fraction + 1e-3;
    quiet = (change < config.convergence_tol && feasible) ? quiet + 1 : 0;
    if (quiet >= config.convergence_window) {
      result.converged = true;
      stop = config.stop_on_convergence;
    } else {
      result.converged = false;
    }
  }

  result.field = field;
  const IterationRecord& fin = history.back();
  result.topology_satisfied = topology_ok(fin.n0, fin.n1, config.max_holes);
  result.volume_satisfied = fin.volume <= config.volume_fraction + 1e-3;
  if (!result.topology_satisfied || !result.volume_satisfied) result.converged = false;
  out.logs(history);
  return result;
}

}  // namespace topoforge
