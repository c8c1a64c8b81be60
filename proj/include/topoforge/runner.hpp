#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "topoforge/density_field.hpp"
#include "topoforge/iga_mech.hpp"
#include "topoforge/topo_objective.hpp"

namespace topoforge {

/// Every knob of one optimization run. Geometry comes from a named preset whose control net,
/// degrees and load can be overridden.
struct RunConfig {
  std::string preset = "short_beam";
  std::string output_dir;       ///< empty: write nothing

  // mesh
  int control_u = 61;
  int control_v = 61;
  int degree_u = 3;
  int degree_v = 3;
  double load = 1e5;            ///< N

  Material material;

  // problem
  double volume_fraction = 0.5;
  int max_holes = -1;           ///< -1: unlimited
  double threshold = 0.4;
  double rho_min = 0.1;
  double initial_density = -1.0;  ///< uniform starting coefficient; negative: volume_fraction

  // topology control
  double mu0 = 1.0;
  double mu1 = 1.0;
  int activation_iter = 25;
  int ph_res_u = 200;
  int ph_res_v = 200;
  bool freeze_excess = true;

  // optimizer
  int max_iter = 400;
  double move_limit = 0.2;
  double filter_radius = 1.5;   ///< in control-grid spacings h
  double compliance_weight = 10.0;  ///< compliance enters the objective as weight * c / c(initial design)
  bool stop_on_convergence = false;
  double convergence_tol = 1e-3;
  int convergence_window = 10;

  // output
  int snapshot_every = 10;

  /// Throws InvalidArgument naming the first offending field.
  void validate() const;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Geometry, design domain and loading of a run.
struct Problem {
  NurbsSurface geometry;
  DomainMask domain;
  BoundaryConditions bc;
  std::vector<std::uint8_t> pinned;  ///< coefficients held at rho_min (support entirely outside the domain)
  std::vector<double> initial;       ///< starting coefficients (u-slow); empty: uniform start
};

struct IterationRecord {
  int iter = 0;
  double compliance = 0.0;
  double volume = 0.0;
  int n0 = 0;
  int n1 = 0;
  double c_top0 = 0.0;        ///< unweighted connectivity objective
  double c_top1 = 0.0;        ///< unweighted hole-count objective
  bool topology_active = false;
  bool freeze_active = false;
  int frozen = 0;             ///< coefficients pinned inside holes
  double max_change = 0.0;    ///< max |x_new - x| of the update taken after this record (0 on the last)
};

struct RunResult {
  DensityField field;
  std::vector<IterationRecord> history;  ///< record k describes the design after k updates
  bool converged = false;     ///< coefficient-change criterion met (over the last window)
  bool topology_satisfied = false;
  bool volume_satisfied = false;

  const IterationRecord& final_record() const { return history.back(); }
};

/// Connected and within the hole budget, yet the volume budget is exceeded by more than 0.005.
bool excess_material_exists(int n0, int n1, int max_holes, double volume, double volume_fraction);

/// Coefficients whose support, sampled on the raster, lies entirely within the selected cells.
std::vector<int> coefficients_inside(const DensityField& field, const Grid2D<std::uint8_t>& cells);

using IterationObserver = std::function<void(const IterationRecord&)>;

/// Minimum compliance under a volume budget with persistence-based control of connectivity and hole
/// count. Records one history entry per design, from the initial uniform field to the last update.
RunResult optimize(const RunConfig& config, const IterationObserver& observer = {});

/// Same, on an explicitly built problem.
RunResult optimize(const RunConfig& config, const Problem& problem, const IterationObserver& observer = {});

}  // namespace topoforge
