#pragma once

#include <span>
#include <vector>

#include "topoforge/cubical_ph.hpp"
#include "topoforge/density_field.hpp"

namespace topoforge {

/// Persistence-diagram regions around the threshold. I and II hold the features present in the
/// binarized structure (I below the anti-diagonal b + d = 0, II above it), III holds pairs born
/// after the threshold and IV pairs that died before it.
enum class Region { I, II, III, IV };

/// Which filtration a pair came from: solid phase uses f = -rho, void phase f = +rho.
enum class Phase { Solid, Void };

/// Region of a pair at threshold rho_bar. Solid-phase pairs are alive when b <= -rho_bar < d, void
/// pairs when b < rho_bar <= d, which reproduces the rho >= rho_bar solid convention exactly.
Region classify_region(const PersistencePair& pair, double rho_bar, Phase phase = Phase::Solid);

std::vector<Region> classify_regions(std::span<const PersistencePair> pairs, double rho_bar,
                                     Phase phase = Phase::Solid);

/// One chain-rule contribution: sign * d f(cell) / d rho_ij.
struct TopoGradientTerm {
  Cell cell;
  int sign = 1;
  Phase phase = Phase::Solid;
};

struct ZeroDimObjective {
  double value = 0.0;
  std::vector<TopoGradientTerm> terms;
  int n0 = 0;                           ///< connected components of the binarized structure
  std::vector<PersistencePair> pairs;   ///< full solid-phase diagram
};

/// Connectivity objective: sum of region-I deaths minus sum of region-II births over the finite
/// solid-phase pairs alive at -rho_bar. Zero exactly when the structure is one component.
ZeroDimObjective zero_dim_objective(const RasterField& raster, double rho_bar);

/// An enclosed void component of the binarized structure.
struct HoleRecord {
  PersistencePair pair;   ///< void-phase pair whose component forms the hole
  int area = 0;           ///< pixel count of the component at threshold
  int component_label = -1;
};

struct HoleDetection {
  std::vector<HoleRecord> holes;        ///< ascending by area, then birth, then birth cell
  std::vector<PersistencePair> pairs;   ///< full void-phase diagram
  ComponentLabels void_labels;          ///< 4-connected components of rho < rho_bar
};

/// Dual-phase hole detection: 0-dimensional persistence of f = +rho (4-adjacency), keeping the
/// pairs alive at rho_bar whose void component stays clear of the domain boundary.
HoleDetection detect_holes(const RasterField& raster, double rho_bar);

struct OneDimObjective {
  double value = 0.0;
  std::vector<TopoGradientTerm> terms;
};

/// Hole-count objective. When there are more holes than `max_holes`, the smallest excess holes
/// are classified in void-phase coordinates and contribute their region-I death or region-II birth.
/// `max_holes < 0` means unlimited.
OneDimObjective one_dim_objective(std::span<const HoleRecord> holes, int max_holes, double rho_bar);

/// Pulls the selected critical-cell terms back onto the density coefficients. Solid-phase terms
/// carry the -1 from f = -rho. Exact gradient of the objective values above while the critical
/// cells stay fixed.
std::vector<double> topo_gradient(std::span<const TopoGradientTerm> terms, const RasterBasisCache& cache,
                                  int num_coeffs);

}  // namespace topoforge
