#include "topoforge/topo_objective.hpp"

#include <algorithm>

namespace topoforge {

Region classify_region(const PersistencePair& p, double rho_bar, Phase phase) {
  bool alive = false, born_late = false;
  if (phase == Phase::Solid) {
    const double t = -rho_bar;
    alive = p.birth <= t && p.death > t;
    born_late = p.birth > t;
  } else {
    const double t = rho_bar;
    alive = p.birth < t && p.death >= t;
    born_late = p.birth >= t;
  }
  if (alive) return p.birth + p.death <= 0.0 ? Region::I : Region::II;
  return born_late ? Region::III : Region::IV;
}

std::vector<Region> classify_regions(std::span<const PersistencePair> pairs, double rho_bar, Phase phase) {
  std::vector<Region> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(classify_region(p, rho_bar, phase));
  return out;
}

namespace {

FilteredImage phase_image(const RasterField& raster, Phase phase) {
  Grid2D<double> f = raster.values;
  if (phase == Phase::Solid)
    for (double& x : f.data()) x = -x;
  return FilteredImage(std::move(f), raster.mask);
}

// Adds the region-I death or region-II birth of an alive pair; returns false for III/IV.
bool accumulate(const PersistencePair& p, Region r, Phase phase, double& value,
                std::vector<TopoGradientTerm>& terms) {
  if (r == Region::I) {
    value += p.death;
    terms.push_back({*p.death_cell, +1, phase});
    return true;
  }
  if (r == Region::II) {
    value -= p.birth;
    terms.push_back({p.birth_cell, -1, phase});
    return true;
  }
  return false;
}

}  // namespace

ZeroDimObjective zero_dim_objective(const RasterField& raster, double rho_bar) {
  ZeroDimObjective out;
  out.pairs = sublevel_persistence_0d(phase_image(raster, Phase::Solid), Adjacency::Eight);
  for (const auto& p : out.pairs) {
    const Region r = classify_region(p, rho_bar, Phase::Solid);
    if (r != Region::I && r != Region::II) continue;
    ++out.n0;
    if (!p.essential()) accumulate(p, r, Phase::Solid, out.value, out.terms);
  }
  return out;
}

HoleDetection detect_holes(const RasterField& raster, double rho_bar) {
  HoleDetection out;
  out.pairs = sublevel_persistence_0d(phase_image(raster, Phase::Void), Adjacency::Four);

  Grid2D<std::uint8_t> voids(raster.res_u(), raster.res_v(), 0);
  for (std::size_t k = 0; k < voids.size(); ++k)
    voids.data()[k] = (raster.mask.data()[k] && raster.values.data()[k] < rho_bar) ? 1 : 0;
  out.void_labels = connected_components(voids, raster.mask, Adjacency::Four);
  const auto on_boundary = boundary_flags(out.void_labels);
  std::vector<int> area(out.void_labels.count, 0);
  for (int l : out.void_labels.labels.data())
    if (l >= 0) ++area[l];

  for (const auto& p : out.pairs) {
    const Region r = classify_region(p, rho_bar, Phase::Void);
    if (r != Region::I && r != Region::II) continue;
    const int label = out.void_labels.labels[p.birth_cell];
    if (label < 0 || on_boundary[label]) continue;
    out.holes.push_back({p, area[label], label});
  }
  std::sort(out.holes.begin(), out.holes.end(), [](const HoleRecord& x, const HoleRecord& y) {
    if (x.area != y.area) return x.area < y.area;
    if (x.pair.birth != y.pair.birth) return x.pair.birth < y.pair.birth;
    return x.pair.birth_cell < y.pair.birth_cell;
  });
  return out;
}

OneDimObjective one_dim_objective(std::span<const HoleRecord> holes, int max_holes, double rho_bar) {
  OneDimObjective out;
  if (max_holes < 0 || static_cast<int>(holes.size()) <= max_holes) return out;
  const std::size_t excess = holes.size() - static_cast<std::size_t>(max_holes);
  for (std::size_t k = 0; k < excess; ++k) {
    const auto& p = holes[k].pair;
    accumulate(p, classify_region(p, rho_bar, Phase::Void), Phase::Void, out.value, out.terms);
  }
  return out;
}

std::vector<double> topo_gradient(std::span<const TopoGradientTerm> terms, const RasterBasisCache& cache,
                                  int num_coeffs) {
  std::vector<double> g(num_coeffs, 0.0);
  for (const auto& t : terms) {
    const double s = t.phase == Phase::Solid ? -t.sign : t.sign;
    const SparseRow& row = cache.row(t.cell);
    for (std::size_t k = 0; k < row.index.size(); ++k) g[row.index[k]] += s * row.value[k];
  }
  return g;
}

}  // namespace topoforge
