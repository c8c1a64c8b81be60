#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "topoforge/density_field.hpp"
#include "topoforge/grid.hpp"

namespace topoforge {

/// Pixel adjacency. Eight-adjacency on top cells is what the T-construction induces (cells sharing
/// only a vertex are connected through it); four-adjacency is its digital-topology dual.
enum class Adjacency { Four = 4, Eight = 8 };

/// Filtration values on the top cells (pixels) of a 2-D cubical complex. Lower-dimensional faces
/// implicitly carry the minimum of their incident pixels. Masked-out pixels never enter.
struct FilteredImage {
  Grid2D<double> values;
  Grid2D<std::uint8_t> mask;  ///< 1 = member of the complex

  FilteredImage() = default;
  FilteredImage(Grid2D<double> v, Grid2D<std::uint8_t> m) : values(std::move(v)), mask(std::move(m)) {}
  /// Unmasked image.
  explicit FilteredImage(Grid2D<double> v)
      : values(std::move(v)), mask(values.rows(), values.cols(), 1) {}
};

/// A 0-dimensional persistence pair with its critical cells. Essential pairs have an infinite death
/// and no death cell.
struct PersistencePair {
  int dim = 0;
  double birth = 0.0;
  double death = 0.0;
  Cell birth_cell;
  std::optional<Cell> death_cell;

  bool essential() const noexcept { return !death_cell.has_value(); }
};

/// 0-dimensional sublevel persistence by union-find with the elder rule. Cells enter in order of
/// (value, a, b); on a merge the component whose minimum entered later dies at the merging cell.
/// Result is sorted by (birth, birth cell).
std::vector<PersistencePair> sublevel_persistence_0d(const FilteredImage& img, Adjacency adjacency);

/// Labels of the connected components of a set of pixels.
struct ComponentLabels {
  Grid2D<int> labels;           ///< -1 outside the set, otherwise 0..count-1 in scanline discovery order
  Grid2D<std::uint8_t> mask;    ///< domain mask the set lives in
  int count = 0;
};

/// BFS labeling of the in-mask pixels where `members` is nonzero.
ComponentLabels connected_components(const Grid2D<std::uint8_t>& members, const Grid2D<std::uint8_t>& mask,
                                     Adjacency adjacency);

/// Components of the solid phase (bits = 1).
ComponentLabels connected_components(const BinaryImage& bits, Adjacency adjacency);

/// True iff a pixel with this label lies on the raster edge or is 4-adjacent to a masked-out pixel.
bool touches_boundary(const ComponentLabels& labels, int label);

/// touches_boundary for every label in one sweep.
std::vector<std::uint8_t> boundary_flags(const ComponentLabels& labels);

struct BettiNumbers {
  int b0 = 0;
  int b1 = 0;
};

/// b0 = solid components (8-adjacency); b1 = enclosed void components (4-adjacency) that do not
/// touch the domain boundary.
BettiNumbers betti_numbers(const BinaryImage& bits);

}  // namespace topoforge
