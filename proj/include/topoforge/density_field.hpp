#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "topoforge/grid.hpp"
#include "topoforge/splines.hpp"

namespace topoforge {

/// Closed parameter-space rectangle [u0,u1] x [v0,v1].
struct ParamRect {
  double u0 = 0.0, u1 = 0.0, v0 = 0.0, v1 = 0.0;
  bool contains(double u, double v) const { return u >= u0 && u <= u1 && v >= v0 && v <= v1; }
};

/// Physical design domain as the unit parameter square minus excluded rectangles.
struct DomainMask {
  std::vector<ParamRect> excluded;

  bool inside(double u, double v) const {
    for (const auto& r : excluded)
      if (r.contains(u, v)) return false;
    return true;
  }
  bool full() const noexcept { return excluded.empty(); }
};

/// Sparse row over the flattened control grid (flat = i * count_v + j).
struct SparseRow {
  std::vector<int> index;
  std::vector<double> value;
};

/// Density rho(u,v) = sum_ij R_ij(u,v) rho_ij on a NURBS basis with fixed weights. The control
/// coefficients rho_ij are the design variables.
class DensityField {
 public:
  DensityField(KnotVector ku, KnotVector kv, Grid2D<double> weights, Grid2D<double> coeffs, double rho_min = 0.1);

  const KnotVector& knots_u() const noexcept { return ku_; }
  const KnotVector& knots_v() const noexcept { return kv_; }
  const Grid2D<double>& weights() const noexcept { return weights_; }
  const Grid2D<double>& coeffs() const noexcept { return coeffs_; }
  double rho_min() const noexcept { return rho_min_; }
  int count_u() const noexcept { return coeffs_.rows(); }
  int count_v() const noexcept { return coeffs_.cols(); }
  int num_coeffs() const noexcept { return static_cast<int>(coeffs_.size()); }

  /// Replaces the coefficients; each must lie in [rho_min, 1].
  void set_coeffs(std::span<const double> flat);

  /// Same, projecting each value onto [rho_min, 1] first.
  void set_coeffs_clamped(std::span<const double> flat);

 private:
  KnotVector ku_;
  KnotVector kv_;
  Grid2D<double> weights_;
  Grid2D<double> coeffs_;
  double rho_min_;
};

double eval_density(const DensityField& field, double u, double v);

/// d rho(u,v) / d rho_ij, i.e. the rational basis values R_ij(u,v).
SparseRow basis_row_at(const DensityField& field, double u, double v);

/// Density sampled at cell centres ((a+0.5)/R_u, (b+0.5)/R_v) of the unit parameter square.
struct RasterField {
  Grid2D<double> values;
  Grid2D<std::uint8_t> mask;  ///< 1 = inside the design domain

  int res_u() const noexcept { return values.rows(); }
  int res_v() const noexcept { return values.cols(); }
  double cell_u(int a) const { return (a + 0.5) / res_u(); }
  double cell_v(int b) const { return (b + 0.5) / res_v(); }
};

/// Solid/void bits of a raster: 1 where rho >= threshold.
struct BinaryImage {
  Grid2D<std::uint8_t> bits;
  Grid2D<std::uint8_t> mask;
};

Grid2D<std::uint8_t> rasterize_mask(int res_u, int res_v, const DomainMask& domain);

RasterField rasterize(const DensityField& field, int res_u, int res_v, const DomainMask& domain = {});

BinaryImage binarize(const RasterField& raster, double threshold);

/// Basis rows at every in-domain cell centre of a fixed raster. The knot vectors and weights of a
/// field never change during optimization, so rasterization and gradient pull-back reduce to
/// sparse dot products against this cache.
class RasterBasisCache {
 public:
  RasterBasisCache(const DensityField& field, int res_u, int res_v, const DomainMask& domain = {});

  int res_u() const noexcept { return mask_.rows(); }
  int res_v() const noexcept { return mask_.cols(); }
  const Grid2D<std::uint8_t>& mask() const noexcept { return mask_; }
  const SparseRow& row(Cell c) const { return rows_[mask_.index(c.a, c.b)]; }

  RasterField rasterize(const DensityField& field) const;

 private:
  Grid2D<std::uint8_t> mask_;
  std::vector<SparseRow> rows_;
};

}  // namespace topoforge
