#include "topoforge/density_field.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "topoforge/error.hpp"

namespace topoforge {

DensityField::DensityField(KnotVector ku, KnotVector kv, Grid2D<double> weights, Grid2D<double> coeffs,
                           double rho_min)
    : ku_(std::move(ku)), kv_(std::move(kv)), weights_(std::move(weights)), coeffs_(std::move(coeffs)),
      rho_min_(rho_min) {
  if (coeffs_.rows() != ku_.num_basis() || coeffs_.cols() != kv_.num_basis())
    fail(ErrorCode::InvalidArgument, "density field: coefficient grid does not match knot vectors");
  if (weights_.rows() != coeffs_.rows() || weights_.cols() != coeffs_.cols())
    fail(ErrorCode::InvalidArgument, "density field: weight grid does not match coefficient grid");
  for (double w : weights_.data())
    if (!(w > 0.0)) fail(ErrorCode::InvalidArgument, "density field: weights must be positive");
  if (!(rho_min_ >= 0.0 && rho_min_ < 1.0)) fail(ErrorCode::InvalidArgument, "density field: rho_min outside [0,1)");
  set_coeffs(coeffs_.data());
}

void DensityField::set_coeffs(std::span<const double> flat) {
  if (flat.size() != coeffs_.size()) fail(ErrorCode::InvalidArgument, "density field: coefficient count mismatch");
  for (std::size_t k = 0; k < flat.size(); ++k) {
    if (!(flat[k] >= rho_min_ && flat[k] <= 1.0)) {
      std::ostringstream os;
      os << "density coefficient " << k << " = " << flat[k] << " outside [" << rho_min_ << ", 1]";
      fail(ErrorCode::Domain, os.str());
    }
  }
  if (flat.data() != coeffs_.data().data()) std::copy(flat.begin(), flat.end(), coeffs_.data().begin());
}

void DensityField::set_coeffs_clamped(std::span<const double> flat) {
  if (flat.size() != coeffs_.size()) fail(ErrorCode::InvalidArgument, "density field: coefficient count mismatch");
  for (std::size_t k = 0; k < flat.size(); ++k) {
    if (!std::isfinite(flat[k])) fail(ErrorCode::Numeric, "density field: non-finite coefficient");
    coeffs_.data()[k] = std::clamp(flat[k], rho_min_, 1.0);
  }
}

SparseRow basis_row_at(const DensityField& field, double u, double v) {
  const RationalBasis rb = rational_basis(field.knots_u(), field.knots_v(), field.weights(), u, v);
  SparseRow row;
  row.index.reserve(rb.size());
  row.value.reserve(rb.size());
  for (int a = 0; a < rb.count_u; ++a)
    for (int b = 0; b < rb.count_v; ++b) {
      row.index.push_back((rb.first_u + a) * field.count_v() + rb.first_v + b);
      row.value.push_back(rb.values[a * rb.count_v + b]);
    }
  return row;
}

double eval_density(const DensityField& field, double u, double v) {
  const SparseRow row = basis_row_at(field, u, v);
  const auto& c = field.coeffs().data();
  double rho = 0.0;
  for (std::size_t k = 0; k < row.index.size(); ++k) rho += row.value[k] * c[row.index[k]];
  return rho;
}

Grid2D<std::uint8_t> rasterize_mask(int res_u, int res_v, const DomainMask& domain) {
  if (res_u < 2 || res_v < 2) fail(ErrorCode::InvalidArgument, "raster resolution must be at least 2 per axis");
  Grid2D<std::uint8_t> mask(res_u, res_v, 1);
  for (int a = 0; a < res_u; ++a)
    for (int b = 0; b < res_v; ++b)
      mask(a, b) = domain.inside((a + 0.5) / res_u, (b + 0.5) / res_v) ? 1 : 0;
  return mask;
}

RasterField rasterize(const DensityField& field, int res_u, int res_v, const DomainMask& domain) {
  RasterField r;
  r.mask = rasterize_mask(res_u, res_v, domain);
  r.values = Grid2D<double>(res_u, res_v, 0.0);
  for (int a = 0; a < res_u; ++a)
    for (int b = 0; b < res_v; ++b)
      if (r.mask(a, b)) r.values(a, b) = eval_density(field, r.cell_u(a), r.cell_v(b));
  return r;
}

BinaryImage binarize(const RasterField& raster, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) fail(ErrorCode::InvalidArgument, "threshold must lie in (0,1)");
  BinaryImage img{Grid2D<std::uint8_t>(raster.res_u(), raster.res_v(), 0), raster.mask};
  for (std::size_t k = 0; k < img.bits.size(); ++k)
    img.bits.data()[k] = (raster.mask.data()[k] && raster.values.data()[k] >= threshold) ? 1 : 0;
  return img;
}

RasterBasisCache::RasterBasisCache(const DensityField& field, int res_u, int res_v, const DomainMask& domain)
    : mask_(rasterize_mask(res_u, res_v, domain)), rows_(mask_.size()) {
  for (int a = 0; a < res_u; ++a)
    for (int b = 0; b < res_v; ++b)
      if (mask_(a, b)) rows_[mask_.index(a, b)] = basis_row_at(field, (a + 0.5) / res_u, (b + 0.5) / res_v);
}

RasterField RasterBasisCache::rasterize(const DensityField& field) const {
  RasterField r{Grid2D<double>(res_u(), res_v(), 0.0), mask_};
  const auto& c = field.coeffs().data();
  for (std::size_t k = 0; k < rows_.size(); ++k) {
    if (!mask_.data()[k]) continue;
    const SparseRow& row = rows_[k];
    double rho = 0.0;
    for (std::size_t t = 0; t < row.index.size(); ++t) rho += row.value[t] * c[row.index[t]];
    r.values.data()[k] = rho;
  }
  return r;
}

}  // namespace topoforge
