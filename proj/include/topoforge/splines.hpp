#pragma once

#include <Eigen/Core>
#include <Eigen/LU>

#include <vector>

#include "topoforge/grid.hpp"

namespace topoforge {

/// Non-decreasing knot sequence together with the polynomial degree it carries.
class KnotVector {
 public:
  KnotVector(std::vector<double> knots, int degree);

  /// Open knot vector with `num_basis` functions and equally spaced interior knots on [lo, hi].
  static KnotVector open_uniform(int degree, int num_basis, double lo = 0.0, double hi = 1.0);

  int degree() const noexcept { return degree_; }
  int num_basis() const noexcept { return static_cast<int>(knots_.size()) - degree_ - 1; }
  const std::vector<double>& knots() const noexcept { return knots_; }
  double operator[](int k) const { return knots_[k]; }

  double domain_begin() const { return knots_[degree_]; }
  double domain_end() const { return knots_[num_basis()]; }

  /// First and last p+1 knots coincide.
  bool is_open() const;

  /// Index k of the knot span [knots[k], knots[k+1]) containing xi, p <= k < n. The right
  /// domain end maps onto the last non-empty span.
  int find_span(double xi) const;

  /// Span indices of all non-empty knot spans, i.e. the elements.
  std::vector<int> element_spans() const;

  /// Averages of p consecutive interior knots; the parametric "location" of each basis.
  std::vector<double> greville() const;

  /// Throws a domain error when xi lies outside [domain_begin, domain_end].
  void check_domain(double xi) const;

 private:
  std::vector<double> knots_;
  int degree_;
};

/// Nonzero B-spline values (and optionally first derivatives) at one parameter.
struct BasisRow {
  int first = 0;                ///< index of the first nonzero basis function
  std::vector<double> values;   ///< N_{first+k,p}(xi), k = 0..p
  std::vector<double> derivs;   ///< dN/dxi, empty unless requested
};

/// N_{i,p}(xi) by Cox-de Boor. The last basis closes the domain: it equals 1 at domain_end.
double bspline_basis(const KnotVector& kv, int i, double xi);

/// The p+1 potentially nonzero bases at xi, located by binary search over the knots.
BasisRow bspline_basis_row(const KnotVector& kv, double xi, bool with_derivs = false);

/// dN_{i,p}/dxi; zero for p = 0.
double bspline_basis_derivative(const KnotVector& kv, int i, double xi);

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// Tensor-product rational basis R_ij(u,v) restricted to its (p+1)x(q+1) nonzero block.
/// Entries are stored with the u-index slow: k = di * (q+1) + dj.
struct RationalBasis {
  int first_u = 0;
  int first_v = 0;
  int count_u = 0;
  int count_v = 0;
  std::vector<double> values;
  std::vector<double> du;  ///< dR/du, empty unless requested
  std::vector<double> dv;  ///< dR/dv, empty unless requested

  int size() const noexcept { return count_u * count_v; }
};

/// Rational basis of a tensor-product NURBS with the given weight grid (rows along u).
RationalBasis rational_basis(const KnotVector& ku, const KnotVector& kv, const Grid2D<double>& weights,
                             double u, double v, bool with_derivs = false);

/// Bivariate NURBS mapping from [u] x [v] parameter space into the plane.
class NurbsSurface {
 public:
  NurbsSurface(KnotVector ku, KnotVector kv, Grid2D<Point2> control_points, Grid2D<double> weights);

  const KnotVector& knots_u() const noexcept { return ku_; }
  const KnotVector& knots_v() const noexcept { return kv_; }
  const Grid2D<Point2>& control_points() const noexcept { return cps_; }
  const Grid2D<double>& weights() const noexcept { return weights_; }
  int count_u() const noexcept { return ku_.num_basis(); }
  int count_v() const noexcept { return kv_.num_basis(); }

 private:
  KnotVector ku_;
  KnotVector kv_;
  Grid2D<Point2> cps_;
  Grid2D<double> weights_;
};

Point2 nurbs_eval(const NurbsSurface& surface, double u, double v);

/// d(x,y)/d(u,v) with rows (x, y) and columns (u, v). Throws SingularGeometry when det <= tol.
Eigen::Matrix2d nurbs_jacobian(const NurbsSurface& surface, double u, double v, double det_tol = 1e-12);

/// Jacobian assembled from an already evaluated rational basis (no singularity check).
Eigen::Matrix2d jacobian_from_basis(const NurbsSurface& surface, const RationalBasis& basis);

/// Axis-aligned bilinear patch [x0, x0+width] x [y0, y0+height] with unit weights and control points
/// at the Greville abscissae, so the mapping is affine.
NurbsSurface make_rectangle(const KnotVector& ku, const KnotVector& kv, double width, double height,
                            double x0 = 0.0, double y0 = 0.0);

}  // namespace topoforge
