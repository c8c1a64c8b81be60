#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <span>
#include <vector>

#include "topoforge/density_field.hpp"
#include "topoforge/splines.hpp"

namespace topoforge {

struct Material {
  double young_modulus = 1.9e11;  ///< Pa
  double poisson_ratio = 0.3;
  double penalty = 3.0;           ///< SIMP exponent

  void validate() const;
  /// Plane-stress constitutive matrix for unit density, Voigt order (xx, yy, xy).
  Eigen::Matrix3d plane_stress() const;

  friend bool operator==(const Material&, const Material&) = default;
};

/// A displacement component of one control point held at zero.
struct FixedDof {
  int i = 0, j = 0;
  int direction = 0;  ///< 0 = x, 1 = y
};

/// A concentrated force acting on one control point (N).
struct PointLoad {
  int i = 0, j = 0;
  int direction = 0;
  double magnitude = 0.0;
};

struct BoundaryConditions {
  std::vector<FixedDof> fixed;
  std::vector<PointLoad> loads;
};

enum class Edge { UMin, UMax, VMin, VMax };

/// Clamps both displacement components of every control point whose basis is nonzero on `edge`
/// and whose Greville location on that edge lies inside `domain`.
void fix_edge(BoundaryConditions& bc, const NurbsSurface& geometry, Edge edge, const DomainMask& domain = {});

/// Control point whose position is closest to `where`, optionally restricted to one edge.
Cell nearest_control_point(const NurbsSurface& geometry, Point2 where);
Cell nearest_control_point_on_edge(const NurbsSurface& geometry, Edge edge, Point2 where);

Eigen::VectorXd rigid_translation(int num_control_points, int direction);

/// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

/// Quadrature cache of a NURBS geometry: (p+1) x (q+1) Gauss points per knot span with the rational
/// basis, its physical gradient and the integration weight |J| w at each point.
class IgaModel {
 public:
  IgaModel(NurbsSurface geometry, DomainMask domain = {});

  const NurbsSurface& geometry() const noexcept { return geometry_; }
  const DomainMask& domain() const noexcept { return domain_; }
  int count_u() const noexcept { return geometry_.count_u(); }
  int count_v() const noexcept { return geometry_.count_v(); }
  int num_control_points() const noexcept { return count_u() * count_v(); }
  int num_dofs() const noexcept { return 2 * num_control_points(); }
  int dof(int i, int j, int direction) const noexcept { return 2 * (i * count_v() + j) + direction; }

  struct Element {
    int first_u = 0, first_v = 0;  ///< lower-left control point of the support block
    int qp_begin = 0, qp_end = 0;
  };
  const std::vector<Element>& elements() const noexcept { return elements_; }
  int basis_per_element() const noexcept { return stride_; }

  int num_quadrature_points() const noexcept { return static_cast<int>(dJw_.size()); }
  /// Flattened control-point index of basis slot k of an element.
  int control_index(const Element& e, int k) const {
    const int cv = geometry_.knots_v().degree() + 1;
    return (e.first_u + k / cv) * count_v() + e.first_v + k % cv;
  }
  std::span<const double> R(int qp) const { return {R_.data() + qp * stride_, static_cast<std::size_t>(stride_)}; }
  std::span<const double> dRdx(int qp) const { return {dx_.data() + qp * stride_, static_cast<std::size_t>(stride_)}; }
  std::span<const double> dRdy(int qp) const { return {dy_.data() + qp * stride_, static_cast<std::size_t>(stride_)}; }
  double jacobian_weight(int qp) const { return dJw_[qp]; }
  bool inside(int qp) const { return inside_[qp] != 0; }
  Point2 param(int qp) const { return params_[qp]; }

  /// Physical area of the in-domain region by quadrature.
  double domain_area() const;

 private:
  NurbsSurface geometry_;
  DomainMask domain_;
  int stride_ = 0;
  std::vector<Element> elements_;
  std::vector<double> R_, dx_, dy_, dJw_;
  std::vector<std::uint8_t> inside_;
  std::vector<Point2> params_;
};

/// Stiffness system and its solution. Density is evaluated from the NURBS field at every
/// quadrature point.
struct MechanicalState {
  Eigen::SparseMatrix<double> K;
  Eigen::VectorXd F;
  Eigen::VectorXd U;
  double compliance = 0.0;
  std::vector<double> qp_density;  ///< rho at each quadrature point (rho_min outside the domain)
};

/// K = sum of B^T D B |J| w scaled by E rho^p. Points outside the domain use rho_min^p.
MechanicalState assemble(const IgaModel& model, const DensityField& field, const Material& material);

/// Solves the constrained system in place: fills F and U and sets compliance = F^T U / 2.
void solve(MechanicalState& state, const IgaModel& model, const BoundaryConditions& bc);

/// dc/drho_ij = -1/2 p rho^(p-1) (eps^T D eps) R_ij |J| w summed over quadrature points.
std::vector<double> compliance_sensitivity(const MechanicalState& state, const IgaModel& model,
                                           const DensityField& field, const Material& material);

/// Strain energy 1/2 sum_e u_e^T k_e u_e evaluated element by element.
double element_energy(const MechanicalState& state, const IgaModel& model, const Material& material);

struct VolumeAndGradient {
  double fraction = 0.0;
  std::vector<double> gradient;
};

/// Volume fraction of the in-domain region and its gradient with respect to rho_ij.
VolumeAndGradient volume_and_sensitivity(const IgaModel& model, const DensityField& field);

/// Density-weighted sensitivity filter on the control grid. `radius` is measured in control-grid
/// spacings (radius 1.5 means 1.5h); weights are max(0, radius - distance).
std::vector<double> sensitivity_filter(std::span<const double> gradient, const Grid2D<double>& rho, double radius);

}  // namespace topoforge
