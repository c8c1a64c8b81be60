#include "topoforge/iga_mech.hpp"

#include <Eigen/LU>
#include <Eigen/SparseCholesky>

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "topoforge/error.hpp"

namespace topoforge {

void Material::validate() const {
  if (!(young_modulus > 0.0)) fail(ErrorCode::InvalidArgument, "material.young_modulus must be positive");
  if (!(poisson_ratio >= 0.0 && poisson_ratio < 0.5))
    fail(ErrorCode::InvalidArgument, "material.poisson_ratio must lie in [0, 0.5)");
  if (!(penalty >= 1.0)) fail(ErrorCode::InvalidArgument, "material.penalty (SIMP exponent) must be >= 1");
}

Eigen::Matrix3d Material::plane_stress() const {
  const double nu = poisson_ratio;
  const double c = young_modulus / (1.0 - nu * nu);
  Eigen::Matrix3d D;
  D << c, c * nu, 0.0,
       c * nu, c, 0.0,
       0.0, 0.0, c * (1.0 - nu) / 2.0;
  return D;
}

namespace {

std::vector<int> basis_nonzero_at(const KnotVector& kv, double xi) {
  const BasisRow row = bspline_basis_row(kv, xi);
  std::vector<int> idx;
  for (std::size_t k = 0; k < row.values.size(); ++k)
    if (row.values[k] != 0.0) idx.push_back(row.first + static_cast<int>(k));
  return idx;
}

}  // namespace

void fix_edge(BoundaryConditions& bc, const NurbsSurface& g, Edge edge, const DomainMask& domain) {
  const KnotVector& ku = g.knots_u();
  const KnotVector& kv = g.knots_v();
  const auto gu = ku.greville();
  const auto gv = kv.greville();
  auto unit_u = [&](double x) { return (x - ku.domain_begin()) / (ku.domain_end() - ku.domain_begin()); };
  auto unit_v = [&](double x) { return (x - kv.domain_begin()) / (kv.domain_end() - kv.domain_begin()); };
  auto add = [&](int i, int j) {
    bc.fixed.push_back({i, j, 0});
    bc.fixed.push_back({i, j, 1});
  };
  if (edge == Edge::UMin || edge == Edge::UMax) {
    const double u = edge == Edge::UMin ? ku.domain_begin() : ku.domain_end();
    for (int i : basis_nonzero_at(ku, u))
      for (int j = 0; j < g.count_v(); ++j)
        if (domain.inside(unit_u(u), unit_v(gv[j]))) add(i, j);
  } else {
    const double v = edge == Edge::VMin ? kv.domain_begin() : kv.domain_end();
    for (int j : basis_nonzero_at(kv, v))
      for (int i = 0; i < g.count_u(); ++i)
        if (domain.inside(unit_u(gu[i]), unit_v(v))) add(i, j);
  }
}

Cell nearest_control_point(const NurbsSurface& g, Point2 where) {
  Cell best{0, 0};
  double best_d = std::numeric_limits<double>::infinity();
  for (int i = 0; i < g.count_u(); ++i)
    for (int j = 0; j < g.count_v(); ++j) {
      const Point2 c = g.control_points()(i, j);
      const double d = (c.x - where.x) * (c.x - where.x) + (c.y - where.y) * (c.y - where.y);
      if (d < best_d) {
        best_d = d;
        best = {i, j};
      }
    }
  return best;
}

Cell nearest_control_point_on_edge(const NurbsSurface& g, Edge edge, Point2 where) {
  Cell best{0, 0};
  double best_d = std::numeric_limits<double>::infinity();
  auto consider = [&](int i, int j) {
    const Point2 c = g.control_points()(i, j);
    const double d = (c.x - where.x) * (c.x - where.x) + (c.y - where.y) * (c.y - where.y);
    if (d < best_d) {
      best_d = d;
      best = {i, j};
    }
  };
  switch (edge) {
    case Edge::UMin: for (int j = 0; j < g.count_v(); ++j) consider(0, j); break;
    case Edge::UMax: for (int j = 0; j < g.count_v(); ++j) consider(g.count_u() - 1, j); break;
    case Edge::VMin: for (int i = 0; i < g.count_u(); ++i) consider(i, 0); break;
    case Edge::VMax: for (int i = 0; i < g.count_u(); ++i) consider(i, g.count_v() - 1); break;
  }
  return best;
}

Eigen::VectorXd rigid_translation(int num_control_points, int direction) {
  Eigen::VectorXd t = Eigen::VectorXd::Zero(2 * num_control_points);
  for (int k = 0; k < num_control_points; ++k) t[2 * k + direction] = 1.0;
  return t;
}

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  if (n < 1) fail(ErrorCode::InvalidArgument, "Gauss-Legendre rule needs at least one point");
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  for (int k = 0; k < (n + 1) / 2; ++k) {
    double x = std::cos(std::numbers::pi * (k + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int m = 2; m <= n; ++m) {
        const double p2 = ((2.0 * m - 1.0) * x * p1 - (m - 1.0) * p0) / m;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    nodes[k] = -x;
    nodes[n - 1 - k] = x;
    weights[k] = weights[n - 1 - k] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
}

IgaModel::IgaModel(NurbsSurface geometry, DomainMask domain)
    : geometry_(std::move(geometry)), domain_(std::move(domain)) {
  const KnotVector& ku = geometry_.knots_u();
  const KnotVector& kv = geometry_.knots_v();
  const int p = ku.degree(), q = kv.degree();
  stride_ = (p + 1) * (q + 1);
  std::vector<double> xu, wu, xv, wv;
  gauss_legendre(p + 1, xu, wu);
  gauss_legendre(q + 1, xv, wv);
  const double u0 = ku.domain_begin(), uspan = ku.domain_end() - u0;
  const double v0 = kv.domain_begin(), vspan = kv.domain_end() - v0;

  for (int su : ku.element_spans()) {
    for (int sv : kv.element_spans()) {
      Element e;
      e.first_u = su - p;
      e.first_v = sv - q;
      e.qp_begin = num_quadrature_points();
      const double ua = ku[su], ub = ku[su + 1], va = kv[sv], vb = kv[sv + 1];
      for (int gi = 0; gi <= p; ++gi) {
        for (int gj = 0; gj <= q; ++gj) {
          const double u = 0.5 * (ua + ub) + 0.5 * (ub - ua) * xu[gi];
          const double v = 0.5 * (va + vb) + 0.5 * (vb - va) * xv[gj];
          const RationalBasis rb = rational_basis(ku, kv, geometry_.weights(), u, v, true);
          const Eigen::Matrix2d J = jacobian_from_basis(geometry_, rb);
          const double det = J.determinant();
          if (!(det > 1e-12)) {
            std::ostringstream os;
            os << "singular geometry mapping at quadrature point (" << u << ", " << v << "), det J = " << det;
            fail(ErrorCode::SingularGeometry, os.str());
          }
          const Eigen::Matrix2d Jinv = J.inverse();
          for (int k = 0; k < stride_; ++k) {
            R_.push_back(rb.values[k]);
            // [dR/dx dR/dy] = [dR/du dR/dv] J^{-1}
            dx_.push_back(rb.du[k] * Jinv(0, 0) + rb.dv[k] * Jinv(1, 0));
            dy_.push_back(rb.du[k] * Jinv(0, 1) + rb.dv[k] * Jinv(1, 1));
          }
          dJw_.push_back(det * wu[gi] * wv[gj] * 0.25 * (ub - ua) * (vb - va));
          inside_.push_back(domain_.inside((u - u0) / uspan, (v - v0) / vspan) ? 1 : 0);
          params_.push_back({u, v});
        }
      }
      e.qp_end = num_quadrature_points();
      elements_.push_back(e);
    }
  }
}

double IgaModel::domain_area() const {
  double a = 0.0;
  for (int qp = 0; qp < num_quadrature_points(); ++qp)
    if (inside(qp)) a += dJw_[qp];
  return a;
}

namespace {

void check_compatible(const IgaModel& model, const DensityField& field) {
  const NurbsSurface& g = model.geometry();
  if (field.knots_u().knots() != g.knots_u().knots() || field.knots_v().knots() != g.knots_v().knots() ||
      field.knots_u().degree() != g.knots_u().degree() || field.knots_v().degree() != g.knots_v().degree() ||
      !(field.weights() == g.weights()))
    fail(ErrorCode::InvalidArgument, "density field and geometry must share knot vectors and weights");
}

double density_at(const IgaModel& model, const DensityField& field, const IgaModel::Element& e, int qp) {
  if (!model.inside(qp)) return field.rho_min();
  const auto R = model.R(qp);
  const auto& c = field.coeffs().data();
  double rho = 0.0;
  for (int k = 0; k < model.basis_per_element(); ++k) rho += R[k] * c[model.control_index(e, k)];
  return rho;
}

// Strain (xx, yy, xy engineering) at a quadrature point from the element displacement.
Eigen::Vector3d strain_at(const IgaModel& model, const IgaModel::Element& e, int qp, const Eigen::VectorXd& U) {
  const auto dx = model.dRdx(qp);
  const auto dy = model.dRdy(qp);
  Eigen::Vector3d eps = Eigen::Vector3d::Zero();
  for (int k = 0; k < model.basis_per_element(); ++k) {
    const int cp = model.control_index(e, k);
    const double ux = U[2 * cp], uy = U[2 * cp + 1];
    eps[0] += dx[k] * ux;
    eps[1] += dy[k] * uy;
    eps[2] += dy[k] * ux + dx[k] * uy;
  }
  return eps;
}

}  // namespace

MechanicalState assemble(const IgaModel& model, const DensityField& field, const Material& material) {
  material.validate();
  check_compatible(model, field);
  const Eigen::Matrix3d D = material.plane_stress();
  const int nb = model.basis_per_element();
  const int ndof_e = 2 * nb;

  MechanicalState state;
  state.qp_density.resize(model.num_quadrature_points());
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(model.elements().size() * ndof_e * ndof_e);
  Eigen::MatrixXd ke(ndof_e, ndof_e);
  std::vector<int> gdof(ndof_e);

  for (const auto& e : model.elements()) {
    ke.setZero();
    for (int qp = e.qp_begin; qp < e.qp_end; ++qp) {
      const double rho = density_at(model, field, e, qp);
      state.qp_density[qp] = rho;
      const double s = std::pow(rho, material.penalty) * model.jacobian_weight(qp);
      const auto dx = model.dRdx(qp);
      const auto dy = model.dRdy(qp);
      for (int a = 0; a < nb; ++a) {
        for (int b = 0; b < nb; ++b) {
          ke(2 * a, 2 * b) += s * (dx[a] * D(0, 0) * dx[b] + dy[a] * D(2, 2) * dy[b]);
          ke(2 * a, 2 * b + 1) += s * (dx[a] * D(0, 1) * dy[b] + dy[a] * D(2, 2) * dx[b]);
          ke(2 * a + 1, 2 * b) += s * (dy[a] * D(1, 0) * dx[b] + dx[a] * D(2, 2) * dy[b]);
          ke(2 * a + 1, 2 * b + 1) += s * (dy[a] * D(1, 1) * dy[b] + dx[a] * D(2, 2) * dx[b]);
        }
      }
    }
    for (int a = 0; a < nb; ++a) {
      const int cp = model.control_index(e, a);
      gdof[2 * a] = 2 * cp;
      gdof[2 * a + 1] = 2 * cp + 1;
    }
    for (int r = 0; r < ndof_e; ++r)
      for (int c = 0; c < ndof_e; ++c) triplets.emplace_back(gdof[r], gdof[c], ke(r, c));
  }
  state.K.resize(model.num_dofs(), model.num_dofs());
  state.K.setFromTriplets(triplets.begin(), triplets.end());
  state.F = Eigen::VectorXd::Zero(model.num_dofs());
  state.U = Eigen::VectorXd::Zero(model.num_dofs());
  return state;
}

void solve(MechanicalState& state, const IgaModel& model, const BoundaryConditions& bc) {
  const int n = model.num_dofs();
  std::vector<std::uint8_t> fixed(n, 0);
  bool fixed_x = false, fixed_y = false;
  std::vector<int> fixed_points;
  for (const auto& f : bc.fixed) {
    if (f.i < 0 || f.j < 0 || f.i >= model.count_u() || f.j >= model.count_v() || f.direction < 0 || f.direction > 1)
      fail(ErrorCode::InvalidArgument, "boundary condition refers to a nonexistent control point");
    fixed[model.dof(f.i, f.j, f.direction)] = 1;
    (f.direction == 0 ? fixed_x : fixed_y) = true;
    fixed_points.push_back(f.i * model.count_v() + f.j);
  }
  std::sort(fixed_points.begin(), fixed_points.end());
  fixed_points.erase(std::unique(fixed_points.begin(), fixed_points.end()), fixed_points.end());
  auto rigid_modes = [&] {
    std::string modes;
    if (!fixed_x) modes += " translation-x";
    if (!fixed_y) modes += " translation-y";
    if (fixed_points.size() < 2) modes += " rotation";
    return modes.empty() ? std::string(" (none detected; check for void regions detached from supports)") : modes;
  };
  if (!fixed_x || !fixed_y || fixed_points.size() < 2)
    fail(ErrorCode::SingularSystem, "singular constrained system; unconstrained rigid modes:" + rigid_modes());

  state.F = Eigen::VectorXd::Zero(n);
  for (const auto& l : bc.loads) {
    if (l.i < 0 || l.j < 0 || l.i >= model.count_u() || l.j >= model.count_v() || l.direction < 0 || l.direction > 1)
      fail(ErrorCode::InvalidArgument, "load refers to a nonexistent control point");
    state.F[model.dof(l.i, l.j, l.direction)] += l.magnitude;
  }

  std::vector<int> reduced(n, -1);
  int m = 0;
  for (int d = 0; d < n; ++d)
    if (!fixed[d]) reduced[d] = m++;

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(state.K.nonZeros());
  for (int col = 0; col < state.K.outerSize(); ++col)
    for (Eigen::SparseMatrix<double>::InnerIterator it(state.K, col); it; ++it)
      if (reduced[it.row()] >= 0 && reduced[it.col()] >= 0) trip.emplace_back(reduced[it.row()], reduced[it.col()], it.value());
  Eigen::SparseMatrix<double> Kr(m, m);
  Kr.setFromTriplets(trip.begin(), trip.end());
  Eigen::VectorXd Fr(m);
  for (int d = 0; d < n; ++d)
    if (reduced[d] >= 0) Fr[reduced[d]] = state.F[d];

  state.U = Eigen::VectorXd::Zero(n);
  if (Fr.squaredNorm() > 0.0) {
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(Kr);
    if (ldlt.info() != Eigen::Success || (ldlt.vectorD().array() <= 0.0).any())
      fail(ErrorCode::SingularSystem, "singular constrained stiffness matrix; unconstrained rigid modes:" + rigid_modes());
    const Eigen::VectorXd Ur = ldlt.solve(Fr);
    if (!Ur.allFinite()) fail(ErrorCode::Numeric, "non-finite displacement solution");
    for (int d = 0; d < n; ++d)
      if (reduced[d] >= 0) state.U[d] = Ur[reduced[d]];
  }
  state.compliance = 0.5 * state.F.dot(state.U);
}

std::vector<double> compliance_sensitivity(const MechanicalState& state, const IgaModel& model,
                                           const DensityField& field, const Material& material) {
  check_compatible(model, field);
  const Eigen::Matrix3d D = material.plane_stress();
  std::vector<double> g(field.num_coeffs(), 0.0);
  for (const auto& e : model.elements()) {
    for (int qp = e.qp_begin; qp < e.qp_end; ++qp) {
      if (!model.inside(qp)) continue;
      const Eigen::Vector3d eps = strain_at(model, e, qp, state.U);
      const double energy = eps.dot(D * eps);
      const double rho = state.qp_density[qp];
      const double s = -0.5 * material.penalty * std::pow(rho, material.penalty - 1.0) * energy *
                       model.jacobian_weight(qp);
      const auto R = model.R(qp);
      for (int k = 0; k < model.basis_per_element(); ++k) g[model.control_index(e, k)] += s * R[k];
    }
  }
  return g;
}

double element_energy(const MechanicalState& state, const IgaModel& model, const Material& material) {
  const Eigen::Matrix3d D = material.plane_stress();
  double total = 0.0;
  for (const auto& e : model.elements())
    for (int qp = e.qp_begin; qp < e.qp_end; ++qp) {
      const Eigen::Vector3d eps = strain_at(model, e, qp, state.U);
      total += std::pow(state.qp_density[qp], material.penalty) * eps.dot(D * eps) * model.jacobian_weight(qp);
    }
  return 0.5 * total;
}

VolumeAndGradient volume_and_sensitivity(const IgaModel& model, const DensityField& field) {
  check_compatible(model, field);
  VolumeAndGradient out;
  out.gradient.assign(field.num_coeffs(), 0.0);
  double area = 0.0, mass = 0.0;
  for (const auto& e : model.elements()) {
    for (int qp = e.qp_begin; qp < e.qp_end; ++qp) {
      if (!model.inside(qp)) continue;
      const double w = model.jacobian_weight(qp);
      area += w;
      mass += w * density_at(model, field, e, qp);
      const auto R = model.R(qp);
      for (int k = 0; k < model.basis_per_element(); ++k) out.gradient[model.control_index(e, k)] += w * R[k];
    }
  }
  if (!(area > 0.0)) fail(ErrorCode::InvalidArgument, "design domain has zero area");
  out.fraction = mass / area;
  for (double& g : out.gradient) g /= area;
  return out;
}

std::vector<double> sensitivity_filter(std::span<const double> gradient, const Grid2D<double>& rho, double radius) {
  if (!(radius >= 0.0)) fail(ErrorCode::InvalidArgument, "filter radius must be non-negative");
  if (gradient.size() != rho.size()) fail(ErrorCode::InvalidArgument, "filter: gradient/density size mismatch");
  std::vector<double> out(gradient.begin(), gradient.end());
  if (radius <= 0.0) return out;
  const int reach = static_cast<int>(std::ceil(radius));
  const int rows = rho.rows(), cols = rho.cols();
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      double num = 0.0, wsum = 0.0;
      for (int k = std::max(0, i - reach); k <= std::min(rows - 1, i + reach); ++k)
        for (int l = std::max(0, j - reach); l <= std::min(cols - 1, j + reach); ++l) {
          const double w = radius - std::hypot(double(i - k), double(j - l));
          if (w <= 0.0) continue;
          num += w * rho(k, l) * gradient[rho.index(k, l)];
          wsum += w;
        }
      out[rho.index(i, j)] = num / (std::max(rho(i, j), 1e-3) * wsum);
    }
  }
  return out;
}

}  // namespace topoforge
