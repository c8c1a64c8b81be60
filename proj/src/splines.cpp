#include "topoforge/splines.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <sstream>

#include "topoforge/error.hpp"

namespace topoforge {

KnotVector::KnotVector(std::vector<double> knots, int degree) : knots_(std::move(knots)), degree_(degree) {
  if (degree_ < 0) fail(ErrorCode::InvalidArgument, "knot vector: negative degree");
  if (!std::is_sorted(knots_.begin(), knots_.end()))
    fail(ErrorCode::InvalidArgument, "knot vector: knots must be non-decreasing");
  if (num_basis() < 1) fail(ErrorCode::InvalidArgument, "knot vector: fewer than p+2 knots");
  if (!(domain_end() > domain_begin())) fail(ErrorCode::InvalidArgument, "knot vector: empty parameter domain");
}

KnotVector KnotVector::open_uniform(int degree, int num_basis, double lo, double hi) {
  if (num_basis < degree + 1)
    fail(ErrorCode::InvalidArgument, "open knot vector needs at least p+1 basis functions");
  const int spans = num_basis - degree;
  std::vector<double> knots;
  knots.reserve(num_basis + degree + 1);
  for (int k = 0; k < degree; ++k) knots.push_back(lo);
  for (int k = 0; k <= spans; ++k) knots.push_back(k == spans ? hi : lo + (hi - lo) * k / spans);
  for (int k = 0; k < degree; ++k) knots.push_back(hi);
  return KnotVector(std::move(knots), degree);
}

bool KnotVector::is_open() const {
  const int n = num_basis();
  for (int k = 1; k <= degree_; ++k) {
    if (knots_[k] != knots_[0]) return false;
    if (knots_[n + k] != knots_[n]) return false;
  }
  return true;
}

void KnotVector::check_domain(double xi) const {
  if (!(xi >= domain_begin() && xi <= domain_end())) {
    std::ostringstream os;
    os << "parameter " << xi << " outside knot domain [" << domain_begin() << ", " << domain_end() << "]";
    fail(ErrorCode::Domain, os.str());
  }
}

int KnotVector::find_span(double xi) const {
  check_domain(xi);
  const int n = num_basis();
  if (xi >= domain_end()) {
    int k = n - 1;
    while (k > degree_ && knots_[k] == knots_[k + 1]) --k;
    return k;
  }
  // Largest k in [p, n-1] with knots[k] <= xi.
  auto first = knots_.begin() + degree_;
  auto last = knots_.begin() + n + 1;
  auto it = std::upper_bound(first, last, xi);
  return static_cast<int>(it - knots_.begin()) - 1;
}

std::vector<int> KnotVector::element_spans() const {
  std::vector<int> spans;
  for (int k = degree_; k < num_basis(); ++k)
    if (knots_[k + 1] > knots_[k]) spans.push_back(k);
  return spans;
}

std::vector<double> KnotVector::greville() const {
  std::vector<double> g(num_basis());
  for (int i = 0; i < num_basis(); ++i) {
    if (degree_ == 0) {
      g[i] = 0.5 * (knots_[i] + knots_[i + 1]);
      continue;
    }
    double s = 0.0;
    for (int k = 1; k <= degree_; ++k) s += knots_[i + k];
    g[i] = s / degree_;
  }
  return g;
}

BasisRow bspline_basis_row(const KnotVector& kv, double xi, bool with_derivs) {
  const int p = kv.degree();
  const int span = kv.find_span(xi);
  const auto& U = kv.knots();

  // Triangular table of basis values (upper triangle) and knot differences (lower).
  std::vector<double> ndu((p + 1) * (p + 1), 0.0);
  auto at = [&](int r, int c) -> double& { return ndu[r * (p + 1) + c]; };
  std::vector<double> left(p + 1), right(p + 1);
  at(0, 0) = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[j] = xi - U[span + 1 - j];
    right[j] = U[span + j] - xi;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      at(j, r) = right[r + 1] + left[j - r];
      const double temp = at(j, r) == 0.0 ? 0.0 : at(r, j - 1) / at(j, r);
      at(r, j) = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    at(j, j) = saved;
  }

  BasisRow row;
  row.first = span - p;
  row.values.resize(p + 1);
  for (int r = 0; r <= p; ++r) row.values[r] = at(r, p);
  if (with_derivs) {
    row.derivs.assign(p + 1, 0.0);
    if (p > 0) {
      for (int r = 0; r <= p; ++r) {
        double d = 0.0;
        if (r >= 1 && at(p, r - 1) != 0.0) d += at(r - 1, p - 1) / at(p, r - 1);
        if (r <= p - 1 && at(p, r) != 0.0) d -= at(r, p - 1) / at(p, r);
        row.derivs[r] = p * d;
      }
    }
  }
  return row;
}

double bspline_basis(const KnotVector& kv, int i, double xi) {
  if (i < 0 || i >= kv.num_basis()) fail(ErrorCode::InvalidArgument, "basis index out of range");
  const BasisRow row = bspline_basis_row(kv, xi);
  const int k = i - row.first;
  return (k >= 0 && k <= kv.degree()) ? row.values[k] : 0.0;
}

double bspline_basis_derivative(const KnotVector& kv, int i, double xi) {
  if (i < 0 || i >= kv.num_basis()) fail(ErrorCode::InvalidArgument, "basis index out of range");
  if (kv.degree() == 0) {
    kv.check_domain(xi);
    return 0.0;
  }
  const BasisRow row = bspline_basis_row(kv, xi, true);
  const int k = i - row.first;
  return (k >= 0 && k <= kv.degree()) ? row.derivs[k] : 0.0;
}

RationalBasis rational_basis(const KnotVector& ku, const KnotVector& kv, const Grid2D<double>& weights,
                             double u, double v, bool with_derivs) {
  const BasisRow bu = bspline_basis_row(ku, u, with_derivs);
  const BasisRow bv = bspline_basis_row(kv, v, with_derivs);
  RationalBasis rb;
  rb.first_u = bu.first;
  rb.first_v = bv.first;
  rb.count_u = static_cast<int>(bu.values.size());
  rb.count_v = static_cast<int>(bv.values.size());
  const int n = rb.size();
  rb.values.resize(n);

  double W = 0.0, Wu = 0.0, Wv = 0.0;
  for (int a = 0; a < rb.count_u; ++a) {
    for (int b = 0; b < rb.count_v; ++b) {
      const double w = weights(rb.first_u + a, rb.first_v + b);
      const double wn = w * bu.values[a] * bv.values[b];
      rb.values[a * rb.count_v + b] = wn;
      W += wn;
      if (with_derivs) {
        Wu += w * bu.derivs[a] * bv.values[b];
        Wv += w * bu.values[a] * bv.derivs[b];
      }
    }
  }
  if (!(W > 0.0)) fail(ErrorCode::Numeric, "rational basis: vanishing weight function");
  for (double& r : rb.values) r /= W;

  if (with_derivs) {
    rb.du.resize(n);
    rb.dv.resize(n);
    for (int a = 0; a < rb.count_u; ++a) {
      for (int b = 0; b < rb.count_v; ++b) {
        const int k = a * rb.count_v + b;
        const double w = weights(rb.first_u + a, rb.first_v + b);
        rb.du[k] = (w * bu.derivs[a] * bv.values[b] - rb.values[k] * Wu) / W;
        rb.dv[k] = (w * bu.values[a] * bv.derivs[b] - rb.values[k] * Wv) / W;
      }
    }
  }
  return rb;
}

NurbsSurface::NurbsSurface(KnotVector ku, KnotVector kv, Grid2D<Point2> control_points, Grid2D<double> weights)
    : ku_(std::move(ku)), kv_(std::move(kv)), cps_(std::move(control_points)), weights_(std::move(weights)) {
  if (cps_.rows() != ku_.num_basis() || cps_.cols() != kv_.num_basis())
    fail(ErrorCode::InvalidArgument, "NURBS surface: control grid does not match knot vectors");
  if (weights_.rows() != cps_.rows() || weights_.cols() != cps_.cols())
    fail(ErrorCode::InvalidArgument, "NURBS surface: weight grid does not match control grid");
  for (double w : weights_.data())
    if (!(w > 0.0)) fail(ErrorCode::InvalidArgument, "NURBS surface: weights must be positive");
}

Point2 nurbs_eval(const NurbsSurface& s, double u, double v) {
  const RationalBasis rb = rational_basis(s.knots_u(), s.knots_v(), s.weights(), u, v);
  Point2 p;
  for (int a = 0; a < rb.count_u; ++a)
    for (int b = 0; b < rb.count_v; ++b) {
      const double r = rb.values[a * rb.count_v + b];
      const Point2& c = s.control_points()(rb.first_u + a, rb.first_v + b);
      p.x += r * c.x;
      p.y += r * c.y;
    }
  return p;
}

Eigen::Matrix2d jacobian_from_basis(const NurbsSurface& s, const RationalBasis& rb) {
  Eigen::Matrix2d J = Eigen::Matrix2d::Zero();
  for (int a = 0; a < rb.count_u; ++a)
    for (int b = 0; b < rb.count_v; ++b) {
      const int k = a * rb.count_v + b;
      const Point2& c = s.control_points()(rb.first_u + a, rb.first_v + b);
      J(0, 0) += rb.du[k] * c.x;
      J(0, 1) += rb.dv[k] * c.x;
      J(1, 0) += rb.du[k] * c.y;
      J(1, 1) += rb.dv[k] * c.y;
    }
  return J;
}

Eigen::Matrix2d nurbs_jacobian(const NurbsSurface& s, double u, double v, double det_tol) {
  const RationalBasis rb = rational_basis(s.knots_u(), s.knots_v(), s.weights(), u, v, true);
  const Eigen::Matrix2d J = jacobian_from_basis(s, rb);
  if (!(J.determinant() > det_tol)) {
    std::ostringstream os;
    os << "singular geometry mapping at (" << u << ", " << v << "), det J = " << J.determinant();
    fail(ErrorCode::SingularGeometry, os.str());
  }
  return J;
}

NurbsSurface make_rectangle(const KnotVector& ku, const KnotVector& kv, double width, double height, double x0,
                            double y0) {
  const auto gu = ku.greville();
  const auto gv = kv.greville();
  const double u0 = ku.domain_begin(), du = ku.domain_end() - u0;
  const double v0 = kv.domain_begin(), dv = kv.domain_end() - v0;
  Grid2D<Point2> cps(ku.num_basis(), kv.num_basis());
  for (int i = 0; i < cps.rows(); ++i)
    for (int j = 0; j < cps.cols(); ++j)
      cps(i, j) = {x0 + width * (gu[i] - u0) / du, y0 + height * (gv[j] - v0) / dv};
  return NurbsSurface(ku, kv, std::move(cps), Grid2D<double>(cps.rows(), cps.cols(), 1.0));
}

}  // namespace topoforge
