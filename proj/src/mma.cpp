#include "topoforge/mma.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "topoforge/error.hpp"

namespace topoforge {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct Subproblem {
  int m = 0, n = 0;
  VectorXd low, upp, alfa, beta, p0, q0, b;
  MatrixXd P, Q;  // m x n
  double a0 = 1.0;
  VectorXd a, c, d;
};

struct SubSolution {
  VectorXd x;
  double residual = 0.0;
  int iterations = 0;
};

// Primal-dual interior point on the separable convex MMA subproblem.
SubSolution solve_subproblem(const Subproblem& sp, double epsimin) {
  const int m = sp.m, n = sp.n;
  const VectorXd een = VectorXd::Ones(n), eem = VectorXd::Ones(m);
  double epsi = 1.0;
  VectorXd x = 0.5 * (sp.alfa + sp.beta);
  VectorXd y = eem, lam = eem, s = eem;
  double z = 1.0, zet = 1.0;
  VectorXd xsi = (x - sp.alfa).cwiseInverse().cwiseMax(1.0);
  VectorXd eta = (sp.beta - x).cwiseInverse().cwiseMax(1.0);
  VectorXd mu = (0.5 * sp.c).cwiseMax(1.0);

  SubSolution out;
  double residumax = 0.0;

  auto residual = [&](const VectorXd& x, const VectorXd& y, double z, const VectorXd& lam, const VectorXd& xsi,
                      const VectorXd& eta, const VectorXd& mu, double zet, const VectorXd& s, double& rmax) {
    const VectorXd ux1 = sp.upp - x, xl1 = x - sp.low;
    const VectorXd ux2 = ux1.cwiseProduct(ux1), xl2 = xl1.cwiseProduct(xl1);
    const VectorXd plam = sp.p0 + sp.P.transpose() * lam;
    const VectorXd qlam = sp.q0 + sp.Q.transpose() * lam;
    const VectorXd gvec = sp.P * ux1.cwiseInverse() + sp.Q * xl1.cwiseInverse();
    const VectorXd dpsidx = plam.cwiseQuotient(ux2) - qlam.cwiseQuotient(xl2);
    VectorXd r(3 * n + 4 * m + 2);
    int k = 0;
    auto put = [&](const VectorXd& v) {
      r.segment(k, v.size()) = v;
      k += static_cast<int>(v.size());
    };
    put(dpsidx - xsi + eta);
    put(sp.c + sp.d.cwiseProduct(y) - mu - lam);
    r[k++] = sp.a0 - zet - sp.a.dot(lam);
    put(gvec - sp.a * z - y + s - sp.b);
    put(xsi.cwiseProduct(x - sp.alfa) - epsi * een);
    put(eta.cwiseProduct(sp.beta - x) - epsi * een);
    put(mu.cwiseProduct(y) - epsi * eem);
    r[k++] = zet * z - epsi;
    put(lam.cwiseProduct(s) - epsi * eem);
    rmax = r.cwiseAbs().maxCoeff();
    return r.norm();
  };

  while (epsi > epsimin) {
    double residunorm = residual(x, y, z, lam, xsi, eta, mu, zet, s, residumax);
    int inner = 0;
    while (residumax > 0.9 * epsi && inner < 200) {
      ++inner;
      ++out.iterations;
      const VectorXd ux1 = sp.upp - x, xl1 = x - sp.low;
      const VectorXd ux2 = ux1.cwiseProduct(ux1), xl2 = xl1.cwiseProduct(xl1);
      const VectorXd ux3 = ux1.cwiseProduct(ux2), xl3 = xl1.cwiseProduct(xl2);
      const VectorXd uxinv1 = ux1.cwiseInverse(), xlinv1 = xl1.cwiseInverse();
      const VectorXd uxinv2 = ux2.cwiseInverse(), xlinv2 = xl2.cwiseInverse();
      const VectorXd plam = sp.p0 + sp.P.transpose() * lam;
      const VectorXd qlam = sp.q0 + sp.Q.transpose() * lam;
      const VectorXd gvec = sp.P * uxinv1 + sp.Q * xlinv1;
      const MatrixXd GG = sp.P * uxinv2.asDiagonal() - sp.Q * xlinv2.asDiagonal();
      const VectorXd dpsidx = plam.cwiseQuotient(ux2) - qlam.cwiseQuotient(xl2);
      const VectorXd xa = x - sp.alfa, bx_ = sp.beta - x;
      const VectorXd delx = dpsidx - epsi * xa.cwiseInverse() + epsi * bx_.cwiseInverse();
      const VectorXd dely = sp.c + sp.d.cwiseProduct(y) - lam - epsi * y.cwiseInverse();
      const double delz = sp.a0 - sp.a.dot(lam) - epsi / z;
      const VectorXd dellam = gvec - sp.a * z - y - sp.b + epsi * lam.cwiseInverse();
      VectorXd diagx = plam.cwiseQuotient(ux3) + qlam.cwiseQuotient(xl3);
      diagx = 2.0 * diagx + xsi.cwiseQuotient(xa) + eta.cwiseQuotient(bx_);
      const VectorXd diagxinv = diagx.cwiseInverse();
      const VectorXd diagy = sp.d + mu.cwiseQuotient(y);
      const VectorXd diagyinv = diagy.cwiseInverse();
      const VectorXd diaglam = s.cwiseQuotient(lam);
      const VectorXd diaglamyi = diaglam + diagyinv;

      VectorXd dx, dlam;
      double dz = 0.0;
      if (m < n) {
        const VectorXd blam = dellam + dely.cwiseQuotient(diagy) - GG * delx.cwiseQuotient(diagx);
        MatrixXd AA(m + 1, m + 1);
        AA.topLeftCorner(m, m) = MatrixXd(diaglamyi.asDiagonal()) + GG * diagxinv.asDiagonal() * GG.transpose();
        AA.topRightCorner(m, 1) = sp.a;
        AA.bottomLeftCorner(1, m) = sp.a.transpose();
        AA(m, m) = -zet / z;
        VectorXd bb(m + 1);
        bb.head(m) = blam;
        bb[m] = delz;
        const VectorXd sol = AA.fullPivLu().solve(bb);
        dlam = sol.head(m);
        dz = sol[m];
        dx = -delx.cwiseQuotient(diagx) - (GG.transpose() * dlam).cwiseQuotient(diagx);
      } else {
        const VectorXd diaglamyiinv = diaglamyi.cwiseInverse();
        const VectorXd dellamyi = dellam + dely.cwiseQuotient(diagy);
        const VectorXd a_d = sp.a.cwiseQuotient(diaglamyi);
        MatrixXd AA(n + 1, n + 1);
        AA.topLeftCorner(n, n) =
            MatrixXd(diagx.asDiagonal()) + GG.transpose() * diaglamyiinv.asDiagonal() * GG;
        const VectorXd axz = -GG.transpose() * a_d;
        AA.topRightCorner(n, 1) = axz;
        AA.bottomLeftCorner(1, n) = axz.transpose();
        AA(n, n) = zet / z + sp.a.dot(a_d);
        VectorXd bb(n + 1);
        bb.head(n) = -(delx + GG.transpose() * dellamyi.cwiseQuotient(diaglamyi));
        bb[n] = -(delz - sp.a.dot(dellamyi.cwiseQuotient(diaglamyi)));
        const VectorXd sol = AA.fullPivLu().solve(bb);
        dx = sol.head(n);
        dz = sol[n];
        dlam = (GG * dx).cwiseQuotient(diaglamyi) - dz * a_d + dellamyi.cwiseQuotient(diaglamyi);
      }
      const VectorXd dy = -dely.cwiseQuotient(diagy) + dlam.cwiseQuotient(diagy);
      const VectorXd dxsi = -xsi + epsi * xa.cwiseInverse() - xsi.cwiseProduct(dx).cwiseQuotient(xa);
      const VectorXd deta = -eta + epsi * bx_.cwiseInverse() + eta.cwiseProduct(dx).cwiseQuotient(bx_);
      const VectorXd dmu = -mu + epsi * y.cwiseInverse() - mu.cwiseProduct(dy).cwiseQuotient(y);
      const double dzet = -zet + epsi / z - zet * dz / z;
      const VectorXd ds = -s + epsi * lam.cwiseInverse() - s.cwiseProduct(dlam).cwiseQuotient(lam);

      // Fraction-to-boundary step length.
      double stm = 1.0;
      auto bound = [&](const VectorXd& v, const VectorXd& dv) {
        for (Eigen::Index k = 0; k < v.size(); ++k) stm = std::max(stm, -1.01 * dv[k] / v[k]);
      };
      bound(y, dy);
      bound(lam, dlam);
      bound(xsi, dxsi);
      bound(eta, deta);
      bound(mu, dmu);
      bound(s, ds);
      stm = std::max({stm, -1.01 * dz / z, -1.01 * dzet / zet});
      for (int k = 0; k < n; ++k) stm = std::max({stm, -1.01 * dx[k] / xa[k], 1.01 * dx[k] / bx_[k]});
      double steg = 1.0 / stm;

      const VectorXd xold = x, yold = y, lamold = lam, xsiold = xsi, etaold = eta, muold = mu, sold = s;
      const double zold = z, zetold = zet;
      double resinew = 2.0 * residunorm;
      for (int itto = 0; itto < 50 && resinew > residunorm; ++itto) {
        x = xold + steg * dx;
        y = yold + steg * dy;
        z = zold + steg * dz;
        lam = lamold + steg * dlam;
        xsi = xsiold + steg * dxsi;
        eta = etaold + steg * deta;
        mu = muold + steg * dmu;
        zet = zetold + steg * dzet;
        s = sold + steg * ds;
        resinew = residual(x, y, z, lam, xsi, eta, mu, zet, s, residumax);
        steg /= 2.0;
      }
      residunorm = resinew;
    }
    out.residual = residumax;
    epsi *= 0.1;
  }
  out.x = x;
  return out;
}

void check_finite(const std::vector<double>& v, const char* what) {
  for (double x : v)
    if (!std::isfinite(x)) fail(ErrorCode::Numeric, std::string("MMA: non-finite ") + what);
}

}  // namespace

std::vector<double> mma_step(const MmaProblem& pb, MmaState& st, const MmaSettings& set) {
  const std::size_t n_all = pb.x.size();
  const std::size_t m = pb.g.size();
  if (pb.x_min.size() != n_all || pb.x_max.size() != n_all || pb.df0.size() != n_all || pb.dg.size() != m)
    fail(ErrorCode::InvalidArgument, "MMA: inconsistent problem dimensions");
  for (const auto& row : pb.dg)
    if (row.size() != n_all) fail(ErrorCode::InvalidArgument, "MMA: constraint gradient has wrong length");
  if (!std::isfinite(pb.f0)) fail(ErrorCode::Numeric, "MMA: non-finite objective");
  check_finite(pb.x, "design variables");
  check_finite(pb.df0, "objective gradient");
  check_finite(pb.g, "constraint values");
  for (const auto& row : pb.dg) check_finite(row, "constraint gradient");
  for (std::size_t j = 0; j < n_all; ++j)
    if (!(pb.x_min[j] <= pb.x[j] && pb.x[j] <= pb.x_max[j]))
      fail(ErrorCode::InvalidArgument, "MMA: design variable outside its bounds");

  std::vector<int> active;
  for (std::size_t j = 0; j < n_all; ++j)
    if (pb.x_max[j] > pb.x_min[j]) active.push_back(static_cast<int>(j));

  for (std::size_t i = 0; i < m; ++i) {
    if (pb.g[i] <= 0.0) continue;
    bool any = false;
    for (int j : active) any = any || pb.dg[i][j] != 0.0;
    if (!any) {
      std::ostringstream os;
      os << "MMA: constraint " << i << " is violated (g = " << pb.g[i] << ") but has zero gradient";
      fail(ErrorCode::Infeasible, os.str());
    }
  }

  if (st.lower.size() != n_all) {
    st.lower.assign(n_all, 0.0);
    st.upper.assign(n_all, 0.0);
    st.x_old1 = pb.x;
    st.x_old2 = pb.x;
    st.iter = 0;
  }
  ++st.iter;

  for (std::size_t j = 0; j < n_all; ++j) {
    const double x = pb.x[j];
    const double range = std::max(pb.x_max[j] - pb.x_min[j], 1e-5);
    if (st.iter <= 2) {
      st.lower[j] = x - set.asy_init * range;
      st.upper[j] = x + set.asy_init * range;
    } else {
      const double trend = (x - st.x_old1[j]) * (st.x_old1[j] - st.x_old2[j]);
      const double factor = trend > 0.0 ? set.asy_incr : (trend < 0.0 ? set.asy_decr : 1.0);
      st.lower[j] = x - factor * (st.x_old1[j] - st.lower[j]);
      st.upper[j] = x + factor * (st.upper[j] - st.x_old1[j]);
      st.lower[j] = std::clamp(st.lower[j], x - set.asy_max * range, x - set.asy_min * range);
      st.upper[j] = std::clamp(st.upper[j], x + set.asy_min * range, x + set.asy_max * range);
    }
  }

  std::vector<double> x_new = pb.x;
  const int n = static_cast<int>(active.size());
  if (n > 0) {
    Subproblem sp;
    sp.m = static_cast<int>(m);
    sp.n = n;
    sp.low.resize(n);
    sp.upp.resize(n);
    sp.alfa.resize(n);
    sp.beta.resize(n);
    sp.p0.resize(n);
    sp.q0.resize(n);
    sp.P.resize(sp.m, n);
    sp.Q.resize(sp.m, n);
    sp.b = VectorXd::Zero(sp.m);
    sp.a0 = set.a0;
    sp.a = VectorXd::Zero(sp.m);
    sp.c = VectorXd::Constant(sp.m, set.c);
    sp.d = VectorXd::Constant(sp.m, set.d);
    for (int k = 0; k < n; ++k) {
      const int j = active[k];
      const double x = pb.x[j];
      const double range = pb.x_max[j] - pb.x_min[j];
      const double L = st.lower[j], U = st.upper[j];
      sp.low[k] = L;
      sp.upp[k] = U;
      sp.alfa[k] = std::max({L + set.albefa * (x - L), x - set.move * range, pb.x_min[j]});
      sp.beta[k] = std::min({U - set.albefa * (U - x), x + set.move * range, pb.x_max[j]});
      const double ux1 = U - x, xl1 = x - L;
      const double ux2 = ux1 * ux1, xl2 = xl1 * xl1;
      const double xmami = std::max(range, 1e-5);
      auto split = [&](double df, double& p, double& q) {
        p = std::max(df, 0.0);
        q = std::max(-df, 0.0);
        const double pq = 0.001 * (p + q) + set.raa0 / xmami;
        p = (p + pq) * ux2;
        q = (q + pq) * xl2;
      };
      split(pb.df0[j], sp.p0[k], sp.q0[k]);
      for (std::size_t i = 0; i < m; ++i) {
        double p, q;
        split(pb.dg[i][j], p, q);
        sp.P(i, k) = p;
        sp.Q(i, k) = q;
        sp.b[i] += p / ux1 + q / xl1;
      }
    }
    for (std::size_t i = 0; i < m; ++i) sp.b[i] -= pb.g[i];

    const SubSolution sol = solve_subproblem(sp, 0.1 * set.kkt_tol);
    st.kkt_residual = sol.residual;
    st.subproblem_iterations = sol.iterations;
    for (int k = 0; k < n; ++k) {
      const int j = active[k];
      x_new[j] = std::clamp(sol.x[k], sp.alfa[k], sp.beta[k]);
    }
  } else {
    st.kkt_residual = 0.0;
    st.subproblem_iterations = 0;
  }

  st.x_old2 = st.x_old1;
  st.x_old1 = pb.x;
  return x_new;
}

}  // namespace topoforge
