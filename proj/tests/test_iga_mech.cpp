#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "topoforge/config.hpp"
#include "topoforge/error.hpp"
#include "topoforge/iga_mech.hpp"

using namespace topoforge;

namespace {

DensityField field_on(const NurbsSurface& g, const Grid2D<double>& coeffs) {
  return DensityField(g.knots_u(), g.knots_v(), g.weights(), coeffs);
}

// Rectangle W x H clamped on the left edge with a downward load on the tip control point closest
// to mid-height.
struct Strip {
  NurbsSurface geometry;
  BoundaryConditions bc;
};

Strip strip(int nu, int nv, int p, double W, double H, double load) {
  Strip s{make_rectangle(KnotVector::open_uniform(p, nu), KnotVector::open_uniform(p, nv), W, H), {}};
  fix_edge(s.bc, s.geometry, Edge::UMin);
  const Cell c = nearest_control_point_on_edge(s.geometry, Edge::UMax, {W, H / 2});
  s.bc.loads.push_back({c.a, c.b, 1, -load});
  return s;
}

double compliance_of(const IgaModel& m, const DensityField& f, const Material& mat, const BoundaryConditions& bc) {
  auto st = assemble(m, f, mat);
  solve(st, m, bc);
  return st.compliance;
}

// Closed-form stiffness of a unit-square bilinear plane-stress element (nodes counter-clockwise
// from the lower left, x and y dofs interleaved).
Eigen::Matrix<double, 8, 8> bilinear_unit_element(double E, double nu) {
  const double k[8] = {0.5 - nu / 6,   0.125 + nu / 8, -0.25 - nu / 12, -0.125 + 3 * nu / 8,
                       -0.25 + nu / 12, -0.125 - nu / 8, nu / 6,          0.125 - 3 * nu / 8};
  const int idx[8][8] = {{0, 1, 2, 3, 4, 5, 6, 7}, {1, 0, 7, 6, 5, 4, 3, 2}, {2, 7, 0, 5, 6, 3, 4, 1},
                         {3, 6, 5, 0, 7, 2, 1, 4}, {4, 5, 6, 7, 0, 1, 2, 3}, {5, 4, 3, 2, 1, 0, 7, 6},
                         {6, 3, 4, 1, 2, 7, 0, 5}, {7, 2, 1, 4, 3, 6, 5, 0}};
  Eigen::Matrix<double, 8, 8> K;
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 8; ++c) K(r, c) = E / (1 - nu * nu) * k[idx[r][c]];
  return K;
}

}  // namespace

TEST_CASE("material") {
  Material m;
  m.poisson_ratio = 0.5;
  CHECK_THROWS_AS(m.validate(), Error);
  m = Material{};
  m.young_modulus = 2.0;
  m.poisson_ratio = 0.25;
  const auto D = m.plane_stress();
  CHECK(D(0, 0) == doctest::Approx(2.0 / (1 - 0.0625)));
  CHECK(D(0, 1) == doctest::Approx(0.5 / (1 - 0.0625)));
  CHECK(D(2, 2) == doctest::Approx(2.0 / (1 - 0.0625) * 0.375));
}

TEST_CASE("gauss-legendre rules integrate polynomials exactly") {
  std::vector<double> x, w;
  for (int n = 1; n <= 6; ++n) {
    gauss_legendre(n, x, w);
    for (int deg = 0; deg < 2 * n; ++deg) {
      double s = 0;
      for (int k = 0; k < n; ++k) s += w[k] * std::pow(x[k], deg);
      CHECK(s == doctest::Approx(deg % 2 ? 0.0 : 2.0 / (deg + 1)).epsilon(1e-13));
    }
  }
}

TEST_CASE("one bilinear element matches the closed-form stiffness") {
  const auto g = make_rectangle(KnotVector::open_uniform(1, 2), KnotVector::open_uniform(1, 2), 1.0, 1.0);
  const IgaModel model(g);
  Material mat;
  mat.young_modulus = 1.0;
  mat.poisson_ratio = 0.3;
  auto st = assemble(model, field_on(g, Grid2D<double>(2, 2, 1.0)), mat);
  const auto KE = bilinear_unit_element(1.0, 0.3);
  const Cell node[4] = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  const Eigen::MatrixXd K(st.K);
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 8; ++c) {
      const int gr = model.dof(node[r / 2].a, node[r / 2].b, r % 2);
      const int gc = model.dof(node[c / 2].a, node[c / 2].b, c % 2);
      CHECK(K(gr, gc) == doctest::Approx(KE(r, c)).epsilon(1e-12));
    }

  // clamp the left nodes, pull the lower right node down with unit force
  BoundaryConditions bc;
  fix_edge(bc, g, Edge::UMin);
  bc.loads.push_back({1, 0, 1, -1.0});
  solve(st, model, bc);
  const Eigen::Matrix4d Kr = KE.block<4, 4>(2, 2);
  const Eigen::Vector4d F(0, -1, 0, 0);
  const double c = 0.5 * F.dot(Kr.ldlt().solve(F));
  CHECK(st.compliance == doctest::Approx(c).epsilon(1e-10));
  CHECK(element_energy(st, model, mat) == doctest::Approx(c).epsilon(1e-10));
}

TEST_CASE("stiffness symmetry and rigid modes") {
  std::mt19937 rng(1);
  const auto s = strip(7, 5, 2, 3.0, 1.0, 1.0);
  const IgaModel model(s.geometry);
  auto st = assemble(model, field_on(s.geometry, oracle::random_grid(rng, 7, 5, 0.1, 1.0)), Material{});
  const Eigen::MatrixXd K(st.K);
  const double kmax = K.cwiseAbs().maxCoeff();
  CHECK((K - K.transpose()).cwiseAbs().maxCoeff() < 1e-9 * kmax);
  for (int d = 0; d < 2; ++d) {
    const Eigen::VectorXd t = rigid_translation(model.num_control_points(), d);
    CHECK((K * t).norm() < 1e-8 * K.norm() * t.norm());
  }

  BoundaryConditions none;
  none.loads.push_back({1, 1, 0, 1.0});
  try {
    solve(st, model, none);
    FAIL("expected a singular system");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SingularSystem);
    CHECK(std::string(e.what()).find("translation-x") != std::string::npos);
  }
}

TEST_CASE("solve linearity and energy identity") {
  const auto s = strip(9, 5, 2, 4.0, 1.0, 1.0);
  const IgaModel model(s.geometry);
  std::mt19937 rng(6);
  const auto f = field_on(s.geometry, oracle::random_grid(rng, 9, 5, 0.1, 1.0));
  Material mat;
  auto bc = s.bc;
  bc.loads[0].magnitude = 0.0;
  auto st = assemble(model, f, mat);
  solve(st, model, bc);
  CHECK(st.U.norm() == 0.0);
  CHECK(st.compliance == 0.0);

  const double c1 = compliance_of(model, f, mat, s.bc);
  bc.loads[0].magnitude = 2 * s.bc.loads[0].magnitude;
  CHECK(compliance_of(model, f, mat, bc) == doctest::Approx(4 * c1).epsilon(1e-10));
  CHECK(c1 > 0.0);

  auto st2 = assemble(model, f, mat);
  solve(st2, model, s.bc);
  // equilibrium on the free dofs; the fixed ones carry the support reactions
  Eigen::VectorXd res = st2.K * st2.U - st2.F;
  for (const auto& fx : s.bc.fixed) res[model.dof(fx.i, fx.j, fx.direction)] = 0.0;
  CHECK(res.norm() < 1e-10 * st2.F.norm());
  CHECK(element_energy(st2, model, mat) == doctest::Approx(st2.compliance).epsilon(1e-8));

  // adding material uniformly never increases compliance
  Grid2D<double> more = f.coeffs();
  for (double& x : more.data()) x = std::min(1.0, x + 0.05);
  CHECK(compliance_of(model, field_on(s.geometry, more), mat, s.bc) <= c1);
}

TEST_CASE("cantilever tip deflection against beam theory") {
  const double L = 10.0, H = 1.0, P = 1.0;
  const int nu = 42, nv = 6, p = 2;
  const auto g = make_rectangle(KnotVector::open_uniform(p, nu), KnotVector::open_uniform(p, nv), L, H);
  BoundaryConditions bc;
  fix_edge(bc, g, Edge::UMin);
  // consistent tip traction: each tip control point carries the integral of its edge basis
  const auto& t = g.knots_v().knots();
  for (int j = 0; j < nv; ++j) bc.loads.push_back({nu - 1, j, 1, -P * (t[j + p + 1] - t[j]) / (p + 1)});
  Material mat;
  mat.young_modulus = 1e5;
  mat.poisson_ratio = 0.0;
  const IgaModel model(g);
  const double c = compliance_of(model, field_on(g, Grid2D<double>(nu, nv, 1.0)), mat, bc);
  const double deflection = 2 * c / P;
  const double I = H * H * H / 12.0;
  const double beam = P * L * L * L / (3 * mat.young_modulus * I);
  CHECK(std::abs(deflection - beam) / beam < 0.05);
}

TEST_CASE("compliance sensitivity") {
  const auto s = strip(6, 6, 2, 2.0, 1.0, 1.0);
  const IgaModel model(s.geometry);
  std::mt19937 rng(13);
  DensityField f = field_on(s.geometry, oracle::random_grid(rng, 6, 6, 0.2, 0.9));
  Material mat;
  mat.young_modulus = 1.0;
  auto st = assemble(model, f, mat);
  solve(st, model, s.bc);
  const auto g = compliance_sensitivity(st, model, f, mat);
  for (double x : g) CHECK(x <= 0.0);

  const double h = 1e-6;
  const auto x0 = f.coeffs().data();
  for (int k = 0; k < 36; ++k) {
    auto xp = x0, xm = x0;
    xp[k] += h;
    xm[k] -= h;
    f.set_coeffs(xp);
    const double cp = compliance_of(model, f, mat, s.bc);
    f.set_coeffs(xm);
    const double cm = compliance_of(model, f, mat, s.bc);
    const double fd = (cp - cm) / (2 * h);
    CHECK(oracle::rel_err(g[k], fd, 1e-6 * st.compliance) < 1e-4);
  }

  // symmetric problem at full density: a beam loaded at mid-span and clamped at both ends
  const auto gs = make_rectangle(KnotVector::open_uniform(2, 9), KnotVector::open_uniform(2, 4), 4.0, 1.0);
  BoundaryConditions bs;
  fix_edge(bs, gs, Edge::UMin);
  fix_edge(bs, gs, Edge::UMax);
  bs.loads.push_back({4, 3, 1, -1.0});
  const IgaModel ms(gs);
  const auto fs = field_on(gs, Grid2D<double>(9, 4, 1.0));
  auto ss = assemble(ms, fs, mat);
  solve(ss, ms, bs);
  const auto sym = compliance_sensitivity(ss, ms, fs, mat);
  for (int i = 0; i < 9; ++i)
    for (int j = 0; j < 4; ++j) CHECK(sym[i * 4 + j] == doctest::Approx(sym[(8 - i) * 4 + j]).epsilon(1e-8));
}

TEST_CASE("volume and its sensitivity") {
  const auto s = strip(7, 6, 2, 3.0, 1.0, 1.0);
  const IgaModel model(s.geometry);
  const auto half = volume_and_sensitivity(model, field_on(s.geometry, Grid2D<double>(7, 6, 0.5)));
  CHECK(std::abs(half.fraction - 0.5) < 1e-10);
  double sum = 0;
  for (double x : half.gradient) sum += x;
  CHECK(std::abs(sum - 1.0) < 1e-10);

  // quarter annulus with a random field against a jittered sampling estimate weighted by |J|
  auto cfg = preset_config("quarter_annulus");
  cfg.control_u = 8;
  cfg.control_v = 6;
  const auto pb = build_problem(cfg);
  const IgaModel am(pb.geometry);
  std::mt19937 rng(99);
  DensityField f = field_on(pb.geometry, oracle::random_grid(rng, 8, 6, 0.1, 1.0));
  const auto vg = volume_and_sensitivity(am, f);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const int n = 400;
  double num = 0, den = 0;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      const double u = (a + U(rng)) / n, v = (b + U(rng)) / n;
      const double J = nurbs_jacobian(pb.geometry, u, v).determinant();
      num += eval_density(f, u, v) * J;
      den += J;
    }
  CHECK(std::abs(vg.fraction - num / den) < 1e-3);

  const double h = 1e-6;
  const auto x0 = f.coeffs().data();
  for (int k = 0; k < 48; k += 5) {
    auto xp = x0;
    xp[k] = std::min(1.0, xp[k] + h);
    const double step = xp[k] - x0[k];
    f.set_coeffs(xp);
    const double fd = (volume_and_sensitivity(am, f).fraction - vg.fraction) / step;
    CHECK(vg.gradient[k] == doctest::Approx(fd).epsilon(1e-4));
  }
}

TEST_CASE("masked region is excluded from the volume") {
  auto cfg = preset_config("l_beam");
  cfg.control_u = 12;
  cfg.control_v = 12;
  const auto pb = build_problem(cfg);
  const IgaModel model(pb.geometry, pb.domain);
  const double full = IgaModel(pb.geometry).domain_area();
  CHECK(model.domain_area() == doctest::Approx(full * 0.64).epsilon(1e-10));
  const auto v = volume_and_sensitivity(model, DensityField(pb.geometry.knots_u(), pb.geometry.knots_v(),
                                                            pb.geometry.weights(), Grid2D<double>(12, 12, 0.7)));
  CHECK(v.fraction == doctest::Approx(0.7).epsilon(1e-10));
}

TEST_CASE("quarter annulus area is exact") {
  const auto pb = build_problem(preset_config("quarter_annulus"));
  const double exact = std::numbers::pi * (10.0 * 10.0 - 5.0 * 5.0) / 4.0;
  CHECK(std::abs(IgaModel(pb.geometry).domain_area() - exact) / exact < 1e-8);
}

TEST_CASE("sensitivity filter") {
  std::mt19937 rng(5);
  const auto rho = oracle::random_grid(rng, 7, 7, 0.1, 1.0);
  std::vector<double> g(49);
  for (double& x : g) x = std::uniform_real_distribution<double>(-1, 0)(rng);
  CHECK(sensitivity_filter(g, rho, 0.0) == g);
  CHECK_THROWS_AS(sensitivity_filter(g, rho, -1.0), Error);

  const std::vector<double> flat(49, -2.5);
  for (double x : sensitivity_filter(flat, Grid2D<double>(7, 7, 0.6), 1.5)) CHECK(x == doctest::Approx(-2.5));

  // spike at the centre of a uniform density: neighbours receive (r - d) / sum of their weights
  std::vector<double> spike(49, 0.0);
  spike[3 * 7 + 3] = 1.0;
  const auto out = sensitivity_filter(spike, Grid2D<double>(7, 7, 0.5), 1.5);
  const double diag = 1.5 - std::numbers::sqrt2;
  const double wsum = 1.5 + 4 * 0.5 + 4 * diag;
  CHECK(out[3 * 7 + 3] == doctest::Approx(1.5 / wsum));
  CHECK(out[3 * 7 + 4] == doctest::Approx(0.5 / wsum));
  CHECK(out[2 * 7 + 3] == doctest::Approx(0.5 / wsum));
  CHECK(out[4 * 7 + 4] == doctest::Approx(diag / wsum));
  CHECK(out[3 * 7 + 5] == 0.0);
}
