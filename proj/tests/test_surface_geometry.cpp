#include "test_support.hpp"
#include "willmore/surface_geometry.hpp"

#include <cmath>

using namespace willmore;
using test::pi;

namespace {

const HalfSphereGrid& grid() {
  static const HalfSphereGrid g(32, 64);
  return g;
}

Vec3 omega(double t, double p) { return {std::sin(t) * std::cos(p), std::sin(t) * std::sin(p), std::cos(t)}; }

double wave(double t, double p) { return 0.05 * std::cos(t) * std::cos(t) + 0.03 * std::sin(t) * std::cos(p) + 0.02 * std::sin(t) * std::sin(t) * std::sin(2 * p); }

// Radial graph of the unit half-sphere translated horizontally by s.
double translated(double t, double p, const Vec3& s) {
  const double c = omega(t, p).dot(s);
  return c - 1 + std::sqrt(1 - s.squaredNorm() + c * c);
}

double max_diff(const SphereFunction& a, const SphereFunction& b) { return (a - b).max_abs(); }

} // namespace

TEST_CASE("round half-sphere in flat space") {
  const auto& g = grid();
  const RadialGraphSurface s(SphereFunction::constant(g, 0.0), MetricField::euclidean());
  const auto gm = induced_metric(s);
  const auto nu = unit_normal(s);
  for (int i = 0; i < g.n_theta(); ++i)
    for (int j = 0; j < g.n_phi(); j += 7) {
      const double st = g.sin_theta()(i);
      const Mat2& m = gm[i * g.n_phi() + j];
      CHECK((m - Vec2(1.0, st * st).asDiagonal().toDenseMatrix()).norm() < 1e-13);
      CHECK((nu[i * g.n_phi() + j] + omega(g.theta_nodes()(i), g.phi(j))).norm() < 1e-13);
      CHECK(std::abs(s.node(i, j).h0_sq) < 1e-20);
    }
  CHECK((s.area_density().values().array() - 1.0).abs().maxCoeff() < 1e-13);
  CHECK((mean_curvature(s).values().array() - 2.0).abs().maxCoeff() < 1e-12);
  CHECK(willmore_operator(s).max_abs() < 1e-9);
  CHECK(area(s) == doctest::Approx(2 * pi).epsilon(1e-13));
  CHECK(willmore_energy(s) == doctest::Approx(2 * pi).epsilon(1e-13));

  const BoundaryTrace bt = boundary_trace(s);
  CHECK(bt.B.cwiseAbs().maxCoeff() < 1e-13);
  CHECK(bt.dH_deta.cwiseAbs().maxCoeff() < 1e-10);
  // the equator is a great circle, hence a geodesic of the surface; this is
  // also h^S(tau, tau) for the flat support plane
  CHECK(bt.kappa_g.cwiseAbs().maxCoeff() < 1e-12);
  CHECK(bt.h_tilde_nu_nu.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("dilations: metric, area, curvature, energy") {
  const auto& g = grid();
  for (double lam : {0.5, 1.7}) {
    const RadialGraphSurface s(SphereFunction::constant(g, lam - 1), MetricField::euclidean());
    const auto gm = induced_metric(s);
    const int k = 5 * g.n_phi() + 3;
    CHECK((gm[k] - lam * lam * Vec2(1.0, std::pow(g.sin_theta()(5), 2)).asDiagonal().toDenseMatrix()).norm() < 1e-12);
    CHECK((unit_normal(s)[k] + omega(g.theta_nodes()(5), g.phi(3))).norm() < 1e-12);
    CHECK(area(s) == doctest::Approx(2 * pi * lam * lam).epsilon(1e-13));
    CHECK((mean_curvature(s).values().array() - 2 / lam).abs().maxCoeff() < 1e-9);
    // the direct operator differentiates roundoff-level curvature twice; the
    // mixed form with the exact eta does not
    CHECK(willmore_operator(s).max_abs() < 1e-3);
    const SphereFunction eta = SphereFunction::constant(g, 2 / lam - 2);
    CHECK(willmore_operator_mixed(s, eta).max_abs() < 1e-9);
    CHECK(willmore_energy(s) == doctest::Approx(2 * pi).epsilon(1e-12));
  }
}

TEST_CASE("induced metric against a finite-difference embedding") {
  const auto& g = grid();
  const RadialGraphSurface s(SphereFunction::sample(g, wave), MetricField::euclidean());
  const auto gm = induced_metric(s);
  const double h = 1e-5;
  auto f = [](double t, double p) -> Vec3 { return (1 + wave(t, p)) * omega(t, p); };
  double err = 0;
  for (int i = 0; i < g.n_theta(); i += 3)
    for (int j = 0; j < g.n_phi(); j += 5) {
      const double t = g.theta_nodes()(i), p = g.phi(j);
      const Vec3 ft = (f(t + h, p) - f(t - h, p)) / (2 * h);
      const Vec3 fp = (f(t, p + h) - f(t, p - h)) / (2 * h);
      Mat2 ref;
      ref << ft.dot(ft), ft.dot(fp), fp.dot(ft), fp.dot(fp);
      err = std::max(err, (gm[i * g.n_phi() + j] - ref).cwiseAbs().maxCoeff());
    }
  CHECK(err < 1e-6);
}

TEST_CASE("unit normal under a perturbed metric") {
  const auto& g = grid();
  const MetricField metric = MetricField::from_function([](const Vec3& p) {
    Mat3 m = Mat3::Identity();
    m(0, 2) = m(2, 0) = 0.1 * p(0);
    m(1, 2) = m(2, 1) = 0.05 * p(1) * p(0);
    m(0, 0) += 0.02 * p(2) * p(2);
    return m;
  });
  const RadialGraphSurface s(SphereFunction::sample(g, wave), metric);
  double unit = 0, orth = 0;
  for (int i = 0; i < g.n_theta(); ++i)
    for (int j = 0; j < g.n_phi(); ++j) {
      const NodeGeometry& n = s.node(i, j);
      unit = std::max(unit, std::abs(n.nu.dot(n.ambient * n.nu) - 1));
      for (int a = 0; a < 2; ++a) orth = std::max(orth, std::abs(n.nu.dot(n.ambient * n.df[a])));
    }
  CHECK(unit < 1e-12);
  CHECK(orth < 1e-10);
}

TEST_CASE("linearised mean curvature and Willmore operator at the round state") {
  const auto& g = grid();
  const auto flat = MetricField::euclidean();
  const double eps = 1e-4;

  const SphereFunction y2 = harmonic(g, {2, 0});
  const SphereFunction dH = (1 / (2 * eps)) * (mean_curvature(RadialGraphSurface(eps * y2, flat)) -
                                               mean_curvature(RadialGraphSurface(-eps * y2, flat)));
  // H[w] = 2 - (Delta + 2) w + O(w^2), so the slope on Y20 is +4 Y20
  CHECK(max_diff(dH, 4.0 * y2) < 1e-5);

  const SphereFunction y4 = harmonic(g, {4, 0});
  const SphereFunction dW = (1 / (2 * eps)) * (willmore_operator(RadialGraphSurface(eps * y4, flat)) -
                                               willmore_operator(RadialGraphSurface(-eps * y4, flat)));
  // W[w] = -Delta (Delta + 2) w + O(w^2) = -lambda4 (lambda4 - 2) Y40 with lambda4 = 20
  CHECK(max_diff(dW, -360.0 * y4) <= 1e-4 * 360 * y4.max_abs());
}

TEST_CASE("Willmore energy is quadratic near the round state") {
  const auto& g = grid();
  const SphereFunction y = harmonic(g, {2, 0});
  const double e1 = willmore_energy(RadialGraphSurface(2e-2 * y, MetricField::euclidean())) - 2 * pi;
  const double e2 = willmore_energy(RadialGraphSurface(1e-2 * y, MetricField::euclidean())) - 2 * pi;
  CHECK(e1 > -1e-12);
  CHECK(std::log2(std::abs(e1 / e2)) == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("scaling laws") {
  const auto& g = grid();
  const SphereFunction w = SphereFunction::sample(g, wave);
  const RadialGraphSurface s(w, MetricField::euclidean());
  const double lam = 1.6;
  SphereFunction ws = lam * (w + SphereFunction::constant(g, 1.0)) - SphereFunction::constant(g, 1.0);
  const RadialGraphSurface sl(ws, MetricField::euclidean());
  CHECK(max_diff(mean_curvature(sl), (1 / lam) * mean_curvature(s)) < 1e-9);
  CHECK(max_diff(willmore_operator(sl), std::pow(lam, -3) * willmore_operator(s)) <
        1e-4 * willmore_operator(s).max_abs());
  CHECK(willmore_energy(sl) == doctest::Approx(willmore_energy(s)).epsilon(1e-12));
  CHECK(area(sl) == doctest::Approx(lam * lam * area(s)).epsilon(1e-12));
}

TEST_CASE("translated half-sphere still meets the plane orthogonally") {
  const auto& g = grid();
  for (const Vec3 a : {Vec3(0.05, 0, 0), Vec3(0.03, -0.04, 0)}) {
    const SphereFunction w = SphereFunction::sample(g, [&](double t, double p) { return translated(t, p, a); });
    const RadialGraphSurface s(w, MetricField::euclidean());
    const BoundaryTrace bt = boundary_trace(s);
    CHECK(bt.B.cwiseAbs().maxCoeff() < 1e-10);
    CHECK(bt.h_tilde_nu_nu.cwiseAbs().maxCoeff() == 0.0);
    CHECK((mean_curvature(s).values().array() - 2.0).abs().maxCoeff() < 1e-8);
    CHECK(area(s) == doctest::Approx(2 * pi).epsilon(1e-10));
  }
}

TEST_CASE("first variation of the Willmore energy at the round state") {
  const auto& g = grid();
  const auto flat = MetricField::euclidean();
  const RadialGraphSurface round(SphereFunction::constant(g, 0.0), flat);
  TangentField none{SphereFunction::constant(g, 0.0), SphereFunction::constant(g, 0.0)};

  // normal speed with vanishing equator derivative
  CHECK(std::abs(first_variation_willmore(round, harmonic(g, {2, 0}), none)) < 1e-10);

  // phi = cos(theta) along nu = -omega: f_t = (1 - t cos(theta)) omega
  const auto cz = SphereFunction::sample(g, [](double t, double) { return std::cos(t); });
  const double analytic = first_variation_willmore(round, cz, none);
  CHECK(analytic == doctest::Approx(-2 * pi).epsilon(1e-10));
  const double h = 1e-4;
  const double fd = (willmore_energy(RadialGraphSurface(-h * cz, flat)) -
                     willmore_energy(RadialGraphSurface(h * cz, flat))) / (2 * h);
  CHECK(std::abs(fd - analytic) < 1e-5);

  // rotation about the axis: tangent to the boundary, no energy change
  TangentField rot{SphereFunction::constant(g, 0.0),
                   SphereFunction::sample(g, [](double t, double) { return std::sin(t); })};
  CHECK(std::abs(first_variation_willmore(round, SphereFunction::constant(g, 0.0), rot)) < 1e-12);
}

TEST_CASE("first variation formulas converge at second order") {
  const auto& g = grid();
  const SphereFunction w = SphereFunction::sample(g, wave);
  const SphereFunction psi = SphereFunction::sample(g, [](double t, double p) {
    return 0.3 + std::cos(t) * std::sin(t) * std::sin(p) + 0.5 * std::pow(std::sin(t) * std::cos(p), 2);
  });
  const MetricField conformal = MetricField::conformal(Vec3(0.1, -0.05, 0.08));
  for (const MetricField* m : {&conformal}) {
    const auto checks = check_variation_formulas(w, psi, *m);
    REQUIRE(checks.size() == 3);
    for (const auto& c : checks) {
      INFO(c.name << " analytic " << c.analytic << " errors " << c.error[0] << " " << c.error[1]);
      CHECK(c.order() >= 1.95);
      CHECK(c.error[1] <= 1e-3 * std::max(1.0, std::abs(c.analytic)));
    }
  }
  // area formula against the direct difference quotient in flat space
  const RadialGraphSurface s(w, MetricField::euclidean());
  const VariationFields vf = radial_variation_fields(s, psi);
  CHECK(vf.phi.all_finite());
  const double h = 1e-4;
  const double fd = (area(RadialGraphSurface(w + h * psi, MetricField::euclidean())) -
                     area(RadialGraphSurface(w - h * psi, MetricField::euclidean()))) / (2 * h);
  const auto checks = check_variation_formulas(w, psi, MetricField::euclidean());
  CHECK(std::abs(checks[0].analytic - fd) < 1e-6);
}

TEST_CASE("immersion failures are reported") {
  const auto& g = grid();
  CHECK_THROWS_AS(RadialGraphSurface(SphereFunction::constant(g, -1.5), MetricField::euclidean()), ImmersionError);
}
