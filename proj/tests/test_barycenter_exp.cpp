#include "test_support.hpp"
#include "willmore/barycenter_exp.hpp"

#include <cmath>

using namespace willmore;
using test::pi;

namespace {

Vec3 omega(double t, double p) { return {std::sin(t) * std::cos(p), std::sin(t) * std::sin(p), std::cos(t)}; }

double wave(double t, double p) {
  return 0.04 * std::cos(t) * std::cos(t) + 0.03 * std::sin(t) * std::cos(p) - 0.02 * std::sin(t) * std::sin(p);
}

double translated(double t, double p, const Vec3& s) {
  const double c = omega(t, p).dot(s);
  return c - 1 + std::sqrt(1 - s.squaredNorm() + c * c);
}

ExpOptions shooting() {
  ExpOptions o;
  o.method = ExpMethod::shooting;
  return o;
}

} // namespace

TEST_CASE("geodesics: straight lines in flat space") {
  GeodesicProblem p;
  p.x = Vec3(0.2, -0.1, 0.3);
  p.v = Vec3(0.5, 0.4, -0.2);
  p.n_steps = 16;
  const GeodesicCurve c = shoot_geodesic(p);
  REQUIRE(c.position.size() == 17);
  for (int k = 0; k <= 16; ++k) {
    const double t = k / 16.0;
    CHECK((c.position[k] - (p.x + t * p.v)).norm() < 1e-15);
    CHECK((c.velocity[k] - p.v).norm() < 1e-15);
  }
}

TEST_CASE("geodesics: fourth-order convergence and energy conservation") {
  GeodesicProblem p;
  p.metric = MetricField::conformal(Vec3(0.3, -0.2, 0.25));
  p.x = Vec3(0.1, 0.2, -0.1);
  p.v = Vec3(0.6, -0.3, 0.4);
  auto endpoint = [&](int n) {
    GeodesicProblem q = p;
    q.n_steps = n;
    return shoot_geodesic(q).position.back();
  };
  const Vec3 ref = endpoint(640);
  const double e64 = (endpoint(64) - ref).norm(), e32 = (endpoint(32) - ref).norm();
  CHECK(e64 <= 1e-8);
  CHECK(std::log2(e32 / e64) == doctest::Approx(4.0).epsilon(0.1));

  p.n_steps = 64;
  const GeodesicCurve c = shoot_geodesic(p);
  auto energy = [&](int k) { return c.velocity[k].dot(p.metric(c.position[k]) * c.velocity[k]); };
  const double e0 = energy(0);
  for (std::size_t k = 0; k < c.position.size(); ++k) CHECK(std::abs(energy(k) - e0) < 1e-8);

  GeodesicProblem out = p;
  out.x = Vec3(1.5, 0, 0);
  out.v = Vec3(1.4, 0, 0);
  CHECK_THROWS_AS(shoot_geodesic(out), GeodesicExitError);
}

TEST_CASE("exponential map and its inverse") {
  const MetricField flat = MetricField::euclidean();
  const Vec3 x(0.1, -0.05, 0);
  const Vec3 v(0.3, 0.2, 0.5);
  CHECK((exp_map(x, v, flat) - (x + v)).norm() < 1e-15);
  CHECK((exp_map(x, Vec3::Zero(), flat) - x).norm() == 0.0);
  CHECK((exp_inverse(x, Vec3(0.4, 0.3, 0.2), flat) - Vec3(0.3, 0.35, 0.2)).norm() < 1e-15);

  const MetricField conf = MetricField::conformal(Vec3(0.02, 0.01, -0.015));
  const Vec3 e = exp_map(x, v, conf, shooting());
  CHECK((e - (x + v)).norm() <= 0.05 * v.norm());

  for (const Vec3 vs : {Vec3(0.2, 0.1, 0.4), Vec3(-0.5, 0.3, 0.6), Vec3(0.05, -0.7, 0.1)}) {
    const Vec3 p = exp_map(x, vs, conf, shooting());
    const Vec3 back = exp_inverse(x, p, conf, shooting());
    CHECK((back - vs).norm() < 1e-9);
    CHECK((exp_map(x, back, conf, shooting()) - p).norm() < 1e-10);
  }
  CHECK(exp_inverse(x, x, conf, shooting()).norm() < 1e-12);

  CHECK_THROWS_AS(exp_inverse(x, Vec3(1.3, 0, 0), conf, shooting()), NeighborhoodError);
  CHECK_THROWS_AS(exp_map(x, Vec3(1.6, 0, 0), conf, shooting()), NeighborhoodError);
}

TEST_CASE("exponential map derivatives in flat space") {
  const MetricField flat = MetricField::euclidean();
  const Vec3 x(0.1, 0.2, 0), p(0.5, -0.3, 0.7);
  CHECK((exp_inverse_dp(x, p, flat) - Mat3::Identity()).norm() < 1e-8);
  Eigen::Matrix<double, 3, 2> ref = Eigen::Matrix<double, 3, 2>::Zero();
  ref(0, 0) = ref(1, 1) = -1;
  CHECK((exp_inverse_dx(x, p, flat) - ref).norm() < 1e-8);
}

TEST_CASE("flat barycenter is the projected mean of the surface") {
  const HalfSphereGrid g(32, 64);
  const MetricField flat = MetricField::euclidean();

  const BarycenterResult r0 = barycenter(SphereFunction::constant(g, 0.0), flat);
  CHECK(r0.center.norm() < 1e-13);

  // oracle: area-weighted mean of f with the area element from difference quotients
  const SphereFunction w = SphereFunction::sample(g, wave);
  auto f = [](double t, double p) -> Vec3 { return (1 + wave(t, p)) * omega(t, p); };
  const double h = 1e-5;
  auto density = [&](double t, double p) {
    const Vec3 ft = (f(t + h, p) - f(t - h, p)) / (2 * h), fp = (f(t, p + h) - f(t, p - h)) / (2 * h);
    return ft.cross(fp).norm() / std::sin(t);
  };
  const double mu = integrate(SphereFunction::sample(g, density));
  const double mx = integrate(SphereFunction::sample(g, [&](double t, double p) { return density(t, p) * f(t, p)(0); }));
  const double my = integrate(SphereFunction::sample(g, [&](double t, double p) { return density(t, p) * f(t, p)(1); }));
  const BarycenterResult r = barycenter(w, flat);
  CHECK(std::abs(r.center(0) - mx / mu) < 1e-8);
  CHECK(std::abs(r.center(1) - my / mu) < 1e-8);
  CHECK(r.residual <= 1e-10);

  const Vec3 s(0.05, 0, 0);
  const BarycenterResult rt =
      barycenter(SphereFunction::sample(g, [&](double t, double p) { return translated(t, p, s); }), flat);
  CHECK(std::abs(rt.center(0) - 0.05) < 1e-4);
  CHECK(std::abs(rt.center(1)) < 1e-12);
}

TEST_CASE("barycenter gradient: round state and general flat surfaces") {
  const HalfSphereGrid g(32, 64);
  const MetricField flat = MetricField::euclidean();
  const auto grad0 = barycenter_gradient(SphereFunction::constant(g, 0.0), flat);
  for (int k = 0; k < 2; ++k) {
    const auto ref = SphereFunction::sample(g, [k](double t, double p) { return -3 / (2 * pi) * omega(t, p)(k); });
    CHECK((grad0[k] - ref).max_abs() < 1e-6);
  }

  const SphereFunction w = SphereFunction::sample(g, wave);
  const RadialGraphSurface s(w, flat);
  const BarycenterResult r = barycenter(s);
  const auto grad = barycenter_gradient(s, r.center);
  const double mu = area(s);
  const Vec3 c(r.center(0), r.center(1), 0);
  double err = 0;
  for (int i = 0; i < g.n_theta(); ++i)
    for (int j = 0; j < g.n_phi(); ++j) {
      const NodeGeometry& n = s.node(i, j);
      const Vec3 v = (n.nu - (n.f - c) * n.H) / mu;
      for (int k = 0; k < 2; ++k) err = std::max(err, std::abs(grad[k](i, j) - v(k)));
    }
  CHECK(err < 1e-6);
}

TEST_CASE("barycenter gradient predicts the change of the center") {
  const HalfSphereGrid g(16, 32);
  const SphereFunction w = SphereFunction::sample(g, wave);
  const SphereFunction psi = SphereFunction::sample(g, [](double t, double p) {
    return 0.5 + std::sin(t) * std::cos(p) + 0.3 * std::cos(t) * std::sin(t) * std::sin(p);
  });
  for (const MetricField& m : {MetricField::euclidean(), MetricField::conformal(Vec3(0.05, -0.03, 0.04))}) {
    const RadialGraphSurface s(w, m);
    const BarycenterResult r = barycenter(s);
    const auto grad = barycenter_gradient(s, r.center);
    // normal speed of the radial variation w + t psi
    SphereFunction phi(g);
    for (int i = 0; i < g.n_theta(); ++i)
      for (int j = 0; j < g.n_phi(); ++j) {
        const NodeGeometry& n = s.node(i, j);
        phi(i, j) = psi(i, j) * omega(g.theta_nodes()(i), g.phi(j)).dot(n.ambient * n.nu);
      }
    const double h = 1e-4;
    const Vec2 cp = barycenter(w + h * psi, m).center, cm = barycenter(w - h * psi, m).center;
    for (int k = 0; k < 2; ++k) {
      const double fd = (cp(k) - cm(k)) / (2 * h);
      CHECK(std::abs(fd - surface_integrate(s, grad[k] * phi)) < 1e-5);
    }
  }
}

TEST_CASE("barycenter does not depend on the grid") {
  const MetricField conf = MetricField::conformal(Vec3(0.05, -0.03, 0.04));
  const HalfSphereGrid g1(16, 32), g2(24, 48);
  const Vec2 c1 = barycenter(SphereFunction::sample(g1, wave), conf).center;
  const Vec2 c2 = barycenter(SphereFunction::sample(g2, wave), conf).center;
  CHECK((c1 - c2).norm() < 1e-6);
}
