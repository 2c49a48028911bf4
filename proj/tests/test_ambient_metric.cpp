#include "test_support.hpp"
#include "willmore/ambient_metric.hpp"

#include <cmath>
#include <random>

using namespace willmore;
using test::pi;

namespace {

// Mean curvature of {F = 0} w.r.t. the normal grad F / |grad F| (pointing into {F > 0}).
double implicit_mean_curvature(const Vec3& g, const Mat3& h) {
  const double n2 = g.squaredNorm();
  return (-h.trace() * n2 + g.dot(h * g)) / std::pow(n2, 1.5);
}

double ellipsoid_H(double a, double b, double c, const Vec3& p) {
  const Vec3 g(-2 * p(0) / (a * a), -2 * p(1) / (b * b), -2 * p(2) / (c * c));
  const Mat3 h = Vec3(-2 / (a * a), -2 / (b * b), -2 / (c * c)).asDiagonal();
  return implicit_mean_curvature(g, h);
}

std::vector<Vec3> cylinder_points(int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<Vec3> pts;
  while (static_cast<int>(pts.size()) < n) {
    Vec3 p(2 * u(rng), 2 * u(rng), 2 * u(rng));
    if (p.head<2>().norm() < 1.95) pts.push_back(p * 0.999);
  }
  return pts;
}

double max_abs(const Mat3& m) { return m.cwiseAbs().maxCoeff(); }

} // namespace

TEST_CASE("ball chart at the south pole is the spherical cap") {
  const auto ball = make_ball(1.0);
  const DomainChart ch = make_chart(ball, Vec3(0, 0, -1));
  CHECK((ch.normal() - Vec3(0, 0, 1)).norm() < 1e-14);
  CHECK(std::abs(ch.v1().dot(ch.v2())) < 1e-14);
  CHECK(std::abs(ch.v1().dot(ch.normal())) < 1e-14);
  for (const Vec2 y : {Vec2(0.1, 0.2), Vec2(-0.3, 0.05), Vec2(0.0, -0.4), Vec2(0.25, 0.25)}) {
    const GraphJet j = ch.graph(y, 2);
    CHECK(std::abs(j.value - (1 - std::sqrt(1 - y.squaredNorm()))) < 1e-10);
    const Vec2 d1 = y / std::sqrt(1 - y.squaredNorm());
    CHECK((j.d1 - d1).norm() < 1e-10);
    CHECK(std::abs(ball->level(ch.surface_point(y))) < 1e-12);
  }
}

TEST_CASE("graph vanishes to second order at the base point") {
  const auto ell = make_ellipsoid(1, 1.3, 1.7);
  for (const Vec3 d : {Vec3(1, 2, 3), Vec3(-0.4, 0.1, 0.2), Vec3(0, 0, 1)}) {
    const Vec3 a = ell->boundary_point(d);
    const GraphJet j = make_chart(ell, a).graph(Vec2::Zero(), 3);
    CHECK(std::abs(j.value) < 1e-13);
    CHECK(j.d1.norm() < 1e-12);
  }
  const auto flat = make_half_space();
  const DomainChart fc = make_chart(flat, Vec3(0.3, -0.2, 0));
  for (const Vec2 y : {Vec2(0.4, 0.1), Vec2(-1.0, 0.7)}) {
    const GraphJet j = fc.graph(y, 3);
    CHECK(j.value == 0.0);
    CHECK(j.d1.norm() == 0.0);
    CHECK(j.d2.norm() == 0.0);
  }
}

TEST_CASE("pullback metric components") {
  const auto ball = make_ball(1.0);
  const DomainChart ch = make_chart(ball, Vec3(0, 0, -1));
  const double lam = 0.1;
  const MetricField g = pullback_metric(ch, lam);
  for (const Vec3& p : cylinder_points(20, 7)) {
    const Vec2 y = lam * p.head<2>();
    const Vec2 d = y / std::sqrt(1 - y.squaredNorm());
    Mat3 ref = Mat3::Identity();
    ref.topLeftCorner<2, 2>() += d * d.transpose();
    ref.block<2, 1>(0, 2) = d;
    ref.block<1, 2>(2, 0) = d.transpose();
    CHECK(max_abs(g(p) - ref) < 1e-12);
    CHECK(max_abs(g(p) - g(p).transpose()) == 0.0);
    CHECK(Eigen::SelfAdjointEigenSolver<Mat3>(g(p)).eigenvalues().minCoeff() > 0);
  }
}

TEST_CASE("pullback metric: small scale, flat domain, dilation and size") {
  const auto ball = make_ball(1.0);
  const DomainChart ch = make_chart(ball, Vec3(0, 0, -1));
  const auto pts = cylinder_points(30, 11);
  const MetricField tiny = pullback_metric(ch, 1e-9);
  for (const auto& p : pts) CHECK(max_abs(tiny(p) - Mat3::Identity()) < 1e-8);

  const DomainChart fc = make_chart(make_half_space(), Vec3::Zero());
  for (double lam : {0.05, 0.2, 1.0}) {
    const MetricField g = pullback_metric(fc, lam);
    for (const auto& p : pts) CHECK(max_abs(g(p) - Mat3::Identity()) == 0.0);
  }

  const MetricField g1 = pullback_metric(ch, 0.1), g2 = pullback_metric(ch, 0.05);
  for (const auto& p : pts) {
    const Vec3 half = 0.5 * p;
    CHECK(max_abs(g2(p) - g1(half)) < 1e-12);
  }

  // |g - delta| and |g_i3| grow linearly in lambda; report the measured constant
  std::vector<double> C;
  for (double lam : {0.2, 0.1, 0.05}) {
    const MetricField g = pullback_metric(ch, lam);
    double dev = 0, mixed = 0;
    for (const auto& p : pts) {
      dev = std::max(dev, max_abs(g(p) - Mat3::Identity()));
      mixed = std::max(mixed, g(p).block<2, 1>(0, 2).cwiseAbs().maxCoeff());
    }
    CHECK(mixed <= 3 * lam);
    C.push_back(dev / lam);
  }
  MESSAGE("metric deviation constants " << C[0] << " " << C[1] << " " << C[2]);
  CHECK(std::abs(C[2] - C[1]) < 0.2 * C[1]);

  CHECK_THROWS_AS(pullback_metric(ch, 0.9), ChartRangeError);
}

TEST_CASE("first-order term of the ball and Taylor control") {
  const auto ball = make_ball(1.0);
  const DomainChart ch = make_chart(ball, Vec3(0.6, 0, -0.8));
  const MetricField q = first_order_term(ch);
  const auto pts = cylinder_points(25, 3);
  for (const auto& p : pts) {
    Mat3 ref = Mat3::Zero();
    ref(0, 2) = ref(2, 0) = p(0);
    ref(1, 2) = ref(2, 1) = p(1);
    CHECK(max_abs(q(p) - ref) < 1e-12);
  }
  std::vector<double> ratio;
  for (double lam : {0.2, 0.1, 0.05}) {
    const MetricField g = pullback_metric(ch, lam);
    double r = 0;
    for (const auto& p : pts) r = std::max(r, max_abs(g(p) - Mat3::Identity() - lam * q(p)));
    ratio.push_back(r / (lam * lam));
  }
  CHECK(std::abs(ratio[2] - ratio[1]) < 0.1 * ratio[1]);
  CHECK(std::abs(ratio[1] - ratio[0]) < 0.2 * ratio[0]);

  const MetricField qf = first_order_term(make_chart(make_half_space(), Vec3::Zero()));
  for (const auto& p : pts) CHECK(max_abs(qf(p)) == 0.0);
}

TEST_CASE("first-order term matches the lambda derivative on an ellipsoid") {
  const auto ell = make_ellipsoid(1, 1, 2);
  const DomainChart ch = make_chart(ell, Vec3(0, 0, 2));
  const MetricField q = first_order_term(ch);
  const double h = 1e-4;
  const MetricField gh = pullback_metric(ch, h), g2h = pullback_metric(ch, 2 * h);
  for (const auto& p : cylinder_points(15, 5)) {
    // Richardson-corrected one-sided difference at lambda = 0
    const Mat3 d = 2 * (gh(p) - Mat3::Identity()) / h - (g2h(p) - Mat3::Identity()) / (2 * h);
    CHECK(max_abs(d - q(p)) < 1e-6);
  }
}

TEST_CASE("shape operator and mean curvature") {
  for (const Vec3 d : {Vec3(0, 0, -1), Vec3(1, 1, 0), Vec3(0.3, -0.7, 0.2)}) {
    const auto s = shape_operator(make_ball(1.0), d.normalized());
    CHECK(s.H_S == doctest::Approx(2.0).epsilon(1e-10));
    CHECK((s.h_S - Mat2::Identity()).norm() < 1e-9);
    CHECK(s.grad_HS.norm() < 1e-6);
    const auto s3 = shape_operator(make_ball(3.0), 3 * d.normalized());
    CHECK(s3.H_S == doctest::Approx(2.0 / 3.0).epsilon(1e-10));
  }
  CHECK(shape_operator(make_half_space(), Vec3(0.5, 0.1, 0)).H_S == 0.0);

  const auto ell = make_ellipsoid(1, 1.2, 1.5);
  for (const Vec3 d : {Vec3(0, 0, 1), Vec3(1, 0, 0), Vec3(0.4, -0.5, 0.6)}) {
    const Vec3 a = ell->boundary_point(d);
    const auto s = shape_operator(ell, a);
    CHECK(s.H_S == doctest::Approx(ellipsoid_H(1, 1.2, 1.5, a)).epsilon(1e-10));
    CHECK(s.H_S == doctest::Approx(s.h_S.trace()).epsilon(1e-14));
    CHECK(std::abs(s.h_S(0, 1) - s.h_S(1, 0)) < 1e-12);
  }
  // poles of a spheroid: umbilic with curvature c / a^2
  const auto sph = make_ellipsoid(1, 1, 1.5);
  const auto sp = shape_operator(sph, Vec3(0, 0, 1.5));
  CHECK((sp.h_S - 1.5 * Mat2::Identity()).norm() < 1e-9);
}

TEST_CASE("Christoffel symbols") {
  const Tensor3 z = christoffel(MetricField::euclidean(), Vec3(0.3, 0.2, -0.1));
  for (int k = 0; k < 3; ++k) CHECK(max_abs(z[k]) == 0.0);

  // e^{2u} delta with u linear: Gamma^k_ij = delta_ik u_j + delta_jk u_i - delta_ij u_k
  const Vec3 c(1.0, -0.3, 0.2);
  const MetricField conf = MetricField::conformal(c);
  for (const Vec3 p : {Vec3(0.1, 0.2, 0.3), Vec3(-0.5, 0.4, 1.0)}) {
    const Tensor3 G = christoffel(conf, p);
    for (int k = 0; k < 3; ++k)
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
          const double ref = (i == k) * c(j) + (j == k) * c(i) - (i == j) * c(k);
          CHECK(std::abs(G[k](i, j) - ref) < 1e-8);
        }
  }
  const MetricField ux = MetricField::conformal(Vec3(1, 0, 0));
  const Tensor3 G = christoffel(ux, Vec3(0.2, 0.1, 0.0));
  CHECK(G[0](0, 0) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(G[0](1, 1) == doctest::Approx(-1.0).epsilon(1e-8));

  const MetricField pb = pullback_metric(make_chart(make_ball(1.0), Vec3(0, 0, -1)), 0.1);
  for (const auto& p : cylinder_points(10, 2)) {
    const Tensor3 T = christoffel(pb, p);
    for (int k = 0; k < 3; ++k) CHECK(max_abs(T[k] - T[k].transpose()) < 1e-12);
  }

  const MetricField bad = MetricField::from_function([](const Vec3&) {
    Mat3 m = Mat3::Identity();
    m(2, 2) = 0;
    return m;
  });
  CHECK_THROWS_AS(christoffel(bad, Vec3::Zero()), DefinitenessError);
}

TEST_CASE("rotating the frame pulls the metric back by the rotation") {
  const auto ell = make_ellipsoid(1, 1.2, 1.5);
  const Vec3 a = ell->boundary_point(Vec3(0.4, -0.5, 0.6));
  const DomainChart c0 = make_chart(ell, a), c1 = make_chart(ell, a, pi / 2);
  // y in chart 0 for y' in chart 1
  Mat2 M;
  M << c0.v1().dot(c1.v1()), c0.v1().dot(c1.v2()), c0.v2().dot(c1.v1()), c0.v2().dot(c1.v2());
  CHECK((M.transpose() * M - Mat2::Identity()).norm() < 1e-14);
  Mat3 J = Mat3::Identity();
  J.topLeftCorner<2, 2>() = M;
  const MetricField g0 = pullback_metric(c0, 0.1), g1 = pullback_metric(c1, 0.1);
  for (const auto& p : cylinder_points(12, 9)) {
    const Vec3 q = J * p;
    CHECK(max_abs(g1(p) - J.transpose() * g0(q) * J) < 1e-11);
  }
}

TEST_CASE("domains: projection, boundary points, JSON definitions") {
  const auto ell = make_ellipsoid(1, 1, 1.5);
  const Vec3 p = ell->project(Vec3(0.5, 0.2, 1.4));
  CHECK(std::abs(ell->level(p)) < 1e-12);
  const Vec3 b = ell->boundary_point(Vec3(0, 0, 1));
  CHECK((b - Vec3(0, 0, 1.5)).norm() < 1e-12);
  CHECK(ell->interior_normal(b).dot(Vec3(0, 0, -1)) == doctest::Approx(1.0));

  const auto j = parse_domain(R"({"type": "ellipsoid", "params": {"semi_axes": [1, 2, 3]}})");
  CHECK(std::abs(j->level(Vec3(0, 2, 0))) < 1e-14);
  const auto pb = parse_domain(R"({"type": "perturbed_ball", "params": {"amplitude": 0.05, "degree": 2}})");
  CHECK(pb->bounded());
  CHECK(!parse_domain(R"({"type": "half_space"})")->bounded());

  try {
    parse_domain("{\n  \"type\": \"ball\",\n  \"params\": {\"radius\": }\n}", "dom.json");
    FAIL("expected a parse error");
  } catch (const DomainError& e) {
    CHECK(std::string(e.what()).find("dom.json:3:") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_domain(R"({"type": "torus"})"), DomainError);
  CHECK_THROWS_AS(parse_domain(R"({"type": "ellipsoid", "params": {"semi_axes": [1, 2]}})"), DomainError);
  CHECK_THROWS_AS(parse_domain(R"({"params": {}})"), DomainError);
}
