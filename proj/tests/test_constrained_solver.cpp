#include "test_support.hpp"
#include "willmore/constrained_solver.hpp"

#include <cmath>

using namespace willmore;
using test::pi;

namespace {

const HalfSphereGrid& grid() {
  static const HalfSphereGrid g(32, 64);
  return g;
}

MetricField ball_metric(double lam, const Vec3& a = Vec3(0, 0, -1)) {
  return pullback_metric(make_chart(make_ball(1.0), a), lam);
}

double omega_k(double t, double p, int k) {
  return k == 0 ? std::sin(t) * std::cos(p) : k == 1 ? std::sin(t) * std::sin(p) : std::cos(t);
}

} // namespace

TEST_CASE("residual vanishes at the round state in flat space") {
  const auto& g = grid();
  const ConstraintResidual r = assemble_residual(SphereFunction(g), 0.0, Vec2::Zero(), MetricField::euclidean());
  CHECK(r.interior.max_abs() < 1e-9);
  CHECK(r.bc_natural.cwiseAbs().maxCoeff() < 1e-9);
  CHECK(r.bc_ortho.cwiseAbs().maxCoeff() < 1e-14);
  CHECK(std::abs(r.area_defect) < 1e-13);
  CHECK(r.center_defect.norm() < 1e-13);
  CHECK(r.max_norm() < 1e-9);

  const ConstraintResidual rs = assemble_residual(SolverState::flat(g), MetricField::euclidean());
  CHECK(rs.max_norm() < 1e-9);
}

TEST_CASE("residual of the round state under a chart metric is of order lambda") {
  const auto& g = grid();
  double prev = 0;
  for (double lam : {0.1, 0.05}) {
    const ConstraintResidual r = assemble_residual(SphereFunction(g), 0.0, Vec2::Zero(), ball_metric(lam));
    const double n = r.max_norm();
    MESSAGE("lambda " << lam << " initial residual " << n);
    CHECK(n > 1e-4);
    CHECK(n < 40 * lam);
    if (prev > 0) CHECK(n / prev == doctest::Approx(0.5).epsilon(0.2));
    prev = n;
  }
}

TEST_CASE("the interior residual is affine in the multipliers") {
  const auto& g = grid();
  const MetricField m = ball_metric(0.1);
  const SphereFunction w = SphereFunction::sample(g, [](double t, double) { return 0.01 * std::cos(t) * std::cos(t); });
  const ConstraintResidual r0 = assemble_residual(w, 0.0, Vec2::Zero(), m);
  const ConstraintResidual r1 = assemble_residual(w, 0.7, Vec2(0.2, -0.3), m);
  const PsiFunctions psi = psi_functions(RadialGraphSurface(w, m));
  const SphereFunction expected = r0.interior - 0.7 * psi.psi0 - 0.2 * psi.psi1 + 0.3 * psi.psi2;
  CHECK((r1.interior - expected).max_abs() < 1e-12);
}

TEST_CASE("psi functions at the round state") {
  const auto& g = grid();
  const PsiFunctions psi = psi_functions(RadialGraphSurface(SphereFunction(g), MetricField::euclidean()));
  CHECK((psi.psi0.values().array() - 2 / std::sqrt(8 * pi)).abs().maxCoeff() < 1e-12);
  const SphereFunction* p[2] = {&psi.psi1, &psi.psi2};
  for (int k = 0; k < 2; ++k) {
    const auto ref =
        SphereFunction::sample(g, [k](double t, double ph) { return std::sqrt(3 / (2 * pi)) * omega_k(t, ph, k); });
    CHECK((*p[k] - ref).max_abs() < 1e-6);
  }
  const SphereFunction* all[3] = {&psi.psi0, &psi.psi1, &psi.psi2};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(std::abs(integrate(*all[i] * *all[j]) - (i == j)) < 1e-6);
}

TEST_CASE("model linearization") {
  const auto& g = grid();
  for (const HarmonicIndex idx : {HarmonicIndex{2, 0}, HarmonicIndex{2, 2}, HarmonicIndex{4, -2}, HarmonicIndex{6, 2}}) {
    const SphereFunction y = harmonic(g, idx);
    const double l = idx.eigenvalue();
    const ModelLinearization L = model_linearization(y);
    // two spectral Laplacians in a row: roundoff grows like n^4
    CHECK((L.L1 - l * (l - 2) * y).max_abs() <= 1e-4 * l * (l - 2) * y.max_abs());
    CHECK(L.b_row.cwiseAbs().maxCoeff() < 1e-9);
  }
  const ModelLinearization one = model_linearization(SphereFunction::constant(g, 1.0));
  CHECK(one.L1.max_abs() < 1e-4);
  CHECK(one.L3 == doctest::Approx(-4 * pi).epsilon(1e-13));
  CHECK(one.L4.norm() < 1e-14);

  const auto x = SphereFunction::sample(g, [](double t, double p) { return omega_k(t, p, 0); });
  const ModelLinearization lx = model_linearization(x);
  CHECK(lx.L1.max_abs() < 1e-4);
  CHECK(std::abs(lx.L3) < 1e-14);
  CHECK(lx.L4(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(lx.L4(1)) < 1e-14);

  const auto z = SphereFunction::sample(g, [](double t, double p) { return omega_k(t, p, 2); });
  CHECK((model_linearization(z).b_row.array() + 1.0).abs().maxCoeff() < 1e-10);
}

TEST_CASE("frozen Jacobian stays invertible under refinement") {
  double prev = 0;
  for (int n : {16, 24, 32}) {
    const HalfSphereGrid g(n, 2 * n);
    const double s = FrozenJacobian::for_grid(g)->min_singular_value();
    MESSAGE("n_theta " << n << " smallest singular value " << s);
    CHECK(s > 1e-3);
    if (prev > 0) CHECK(s > 0.5 * prev);
    prev = s;
  }
}

TEST_CASE("packing round trip") {
  const auto& g = grid();
  SolverState x = SolverState::flat(g);
  x.w = SphereFunction::sample(g, [](double t, double p) { return 0.01 * std::cos(t) + 0.02 * std::sin(t) * std::cos(p); });
  x.eta = SphereFunction::constant(g, 0.3);
  x.alpha = 0.1;
  x.beta1 = -0.2;
  x.beta2 = 0.05;
  const SolverState y = unpack_state(g, pack_state(x));
  CHECK((y.w - x.w).max_abs() == 0.0);
  CHECK((y.eta - x.eta).max_abs() == 0.0);
  CHECK(y.alpha == x.alpha);
  CHECK(y.beta1 == x.beta1);
  CHECK(y.beta2 == x.beta2);
}

TEST_CASE("flat metric: the round half-sphere is returned immediately") {
  const auto& g = grid();
  const ConstrainedSolution s = solve_constrained(MetricField::euclidean(), g);
  CHECK(s.converged);
  CHECK(s.iterations <= 1);
  CHECK(s.w().max_abs() < 1e-12);
  CHECK(std::abs(s.alpha()) < 1e-12);
  CHECK(std::abs(s.beta1()) + std::abs(s.beta2()) < 1e-12);
  CHECK(std::abs(s.energy - 2 * pi) < 1e-12);
  const VerificationReport rep = verify_solution(s);
  CHECK(rep.all_pass());
}

TEST_CASE("ball charts: convergence, invariants and the size of w") {
  const auto& g = grid();
  std::vector<double> C;
  for (double lam : {0.2, 0.1, 0.05}) {
    const MetricField m = ball_metric(lam);
    const ConstrainedSolution s = solve_constrained(m, g);
    REQUIRE(s.converged);
    const ConstraintResidual& r = s.residual;
    CHECK(std::abs(r.area_defect) <= 1e-9);
    CHECK(r.center_defect.norm() <= 1e-9);
    CHECK(r.bc_ortho.cwiseAbs().maxCoeff() <= 1e-9);
    CHECK(r.interior_norm() <= 1e-9);
    CHECK(s.metric_deviation > 0);
    C.push_back(s.w().max_abs() / lam);
    // W is in the span of the psi functions, which are nearly orthonormal
    const RadialGraphSurface surf(s.w(), m);
    const PsiFunctions psi = psi_functions(surf);
    const SphereFunction* all[3] = {&psi.psi0, &psi.psi1, &psi.psi2};
    double dev = 0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) dev = std::max(dev, std::abs(surface_integrate(surf, *all[i] * *all[j]) - (i == j)));
    CHECK(dev <= 2 * lam);
  }
  MESSAGE("|w| / lambda: " << C[0] << " " << C[1] << " " << C[2]);
  const double cmax = *std::max_element(C.begin(), C.end()), cmin = *std::min_element(C.begin(), C.end());
  CHECK((cmax - cmin) / cmax < 0.3);
}

TEST_CASE("verification at lambda = 0.1") {
  const auto& g = grid();
  const ConstrainedSolution s = solve_constrained(ball_metric(0.1, Vec3(0.6, 0, -0.8)), g);
  const VerificationReport rep = verify_solution(s);
  for (const auto& it : rep.items) {
    INFO(it.name << " = " << it.value << " (tolerance " << it.tolerance << ")");
    if (!it.informational) CHECK(it.pass);
  }
  CHECK(rep.all_pass());
}

TEST_CASE("finite-difference Jacobian converges quadratically") {
  const HalfSphereGrid g(16, 16);
  SolverOptions opt;
  opt.jacobian = JacobianKind::finite_difference;
  const ConstrainedSolution s = solve_constrained(ball_metric(0.1), g, opt);
  REQUIRE(s.converged);
  const auto& h = s.history;
  MESSAGE("history size " << h.size());
  REQUIRE(h.size() >= 3);
  // r_{k+1} <= C r_k^2 on the last steps above roundoff
  int checked = 0;
  for (std::size_t k = 0; k + 1 < h.size(); ++k) {
    if (h[k] < 1e-7) break;
    CHECK(h[k + 1] <= 50 * h[k] * h[k]);
    ++checked;
  }
  CHECK(checked >= 1);
  CHECK(s.iterations <= 6);

  // agrees with the frozen-Jacobian solve
  const ConstrainedSolution f = solve_constrained(ball_metric(0.1), g);
  CHECK((f.w() - s.w()).max_abs() < 1e-8);
  CHECK(std::abs(f.energy - s.energy) < 1e-9);
}

TEST_CASE("failures are reported with the residual history") {
  const auto& g = grid();
  SolverOptions few;
  few.max_iter = 1;
  try {
    solve_constrained(ball_metric(0.2), g, few);
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(!e.history().empty());
  }
  SolverOptions strict;
  strict.initial_residual_max = 1e-6;
  CHECK_THROWS_AS(solve_constrained(ball_metric(0.1), g, strict), DivergenceError);

  nlohmann::json j = {{"jacobian", "cholesky"}};
  SolverOptions o;
  CHECK_THROWS_AS(from_json(j, o), std::invalid_argument);
  nlohmann::json ok = {{"jacobian", "fd"}, {"tol", 1e-8}};
  from_json(ok, o);
  CHECK(o.jacobian == JacobianKind::finite_difference);
  CHECK(o.tol == 1e-8);
}
