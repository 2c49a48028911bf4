#include "willmore/reduced_energy.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <regex>
#include <set>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace willmore {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string point_str(const Vec3& a) { return fmt::format("({:.17g}, {:.17g}, {:.17g})", a(0), a(1), a(2)); }

// Work items are claimed from a shared counter; each writes only its own slot.
template <class F>
void parallel_for(int n, int jobs, F&& f) {
  jobs = std::clamp(jobs, 1, std::max(1, n));
  if (jobs == 1) {
    for (int i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (int t = 0; t < jobs; ++t)
    pool.emplace_back([&] {
      for (int i; (i = next++) < n;) f(i);
    });
  for (auto& th : pool) th.join();
}

SolverState scaled(const SolverState& s, double r) {
  SolverState out = s;
  out.w *= r;
  out.eta *= r;
  out.alpha *= r;
  out.beta1 *= r;
  out.beta2 *= r;
  return out;
}

// Nine-point chart stencil: gradient and Hessian at y = 0.
struct LocalQuadratic {
  Vec2 grad = Vec2::Zero();
  Mat2 hess = Mat2::Zero();
};

const std::array<Vec2, 8> kStencil = {Vec2(1, 0), Vec2(-1, 0), Vec2(0, 1),  Vec2(0, -1),
                                      Vec2(1, 1), Vec2(1, -1), Vec2(-1, 1), Vec2(-1, -1)};

LocalQuadratic from_stencil(double f0, const std::array<double, 8>& f, double h) {
  LocalQuadratic q;
  q.grad << (f[0] - f[1]) / (2 * h), (f[2] - f[3]) / (2 * h);
  q.hess(0, 0) = (f[0] - 2 * f0 + f[1]) / (h * h);
  q.hess(1, 1) = (f[2] - 2 * f0 + f[3]) / (h * h);
  q.hess(0, 1) = q.hess(1, 0) = (f[4] - f[5] - f[6] + f[7]) / (4 * h * h);
  return q;
}

LocalQuadratic mean_curvature_stencil(const ImplicitDomain& dom, const DomainChart& chart, double h) {
  std::array<double, 8> f;
  for (int k = 0; k < 8; ++k) f[k] = dom.mean_curvature(chart.surface_point(h * kStencil[k]));
  return from_stencil(dom.mean_curvature(chart.a()), f, h);
}

double length_scale(const ImplicitDomain& d) { return d.bounded() && std::isfinite(d.diameter()) ? d.diameter() : 1.0; }

} // namespace

void to_json(nlohmann::json& j, const ReducedOptions& o) {
  j = {{"n_theta", o.n_theta},
       {"n_phi", o.n_phi},
       {"fd_fraction", o.fd_fraction},
       {"continuation_levels", o.continuation_levels},
       {"solver", o.solver}};
}

void from_json(const nlohmann::json& j, ReducedOptions& o) {
  o.n_theta = j.value("n_theta", o.n_theta);
  o.n_phi = j.value("n_phi", 2 * o.n_theta);
  o.fd_fraction = j.value("fd_fraction", o.fd_fraction);
  o.continuation_levels = j.value("continuation_levels", o.continuation_levels);
  if (j.contains("solver")) j.at("solver").get_to(o.solver);
  if (o.n_theta < 16 || o.n_theta > 128) throw std::invalid_argument("n_theta must lie in [16, 128]");
  if (o.n_phi < 4 || o.n_phi % 2 != 0) throw std::invalid_argument("n_phi must be even and at least 4");
  if (!(o.fd_fraction > 0) || o.continuation_levels < 0) throw std::invalid_argument("reduced options out of range");
}

double surface_step(const ImplicitDomain& domain, const ReducedOptions& opt) {
  return opt.fd_fraction * length_scale(domain);
}

ConstrainedSolution solve_at(std::shared_ptr<const ImplicitDomain> domain, const Vec3& a, double lambda,
                             const ReducedOptions& opt, double frame_rotation) {
  if (!(lambda >= 0)) throw std::invalid_argument("lambda must be non-negative");
  const HalfSphereGrid grid(opt.n_theta, opt.n_phi);
  const DomainChart chart = make_chart(domain, a, frame_rotation);
  auto attempt = [&](double lam, const std::optional<SolverState>& init) {
    ConstrainedSolution sol = solve_constrained(pullback_metric(chart, lam), grid, opt.solver, init);
    sol.chart = ChartContext{chart, lam};
    return sol;
  };
  std::string first_error;
  try {
    return attempt(lambda, std::nullopt);
  } catch (const ChartRangeError& e) {
    throw ReducedEnergyError(fmt::format("at a = {}, lambda = {}: {}", point_str(a), lambda, e.what()), a, lambda);
  } catch (const std::runtime_error& e) {
    first_error = e.what();
  }
  for (int levels = 1; levels <= opt.continuation_levels; ++levels) {
    try {
      double lam = std::ldexp(lambda, -levels);
      ConstrainedSolution sol = attempt(lam, std::nullopt);
      for (int k = levels - 1; k >= 0; --k) {
        const double next = std::ldexp(lambda, -k);
        sol = attempt(next, scaled(sol.state, next / lam));
        lam = next;
      }
      spdlog::debug("solve at {} lambda {} needed {} continuation levels", point_str(a), lambda, levels);
      return sol;
    } catch (const std::runtime_error&) {
    }
  }
  throw ReducedEnergyError(
      fmt::format("solve failed at a = {}, lambda = {}: {}", point_str(a), lambda, first_error), a, lambda);
}

double reduced_energy(std::shared_ptr<const ImplicitDomain> domain, const Vec3& a, double lambda,
                      const ReducedOptions& opt) {
  return solve_at(std::move(domain), a, lambda, opt).energy;
}

double lambda_max(std::shared_ptr<const ImplicitDomain> domain, const Vec3& a, const ReducedOptions& opt) {
  const DomainChart chart = make_chart(domain, a);
  for (int k = 0; k < 6; ++k) {
    const double lam = std::ldexp(0.2, -k);
    if (lam > chart.r0() / 2) continue;
    try {
      if (solve_at(domain, a, lam, opt).converged) return lam;
    } catch (const std::runtime_error&) {
    }
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// First-order integrals of q = d/dlambda g at lambda = 0.

const std::array<double, 5> IntegralReport::kCoefficients = {kPi / 2, -kPi / 2, kPi / 2, -kPi / 2, -kPi};

double IntegralReport::max_error() const {
  double e = 0;
  for (int k = 0; k < 5; ++k) e = std::max(e, std::abs(value[k] - expected[k]));
  return e;
}

IntegralReport check_analytic_integrals(std::shared_ptr<const ImplicitDomain> domain, const Vec3& a, int n_theta) {
  const DomainChart chart = make_chart(domain, a);
  const MetricField q = first_order_term(chart);  // the jet holds q itself
  const HalfSphereGrid g(n_theta, 2 * n_theta);
  SphereFunction f1(g), f2(g), f3(g), f4(g);
  for (int i = 0; i < g.n_theta(); ++i)
    for (int j = 0; j < g.n_phi(); ++j) {
      // nu is the inward unit normal -omega of the round half-sphere.
      const Vec3 w = direction_jet(g.theta_nodes()(i), g.phi(j)).w, nu = -w;
      const MetricJet J = q.jet(w);
      const Mat3& Q = J.g;
      Mat3 Dnu = Mat3::Zero();
      double div = 0;
      for (int k = 0; k < 3; ++k) {
        Dnu += nu(k) * J.dg[k];
        div += (J.dg[k] * nu)(k);
      }
      const double qnn = nu.dot(Q * nu), dnn = nu.dot(Dnu * nu);
      f1(i, j) = qnn;
      f2(i, j) = Q.trace() - qnn;
      f3(i, j) = Dnu.trace() - dnn;
      f4(i, j) = div - dnn;
    }
  BoundaryFunction b(g.n_phi());
  for (int j = 0; j < g.n_phi(); ++j) {
    const Vec3 xi(std::cos(g.phi(j)), std::sin(g.phi(j)), 0);
    b(j) = -xi.dot(q(xi) * Vec3::UnitZ());
  }
  IntegralReport r;
  r.H_S = chart.graph(Vec2::Zero(), 2).d2.trace();
  r.value = {integrate(f1), integrate(f2), integrate(f3), integrate(f4), boundary_integrate(b)};
  for (int k = 0; k < 5; ++k) r.expected[k] = IntegralReport::kCoefficients[k] * r.H_S;
  return r;
}

double first_order_energy(std::shared_ptr<const ImplicitDomain> domain, const Vec3& a, int n_theta) {
  const IntegralReport r = check_analytic_integrals(std::move(domain), a, n_theta);
  const auto& v = r.value;
  // The interior part vanishes; the boundary term carries the whole slope.
  return -0.5 * v[1] + v[0] + v[3] - 0.5 * v[2] + v[4];
}

// ---------------------------------------------------------------------------
// Meshes and landscapes.

SurfaceMesh make_mesh(const ImplicitDomain& domain, int n_lat, int n_lon) {
  SurfaceMesh m;
  m.n_lat = n_lat;
  m.n_lon = n_lon;
  if (!domain.bounded()) {
    if (n_lat < 2 || n_lon < 2) throw std::invalid_argument("planar mesh needs at least 2x2 points");
    for (int i = 0; i < n_lat; ++i)
      for (int j = 0; j < n_lon; ++j) {
        const Vec2 xy(-1 + 2.0 * j / (n_lon - 1), -1 + 2.0 * i / (n_lat - 1));
        m.params.push_back(xy);
        m.points.push_back(domain.project(Vec3(xy(0), xy(1), 0)));
        std::vector<int> nb;
        if (i > 0) nb.push_back((i - 1) * n_lon + j);
        if (i + 1 < n_lat) nb.push_back((i + 1) * n_lon + j);
        if (j > 0) nb.push_back(i * n_lon + j - 1);
        if (j + 1 < n_lon) nb.push_back(i * n_lon + j + 1);
        m.neighbors.push_back(std::move(nb));
      }
    return m;
  }
  if (n_lat < 2 || n_lon < 3) throw std::invalid_argument("mesh needs at least 2 latitude intervals and 3 meridians");
  const int rings = n_lat - 1;
  const int south = 1 + rings * n_lon;
  auto ring_index = [&](int i, int j) { return 1 + (i - 1) * n_lon + ((j % n_lon) + n_lon) % n_lon; };
  auto add = [&](double th, double ph) {
    const Vec3 d(std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th));
    m.params.emplace_back(th, ph);
    m.points.push_back(domain.boundary_point(d));
  };
  add(0, 0);
  std::vector<int> first, last;
  for (int j = 0; j < n_lon; ++j) {
    first.push_back(ring_index(1, j));
    last.push_back(ring_index(rings, j));
  }
  m.neighbors.push_back(first);
  for (int i = 1; i <= rings; ++i)
    for (int j = 0; j < n_lon; ++j) {
      add(kPi * i / n_lat, 2 * kPi * j / n_lon);
      m.neighbors.push_back({i == 1 ? 0 : ring_index(i - 1, j), i == rings ? south : ring_index(i + 1, j),
                             ring_index(i, j - 1), ring_index(i, j + 1)});
    }
  add(kPi, 0);
  m.neighbors.push_back(last);
  return m;
}

std::pair<int, int> parse_mesh_size(const std::string& text) {
  std::string t = text;
  for (std::size_t p; (p = t.find("×")) != std::string::npos;) t.replace(p, 2, "x");
  static const std::regex re(R"(^\s*(\d{1,4})\s*[xX]\s*(\d{1,4})\s*$)");
  std::smatch mt;
  if (!std::regex_match(t, mt, re)) throw std::invalid_argument("mesh size must look like NxM, got '" + text + "'");
  const int n = std::stoi(mt[1]), m = std::stoi(mt[2]);
  if (n < 2 || m < 3) throw std::invalid_argument("mesh size " + text + " is too small (need N >= 2, M >= 3)");
  return {n, m};
}

std::string to_string(CriticalType t) {
  switch (t) {
  case CriticalType::minimum: return "min";
  case CriticalType::maximum: return "max";
  case CriticalType::saddle: return "saddle";
  case CriticalType::degenerate: return "degenerate";
  }
  return "?";
}

namespace {

// Least-squares surface gradient from neighbour differences projected to T_aS.
double neighbour_gradient_norm(const ImplicitDomain& dom, const SurfaceMesh& mesh,
                               const std::vector<LandscapeSample>& s, int i) {
  if (!s[i].converged) return kNaN;
  const Vec3 N = dom.interior_normal(mesh.points[i]);
  const Mat3 P = Mat3::Identity() - N * N.transpose();
  Eigen::Matrix3d A = Mat3::Zero();
  Vec3 rhs = Vec3::Zero();
  int used = 0;
  for (int j : mesh.neighbors[i]) {
    if (!s[j].converged) continue;
    const Vec3 t = P * (mesh.points[j] - mesh.points[i]);
    A += t * t.transpose();
    rhs += t * (s[j].energy - s[i].energy);
    ++used;
  }
  if (used < 2) return kNaN;
  // N is in the kernel of A; regularise along it.
  A += N * N.transpose() * A.trace();
  return (P * A.ldlt().solve(rhs)).norm();
}

} // namespace

EnergyLandscape scan_landscape(std::shared_ptr<const ImplicitDomain> domain, double lambda, const SurfaceMesh& mesh,
                               const ReducedOptions& opt, int jobs) {
  if (!(lambda > 0)) throw std::invalid_argument("scan_landscape: lambda must be positive");
  EnergyLandscape L;
  L.lambda = lambda;
  L.domain = domain->name();
  L.n_lat = mesh.n_lat;
  L.n_lon = mesh.n_lon;
  const int n = static_cast<int>(mesh.points.size());
  L.samples.resize(n);
  parallel_for(n, jobs, [&](int i) {
    LandscapeSample& s = L.samples[i];
    s.a = mesh.points[i];
    s.H_S = domain->mean_curvature(s.a);
    try {
      const ConstrainedSolution sol = solve_at(domain, s.a, lambda, opt);
      s.energy = sol.energy;
      s.converged = sol.converged;
      s.beta1 = sol.beta1();
      s.beta2 = sol.beta2();
    } catch (const std::exception& e) {
      s.energy = kNaN;
      s.error = e.what();
    }
  });
  double lo = std::numeric_limits<double>::infinity(), hi = -lo, sum = 0;
  int good = 0;
  for (int i = 0; i < n; ++i) {
    const auto& s = L.samples[i];
    if (!s.converged) {
      ++L.failures;
      spdlog::warn("scan point {} at {} failed: {}", i, point_str(s.a), s.error);
      continue;
    }
    ++good;
    sum += s.energy;
    if (s.energy < lo) lo = s.energy, L.argmin = i;
    if (s.energy > hi) hi = s.energy, L.argmax = i;
  }
  for (int i = 0; i < n; ++i) L.samples[i].grad_norm = neighbour_gradient_norm(*domain, mesh, L.samples, i);
  L.lambda_max = mesh.points.empty() ? 0.0 : lambda_max(domain, mesh.points[0], opt);
  if (good == 0) return L;
  L.spread = hi - lo;
  L.degenerate = L.spread <= 1e-7 * std::abs(sum / good);

  auto beta_sum = [&](int i) { return std::abs(L.samples[i].beta1) + std::abs(L.samples[i].beta2); };
  if (L.degenerate) {
    for (int i : std::set<int>{L.argmin, L.argmax}) {
      CriticalPoint c;
      c.index = i;
      c.a = L.samples[i].a;
      c.energy = L.samples[i].energy;
      c.beta_sum = beta_sum(i);
      L.critical_points.push_back(c);
    }
    return L;
  }

  // Candidates: discrete extrema and local minima of the gradient estimate.
  double gmax = 0;
  for (const auto& s : L.samples)
    if (std::isfinite(s.grad_norm)) gmax = std::max(gmax, s.grad_norm);
  std::set<int> cand{L.argmin, L.argmax};
  for (int i = 0; i < n; ++i) {
    const auto& s = L.samples[i];
    if (!s.converged) continue;
    bool le = true, ge = true, gmin = std::isfinite(s.grad_norm) && s.grad_norm <= 1e-2 * gmax;
    for (int j : mesh.neighbors[i]) {
      if (!L.samples[j].converged) continue;
      le = le && s.energy <= L.samples[j].energy;
      ge = ge && s.energy >= L.samples[j].energy;
      if (std::isfinite(L.samples[j].grad_norm)) gmin = gmin && s.grad_norm <= L.samples[j].grad_norm;
    }
    if (le || ge || gmin) cand.insert(i);
  }
  const std::vector<int> cv(cand.begin(), cand.end());
  const double h = surface_step(*domain, opt);
  std::vector<std::array<double, 8>> vals(cv.size());
  std::vector<std::string> errs(cv.size());
  parallel_for(static_cast<int>(cv.size() * 8), jobs, [&](int t) {
    const int c = t / 8, k = t % 8;
    try {
      const DomainChart chart = make_chart(domain, L.samples[cv[c]].a);
      vals[c][k] = reduced_energy(domain, chart.surface_point(h * kStencil[k]), lambda, opt);
    } catch (const std::exception& e) {
      vals[c][k] = kNaN;
      if (k == 0) errs[c] = e.what();
    }
  });
  const double thr = 1e-6 * L.spread;
  for (std::size_t c = 0; c < cv.size(); ++c) {
    const int i = cv[c];
    bool ok = true;
    for (double v : vals[c]) ok = ok && std::isfinite(v);
    if (!ok) {
      spdlog::warn("Hessian stencil at mesh point {} failed {}", i, errs[c]);
      continue;
    }
    const LocalQuadratic q = from_stencil(L.samples[i].energy, vals[c], h);
    Eigen::SelfAdjointEigenSolver<Mat2> es(q.hess);
    CriticalPoint cp;
    cp.index = i;
    cp.a = L.samples[i].a;
    cp.energy = L.samples[i].energy;
    cp.gradient = q.grad;
    cp.eigenvalues = es.eigenvalues();
    cp.beta_sum = beta_sum(i);
    // Second differences across one stencil step compared with the spread.
    const Vec2 dq = es.eigenvalues() * h * h;
    if (std::abs(dq(0)) <= thr || std::abs(dq(1)) <= thr)
      cp.type = CriticalType::degenerate;
    else if (dq(0) > 0)
      cp.type = CriticalType::minimum;
    else if (dq(1) < 0)
      cp.type = CriticalType::maximum;
    else
      cp.type = CriticalType::saddle;
    if (cp.type != CriticalType::degenerate) {
      // Keep only points whose Newton offset stays within the mesh spacing.
      double spacing = std::numeric_limits<double>::infinity();
      for (int j : mesh.neighbors[i]) spacing = std::min(spacing, (mesh.points[j] - cp.a).norm());
      if ((q.hess.inverse() * q.grad).norm() > spacing) continue;
    } else if (q.grad.norm() * h > thr && i != L.argmin && i != L.argmax) {
      continue;
    }
    L.critical_points.push_back(cp);
  }
  return L;
}

double landscape_rank_correlation(const EnergyLandscape& l, double tie_tolerance) {
  std::vector<double> W, mH;
  for (const auto& s : l.samples)
    if (s.converged) {
      W.push_back(s.energy);
      mH.push_back(-s.H_S);
    }
  return W.size() < 2 ? kNaN : spearman(W, mH, tie_tolerance);
}

std::string landscape_csv(const EnergyLandscape& l) {
  std::string out = "a_x,a_y,a_z,H_S,W_bar,grad_norm,converged\n";
  for (const auto& s : l.samples)
    out += fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{}\n", s.a(0), s.a(1), s.a(2), s.H_S,
                       s.energy, s.grad_norm, s.converged ? 1 : 0);
  return out;
}

nlohmann::json landscape_summary(const EnergyLandscape& l) {
  using nlohmann::json;
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  auto vec = [&](const Vec3& a) { return json::array({a(0), a(1), a(2)}); };
  json cps = json::array();
  for (const auto& c : l.critical_points)
    cps.push_back({{"index", c.index},
                   {"a", vec(c.a)},
                   {"type", to_string(c.type)},
                   {"W_bar", c.energy},
                   {"gradient", {c.gradient(0), c.gradient(1)}},
                   {"hessian_eigenvalues", {c.eigenvalues(0), c.eigenvalues(1)}},
                   {"beta_abs_sum", c.beta_sum}});
  json j = {{"domain", l.domain},
            {"lambda", l.lambda},
            {"lambda_max", l.lambda_max},
            {"mesh", fmt::format("{}x{}", l.n_lat, l.n_lon)},
            {"points", l.samples.size()},
            {"failures", l.failures},
            {"spread", l.spread},
            {"degenerate_landscape", l.degenerate},
            {"rank_correlation_W_vs_minus_H", num(landscape_rank_correlation(l))},
            {"rank_correlation_W_vs_minus_H_exact_ties", num(landscape_rank_correlation(l, 0.0))},
            {"critical_points", cps}};
  if (l.argmin >= 0) {
    j["min"] = {{"index", l.argmin}, {"a", vec(l.samples[l.argmin].a)}, {"W_bar", num(l.samples[l.argmin].energy)}};
    j["max"] = {{"index", l.argmax}, {"a", vec(l.samples[l.argmax].a)}, {"W_bar", num(l.samples[l.argmax].energy)}};
  }
  return j;
}

// ---------------------------------------------------------------------------
// Gradients and paths.

Vec2 desingularized_gradient(std::shared_ptr<const ImplicitDomain> domain, const Vec3& a, double lambda,
                             const ReducedOptions& opt) {
  if (lambda < 0) throw std::invalid_argument("desingularized_gradient: lambda must be non-negative");
  if (lambda == 0) return -kPi * shape_operator(domain, a).grad_HS;
  const DomainChart chart = make_chart(domain, a);
  const double h = surface_step(*domain, opt);
  Vec2 g;
  for (int k = 0; k < 2; ++k) {
    Vec2 e = Vec2::Zero();
    e(k) = h;
    g(k) = (reduced_energy(domain, chart.surface_point(e), lambda, opt) -
            reduced_energy(domain, chart.surface_point(-e), lambda, opt)) /
           (2 * h);
  }
  return g / lambda;
}

ConcentrationPath trace_concentration_path(std::shared_ptr<const ImplicitDomain> domain, const Vec3& a0,
                                           double lambda_max, int steps, const ReducedOptions& opt,
                                           const PathOptions& popt) {
  if (!(lambda_max > 0) || steps < 1) throw std::invalid_argument("trace: need lambda_max > 0 and steps >= 1");
  const double h = surface_step(*domain, opt);
  const double L = length_scale(*domain);
  ConcentrationPath path;

  // Nondegenerate critical point of H_S near a0.
  Vec3 a = domain->project(a0);
  {
    const DomainChart chart = make_chart(domain, a);
    const LocalQuadratic q = mean_curvature_stencil(*domain, chart, h);
    Eigen::SelfAdjointEigenSolver<Mat2> es(q.hess);
    const Vec2 ev = es.eigenvalues();
    const double floor = popt.degeneracy_tol * std::max(1.0, std::abs(domain->mean_curvature(a))) / (L * L);
    path.hessian_eigenvalues = ev;
    path.condition_number = ev.cwiseAbs().maxCoeff() / std::max(ev.cwiseAbs().minCoeff(), 1e-300);
    if (ev.cwiseAbs().minCoeff() <= floor)
      throw NondegeneracyError(fmt::format(
          "Hessian of H_S at {} is degenerate (eigenvalues {:.3g}, {:.3g}; condition number {:.3g})", point_str(a),
          ev(0), ev(1), path.condition_number));
  }
  bool found = false;
  for (int it = 0; it < 30; ++it) {
    const DomainChart chart = make_chart(domain, a);
    const LocalQuadratic q = mean_curvature_stencil(*domain, chart, h);
    if (q.grad.norm() * L <= 1e-10 * std::max(1.0, std::abs(domain->mean_curvature(a)))) {
      found = true;
      break;
    }
    a = domain->project(chart.surface_point(-q.hess.ldlt().solve(q.grad)));
  }
  if (!found) throw NondegeneracyError("no critical point of H_S found near " + point_str(a0));
  const Vec3 gamma0 = a;

  auto correct = [&](Vec3 a, double lam, double& check) -> std::optional<Vec3> {
    for (int it = 0; it <= popt.max_corrector; ++it) {
      Vec2 v;
      try {
        v = desingularized_gradient(domain, a, lam, opt);
      } catch (const ReducedEnergyError& e) {
        spdlog::debug("corrector solve failed: {}", e.what());
        return std::nullopt;
      }
      check = v.norm();
      if (check <= popt.tol) return a;
      if (it == popt.max_corrector) break;
      const DomainChart chart = make_chart(domain, a);
      const Mat2 J = -kPi * mean_curvature_stencil(*domain, chart, h).hess;
      a = domain->project(chart.surface_point(-J.lu().solve(v)));
    }
    return std::nullopt;
  };

  std::vector<double> lams{0.0};
  std::vector<Vec3> pts{gamma0};
  std::vector<double> checks{kPi * shape_operator(domain, gamma0).grad_HS.norm()};
  const double dl = lambda_max / steps;
  for (int k = 1; k <= steps; ++k) {
    const double target = k * dl;
    int bisections = 0;
    while (lams.back() < target * (1 - 1e-12)) {
      double lam = target;
      // Each bisection halves the step towards the target.
      for (int b = 0; b < bisections; ++b) lam = 0.5 * (lams.back() + lam);
      Vec3 pred = pts.back();
      if (pts.size() >= 2) {
        const std::size_t m = pts.size();
        const double r = (lam - lams[m - 1]) / (lams[m - 1] - lams[m - 2]);
        pred = domain->project(pts[m - 1] + r * (pts[m - 1] - pts[m - 2]));
      }
      double check = 0;
      if (auto got = correct(pred, lam, check)) {
        lams.push_back(lam);
        pts.push_back(*got);
        checks.push_back(check);
        spdlog::debug("path lambda {:.6g} at {} check {:.3g}", lam, point_str(*got), check);
        continue;
      }
      if (++bisections > popt.max_bisections)
        throw PathError(fmt::format("corrector failed at lambda = {} after {} bisections", lam, popt.max_bisections));
    }
  }
  path.lambdas.assign(lams.rbegin(), lams.rend());
  path.points.assign(pts.rbegin(), pts.rend());
  path.grad_check.assign(checks.rbegin(), checks.rend());
  path.limit = gamma0;
  return path;
}

std::string path_csv(const ConcentrationPath& p) {
  std::string out = "lambda,a_x,a_y,a_z,grad_check\n";
  for (std::size_t i = 0; i < p.lambdas.size(); ++i)
    out += fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", p.lambdas[i], p.points[i](0), p.points[i](1),
                       p.points[i](2), p.grad_check[i]);
  return out;
}

EnergyExpansion energy_expansion(std::shared_ptr<const ImplicitDomain> domain, const Vec3& a,
                                 std::vector<double> lambdas, const ReducedOptions& opt) {
  std::sort(lambdas.begin(), lambdas.end(), std::greater<>());
  lambdas.erase(std::unique(lambdas.begin(), lambdas.end()), lambdas.end());
  if (lambdas.empty() || !(lambdas.back() > 0)) throw std::invalid_argument("expansion needs positive lambdas");
  EnergyExpansion ex;
  ex.a = a;
  ex.H_S = shape_operator(domain, a).H_S;
  const HalfSphereGrid grid(opt.n_theta, opt.n_phi);
  const DomainChart chart = make_chart(domain, a);
  std::optional<ConstrainedSolution> prev;
  for (double lam : lambdas) {
    ConstrainedSolution sol;
    bool done = false;
    if (prev) {
      try {
        sol = solve_constrained(pullback_metric(chart, lam), grid, opt.solver,
                                scaled(prev->state, lam / prev->chart->lambda));
        sol.chart = ChartContext{chart, lam};
        done = true;
      } catch (const std::runtime_error& e) {
        spdlog::debug("continuation to lambda {} failed ({}), restarting", lam, e.what());
      }
    }
    if (!done) sol = solve_at(domain, a, lam, opt);
    ExpansionRow r;
    r.lambda = lam;
    r.energy = sol.energy;
    r.E = (sol.energy - 2 * kPi) / lam + kPi * ex.H_S;
    r.C = std::abs(r.E) / lam;
    r.iterations = sol.iterations;
    ex.rows.push_back(r);
    prev = std::move(sol);
  }
  const std::size_t m = ex.rows.size();
  auto slope = [&](std::size_t i) { return (ex.rows[i].energy - 2 * kPi) / ex.rows[i].lambda; };
  ex.slope_raw = slope(m - 1);
  ex.slope_extrapolated = ex.slope_raw;
  if (m >= 2) {
    const double l1 = ex.rows[m - 1].lambda, l2 = ex.rows[m - 2].lambda;
    ex.slope_extrapolated = slope(m - 1) - l1 * (slope(m - 2) - slope(m - 1)) / (l2 - l1);
  }
  double cmin = std::numeric_limits<double>::infinity(), cmax = 0;
  for (const auto& r : ex.rows) cmin = std::min(cmin, r.C), cmax = std::max(cmax, r.C);
  ex.C_variation = cmax > 0 ? (cmax - cmin) / cmax : 0.0;
  return ex;
}

RotationCheck rotation_equivariance(std::shared_ptr<const ImplicitDomain> domain, const Vec3& a, double lambda,
                                    const ReducedOptions& opt) {
  if (opt.n_phi % 4 != 0) throw std::invalid_argument("rotation check needs n_phi divisible by 4");
  const ConstrainedSolution s0 = solve_at(domain, a, lambda, opt, 0.0);
  const ConstrainedSolution s1 = solve_at(domain, a, lambda, opt, kPi / 2);
  RotationCheck rc;
  rc.shift = opt.n_phi / 4;
  const int np = opt.n_phi;
  for (int i = 0; i < opt.n_theta; ++i)
    for (int j = 0; j < np; ++j) rc.defect = std::max(rc.defect, std::abs(s1.w()(i, j) - s0.w()(i, (j + rc.shift) % np)));
  return rc;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y, double tie_tolerance) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("spearman: need two equal-length samples");
  auto ranks = [&](const std::vector<double>& v) {
    const std::size_t n = v.size();
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    const double tol = tie_tolerance * (*hi - *lo);
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n;) {
      std::size_t j = i;
      while (j + 1 < n && v[idx[j + 1]] - v[idx[i]] <= tol) ++j;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = 0.5 * (i + j) + 1;
      i = j + 1;
    }
    return r;
  };
  const std::vector<double> rx = ranks(x), ry = ranks(y);
  const Eigen::Map<const Eigen::VectorXd> a(rx.data(), rx.size()), b(ry.data(), ry.size());
  const Eigen::VectorXd ca = a.array() - a.mean(), cb = b.array() - b.mean();
  const double den = ca.norm() * cb.norm();
  return den > 0 ? ca.dot(cb) / den : 0.0;
}

} // namespace willmore
