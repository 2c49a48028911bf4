#include "willmore/constrained_solver.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

namespace willmore {

namespace {

constexpr double kPi = std::numbers::pi;

double max_abs(const Eigen::Ref<const Matrix>& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

} // namespace

void to_json(nlohmann::json& j, const SolverOptions& o) {
  j = {{"tol", o.tol},
       {"max_iter", o.max_iter},
       {"jacobian", o.jacobian == JacobianKind::frozen ? "frozen" : "fd"},
       {"damping", o.damping},
       {"max_halvings", o.max_halvings},
       {"initial_residual_max", o.initial_residual_max},
       {"fd_step", o.fd_step},
       {"barycenter_tol", o.barycenter.tol}};
}

void from_json(const nlohmann::json& j, SolverOptions& o) {
  o.tol = j.value("tol", o.tol);
  o.max_iter = j.value("max_iter", o.max_iter);
  if (j.contains("jacobian")) {
    const std::string k = j.at("jacobian").get<std::string>();
    if (k == "frozen")
      o.jacobian = JacobianKind::frozen;
    else if (k == "fd" || k == "finite_difference")
      o.jacobian = JacobianKind::finite_difference;
    else
      throw std::invalid_argument("unknown jacobian kind '" + k + "' (expected frozen or fd)");
  }
  o.damping = j.value("damping", o.damping);
  o.max_halvings = j.value("max_halvings", o.max_halvings);
  o.initial_residual_max = j.value("initial_residual_max", o.initial_residual_max);
  o.fd_step = j.value("fd_step", o.fd_step);
  o.barycenter.tol = j.value("barycenter_tol", o.barycenter.tol);
  if (!(o.tol > 0) || o.max_iter < 1 || o.max_halvings < 0 || !(o.fd_step > 0))
    throw std::invalid_argument("solver options out of range");
}

SolverState SolverState::flat(const HalfSphereGrid& g) {
  return {SphereFunction(g), SphereFunction(g), 0, 0, 0};
}

SolverState SolverState::from_graph(const SphereFunction& w, const MetricField& metric) {
  RadialGraphSurface s(w, metric);
  SphereFunction eta = s.H();
  eta.values().array() -= 2.0;
  return {w, eta, 0, 0, 0};
}

double ConstraintResidual::interior_norm() const {
  const int n = interior.grid().n_theta();
  return max_abs(interior.values().topRows(n - 1));
}

double ConstraintResidual::consistency_norm() const {
  const int n = consistency.grid().n_theta();
  return max_abs(consistency.values().topRows(n - 1));
}

double ConstraintResidual::max_norm() const {
  double r = std::max(consistency_norm(), interior_norm());
  r = std::max({r, bc_natural.cwiseAbs().maxCoeff(), bc_ortho.cwiseAbs().maxCoeff()});
  return std::max({r, std::abs(area_defect), center_defect.cwiseAbs().maxCoeff()});
}

PsiFunctions psi_functions(const RadialGraphSurface& s, const BarycenterOptions& opt) {
  const auto& g = s.grid();
  PsiFunctions p{SphereFunction(g), SphereFunction(g), SphereFunction(g)};
  p.psi0 = (1.0 / std::sqrt(8 * kPi)) * s.H();
  const BarycenterResult b = barycenter(s, opt);
  p.center = b.center;
  const auto grad = barycenter_gradient(s, b.center, opt.exp);
  const double c = -std::sqrt(2 * kPi / 3);
  p.psi1 = c * grad[0];
  p.psi2 = c * grad[1];
  return p;
}

namespace {

ConstraintResidual residual_on(const RadialGraphSurface& s, const SolverState& x, const BarycenterOptions& opt) {
  ConstraintResidual r;
  const PsiFunctions psi = psi_functions(s, opt);
  r.consistency = x.eta;
  r.consistency.values().array() -= s.H().values().array() - 2.0;
  r.interior = willmore_operator_mixed(s, x.eta);
  r.interior -= x.alpha * psi.psi0 + x.beta1 * psi.psi1 + x.beta2 * psi.psi2;
  const BoundaryTrace bt = boundary_trace(s, &x.eta);
  r.bc_natural = bt.dH_deta + bt.h_tilde_nu_nu.cwiseProduct(bt.H);
  r.bc_ortho = bt.B;
  r.area_defect = area(s) - 2 * kPi;
  r.center_defect = psi.center;
  return r;
}

} // namespace

ConstraintResidual assemble_residual(const SolverState& x, const MetricField& metric, const BarycenterOptions& opt) {
  return residual_on(RadialGraphSurface(x.w, metric), x, opt);
}

ConstraintResidual assemble_residual(const SphereFunction& w, double alpha, const Vec2& beta,
                                     const MetricField& metric, const BarycenterOptions& opt) {
  RadialGraphSurface s(w, metric);
  SolverState x{w, s.H(), alpha, beta(0), beta(1)};
  x.eta.values().array() -= 2.0;
  return residual_on(s, x, opt);
}

double model_bilinear_form(const SphereFunction& u, const SphereFunction& v) {
  const TangentField gu = gradient(u), gv = gradient(v);
  return integrate(laplace_beltrami(u) * laplace_beltrami(v)) -
         2 * integrate(gu.theta * gv.theta + gu.phi * gv.phi);
}

std::vector<EigenIdentityItem> eigenvalue_identity(const HalfSphereGrid& g, int max_degree) {
  std::vector<HarmonicIndex> idx;
  for (int k = 0; k <= max_degree; ++k)
    for (int m = -k; m <= k; ++m)
      if ((k - std::abs(m)) % 2 == 0) idx.push_back({k, m});
  std::vector<SphereFunction> Y;
  std::vector<double> norm;
  for (const auto& i : idx) {
    Y.push_back(harmonic(g, i));
    norm.push_back(std::sqrt(integrate(Y.back() * Y.back())));
  }
  std::vector<EigenIdentityItem> out;
  for (std::size_t a = 0; a < idx.size(); ++a)
    for (std::size_t b = 0; b < idx.size(); ++b) {
      EigenIdentityItem it;
      it.u = idx[a];
      it.v = idx[b];
      const double lk = idx[a].eigenvalue(), ll = idx[b].eigenvalue();
      it.form = model_bilinear_form(Y[a], Y[b]);
      it.expected = lk * (ll - 2) * integrate(Y[a] * Y[b]);
      it.scale = std::max(1.0, std::abs(lk * ll)) * norm[a] * norm[b];
      out.push_back(it);
    }
  return out;
}

ModelLinearization model_linearization(const SphereFunction& phi) {
  const auto& g = phi.grid();
  ModelLinearization L;
  SphereFunction shifted = laplace_beltrami(phi);
  shifted += 2.0 * phi;
  L.L1 = laplace_beltrami(shifted);
  L.L2 = normal_derivative_equator(shifted);
  L.b_row = -normal_derivative_equator(phi);
  L.L3 = -2 * integrate(phi);
  const double c = 3 / (2 * kPi);
  L.L4(0) = c * integrate(phi * SphereFunction::sample(g, [](double t, double p) { return std::sin(t) * std::cos(p); }));
  L.L4(1) = c * integrate(phi * SphereFunction::sample(g, [](double t, double p) { return std::sin(t) * std::sin(p); }));
  return L;
}

Eigen::VectorXd pack_state(const SolverState& x) {
  const auto& g = x.w.grid();
  const int N = g.size(), np = g.n_phi();
  Eigen::VectorXd v(2 * N + 3);
  for (int i = 0; i < g.n_theta(); ++i)
    for (int j = 0; j < np; ++j) {
      v(i * np + j) = x.w(i, j);
      v(N + i * np + j) = x.eta(i, j);
    }
  v(2 * N) = x.alpha;
  v(2 * N + 1) = x.beta1;
  v(2 * N + 2) = x.beta2;
  return v;
}

SolverState unpack_state(const HalfSphereGrid& g, const Eigen::VectorXd& v) {
  const int N = g.size(), np = g.n_phi();
  if (v.size() != 2 * N + 3) throw std::invalid_argument("packed state has the wrong size");
  SolverState x = SolverState::flat(g);
  for (int i = 0; i < g.n_theta(); ++i)
    for (int j = 0; j < np; ++j) {
      x.w(i, j) = v(i * np + j);
      x.eta(i, j) = v(N + i * np + j);
    }
  x.alpha = v(2 * N);
  x.beta1 = v(2 * N + 1);
  x.beta2 = v(2 * N + 2);
  return x;
}

Eigen::VectorXd pack_residual(const ConstraintResidual& r) {
  const auto& g = r.interior.grid();
  const int n = g.n_theta(), np = g.n_phi(), N = g.size();
  Eigen::VectorXd v(2 * N + 3);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < np; ++j) {
      const bool last = i == n - 1;
      v(i * np + j) = last ? r.bc_ortho(j) : r.consistency(i, j);
      v(N + i * np + j) = last ? r.bc_natural(j) : r.interior(i, j);
    }
  v(2 * N) = r.area_defect;
  v(2 * N + 1) = r.center_defect(0);
  v(2 * N + 2) = r.center_defect(1);
  return v;
}

FrozenJacobian::FrozenJacobian(const HalfSphereGrid& g) : grid_(g) {
  const int n = g.n_theta(), M = g.max_mode();
  const Eigen::ArrayXd s = g.sin_theta().array(), cot = g.cos_theta().array() / s;
  const Eigen::ArrayXd wt = g.theta_weights().array();
  const Matrix I = Matrix::Identity(n, n);
  for (int m = 0; m <= M; ++m) {
    const auto& op = g.mode(m);
    const Matrix lap = op.d_theta2 + cot.matrix().asDiagonal() * op.d_theta -
                       Matrix((double(m * m) / s.square()).matrix().asDiagonal());
    for (int fam = 0; fam < 2; ++fam) {
      const bool sine = fam == 1;
      if (sine && (m == 0 || m == M)) continue;
      int extra = -1;
      if (m == 0) extra = 0;
      if (m == 1) extra = sine ? 2 : 1;
      const int size = 2 * n + (extra >= 0 ? 1 : 0);
      Matrix J = Matrix::Zero(size, size);
      // each second-order block: n - 1 collocation rows and one boundary row
      J.block(0, 0, n - 1, n) = (lap + 2 * I).topRows(n - 1);
      J.block(0, n, n - 1, n) = I.topRows(n - 1);
      J.block(n - 1, 0, 1, n) = -op.eq_dtheta;
      J.block(n, n, n - 1, n) = lap.topRows(n - 1);
      J.block(2 * n - 1, n, 1, n) = -op.eq_dtheta;
      if (extra == 0) {
        J.block(n, 2 * n, n - 1, 1).setConstant(-1 / std::sqrt(2 * kPi));
        J.block(2 * n, 0, 1, n) = (4 * kPi * wt).matrix().transpose();
      } else if (extra > 0) {
        J.block(n, 2 * n, n - 1, 1) = -std::sqrt(3 / (2 * kPi)) * s.head(n - 1).matrix();
        J.block(2 * n, 0, 1, n) = (1.5 * wt * s).matrix().transpose();
      }
      Block b{m, sine, extra, J, Eigen::PartialPivLU<Matrix>(J)};
      blocks_.push_back(std::move(b));
    }
  }
}

std::shared_ptr<const FrozenJacobian> FrozenJacobian::for_grid(const HalfSphereGrid& g) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::shared_ptr<const FrozenJacobian>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[{g.n_theta(), g.n_phi()}];
  if (!slot) slot = std::make_shared<const FrozenJacobian>(g);
  return slot;
}

namespace {

// Splits a packed vector into two n x n_phi fields plus three scalars.
struct Split {
  Matrix a, b;
  Eigen::Vector3d tail;
};

Split split(const HalfSphereGrid& g, const Eigen::VectorXd& v) {
  const int n = g.n_theta(), np = g.n_phi(), N = g.size();
  Split s{Matrix(n, np), Matrix(n, np), v.tail<3>()};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < np; ++j) {
      s.a(i, j) = v(i * np + j);
      s.b(i, j) = v(N + i * np + j);
    }
  return s;
}

Eigen::VectorXd join(const HalfSphereGrid& g, const Matrix& a, const Matrix& b, const Eigen::Vector3d& tail) {
  const int n = g.n_theta(), np = g.n_phi(), N = g.size();
  Eigen::VectorXd v(2 * N + 3);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < np; ++j) {
      v(i * np + j) = a(i, j);
      v(N + i * np + j) = b(i, j);
    }
  v.tail<3>() = tail;
  return v;
}

} // namespace

Eigen::VectorXd FrozenJacobian::solve(const Eigen::VectorXd& r) const {
  const auto& g = grid_;
  const int n = g.n_theta(), M = g.max_mode();
  const Split in = split(g, r);
  const Matrix ac = in.a * g.cos_analysis(), as = in.a * g.sin_analysis();
  const Matrix bc = in.b * g.cos_analysis(), bs = in.b * g.sin_analysis();
  Matrix wc = Matrix::Zero(n, M + 1), ws = wc, ec = wc, es = wc;
  Eigen::Vector3d mult = Eigen::Vector3d::Zero();
  for (const Block& blk : blocks_) {
    const int size = blk.J.rows();
    Eigen::VectorXd rhs(size);
    rhs.head(n) = blk.sine ? as.col(blk.m) : ac.col(blk.m);
    rhs.segment(n, n) = blk.sine ? bs.col(blk.m) : bc.col(blk.m);
    if (blk.extra >= 0) rhs(2 * n) = in.tail(blk.extra);
    const Eigen::VectorXd x = blk.lu.solve(rhs);
    (blk.sine ? ws : wc).col(blk.m) = x.head(n);
    (blk.sine ? es : ec).col(blk.m) = x.segment(n, n);
    if (blk.extra >= 0) mult(blk.extra) = x(2 * n);
  }
  return join(g, wc * g.cos_synthesis() + ws * g.sin_synthesis(), ec * g.cos_synthesis() + es * g.sin_synthesis(),
              mult);
}

Eigen::VectorXd FrozenJacobian::apply(const Eigen::VectorXd& x) const {
  const auto& g = grid_;
  const int n = g.n_theta(), M = g.max_mode();
  const Split in = split(g, x);
  const Matrix ac = in.a * g.cos_analysis(), as = in.a * g.sin_analysis();
  const Matrix bc = in.b * g.cos_analysis(), bs = in.b * g.sin_analysis();
  Matrix rc = Matrix::Zero(n, M + 1), rs = rc, qc = rc, qs = rc;
  Eigen::Vector3d tail = Eigen::Vector3d::Zero();
  for (const Block& blk : blocks_) {
    const int size = blk.J.rows();
    Eigen::VectorXd v(size);
    v.head(n) = blk.sine ? as.col(blk.m) : ac.col(blk.m);
    v.segment(n, n) = blk.sine ? bs.col(blk.m) : bc.col(blk.m);
    if (blk.extra >= 0) v(2 * n) = in.tail(blk.extra);
    const Eigen::VectorXd y = blk.J * v;
    (blk.sine ? rs : rc).col(blk.m) = y.head(n);
    (blk.sine ? qs : qc).col(blk.m) = y.segment(n, n);
    if (blk.extra >= 0) tail(blk.extra) = y(2 * n);
  }
  return join(g, rc * g.cos_synthesis() + rs * g.sin_synthesis(), qc * g.cos_synthesis() + qs * g.sin_synthesis(),
              tail);
}

double FrozenJacobian::min_singular_value() const {
  double smin = std::numeric_limits<double>::infinity();
  for (const Block& b : blocks_) {
    Eigen::JacobiSVD<Matrix> svd(b.J);
    smin = std::min(smin, svd.singularValues().minCoeff());
  }
  return smin;
}

Matrix finite_difference_jacobian(const SolverState& x, const MetricField& metric, const SolverOptions& opt) {
  const auto& g = x.w.grid();
  const Eigen::VectorXd x0 = pack_state(x);
  const int size = x0.size();
  Matrix J(size, size);
  for (int k = 0; k < size; ++k) {
    Eigen::VectorXd xp = x0, xm = x0;
    xp(k) += opt.fd_step;
    xm(k) -= opt.fd_step;
    const Eigen::VectorXd rp = pack_residual(assemble_residual(unpack_state(g, xp), metric, opt.barycenter));
    const Eigen::VectorXd rm = pack_residual(assemble_residual(unpack_state(g, xm), metric, opt.barycenter));
    J.col(k) = (rp - rm) / (2 * opt.fd_step);
  }
  return J;
}

namespace {

struct Trial {
  bool ok = false;
  ConstraintResidual r;
  double norm = std::numeric_limits<double>::infinity();
  std::string failure;
};

Trial try_residual(const SolverState& x, const MetricField& metric, const BarycenterOptions& opt) {
  Trial t;
  try {
    t.r = assemble_residual(x, metric, opt);
    t.norm = t.r.max_norm();
    t.ok = std::isfinite(t.norm);
    if (!t.ok) t.failure = "non-finite residual";
  } catch (const ImmersionError& e) {
    t.failure = e.what();
  } catch (const NeighborhoodError& e) {
    t.failure = e.what();
  } catch (const InjectivityError& e) {
    t.failure = e.what();
  } catch (const GeodesicExitError& e) {
    t.failure = e.what();
  } catch (const DefinitenessError& e) {
    t.failure = e.what();
  } catch (const ChartRangeError& e) {
    t.failure = e.what();
  }
  return t;
}

} // namespace

ConstrainedSolution solve_constrained(const MetricField& metric, const HalfSphereGrid& grid, const SolverOptions& opt,
                                      const std::optional<SolverState>& initial) {
  SolverState x = SolverState::flat(grid);
  if (initial) {
    x = *initial;
    if (!x.w.grid().same_as(grid)) {
      x.w = resample(x.w, grid);
      x.eta = resample(x.eta, grid);
    }
  }
  ConstrainedSolution sol;
  sol.metric = metric;
  Trial cur = try_residual(x, metric, opt.barycenter);
  if (!cur.ok) throw DivergenceError("initial state rejected: " + cur.failure, {});
  sol.history.push_back(cur.norm);
  if (cur.norm > opt.initial_residual_max)
    throw DivergenceError("initial residual " + std::to_string(cur.norm) + " exceeds the configured threshold " +
                              std::to_string(opt.initial_residual_max),
                          sol.history);

  const auto frozen = opt.jacobian == JacobianKind::frozen ? FrozenJacobian::for_grid(grid) : nullptr;
  int it = 0;
  for (; it < opt.max_iter && cur.norm > opt.tol; ++it) {
    Eigen::VectorXd step;
    if (frozen) {
      step = frozen->solve(pack_residual(cur.r));
    } else {
      const Matrix J = finite_difference_jacobian(x, metric, opt);
      step = J.partialPivLu().solve(pack_residual(cur.r));
    }
    const Eigen::VectorXd x0 = pack_state(x);
    double t = 1.0;
    bool accepted = false;
    Trial trial;
    for (int h = 0; h <= opt.max_halvings; ++h, t *= 0.5) {
      trial = try_residual(unpack_state(grid, x0 - t * step), metric, opt.barycenter);
      if (trial.ok && (!opt.damping || trial.norm < cur.norm)) {
        accepted = true;
        break;
      }
      spdlog::debug("newton step {} rejected at t = {}: {}", it, t,
                    trial.ok ? "residual grew" : trial.failure);
    }
    if (!accepted) {
      sol.history.push_back(trial.norm);
      throw DivergenceError("damped Newton step failed after " + std::to_string(opt.max_halvings) +
                                " halvings at iteration " + std::to_string(it),
                            sol.history);
    }
    x = unpack_state(grid, x0 - t * step);
    cur = trial;
    sol.history.push_back(cur.norm);
    spdlog::debug("newton {}: residual {:.3e} (t = {})", it, cur.norm, t);
  }
  if (cur.norm > opt.tol)
    throw DivergenceError("no convergence in " + std::to_string(opt.max_iter) + " iterations, residual " +
                              std::to_string(cur.norm),
                          sol.history);

  sol.state = x;
  sol.residual = cur.r;
  sol.iterations = it;
  sol.converged = true;
  RadialGraphSurface s(x.w, metric);
  sol.energy = willmore_energy(s);
  double dev = 0;
  for (int i = 0; i < grid.n_theta(); ++i)
    for (int j = 0; j < grid.n_phi(); ++j)
      dev = std::max(dev, (s.node(i, j).ambient - Mat3::Identity()).cwiseAbs().maxCoeff());
  sol.metric_deviation = dev;
  sol.estimate_constant = dev > 0 ? x.w.max_abs() / dev : 0.0;
  return sol;
}

bool VerificationReport::all_pass() const {
  for (const auto& i : items)
    if (!i.pass && !i.informational) return false;
  return true;
}

VerificationReport verify_solution(const ConstrainedSolution& sol, int n_theta_fine, double tol) {
  const auto& g0 = sol.state.w.grid();
  if (n_theta_fine <= 0) n_theta_fine = g0.n_theta() + 16;
  const HalfSphereGrid g(n_theta_fine, 2 * n_theta_fine);
  const SphereFunction w = resample(sol.state.w, g), eta = resample(sol.state.eta, g);
  const RadialGraphSurface s(w, sol.metric);
  const PsiFunctions psi = psi_functions(s);
  VerificationReport rep;
  auto add = [&](const std::string& name, double v, double t, bool info = false) {
    rep.items.push_back({name, v, t, v <= t, info});
  };

  SphereFunction cons = eta;
  cons.values().array() -= s.H().values().array() - 2.0;
  add("consistency", cons.max_abs(), tol);

  const double a = sol.alpha(), b1 = sol.beta1(), b2 = sol.beta2();
  SphereFunction mixed = willmore_operator_mixed(s, eta);
  mixed -= a * psi.psi0 + b1 * psi.psi1 + b2 * psi.psi2;
  add("interior_mixed", mixed.max_abs(), tol);

  // Direct fourth-order evaluation. The uncollocated consistency row leaves a
  // ~1e-10 mismatch that four derivatives blow up by n^4 near the equator.
  SphereFunction direct = willmore_operator(s);
  direct -= a * psi.psi0 + b1 * psi.psi1 + b2 * psi.psi2;
  add("interior_direct_l2", std::sqrt(surface_integrate(s, direct * direct)), 1e3 * tol, true);

  add("area", std::abs(area(s) - 2 * kPi), tol);
  add("barycenter", psi.center.norm(), tol);

  const BoundaryTrace bt = boundary_trace(s);
  const BoundaryTrace bm = boundary_trace(s, &eta);
  add("orthogonality", bt.B.cwiseAbs().maxCoeff(), tol);
  add("natural_bc", (bm.dH_deta + bm.h_tilde_nu_nu.cwiseProduct(bm.H)).cwiseAbs().maxCoeff(), tol);
  add("natural_bc_geometric", (bt.dH_deta + bt.h_tilde_nu_nu.cwiseProduct(bt.H)).cwiseAbs().maxCoeff(),
      1e2 * tol, true);
  add("boundary_shear", (bt.h_tau_eta + bt.h_tilde_nu_tau).cwiseAbs().maxCoeff(), tol);
  add("geodesic_curvature", (bt.kappa_g - bt.h_tilde_tau_tau).cwiseAbs().maxCoeff(), tol);

  if (sol.chart && sol.metric.embedding()) {
    const DomainChart& ch = sol.chart->chart;
    const double lam = sol.chart->lambda;
    const FlatEmbedding& emb = *sol.metric.embedding();
    Mat3 R;
    R << ch.v1(), ch.v2(), ch.normal();
    double worst = 0, worst_geo = 0, chart_form = 0;
    for (int j = 0; j < g.n_phi(); ++j) {
      const NodeGeometry& n = s.equator_node(j);
      const Vec3 p = ch.to_space(lam * n.f);
      const Vec3 nu_p = R * (emb.jacobian(n.f) * n.nu);
      const auto& dom = ch.domain();
      const double hS = -nu_p.dot(dom.hess(p) * nu_p) / dom.grad(p).norm();
      worst = std::max(worst, std::abs(bm.dH_deta(j) + lam * hS * bm.H(j)));
      worst_geo = std::max(worst_geo, std::abs(bt.dH_deta(j) + lam * hS * bt.H(j)));
      chart_form = std::max(chart_form, std::abs(lam * hS - bt.h_tilde_nu_nu(j)));
    }
    add("natural_bc_physical", worst, tol);
    add("natural_bc_physical_geometric", worst_geo, 1e2 * tol, true);
    add("chart_vs_physical_form", chart_form, tol);
  }
  return rep;
}

} // namespace willmore
