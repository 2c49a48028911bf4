#include "willmore/barycenter_exp.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace willmore {

namespace {

constexpr double kCylinder = 2.0;
constexpr double kMaxSpeed = 1.5;
constexpr double kMaxTarget = 1.25;

bool inside_cylinder(const Vec3& c) { return c.head<2>().norm() < kCylinder && std::abs(c(2)) < kCylinder; }

Vec3 geodesic_accel(const MetricField& m, const Vec3& c, const Vec3& v) {
  const Tensor3 G = christoffel(m, c);
  return -Vec3(v.dot(G[0] * v), v.dot(G[1] * v), v.dot(G[2] * v));
}

bool use_closed_form(const MetricField& m, const ExpOptions& opt) {
  if (opt.method == ExpMethod::shooting) return false;
  if (opt.method == ExpMethod::closed_form && !m.embedding())
    throw std::invalid_argument("closed-form exponential map needs a flat embedding");
  return m.embedding() != nullptr;
}

std::string vec_str(const Vec3& v) {
  std::ostringstream os;
  os << "(" << v(0) << ", " << v(1) << ", " << v(2) << ")";
  return os.str();
}

} // namespace

GeodesicCurve shoot_geodesic(const GeodesicProblem& p) {
  if (p.n_steps < 1) throw std::invalid_argument("n_steps must be positive");
  GeodesicCurve c;
  c.position.reserve(p.n_steps + 1);
  c.velocity.reserve(p.n_steps + 1);
  Vec3 x = p.x, v = p.v;
  if (!inside_cylinder(x)) throw GeodesicExitError("geodesic starts outside the cylinder at " + vec_str(x));
  c.position.push_back(x);
  c.velocity.push_back(v);
  const double h = 1.0 / p.n_steps;
  for (int k = 0; k < p.n_steps; ++k) {
    const Vec3 k1x = v, k1v = geodesic_accel(p.metric, x, v);
    const Vec3 x2 = x + 0.5 * h * k1x, v2 = v + 0.5 * h * k1v;
    if (!inside_cylinder(x2)) throw GeodesicExitError("geodesic leaves the cylinder near " + vec_str(x2));
    const Vec3 k2x = v2, k2v = geodesic_accel(p.metric, x2, v2);
    const Vec3 x3 = x + 0.5 * h * k2x, v3 = v + 0.5 * h * k2v;
    if (!inside_cylinder(x3)) throw GeodesicExitError("geodesic leaves the cylinder near " + vec_str(x3));
    const Vec3 k3x = v3, k3v = geodesic_accel(p.metric, x3, v3);
    const Vec3 x4 = x + h * k3x, v4 = v + h * k3v;
    if (!inside_cylinder(x4)) throw GeodesicExitError("geodesic leaves the cylinder near " + vec_str(x4));
    const Vec3 k4x = v4, k4v = geodesic_accel(p.metric, x4, v4);
    x += h / 6 * (k1x + 2 * k2x + 2 * k3x + k4x);
    v += h / 6 * (k1v + 2 * k2v + 2 * k3v + k4v);
    if (!inside_cylinder(x)) throw GeodesicExitError("geodesic leaves the cylinder at " + vec_str(x));
    c.position.push_back(x);
    c.velocity.push_back(v);
  }
  return c;
}

Vec3 exp_map(const Vec3& x, const Vec3& v, const MetricField& metric, const ExpOptions& opt) {
  if (opt.enforce_guards && v.norm() >= kMaxSpeed)
    throw NeighborhoodError("initial velocity " + vec_str(v) + " outside |v| < 3/2");
  if (use_closed_form(metric, opt)) {
    const FlatEmbedding& e = *metric.embedding();
    return e.inverse(e.map(x) + e.jacobian(x) * v);
  }
  return shoot_geodesic({x, v, metric, opt.n_steps}).position.back();
}

namespace {

Mat3 exp_dv(const Vec3& x, const Vec3& v, const MetricField& metric, const ExpOptions& opt) {
  ExpOptions o = opt;
  o.enforce_guards = false;
  Mat3 J;
  for (int k = 0; k < 3; ++k) {
    Vec3 dv = Vec3::Zero();
    dv(k) = opt.fd_step;
    J.col(k) = (exp_map(x, v + dv, metric, o) - exp_map(x, v - dv, metric, o)) / (2 * opt.fd_step);
  }
  return J;
}

} // namespace

Vec3 exp_inverse(const Vec3& x, const Vec3& p, const MetricField& metric, const ExpOptions& opt) {
  if (opt.enforce_guards && p.norm() >= kMaxTarget)
    throw NeighborhoodError("target point " + vec_str(p) + " outside |p| < 5/4");
  if (use_closed_form(metric, opt)) {
    const FlatEmbedding& e = *metric.embedding();
    return e.jacobian(x).lu().solve(e.map(p) - e.map(x));
  }
  ExpOptions o = opt;
  o.enforce_guards = false;
  Vec3 v = p - x;
  double last = std::numeric_limits<double>::infinity();
  for (int it = 0; it < opt.max_iter; ++it) {
    const Vec3 r = exp_map(x, v, metric, o) - p;
    const double rn = r.norm();
    if (rn <= opt.tol * (1 + p.norm())) return v;
    if (!std::isfinite(rn) || (it > 3 && rn > last)) break;
    last = rn;
    v -= exp_dv(x, v, metric, o).lu().solve(r);
  }
  throw InjectivityError("exp_inverse did not converge for p = " + vec_str(p));
}

Mat3 exp_inverse_dp(const Vec3& x, const Vec3& p, const MetricField& metric, const ExpOptions& opt) {
  if (use_closed_form(metric, opt)) {
    const FlatEmbedding& e = *metric.embedding();
    return e.jacobian(x).lu().solve(e.jacobian(p));
  }
  const Vec3 v = exp_inverse(x, p, metric, opt);
  ExpOptions o = opt;
  o.enforce_guards = false;
  return exp_dv(x, v, metric, o).inverse();
}

Eigen::Matrix<double, 3, 2> exp_inverse_dx(const Vec3& x, const Vec3& p, const MetricField& metric,
                                           const ExpOptions& opt) {
  ExpOptions o = opt;
  o.enforce_guards = false;
  Eigen::Matrix<double, 3, 2> D;
  for (int k = 0; k < 2; ++k) {
    Vec3 dx = Vec3::Zero();
    dx(k) = opt.fd_step;
    D.col(k) = (exp_inverse(x + dx, p, metric, o) - exp_inverse(x - dx, p, metric, o)) / (2 * opt.fd_step);
  }
  return D;
}

Vec2 barycenter_field(const RadialGraphSurface& s, const Vec2& x, const ExpOptions& opt) {
  const auto& g = s.grid();
  const Vec3 x3(x(0), x(1), 0);
  const auto& dens = s.area_density().values();
  Vec2 acc = Vec2::Zero();
  for (int i = 0; i < g.n_theta(); ++i) {
    Vec2 row = Vec2::Zero();
    for (int j = 0; j < g.n_phi(); ++j)
      row += dens(i, j) * exp_inverse(x3, s.node(i, j).f, s.metric(), opt).head<2>();
    acc += g.theta_weights()(i) * row;
  }
  return -g.phi_step() * acc;
}

BarycenterResult barycenter(const RadialGraphSurface& s, const BarycenterOptions& opt) {
  BarycenterResult r;
  Vec2 c = Vec2::Zero();
  Vec2 X = barycenter_field(s, c, opt.exp);
  double best = X.norm();
  for (int it = 0; it < opt.max_iter; ++it) {
    r.iterations = it;
    if (X.norm() <= opt.tol) {
      r.center = c;
      r.residual = X.norm();
      return r;
    }
    Mat2 J;
    for (int k = 0; k < 2; ++k) {
      Vec2 d = Vec2::Zero();
      d(k) = opt.fd_step;
      J.col(k) = (barycenter_field(s, c + d, opt.exp) - barycenter_field(s, c - d, opt.exp)) / (2 * opt.fd_step);
    }
    c -= J.lu().solve(X);
    if (c.norm() >= kCylinder) break;
    X = barycenter_field(s, c, opt.exp);
    if (!std::isfinite(X.norm()) || (it > 4 && X.norm() > best)) break;
    best = std::min(best, X.norm());
  }
  throw NeighborhoodError("barycenter Newton failed to converge");
}

BarycenterResult barycenter(const SphereFunction& w, const MetricField& metric, const BarycenterOptions& opt) {
  return barycenter(RadialGraphSurface(w, metric), opt);
}

std::array<SphereFunction, 2> barycenter_gradient(const RadialGraphSurface& s, const Vec2& center,
                                                  const ExpOptions& opt) {
  const auto& g = s.grid();
  const int nt = g.n_theta(), np = g.n_phi();
  const Vec3 x3(center(0), center(1), 0);
  std::vector<Vec2> rhs(nt * np);
  Mat2 M = Mat2::Zero();
  const auto& dens = s.area_density().values();
  for (int i = 0; i < nt; ++i) {
    Mat2 row = Mat2::Zero();
    for (int j = 0; j < np; ++j) {
      const NodeGeometry& n = s.node(i, j);
      const Vec3 v = exp_inverse(x3, n.f, s.metric(), opt);
      const Mat3 Dp = exp_inverse_dp(x3, n.f, s.metric(), opt);
      const auto Dx = exp_inverse_dx(x3, n.f, s.metric(), opt);
      row += dens(i, j) * Dx.topRows<2>();
      rhs[i * np + j] = (v * n.H - Dp * n.nu).head<2>();
    }
    M += g.theta_weights()(i) * row;
  }
  M *= g.phi_step();
  const Mat2 Minv = M.inverse();
  std::array<SphereFunction, 2> out{SphereFunction(g), SphereFunction(g)};
  for (int i = 0; i < nt; ++i)
    for (int j = 0; j < np; ++j) {
      const Vec2 gr = Minv * rhs[i * np + j];
      out[0](i, j) = gr(0);
      out[1](i, j) = gr(1);
    }
  return out;
}

std::array<SphereFunction, 2> barycenter_gradient(const SphereFunction& w, const MetricField& metric,
                                                  const BarycenterOptions& opt) {
  RadialGraphSurface s(w, metric);
  const BarycenterResult b = barycenter(s, opt);
  return barycenter_gradient(s, b.center, opt.exp);
}

} // namespace willmore
