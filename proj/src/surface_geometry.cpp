#include "willmore/surface_geometry.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace willmore {

namespace {

Vec3 gamma_apply(const Tensor3& G, const Vec3& X, const Vec3& Y) {
  return {X.dot(G[0] * Y), X.dot(G[1] * Y), X.dot(G[2] * Y)};
}

PositionJet radial_jet(const DirectionJet& o, double w, double wt, double wp, double wtt, double wtp, double wpp) {
  PositionJet j;
  const double r = 1 + w;
  j.f = r * o.w;
  j.t = wt * o.w + r * o.t;
  j.p = wp * o.w + r * o.p;
  j.tt = wtt * o.w + 2 * wt * o.t + r * o.tt;
  j.tp = wtp * o.w + wt * o.p + wp * o.t + r * o.tp;
  j.pp = wpp * o.w + 2 * wp * o.p + r * o.pp;
  return j;
}

std::string where(double theta, double phi) {
  std::ostringstream os;
  os << " at (theta, phi) = (" << theta << ", " << phi << ")";
  return os.str();
}

} // namespace

NodeGeometry evaluate_node(const PositionJet& pj, const MetricField& metric, const Vec3* radial) {
  NodeGeometry n;
  n.f = pj.f;
  n.df[0] = pj.t;
  n.df[1] = pj.p;
  const MetricJet J = metric.jet(pj.f);
  const Mat3& G = J.g;
  n.ambient = G;
  n.ambient_gamma = christoffel(J);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) n.g(a, b) = n.df[a].dot(G * n.df[b]);
  const double tr = n.g.trace(), det = n.g.determinant();
  const double disc = std::sqrt(std::max(0.0, tr * tr / 4 - det));
  if (!(tr / 2 - disc >= 1e-8) || !std::isfinite(det)) throw ImmersionError("degenerate induced metric");
  n.sqrt_det = std::sqrt(det);
  n.ginv = n.g.inverse();

  Vec3 nv;
  if (radial) {
    const Vec3& w = *radial;
    Vec3 wt = Vec3::Zero();
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) wt += n.ginv(a, b) * w.dot(G * n.df[a]) * n.df[b];
    nv = w - wt;
  } else {
    nv = G.llt().solve(pj.t.cross(pj.p));
  }
  const double nn = nv.dot(G * nv);
  if (!(nn > 0)) throw ImmersionError("vanishing normal");
  n.nu = -nv / std::sqrt(nn);

  const Vec3 D[2][2] = {{pj.tt + gamma_apply(n.ambient_gamma, pj.t, pj.t), pj.tp + gamma_apply(n.ambient_gamma, pj.t, pj.p)},
                        {pj.tp + gamma_apply(n.ambient_gamma, pj.p, pj.t), pj.pp + gamma_apply(n.ambient_gamma, pj.p, pj.p)}};
  const Vec3 Gnu = G * n.nu;
  const Vec3 Gf[2] = {G * n.df[0], G * n.df[1]};
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      n.h(a, b) = D[a][b].dot(Gnu);
      const Vec2 low(D[a][b].dot(Gf[0]), D[a][b].dot(Gf[1]));
      const Vec2 up = n.ginv * low;
      n.gamma[0](a, b) = up(0);
      n.gamma[1](a, b) = up(1);
    }
  n.H = (n.ginv * n.h).trace();
  const Mat2 h0 = n.h - 0.5 * n.H * n.g;
  n.h0_sq = (n.ginv * h0 * n.ginv * h0).trace();
  n.ric_nu = metric.flat() ? 0.0 : n.nu.dot(ricci(metric, pj.f) * n.nu);
  return n;
}

RadialGraphSurface::RadialGraphSurface(const SphereFunction& w, const MetricField& metric)
    : grid_(w.grid()), metric_(metric), w_(w) {
  const auto& g = grid_;
  const int nt = g.n_theta(), np = g.n_phi();
  if (!w.all_finite()) throw ImmersionError("radial graph has non-finite values");
  if ((w.values().array() + 1.0).minCoeff() <= 0) throw ImmersionError("radial graph requires 1 + w > 0");
  const SphereDerivatives d = derivatives(w);
  const EquatorJet e = equator_jet(w);
  if ((e.f.array() + 1.0).minCoeff() <= 0) throw ImmersionError("radial graph requires 1 + w > 0 on the equator");
  std::vector<PositionJet> jets(nt * np), eq(np);
  std::vector<Vec3> rad(nt * np), eqrad(np);
  for (int i = 0; i < nt; ++i)
    for (int j = 0; j < np; ++j) {
      const DirectionJet o = direction_jet(g.theta_nodes()(i), g.phi(j));
      jets[i * np + j] = radial_jet(o, d.f(i, j), d.t(i, j), d.p(i, j), d.tt(i, j), d.tp(i, j), d.pp(i, j));
      rad[i * np + j] = o.w;
    }
  for (int j = 0; j < np; ++j) {
    const DirectionJet o = direction_jet(std::numbers::pi / 2, g.phi(j));
    eq[j] = radial_jet(o, e.f(j), e.t(j), e.p(j), e.tt(j), e.tp(j), e.pp(j));
    eqrad[j] = o.w;
  }
  build(jets, eq, &rad, &eqrad);
}

RadialGraphSurface RadialGraphSurface::from_position(const std::array<SphereFunction, 3>& f,
                                                     const MetricField& metric) {
  RadialGraphSurface s;
  s.grid_ = f[0].grid();
  s.metric_ = metric;
  const int nt = s.grid_.n_theta(), np = s.grid_.n_phi();
  std::array<SphereDerivatives, 3> d;
  std::array<EquatorJet, 3> e;
  for (int k = 0; k < 3; ++k) {
    d[k] = derivatives(f[k]);
    e[k] = equator_jet(f[k]);
  }
  std::vector<PositionJet> jets(nt * np), eq(np);
  for (int i = 0; i < nt; ++i)
    for (int j = 0; j < np; ++j) {
      PositionJet& p = jets[i * np + j];
      for (int k = 0; k < 3; ++k) {
        p.f(k) = d[k].f(i, j);
        p.t(k) = d[k].t(i, j);
        p.p(k) = d[k].p(i, j);
        p.tt(k) = d[k].tt(i, j);
        p.tp(k) = d[k].tp(i, j);
        p.pp(k) = d[k].pp(i, j);
      }
    }
  for (int j = 0; j < np; ++j)
    for (int k = 0; k < 3; ++k) {
      eq[j].f(k) = e[k].f(j);
      eq[j].t(k) = e[k].t(j);
      eq[j].p(k) = e[k].p(j);
      eq[j].tt(k) = e[k].tt(j);
      eq[j].tp(k) = e[k].tp(j);
      eq[j].pp(k) = e[k].pp(j);
    }
  s.build(jets, eq, nullptr, nullptr);
  return s;
}

void RadialGraphSurface::build(const std::vector<PositionJet>& jets, const std::vector<PositionJet>& eq_jets,
                               const std::vector<Vec3>* radial, const std::vector<Vec3>* eq_radial) {
  const auto& g = grid_;
  const int nt = g.n_theta(), np = g.n_phi();
  nodes_.resize(nt * np);
  equator_.resize(np);
  density_ = SphereFunction(g);
  H_ = SphereFunction(g);
  h0sq_ = SphereFunction(g);
  ric_ = SphereFunction(g);
  for (int i = 0; i < nt; ++i)
    for (int j = 0; j < np; ++j) {
      const int k = i * np + j;
      try {
        nodes_[k] = evaluate_node(jets[k], metric_, radial ? &(*radial)[k] : nullptr);
      } catch (const ImmersionError& e) {
        throw ImmersionError(e.what() + where(g.theta_nodes()(i), g.phi(j)));
      }
      const NodeGeometry& n = nodes_[k];
      density_(i, j) = n.sqrt_det / g.sin_theta()(i);
      H_(i, j) = n.H;
      h0sq_(i, j) = n.h0_sq;
      ric_(i, j) = n.ric_nu;
    }
  for (int j = 0; j < np; ++j) {
    try {
      equator_[j] = evaluate_node(eq_jets[j], metric_, eq_radial ? &(*eq_radial)[j] : nullptr);
    } catch (const ImmersionError& e) {
      throw ImmersionError(e.what() + where(std::numbers::pi / 2, g.phi(j)));
    }
  }
}

std::vector<Mat2> induced_metric(const RadialGraphSurface& s) {
  std::vector<Mat2> out;
  const auto& g = s.grid();
  out.reserve(g.size());
  for (int i = 0; i < g.n_theta(); ++i)
    for (int j = 0; j < g.n_phi(); ++j) out.push_back(s.node(i, j).g);
  return out;
}

std::vector<Vec3> unit_normal(const RadialGraphSurface& s) {
  std::vector<Vec3> out;
  const auto& g = s.grid();
  out.reserve(g.size());
  for (int i = 0; i < g.n_theta(); ++i)
    for (int j = 0; j < g.n_phi(); ++j) out.push_back(s.node(i, j).nu);
  return out;
}

SphereFunction mean_curvature(const RadialGraphSurface& s) { return s.H(); }

SphereFunction surface_laplacian(const RadialGraphSurface& s, const SphereFunction& u) {
  const auto& g = s.grid();
  const SphereDerivatives d = derivatives(u);
  SphereFunction r(g);
  for (int i = 0; i < g.n_theta(); ++i)
    for (int j = 0; j < g.n_phi(); ++j) {
      const NodeGeometry& n = s.node(i, j);
      const double u1[2] = {d.t(i, j), d.p(i, j)};
      const double u2[2][2] = {{d.tt(i, j), d.tp(i, j)}, {d.tp(i, j), d.pp(i, j)}};
      double acc = 0;
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
          acc += n.ginv(a, b) * (u2[a][b] - n.gamma[0](a, b) * u1[0] - n.gamma[1](a, b) * u1[1]);
      r(i, j) = acc;
    }
  return r;
}

SphereFunction willmore_operator(const RadialGraphSurface& s) {
  // constants carry no derivative; removing the mean keeps roundoff small
  const double mean = integrate(s.H()) / (2 * std::numbers::pi);
  SphereFunction centred = s.H();
  centred.values().array() -= mean;
  SphereFunction W = surface_laplacian(s, centred);
  W.values().array() += (s.h0_squared().values().array() + s.ricci_nu().values().array()) * s.H().values().array();
  return W;
}

SphereFunction willmore_operator_mixed(const RadialGraphSurface& s, const SphereFunction& eta) {
  SphereFunction W = surface_laplacian(s, eta);
  W.values().array() +=
      (s.h0_squared().values().array() + s.ricci_nu().values().array()) * (2.0 + eta.values().array());
  return W;
}

double surface_integrate(const RadialGraphSurface& s, const SphereFunction& u) {
  return integrate(u * s.area_density());
}

double area(const RadialGraphSurface& s) { return integrate(s.area_density()); }

double willmore_energy(const RadialGraphSurface& s) { return 0.25 * surface_integrate(s, s.H() * s.H()); }

double plane_second_form(const MetricField& metric, const Vec3& p, const Vec3& X, const Vec3& Y) {
  const MetricJet J = metric.jet(p);
  const Tensor3 G = christoffel(J);
  const double g33 = J.g.inverse()(2, 2);
  return X.dot(G[2] * Y) / std::sqrt(g33);
}

BoundaryTrace boundary_trace(const RadialGraphSurface& s, const SphereFunction* eta) {
  const auto& g = s.grid();
  const int np = g.n_phi();
  EquatorJet Hj;
  if (eta) {
    Hj = equator_jet(*eta);
    Hj.f.array() += 2.0;
  } else {
    Hj = equator_jet(s.H());
  }
  BoundaryTrace b;
  b.nu.resize(np);
  b.tau.resize(np);
  b.eta.resize(np);
  for (Vector* v : {&b.H, &b.dH_deta, &b.h_tau_eta, &b.h_tilde_nu_nu, &b.h_tilde_nu_tau, &b.h_tilde_tau_tau,
                    &b.kappa_g, &b.B, &b.ds})
    v->resize(np);
  for (int j = 0; j < np; ++j) {
    const NodeGeometry& n = s.equator_node(j);
    const double gtt = n.ginv(0, 0);
    const Vec2 eta_c(-n.ginv(0, 0) / std::sqrt(gtt), -n.ginv(1, 0) / std::sqrt(gtt));
    const Vec2 tau_c(0, 1 / std::sqrt(n.g(1, 1)));
    b.nu[j] = n.nu;
    b.tau[j] = tau_c(1) * n.df[1];
    b.eta[j] = eta_c(0) * n.df[0] + eta_c(1) * n.df[1];
    b.H(j) = Hj.f(j);
    b.dH_deta(j) = eta_c(0) * Hj.t(j) + eta_c(1) * Hj.p(j);
    b.h_tau_eta(j) = tau_c.dot(n.h * eta_c);
    b.kappa_g(j) = -n.gamma[0](1, 1) / (n.g(1, 1) * std::sqrt(gtt));
    const double g33 = n.ambient.inverse()(2, 2);
    const double sq = std::sqrt(g33);
    b.B(j) = n.nu(2) / sq;
    const Tensor3& G = n.ambient_gamma;
    b.h_tilde_nu_nu(j) = n.nu.dot(G[2] * n.nu) / sq;
    b.h_tilde_nu_tau(j) = n.nu.dot(G[2] * b.tau[j]) / sq;
    b.h_tilde_tau_tau(j) = b.tau[j].dot(G[2] * b.tau[j]) / sq;
    b.ds(j) = std::sqrt(n.g(1, 1));
  }
  return b;
}

VariationFields radial_variation_fields(const RadialGraphSurface& s, const SphereFunction& psi) {
  const auto& g = s.grid();
  VariationFields v{SphereFunction(g), {SphereFunction(g), SphereFunction(g)}};
  for (int i = 0; i < g.n_theta(); ++i)
    for (int j = 0; j < g.n_phi(); ++j) {
      const NodeGeometry& n = s.node(i, j);
      const Vec3 w = direction_jet(g.theta_nodes()(i), g.phi(j)).w;
      const Vec3 Gw = n.ambient * w;
      v.phi(i, j) = psi(i, j) * Gw.dot(n.nu);
      const Vec2 low(Gw.dot(n.df[0]), Gw.dot(n.df[1]));
      const Vec2 up = psi(i, j) * (n.ginv * low);
      v.xi.theta(i, j) = up(0);
      v.xi.phi(i, j) = up(1) * g.sin_theta()(i);
    }
  return v;
}

double first_variation_willmore(const RadialGraphSurface& s, const SphereFunction& phi, const TangentField& xi) {
  const auto& g = s.grid();
  const SphereFunction W = willmore_operator(s);
  const double interior = 0.5 * surface_integrate(s, W * phi);
  const EquatorJet pj = equator_jet(phi);
  const EquatorJet Hj = equator_jet(s.H());
  // tangent components have the opposite pole parity; sin(theta) * xi is a
  // regular scalar and equals xi on the equator
  SphereFunction st = xi.theta, sp = xi.phi;
  st.values().array().colwise() *= g.sin_theta().array();
  sp.values().array().colwise() *= g.sin_theta().array();
  const BoundaryFunction xt = equator_values(st), xp = equator_values(sp);
  double bnd = 0;
  for (int j = 0; j < g.n_phi(); ++j) {
    const NodeGeometry& n = s.equator_node(j);
    const double gtt = n.ginv(0, 0);
    const Vec2 eta_c(-n.ginv(0, 0) / std::sqrt(gtt), -n.ginv(1, 0) / std::sqrt(gtt));
    const double dphi = eta_c(0) * pj.t(j) + eta_c(1) * pj.p(j);
    const double dH = eta_c(0) * Hj.t(j) + eta_c(1) * Hj.p(j);
    const Vec2 xic(xt(j), xp(j));
    const double gxe = xic.dot(n.g * eta_c);
    const double H = Hj.f(j);
    bnd += (pj.f(j) * dH - dphi * H - 0.5 * H * H * gxe) * std::sqrt(n.g(1, 1));
  }
  bnd *= g.phi_step();
  return interior + 0.5 * bnd;
}

double VariationCheck::order() const { return std::log2(error[0] / error[1]); }

namespace {

// oint g(xi, eta) ds with eta the inward conormal.
double boundary_flux(const RadialGraphSurface& s, const TangentField& xi) {
  const auto& g = s.grid();
  SphereFunction st = xi.theta, sp = xi.phi;
  st.values().array().colwise() *= g.sin_theta().array();
  sp.values().array().colwise() *= g.sin_theta().array();
  const BoundaryFunction xt = equator_values(st), xp = equator_values(sp);
  double acc = 0;
  for (int j = 0; j < g.n_phi(); ++j) {
    const NodeGeometry& n = s.equator_node(j);
    const double gtt = n.ginv(0, 0);
    const Vec2 eta_c(-n.ginv(0, 0) / std::sqrt(gtt), -n.ginv(1, 0) / std::sqrt(gtt));
    acc += Vec2(xt(j), xp(j)).dot(n.g * eta_c) * std::sqrt(n.g(1, 1));
  }
  return acc * g.phi_step();
}

} // namespace

std::vector<VariationCheck> check_variation_formulas(const SphereFunction& w, const SphereFunction& psi,
                                                     const MetricField& metric, double h) {
  const auto& g = w.grid();
  const RadialGraphSurface s(w, metric);
  const VariationFields v = radial_variation_fields(s, psi);

  const double dA = -surface_integrate(s, s.H() * v.phi) - boundary_flux(s, v.xi);
  const double dW = first_variation_willmore(s, v.phi, v.xi);
  SphereFunction dH = surface_laplacian(s, v.phi);
  const SphereDerivatives Hd = derivatives(s.H());
  for (int i = 0; i < g.n_theta(); ++i)
    for (int j = 0; j < g.n_phi(); ++j) {
      const NodeGeometry& n = s.node(i, j);
      const double h_sq = n.h0_sq + 0.5 * n.H * n.H;
      dH(i, j) += (h_sq + n.ric_nu) * v.phi(i, j) + v.xi.theta(i, j) * Hd.t(i, j) +
                  v.xi.phi(i, j) / g.sin_theta()(i) * Hd.p(i, j);
    }

  std::vector<VariationCheck> out = {{"area", dA, {}}, {"mean_curvature", dH.max_abs(), {}}, {"willmore", dW, {}}};
  for (int k = 0; k < 2; ++k) {
    const double t = k == 0 ? h : h / 2;
    const RadialGraphSurface sp(w + t * psi, metric), sm(w - t * psi, metric);
    out[0].error[k] = std::abs((area(sp) - area(sm)) / (2 * t) - dA);
    SphereFunction q = sp.H() - sm.H();
    q *= 1 / (2 * t);
    out[1].error[k] = (q - dH).max_abs();
    out[2].error[k] = std::abs((willmore_energy(sp) - willmore_energy(sm)) / (2 * t) - dW);
  }
  return out;
}

} // namespace willmore
