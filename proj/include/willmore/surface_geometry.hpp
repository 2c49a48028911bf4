// Geometry of surfaces parametrised over the half-sphere grid: radial graphs
// f = (1 + w) omega, or general position fields used by variation checks.
#pragma once

#include "willmore/ambient_metric.hpp"
#include "willmore/halfsphere_basis.hpp"

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace willmore {

class ImmersionError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Position and coordinate derivatives of the immersion at one parameter point.
struct PositionJet {
  Vec3 f, t, p, tt, tp, pp;
};

/// Everything the geometry needs at one point. Index 0 is theta, 1 is phi.
struct NodeGeometry {
  Vec3 f;
  Vec3 df[2];
  Mat3 ambient;             // g~ at f
  Mat2 g, ginv;
  double sqrt_det = 0;      // coordinate area density sqrt(det g)
  Vec3 nu;                  // unit normal, -omega on the round half-sphere
  Mat2 h;                   // second fundamental form
  std::array<Mat2, 2> gamma; // gamma[c](a,b) = Gamma^c_ab of the induced metric
  double H = 0;
  double h0_sq = 0;         // |h - H g / 2|^2
  double ric_nu = 0;        // Ric~(nu, nu)
  Tensor3 ambient_gamma;
};

/// Builds node geometry; the radial direction (if any) selects the normal formula.
NodeGeometry evaluate_node(const PositionJet& pj, const MetricField& metric, const Vec3* radial = nullptr);

class RadialGraphSurface {
public:
  /// f = (1 + w) omega
  RadialGraphSurface(const SphereFunction& w, const MetricField& metric);
  /// General immersion given by its three coordinate functions.
  static RadialGraphSurface from_position(const std::array<SphereFunction, 3>& f, const MetricField& metric);

  const HalfSphereGrid& grid() const { return grid_; }
  const MetricField& metric() const { return metric_; }
  bool is_radial_graph() const { return w_.has_value(); }
  const SphereFunction& w() const { return *w_; }

  const NodeGeometry& node(int i, int j) const { return nodes_[i * grid_.n_phi() + j]; }
  const NodeGeometry& equator_node(int j) const { return equator_[j]; }

  /// sqrt(det g) / sin(theta): density of dmu_g against the round measure.
  const SphereFunction& area_density() const { return density_; }
  const SphereFunction& H() const { return H_; }
  const SphereFunction& h0_squared() const { return h0sq_; }
  const SphereFunction& ricci_nu() const { return ric_; }

private:
  RadialGraphSurface() = default;
  void build(const std::vector<PositionJet>& jets, const std::vector<PositionJet>& eq_jets,
             const std::vector<Vec3>* radial, const std::vector<Vec3>* eq_radial);

  HalfSphereGrid grid_;
  MetricField metric_;
  std::optional<SphereFunction> w_;
  std::vector<NodeGeometry> nodes_, equator_;
  SphereFunction density_, H_, h0sq_, ric_;
};

std::vector<Mat2> induced_metric(const RadialGraphSurface& s);
std::vector<Vec3> unit_normal(const RadialGraphSurface& s);
SphereFunction mean_curvature(const RadialGraphSurface& s);
/// Laplace-Beltrami of the induced metric applied to u.
SphereFunction surface_laplacian(const RadialGraphSurface& s, const SphereFunction& u);
/// W = Delta_g H + (|h0|^2 + Ric(nu,nu)) H
SphereFunction willmore_operator(const RadialGraphSurface& s);
/// Same operator with H replaced by 2 + eta; only second derivatives of eta are taken.
SphereFunction willmore_operator_mixed(const RadialGraphSurface& s, const SphereFunction& eta);
double willmore_energy(const RadialGraphSurface& s);
double area(const RadialGraphSurface& s);
/// Integral of u against dmu_g.
double surface_integrate(const RadialGraphSurface& s, const SphereFunction& u);

struct BoundaryTrace {
  std::vector<Vec3> nu, tau, eta; // tau, eta as ambient vectors Df(.)
  Vector H, dH_deta, h_tau_eta, h_tilde_nu_nu, h_tilde_nu_tau, h_tilde_tau_tau, kappa_g, B, ds;
};
/// Boundary data along the equator. If eta is given, H = 2 + eta is used for the
/// curvature terms (mixed form), otherwise the surface's own H.
BoundaryTrace boundary_trace(const RadialGraphSurface& s, const SphereFunction* eta = nullptr);

/// Second fundamental form of {z = 0} under metric at point p, upper normal.
double plane_second_form(const MetricField& metric, const Vec3& p, const Vec3& X, const Vec3& Y);

/// Normal speed and tangential field of the variation f -> f + t psi omega.
struct VariationFields {
  SphereFunction phi;
  TangentField xi;
};
VariationFields radial_variation_fields(const RadialGraphSurface& s, const SphereFunction& psi);

/// 1/2 int W phi dmu + 1/2 oint (phi dH/deta - dphi/deta H - H^2 g(xi,eta)/2) ds
double first_variation_willmore(const RadialGraphSurface& s, const SphereFunction& phi, const TangentField& xi);

/// Analytic first variation compared with central differences of w -> w + t psi.
struct VariationCheck {
  std::string name;
  double analytic = 0;            // value, or max norm for pointwise formulas
  std::array<double, 2> error{};  // |difference quotient - analytic| at steps h and h / 2
  double order() const;           // log2(error[0] / error[1])
};
/// Area (-int H phi dmu - oint g(xi, eta) ds), mean curvature
/// (Delta phi + (|h|^2 + Ric(nu, nu)) phi + dH(xi)) and Willmore energy.
std::vector<VariationCheck> check_variation_formulas(const SphereFunction& w, const SphereFunction& psi,
                                                     const MetricField& metric, double h = 2e-2);

} // namespace willmore
