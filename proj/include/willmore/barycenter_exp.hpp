// Geodesics, exponential map and the two-dimensional barycenter of a surface
// in the cylinder {|x| < 2, |z| < 2}.
#pragma once

#include "willmore/ambient_metric.hpp"
#include "willmore/surface_geometry.hpp"

#include <array>
#include <stdexcept>
#include <vector>

namespace willmore {

class GeodesicExitError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};
class InjectivityError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};
class NeighborhoodError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct GeodesicProblem {
  Vec3 x = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  MetricField metric;
  int n_steps = 64;
};

/// Samples at t = k / n_steps, k = 0..n_steps.
struct GeodesicCurve {
  std::vector<Vec3> position, velocity;
};

/// Classical RK4 for c'' + Gamma(c', c') = 0.
GeodesicCurve shoot_geodesic(const GeodesicProblem& p);

enum class ExpMethod {
  automatic,   // closed form if the metric has a flat embedding, else shooting
  shooting,
  closed_form,
};

struct ExpOptions {
  ExpMethod method = ExpMethod::automatic;
  int n_steps = 64;
  double tol = 1e-13;
  int max_iter = 30;
  double fd_step = 1e-5;
  bool enforce_guards = true; // |v| < 3/2 and |p| < 5/4
};

Vec3 exp_map(const Vec3& x, const Vec3& v, const MetricField& metric, const ExpOptions& opt = {});
Vec3 exp_inverse(const Vec3& x, const Vec3& p, const MetricField& metric, const ExpOptions& opt = {});
/// Derivative of p -> exp_x^{-1}(p).
Mat3 exp_inverse_dp(const Vec3& x, const Vec3& p, const MetricField& metric, const ExpOptions& opt = {});
/// Derivative of x -> exp_x^{-1}(p) along the two horizontal directions (3x2).
Eigen::Matrix<double, 3, 2> exp_inverse_dx(const Vec3& x, const Vec3& p, const MetricField& metric,
                                           const ExpOptions& opt = {});

struct BarycenterOptions {
  double tol = 1e-10;
  int max_iter = 25;
  double fd_step = 1e-6;
  ExpOptions exp;
};

struct BarycenterResult {
  Vec2 center = Vec2::Zero();
  double residual = 0;
  int iterations = 0;
};

/// X(x) = -pi_{R^2} int exp_x^{-1}(f) dmu_g
Vec2 barycenter_field(const RadialGraphSurface& s, const Vec2& x, const ExpOptions& opt = {});
BarycenterResult barycenter(const RadialGraphSurface& s, const BarycenterOptions& opt = {});
BarycenterResult barycenter(const SphereFunction& w, const MetricField& metric, const BarycenterOptions& opt = {});

/// L^2(dmu_g) gradients of the two center coordinates with respect to normal
/// variations, evaluated at grid nodes.
std::array<SphereFunction, 2> barycenter_gradient(const RadialGraphSurface& s, const Vec2& center,
                                                  const ExpOptions& opt = {});
std::array<SphereFunction, 2> barycenter_gradient(const SphereFunction& w, const MetricField& metric,
                                                  const BarycenterOptions& opt = {});

} // namespace willmore
