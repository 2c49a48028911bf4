// Ambient metrics on the cylinder Z_2, implicit domains and their charts.
#pragma once

#include <Eigen/Dense>

#include <array>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace willmore {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
/// t[k](i,j): symmetric in i,j; used for dg, Christoffel symbols and third derivatives.
using Tensor3 = std::array<Mat3, 3>;

class DefinitenessError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};
class ChartRangeError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};
class DomainError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Metric value and first partial derivatives, dg[k] = d_k g.
struct MetricJet {
  Mat3 g;
  Tensor3 dg;
};

/// Diffeomorphism Phi with g = Phi^* delta. When a metric carries one, geodesics
/// are straight lines in the image and the curvature vanishes identically.
class FlatEmbedding {
public:
  virtual ~FlatEmbedding() = default;
  virtual Vec3 map(const Vec3& y) const = 0;
  virtual Mat3 jacobian(const Vec3& y) const = 0;
  virtual Vec3 inverse(const Vec3& p) const = 0;
};

class MetricField {
public:
  class Model {
  public:
    virtual ~Model() = default;
    virtual MetricJet jet(const Vec3& p) const = 0;
    virtual const FlatEmbedding* embedding() const { return nullptr; }
  };

  MetricField();  // Euclidean
  explicit MetricField(std::shared_ptr<const Model> model, double h_fd = 1e-4);

  static MetricField euclidean();
  /// exp(2u) delta with u(p) = c0 + c.p
  static MetricField conformal(const Vec3& c, double c0 = 0.0);
  /// Arbitrary smooth field; first derivatives by central differences.
  static MetricField from_function(std::function<Mat3(const Vec3&)> g, double h_fd = 1e-4);
  /// delta + s * q
  static MetricField perturbation(const MetricField& q, double s);

  Mat3 operator()(const Vec3& p) const { return model_->jet(p).g; }
  MetricJet jet(const Vec3& p) const { return model_->jet(p); }
  /// Partial derivative along the listed axes (order 0..3).
  Mat3 partial(const Vec3& p, const std::vector<int>& axes) const;

  bool flat() const { return model_->embedding() != nullptr; }
  const FlatEmbedding* embedding() const { return model_->embedding(); }
  double h_fd() const { return h_fd_; }

private:
  std::shared_ptr<const Model> model_;
  double h_fd_ = 1e-4;
};

/// Gamma[k](i,j) = Gamma^k_ij.
Tensor3 christoffel(const MetricJet& jet);
Tensor3 christoffel(const MetricField& metric, const Vec3& p);
/// Ricci tensor; zero for metrics with a flat embedding, else by differences of
/// the Christoffel symbols with the metric's step.
Mat3 ricci(const MetricField& metric, const Vec3& p);

/// Polynomial in three variables with exact derivatives.
class Polynomial3 {
public:
  struct Term {
    double c;
    int e[3];
  };
  Polynomial3() = default;
  explicit Polynomial3(std::vector<Term> terms);
  double operator()(const Vec3& p) const;
  Polynomial3 derivative(int axis) const;
  Polynomial3 operator+(const Polynomial3& o) const;
  Polynomial3 operator*(double s) const;
  const std::vector<Term>& terms() const { return terms_; }

private:
  std::vector<Term> terms_;
};

/// Solid harmonic r^l Y_l^m as an (unnormalised) homogeneous polynomial, l <= 3.
Polynomial3 solid_harmonic(int degree, int order);

/// Smooth domain Omega = {F > 0}.
class ImplicitDomain {
public:
  virtual ~ImplicitDomain() = default;
  virtual double level(const Vec3& p) const = 0;
  virtual Vec3 grad(const Vec3& p) const = 0;
  virtual Mat3 hess(const Vec3& p) const = 0;
  virtual Tensor3 third(const Vec3& p) const = 0;
  virtual std::string name() const = 0;
  virtual bool bounded() const { return true; }
  /// Upper bound for the principal curvatures of the boundary.
  virtual double curvature_bound() const = 0;
  virtual double diameter() const = 0;
  /// Boundary point on the ray from the origin in direction d (bounded domains).
  virtual Vec3 boundary_point(const Vec3& d) const;

  Vec3 interior_normal(const Vec3& p) const { return grad(p).normalized(); }
  /// Mean curvature of the boundary at p w.r.t. the interior normal (unit sphere: 2).
  double mean_curvature(const Vec3& p) const;
  /// Newton projection onto {F = 0} along the gradient.
  Vec3 project(const Vec3& p) const;
};

class PolynomialDomain : public ImplicitDomain {
public:
  PolynomialDomain(std::string name, Polynomial3 f, double curvature_bound, double diameter, bool bounded = true);
  double level(const Vec3& p) const override { return f_(p); }
  Vec3 grad(const Vec3& p) const override;
  Mat3 hess(const Vec3& p) const override;
  Tensor3 third(const Vec3& p) const override;
  std::string name() const override { return name_; }
  bool bounded() const override { return bounded_; }
  double curvature_bound() const override { return kappa_; }
  double diameter() const override { return diam_; }

private:
  std::string name_;
  Polynomial3 f_;
  std::array<Polynomial3, 3> d1_;
  std::array<Polynomial3, 6> d2_;
  std::array<Polynomial3, 10> d3_;
  double kappa_, diam_;
  bool bounded_;
};

std::shared_ptr<const ImplicitDomain> make_ball(double radius = 1.0);
std::shared_ptr<const ImplicitDomain> make_ellipsoid(double a, double b, double c);
std::shared_ptr<const ImplicitDomain> make_perturbed_ball(double radius, double amplitude, int degree, int order);
/// Omega = {z > 0}; unbounded, used as the flat stand-in.
std::shared_ptr<const ImplicitDomain> make_half_space();

/// Builds a domain from {"type": ..., "params": {...}}.
std::shared_ptr<const ImplicitDomain> domain_from_json(const nlohmann::json& j);
/// Parses JSON text; syntax errors are reported with line and column.
std::shared_ptr<const ImplicitDomain> parse_domain(const std::string& text, const std::string& source = "<inline>");

/// Graph function value and derivatives up to third order.
struct GraphJet {
  double value = 0;
  Vec2 d1 = Vec2::Zero();
  Mat2 d2 = Mat2::Zero();
  std::array<Mat2, 2> d3{Mat2::Zero(), Mat2::Zero()}; // d3[k](i,j) = d_ijk phi
};

class DomainChart {
public:
  DomainChart(std::shared_ptr<const ImplicitDomain> domain, const Vec3& a, const Vec3& v1, const Vec3& v2,
              const Vec3& N, double r0);

  const Vec3& a() const { return a_; }
  const Vec3& normal() const { return N_; }
  const Vec3& v1() const { return v1_; }
  const Vec3& v2() const { return v2_; }
  double r0() const { return r0_; }
  const ImplicitDomain& domain() const { return *domain_; }
  std::shared_ptr<const ImplicitDomain> domain_ptr() const { return domain_; }

  /// phi^a(y) and derivatives, by Newton along N and implicit differentiation.
  GraphJet graph(const Vec2& y, int order = 2) const;
  /// f^a(y) = a + y1 v1 + y2 v2 + phi^a(y) N
  Vec3 surface_point(const Vec2& y) const;
  /// F^a(y, z) = f^a(y) + z N
  Vec3 to_space(const Vec3& yz) const;
  /// Frame coordinates (y1, y2, height above the tangent plane) of a space point.
  Vec3 frame_coordinates(const Vec3& p) const;

private:
  std::shared_ptr<const ImplicitDomain> domain_;
  Vec3 a_, v1_, v2_, N_;
  double r0_;
};

/// Chart at a; frame by Gram-Schmidt on the projected coordinate axes, then
/// rotated by `frame_rotation` radians within T_aS.
DomainChart make_chart(std::shared_ptr<const ImplicitDomain> domain, const Vec3& a, double frame_rotation = 0.0);

/// g^{a,lambda}(x, z) = g^a(lambda x, lambda z)
MetricField pullback_metric(const DomainChart& chart, double lambda);
/// q_i3(x) = h^S_ik(a) x^k, other entries zero
MetricField first_order_term(const DomainChart& chart);

struct ShapeOperatorData {
  Mat2 h_S;
  double H_S;
  Vec2 grad_HS;
};
ShapeOperatorData shape_operator(std::shared_ptr<const ImplicitDomain> domain, const Vec3& a);

} // namespace willmore
