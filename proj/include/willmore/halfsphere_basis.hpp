// Grids, quadrature and spectral operators on the upper half-sphere.
//
// Functions are stored as values on a tensor grid: Gauss-Legendre nodes in
// x = cos(theta) on (0,1] times equispaced azimuths. Each azimuthal Fourier
// mode m is handled through its parity factor, c_m = p(x) for even m and
// c_m = sin(theta) p(x) for odd m, with p a polynomial in x. This keeps the
// pole out of the grid and makes the representation regular there.
#pragma once

#include <Eigen/Dense>

#include <cstdlib>
#include <functional>
#include <memory>
#include <stdexcept>
#include <utility>
#include <vector>

namespace willmore {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

/// Function on the equator, one value per azimuth node.
using BoundaryFunction = Eigen::VectorXd;

class NormalizationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class HalfSphereGrid {
public:
  // Per-mode operators acting on the column of mode coefficients c_m(theta_i).
  struct ModeOperators {
    Matrix d_theta;    // c -> dc/dtheta at the nodes
    Matrix d_theta2;   // c -> d2c/dtheta2 at the nodes
    RowVector eq_value;   // c -> c(pi/2)
    RowVector eq_dtheta;  // c -> dc/dtheta(pi/2)
    RowVector eq_dtheta2; // c -> d2c/dtheta2(pi/2)
  };

  static constexpr int kDefaultNTheta = 32;
  static constexpr int kDefaultNPhi = 64;

  HalfSphereGrid() = default; // empty handle, see valid()
  HalfSphereGrid(int n_theta, int n_phi);

  bool valid() const { return d_ != nullptr; }

  int n_theta() const { return d_->n_theta; }
  int n_phi() const { return d_->n_phi; }
  int size() const { return d_->n_theta * d_->n_phi; }
  int max_mode() const { return d_->n_phi / 2; }

  // theta increases with the row index: row 0 is closest to the pole,
  // the last row closest to the equator.
  const Vector& theta_nodes() const { return d_->theta; }
  const Vector& cos_theta() const { return d_->x; }
  const Vector& sin_theta() const { return d_->s; }
  /// Gauss-Legendre weights for dx = sin(theta) dtheta.
  const Vector& theta_weights() const { return d_->wx; }
  double phi_step() const { return d_->dphi; }
  double phi(int j) const { return j * d_->dphi; }

  const ModeOperators& mode(int m) const { return d_->modes.at(m); }

  // Real DFT along phi: cos coefficients a_m = values * cos_analysis(:,m)
  const Matrix& cos_analysis() const { return d_->ca; }
  const Matrix& sin_analysis() const { return d_->sa; }
  const Matrix& cos_synthesis() const { return d_->cs; }
  const Matrix& sin_synthesis() const { return d_->ss; }

  bool same_as(const HalfSphereGrid& o) const {
    return d_ == o.d_ || (valid() && o.valid() && n_theta() == o.n_theta() && n_phi() == o.n_phi());
  }

private:
  struct Data {
    int n_theta = 0, n_phi = 0;
    Vector theta, x, s, wx;
    double dphi = 0;
    std::vector<ModeOperators> modes;
    Matrix ca, sa, cs, ss;
  };
  std::shared_ptr<const Data> d_;
};

/// Gauss-Legendre nodes and weights on [a,b], nodes ascending.
std::pair<Vector, Vector> gauss_legendre(int n, double a, double b);

/// Barycentric first and second differentiation matrices on arbitrary nodes.
std::pair<Matrix, Matrix> differentiation_matrices(const Vector& nodes);

/// Row vector evaluating the polynomial interpolant of node values at z.
RowVector interpolation_row(const Vector& nodes, double z);

class SphereFunction {
public:
  SphereFunction() = default;
  explicit SphereFunction(const HalfSphereGrid& grid);
  SphereFunction(const HalfSphereGrid& grid, Matrix values);

  static SphereFunction constant(const HalfSphereGrid& grid, double c);
  /// Samples f(theta, phi) at the grid nodes.
  static SphereFunction sample(const HalfSphereGrid& grid, const std::function<double(double, double)>& f);

  const HalfSphereGrid& grid() const { return grid_; }
  const Matrix& values() const { return values_; }
  Matrix& values() { return values_; }
  double operator()(int i, int j) const { return values_(i, j); }
  double& operator()(int i, int j) { return values_(i, j); }

  double max_abs() const { return values_.cwiseAbs().maxCoeff(); }
  bool all_finite() const { return values_.allFinite(); }

  SphereFunction& operator+=(const SphereFunction& o);
  SphereFunction& operator-=(const SphereFunction& o);
  SphereFunction& operator*=(double c);

private:
  HalfSphereGrid grid_;
  Matrix values_;
};

SphereFunction operator+(SphereFunction a, const SphereFunction& b);
SphereFunction operator-(SphereFunction a, const SphereFunction& b);
SphereFunction operator*(double c, SphereFunction a);
SphereFunction operator*(const SphereFunction& a, const SphereFunction& b);

/// Azimuthal Fourier view: column m holds the cos / sin coefficient of mode m.
struct FourierModes {
  Matrix cos, sin;
};
FourierModes to_fourier(const SphereFunction& f);
SphereFunction from_fourier(const HalfSphereGrid& grid, const FourierModes& c);

/// Coordinate partial derivatives in (theta, phi) at the grid nodes.
struct SphereDerivatives {
  Matrix f, t, p, tt, tp, pp;
};
SphereDerivatives derivatives(const SphereFunction& f);

/// Values and coordinate derivatives interpolated to the equator theta = pi/2.
struct EquatorJet {
  Vector f, t, p, tt, tp, pp;
};
EquatorJet equator_jet(const SphereFunction& f);

struct TangentField {
  SphereFunction theta, phi; // components in the orthonormal frame e_theta, e_phi
};

double integrate(const SphereFunction& f);
double boundary_integrate(const BoundaryFunction& f);
double boundary_integrate(const SphereFunction& f);
BoundaryFunction equator_values(const SphereFunction& f);
SphereFunction laplace_beltrami(const SphereFunction& f);
TangentField gradient(const SphereFunction& f);
/// d/deta at the equator, eta pointing into the half-sphere (towards the pole).
BoundaryFunction normal_derivative_equator(const SphereFunction& f);
/// Spectral interpolation onto another grid (Fourier modes are truncated or zero padded).
SphereFunction resample(const SphereFunction& f, const HalfSphereGrid& target);

struct NeumannOptions {
  bool normalize_mean = true;
};
/// v with Delta v = const, dv/deta = beta on the equator and mean zero.
SphereFunction solve_neumann_y0(const HalfSphereGrid& grid, const BoundaryFunction& beta,
                                const NeumannOptions& opt = {});
/// w = u + v with du/deta = 0 and v from solve_neumann_y0(dw/deta).
std::pair<SphereFunction, SphereFunction> decompose_X0_Y0(const SphereFunction& w);

struct HarmonicIndex {
  int degree = 0;
  int order = 0; // negative orders select the sin(|m| phi) family
  bool even() const { return ((degree - std::abs(order)) % 2) == 0; }
  double eigenvalue() const { return double(degree) * (degree + 1); }
};

/// Real spherical harmonic normalised on the full sphere.
double real_spherical_harmonic(int k, int m, double theta, double phi);
SphereFunction harmonic(const HalfSphereGrid& grid, HarmonicIndex idx);

/// Unit direction omega(theta, phi) and its coordinate derivatives.
struct DirectionJet {
  Eigen::Vector3d w, t, p, tt, tp, pp;
};
DirectionJet direction_jet(double theta, double phi);

} // namespace willmore
