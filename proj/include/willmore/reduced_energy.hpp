// Reduced energy W(a, lambda) over the boundary of a domain: single evaluations,
// first-order checks, landscape scans and concentration paths.
#pragma once

#include "willmore/ambient_metric.hpp"
#include "willmore/constrained_solver.hpp"

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace willmore {

class ReducedEnergyError : public std::runtime_error {
public:
  ReducedEnergyError(const std::string& what, const Vec3& a, double lambda)
      : std::runtime_error(what), a_(a), lambda_(lambda) {}
  const Vec3& a() const { return a_; }
  double lambda() const { return lambda_; }

private:
  Vec3 a_;
  double lambda_;
};

class NondegeneracyError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class PathError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct ReducedOptions {
  int n_theta = HalfSphereGrid::kDefaultNTheta;
  int n_phi = HalfSphereGrid::kDefaultNPhi;
  SolverOptions solver;
  /// Surface finite-difference step as a fraction of the domain diameter.
  double fd_fraction = 1e-3;
  /// Levels of lambda halving tried when a direct solve fails.
  int continuation_levels = 3;
};
void to_json(nlohmann::json& j, const ReducedOptions& o);
void from_json(const nlohmann::json& j, ReducedOptions& o);

/// Step used for surface differences: fd_fraction * diameter (1 for unbounded domains).
double surface_step(const ImplicitDomain& domain, const ReducedOptions& opt);

/// Solves the constrained problem in the chart at a; the chart is attached to
/// the result. Falls back to continuation from smaller lambda on failure.
ConstrainedSolution solve_at(std::shared_ptr<const ImplicitDomain> domain, const Vec3& a, double lambda,
                             const ReducedOptions& opt = {}, double frame_rotation = 0.0);

double reduced_energy(std::shared_ptr<const ImplicitDomain> domain, const Vec3& a, double lambda,
                      const ReducedOptions& opt = {});

/// Largest lambda in {0.2, 0.1, 0.05, ...} (six levels) for which the solve
/// converges at a and the chart admits the cylinder; 0 if none does.
double lambda_max(std::shared_ptr<const ImplicitDomain> domain, const Vec3& a, const ReducedOptions& opt = {});

struct IntegralReport {
  static constexpr std::array<const char*, 5> kNames = {"int q(nu,nu)", "int tr q", "int tr D_nu q",
                                                         "int tr D.q(.,nu)", "bdry int q(nu,e3)"};
  /// Closed-form coefficients c_k with integral_k = c_k * H_S.
  static const std::array<double, 5> kCoefficients;
  double H_S = 0;
  std::array<double, 5> value{}, expected{};
  double max_error() const;
};
/// Quadrature of the five first-order integrals of q = d/dlambda g at lambda = 0,
/// with nu the inward normal -omega of the round half-sphere.
IntegralReport check_analytic_integrals(std::shared_ptr<const ImplicitDomain> domain, const Vec3& a,
                                        int n_theta = HalfSphereGrid::kDefaultNTheta);

/// First-order coefficient of W(a, lambda) - 2 pi in lambda, assembled from
/// the five integrals; equals -pi H_S(a).
double first_order_energy(std::shared_ptr<const ImplicitDomain> domain, const Vec3& a,
                          int n_theta = HalfSphereGrid::kDefaultNTheta);

struct SurfaceMesh {
  std::vector<Vec3> points;
  std::vector<std::vector<int>> neighbors;
  /// (theta, phi) of the generating direction, or planar (x, y) for unbounded domains.
  std::vector<Vec2> params;
  int n_lat = 0, n_lon = 0;
};
/// Bounded domains: n_lat latitude intervals and n_lon meridians, the poles
/// collapsed to single points, (n_lat - 1) * n_lon + 2 points in total.
/// Unbounded domains: an n_lat x n_lon lattice over [-1, 1]^2.
SurfaceMesh make_mesh(const ImplicitDomain& domain, int n_lat, int n_lon);
/// Parses "NxM" (an ASCII x or the multiplication sign).
std::pair<int, int> parse_mesh_size(const std::string& text);

enum class CriticalType { minimum, maximum, saddle, degenerate };
std::string to_string(CriticalType t);

struct CriticalPoint {
  int index = -1;
  Vec3 a = Vec3::Zero();
  CriticalType type = CriticalType::degenerate;
  double energy = 0;
  Vec2 gradient = Vec2::Zero();     // chart stencil
  Vec2 eigenvalues = Vec2::Zero();  // of the chart Hessian
  double beta_sum = 0;              // |beta1| + |beta2| at the mesh point
};

struct LandscapeSample {
  Vec3 a = Vec3::Zero();
  double H_S = 0;
  double energy = 0;
  double grad_norm = 0;
  bool converged = false;
  double beta1 = 0, beta2 = 0;
  std::string error;
};

struct EnergyLandscape {
  double lambda = 0;
  double lambda_max = 0;
  std::string domain;
  int n_lat = 0, n_lon = 0;
  std::vector<LandscapeSample> samples;
  std::vector<CriticalPoint> critical_points;
  double spread = 0;
  bool degenerate = false;
  int argmin = -1, argmax = -1;
  int failures = 0;
};

/// Solves at every mesh point with up to `jobs` threads; results do not depend
/// on the job count.
EnergyLandscape scan_landscape(std::shared_ptr<const ImplicitDomain> domain, double lambda, const SurfaceMesh& mesh,
                               const ReducedOptions& opt = {}, int jobs = 1);
/// Rank correlation of W against -H_S over the converged samples.
double landscape_rank_correlation(const EnergyLandscape& l, double tie_tolerance = 1e-9);
std::string landscape_csv(const EnergyLandscape& l);
nlohmann::json landscape_summary(const EnergyLandscape& l);

/// Gradient of W(., lambda) at a divided by lambda, in the chart frame (v1, v2).
/// At lambda = 0 the limit -pi grad H_S is returned.
Vec2 desingularized_gradient(std::shared_ptr<const ImplicitDomain> domain, const Vec3& a, double lambda,
                             const ReducedOptions& opt = {});

struct PathOptions {
  double tol = 1e-6;            // accept when |grad W| <= tol * lambda
  int max_corrector = 8;
  int max_bisections = 4;
  double degeneracy_tol = 1e-6; // relative to max(1, |H_S|) / diam^2
};

struct ConcentrationPath {
  std::vector<double> lambdas;  // decreasing, last entry 0
  std::vector<Vec3> points;
  std::vector<double> grad_check;  // |grad W| / lambda at accepted points
  Vec3 limit = Vec3::Zero();
  Vec2 hessian_eigenvalues = Vec2::Zero();
  double condition_number = 0;
};
ConcentrationPath trace_concentration_path(std::shared_ptr<const ImplicitDomain> domain, const Vec3& a0,
                                           double lambda_max, int steps, const ReducedOptions& opt = {},
                                           const PathOptions& popt = {});
std::string path_csv(const ConcentrationPath& p);

struct ExpansionRow {
  double lambda = 0, energy = 0;
  double E = 0;  // (W - 2 pi) / lambda + pi H_S
  double C = 0;  // |E| / lambda
  int iterations = 0;
};
struct EnergyExpansion {
  Vec3 a = Vec3::Zero();
  double H_S = 0;
  std::vector<ExpansionRow> rows;  // sorted by decreasing lambda
  double slope_raw = 0;            // (W - 2 pi) / lambda at the smallest lambda
  double slope_extrapolated = 0;   // linear extrapolation of the slope to lambda = 0
  double C_variation = 0;          // (max C - min C) / max C
};
/// Continuation from the largest lambda downwards.
EnergyExpansion energy_expansion(std::shared_ptr<const ImplicitDomain> domain, const Vec3& a,
                                 std::vector<double> lambdas, const ReducedOptions& opt = {});

struct RotationCheck {
  double defect = 0;  // max |w_rotated - w o T|
  int shift = 0;      // azimuthal index shift realising T
};
/// Compares the solution in the chart frame rotated by a quarter turn with the
/// shifted original solution. Needs n_phi divisible by 4.
RotationCheck rotation_equivariance(std::shared_ptr<const ImplicitDomain> domain, const Vec3& a, double lambda,
                                    const ReducedOptions& opt = {});

/// Rank correlation with average ranks for ties. Values closer than
/// tie_tolerance * (sample range) to the first member of a run count as tied.
double spearman(const std::vector<double>& x, const std::vector<double>& y, double tie_tolerance = 0.0);

} // namespace willmore
