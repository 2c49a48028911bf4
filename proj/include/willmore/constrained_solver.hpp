// Newton solver for the constrained free-boundary problem on the half-sphere.
//
// Unknowns are the radial graph w, an auxiliary eta standing for H - 2, and the
// multipliers (alpha, beta1, beta2). Writing the fourth-order equation as two
// second-order ones keeps roundoff near 1e-11 at the default resolution.
#pragma once

#include "willmore/ambient_metric.hpp"
#include "willmore/barycenter_exp.hpp"
#include "willmore/halfsphere_basis.hpp"
#include "willmore/surface_geometry.hpp"

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace willmore {

class DivergenceError : public std::runtime_error {
public:
  DivergenceError(const std::string& what, std::vector<double> history)
      : std::runtime_error(what), history_(std::move(history)) {}
  const std::vector<double>& history() const { return history_; }

private:
  std::vector<double> history_;
};

enum class JacobianKind { frozen, finite_difference };

struct SolverOptions {
  double tol = 1e-9;
  int max_iter = 60;
  JacobianKind jacobian = JacobianKind::frozen;
  bool damping = true;
  int max_halvings = 8;
  /// Refuse to start when the initial residual exceeds this (max norm).
  double initial_residual_max = 1.0;
  double fd_step = 1e-5;
  BarycenterOptions barycenter;
};
void to_json(nlohmann::json& j, const SolverOptions& o);
void from_json(const nlohmann::json& j, SolverOptions& o);

struct SolverState {
  SphereFunction w, eta;
  double alpha = 0, beta1 = 0, beta2 = 0;

  static SolverState flat(const HalfSphereGrid& g);
  /// eta taken as H[w] - 2 under the given metric.
  static SolverState from_graph(const SphereFunction& w, const MetricField& metric);
};

struct ConstraintResidual {
  SphereFunction consistency;     // eta - (H[w] - 2)
  SphereFunction interior;        // W - alpha psi0 - beta_i psi_i (mixed form, every node)
  BoundaryFunction bc_natural;    // d(2+eta)/deta + h~(nu,nu)(2+eta)
  BoundaryFunction bc_ortho;      // B = g~(nu, upper plane normal)
  double area_defect = 0;         // A - 2 pi
  Vec2 center_defect = Vec2::Zero();

  /// Max norm over the rows that enter the Newton system.
  double max_norm() const;
  /// Field residuals restricted to the collocated rows (all but the
  /// equator-nearest one, which carries the boundary conditions).
  double interior_norm() const;
  double consistency_norm() const;
};

/// psi0 = H / sqrt(8 pi), psi_i = -sqrt(2 pi / 3) grad C^i
struct PsiFunctions {
  SphereFunction psi0, psi1, psi2;
  Vec2 center = Vec2::Zero();
};
PsiFunctions psi_functions(const RadialGraphSurface& s, const BarycenterOptions& opt = {});

ConstraintResidual assemble_residual(const SolverState& x, const MetricField& metric,
                                     const BarycenterOptions& opt = {});
/// eta is taken from the graph, so the consistency block vanishes.
ConstraintResidual assemble_residual(const SphereFunction& w, double alpha, const Vec2& beta,
                                     const MetricField& metric, const BarycenterOptions& opt = {});

/// Flat-state linearization in the normal speed phi (displacement phi nu).
struct ModelLinearization {
  SphereFunction L1;       // Delta (Delta + 2) phi
  BoundaryFunction L2;     // d/deta (Delta + 2) phi
  BoundaryFunction b_row;  // -dphi/deta
  double L3 = 0;           // -2 int phi
  Vec2 L4 = Vec2::Zero();  // (3 / 2pi) int phi omega_i
};
ModelLinearization model_linearization(const SphereFunction& phi);

/// int (Delta u Delta v - 2 <grad u, grad v>) over the half-sphere, which is
/// 2 <L1 u, v> when u and v have vanishing normal derivative on the equator.
double model_bilinear_form(const SphereFunction& u, const SphereFunction& v);

struct EigenIdentityItem {
  HarmonicIndex u, v;
  double form = 0;
  double expected = 0;  // lambda_k (lambda_l - 2) <u, v>
  double scale = 0;     // max(1, |lambda_k lambda_l|) |u| |v|
};
/// All pairs of even harmonics up to max_degree (both azimuthal families).
std::vector<EigenIdentityItem> eigenvalue_identity(const HalfSphereGrid& g, int max_degree = 6);

/// Packed layout: state [w, eta, alpha, beta1, beta2], residual
/// [consistency, interior, area, center], where the equator-nearest row of the
/// consistency block holds bc_ortho and that of the interior block bc_natural.
Eigen::VectorXd pack_state(const SolverState& x);
SolverState unpack_state(const HalfSphereGrid& g, const Eigen::VectorXd& v);
Eigen::VectorXd pack_residual(const ConstraintResidual& r);

/// Flat-state Jacobian of the packed residual, block diagonal in the Fourier
/// index. Immutable after construction; one instance can serve many solves.
class FrozenJacobian {
public:
  explicit FrozenJacobian(const HalfSphereGrid& g);
  static std::shared_ptr<const FrozenJacobian> for_grid(const HalfSphereGrid& g);

  Eigen::VectorXd solve(const Eigen::VectorXd& packed_residual) const;
  Eigen::VectorXd apply(const Eigen::VectorXd& packed_state) const;
  /// Smallest singular value over all mode blocks.
  double min_singular_value() const;
  const HalfSphereGrid& grid() const { return grid_; }

private:
  struct Block {
    int m;
    bool sine;
    int extra;        // -1: none, 0: area/alpha, 1: beta1/c1, 2: beta2/c2
    Matrix J;
    Eigen::PartialPivLU<Matrix> lu;
  };
  HalfSphereGrid grid_;
  std::vector<Block> blocks_;
};

/// Dense central-difference Jacobian of the packed residual at x.
Matrix finite_difference_jacobian(const SolverState& x, const MetricField& metric, const SolverOptions& opt);

struct ChartContext {
  DomainChart chart;
  double lambda;
};

struct ConstrainedSolution {
  SolverState state;
  MetricField metric;
  std::optional<ChartContext> chart;
  ConstraintResidual residual;
  std::vector<double> history;
  int iterations = 0;
  bool converged = false;
  double energy = 0;
  double metric_deviation = 0;   // max |g~ - delta| over the surface nodes
  double estimate_constant = 0;  // |w|_inf / metric_deviation

  const SphereFunction& w() const { return state.w; }
  double alpha() const { return state.alpha; }
  double beta1() const { return state.beta1; }
  double beta2() const { return state.beta2; }
};

ConstrainedSolution solve_constrained(const MetricField& metric, const HalfSphereGrid& grid,
                                      const SolverOptions& opt = {},
                                      const std::optional<SolverState>& initial = std::nullopt);

struct VerificationItem {
  std::string name;
  double value;
  double tolerance;
  bool pass;
  /// Reported only; does not enter all_pass(). Used for quantities that need
  /// third or fourth derivatives of interpolated data.
  bool informational = false;
};
struct VerificationReport {
  std::vector<VerificationItem> items;
  bool all_pass() const;
};

/// Re-evaluates the solution invariants after spectral interpolation to a finer grid.
/// The natural condition is gated in the mixed form (eta from the solve);
/// its purely geometric version and the direct fourth-order W are reported
/// with looser, informational tolerances.
VerificationReport verify_solution(const ConstrainedSolution& sol, int n_theta_fine = 0, double tol = 1e-6);

} // namespace willmore
