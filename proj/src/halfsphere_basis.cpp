#include "willmore/halfsphere_basis.hpp"

#include <cmath>
#include <numbers>

namespace willmore {

namespace {

constexpr double kPi = std::numbers::pi;

void require_same_grid(const SphereFunction& a, const SphereFunction& b) {
  if (!a.grid().same_as(b.grid()))
    throw std::invalid_argument("sphere functions live on different grids");
}

// Laplacian of mode m as a matrix on the node values of c_m.
Matrix mode_laplacian(const HalfSphereGrid& g, int m) {
  const auto& op = g.mode(m);
  const int n = g.n_theta();
  Matrix L = op.d_theta2;
  for (int i = 0; i < n; ++i) {
    const double s = g.sin_theta()(i), c = g.cos_theta()(i);
    L.row(i) += (c / s) * op.d_theta.row(i);
    L(i, i) -= double(m) * m / (s * s);
  }
  return L;
}

} // namespace

std::pair<Vector, Vector> gauss_legendre(int n, double a, double b) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be positive");
  Vector t(n), w(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1, p1 = 0;
      for (int k = 1; k <= n; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1) * z * p1 - (k - 1.0) * p2) / k;
      }
      dp = n * (z * p0 - p1) / (z * z - 1);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    // recompute the derivative at the converged root for the weight
    double p0 = 1, p1 = 0;
    for (int k = 1; k <= n; ++k) {
      const double p2 = p1;
      p1 = p0;
      p0 = ((2.0 * k - 1) * z * p1 - (k - 1.0) * p2) / k;
    }
    dp = n * (z * p0 - p1) / (z * z - 1);
    t(i) = -z;
    t(n - 1 - i) = z;
    w(i) = w(n - 1 - i) = 2 / ((1 - z * z) * dp * dp);
  }
  if (n % 2 == 1) t(n / 2) = 0;
  Vector x = (0.5 * (b - a)) * (t.array() + 1.0).matrix() + Vector::Constant(n, a);
  return {x, 0.5 * (b - a) * w};
}

std::pair<Matrix, Matrix> differentiation_matrices(const Vector& x) {
  const int n = int(x.size());
  // barycentric weights, rescaled to avoid under/overflow
  Vector logmag = Vector::Zero(n), sign = Vector::Ones(n);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) {
      if (k == j) continue;
      const double d = x(j) - x(k);
      logmag(j) -= std::log(std::abs(d));
      if (d < 0) sign(j) = -sign(j);
    }
  const double shift = logmag.maxCoeff();
  Vector lam(n);
  for (int j = 0; j < n; ++j) lam(j) = sign(j) * std::exp(logmag(j) - shift);
  Matrix D = Matrix::Zero(n, n), D2 = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j)
      if (i != j) D(i, j) = (lam(j) / lam(i)) / (x(i) - x(j));
    D(i, i) = -D.row(i).sum();
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j)
      if (i != j) D2(i, j) = 2 * D(i, j) * (D(i, i) - 1 / (x(i) - x(j)));
    D2(i, i) = 0;
    D2(i, i) = -D2.row(i).sum();
  }
  return {D, D2};
}

RowVector interpolation_row(const Vector& x, double z) {
  const int n = int(x.size());
  RowVector r = RowVector::Zero(n);
  for (int j = 0; j < n; ++j)
    if (z == x(j)) {
      r(j) = 1;
      return r;
    }
  for (int j = 0; j < n; ++j) {
    double prod = 1;
    for (int k = 0; k < n; ++k)
      if (k != j) prod *= (z - x(k)) / (x(j) - x(k));
    r(j) = prod;
  }
  return r;
}

HalfSphereGrid::HalfSphereGrid(int n_theta, int n_phi) {
  if (n_theta < 2) throw std::invalid_argument("n_theta must be at least 2");
  if (n_phi < 2 || n_phi % 2 != 0) throw std::invalid_argument("n_phi must be even and at least 2");
  auto d = std::make_shared<Data>();
  d->n_theta = n_theta;
  d->n_phi = n_phi;
  auto [xa, wa] = gauss_legendre(n_theta, 0.0, 1.0);
  // store in order of increasing theta, i.e. decreasing x
  d->x = xa.reverse();
  d->wx = wa.reverse();
  d->theta = d->x.array().acos();
  d->s = (1.0 - d->x.array().square()).sqrt();
  d->dphi = 2 * kPi / n_phi;

  const int n = n_theta;
  auto [D, D2] = differentiation_matrices(d->x);
  const RowVector l0 = interpolation_row(d->x, 0.0);
  const RowVector l1 = l0 * D, l2 = l0 * D2;
  const Vector& x = d->x;
  const Vector& s = d->s;
  const Eigen::DiagonalMatrix<double, Eigen::Dynamic> S(s), X(x), Sinv(s.cwiseInverse()),
      S2(s.cwiseProduct(s));

  ModeOperators even, odd;
  even.d_theta = -(S * D);
  even.d_theta2 = S2 * D2 - X * D;
  even.eq_value = l0;
  even.eq_dtheta = -l1;
  even.eq_dtheta2 = l2;
  // c = s p: c_theta = -s^2 p_x + x p, c_thetatheta = s (s^2 p_xx - 3 x p_x - p)
  Matrix P = Matrix(Sinv);
  Matrix t1 = -(S2 * D) + Matrix(X);
  odd.d_theta = t1 * P;
  Matrix t2 = S2 * D2 - 3.0 * (X * D) - Matrix::Identity(n, n);
  odd.d_theta2 = S * t2 * P;
  odd.eq_value = l0 * P;
  odd.eq_dtheta = -l1 * P;
  odd.eq_dtheta2 = (l2 - l0) * P;

  const int M = n_phi / 2;
  d->modes.resize(M + 1);
  for (int m = 0; m <= M; ++m) d->modes[m] = (m % 2 == 0) ? even : odd;

  d->ca = Matrix::Zero(n_phi, M + 1);
  d->sa = Matrix::Zero(n_phi, M + 1);
  d->cs = Matrix::Zero(M + 1, n_phi);
  d->ss = Matrix::Zero(M + 1, n_phi);
  for (int j = 0; j < n_phi; ++j) {
    const double ph = j * d->dphi;
    for (int m = 0; m <= M; ++m) {
      const double c = std::cos(m * ph), sn = std::sin(m * ph);
      const bool edge = (m == 0 || m == M);
      d->ca(j, m) = (edge ? 1.0 : 2.0) * c / n_phi;
      d->sa(j, m) = edge ? 0.0 : 2.0 * sn / n_phi;
      d->cs(m, j) = c;
      d->ss(m, j) = edge ? 0.0 : sn;
    }
  }
  d_ = std::move(d);
}

SphereFunction::SphereFunction(const HalfSphereGrid& grid)
    : grid_(grid), values_(Matrix::Zero(grid.n_theta(), grid.n_phi())) {}

SphereFunction::SphereFunction(const HalfSphereGrid& grid, Matrix values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.rows() != grid.n_theta() || values_.cols() != grid.n_phi())
    throw std::invalid_argument("SphereFunction: value array does not match grid");
}

SphereFunction SphereFunction::constant(const HalfSphereGrid& grid, double c) {
  return SphereFunction(grid, Matrix::Constant(grid.n_theta(), grid.n_phi(), c));
}

SphereFunction SphereFunction::sample(const HalfSphereGrid& grid,
                                      const std::function<double(double, double)>& f) {
  SphereFunction r(grid);
  for (int i = 0; i < grid.n_theta(); ++i)
    for (int j = 0; j < grid.n_phi(); ++j) r(i, j) = f(grid.theta_nodes()(i), grid.phi(j));
  return r;
}

SphereFunction& SphereFunction::operator+=(const SphereFunction& o) {
  require_same_grid(*this, o);
  values_ += o.values_;
  return *this;
}
SphereFunction& SphereFunction::operator-=(const SphereFunction& o) {
  require_same_grid(*this, o);
  values_ -= o.values_;
  return *this;
}
SphereFunction& SphereFunction::operator*=(double c) {
  values_ *= c;
  return *this;
}
SphereFunction operator+(SphereFunction a, const SphereFunction& b) { return a += b; }
SphereFunction operator-(SphereFunction a, const SphereFunction& b) { return a -= b; }
SphereFunction operator*(double c, SphereFunction a) { return a *= c; }
SphereFunction operator*(const SphereFunction& a, const SphereFunction& b) {
  require_same_grid(a, b);
  return SphereFunction(a.grid(), a.values().cwiseProduct(b.values()));
}

FourierModes to_fourier(const SphereFunction& f) {
  const auto& g = f.grid();
  return {f.values() * g.cos_analysis(), f.values() * g.sin_analysis()};
}

SphereFunction from_fourier(const HalfSphereGrid& g, const FourierModes& c) {
  return SphereFunction(g, c.cos * g.cos_synthesis() + c.sin * g.sin_synthesis());
}

namespace {

// Near the pole a mode-m coefficient of a smooth function scales like
// sin(theta)^m. Below roundoff it carries only noise, which the m^2/sin^2
// factors of the phi derivatives would amplify, so it is dropped.
void polar_filter(const HalfSphereGrid& g, FourierModes& c) {
  const int M = g.max_mode();
  for (int i = 0; i < g.n_theta(); ++i) {
    const double s = g.sin_theta()(i);
    if (s > 0.5) break;
    const int keep = static_cast<int>(std::floor(std::log(1e-14) / std::log(s)));
    for (int m = keep + 1; m <= M; ++m) {
      c.cos(i, m) = 0;
      c.sin(i, m) = 0;
    }
  }
}

} // namespace

SphereDerivatives derivatives(const SphereFunction& f) {
  const auto& g = f.grid();
  const int M = g.max_mode();
  FourierModes c = to_fourier(f);
  polar_filter(g, c);
  const int n = g.n_theta();
  Matrix at(n, M + 1), bt(n, M + 1), att(n, M + 1), btt(n, M + 1);
  for (int m = 0; m <= M; ++m) {
    const auto& op = g.mode(m);
    at.col(m) = op.d_theta * c.cos.col(m);
    bt.col(m) = op.d_theta * c.sin.col(m);
    att.col(m) = op.d_theta2 * c.cos.col(m);
    btt.col(m) = op.d_theta2 * c.sin.col(m);
  }
  const Eigen::RowVectorXd mm = Eigen::RowVectorXd::LinSpaced(M + 1, 0, M);
  const Eigen::RowVectorXd mm2 = mm.cwiseProduct(mm);
  auto synth = [&](const Matrix& a, const Matrix& b) {
    return Matrix(a * g.cos_synthesis() + b * g.sin_synthesis());
  };
  SphereDerivatives d;
  d.f = f.values();
  d.t = synth(at, bt);
  d.tt = synth(att, btt);
  d.p = synth(c.sin * mm.asDiagonal(), -(c.cos * mm.asDiagonal()));
  d.tp = synth(bt * mm.asDiagonal(), -(at * mm.asDiagonal()));
  d.pp = synth(-(c.cos * mm2.asDiagonal()), -(c.sin * mm2.asDiagonal()));
  return d;
}

EquatorJet equator_jet(const SphereFunction& f) {
  const auto& g = f.grid();
  const int M = g.max_mode();
  const FourierModes c = to_fourier(f);
  RowVector a0(M + 1), b0(M + 1), a1(M + 1), b1(M + 1), a2(M + 1), b2(M + 1);
  for (int m = 0; m <= M; ++m) {
    const auto& op = g.mode(m);
    a0(m) = op.eq_value.dot(c.cos.col(m));
    b0(m) = op.eq_value.dot(c.sin.col(m));
    a1(m) = op.eq_dtheta.dot(c.cos.col(m));
    b1(m) = op.eq_dtheta.dot(c.sin.col(m));
    a2(m) = op.eq_dtheta2.dot(c.cos.col(m));
    b2(m) = op.eq_dtheta2.dot(c.sin.col(m));
  }
  const RowVector mm = RowVector::LinSpaced(M + 1, 0, M);
  const RowVector mm2 = mm.cwiseProduct(mm);
  auto synth = [&](const RowVector& a, const RowVector& b) {
    return Vector((a * g.cos_synthesis() + b * g.sin_synthesis()).transpose());
  };
  EquatorJet e;
  e.f = synth(a0, b0);
  e.t = synth(a1, b1);
  e.tt = synth(a2, b2);
  e.p = synth(b0.cwiseProduct(mm), -a0.cwiseProduct(mm));
  e.tp = synth(b1.cwiseProduct(mm), -a1.cwiseProduct(mm));
  e.pp = synth(-a0.cwiseProduct(mm2), -b0.cwiseProduct(mm2));
  return e;
}

double integrate(const SphereFunction& f) {
  const auto& g = f.grid();
  return g.theta_weights().dot(f.values().rowwise().sum()) * g.phi_step();
}

double boundary_integrate(const BoundaryFunction& f) {
  return f.sum() * (2 * kPi / double(f.size()));
}

double boundary_integrate(const SphereFunction& f) { return boundary_integrate(equator_values(f)); }

BoundaryFunction equator_values(const SphereFunction& f) {
  const auto& g = f.grid();
  const FourierModes c = to_fourier(f);
  const int M = g.max_mode();
  RowVector a(M + 1), b(M + 1);
  for (int m = 0; m <= M; ++m) {
    a(m) = g.mode(m).eq_value.dot(c.cos.col(m));
    b(m) = g.mode(m).eq_value.dot(c.sin.col(m));
  }
  return (a * g.cos_synthesis() + b * g.sin_synthesis()).transpose();
}

SphereFunction laplace_beltrami(const SphereFunction& f) {
  const auto& g = f.grid();
  const SphereDerivatives d = derivatives(f);
  const Eigen::ArrayXd s2 = g.sin_theta().array().square();
  const Eigen::ArrayXd cot = g.cos_theta().array() / g.sin_theta().array();
  Matrix r = d.tt;
  r.array() += d.pp.array().colwise() / s2 + d.t.array().colwise() * cot;
  return SphereFunction(g, r);
}

TangentField gradient(const SphereFunction& f) {
  const auto& g = f.grid();
  const SphereDerivatives d = derivatives(f);
  return {SphereFunction(g, d.t), SphereFunction(g, d.p.array().colwise() / g.sin_theta().array())};
}

BoundaryFunction normal_derivative_equator(const SphereFunction& f) {
  const auto& g = f.grid();
  const FourierModes c = to_fourier(f);
  const int M = g.max_mode();
  RowVector a(M + 1), b(M + 1);
  for (int m = 0; m <= M; ++m) {
    a(m) = -g.mode(m).eq_dtheta.dot(c.cos.col(m));
    b(m) = -g.mode(m).eq_dtheta.dot(c.sin.col(m));
  }
  return (a * g.cos_synthesis() + b * g.sin_synthesis()).transpose();
}

SphereFunction resample(const SphereFunction& f, const HalfSphereGrid& target) {
  const auto& g = f.grid();
  const int nt = target.n_theta();
  const FourierModes c = to_fourier(f);
  Matrix P(nt, g.n_theta());
  for (int i = 0; i < nt; ++i) P.row(i) = interpolation_row(g.cos_theta(), target.cos_theta()(i));
  const int M = std::min(g.max_mode(), target.max_mode());
  FourierModes out{Matrix::Zero(nt, target.max_mode() + 1), Matrix::Zero(nt, target.max_mode() + 1)};
  for (int m = 0; m <= M; ++m) {
    Vector a = c.cos.col(m), b = c.sin.col(m);
    if (m % 2 == 1) {
      a.array() /= g.sin_theta().array();
      b.array() /= g.sin_theta().array();
    }
    Vector at = P * a, bt = P * b;
    if (m % 2 == 1) {
      at.array() *= target.sin_theta().array();
      bt.array() *= target.sin_theta().array();
    }
    out.cos.col(m) = at;
    if (m < target.max_mode()) out.sin.col(m) = bt;
  }
  return from_fourier(target, out);
}

SphereFunction solve_neumann_y0(const HalfSphereGrid& g, const BoundaryFunction& beta,
                                const NeumannOptions& opt) {
  if (beta.size() != g.n_phi()) throw std::invalid_argument("solve_neumann_y0: boundary size mismatch");
  const int n = g.n_theta();
  const int M = g.max_mode();
  const RowVector bc = beta.transpose() * g.cos_analysis();
  const RowVector bs = beta.transpose() * g.sin_analysis();
  FourierModes out{Matrix::Zero(n, M + 1), Matrix::Zero(n, M + 1)};
  const double flux_const = -boundary_integrate(beta) / (2 * kPi);

  for (int m = 0; m <= M; ++m) {
    const Matrix L = mode_laplacian(g, m);
    const RowVector dn = -g.mode(m).eq_dtheta;
    if (m == 0) {
      if (opt.normalize_mean) {
        // unknowns: node values and the constant Delta v
        Matrix A = Matrix::Zero(n + 1, n + 1);
        A.topLeftCorner(n - 1, n) = L.topRows(n - 1);
        A.block(0, n, n - 1, 1).setConstant(-1.0);
        A.block(n - 1, 0, 1, n) = dn;
        A.block(n, 0, 1, n) = g.theta_weights().transpose();
        Vector rhs = Vector::Zero(n + 1);
        rhs(n - 1) = bc(0);
        out.cos.col(0) = A.partialPivLu().solve(rhs).head(n);
      } else {
        Matrix A(n, n);
        A.topRows(n - 1) = L.topRows(n - 1);
        A.row(n - 1) = dn;
        Eigen::FullPivLU<Matrix> lu(A);
        lu.setThreshold(1e-10);
        if (!lu.isInvertible())
          throw NormalizationError("mode-0 Neumann system is singular without the mean-zero normalization");
        Vector rhs = Vector::Constant(n, flux_const);
        rhs(n - 1) = bc(0);
        out.cos.col(0) = lu.solve(rhs);
      }
      continue;
    }
    Matrix A(n, n);
    A.topRows(n - 1) = L.topRows(n - 1);
    A.row(n - 1) = dn;
    Eigen::PartialPivLU<Matrix> lu(A);
    Vector rhs = Vector::Zero(n);
    rhs(n - 1) = bc(m);
    out.cos.col(m) = lu.solve(rhs);
    if (m < M) {
      rhs(n - 1) = bs(m);
      out.sin.col(m) = lu.solve(rhs);
    }
  }
  return from_fourier(g, out);
}

std::pair<SphereFunction, SphereFunction> decompose_X0_Y0(const SphereFunction& w) {
  SphereFunction v = solve_neumann_y0(w.grid(), normal_derivative_equator(w));
  SphereFunction u = w - v;
  return {std::move(u), std::move(v)};
}

double real_spherical_harmonic(int k, int m, double theta, double phi) {
  const int am = std::abs(m);
  if (am > k) throw std::invalid_argument("harmonic order exceeds degree");
  const double x = std::cos(theta), s = std::sin(theta);
  // associated Legendre P_k^am without the Condon-Shortley phase
  double pmm = 1;
  for (int i = 1; i <= am; ++i) pmm *= (2.0 * i - 1) * s;
  double p = pmm;
  if (k > am) {
    double pm1 = x * (2.0 * am + 1) * pmm, pm2 = pmm;
    p = pm1;
    for (int l = am + 2; l <= k; ++l) {
      p = ((2.0 * l - 1) * x * pm1 - (l + am - 1.0) * pm2) / (l - am);
      pm2 = pm1;
      pm1 = p;
    }
  }
  double ratio = 1; // (k-am)!/(k+am)!
  for (int i = k - am + 1; i <= k + am; ++i) ratio /= i;
  const double norm = std::sqrt((2.0 * k + 1) / (4 * kPi) * ratio);
  if (m == 0) return norm * p;
  if (m > 0) return std::sqrt(2.0) * norm * p * std::cos(m * phi);
  return std::sqrt(2.0) * norm * p * std::sin(am * phi);
}

SphereFunction harmonic(const HalfSphereGrid& grid, HarmonicIndex idx) {
  return SphereFunction::sample(
      grid, [&](double t, double p) { return real_spherical_harmonic(idx.degree, idx.order, t, p); });
}

DirectionJet direction_jet(double theta, double phi) {
  const double st = std::sin(theta), ct = std::cos(theta), sp = std::sin(phi), cp = std::cos(phi);
  DirectionJet j;
  j.w = {st * cp, st * sp, ct};
  j.t = {ct * cp, ct * sp, -st};
  j.p = {-st * sp, st * cp, 0};
  j.tt = -j.w;
  j.tp = {-ct * sp, ct * cp, 0};
  j.pp = {-st * cp, -st * sp, 0};
  return j;
}

} // namespace willmore
