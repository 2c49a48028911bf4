#include "willmore/ambient_metric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace willmore {

namespace {

struct EuclideanEmbedding final : FlatEmbedding {
  Vec3 map(const Vec3& y) const override { return y; }
  Mat3 jacobian(const Vec3&) const override { return Mat3::Identity(); }
  Vec3 inverse(const Vec3& p) const override { return p; }
};

struct EuclideanModel final : MetricField::Model {
  MetricJet jet(const Vec3&) const override {
    return {Mat3::Identity(), {Mat3::Zero(), Mat3::Zero(), Mat3::Zero()}};
  }
  const FlatEmbedding* embedding() const override { return &emb; }
  EuclideanEmbedding emb;
};

struct ConformalModel final : MetricField::Model {
  Vec3 c;
  double c0;
  ConformalModel(const Vec3& c_, double c0_) : c(c_), c0(c0_) {}
  MetricJet jet(const Vec3& p) const override {
    const double e = std::exp(2 * (c0 + c.dot(p)));
    MetricJet j;
    j.g = e * Mat3::Identity();
    for (int k = 0; k < 3; ++k) j.dg[k] = 2 * c(k) * e * Mat3::Identity();
    return j;
  }
};

struct FunctionModel final : MetricField::Model {
  std::function<Mat3(const Vec3&)> f;
  double h;
  FunctionModel(std::function<Mat3(const Vec3&)> f_, double h_) : f(std::move(f_)), h(h_) {}
  MetricJet jet(const Vec3& p) const override {
    MetricJet j;
    j.g = f(p);
    for (int k = 0; k < 3; ++k) {
      Vec3 e = Vec3::Zero();
      e(k) = h;
      j.dg[k] = (f(p + e) - f(p - e)) / (2 * h);
    }
    return j;
  }
};

struct PerturbationModel final : MetricField::Model {
  MetricField q;
  double s;
  PerturbationModel(MetricField q_, double s_) : q(std::move(q_)), s(s_) {}
  MetricJet jet(const Vec3& p) const override {
    MetricJet j = q.jet(p);
    j.g = Mat3::Identity() + s * j.g;
    for (auto& d : j.dg) d *= s;
    return j;
  }
};

// q with q_i3 = h_ik x^k
struct FirstOrderModel final : MetricField::Model {
  Mat2 h;
  explicit FirstOrderModel(const Mat2& h_) : h(h_) {}
  MetricJet jet(const Vec3& p) const override {
    MetricJet j;
    j.g.setZero();
    const Vec2 qi = h * p.head<2>();
    j.g(0, 2) = j.g(2, 0) = qi(0);
    j.g(1, 2) = j.g(2, 1) = qi(1);
    for (int k = 0; k < 3; ++k) {
      j.dg[k].setZero();
      if (k < 2) {
        j.dg[k](0, 2) = j.dg[k](2, 0) = h(0, k);
        j.dg[k](1, 2) = j.dg[k](2, 1) = h(1, k);
      }
    }
    return j;
  }
};

// Chart map scaled by 1/lambda: Phi(x, z) = (x, z + phi(lambda x) / lambda).
struct PullbackEmbedding final : FlatEmbedding {
  const DomainChart* chart = nullptr;
  double lambda = 0;
  Vec3 map(const Vec3& y) const override {
    const double f = chart->graph(lambda * y.head<2>(), 0).value / lambda;
    return {y(0), y(1), y(2) + f};
  }
  Mat3 jacobian(const Vec3& y) const override {
    const Vec2 d = chart->graph(lambda * y.head<2>(), 1).d1;
    Mat3 J = Mat3::Identity();
    J(2, 0) = d(0);
    J(2, 1) = d(1);
    return J;
  }
  Vec3 inverse(const Vec3& p) const override {
    const double f = chart->graph(lambda * p.head<2>(), 0).value / lambda;
    return {p(0), p(1), p(2) - f};
  }
};

struct PullbackModel final : MetricField::Model {
  DomainChart chart;
  double lambda;
  PullbackEmbedding emb;
  PullbackModel(DomainChart c, double l) : chart(std::move(c)), lambda(l) {
    emb.chart = &chart;
    emb.lambda = lambda;
  }
  MetricJet jet(const Vec3& p) const override {
    const GraphJet gj = chart.graph(lambda * p.head<2>(), 2);
    const Vec2& d = gj.d1;
    MetricJet j;
    j.g = Mat3::Identity();
    j.g.topLeftCorner<2, 2>() += d * d.transpose();
    j.g(0, 2) = j.g(2, 0) = d(0);
    j.g(1, 2) = j.g(2, 1) = d(1);
    for (int k = 0; k < 3; ++k) {
      j.dg[k].setZero();
      if (k == 2) continue;
      const Vec2 dk = lambda * gj.d2.col(k);
      j.dg[k].topLeftCorner<2, 2>() = dk * d.transpose() + d * dk.transpose();
      j.dg[k](0, 2) = j.dg[k](2, 0) = dk(0);
      j.dg[k](1, 2) = j.dg[k](2, 1) = dk(1);
    }
    return j;
  }
  const FlatEmbedding* embedding() const override { return &emb; }
};

Vec3 unit(int k) {
  Vec3 e = Vec3::Zero();
  e(k) = 1;
  return e;
}

// index of the second / third derivative polynomial for sorted axes
int index2(int i, int j) {
  if (i > j) std::swap(i, j);
  static const int t[3][3] = {{0, 1, 2}, {1, 3, 4}, {2, 4, 5}};
  return t[i][j];
}
int index3(int i, int j, int k) {
  int a[3] = {i, j, k};
  std::sort(a, a + 3);
  // enumeration of i<=j<=k in lexicographic order
  int idx = 0;
  for (int x = 0; x < 3; ++x)
    for (int y = x; y < 3; ++y)
      for (int z = y; z < 3; ++z) {
        if (x == a[0] && y == a[1] && z == a[2]) return idx;
        ++idx;
      }
  return -1;
}

} // namespace

MetricField::MetricField() : model_(std::make_shared<EuclideanModel>()) {}

MetricField::MetricField(std::shared_ptr<const Model> model, double h_fd) : model_(std::move(model)), h_fd_(h_fd) {
  if (!model_) throw std::invalid_argument("MetricField: null model");
}

MetricField MetricField::euclidean() { return MetricField(); }

MetricField MetricField::conformal(const Vec3& c, double c0) {
  return MetricField(std::make_shared<ConformalModel>(c, c0));
}

MetricField MetricField::from_function(std::function<Mat3(const Vec3&)> g, double h_fd) {
  return MetricField(std::make_shared<FunctionModel>(std::move(g), h_fd), h_fd);
}

MetricField MetricField::perturbation(const MetricField& q, double s) {
  return MetricField(std::make_shared<PerturbationModel>(q, s), q.h_fd());
}

Mat3 MetricField::partial(const Vec3& p, const std::vector<int>& axes) const {
  const double h = h_fd_;
  switch (axes.size()) {
  case 0:
    return (*this)(p);
  case 1:
    return jet(p).dg.at(axes[0]);
  case 2: {
    const Vec3 e = h * unit(axes[1]);
    return (jet(p + e).dg.at(axes[0]) - jet(p - e).dg.at(axes[0])) / (2 * h);
  }
  case 3: {
    const Vec3 eb = h * unit(axes[1]), ec = h * unit(axes[2]);
    const int a = axes[0];
    return (jet(p + eb + ec).dg.at(a) - jet(p + eb - ec).dg.at(a) - jet(p - eb + ec).dg.at(a) +
            jet(p - eb - ec).dg.at(a)) /
           (4 * h * h);
  }
  default:
    throw std::invalid_argument("MetricField::partial supports orders up to 3");
  }
}

Tensor3 christoffel(const MetricJet& jet) {
  Eigen::LLT<Mat3> llt(jet.g);
  if (llt.info() != Eigen::Success) throw DefinitenessError("metric is not positive definite");
  const Mat3 ginv = llt.solve(Mat3::Identity());
  Tensor3 lower; // lower[l](i,j) = Gamma_{l,ij}
  for (int l = 0; l < 3; ++l)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        lower[l](i, j) = 0.5 * (jet.dg[i](j, l) + jet.dg[j](i, l) - jet.dg[l](i, j));
  Tensor3 G;
  for (int k = 0; k < 3; ++k) {
    G[k].setZero();
    for (int l = 0; l < 3; ++l) G[k] += ginv(k, l) * lower[l];
  }
  return G;
}

Tensor3 christoffel(const MetricField& metric, const Vec3& p) { return christoffel(metric.jet(p)); }

Mat3 ricci(const MetricField& metric, const Vec3& p) {
  if (metric.flat()) return Mat3::Zero();
  const double h = metric.h_fd();
  const Tensor3 G = christoffel(metric, p);
  std::array<Tensor3, 3> dG; // dG[m][k](i,j) = d_m Gamma^k_ij
  for (int m = 0; m < 3; ++m) {
    const Tensor3 Gp = christoffel(metric, p + h * unit(m));
    const Tensor3 Gm = christoffel(metric, p - h * unit(m));
    for (int k = 0; k < 3; ++k) dG[m][k] = (Gp[k] - Gm[k]) / (2 * h);
  }
  Mat3 R = Mat3::Zero();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double r = 0;
      for (int k = 0; k < 3; ++k) {
        r += dG[k][k](i, j) - dG[j][k](i, k);
        for (int l = 0; l < 3; ++l) r += G[k](k, l) * G[l](i, j) - G[k](j, l) * G[l](i, k);
      }
      R(i, j) = r;
    }
  return R;
}

Polynomial3::Polynomial3(std::vector<Term> terms) : terms_(std::move(terms)) {}

double Polynomial3::operator()(const Vec3& p) const {
  double s = 0;
  for (const auto& t : terms_) {
    double v = t.c;
    for (int a = 0; a < 3; ++a)
      for (int e = 0; e < t.e[a]; ++e) v *= p(a);
    s += v;
  }
  return s;
}

Polynomial3 Polynomial3::derivative(int axis) const {
  std::vector<Term> out;
  for (const auto& t : terms_) {
    if (t.e[axis] == 0) continue;
    Term d = t;
    d.c *= t.e[axis];
    d.e[axis] -= 1;
    out.push_back(d);
  }
  return Polynomial3(std::move(out));
}

Polynomial3 Polynomial3::operator+(const Polynomial3& o) const {
  std::vector<Term> t = terms_;
  t.insert(t.end(), o.terms_.begin(), o.terms_.end());
  return Polynomial3(std::move(t));
}

Polynomial3 Polynomial3::operator*(double s) const {
  std::vector<Term> t = terms_;
  for (auto& x : t) x.c *= s;
  return Polynomial3(std::move(t));
}

Polynomial3 solid_harmonic(int l, int m) {
  using T = Polynomial3::Term;
  auto P = [](std::vector<T> t) { return Polynomial3(std::move(t)); };
  if (std::abs(m) > l) throw DomainError("harmonic order exceeds degree");
  switch (l) {
  case 0:
    return P({{1, {0, 0, 0}}});
  case 1:
    if (m == 0) return P({{1, {0, 0, 1}}});
    return m > 0 ? P({{1, {1, 0, 0}}}) : P({{1, {0, 1, 0}}});
  case 2:
    switch (m) {
    case 0: return P({{2, {0, 0, 2}}, {-1, {2, 0, 0}}, {-1, {0, 2, 0}}});
    case 1: return P({{1, {1, 0, 1}}});
    case -1: return P({{1, {0, 1, 1}}});
    case 2: return P({{1, {2, 0, 0}}, {-1, {0, 2, 0}}});
    default: return P({{1, {1, 1, 0}}});
    }
  case 3:
    switch (m) {
    case 0: return P({{2, {0, 0, 3}}, {-3, {2, 0, 1}}, {-3, {0, 2, 1}}});
    case 1: return P({{4, {1, 0, 2}}, {-1, {3, 0, 0}}, {-1, {1, 2, 0}}});
    case -1: return P({{4, {0, 1, 2}}, {-1, {2, 1, 0}}, {-1, {0, 3, 0}}});
    case 2: return P({{1, {2, 0, 1}}, {-1, {0, 2, 1}}});
    case -2: return P({{1, {1, 1, 1}}});
    case 3: return P({{1, {3, 0, 0}}, {-3, {1, 2, 0}}});
    default: return P({{3, {2, 1, 0}}, {-1, {0, 3, 0}}});
    }
  default:
    throw DomainError("solid harmonics are provided for degree <= 3");
  }
}

Vec3 ImplicitDomain::boundary_point(const Vec3& d) const {
  if (!bounded()) throw DomainError(name() + ": boundary_point needs a bounded domain");
  const Vec3 u = d.normalized();
  if (level(Vec3::Zero()) <= 0) throw DomainError(name() + ": origin is not inside the domain");
  double lo = 0, hi = diameter();
  if (level(hi * u) >= 0) throw DomainError(name() + ": ray does not leave the domain");
  for (int it = 0; it < 200 && hi - lo > 1e-15 * diameter(); ++it) {
    const double mid = 0.5 * (lo + hi);
    (level(mid * u) > 0 ? lo : hi) = mid;
  }
  double r = 0.5 * (lo + hi);
  for (int it = 0; it < 3; ++it) {
    const double dr = level(r * u) / grad(r * u).dot(u);
    if (!std::isfinite(dr)) break;
    r -= dr;
  }
  return r * u;
}

double ImplicitDomain::mean_curvature(const Vec3& p) const {
  const Vec3 g = grad(p);
  const double ng = g.norm();
  const Vec3 N = g / ng;
  const Mat3 Hs = hess(p);
  return -(Hs.trace() - N.dot(Hs * N)) / ng;
}

Vec3 ImplicitDomain::project(const Vec3& p0) const {
  Vec3 p = p0;
  for (int it = 0; it < 50; ++it) {
    const Vec3 g = grad(p);
    const Vec3 dp = level(p) / g.squaredNorm() * g;
    p -= dp;
    if (dp.norm() < 1e-15 * (1 + p.norm())) break;
  }
  return p;
}

PolynomialDomain::PolynomialDomain(std::string name, Polynomial3 f, double curvature_bound, double diameter,
                                   bool bounded)
    : name_(std::move(name)), f_(std::move(f)), kappa_(curvature_bound), diam_(diameter), bounded_(bounded) {
  for (int i = 0; i < 3; ++i) d1_[i] = f_.derivative(i);
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) d2_[index2(i, j)] = d1_[i].derivative(j);
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j)
      for (int k = j; k < 3; ++k) d3_[index3(i, j, k)] = d2_[index2(i, j)].derivative(k);
}

Vec3 PolynomialDomain::grad(const Vec3& p) const { return {d1_[0](p), d1_[1](p), d1_[2](p)}; }

Mat3 PolynomialDomain::hess(const Vec3& p) const {
  Mat3 H;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) H(i, j) = d2_[index2(i, j)](p);
  return H;
}

Tensor3 PolynomialDomain::third(const Vec3& p) const {
  Tensor3 T;
  for (int k = 0; k < 3; ++k)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) T[k](i, j) = d3_[index3(i, j, k)](p);
  return T;
}

std::shared_ptr<const ImplicitDomain> make_ball(double R) {
  if (!(R > 0)) throw DomainError("ball radius must be positive");
  using T = Polynomial3::Term;
  const double s = 1 / (2 * R);
  Polynomial3 f({T{R * R * s, {0, 0, 0}}, T{-s, {2, 0, 0}}, T{-s, {0, 2, 0}}, T{-s, {0, 0, 2}}});
  std::ostringstream nm;
  nm << "ball(" << R << ")";
  return std::make_shared<PolynomialDomain>(nm.str(), f, 1 / R, 2 * R);
}

std::shared_ptr<const ImplicitDomain> make_ellipsoid(double a, double b, double c) {
  if (!(a > 0 && b > 0 && c > 0)) throw DomainError("ellipsoid semi-axes must be positive");
  using T = Polynomial3::Term;
  const double ax[3] = {a, b, c};
  const double mn = std::min({a, b, c}), mx = std::max({a, b, c});
  const double s = 0.5 * mn;
  Polynomial3 f({T{s, {0, 0, 0}}, T{-s / (a * a), {2, 0, 0}}, T{-s / (b * b), {0, 2, 0}},
                 T{-s / (c * c), {0, 0, 2}}});
  double kappa = 0;
  for (double ai : ax)
    for (double aj : ax) kappa = std::max(kappa, ai / (aj * aj));
  std::ostringstream nm;
  nm << "ellipsoid(" << a << "," << b << "," << c << ")";
  return std::make_shared<PolynomialDomain>(nm.str(), f, kappa, 2 * mx);
}

std::shared_ptr<const ImplicitDomain> make_perturbed_ball(double R, double eps, int degree, int order) {
  if (!(R > 0)) throw DomainError("perturbed_ball radius must be positive");
  if (degree < 1 || degree > 3) throw DomainError("perturbed_ball degree must be 1, 2 or 3");
  if (std::abs(order) > degree) throw DomainError("perturbed_ball order must satisfy |order| <= degree");
  using T = Polynomial3::Term;
  const double s = 1 / (2 * R);
  Polynomial3 base({T{R * R * s, {0, 0, 0}}, T{-s, {2, 0, 0}}, T{-s, {0, 2, 0}}, T{-s, {0, 0, 2}}});
  Polynomial3 f = base + solid_harmonic(degree, order) * (eps * std::pow(R, 2.0 - degree) * s);
  std::ostringstream nm;
  nm << "perturbed_ball(" << R << "," << eps << "," << degree << "," << order << ")";
  // curvature bound and diameter by sampling a rough temporary domain
  PolynomialDomain probe(nm.str(), f, 1 / R, 4 * R);
  double kappa = 0, rmax = 0;
  const int nt = 24, np = 48;
  for (int i = 0; i <= nt; ++i)
    for (int j = 0; j < np; ++j) {
      const double th = std::numbers::pi * i / nt, ph = 2 * std::numbers::pi * j / np;
      const Vec3 d(std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th));
      const Vec3 p = probe.boundary_point(d);
      rmax = std::max(rmax, p.norm());
      const Vec3 g = probe.grad(p);
      const Vec3 N = g.normalized();
      const Mat3 P = Mat3::Identity() - N * N.transpose();
      const Mat3 S = -(P * probe.hess(p) * P) / g.norm();
      Eigen::SelfAdjointEigenSolver<Mat3> es(S);
      kappa = std::max(kappa, es.eigenvalues().cwiseAbs().maxCoeff());
    }
  return std::make_shared<PolynomialDomain>(nm.str(), f, 1.1 * kappa, 2 * rmax);
}

std::shared_ptr<const ImplicitDomain> make_half_space() {
  using T = Polynomial3::Term;
  return std::make_shared<PolynomialDomain>("half_space", Polynomial3({T{1, {0, 0, 1}}}), 0.0,
                                            std::numeric_limits<double>::infinity(), false);
}

std::shared_ptr<const ImplicitDomain> domain_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw DomainError("domain definition must be a JSON object");
  if (!j.contains("type") || !j["type"].is_string()) throw DomainError("domain definition needs a string field 'type'");
  const std::string type = j["type"];
  const nlohmann::json params = j.value("params", nlohmann::json::object());
  if (!params.is_object()) throw DomainError("domain 'params' must be an object");
  auto num = [&](const char* key, double def) {
    if (!params.contains(key)) return def;
    if (!params[key].is_number()) throw DomainError(std::string("domain parameter '") + key + "' must be a number");
    return params[key].get<double>();
  };
  auto integer = [&](const char* key, int def) {
    if (!params.contains(key)) return def;
    if (!params[key].is_number_integer())
      throw DomainError(std::string("domain parameter '") + key + "' must be an integer");
    return params[key].get<int>();
  };
  if (type == "ball") return make_ball(num("radius", 1.0));
  if (type == "ellipsoid") {
    if (!params.contains("semi_axes") || !params["semi_axes"].is_array() || params["semi_axes"].size() != 3)
      throw DomainError("ellipsoid needs 'semi_axes': [a, b, c]");
    const auto& s = params["semi_axes"];
    for (const auto& v : s)
      if (!v.is_number()) throw DomainError("ellipsoid semi_axes must be numbers");
    return make_ellipsoid(s[0].get<double>(), s[1].get<double>(), s[2].get<double>());
  }
  if (type == "perturbed_ball")
    return make_perturbed_ball(num("radius", 1.0), num("amplitude", 0.05), integer("degree", 2), integer("order", 0));
  if (type == "half_space" || type == "flat") return make_half_space();
  throw DomainError("unknown domain type '" + type + "' (expected ball, ellipsoid, perturbed_ball or half_space)");
}

std::shared_ptr<const ImplicitDomain> parse_domain(const std::string& text, const std::string& source) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::size_t line = 1, col = 1;
    const std::size_t upto = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < upto; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::ostringstream os;
    os << source << ":" << line << ":" << col << ": invalid domain JSON: " << e.what();
    throw DomainError(os.str());
  }
  try {
    return domain_from_json(j);
  } catch (const DomainError& e) {
    throw DomainError(source + ": " + e.what());
  }
}

DomainChart::DomainChart(std::shared_ptr<const ImplicitDomain> domain, const Vec3& a, const Vec3& v1, const Vec3& v2,
                         const Vec3& N, double r0)
    : domain_(std::move(domain)), a_(a), v1_(v1), v2_(v2), N_(N), r0_(r0) {}

GraphJet DomainChart::graph(const Vec2& y, int order) const {
  const ImplicitDomain& F = *domain_;
  const Vec3 base = a_ + y(0) * v1_ + y(1) * v2_;
  double t = 0;
  bool ok = false;
  for (int it = 0; it < 60; ++it) {
    const Vec3 p = base + t * N_;
    const double gt = F.grad(p).dot(N_);
    if (!(std::abs(gt) > 1e-12)) break;
    const double dt = F.level(p) / gt;
    t -= dt;
    if (!std::isfinite(t)) break;
    if (std::abs(dt) <= 1e-15 * (1 + std::abs(t))) {
      ok = true;
      break;
    }
  }
  if (!ok || y.norm() > 2 * r0_) {
    std::ostringstream os;
    os << "chart graph evaluation failed at |y| = " << y.norm() << " (chart radius " << r0_ << ")";
    throw ChartRangeError(os.str());
  }
  GraphJet J;
  J.value = t;
  if (order < 1) return J;
  const Vec3 p = base + t * N_;
  const Vec3 gF = F.grad(p);
  const double Gt = gF.dot(N_);
  const Vec3 v[2] = {v1_, v2_};
  Vec3 u[2];
  for (int i = 0; i < 2; ++i) {
    J.d1(i) = -gF.dot(v[i]) / Gt;
    u[i] = v[i] + J.d1(i) * N_;
  }
  if (order < 2) return J;
  const Mat3 H = F.hess(p);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) J.d2(i, j) = -u[i].dot(H * u[j]) / Gt;
  if (order < 3) return J;
  const Tensor3 T = F.third(p);
  auto T3 = [&](const Vec3& a, const Vec3& b, const Vec3& c) {
    double s = 0;
    for (int k = 0; k < 3; ++k) s += c(k) * a.dot(T[k] * b);
    return s;
  };
  const Vec3 HN = H * N_;
  for (int k = 0; k < 2; ++k)
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        J.d3[k](i, j) = -(T3(u[i], u[j], u[k]) + J.d2(i, j) * u[k].dot(HN) + J.d2(i, k) * u[j].dot(HN) +
                          J.d2(j, k) * u[i].dot(HN)) /
                        Gt;
  return J;
}

Vec3 DomainChart::surface_point(const Vec2& y) const {
  return a_ + y(0) * v1_ + y(1) * v2_ + graph(y, 0).value * N_;
}

Vec3 DomainChart::to_space(const Vec3& yz) const {
  return a_ + yz(0) * v1_ + yz(1) * v2_ + (graph(yz.head<2>(), 0).value + yz(2)) * N_;
}

Vec3 DomainChart::frame_coordinates(const Vec3& p) const {
  const Vec3 d = p - a_;
  return {d.dot(v1_), d.dot(v2_), d.dot(N_)};
}

DomainChart make_chart(std::shared_ptr<const ImplicitDomain> domain, const Vec3& a, double frame_rotation) {
  if (!domain) throw DomainError("make_chart: null domain");
  const Vec3 g = domain->grad(a);
  if (!(g.norm() > 0)) throw DomainError("make_chart: vanishing gradient at the base point");
  const double scale = domain->bounded() ? domain->diameter() : 1.0;
  if (std::abs(domain->level(a)) / g.norm() > 1e-9 * std::max(1.0, scale))
    throw DomainError("make_chart: base point is not on the boundary surface");
  const Vec3 N = g.normalized();
  int drop = 0;
  for (int k = 1; k < 3; ++k)
    if (std::abs(N(k)) > std::abs(N(drop))) drop = k;
  Vec3 u[2];
  int c = 0;
  for (int k = 0; k < 3; ++k)
    if (k != drop) u[c++] = unit(k) - N(k) * N;
  Vec3 v1 = u[0].normalized();
  Vec3 v2 = (u[1] - u[1].dot(v1) * v1).normalized();
  if (v1.cross(v2).dot(N) < 0) v2 = -v2;
  const double cr = std::cos(frame_rotation), sr = std::sin(frame_rotation);
  const Vec3 r1 = cr * v1 + sr * v2, r2 = -sr * v1 + cr * v2;
  const double kappa = domain->curvature_bound();
  const double r0 = kappa > 0 ? std::min(0.5 / kappa, 1e6) : 1e6;
  return DomainChart(std::move(domain), a, r1, r2, N, r0);
}

MetricField pullback_metric(const DomainChart& chart, double lambda) {
  if (lambda < 0) throw std::invalid_argument("pullback_metric: lambda must be non-negative");
  if (lambda == 0) return MetricField::euclidean();
  if (lambda > chart.r0() / 2 * (1 + 1e-12)) {
    std::ostringstream os;
    os << "lambda = " << lambda << " exceeds half the chart radius " << chart.r0();
    throw ChartRangeError(os.str());
  }
  return MetricField(std::make_shared<PullbackModel>(chart, lambda));
}

MetricField first_order_term(const DomainChart& chart) {
  return MetricField(std::make_shared<FirstOrderModel>(chart.graph(Vec2::Zero(), 2).d2));
}

ShapeOperatorData shape_operator(std::shared_ptr<const ImplicitDomain> domain, const Vec3& a) {
  const DomainChart chart = make_chart(domain, a);
  ShapeOperatorData s;
  s.h_S = chart.graph(Vec2::Zero(), 2).d2;
  s.H_S = s.h_S.trace();
  const double kappa = domain->curvature_bound();
  const double h = 1e-4 * (kappa > 0 ? std::min(1.0, 1 / kappa) : 1.0);
  for (int i = 0; i < 2; ++i) {
    Vec2 e = Vec2::Zero();
    e(i) = h;
    s.grad_HS(i) = (domain->mean_curvature(chart.surface_point(e)) - domain->mean_curvature(chart.surface_point(-e))) /
                   (2 * h);
  }
  return s;
}

} // namespace willmore
