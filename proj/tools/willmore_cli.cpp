// Command-line driver: check | solve | scan | expand | trace.
//
// Settings come from built-in defaults, then the --config JSON document, then
// command-line flags (later sources win).

#include "willmore/reduced_energy.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using namespace willmore;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "1.0.0";
constexpr double kPi = std::numbers::pi;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string g17(double v) { return fmt::format("{:.17g}", v); }

// ---------------------------------------------------------------------------
// Configuration

struct Flags {
  std::string config, domain, a, mesh, out, lambdas, jacobian;
  double lambda = 0, tol = 0, tolerance_scale = 1;
  int jobs = 0, n_theta = 0, n_phi = 0, steps = 0, max_iter = 0;
};

struct RunConfig {
  json domain = "ball";
  std::optional<Vec3> a;
  std::optional<double> lambda;
  std::vector<double> lambdas{0.2, 0.1, 0.05};
  std::string mesh = "16x32";
  int jobs = std::max(1u, std::thread::hardware_concurrency());
  std::string out = ".";
  int steps = 10;
  double tolerance_scale = 1;
  ReducedOptions opt;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Vec3 parse_point(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("--a expects \"x,y,z\", got '" + text + "'");
    }
  }
  if (v.size() != 3) throw UsageError("--a expects three comma-separated numbers, got '" + text + "'");
  return {v[0], v[1], v[2]};
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    try {
      v.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw UsageError("--lambdas expects comma-separated numbers, got '" + text + "'");
    }
  }
  return v;
}

std::shared_ptr<const ImplicitDomain> resolve_domain(const json& desc) {
  if (desc.is_object()) return domain_from_json(desc);
  if (!desc.is_string()) throw UsageError("domain must be a JSON object or a string");
  const std::string s = desc.get<std::string>();
  const auto first = s.find_first_not_of(" \t\n");
  if (first != std::string::npos && s[first] == '{') return parse_domain(s, "--domain");
  if (fs::is_regular_file(s)) return parse_domain(read_file(s), s);
  if (s == "ball") return make_ball(1.0);
  if (s == "ellipsoid") return make_ellipsoid(1, 1, 1.5);
  if (s == "perturbed_ball") return domain_from_json({{"type", "perturbed_ball"}});
  if (s == "half_space" || s == "flat") return make_half_space();
  throw UsageError("unknown domain '" + s + "': give a type name, a JSON file or inline JSON");
}

void apply_config_file(RunConfig& rc, const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw UsageError(path + ": " + e.what());
  }
  if (!j.is_object()) throw UsageError(path + ": config must be a JSON object");
  static const std::set<std::string> known = {"domain", "a",     "lambda",     "lambdas", "mesh",
                                              "jobs",   "out",   "steps",      "resolution",
                                              "solver", "fd_fraction", "tolerance_scale"};
  for (const auto& [k, v] : j.items())
    if (!known.count(k)) throw UsageError(path + ": unknown config key '" + k + "'");
  try {
    if (j.contains("domain")) rc.domain = j["domain"];
    if (j.contains("a")) {
      const auto v = j["a"].get<std::vector<double>>();
      if (v.size() != 3) throw UsageError(path + ": 'a' needs three numbers");
      rc.a = Vec3(v[0], v[1], v[2]);
    }
    if (j.contains("lambda")) rc.lambda = j["lambda"].get<double>();
    if (j.contains("lambdas")) rc.lambdas = j["lambdas"].get<std::vector<double>>();
    rc.mesh = j.value("mesh", rc.mesh);
    rc.jobs = j.value("jobs", rc.jobs);
    rc.out = j.value("out", rc.out);
    rc.steps = j.value("steps", rc.steps);
    rc.tolerance_scale = j.value("tolerance_scale", rc.tolerance_scale);
    json ro = j.value("resolution", json::object());
    if (j.contains("solver")) ro["solver"] = j["solver"];
    if (j.contains("fd_fraction")) ro["fd_fraction"] = j["fd_fraction"];
    if (!ro.contains("n_theta")) ro["n_theta"] = rc.opt.n_theta;
    if (!ro.contains("n_phi")) ro["n_phi"] = 2 * ro["n_theta"].get<int>();
    rc.opt = ro.get<ReducedOptions>();
  } catch (const json::exception& e) {
    throw UsageError(path + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw UsageError(path + ": " + e.what());
  }
}

RunConfig build_config(const Flags& f, const CLI::App& sub) {
  RunConfig rc;
  if (!f.config.empty()) apply_config_file(rc, f.config);
  auto given = [&](const char* name) { return sub.count(name) > 0; };
  if (given("--domain")) rc.domain = f.domain;
  if (given("--a")) rc.a = parse_point(f.a);
  if (given("--lambda")) rc.lambda = f.lambda;
  if (given("--lambdas")) rc.lambdas = parse_list(f.lambdas);
  if (given("--mesh")) rc.mesh = f.mesh;
  if (given("--jobs")) rc.jobs = f.jobs;
  if (given("--out")) rc.out = f.out;
  if (given("--steps")) rc.steps = f.steps;
  if (given("--tolerance-scale")) rc.tolerance_scale = f.tolerance_scale;
  if (given("--n-theta")) {
    rc.opt.n_theta = f.n_theta;
    if (!given("--n-phi")) rc.opt.n_phi = 2 * f.n_theta;
  }
  if (given("--n-phi")) rc.opt.n_phi = f.n_phi;
  if (given("--tol")) rc.opt.solver.tol = f.tol;
  if (given("--max-iter")) rc.opt.solver.max_iter = f.max_iter;
  if (given("--jacobian")) {
    if (f.jacobian == "frozen")
      rc.opt.solver.jacobian = JacobianKind::frozen;
    else if (f.jacobian == "fd")
      rc.opt.solver.jacobian = JacobianKind::finite_difference;
    else
      throw UsageError("--jacobian must be frozen or fd");
  }
  if (rc.opt.n_theta < 16 || rc.opt.n_theta > 128) throw UsageError("n_theta must lie in [16, 128]");
  if (rc.opt.n_phi < 4 || rc.opt.n_phi % 2 != 0) throw UsageError("n_phi must be even and at least 4");
  if (rc.lambda && !(*rc.lambda > 0)) throw UsageError("lambda must be positive");
  for (double l : rc.lambdas)
    if (!(l > 0)) throw UsageError("all lambdas must be positive");
  if (rc.jobs < 1) throw UsageError("jobs must be at least 1");
  if (rc.steps < 1) throw UsageError("steps must be at least 1");
  if (!(rc.tolerance_scale >= 0)) throw UsageError("tolerance scale must be non-negative");
  if (!(rc.opt.solver.tol > 0) || rc.opt.solver.max_iter < 1) throw UsageError("solver tolerance or max_iter out of range");
  return rc;
}

Vec3 base_point(const RunConfig& rc, const ImplicitDomain& dom) {
  if (!rc.a) return dom.bounded() ? dom.boundary_point(Vec3(0, 0, -1)) : dom.project(Vec3::Zero());
  const Vec3 p = dom.project(*rc.a);
  const double scale = dom.bounded() ? dom.diameter() : 1.0;
  if ((p - *rc.a).norm() > 1e-6 * scale)
    throw UsageError(fmt::format("point ({}, {}, {}) is not on the boundary of {} (distance {:.3g})", (*rc.a)(0),
                                 (*rc.a)(1), (*rc.a)(2), dom.name(), (p - *rc.a).norm()));
  return p;
}

fs::path prepare_out(const RunConfig& rc) {
  const fs::path dir(rc.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  const fs::path probe = dir / ".willmore_write_probe";
  {
    std::ofstream t(probe);
    if (!t) throw UsageError("output directory " + dir.string() + " is not writable");
  }
  fs::remove(probe, ec);
  return dir;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream o(p, std::ios::binary);
  o << text;
  if (!o) throw UsageError("failed to write " + p.string());
}

json vec_json(const Vec3& v) { return json::array({v(0), v(1), v(2)}); }

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (int j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(r);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Commands

struct Row {
  std::string name;
  double value, tolerance;
  bool pass;
};

void print_rows(const std::vector<Row>& rows) {
  std::size_t w = 4;
  for (const auto& r : rows) w = std::max(w, r.name.size());
  fmt::print("{:<{}}  {:>24}  {:>24}  {}\n", "check", w, "value", "tolerance", "result");
  for (const auto& r : rows)
    fmt::print("{:<{}}  {:>24}  {:>24}  {}\n", r.name, w, g17(r.value), g17(r.tolerance), r.pass ? "pass" : "FAIL");
}

int cmd_check(const RunConfig& rc) {
  const auto dom = resolve_domain(rc.domain);
  const Vec3 a = base_point(rc, *dom);
  const double s = rc.tolerance_scale;
  std::vector<Row> rows;
  auto add = [&](std::string name, double v, double tol) { rows.push_back({std::move(name), v, tol, v <= tol}); };

  const IntegralReport ir = check_analytic_integrals(dom, a, rc.opt.n_theta);
  for (int k = 0; k < 5; ++k)
    add(fmt::format("integral {} - ({:.6g}) H_S", IntegralReport::kNames[k], IntegralReport::kCoefficients[k]),
        std::abs(ir.value[k] - ir.expected[k]), 1e-8 * s);
  add("first order energy + pi H_S", std::abs(first_order_energy(dom, a, rc.opt.n_theta) + kPi * ir.H_S), 1e-8 * s);

  const HalfSphereGrid grid(rc.opt.n_theta, rc.opt.n_phi);
  double eig = 0;
  for (const auto& it : eigenvalue_identity(grid, 6)) eig = std::max(eig, std::abs(it.form - it.expected) / it.scale);
  add("eigenvalue identity (relative)", eig, 1e-6 * s);

  const double lam = rc.lambda.value_or(0.1);
  const DomainChart chart = make_chart(dom, a);
  const SphereFunction w = SphereFunction::sample(grid, [](double th, double ph) {
    return 0.04 * std::cos(th) * std::cos(th) + 0.02 * std::sin(th) * std::cos(ph);
  });
  const SphereFunction psi = SphereFunction::sample(grid, [](double th, double ph) {
    const double x = std::sin(th) * std::cos(ph), y = std::sin(th) * std::sin(ph), z = std::cos(th);
    return 0.3 + z * y + 0.5 * x * x;
  });
  for (const auto& [label, metric] : {std::pair{std::string("euclidean"), MetricField::euclidean()},
                                      std::pair{std::string("chart"), pullback_metric(chart, lam)}})
    for (const auto& c : check_variation_formulas(w, psi, metric))
      add(fmt::format("variation order deficit {} ({})", c.name, label), std::max(0.0, 2.0 - c.order()), 0.05 * s);

  const ConstrainedSolution flat = solve_constrained(MetricField::euclidean(), grid, rc.opt.solver);
  add("flat solve |w| + |alpha| + |beta|",
      flat.w().max_abs() + std::abs(flat.alpha()) + std::abs(flat.beta1()) + std::abs(flat.beta2()), 1e-12 * s);
  add("flat solve |W - 2 pi|", std::abs(flat.energy - 2 * kPi), 1e-12 * s);

  const ConstrainedSolution sol = solve_at(dom, a, lam, rc.opt);
  for (const auto& it : verify_solution(sol).items)
    if (!it.informational) add("solution " + it.name, it.value, it.tolerance * s);

  fmt::print("domain {} at a = ({}, {}, {}), H_S = {}\n", dom->name(), g17(a(0)), g17(a(1)), g17(a(2)), g17(ir.H_S));
  print_rows(rows);
  const bool ok = std::all_of(rows.begin(), rows.end(), [](const Row& r) { return r.pass; });
  fmt::print("{}\n", ok ? "all checks passed" : "some checks FAILED");
  return ok ? 0 : 2;
}

int cmd_solve(const RunConfig& rc) {
  const auto dom = resolve_domain(rc.domain);
  const Vec3 a = base_point(rc, *dom);
  const fs::path dir = prepare_out(rc);
  const double lam = rc.lambda.value_or(0.1);
  const ConstrainedSolution sol = solve_at(dom, a, lam, rc.opt);
  const VerificationReport rep = verify_solution(sol);
  const FourierModes c = to_fourier(sol.w());
  const ConstraintResidual& r = sol.residual;
  json ver = json::array();
  for (const auto& it : rep.items)
    ver.push_back({{"name", it.name},
                   {"value", it.value},
                   {"tolerance", it.tolerance},
                   {"pass", it.pass},
                   {"informational", it.informational}});
  const json out = {
      {"domain", dom->name()},
      {"a", vec_json(a)},
      {"lambda", lam},
      {"converged", sol.converged},
      {"iterations", sol.iterations},
      {"energy", sol.energy},
      {"alpha", sol.alpha()},
      {"beta", {sol.beta1(), sol.beta2()}},
      {"residual",
       {{"max_norm", r.max_norm()},
        {"interior", r.interior_norm()},
        {"consistency", r.consistency_norm()},
        {"bc_natural", r.bc_natural.cwiseAbs().maxCoeff()},
        {"bc_ortho", r.bc_ortho.cwiseAbs().maxCoeff()},
        {"area_defect", r.area_defect},
        {"center_defect", {r.center_defect(0), r.center_defect(1)}}}},
      {"history", sol.history},
      {"metric_deviation", sol.metric_deviation},
      {"estimate_constant", sol.estimate_constant},
      {"grid", {{"n_theta", sol.w().grid().n_theta()}, {"n_phi", sol.w().grid().n_phi()}}},
      {"theta_nodes", std::vector<double>(sol.w().grid().theta_nodes().data(),
                                          sol.w().grid().theta_nodes().data() + sol.w().grid().n_theta())},
      {"w_fourier", {{"cos", matrix_json(c.cos)}, {"sin", matrix_json(c.sin)}}},
      {"verification", ver}};
  write_text(dir / "solution.json", out.dump(2) + "\n");
  fmt::print("converged in {} iterations\nW = {}\nalpha = {}\nbeta = ({}, {})\narea defect = {}\nmax residual = {}\n",
             sol.iterations, g17(sol.energy), g17(sol.alpha()), g17(sol.beta1()), g17(sol.beta2()), g17(r.area_defect),
             g17(r.max_norm()));
  fmt::print("verification {}; wrote {}\n", rep.all_pass() ? "passed" : "FAILED", (dir / "solution.json").string());
  return rep.all_pass() ? 0 : 2;
}

int cmd_scan(const RunConfig& rc) {
  const auto dom = resolve_domain(rc.domain);
  std::pair<int, int> nm;
  try {
    nm = parse_mesh_size(rc.mesh);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const fs::path dir = prepare_out(rc);
  const double lam = rc.lambda.value_or(0.05);
  const SurfaceMesh mesh = make_mesh(*dom, nm.first, nm.second);
  const EnergyLandscape L = scan_landscape(dom, lam, mesh, rc.opt, rc.jobs);
  write_text(dir / "landscape.csv", landscape_csv(L));
  const json summary = landscape_summary(L);
  write_text(dir / "landscape.json", summary.dump(2) + "\n");
  fmt::print("{} points, {} failed, spread {}\n", L.samples.size(), L.failures, g17(L.spread));
  if (L.degenerate) fmt::print("degenerate landscape: spread below 1e-7 of the mean energy\n");
  fmt::print("{} critical points\n", L.critical_points.size());
  for (const auto& c : L.critical_points)
    fmt::print("  {:<10} index {:>5}  a = ({}, {}, {})  W = {}  |beta| = {}\n", to_string(c.type), c.index, g17(c.a(0)),
               g17(c.a(1)), g17(c.a(2)), g17(c.energy), g17(c.beta_sum));
  fmt::print("wrote {} and {}\n", (dir / "landscape.csv").string(), (dir / "landscape.json").string());
  return L.failures == static_cast<int>(L.samples.size()) ? 2 : 0;
}

int cmd_expand(const RunConfig& rc) {
  const auto dom = resolve_domain(rc.domain);
  const Vec3 a = base_point(rc, *dom);
  const fs::path dir = prepare_out(rc);
  const EnergyExpansion ex = energy_expansion(dom, a, rc.lambdas, rc.opt);
  std::string csv = "lambda,W_bar,E,C\n";
  json rows = json::array();
  fmt::print("H_S = {}\n{:>24}  {:>24}  {:>24}  {:>24}\n", g17(ex.H_S + 0.0), "lambda", "W_bar", "E", "C");
  for (const auto& r : ex.rows) {
    csv += fmt::format("{},{},{},{}\n", g17(r.lambda), g17(r.energy), g17(r.E), g17(r.C));
    fmt::print("{:>24}  {:>24}  {:>24}  {:>24}\n", g17(r.lambda), g17(r.energy), g17(r.E), g17(r.C));
    rows.push_back({{"lambda", r.lambda}, {"W_bar", r.energy}, {"E", r.E}, {"C", r.C}, {"iterations", r.iterations}});
  }
  fmt::print("slope at smallest lambda {}\nextrapolated slope {}  (-pi H_S = {})\nC variation {}\n", g17(ex.slope_raw),
             g17(ex.slope_extrapolated), g17(-kPi * ex.H_S), g17(ex.C_variation));
  write_text(dir / "expansion.csv", csv);
  const json j = {{"domain", dom->name()},
                  {"a", vec_json(a)},
                  {"H_S", ex.H_S + 0.0},
                  {"rows", rows},
                  {"slope_raw", ex.slope_raw},
                  {"slope_extrapolated", ex.slope_extrapolated},
                  {"minus_pi_H_S", -kPi * ex.H_S + 0.0},
                  {"C_variation", ex.C_variation}};
  write_text(dir / "expansion.json", j.dump(2) + "\n");
  return 0;
}

int cmd_trace(const RunConfig& rc) {
  const auto dom = resolve_domain(rc.domain);
  const Vec3 a = base_point(rc, *dom);
  const fs::path dir = prepare_out(rc);
  const double lam = rc.lambda.value_or(0.1);
  const ConcentrationPath p = trace_concentration_path(dom, a, lam, rc.steps, rc.opt);
  write_text(dir / "path.csv", path_csv(p));
  const json j = {{"domain", dom->name()},
                  {"a0", vec_json(a)},
                  {"limit", vec_json(p.limit)},
                  {"lambda_max", lam},
                  {"steps", rc.steps},
                  {"hessian_eigenvalues", {p.hessian_eigenvalues(0), p.hessian_eigenvalues(1)}},
                  {"condition_number", p.condition_number}};
  write_text(dir / "path.json", j.dump(2) + "\n");
  double drift = 0;
  for (const auto& q : p.points) drift = std::max(drift, (q - p.limit).norm());
  fmt::print("{} path points, limit ({}, {}, {}), max distance from limit {}\nwrote {}\n", p.points.size(),
             g17(p.limit(0)), g17(p.limit(1)), g17(p.limit(2)), g17(drift), (dir / "path.csv").string());
  return 0;
}

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("willmore");
  spdlog::set_default_logger(logger);
  const char* env = std::getenv("WILLMORE_LOG");
  spdlog::set_level(env ? spdlog::level::from_str(env) : spdlog::level::warn);
}

void add_common(CLI::App* s, Flags& f) {
  s->add_option("--config", f.config, "JSON config file")->check(CLI::ExistingFile);
  s->add_option("--domain", f.domain, "type name, JSON file or inline JSON");
  s->add_option("--a", f.a, "boundary point \"x,y,z\"");
  s->add_option("--lambda", f.lambda, "scale (trace: largest lambda)");
  s->add_option("--lambdas", f.lambdas, "comma-separated scales for expand");
  s->add_option("--mesh", f.mesh, "scan mesh NxM");
  s->add_option("--jobs", f.jobs, "worker threads for scans");
  s->add_option("--out", f.out, "output directory");
  s->add_option("--steps", f.steps, "path steps");
  s->add_option("--n-theta", f.n_theta, "colatitude nodes (16..128)");
  s->add_option("--n-phi", f.n_phi, "azimuth nodes (even)");
  s->add_option("--tol", f.tol, "Newton tolerance");
  s->add_option("--max-iter", f.max_iter, "Newton iteration limit");
  s->add_option("--jacobian", f.jacobian, "frozen or fd");
  s->add_option("--tolerance-scale", f.tolerance_scale, "multiply check tolerances");
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Free-boundary Willmore disks: constrained solves and reduced-energy scans"};
  app.set_version_flag("--version", std::string("willmore ") + kVersion);
  app.require_subcommand(1);
  Flags f;
  struct Cmd {
    const char* name;
    const char* help;
    int (*run)(const RunConfig&);
  };
  const Cmd cmds[] = {{"check", "analytic and consistency checks", cmd_check},
                      {"solve", "solve at one boundary point, write solution.json", cmd_solve},
                      {"scan", "reduced energy over a boundary mesh", cmd_scan},
                      {"expand", "energy expansion table in lambda", cmd_expand},
                      {"trace", "concentration path from a critical point of H_S", cmd_trace}};
  std::vector<CLI::App*> subs;
  for (const auto& c : cmds) {
    subs.push_back(app.add_subcommand(c.name, c.help));
    add_common(subs.back(), f);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  setup_logging();
  for (std::size_t k = 0; k < subs.size(); ++k) {
    if (!subs[k]->parsed()) continue;
    try {
      const RunConfig rc = build_config(f, *subs[k]);
      return cmds[k].run(rc);
    } catch (const UsageError& e) {
      fmt::print(stderr, "error: {}\n", e.what());
      return 1;
    } catch (const DomainError& e) {
      fmt::print(stderr, "error: {}\n", e.what());
      return 1;
    } catch (const std::invalid_argument& e) {
      fmt::print(stderr, "error: {}\n", e.what());
      return 1;
    } catch (const std::exception& e) {
      fmt::print(stderr, "numerical failure: {}\n", e.what());
      return 2;
    }
  }
  return 1;
}
