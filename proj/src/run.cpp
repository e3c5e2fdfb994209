#include "semilab/run.hpp"

#include "semilab/capacity.hpp"
#include "semilab/error.hpp"
#include "semilab/experiments.hpp"
#include "semilab/orlicz.hpp"
#include "semilab/potentials.hpp"
#include "semilab/solver.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <initializer_list>
#include <numbers>
#include <sstream>

namespace semilab {
namespace {

using json = nlohmann::ordered_json;
constexpr double kPi = std::numbers::pi;

// ---------------------------------------------------------------------------
// Config access

void allow(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
  require(j.is_object(), ErrorCode::config, where + ": expected an object");
  for (const auto& [k, v] : j.items()) {
    (void)v;
    const bool known = std::any_of(keys.begin(), keys.end(), [&](const char* key) { return k == key; });
    require(known, ErrorCode::config, where + ": unknown key '" + k + "'");
  }
}

template <class T>
T get(const json& j, const char* key, const T& fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    fail(ErrorCode::config, std::string("config: bad value for '") + key + "'");
  }
}

template <class T>
T need(const json& j, const char* key, const std::string& where) {
  require(j.contains(key), ErrorCode::config, where + ": missing '" + key + "'");
  return get<T>(j, key, T{});
}

Point point_of(const json& j, const std::string& where) {
  require(j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number(), ErrorCode::config,
          where + ": expected [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

GridPtr parse_grid(const json& cfg) {
  const json g = cfg.value("grid", json::object());
  allow(g, {"domain", "n"}, "grid");
  return Grid2D::build(domain_kind_from_string(get<std::string>(g, "domain", "unit_square")), get<int>(g, "n", 64));
}

BoundaryMeasure parse_boundary_measure(const json& j) {
  BoundaryMeasure mu;
  if (j.is_null()) return mu;
  allow(j, {"atoms", "density", "cantor"}, "measure");
  for (const auto& a : j.value("atoms", json::array())) {
    allow(a, {"s", "x", "y", "mass"}, "measure.atoms");
    BoundaryAtom atom;
    atom.mass = need<double>(a, "mass", "measure.atoms");
    if (a.contains("x") || a.contains("y"))
      atom.position = Point{need<double>(a, "x", "measure.atoms"), need<double>(a, "y", "measure.atoms")};
    else
      atom.s = need<double>(a, "s", "measure.atoms");
    mu.atoms.push_back(atom);
  }
  for (const auto& d : j.value("density", json::array())) {
    allow(d, {"kind", "s0", "s1", "c", "cap", "table"}, "measure.density");
    DensityPiece p;
    p.kind = density_kind_from_string(get<std::string>(d, "kind", "constant"));
    p.s0 = need<double>(d, "s0", "measure.density");
    p.s1 = need<double>(d, "s1", "measure.density");
    p.c = get<double>(d, "c", 0.0);
    p.cap = get<double>(d, "cap", std::numeric_limits<double>::infinity());
    p.table = get<std::vector<double>>(d, "table", {});
    mu.density.push_back(std::move(p));
  }
  for (const auto& c : j.value("cantor", json::array())) {
    allow(c, {"s0", "s1", "mass", "depth"}, "measure.cantor");
    CantorPart p;
    p.s0 = need<double>(c, "s0", "measure.cantor");
    p.s1 = need<double>(c, "s1", "measure.cantor");
    p.mass = need<double>(c, "mass", "measure.cantor");
    p.depth = get<int>(c, "depth", 6);
    mu.cantor.push_back(p);
  }
  return mu;
}

InteriorMeasure parse_interior_measure(const json& j) {
  InteriorMeasure mu;
  if (j.is_null()) return mu;
  allow(j, {"atoms", "constant_density"}, "source");
  for (const auto& a : j.value("atoms", json::array())) {
    allow(a, {"x", "y", "mass"}, "source.atoms");
    mu.atoms.push_back({{need<double>(a, "x", "source.atoms"), need<double>(a, "y", "source.atoms")},
                        need<double>(a, "mass", "source.atoms")});
  }
  if (j.contains("constant_density")) {
    const double c = need<double>(j, "constant_density", "source");
    mu.density = [c](Point) { return c; };
  }
  return mu;
}

Nonlinearity parse_nonlinearity(const json& j) {
  if (j.is_null()) return Nonlinearity::exponential();
  allow(j, {"kind", "q"}, "nonlinearity");
  return nonlinearity_from_string(get<std::string>(j, "kind", "exp"), get<double>(j, "q", 2.0));
}

SolveOptions parse_solve_options(const json& j) {
  SolveOptions o;
  if (j.is_null()) return o;
  allow(j, {"tolerance", "max_newton", "max_halvings", "barrier_start"}, "solver");
  o.tolerance = get<double>(j, "tolerance", o.tolerance);
  o.max_newton = get<int>(j, "max_newton", o.max_newton);
  o.max_halvings = get<int>(j, "max_halvings", o.max_halvings);
  o.barrier_start = get<bool>(j, "barrier_start", o.barrier_start);
  return o;
}

CapacityOptions parse_capacity_options(const json& j) {
  CapacityOptions o;
  if (j.is_null()) return o;
  allow(j, {"margin", "max_iterations", "relative_change", "stagnation_window", "collar"}, "capacity_options");
  o.margin = get<int>(j, "margin", o.margin);
  o.max_iterations = get<int>(j, "max_iterations", o.max_iterations);
  o.relative_change = get<double>(j, "relative_change", o.relative_change);
  o.stagnation_window = get<int>(j, "stagnation_window", o.stagnation_window);
  o.collar = get<double>(j, "collar", o.collar);
  return o;
}

// ---------------------------------------------------------------------------
// Output helpers

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class Csv {
 public:
  explicit Csv(std::initializer_list<std::string> header) {
    bool first = true;
    for (const auto& h : header) {
      os_ << (first ? "" : ",") << h;
      first = false;
    }
    os_ << '\n';
  }
  Csv& cell(const std::string& s) {
    os_ << (fresh_ ? "" : ",") << s;
    fresh_ = false;
    return *this;
  }
  Csv& cell(double v) { return cell(num(v)); }
  Csv& cell(int v) { return cell(std::to_string(v)); }
  Csv& cell(std::size_t v) { return cell(std::to_string(v)); }
  Csv& cell(bool v) { return cell(std::string(v ? "1" : "0")); }
  void end() {
    os_ << '\n';
    fresh_ = true;
  }
  std::string str() const { return os_.str(); }

 private:
  std::ostringstream os_;
  bool fresh_ = true;
};

struct Output {
  json result = json::object();
  std::vector<CsvTable> tables;
  std::string verdict;
  RunStatus status = RunStatus::success;
};

json capacity_json(const CapacityReport& r) {
  json j;
  j["K_size"] = r.K.size();
  j["constrained_size"] = r.constrained.size();
  j["primal"] = r.primal_value;
  j["dual"] = r.dual_value;
  j["gap_rel"] = r.gap_rel;
  j["holder_slack"] = r.holder_slack;
  j["primal_iterations"] = r.primal_iterations;
  j["dual_iterations"] = r.dual_iterations;
  j["stagnated"] = r.stagnated;
  j["message"] = r.message;
  return j;
}

json admissibility_json(const AdmissibilityReport& r) {
  json j;
  j["verdict"] = to_string(r.verdict);
  j["tau"] = r.tau;
  j["growth_threshold"] = r.growth_threshold;
  json lv = json::array();
  for (const auto& l : r.levels)
    lv.push_back({{"n", l.n}, {"integral", l.integral}, {"max_potential", l.max_potential}, {"saturated", l.saturated}});
  j["levels"] = lv;
  j["ratios"] = r.ratios;
  return j;
}

json barrier_json(const BarrierFit& b) {
  return {{"C", b.C}, {"D", b.D}, {"max_violation", b.max_violation}, {"envelope_D", b.envelope_D}, {"samples", b.samples}};
}

void add_trace_table(Output& out, const std::string& name, const std::vector<double>& primal,
                     const std::vector<double>& dual) {
  Csv t({"iteration", "primal", "dual"});
  const std::size_t m = std::max(primal.size(), dual.size());
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 0; i < m; ++i)
    t.cell(i).cell(i < primal.size() ? primal[i] : nan).cell(i < dual.size() ? dual[i] : nan).end();
  out.tables.push_back({name, t.str()});
}

// ---------------------------------------------------------------------------
// Commands

Output run_solve(const json& cfg) {
  allow(cfg, {"grid", "measure", "source", "nonlinearity", "solver", "truncation", "weak_residual"}, "solve");
  auto grid = parse_grid(cfg);
  const auto mu = parse_boundary_measure(cfg.value("measure", json()));
  const auto src = discretize_interior(parse_interior_measure(cfg.value("source", json())), *grid);
  const auto g = parse_nonlinearity(cfg.value("nonlinearity", json()));
  const auto sopt = parse_solve_options(cfg.value("solver", json()));

  SolveReport r;
  std::vector<Point> probes;
  if (cfg.contains("truncation")) {
    const json& t = cfg.at("truncation");
    allow(t, {"k_schedule", "probes"}, "truncation");
    require(!cfg.contains("source"), ErrorCode::config, "truncation: interior sources are not supported");
    TruncationOptions topt;
    topt.k_schedule = get<std::vector<double>>(t, "k_schedule", topt.k_schedule);
    for (const auto& p : t.value("probes", json::array())) probes.push_back(point_of(p, "truncation.probes"));
    topt.probes = probes;
    r = truncation_scheme(grid, mu, topt, g, sopt);
  } else {
    r = solve_dirichlet(grid, mu, g, src, sopt);
  }

  const std::string battery = get<std::string>(cfg, "weak_residual", grid->kind() == DomainKind::unit_square ? "full" : "none");
  require(battery == "full" || battery == "zeta0_only" || battery == "none", ErrorCode::config,
          "weak_residual: expected full, zeta0_only or none");
  if (battery != "none") {
    const auto masses = discretize_boundary(mu, *grid);
    r.weak_residual =
        weak_residual(r.u, masses, g, test_battery(grid, battery == "full" ? Battery::full : Battery::zeta0_only), src);
  }

  Output out;
  auto& j = out.result;
  j["domain"] = to_string(grid->kind());
  j["n"] = grid->n();
  j["nonlinearity"] = g.name();
  j["converged"] = r.converged;
  j["roundoff_floor"] = r.roundoff_floor;
  j["saturated"] = r.saturated;
  j["newton_iters"] = r.newton_iters;
  j["residual_inf"] = r.residual_inf;
  j["weak_residual"] = r.weak_residual;
  j["energy"] = {{"lhs", r.energy_lhs}, {"rhs", r.energy_rhs}, {"mass_balance", r.mass_balance}};
  double umax = -std::numeric_limits<double>::infinity(), umin = -umax;
  for (double v : r.u.values) {
    umax = std::max(umax, v);
    umin = std::min(umin, v);
  }
  j["u_max"] = r.u.values.empty() ? 0.0 : umax;
  j["u_min"] = r.u.values.empty() ? 0.0 : umin;
  j["integral_u"] = integrate(r.u);
  j["measure_total_variation"] = mu.total_variation();
  j["message"] = r.message;

  out.tables.push_back({"field", field_to_csv(r.u)});
  Csv res({"iteration", "residual_inf"});
  for (std::size_t i = 0; i < r.residual_trace.size(); ++i) res.cell(i).cell(r.residual_trace[i]).end();
  out.tables.push_back({"residual", res.str()});
  if (!r.truncation_trace.empty()) {
    Csv t({"k", "max_u", "integral_u", "mass", "energy_gap", "newton_iters", "reused", "probe", "value"});
    json tj = json::array();
    for (const auto& s : r.truncation_trace) {
      tj.push_back({{"k", s.k}, {"max_u", s.max_u}, {"integral_u", s.integral_u}, {"mass", s.mass},
                    {"energy_gap", s.energy_gap}, {"newton_iters", s.newton_iters}, {"reused", s.reused},
                    {"probe_values", s.probe_values}});
      for (std::size_t p = 0; p < std::max<std::size_t>(1, s.probe_values.size()); ++p) {
        t.cell(s.k).cell(s.max_u).cell(s.integral_u).cell(s.mass).cell(s.energy_gap).cell(s.newton_iters).cell(s.reused);
        if (s.probe_values.empty())
          t.cell(std::string("")).cell(std::string(""));
        else
          t.cell(p).cell(s.probe_values[p]);
        t.end();
      }
    }
    j["truncation"] = tj;
    out.tables.push_back({"truncation", t.str()});
  }
  out.verdict = r.saturated ? "saturated" : "converged";
  return out;
}

struct NodeSet {
  bool interior = false;
  std::vector<int> nodes;
};

NodeSet parse_set(const json& j, const Grid2D& grid) {
  require(j.is_object(), ErrorCode::config, "capacity set: expected an object");
  const std::string type = need<std::string>(j, "type", "capacity set");
  NodeSet s;
  if (type == "boundary_arcs") {
    allow(j, {"type", "arcs"}, "capacity set");
    std::vector<Arc> arcs;
    for (const auto& a : j.value("arcs", json::array())) {
      const Point p = point_of(a, "capacity set arcs");
      arcs.push_back({p.x, p.y});
    }
    s.nodes = boundary_nodes_in(grid, arcs);
  } else if (type == "boundary_nodes" || type == "interior_nodes") {
    allow(j, {"type", "nodes"}, "capacity set");
    s.interior = type == "interior_nodes";
    s.nodes = get<std::vector<int>>(j, "nodes", {});
    const int bound = static_cast<int>(s.interior ? grid.interior_count() : grid.boundary_count());
    for (int v : s.nodes) require(v >= 0 && v < bound, ErrorCode::config, "capacity set: node index out of range");
  } else if (type == "interior_box") {
    allow(j, {"type", "lo", "hi"}, "capacity set");
    s.interior = true;
    s.nodes = interior_nodes_in_box(grid, point_of(need<json>(j, "lo", "capacity set"), "lo"),
                                    point_of(need<json>(j, "hi", "capacity set"), "hi"));
  } else if (type == "interior_point") {
    allow(j, {"type", "at"}, "capacity set");
    s.interior = true;
    auto near = grid.nearest_interior_nodes(point_of(need<json>(j, "at", "capacity set"), "at"));
    require(!near.empty(), ErrorCode::config, "capacity set: point outside the domain");
    s.nodes = {near.front()};
  } else {
    fail(ErrorCode::config, "capacity set: unknown type '" + type + "'");
  }
  return s;
}

Output run_capacity(const json& cfg) {
  allow(cfg, {"grid", "set", "sets", "variant", "options", "dual"}, "capacity");
  auto grid = parse_grid(cfg);
  const auto opt = parse_capacity_options(cfg.value("options", json()));
  const auto variant = interior_variant_from_string(get<std::string>(cfg, "variant", "luxemburg"));
  const bool want_dual = get<bool>(cfg, "dual", true);

  std::vector<NodeSet> sets;
  require(cfg.contains("set") != cfg.contains("sets"), ErrorCode::config, "capacity: give exactly one of 'set' or 'sets'");
  if (cfg.contains("set")) {
    sets.push_back(parse_set(cfg.at("set"), *grid));
  } else {
    for (const auto& s : cfg.at("sets")) sets.push_back(parse_set(s, *grid));
    require(!sets.empty(), ErrorCode::config, "capacity: empty family");
  }
  const bool interior = sets.front().interior;
  for (const auto& s : sets) require(s.interior == interior, ErrorCode::config, "capacity: mixed boundary and interior sets");

  std::vector<CapacityReport> reports;
  if (sets.size() == 1) {
    const auto& K = sets.front().nodes;
    if (interior)
      reports.push_back(want_dual ? interior_capacity(grid, K, variant, opt) : interior_capacity_primal(grid, K, variant, opt));
    else
      reports.push_back(want_dual ? boundary_capacity(grid, K, opt) : boundary_capacity_primal(grid, K, opt));
  } else {
    std::vector<std::vector<int>> family;
    for (const auto& s : sets) family.push_back(s.nodes);
    reports = interior ? nested_interior_capacities(grid, family, variant, opt) : nested_boundary_capacities(grid, family, opt);
  }

  Output out;
  out.result["domain"] = to_string(grid->kind());
  out.result["n"] = grid->n();
  out.result["target"] = interior ? "interior" : "boundary";
  if (interior) out.result["variant"] = to_string(variant);
  json arr = json::array();
  bool weak = true;
  Csv eta({"set", "node", "x", "y", "eta"});
  Csv summary({"set", "K_size", "primal", "dual", "gap_rel", "holder_slack"});
  for (std::size_t s = 0; s < reports.size(); ++s) {
    const auto& r = reports[s];
    arr.push_back(capacity_json(r));
    if (!std::isnan(r.dual_value) && r.dual_value > r.primal_value * (1 + 1e-9)) weak = false;
    summary.cell(s).cell(r.K.size()).cell(r.primal_value).cell(r.dual_value).cell(r.gap_rel).cell(r.holder_slack).end();
    for (std::size_t i = 0; i < r.eta.size(); ++i) {
      const Point p = interior ? grid->interior_points()[i] : grid->boundary_nodes()[i].position;
      eta.cell(s).cell(i).cell(p.x).cell(p.y).cell(r.eta[i]).end();
    }
    add_trace_table(out, "trace_" + std::to_string(s), r.primal_trace, r.dual_trace);
  }
  out.result["sets"] = arr;
  out.result["weak_duality"] = weak;
  out.tables.insert(out.tables.begin(), {"eta", eta.str()});
  out.tables.insert(out.tables.begin(), {"summary", summary.str()});
  out.verdict = weak ? "weak_duality_holds" : "weak_duality_violated";
  return out;
}

ScalarField parse_field(const json& j, const GridPtr& grid) {
  require(j.is_object(), ErrorCode::config, "field: expected an object");
  const std::string kind = need<std::string>(j, "kind", "field");
  if (kind == "constant") {
    allow(j, {"kind", "value"}, "field");
    const double c = need<double>(j, "value", "field");
    return ScalarField::from_function(grid, [c](Point) { return c; });
  }
  if (kind == "values") {
    allow(j, {"kind", "values"}, "field");
    auto f = ScalarField::zeros(grid);
    f.values = need<std::vector<double>>(j, "values", "field");
    require(f.values.size() == grid->interior_count(), ErrorCode::config, "field: one value per interior node expected");
    return f;
  }
  if (kind == "sine") {
    allow(j, {"kind", "a", "b", "amplitude"}, "field");
    require(grid->kind() == DomainKind::unit_square, ErrorCode::config, "field: sine modes need the unit square");
    const double a = get<double>(j, "a", 1.0), b = get<double>(j, "b", 1.0), A = get<double>(j, "amplitude", 1.0);
    return ScalarField::from_function(grid, [=](Point p) { return A * std::sin(a * kPi * p.x) * std::sin(b * kPi * p.y); });
  }
  if (kind == "poisson") {
    allow(j, {"kind", "measure"}, "field");
    return poisson_potential(grid, parse_boundary_measure(need<json>(j, "measure", "field"))).field;
  }
  if (kind == "green") {
    allow(j, {"kind", "source"}, "field");
    return green_potential(grid, parse_interior_measure(need<json>(j, "source", "field"))).field;
  }
  fail(ErrorCode::config, "field: unknown kind '" + kind + "'");
}

Output run_orlicz_norm(const json& cfg) {
  allow(cfg, {"grid", "field", "norm", "nfunction", "weight", "tolerance"}, "orlicz-norm");
  auto grid = parse_grid(cfg);
  const auto field = parse_field(need<json>(cfg, "field", "orlicz-norm"), grid);
  const std::string norm = get<std::string>(cfg, "norm", "luxemburg");
  const NKind kind = nkind_from_string(get<std::string>(cfg, "nfunction", "P"));
  const Weight weight = weight_from_string(get<std::string>(cfg, "weight", "rho"));
  const auto w = quadrature_weights(*grid, weight);

  Output out;
  auto& j = out.result;
  j["domain"] = to_string(grid->kind());
  j["n"] = grid->n();
  j["norm"] = norm;
  j["weight"] = to_string(weight);
  double value = 0.0, level = std::numeric_limits<double>::quiet_NaN();
  if (norm == "luxemburg") {
    j["nfunction"] = to_string(kind);
    value = luxemburg_norm(field.values, w, kind, get<double>(cfg, "tolerance", 1e-10));
    level = value;
  } else if (norm == "orlicz") {
    j["nfunction"] = to_string(kind);
    const auto r = orlicz_norm(field.values, w, kind);
    value = r.value;
    level = r.level;
  } else if (norm == "llogl") {
    value = llogl_norm(field, weight);
  } else {
    fail(ErrorCode::config, "orlicz-norm: norm must be luxemburg, orlicz or llogl");
  }
  j["value"] = value;
  j["level"] = level;
  j["max_abs"] = field.max_abs();
  Csv t({"norm", "value", "level"});
  t.cell(norm).cell(value).cell(level).end();
  out.tables.push_back({"summary", t.str()});
  out.verdict = "computed";
  return out;
}

Output run_admissibility(const json& cfg) {
  allow(cfg, {"domain", "levels", "measure", "tau", "growth_threshold"}, "admissibility");
  const auto domain = domain_kind_from_string(get<std::string>(cfg, "domain", "unit_square"));
  const auto levels = get<std::vector<int>>(cfg, "levels", {32, 64, 128});
  const auto mu = parse_boundary_measure(need<json>(cfg, "measure", "admissibility"));
  const auto r = admissibility_test(domain, levels, mu, get<double>(cfg, "tau", 0.1), get<double>(cfg, "growth_threshold", 1.5));
  Output out;
  out.result = admissibility_json(r);
  out.result["domain"] = to_string(domain);
  Csv t({"n", "integral", "max_potential", "saturated", "ratio_to_previous"});
  for (std::size_t k = 0; k < r.levels.size(); ++k)
    t.cell(r.levels[k].n)
        .cell(r.levels[k].integral)
        .cell(r.levels[k].max_potential)
        .cell(r.levels[k].saturated)
        .cell(k == 0 ? std::numeric_limits<double>::quiet_NaN() : r.ratios[k - 1])
        .end();
  out.tables.push_back({"levels", t.str()});
  out.verdict = to_string(r.verdict);
  if (r.verdict == Verdict::inconclusive) out.status = RunStatus::inconclusive;
  return out;
}

// --- experiments -----------------------------------------------------------

std::vector<double> angles(const json& cfg, const char* key, const char* key_pi, std::vector<double> fallback) {
  require(!(cfg.contains(key) && cfg.contains(key_pi)), ErrorCode::config,
          std::string("give only one of '") + key + "' and '" + key_pi + "'");
  if (cfg.contains(key_pi)) {
    auto v = get<std::vector<double>>(cfg, key_pi, {});
    for (double& x : v) x *= kPi;
    return v;
  }
  return get<std::vector<double>>(cfg, key, fallback);
}

json dirac_json(const DiracClassification& e) {
  json lv = json::array();
  for (const auto& l : e.levels)
    lv.push_back({{"level", l.level}, {"n", l.n}, {"centre_value", l.centre_value}, {"integral", l.integral},
                  {"newton_iters", l.newton_iters}, {"saturated", l.saturated}});
  return {{"a", e.a}, {"a_over_pi", e.a / kPi}, {"verdict", e.verdict}, {"felt_mass", e.felt_mass},
          {"deficits", e.deficits}, {"integral_ratios", e.integral_ratios}, {"levels", lv}};
}

Output run_dirac(const json& cfg) {
  allow(cfg, {"kind", "levels", "a_grid", "a_grid_pi", "deficit_threshold", "target_width", "target_width_pi",
              "max_bisections"},
        "dirac_threshold");
  DiracOptions o;
  o.levels = get<std::vector<int>>(cfg, "levels", o.levels);
  o.a_grid = angles(cfg, "a_grid", "a_grid_pi", o.a_grid);
  o.deficit_threshold = get<double>(cfg, "deficit_threshold", o.deficit_threshold);
  require(!(cfg.contains("target_width") && cfg.contains("target_width_pi")), ErrorCode::config,
          "give only one of 'target_width' and 'target_width_pi'");
  if (cfg.contains("target_width")) o.target_width = get<double>(cfg, "target_width", o.target_width);
  if (cfg.contains("target_width_pi")) o.target_width = get<double>(cfg, "target_width_pi", 0.0) * kPi;
  o.max_bisections = get<int>(cfg, "max_bisections", o.max_bisections);
  const auto r = dirac_threshold(o);

  Output out;
  auto& j = out.result;
  j["lower"] = r.lower;
  j["upper"] = r.upper;
  j["lower_over_pi"] = r.lower / kPi;
  j["upper_over_pi"] = r.upper / kPi;
  j["width"] = r.upper - r.lower;
  j["converged"] = r.converged;
  j["message"] = r.message;
  json ev = json::array();
  Csv t({"a", "verdict", "level", "n", "centre_value", "integral", "felt_mass_to_next", "deficit_to_next"});
  for (const auto& e : r.evaluations) {
    ev.push_back(dirac_json(e));
    for (std::size_t k = 0; k < e.levels.size(); ++k) {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      t.cell(e.a).cell(e.verdict).cell(e.levels[k].level).cell(e.levels[k].n).cell(e.levels[k].centre_value);
      t.cell(e.levels[k].integral).cell(k < e.felt_mass.size() ? e.felt_mass[k] : nan);
      t.cell(k < e.deficits.size() ? e.deficits[k] : nan).end();
    }
  }
  j["evaluations"] = ev;
  out.tables.push_back({"evaluations", t.str()});
  const bool ok = r.converged && r.message.empty();
  out.verdict = ok ? "bracketed" : "inconclusive";
  if (!ok) out.status = RunStatus::inconclusive;
  return out;
}

json runs_json(const std::vector<BRun>& runs) {
  json a = json::array();
  for (const auto& r : runs)
    a.push_back({{"B", r.B}, {"probe", r.probe}, {"centre", r.centre}, {"newton_iters", r.newton_iters},
                 {"converged", r.converged}});
  return a;
}

Output run_removability_interior(const json& cfg) {
  allow(cfg, {"kind", "n", "K", "B_grid", "probe_distance", "saturation_tolerance", "growth_minimum", "capacity_levels"},
        "removability_interior");
  RemovabilityInteriorOptions o;
  o.n = get<int>(cfg, "n", o.n);
  if (cfg.contains("K")) {
    const json& k = cfg.at("K");
    allow(k, {"shape", "centre", "side"}, "K");
    const std::string shape = get<std::string>(k, "shape", "point");
    if (shape == "empty")
      o.K.shape = InteriorSet::Shape::empty;
    else if (shape == "point")
      o.K.shape = InteriorSet::Shape::point;
    else if (shape == "box")
      o.K.shape = InteriorSet::Shape::box;
    else
      fail(ErrorCode::config, "K: shape must be empty, point or box");
    if (k.contains("centre")) o.K.centre = point_of(k.at("centre"), "K.centre");
    o.K.side = get<double>(k, "side", o.K.side);
  }
  o.B_grid = get<std::vector<double>>(cfg, "B_grid", o.B_grid);
  o.probe_distance = get<double>(cfg, "probe_distance", o.probe_distance);
  o.saturation_tolerance = get<double>(cfg, "saturation_tolerance", o.saturation_tolerance);
  o.growth_minimum = get<double>(cfg, "growth_minimum", o.growth_minimum);
  o.capacity_levels = get<std::vector<int>>(cfg, "capacity_levels", o.capacity_levels);
  const auto r = removability_interior(o);

  Output out;
  auto& j = out.result;
  j["runs"] = runs_json(r.runs);
  j["increments"] = r.increments;
  j["capacity_levels"] = r.capacity_levels;
  j["capacities"] = r.capacities;
  j["log_quantity"] = r.log_quantity;
  j["barrier"] = barrier_json(r.barrier);
  j["saturates"] = r.saturates;
  j["grows"] = r.grows;
  j["capacity_decreasing"] = r.capacity_decreasing;
  Csv t({"B", "probe", "centre", "newton_iters", "increment_from_previous"});
  for (std::size_t k = 0; k < r.runs.size(); ++k)
    t.cell(r.runs[k].B).cell(r.runs[k].probe).cell(r.runs[k].centre).cell(r.runs[k].newton_iters)
        .cell(k == 0 ? std::numeric_limits<double>::quiet_NaN() : r.increments[k - 1]).end();
  out.tables.push_back({"runs", t.str()});
  Csv c({"n", "capacity"});
  for (std::size_t k = 0; k < r.capacities.size(); ++k) c.cell(r.capacity_levels[k]).cell(r.capacities[k]).end();
  out.tables.push_back({"capacity", c.str()});
  out.verdict = r.verdict;
  if (r.verdict == "inconclusive") out.status = RunStatus::inconclusive;
  return out;
}

Output run_removability_boundary(const json& cfg) {
  allow(cfg, {"kind", "n", "arc_centre", "fixed_arc", "B_grid", "arc_lengths", "arc_B", "ratio_maximum", "atom_masses",
              "atom_levels"},
        "removability_boundary");
  RemovabilityBoundaryOptions o;
  o.n = get<int>(cfg, "n", o.n);
  o.arc_centre = get<double>(cfg, "arc_centre", o.arc_centre);
  o.fixed_arc = get<double>(cfg, "fixed_arc", o.fixed_arc);
  o.B_grid = get<std::vector<double>>(cfg, "B_grid", o.B_grid);
  o.arc_lengths = get<std::vector<double>>(cfg, "arc_lengths", o.arc_lengths);
  o.arc_B = get<double>(cfg, "arc_B", o.arc_B);
  o.ratio_maximum = get<double>(cfg, "ratio_maximum", o.ratio_maximum);
  o.atom_masses = get<std::vector<double>>(cfg, "atom_masses", o.atom_masses);
  o.atom_levels = get<std::vector<int>>(cfg, "atom_levels", o.atom_levels);
  const auto r = removability_boundary(o);

  Output out;
  auto& j = out.result;
  j["B_runs"] = runs_json(r.B_runs);
  j["ratios"] = r.ratios;
  j["sublinear"] = r.sublinear;
  j["barrier"] = barrier_json(r.barrier);
  json arcs = json::array();
  Csv a({"length", "nodes", "capacity", "probe"});
  for (const auto& x : r.arc_runs) {
    arcs.push_back({{"length", x.length}, {"nodes", x.nodes}, {"capacity", x.capacity}, {"probe", x.probe}});
    a.cell(x.length).cell(x.nodes).cell(x.capacity).cell(x.probe).end();
  }
  j["arcs"] = arcs;
  j["jointly_decreasing"] = r.jointly_decreasing;
  json atoms = json::array();
  Csv at({"mass", "verdict"});
  for (const auto& x : r.atoms) {
    json e = admissibility_json(x.report);
    e["mass"] = x.mass;
    atoms.push_back(e);
    at.cell(x.mass).cell(to_string(x.report.verdict)).end();
  }
  j["atoms"] = atoms;
  j["atoms_not_admissible"] = r.atoms_not_admissible;
  Csv b({"B", "centre"});
  for (const auto& x : r.B_runs) b.cell(x.B).cell(x.centre).end();
  out.tables.push_back({"B_runs", b.str()});
  out.tables.push_back({"arcs", a.str()});
  out.tables.push_back({"atoms", at.str()});
  const bool ok = r.sublinear && r.jointly_decreasing && r.atoms_not_admissible;
  out.verdict = ok ? "removable_consistent" : "inconclusive";
  if (!ok) out.status = RunStatus::inconclusive;
  return out;
}

Output run_admissibility_sweep(const json& cfg) {
  allow(cfg, {"kind", "domain", "family", "scales", "levels", "norm_level"}, "admissibility_sweep");
  AdmissibilitySweepOptions o;
  o.domain = domain_kind_from_string(get<std::string>(cfg, "domain", "unit_square"));
  if (cfg.contains("family")) {
    o.family.clear();
    for (const auto& m : cfg.at("family")) {
      allow(m, {"name", "measure"}, "family");
      o.family.push_back({need<std::string>(m, "name", "family"), parse_boundary_measure(need<json>(m, "measure", "family"))});
    }
  }
  o.scales = get<std::vector<double>>(cfg, "scales", o.scales);
  o.levels = get<std::vector<int>>(cfg, "levels", o.levels);
  o.norm_level = get<int>(cfg, "norm_level", o.norm_level);
  const auto r = admissibility_sweep(o);

  Output out;
  json rows = json::array();
  Csv t({"measure", "scale", "verdict", "bexp_norm", "a0_lower", "a0_upper"});
  for (const auto& row : r.rows) {
    json reps = json::array();
    for (std::size_t k = 0; k < row.reports.size(); ++k) {
      json e = admissibility_json(row.reports[k]);
      e["scale"] = row.scales[k];
      reps.push_back(e);
      t.cell(row.name).cell(row.scales[k]).cell(to_string(row.reports[k].verdict)).cell(row.bexp_norm);
      t.cell(row.a0_lower).cell(row.a0_upper).end();
    }
    rows.push_back({{"name", row.name}, {"bexp_norm", row.bexp_norm}, {"a0_lower", row.a0_lower},
                    {"a0_upper", row.a0_upper}, {"reports", reps}});
  }
  out.result["rows"] = rows;
  out.tables.push_back({"table", t.str()});
  out.verdict = "complete";
  return out;
}

void fill_shrink(Output& out, const CapacityShrinkReport& r) {
  json rows = json::array();
  Csv t({"length", "K_size", "primal", "dual", "gap_rel", "holder_slack"});
  for (const auto& row : r.rows) {
    json e = capacity_json(row.report);
    e["length"] = row.length;
    rows.push_back(e);
    t.cell(row.length).cell(row.report.K.size()).cell(row.report.primal_value).cell(row.report.dual_value);
    t.cell(row.report.gap_rel).cell(row.report.holder_slack).end();
  }
  out.result["rows"] = rows;
  out.result["primal_strictly_decreasing"] = r.primal_strictly_decreasing;
  out.result["weak_duality"] = r.weak_duality;
  out.result["monotone"] = r.monotone;
  out.tables.push_back({"arcs", t.str()});
}

Output run_capacity_shrink(const json& cfg) {
  allow(cfg, {"kind", "n", "arc_centre", "arc_lengths", "options"}, "capacity_shrink");
  CapacityShrinkOptions o;
  o.n = get<int>(cfg, "n", o.n);
  o.arc_centre = get<double>(cfg, "arc_centre", o.arc_centre);
  o.arc_lengths = get<std::vector<double>>(cfg, "arc_lengths", o.arc_lengths);
  o.capacity = parse_capacity_options(cfg.value("options", json()));
  const auto r = capacity_shrink(o);
  Output out;
  out.result["n"] = o.n;
  fill_shrink(out, r);
  out.verdict = r.weak_duality && r.monotone && r.primal_strictly_decreasing ? "consistent" : "violated";
  return out;
}

Output run_duality_gap(const json& cfg) {
  allow(cfg, {"kind", "levels", "arc_centre", "arc_lengths", "options"}, "duality_gap");
  DualityGapOptions o;
  o.levels = get<std::vector<int>>(cfg, "levels", o.levels);
  o.arc_centre = get<double>(cfg, "arc_centre", o.arc_centre);
  o.arc_lengths = get<std::vector<double>>(cfg, "arc_lengths", o.arc_lengths);
  o.capacity = parse_capacity_options(cfg.value("options", json()));
  const auto r = duality_gap(o);
  Output out;
  json rows = json::array();
  Csv t({"length", "n", "primal", "dual", "gap_rel"});
  for (const auto& row : r.rows) {
    rows.push_back({{"length", row.length}, {"levels", row.levels}, {"primal", row.primal}, {"dual", row.dual},
                    {"gap_rel", row.gap}, {"non_increasing", row.non_increasing}});
    for (std::size_t k = 0; k < row.levels.size(); ++k)
      t.cell(row.length).cell(row.levels[k]).cell(row.primal[k]).cell(row.dual[k]).cell(row.gap[k]).end();
  }
  out.result["rows"] = rows;
  out.result["weak_duality"] = r.weak_duality;
  out.result["all_non_increasing"] = r.all_non_increasing;
  out.tables.push_back({"gaps", t.str()});
  out.verdict = r.weak_duality && r.all_non_increasing ? "consistent" : "violated";
  return out;
}

Output run_experiment(const std::string& kind, const json& cfg) {
  if (kind == "dirac_threshold") return run_dirac(cfg);
  if (kind == "removability_interior") return run_removability_interior(cfg);
  if (kind == "removability_boundary") return run_removability_boundary(cfg);
  if (kind == "admissibility_sweep") return run_admissibility_sweep(cfg);
  if (kind == "capacity_shrink") return run_capacity_shrink(cfg);
  if (kind == "duality_gap") return run_duality_gap(cfg);
  fail(ErrorCode::config, "experiment: unknown kind '" + kind + "'");
}

}  // namespace

RunResult run_command(const std::string& command, const std::string& config_json) {
  const auto t0 = std::chrono::steady_clock::now();
  json cfg;
  try {
    cfg = config_json.empty() ? json::object() : json::parse(config_json);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::config, std::string("config is not valid JSON: ") + e.what());
  }
  require(cfg.is_object(), ErrorCode::config, "config must be a JSON object");

  Output out;
  std::string kind;
  try {
    if (command == "solve")
      out = run_solve(cfg);
    else if (command == "capacity")
      out = run_capacity(cfg);
    else if (command == "orlicz-norm")
      out = run_orlicz_norm(cfg);
    else if (command == "admissibility")
      out = run_admissibility(cfg);
    else if (command == "experiment") {
      kind = need<std::string>(cfg, "kind", "experiment");
      out = run_experiment(kind, cfg);
    } else
      fail(ErrorCode::config, "unknown command '" + command + "'");
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::config, std::string("config: ") + e.what());
  }

  json report;
  report["command"] = command;
  if (!kind.empty()) report["kind"] = kind;
  report["config"] = cfg;
  report["verdict"] = out.verdict;
  report["result"] = std::move(out.result);
  report["tables"] = json::array();
  for (const auto& t : out.tables) report["tables"].push_back(t.name);
  report["timing"] = {{"seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()}};

  RunResult r;
  r.json = report.dump(2);
  r.tables = std::move(out.tables);
  r.verdict = out.verdict;
  r.status = out.status;
  return r;
}

RunResult run_experiment_kind(const std::string& kind, const std::string& config_json) {
  json cfg;
  try {
    cfg = config_json.empty() ? json::object() : json::parse(config_json);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::config, std::string("config is not valid JSON: ") + e.what());
  }
  require(cfg.is_object(), ErrorCode::config, "config must be a JSON object");
  if (cfg.contains("kind"))
    require(cfg["kind"] == kind, ErrorCode::config, "config kind disagrees with the requested experiment");
  else
    cfg["kind"] = kind;
  return run_command("experiment", cfg.dump());
}

std::string strip_timing(const std::string& report_json) {
  auto j = json::parse(report_json);
  j.erase("timing");
  return j.dump(2);
}

}  // namespace semilab
