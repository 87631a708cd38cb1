#include "bsweyl/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <thread>

#include "bsweyl/quadratic_form.hpp"

#ifndef BSWEYL_VERSION
#define BSWEYL_VERSION "unknown"
#endif

namespace bsweyl {

using io::json;

namespace {

std::string join_errors(const std::vector<std::string>& e) {
  std::string s = "invalid config";
  for (const auto& x : e) s += "\n  " + x;
  return s;
}

enum class Kind {
  kString,
  kSymbol,
  kSymbolOrNull,
  kDeformationOrNull,
  kNumber,
  kPositive,
  kNonNegative,
  kUnitInterval,
  kPosInt,
  kNonNegInt,
  kBool,
  kBounds,
  kGrid,
  kPair,
  kTheta,
  kOrder12,
  kBasis,
};

const std::map<std::string, Kind>& schema() {
  static const std::map<std::string, Kind> s{
      {"experiment", Kind::kString},      {"symbol", Kind::kSymbol},
      {"G", Kind::kSymbolOrNull},         {"deformation", Kind::kDeformationOrNull},
      {"t", Kind::kNumber},               {"t_max", Kind::kPositive},
      {"window", Kind::kBounds},          {"grid", Kind::kGrid},
      {"h", Kind::kUnitInterval},         {"basis", Kind::kBasis},
      {"N", Kind::kPosInt},               {"delta", Kind::kNonNegative},
      {"seeds", Kind::kPosInt},           {"seed", Kind::kNonNegInt},
      {"samples", Kind::kPosInt},         {"qmc", Kind::kBool},
      {"box_radius", Kind::kPositive},    {"base_box_radius", Kind::kPositive},
      {"order", Kind::kPosInt},           {"f_center", Kind::kPair},
      {"f_radius", Kind::kPositive},      {"variation_order", Kind::kOrder12},
      {"theta", Kind::kTheta},            {"tolerance", Kind::kPositive},
      {"second_tolerance", Kind::kPositive}, {"budget", Kind::kPosInt},
      {"sample_budget", Kind::kPosInt},   {"ball_radius", Kind::kPositive},
      {"safe_factor", Kind::kPositive},   {"threads", Kind::kNonNegInt},
      {"shards", Kind::kPosInt},          {"output_dir", Kind::kString},
  };
  return s;
}

std::string default_output_dir() {
  const char* env = std::getenv("BSWEYL_OUTPUT_DIR");
  return env && *env ? env : "bsweyl-out";
}

bool is_pair_of_numbers(const json& v) {
  return v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number();
}

void check_field(const std::string& key, Kind kind, const json& v, std::vector<std::string>& errors) {
  auto bad = [&](const std::string& msg) { errors.push_back(key + ": " + msg); };
  switch (kind) {
    case Kind::kString:
      if (!v.is_string()) bad("expected a string");
      return;
    case Kind::kBasis:
      if (!v.is_string() || (v != "hermite" && v != "torus")) bad("expected \"hermite\" or \"torus\"");
      return;
    case Kind::kSymbolOrNull:
      if (v.is_null()) return;
      [[fallthrough]];
    case Kind::kSymbol:
      try {
        io::symbol_from_value(v, key);
      } catch (const std::exception& e) {
        bad(e.what());
      }
      return;
    case Kind::kDeformationOrNull:
      if (v.is_null()) return;
      try {
        io::deformation_from_json(v);
      } catch (const std::exception& e) {
        bad(e.what());
      }
      return;
    case Kind::kNumber:
      if (!v.is_number()) bad("expected a number");
      return;
    case Kind::kPositive:
      if (!v.is_number() || !(v.get<double>() > 0.0)) bad("expected a positive number");
      return;
    case Kind::kNonNegative:
      if (!v.is_number() || !(v.get<double>() >= 0.0)) bad("expected a nonnegative number");
      return;
    case Kind::kUnitInterval:
      if (!v.is_number() || !(v.get<double>() > 0.0) || v.get<double>() > 1.0) bad("expected a number in (0, 1]");
      return;
    case Kind::kPosInt:
      if (!v.is_number_integer() || v.get<std::int64_t>() < 1) bad("expected a positive integer");
      return;
    case Kind::kNonNegInt:
      if (!v.is_number_integer() || v.get<std::int64_t>() < 0) bad("expected a nonnegative integer");
      return;
    case Kind::kBool:
      if (!v.is_boolean()) bad("expected true or false");
      return;
    case Kind::kOrder12:
      if (!v.is_number_integer() || (v.get<int>() != 1 && v.get<int>() != 2)) bad("expected 1 or 2");
      return;
    case Kind::kPair:
      if (!is_pair_of_numbers(v)) bad("expected [re, im]");
      return;
    case Kind::kGrid:
      if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer() ||
          v[0].get<int>() < 2 || v[1].get<int>() < 2)
        bad("expected [n_re, n_im] with both at least 2");
      return;
    case Kind::kBounds:
      if (!v.is_array() || v.size() != 4 || !std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_number(); }))
        bad("expected [re_lo, re_hi, im_lo, im_hi]");
      else if (!(v[0].get<double>() < v[1].get<double>()) || !(v[2].get<double>() < v[3].get<double>()))
        bad("empty window (need re_lo < re_hi and im_lo < im_hi)");
      return;
    case Kind::kTheta:
      if (!v.is_array() || v.empty() || !std::all_of(v.begin(), v.end(), is_pair_of_numbers))
        bad("expected [[theta0_1, theta0_2], [theta1_1, theta1_2], ...]");
      return;
  }
}

// -------------------------------------------------------------------------
// typed view of a resolved config

struct Cfg {
  const json& j;

  double num(const char* k) const { return j.at(k).get<double>(); }
  int integer(const char* k) const { return j.at(k).get<int>(); }
  std::int64_t big(const char* k) const { return j.at(k).get<std::int64_t>(); }
  std::uint64_t seed() const { return j.at("seed").get<std::uint64_t>(); }
  SymbolExpr symbol() const { return io::symbol_from_value(j.at("symbol"), "symbol"); }
  std::string symbol_name() const { return j.at("symbol").is_string() ? j.at("symbol").get<std::string>() : ""; }

  std::optional<Deformation> deformation() const {
    const double t_max = num("t_max");
    if (!j.at("deformation").is_null()) return io::deformation_from_json(j.at("deformation"), t_max);
    if (!j.at("G").is_null()) return Deformation(io::symbol_from_value(j.at("G"), "G"), 1e-10, t_max);
    return std::nullopt;
  }
  Deformation require_deformation() const {
    auto d = deformation();
    if (!d) throw ConfigError({"G: a generator (G or deformation) is required for this experiment"});
    return *d;
  }

  ComplexWindow window() const {
    const json& w = j.at("window");
    const json& g = j.at("grid");
    return ComplexWindow::from_bounds(w[0], w[1], w[2], w[3], g[0].get<int>(), g[1].get<int>());
  }
  Complex pair(const char* k) const { return {j.at(k)[0].get<double>(), j.at(k)[1].get<double>()}; }

  SamplingOptions sampling() const {
    SamplingOptions o;
    o.samples = big("samples");
    o.seed = seed();
    o.quasi_random = j.at("qmc").get<bool>();
    o.shards = integer("shards");
    o.threads = integer("threads");
    return o;
  }
  QuadratureOptions quadrature(const char* box_key = "box_radius") const {
    QuadratureOptions o;
    o.order = integer("order");
    o.box_radius = num(box_key);
    o.threads = integer("threads");
    return o;
  }
  std::filesystem::path out() const { return j.at("output_dir").get<std::string>(); }
};

struct Context {
  const Cfg& cfg;
  RunResult& r;

  void check(const std::string& name, double value, double bound, bool pass) {
    r.checks.push_back({name, value, bound, pass});
  }
  std::filesystem::path artifact(const std::string& name) {
    r.artifacts.emplace_back(name);
    return cfg.out() / name;
  }
};

SymbolExpr deformed_or_base(const Cfg& cfg) {
  const SymbolExpr p = cfg.symbol();
  const auto d = cfg.deformation();
  if (!d || cfg.num("t") == 0.0) return p;
  return deformed_quadratic(DeformedSymbol(p, *d, cfg.num("t")));
}

// -------------------------------------------------------------------------

void run_audit(Context& c) {
  AuditOptions o;
  o.sample_budget = c.cfg.integer("sample_budget");
  o.ball_radius = c.cfg.num("ball_radius");
  o.seed = c.cfg.seed();
  const AuditReport a = audit(c.cfg.symbol(), o);
  c.r.report["audit"] = io::to_json(a);
  io::write_json(c.artifact("audit.json"), c.r.report["audit"]);
  auto add = [&](const std::string& name, Check k, double value) {
    c.check(name, value, 0.0, k != Check::kFail);
  };
  add("elliptic_at_infinity", a.elliptic_at_infinity, a.min_abs_outside_ball);
  add("independent_differentials", a.independent_differentials, a.min_independence);
  add("small_bracket", a.small_bracket, a.max_abs_bracket);
  add("connected", a.connected, a.zero_set_clusters);
}

DensityGrid density_of(const Cfg& cfg, const SymbolExpr& p, const ComplexWindow& W) {
  if (!p.depends_on_x()) return weyl_density_torus(p, W, cfg.num("box_radius"), cfg.sampling());
  return weyl_density(p, W, cfg.num("box_radius"), cfg.sampling());
}

void run_density(Context& c) {
  const DensityGrid g = density_of(c.cfg, c.cfg.symbol(), c.cfg.window());
  c.r.report["density"] = io::to_json(g);
  io::write_density_csv(c.artifact("density.csv"), g);
  io::write_json(c.artifact("density.json"), c.r.report["density"]);
  c.check("box_margin", g.box_margin_ok, 1.0, g.box_margin_ok);
  c.check("nonempty", !g.empty, 1.0, !g.empty);
}

void run_deform_density(Context& c) {
  const ComplexWindow W = c.cfg.window();
  const SymbolExpr p = c.cfg.symbol();
  const DeformedSymbol pt(p, c.cfg.require_deformation(), c.cfg.num("t"));
  const SamplingOptions so = c.cfg.sampling();
  const DensityGrid g = weyl_density(pt, W, c.cfg.num("box_radius"), so);
  const DensityGrid g0 = weyl_density(p, W, c.cfg.num("box_radius"), so);
  double zmax = 0.0;
  for (int j = 0; j < W.n_im; ++j)
    for (int i = 0; i < W.n_re; ++i) {
      const double se = std::hypot(g.stderrs(i, j), g0.stderrs(i, j));
      if (se > 0.0) zmax = std::max(zmax, std::abs(g.values(i, j) - g0.values(i, j)) / se);
    }
  c.r.report["deformed"] = io::to_json(g);
  c.r.report["base"] = io::to_json(g0);
  c.r.report["max_cell_z_score"] = zmax;
  io::write_density_csv(c.artifact("density_deformed.csv"), g);
  io::write_density_csv(c.artifact("density_base.csv"), g0);
  io::write_json(c.artifact("density.json"), c.r.report);
  c.check("box_margin", g.box_margin_ok && g0.box_margin_ok, 1.0, g.box_margin_ok && g0.box_margin_ok);
}

void run_variation(Context& c) {
  const TestFunction f(c.cfg.pair("f_center"), c.cfg.num("f_radius"));
  const SymbolExpr p = c.cfg.symbol();
  const Deformation d = c.cfg.require_deformation();
  const VariationReport v = c.cfg.integer("variation_order") == 1
                                ? first_variation_check(f, p, d, c.cfg.num("t"), c.cfg.quadrature())
                                : second_variation_check(f, p, d.generator_at(0.0), c.cfg.quadrature());
  c.r.report["variation"] = io::to_json(v);
  io::write_json(c.artifact("variation.json"), c.r.report["variation"]);
  c.check("discrepancy", v.discrepancy, c.cfg.num("tolerance"), v.discrepancy <= c.cfg.num("tolerance"));
}

OperatorMatrix operator_of(const Cfg& cfg) {
  const double h = cfg.num("h");
  if (cfg.j.at("basis") == "torus") return quantize_torus(cfg.symbol(), BasisSpec::torus(cfg.integer("N"), h));
  const SymbolExpr q = deformed_or_base(cfg);
  return quantize_quadratic(q, BasisSpec::hermite(cfg.integer("N"), h, q.dim()));
}

void run_spectrum(Context& c) {
  const double delta = c.cfg.num("delta");
  OperatorMatrix P = operator_of(c.cfg);
  std::optional<std::uint64_t> seed;
  if (delta > 0.0) {
    seed = c.cfg.seed();
    P = perturb(P, delta, *seed);
  }
  const SpectrumResult s = spectrum(P, delta, seed);
  c.r.report["spectrum"] = io::to_json(s);
  io::write_points_csv(c.artifact("eigenvalues.csv"), s.eigenvalues);
  io::write_json(c.artifact("spectrum.json"), c.r.report["spectrum"]);
  c.check("eigenvalue_count", static_cast<double>(s.eigenvalues.size()), static_cast<double>(P.A.rows()),
          static_cast<Eigen::Index>(s.eigenvalues.size()) == P.A.rows());
}

SymbolExpr action_symbol(const Cfg& cfg) {
  if (const auto t = io::torus_normal_form(cfg.symbol_name())) return *t;
  const SymbolExpr p = cfg.symbol();
  if (p.depends_on_x()) throw ConfigError({"symbol: needs an integrable torus form (eta only) or a cho(...) name"});
  return p;
}

void run_bs(Context& c) {
  BSLattice l{action_map_integrable(action_symbol(c.cfg)), {}, c.cfg.num("h"), c.cfg.window()};
  for (const json& th : c.cfg.j.at("theta")) l.theta.emplace_back(th[0].get<double>(), th[1].get<double>());
  const BSPrediction bs = bs_predict(l);
  c.r.report["bs"] = io::to_json(bs);
  io::write_points_csv(c.artifact("bs_points.csv"), bs.points);
  io::write_json(c.artifact("bs.json"), c.r.report["bs"]);
  c.check("unresolved", static_cast<double>(bs.unresolved.size()), 0.0, bs.unresolved.empty());
}

void run_count(Context& c) {
  const ComplexWindow W = c.cfg.window();
  const double delta = c.cfg.num("delta");
  OperatorMatrix P = operator_of(c.cfg);
  std::optional<std::uint64_t> seed;
  if (delta > 0.0) {
    seed = c.cfg.seed();
    P = perturb(P, delta, *seed);
  }
  const SpectrumResult s = spectrum(P, delta, seed);
  double omega = std::nan("");
  if (const auto t = io::torus_normal_form(c.cfg.symbol_name())) omega = integrate_omega(action_map_integrable(*t), W);
  const SymbolExpr q = deformed_or_base(c.cfg);
  const VolumeEstimate vol = preimage_volume(q, W, c.cfg.num("box_radius"), c.cfg.sampling());
  std::optional<SafeRegion> safe;
  if (c.cfg.j.at("basis") == "hermite") safe = hermite_safe_region(q, P.basis, c.cfg.num("safe_factor"));
  const ComparisonReport r = count_and_compare(s, W, omega, vol, safe ? &*safe : nullptr);
  c.r.report["count"] = io::to_json(r);
  c.r.report["spectrum"] = io::to_json(s);
  io::write_points_csv(c.artifact("eigenvalues.csv"), s.eigenvalues);
  io::write_json(c.artifact("count.json"), c.r.report["count"]);
  c.check("window_safe", !r.unsafe, 1.0, !r.unsafe);
}

void run_integrable_equality(Context& c) {
  const ComplexWindow W = c.cfg.window();
  const SymbolExpr pt = c.cfg.symbol();
  const DensityGrid w = weyl_density_torus(pt, W, c.cfg.num("box_radius"), c.cfg.sampling());
  const DensityGrid om = omega_density(action_map_integrable(pt), W);
  const double tol = c.cfg.num("tolerance");
  double worst = 0.0, sup_dev = 0.0;
  std::ofstream f;
  {
    const auto path = c.artifact("grid.csv");
    std::filesystem::create_directories(path.parent_path());
    f.open(path);
  }
  f << "z_re,z_im,w,w_stderr,omega,deviation\n";
  for (int j = 0; j < W.n_im; ++j)
    for (int i = 0; i < W.n_re; ++i) {
      const double o = om.values(i, j), dev = std::abs(w.values(i, j) - o) / o;
      const double allowed = std::max(3.0 * w.stderrs(i, j) / o, tol);
      worst = std::max(worst, dev / allowed);
      sup_dev = std::max(sup_dev, dev);
      const Complex z = W.cell_center(i, j);
      f << io::format_double(z.real()) << ',' << io::format_double(z.imag()) << ','
        << io::format_double(w.values(i, j)) << ',' << io::format_double(w.stderrs(i, j)) << ','
        << io::format_double(o) << ',' << io::format_double(dev) << '\n';
    }
  c.r.report["weyl"] = io::to_json(w);
  c.r.report["omega"] = io::to_json(om);
  c.r.report["sup_cell_deviation"] = sup_dev;
  c.check("sup_cell_deviation_over_allowed", worst, 1.0, worst <= 1.0);
  c.check("box_margin", w.box_margin_ok, 1.0, w.box_margin_ok);
}

void run_deformation_splits(Context& c) {
  const SymbolExpr p = c.cfg.symbol();
  const Deformation d = c.cfg.require_deformation();
  const TestFunction f(c.cfg.pair("f_center"), c.cfg.num("f_radius"));
  const double t = c.cfg.num("t");

  const VariationReport v1 = first_variation_check(f, p, d, t, c.cfg.quadrature());
  const Estimate zero = first_variation_rhs(f, DeformedSymbol(p, d, 0.0), c.cfg.quadrature("base_box_radius"));
  const QuadratureOptions base = c.cfg.quadrature("base_box_radius");
  const SymbolExpr G = d.generator_at(0.0);
  const VariationReport v2 = second_variation_check(f, p, G, base);
  const Certificate cert = nonequality_certificate(p, G, c.cfg.window(), c.cfg.integer("budget"), base);

  c.r.report["first_variation"] = io::to_json(v1);
  c.r.report["integrable_branch_rhs"] = zero.value;
  c.r.report["second_variation"] = io::to_json(v2);
  c.r.report["certificate"] = io::to_json(cert);
  io::write_json(c.artifact("splits.json"), c.r.report);
  const double tol1 = c.cfg.num("tolerance"), tol2 = c.cfg.num("second_tolerance");
  c.check("first_variation_discrepancy", v1.discrepancy, tol1, v1.discrepancy <= tol1);
  c.check("integrable_branch_zero", std::abs(zero.value), 0.0, zero.value == 0.0);
  c.check("second_variation_discrepancy", v2.discrepancy, tol2, v2.discrepancy <= tol2);
  c.check("certificate_value_over_error", cert.error > 0.0 ? std::abs(cert.value) / cert.error : 0.0, 5.0, cert.found);
}

void run_random_weyl_migration(Context& c) {
  const ComplexWindow W = c.cfg.window();
  const double h = c.cfg.num("h"), delta = c.cfg.num("delta");
  const int seeds = c.cfg.integer("seeds");
  const std::uint64_t seed0 = c.cfg.seed();
  const SymbolExpr q = deformed_quadratic(DeformedSymbol(c.cfg.symbol(), c.cfg.require_deformation(), c.cfg.num("t")));
  const BasisSpec basis = BasisSpec::hermite(c.cfg.integer("N"), h, q.dim());
  const OperatorMatrix P = quantize_quadratic(q, basis);
  const SafeRegion safe = hermite_safe_region(q, basis, c.cfg.num("safe_factor"));

  const SpectrumResult s0 = spectrum(P);
  const VolumeEstimate vol = preimage_volume(q, W, c.cfg.num("box_radius"), c.cfg.sampling());
  const double weyl = vol.value / std::pow(kTwoPi * h, q.dim());
  const std::int64_t n0 = count_in(s0.eigenvalues, W);

  // seeds are independent; results land in seed order
  std::vector<SpectrumResult> per(static_cast<std::size_t>(seeds));
  int threads = c.cfg.integer("threads");
  if (threads == 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = std::min(threads, seeds);
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
  std::vector<std::thread> pool;
  for (int w = 0; w < threads; ++w)
    pool.emplace_back([&, w] {
      try {
        for (int k = w; k < seeds; k += threads) {
          const std::uint64_t sd = seed0 + static_cast<std::uint64_t>(k);
          per[static_cast<std::size_t>(k)] = spectrum(perturb(P, delta, sd), delta, sd);
        }
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  io::write_points_csv(c.artifact("eigenvalues_unperturbed.csv"), s0.eigenvalues);
  json rows = json::array();
  int closer = 0;
  for (int k = 0; k < seeds; ++k) {
    const auto& s = per[static_cast<std::size_t>(k)];
    const std::int64_t n = count_in(s.eigenvalues, W);
    const bool better = std::abs(static_cast<double>(n) - weyl) < std::abs(static_cast<double>(n0) - weyl);
    closer += better;
    rows.push_back({{"seed", *s.seed}, {"count", n}, {"closer", better}, {"residual_bound", s.residual_bound}});
    io::write_points_csv(c.artifact("eigenvalues_seed" + std::to_string(*s.seed) + ".csv"), s.eigenvalues);
  }
  const int need = static_cast<int>(std::ceil(0.8 * seeds));
  c.r.report["unperturbed_count"] = n0;
  c.r.report["weyl_prediction"] = weyl;
  c.r.report["weyl_prediction_error"] = vol.stderr_ / std::pow(kTwoPi * h, q.dim());
  c.r.report["seeds"] = rows;
  c.r.report["closer_seeds"] = closer;
  io::write_json(c.artifact("migration.json"), c.r.report);
  const bool window_safe = window_is_safe(W, safe);
  c.check("window_safe", window_safe, 1.0, window_safe);
  c.check("seeds_closer_to_weyl", closer, need, closer >= need);
}

using Runner = void (*)(Context&);

const std::map<std::string, Runner>& runners() {
  static const std::map<std::string, Runner> m{
      {"audit", run_audit},
      {"density", run_density},
      {"deform-density", run_deform_density},
      {"variation", run_variation},
      {"spectrum", run_spectrum},
      {"bs", run_bs},
      {"count", run_count},
      {"integrable-equality", run_integrable_equality},
      {"deformation-splits", run_deformation_splits},
      {"random-weyl-migration", run_random_weyl_migration},
  };
  return m;
}

json experiment_overrides(const std::string& e) {
  if (e == "audit") return {{"symbol", "cho(1,(1+i)/2)"}};
  if (e == "density") return {{"window", {0.0, 1.0, 0.0, 1.0}}, {"grid", {32, 32}}};
  if (e == "deform-density")
    return {{"G", "x1x2"}, {"t", 0.2}, {"window", {0.0, 1.0, -0.1, 0.9}}, {"grid", {12, 12}}, {"box_radius", 2.0}};
  if (e == "variation") return {{"G", "x1x2"}, {"t", 0.2}, {"box_radius", 1.6}, {"tolerance", 0.03}};
  if (e == "spectrum") return json::object();
  if (e == "bs") return {{"window", {0.01, 1.01, 0.01, 0.76}}};
  if (e == "count") return {{"window", {0.01, 1.01, 0.01, 0.76}}, {"N", 60}, {"box_radius", 1.6}};
  if (e == "integrable-equality")
    return {{"symbol", "torus-coupled(0.3)"}, {"window", {-0.4, 0.4, -0.4, 0.4}}, {"grid", {64, 64}},
            {"samples", 10'000'000}, {"box_radius", 0.9}, {"tolerance", 0.03}};
  if (e == "deformation-splits")
    return {{"G", "x1x2"}, {"t", 0.2}, {"box_radius", 1.6}, {"window", {-0.6, 0.6, -0.6, 0.6}}};
  if (e == "random-weyl-migration")
    return {{"G", "x1x2"},         {"t", 0.2},   {"delta", 1e-4},        {"seeds", 5},
            {"samples", 4'000'000}, {"N", 40},    {"box_radius", 1.6},    {"window", {0.2, 0.8, -0.05, 0.15}}};
  throw ConfigError({"experiment: unknown experiment '" + e + "'"});
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> errors)
    : std::invalid_argument(join_errors(errors)), errors_(std::move(errors)) {}

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& [k, _] : runners()) v.push_back(k);
    return v;
  }();
  return names;
}

json default_config(const std::string& experiment) {
  json d{
      {"experiment", experiment},
      {"symbol", "cho(1,0)"},
      {"G", nullptr},
      {"deformation", nullptr},
      {"t", 0.0},
      {"t_max", 1.0},
      {"window", {-0.4, 0.4, -0.4, 0.4}},
      {"grid", {64, 64}},
      {"h", 0.05},
      {"basis", "hermite"},
      {"N", 40},
      {"delta", 0.0},
      {"seeds", 1},
      {"seed", 1},
      {"samples", 1'000'000},
      {"qmc", true},
      {"box_radius", 4.0},
      {"base_box_radius", 1.35},
      {"order", 48},
      {"f_center", {0.5, 0.0}},
      {"f_radius", 0.3},
      {"variation_order", 1},
      {"theta", {{0.5, 0.5}}},
      {"tolerance", 0.02},
      {"second_tolerance", 0.03},
      {"budget", 50},
      {"sample_budget", 4096},
      {"ball_radius", 4.0},
      {"safe_factor", 0.6},
      {"threads", 0},
      {"shards", 64},
      {"output_dir", default_output_dir()},
  };
  d.merge_patch(experiment_overrides(experiment));
  return d;
}

json resolve_config(const json& user) {
  std::vector<std::string> errors;
  if (!user.is_object()) throw ConfigError({"<root>: expected a JSON object"});
  if (!user.contains("experiment") || !user["experiment"].is_string())
    throw ConfigError({"experiment: required string"});
  const std::string e = user["experiment"].get<std::string>();
  if (!runners().count(e)) {
    std::string known;
    for (const auto& n : experiment_names()) known += (known.empty() ? "" : ", ") + n;
    throw ConfigError({"experiment: unknown experiment '" + e + "' (known: " + known + ")"});
  }
  for (auto it = user.begin(); it != user.end(); ++it)
    if (!schema().count(it.key())) errors.push_back(it.key() + ": unknown field");
  json resolved = default_config(e);
  for (auto it = user.begin(); it != user.end(); ++it)
    if (schema().count(it.key())) resolved[it.key()] = it.value();
  for (const auto& [key, kind] : schema()) check_field(key, kind, resolved.at(key), errors);
  if (!resolved["G"].is_null() && !resolved["deformation"].is_null())
    errors.push_back("G: give either G or deformation, not both");
  if (!errors.empty()) throw ConfigError(errors);
  return resolved;
}

io::json config_from_manifest(const json& manifest) {
  if (!manifest.is_object() || !manifest.contains("config")) throw ConfigError({"manifest: missing \"config\""});
  return manifest["config"];
}

RunResult run_experiment(const json& resolved) {
  const Cfg cfg{resolved};
  RunResult r;
  r.directory = cfg.out();
  std::filesystem::create_directories(r.directory);
  Context ctx{cfg, r};
  runners().at(resolved.at("experiment").get<std::string>())(ctx);

  r.pass = std::all_of(r.checks.begin(), r.checks.end(), [](const CheckResult& c) { return c.pass; });
  json checks = json::array();
  for (const auto& c : r.checks) checks.push_back({{"name", c.name}, {"value", c.value}, {"bound", c.bound}, {"pass", c.pass}});
  r.report["checks"] = checks;
  r.report["pass"] = r.pass;
  r.report["experiment"] = resolved.at("experiment");

  json artifacts = json::array();
  for (const auto& a : r.artifacts) artifacts.push_back(a.string());
  artifacts.push_back("report.json");
  io::write_json(r.directory / "report.json", r.report);
  r.artifacts.emplace_back("report.json");
  json seeds = json::array();
  for (int k = 0; k < resolved.at("seeds").get<int>(); ++k) seeds.push_back(resolved.at("seed").get<std::uint64_t>() + k);
  io::write_json(r.directory / "manifest.json",
                 {{"config", resolved},
                  {"version", BSWEYL_VERSION},
                  {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                std::to_string(EIGEN_MINOR_VERSION)},
                  {"seeds", seeds},
                  {"artifacts", artifacts},
                  {"pass", r.pass}});
  r.artifacts.emplace_back("manifest.json");
  return r;
}

}  // namespace bsweyl
