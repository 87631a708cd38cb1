#include "bsweyl/io.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <regex>
#include <sstream>

namespace bsweyl::io {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

void dump_into(std::ostringstream& os, const json& j, int indent, int level) {
  const std::string pad = indent > 0 ? "\n" + std::string(static_cast<std::size_t>(indent * (level + 1)), ' ') : "";
  const std::string close = indent > 0 ? "\n" + std::string(static_cast<std::size_t>(indent * level), ' ') : "";
  const char* sep = indent > 0 ? ": " : ":";
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        os << "{}";
        return;
      }
      os << '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        os << (first ? "" : ",") << pad << json(it.key()).dump() << sep;
        dump_into(os, it.value(), indent, level + 1);
        first = false;
      }
      os << close << '}';
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        os << "[]";
        return;
      }
      // flat numeric arrays stay on one line
      const bool flat = std::all_of(j.begin(), j.end(), [](const json& e) { return e.is_primitive(); });
      os << '[';
      for (std::size_t k = 0; k < j.size(); ++k) {
        os << (k ? "," : "") << (flat ? (k ? " " : "") : pad);
        dump_into(os, j[k], indent, level + 1);
      }
      os << (flat ? "" : close) << ']';
      return;
    }
    case json::value_t::number_float: {
      const double v = j.get<double>();
      os << (std::isfinite(v) ? format_double(v) : "null");
      return;
    }
    default:
      os << j.dump();
  }
}

struct ComplexParser {
  const std::string& s;
  std::size_t pos = 0;

  void skip() {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  }
  bool eat(char c) {
    skip();
    if (pos < s.size() && s[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw InputError("complex", "cannot parse '" + s + "' at offset " + std::to_string(pos) + ": " + what);
  }
  Complex expr() {
    Complex v = term();
    while (true) {
      if (eat('+')) v += term();
      else if (eat('-')) v -= term();
      else return v;
    }
  }
  Complex term() {
    Complex v = unary();
    while (true) {
      if (eat('*')) v *= unary();
      else if (eat('/')) v /= unary();
      else return v;
    }
  }
  Complex unary() {
    if (eat('-')) return -unary();
    if (eat('+')) return unary();
    return primary();
  }
  Complex primary() {
    skip();
    if (eat('(')) {
      const Complex v = expr();
      if (!eat(')')) fail("expected ')'");
      return v;
    }
    if (eat('i')) return kI;
    if (pos >= s.size()) fail("unexpected end");
    const char* begin = s.c_str() + pos;
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin) fail("expected a number");
    pos += static_cast<std::size_t>(end - begin);
    if (pos < s.size() && s[pos] == 'i') {
      ++pos;
      return {0.0, v};
    }
    return v;
  }
};

std::vector<std::string> split_args(const std::string& s) {
  std::vector<std::string> out;
  int depth = 0;
  std::string cur;
  for (char c : s) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == ',' && depth == 0) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty() || !out.empty()) out.push_back(cur);
  return out;
}

struct Named {
  std::string name;
  std::vector<std::string> args;
};

std::optional<Named> split_named(const std::string& spec) {
  static const std::regex re(R"(^\s*([a-z][a-z0-9-]*)\s*(?:\((.*)\))?\s*$)");
  std::smatch m;
  if (!std::regex_match(spec, m, re)) return std::nullopt;
  return Named{m[1], split_args(m[2])};
}

double real_arg(const Named& n, std::size_t k, const std::string& where) {
  const Complex c = parse_complex(n.args.at(k));
  if (c.imag() != 0.0) throw InputError(where, n.name + " argument " + std::to_string(k + 1) + " must be real");
  return c.real();
}

void expect_args(const Named& n, std::size_t count, const std::string& where) {
  if (n.args.size() != count)
    throw InputError(where, n.name + " takes " + std::to_string(count) + " argument(s), got " +
                                std::to_string(n.args.size()));
}

template <class T>
std::vector<T> vec_or_zero(const json& t, const char* key, int n, const std::string& where) {
  if (!t.contains(key)) return std::vector<T>(static_cast<std::size_t>(n), T{});
  if (!t[key].is_array() || static_cast<int>(t[key].size()) != n)
    throw InputError(where + "." + key, "expected an array of length " + std::to_string(n));
  try {
    return t[key].get<std::vector<T>>();
  } catch (const json::exception&) {
    throw InputError(where + "." + key, "wrong element type");
  }
}

}  // namespace

std::string dump(const json& j, int indent) {
  std::ostringstream os;
  dump_into(os, j, indent, 0);
  return os.str();
}

Complex parse_complex(const std::string& s) {
  ComplexParser p{s};
  const Complex v = p.expr();
  p.skip();
  if (p.pos != s.size()) p.fail("trailing characters");
  return v;
}

SymbolExpr symbol_from_json(const json& j, const std::string& where) {
  if (!j.is_object()) throw InputError(where, "expected an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (it.key() != "n" && it.key() != "terms" && it.key() != "tube_radius")
      throw InputError(where + "." + it.key(), "unknown field");
  if (!j.contains("n") || !j["n"].is_number_integer() || j["n"].get<int>() < 1)
    throw InputError(where + ".n", "required positive integer");
  const int n = j["n"].get<int>();
  double tube = SymbolExpr::kDefaultTubeRadius;
  if (j.contains("tube_radius")) {
    if (!j["tube_radius"].is_number()) throw InputError(where + ".tube_radius", "expected a number");
    tube = j["tube_radius"].get<double>();
  }
  std::vector<Term> terms;
  if (j.contains("terms")) {
    if (!j["terms"].is_array()) throw InputError(where + ".terms", "expected an array");
    for (std::size_t k = 0; k < j["terms"].size(); ++k) {
      const json& t = j["terms"][k];
      const std::string w = where + ".terms[" + std::to_string(k) + "]";
      if (!t.is_object()) throw InputError(w, "expected an object");
      for (auto it = t.begin(); it != t.end(); ++it) {
        static const std::vector<std::string> keys{"re", "im", "xpow", "xipow", "xfreq", "xifreq"};
        if (std::find(keys.begin(), keys.end(), it.key()) == keys.end())
          throw InputError(w + "." + it.key(), "unknown field");
      }
      Term term;
      term.coeff = {t.value("re", 0.0), t.value("im", 0.0)};
      term.xpow = vec_or_zero<int>(t, "xpow", n, w);
      term.xipow = vec_or_zero<int>(t, "xipow", n, w);
      term.xfreq = vec_or_zero<double>(t, "xfreq", n, w);
      term.xifreq = vec_or_zero<double>(t, "xifreq", n, w);
      terms.push_back(std::move(term));
    }
  }
  try {
    return SymbolExpr(n, std::move(terms), tube);
  } catch (const std::invalid_argument& e) {
    throw InputError(where, e.what());
  }
}

json symbol_to_json(const SymbolExpr& p) {
  json terms = json::array();
  for (const Term& t : p.terms())
    terms.push_back({{"re", t.coeff.real()},
                     {"im", t.coeff.imag()},
                     {"xpow", t.xpow},
                     {"xipow", t.xipow},
                     {"xfreq", t.xfreq},
                     {"xifreq", t.xifreq}});
  return {{"n", p.dim()}, {"terms", terms}, {"tube_radius", p.tube_radius()}};
}

SymbolExpr parse_symbol(const std::string& spec, const std::string& where) {
  const auto first = spec.find_first_not_of(" \t\n");
  if (first != std::string::npos && spec[first] == '{') return symbol_from_json(parse_json_text(spec, where), where);
  if (const auto n = split_named(spec)) {
    if (n->name == "cho") {
      expect_args(*n, 2, where);
      return symbols::cho(real_arg(*n, 0, where), parse_complex(n->args[1]));
    }
    if (n->name == "cho-torus") {
      expect_args(*n, 2, where);
      return *torus_normal_form(spec);
    }
    if (n->name == "torus-linear") {
      expect_args(*n, 0, where);
      return symbols::torus_linear();
    }
    if (n->name == "torus-coupled") {
      expect_args(*n, 1, where);
      return symbols::torus_coupled(real_arg(*n, 0, where));
    }
    if (n->name == "x1x2") {
      expect_args(*n, 0, where);
      return symbols::x1x2();
    }
    if (n->name == "sin-x1-cos-xi2") {
      expect_args(*n, 0, where);
      return symbols::sin_x1_cos_xi2();
    }
  }
  if (std::filesystem::is_regular_file(spec)) return symbol_from_json(read_json_file(spec), where);
  throw InputError(where, "unknown symbol '" + spec + "' (not a name, JSON object, or file)");
}

SymbolExpr symbol_from_value(const json& j, const std::string& where) {
  if (j.is_string()) return parse_symbol(j.get<std::string>(), where);
  return symbol_from_json(j, where);
}

std::optional<SymbolExpr> torus_normal_form(const std::string& spec) {
  const auto n = split_named(spec);
  if (!n) return std::nullopt;
  if ((n->name == "cho" || n->name == "cho-torus") && n->args.size() == 2) {
    const double alpha = real_arg(*n, 0, "symbol");
    return SymbolExpr::xi(2, 0) + Complex(0.0, alpha) * SymbolExpr::xi(2, 1) -
           SymbolExpr::constant(2, parse_complex(n->args[1]));
  }
  if (n->name == "torus-linear" && n->args.empty()) return symbols::torus_linear();
  if (n->name == "torus-coupled" && n->args.size() == 1) return symbols::torus_coupled(real_arg(*n, 0, "symbol"));
  return std::nullopt;
}

Deformation deformation_from_json(const json& j, double t_max) {
  if (!j.is_object()) throw InputError("deformation", "expected an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (it.key() != "G" && it.key() != "t_poly_degree" && it.key() != "tol")
      throw InputError("deformation." + it.key(), "unknown field");
  if (!j.contains("G")) throw InputError("deformation.G", "required");
  const double tol = j.value("tol", 1e-10);
  std::vector<SymbolExpr> coeffs;
  if (j["G"].is_array()) {
    for (std::size_t k = 0; k < j["G"].size(); ++k)
      coeffs.push_back(symbol_from_value(j["G"][k], "deformation.G[" + std::to_string(k) + "]"));
  } else {
    coeffs.push_back(symbol_from_value(j["G"], "deformation.G"));
  }
  if (j.contains("t_poly_degree")) {
    const int deg = j["t_poly_degree"].get<int>();
    if (deg + 1 != static_cast<int>(coeffs.size()))
      throw InputError("deformation.t_poly_degree", "does not match the number of G coefficients");
  }
  try {
    return Deformation(std::move(coeffs), tol, t_max);
  } catch (const std::invalid_argument& e) {
    throw InputError("deformation", e.what());
  }
}

json to_json(const ComplexWindow& w) {
  return {{"re", {w.re_lo(), w.re_hi()}}, {"im", {w.im_lo(), w.im_hi()}}, {"grid", {w.n_re, w.n_im}}};
}

json to_json(const DensityGrid& g) {
  return {{"method", to_string(g.method)},
          {"samples", g.samples},
          {"hits", g.hits},
          {"seed", g.seed},
          {"box_radius", g.box_radius},
          {"window", to_json(g.window)},
          {"empty", g.empty},
          {"box_margin_ok", g.box_margin_ok},
          {"invalid_cells", g.invalid_cells},
          {"total_mass", g.total_mass()}};
}

json to_json(const AuditReport& r) {
  json j{{"min_abs_outside_ball", r.min_abs_outside_ball},
         {"elliptic_at_infinity", to_string(r.elliptic_at_infinity)},
         {"zero_points", r.zero_points},
         {"min_independence", r.min_independence},
         {"independent_differentials", to_string(r.independent_differentials)},
         {"max_abs_bracket", r.max_abs_bracket},
         {"small_bracket", to_string(r.small_bracket)},
         {"zero_set_clusters", r.zero_set_clusters},
         {"connected", to_string(r.connected)},
         {"action_diffeomorphism", to_string(r.action_diffeomorphism)}};
  j["action_jacobian_condition"] = r.action_jacobian_condition ? json(*r.action_jacobian_condition) : json(nullptr);
  return j;
}

json to_json(const VariationReport& r) {
  return {{"order", static_cast<int>(r.order)}, {"t", r.t},         {"lhs", r.lhs},
          {"lhs_error", r.lhs_error},          {"rhs", r.rhs},     {"rhs_error", r.rhs_error},
          {"discrepancy", r.discrepancy}};
}

json to_json(const Certificate& c) {
  return {{"found", c.found},
          {"center", {c.f.center.real(), c.f.center.imag()}},
          {"radius", c.f.radius},
          {"value", c.value},
          {"error", c.error},
          {"candidates", c.candidates}};
}

json to_json(const SpectrumResult& s) {
  return {{"basis", to_string(s.basis.kind)},
          {"size", s.basis.size},
          {"h", s.basis.h},
          {"n", s.basis.n},
          {"delta", s.delta},
          {"seed", s.seed ? json(*s.seed) : json(nullptr)},
          {"residual_bound", s.residual_bound},
          {"blocks", s.blocks},
          {"eigenvalues", s.eigenvalues.size()}};
}

json to_json(const BSPrediction& p) {
  json idx = json::array(), bad = json::array();
  for (const auto& k : p.indices) idx.push_back({k(0), k(1)});
  for (const auto& k : p.unresolved) bad.push_back({k(0), k(1)});
  return {{"points", p.points.size()}, {"indices", idx}, {"unresolved", bad}};
}

json to_json(const ComparisonReport& r) {
  return {{"window", to_json(r.window)},
          {"count", r.count},
          {"omega_prediction", r.omega_prediction},
          {"weyl_prediction", r.weyl_prediction},
          {"weyl_prediction_error", r.weyl_prediction_error},
          {"omega_deviation", r.omega_deviation},
          {"weyl_deviation", r.weyl_deviation},
          {"unsafe", r.unsafe}};
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  return f;
}

}  // namespace

void write_density_csv(const std::filesystem::path& path, const DensityGrid& g) {
  auto f = open_out(path);
  f << "z_re,z_im,value,stderr\n";
  for (int j = 0; j < g.window.n_im; ++j)
    for (int i = 0; i < g.window.n_re; ++i) {
      const Complex c = g.window.cell_center(i, j);
      f << format_double(c.real()) << ',' << format_double(c.imag()) << ',' << format_double(g.values(i, j)) << ','
        << format_double(g.stderrs(i, j)) << '\n';
    }
}

void write_points_csv(const std::filesystem::path& path, const std::vector<Complex>& z) {
  auto f = open_out(path);
  f << "re,im\n";
  for (Complex v : z) f << format_double(v.real()) << ',' << format_double(v.imag()) << '\n';
}

void write_json(const std::filesystem::path& path, const json& j) {
  auto f = open_out(path);
  f << dump(j) << '\n';
}

json parse_json_text(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // byte offset -> line and column
    std::size_t line = 1, col = 1;
    for (std::size_t k = 0; k + 1 < e.byte && k < text.size(); ++k) {
      if (text[k] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::string what = e.what();
    if (const auto p = what.find(": ", what.find("parse error")); p != std::string::npos) what = what.substr(p + 2);
    throw InputError(source, "line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + what);
  }
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw InputError(path.string(), "cannot open file");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_json_text(ss.str(), path.string());
}

}  // namespace bsweyl::io
