#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"

#include "bsweyl/experiments.hpp"

using namespace bsweyl;
using io::json;

namespace {

enum class Flag { kText, kSymbol, kJson, kNumber, kInt, kNumbers, kInts, kTheta, kSampler };

struct FlagSpec {
  const char* flag;
  const char* key;
  Flag kind;
  const char* help;
};

const std::vector<FlagSpec>& flags() {
  static const std::vector<FlagSpec> f{
      {"--symbol", "symbol", Flag::kSymbol, "named symbol, inline JSON, or JSON file"},
      {"--G", "G", Flag::kSymbol, "deformation generator (named symbol, inline JSON, or file)"},
      {"--deformation", "deformation", Flag::kJson, "deformation JSON (inline or file)"},
      {"--t", "t", Flag::kNumber, "deformation parameter"},
      {"--t-max", "t_max", Flag::kNumber, "largest admissible |t|"},
      {"--window", "window", Flag::kNumbers, "re_lo,re_hi,im_lo,im_hi"},
      {"--grid", "grid", Flag::kInts, "n_re,n_im"},
      {"--h", "h", Flag::kNumber, "semiclassical parameter"},
      {"--basis", "basis", Flag::kText, "hermite | torus"},
      {"--N", "N", Flag::kInt, "basis size per axis (Hermite N or torus K)"},
      {"--K", "N", Flag::kInt, "torus modes -K..K (same as --N)"},
      {"--delta", "delta", Flag::kNumber, "random perturbation strength"},
      {"--seeds", "seeds", Flag::kInt, "number of seeds"},
      {"--seed", "seed", Flag::kInt, "base seed"},
      {"--samples", "samples", Flag::kInt, "sample count"},
      {"--sampler", "qmc", Flag::kSampler, "qmc | mc"},
      {"--box-radius", "box_radius", Flag::kNumber, "half-width of the phase-space box"},
      {"--base-box-radius", "base_box_radius", Flag::kNumber, "box for undeformed-base quadratures"},
      {"--quad-order", "order", Flag::kInt, "Gauss-Legendre order per axis"},
      {"--order", "variation_order", Flag::kInt, "variation order 1 or 2"},
      {"--f-center", "f_center", Flag::kNumbers, "test function center re,im"},
      {"--f-radius", "f_radius", Flag::kNumber, "test function half-width"},
      {"--theta", "theta", Flag::kTheta, "theta0_1,theta0_2[;theta1_1,theta1_2...]"},
      {"--tolerance", "tolerance", Flag::kNumber, "pass tolerance"},
      {"--second-tolerance", "second_tolerance", Flag::kNumber, "second-variation tolerance"},
      {"--budget", "budget", Flag::kInt, "certificate search budget"},
      {"--sample-budget", "sample_budget", Flag::kInt, "audit sample budget"},
      {"--ball-radius", "ball_radius", Flag::kNumber, "audit ball radius C"},
      {"--safe-factor", "safe_factor", Flag::kNumber, "truncation-safe quantum-number factor"},
      {"--threads", "threads", Flag::kInt, "worker threads (0: all cores)"},
      {"--shards", "shards", Flag::kInt, "sampling shards"},
      {"--out", "output_dir", Flag::kText, "output directory (default $BSWEYL_OUTPUT_DIR or ./bsweyl-out)"},
  };
  return f;
}

double to_number(const std::string& s, const std::string& flag) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size()) throw io::InputError(flag, "not a number: '" + s + "'");
  return v;
}

json to_int(const std::string& s, const std::string& flag) {
  const double v = to_number(s, flag);
  if (v != std::floor(v)) throw io::InputError(flag, "not an integer: '" + s + "'");
  return static_cast<std::int64_t>(v);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string part; std::getline(ss, part, sep);) out.push_back(part);
  return out;
}

json json_arg(const std::string& s, const std::string& flag) {
  const auto first = s.find_first_not_of(" \t");
  if (first != std::string::npos && (s[first] == '{' || s[first] == '[')) return io::parse_json_text(s, flag);
  return io::read_json_file(s);
}

json convert(const FlagSpec& f, const std::string& v) {
  switch (f.kind) {
    case Flag::kText:
      return v;
    case Flag::kSymbol: {
      const auto first = v.find_first_not_of(" \t");
      return first != std::string::npos && v[first] == '{' ? io::parse_json_text(v, f.flag) : json(v);
    }
    case Flag::kJson:
      return json_arg(v, f.flag);
    case Flag::kNumber:
      return to_number(v, f.flag);
    case Flag::kInt:
      return to_int(v, f.flag);
    case Flag::kNumbers: {
      json a = json::array();
      for (const auto& p : split(v, ',')) a.push_back(to_number(p, f.flag));
      return a;
    }
    case Flag::kInts: {
      json a = json::array();
      for (const auto& p : split(v, ',')) a.push_back(to_int(p, f.flag));
      return a;
    }
    case Flag::kTheta: {
      json a = json::array();
      for (const auto& pair : split(v, ';')) {
        json q = json::array();
        for (const auto& p : split(pair, ',')) q.push_back(to_number(p, f.flag));
        a.push_back(q);
      }
      return a;
    }
    case Flag::kSampler:
      if (v == "qmc") return true;
      if (v == "mc") return false;
      throw io::InputError(f.flag, "expected qmc or mc");
  }
  return nullptr;
}

struct Invocation {
  std::string experiment;
  std::map<std::string, std::string> values;  // flag -> raw text
  std::string config, manifest;
  bool print_config = false;
};

void add_common(CLI::App* app, Invocation& inv) {
  for (const auto& f : flags()) app->add_option(f.flag, inv.values[f.flag], f.help);
  app->add_option("--config", inv.config, "experiment config JSON file");
  app->add_option("--manifest", inv.manifest, "re-run the config stored in a manifest");
  app->add_flag("--print-config", inv.print_config, "print the resolved config and exit");
}

void report_errors(const std::vector<std::string>& errors) {
  std::cerr << io::dump({{"status", "invalid-config"}, {"errors", errors}}) << '\n';
}

int execute(const Invocation& inv, CLI::App* sub) {
  std::vector<std::string> errors;
  json user = json::object();
  try {
    if (!inv.config.empty() && !inv.manifest.empty()) throw io::InputError("--config", "conflicts with --manifest");
    if (!inv.config.empty()) user = io::read_json_file(inv.config);
    if (!inv.manifest.empty()) user = config_from_manifest(io::read_json_file(inv.manifest));
  } catch (const io::InputError& e) {
    report_errors({e.what()});
    return 2;
  } catch (const ConfigError& e) {
    report_errors(e.errors());
    return 2;
  }
  if (!user.is_object()) {
    report_errors({"config: expected a JSON object"});
    return 2;
  }
  if (user.contains("experiment") && user["experiment"] != inv.experiment)
    errors.push_back("experiment: config names '" + user["experiment"].dump() + "' but the command runs '" +
                     inv.experiment + "'");
  user["experiment"] = inv.experiment;
  for (const auto& f : flags()) {
    if (sub->get_option(f.flag)->count() == 0) continue;
    try {
      user[f.key] = convert(f, inv.values.at(f.flag));
    } catch (const io::InputError& e) {
      errors.push_back(e.what());
    }
  }
  json resolved;
  try {
    resolved = resolve_config(user);
  } catch (const ConfigError& e) {
    errors.insert(errors.end(), e.errors().begin(), e.errors().end());
  }
  if (!errors.empty()) {
    report_errors(errors);
    return 2;
  }
  if (inv.print_config) {
    std::cout << io::dump(resolved) << '\n';
    return 0;
  }
  try {
    const RunResult r = run_experiment(resolved);
    json summary{{"experiment", inv.experiment},
                 {"pass", r.pass},
                 {"checks", r.report["checks"]},
                 {"output_dir", r.directory.string()}};
    std::cout << io::dump(summary) << '\n';
    return r.pass ? 0 : 1;
  } catch (const ConfigError& e) {
    report_errors(e.errors());
    return 2;
  } catch (const std::exception& e) {
    std::cerr << io::dump({{"status", "error"}, {"experiment", inv.experiment}, {"message", e.what()}}) << '\n';
    return 3;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bohr-Sommerfeld vs Weyl eigenvalue densities for non-self-adjoint operators"};
  app.set_help_flag("--help", "print help and exit");
  app.require_subcommand(1);
  app.set_version_flag("--version", "bsweyl 0.1.0");

  std::map<std::string, Invocation> invocations;
  std::map<CLI::App*, Invocation*> by_app;
  auto subcommand = [&](const std::string& name, const std::string& help) {
    CLI::App* s = app.add_subcommand(name, help);
    Invocation& inv = invocations[name];
    add_common(s, inv);
    by_app[s] = &inv;
    return s;
  };

  for (const char* e : {"audit", "density", "deform-density", "variation", "spectrum", "bs", "count"}) {
    subcommand(e, std::string("run the ") + e + " experiment");
    invocations[e].experiment = e;
  }
  for (const char* name : {"run", "experiment"}) {
    CLI::App* s = subcommand(name, "run a named experiment");
    s->add_option("name", invocations[name].experiment, "experiment name")
        ->required()
        ->check(CLI::IsMember(experiment_names()));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  CLI::App* sub = app.get_subcommands().front();
  return execute(*by_app.at(sub), sub);
}
