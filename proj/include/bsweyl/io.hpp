#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "bsweyl/audit.hpp"
#include "bsweyl/density.hpp"
#include "bsweyl/flow.hpp"
#include "bsweyl/quantize.hpp"
#include "bsweyl/symbol.hpp"
#include "bsweyl/variation.hpp"

namespace bsweyl::io {

using nlohmann::json;

/// Thrown for malformed user input; `field` names the offending key path.
class InputError : public std::invalid_argument {
 public:
  InputError(std::string field, const std::string& message)
      : std::invalid_argument(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// %.17g
std::string format_double(double v);

/// Serializes with every float at 17 significant digits; NaN and inf become null.
std::string dump(const json& j, int indent = 2);

/// Complex literal: numbers, i, + - * / and parentheses, e.g. "(1+i)/2", "0.5-0.25i".
Complex parse_complex(const std::string& s);

/// {"n", "terms": [{"re", "im", "xpow", "xipow", "xfreq", "xifreq"}], "tube_radius"}
SymbolExpr symbol_from_json(const json& j, const std::string& where = "symbol");
json symbol_to_json(const SymbolExpr& p);

/// Named symbol, inline JSON object text, or path to a JSON file.
/// Names: cho(alpha, shift), cho-torus(alpha, shift), torus-linear, torus-coupled(c), x1x2, sin-x1-cos-xi2.
SymbolExpr parse_symbol(const std::string& spec, const std::string& where = "symbol");
/// A config value: a string spec as above or a symbol JSON object.
SymbolExpr symbol_from_value(const json& j, const std::string& where = "symbol");

/// Integrable torus form behind a named symbol (cho -> eta1 + i alpha eta2 - shift); torus names map to themselves.
std::optional<SymbolExpr> torus_normal_form(const std::string& spec);

/// {"G": symbol, "t_poly_degree": int, "tol": float}; G may also be a list of t-coefficients.
Deformation deformation_from_json(const json& j, double t_max = 1.0);

json to_json(const DensityGrid& g);
json to_json(const AuditReport& r);
json to_json(const VariationReport& r);
json to_json(const Certificate& c);
json to_json(const SpectrumResult& s);
json to_json(const BSPrediction& p);
json to_json(const ComparisonReport& r);
json to_json(const ComplexWindow& w);

/// z_re,z_im,value,stderr per cell.
void write_density_csv(const std::filesystem::path& path, const DensityGrid& g);
/// re,im per point.
void write_points_csv(const std::filesystem::path& path, const std::vector<Complex>& z);
void write_json(const std::filesystem::path& path, const json& j);

/// Parses text; on failure throws InputError with the line and column.
json parse_json_text(const std::string& text, const std::string& source);
json read_json_file(const std::filesystem::path& path);

}  // namespace bsweyl::io
