#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bsweyl/symbol.hpp"

namespace bsweyl {

enum class Check { kPass, kFail, kNotChecked };

std::string to_string(Check c);

struct AuditOptions {
  int sample_budget = 4096;
  double ball_radius = 4.0;
  std::uint64_t seed = 1;
  double bracket_threshold = 0.1;  // advisory cut for "sufficiently small"
  double linkage_radius = 0.2;
  double newton_tolerance = 1e-10;
  int newton_max_iterations = 50;
  /// Treat x as angles on the torus (x in [-pi, pi)^n, periodic distance);
  /// ellipticity is then checked in xi only.
  bool periodic_x = false;
};

/// Measured quantities behind the standing assumptions on p. Every number is
/// a sample statistic, never a proof.
struct AuditReport {
  // |p| >= 1/C outside the ball of radius C (sampled on the shell C <= |rho| <= 2C)
  double min_abs_outside_ball = 0.0;
  Check elliptic_at_infinity = Check::kNotChecked;

  // zero set p^{-1}(0) in real phase space
  int zero_points = 0;
  double min_independence = 0.0;  // min |dRe p ^ dIm p|
  Check independent_differentials = Check::kNotChecked;

  double max_abs_bracket = 0.0;  // max |{Re p, Im p}| on the zero set
  Check small_bracket = Check::kNotChecked;

  int zero_set_clusters = 0;  // single-linkage clusters (heuristic)
  Check connected = Check::kNotChecked;

  std::optional<double> action_jacobian_condition;  // z -> I(z), when an action map exists
  Check action_diffeomorphism = Check::kNotChecked;

  std::vector<std::vector<double>> zero_samples;  // converged real points, 2n each
};

/// Independence measure |d Re p ^ d Im p| at a real point.
double differential_independence(const SymbolExpr& p, std::span<const double> z);

/// Newton projection of a real seed onto p^{-1}(0) using the minimum-norm step.
std::optional<std::vector<double>> project_to_zero_set(const SymbolExpr& p, std::vector<double> seed,
                                                       double tolerance = 1e-10, int max_iterations = 50);

AuditReport audit(const SymbolExpr& p, const AuditOptions& options = {});

}  // namespace bsweyl
