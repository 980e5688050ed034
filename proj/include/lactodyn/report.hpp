#pragma once

// Flat `key = value` reports and CSV sidecars. Numbers use 17 significant
// digits so that text output round-trips to the same doubles.

#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lactodyn/averaging.hpp"
#include "lactodyn/equilibria.hpp"
#include "lactodyn/manifold.hpp"
#include "lactodyn/scenarios.hpp"

namespace lactodyn {

using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// Keys x0, y0 (2D) or x0, u0, v0, y0 (4D), then lambda_re_i / lambda_im_i
/// (1-based), class, stable, residual.
KeyValues report_equilibrium(const EquilibriumReport& r);
KeyValues report_mu(const MuBound& mu);
KeyValues report_averaging(const AveragingReport& r);
KeyValues report_orbit(const PeriodicOrbitReport& r);
KeyValues report_dip(const DipReport& r);
KeyValues report_buffering(const BufferingReport& r);
KeyValues report_sensitivity(const SensitivityTable& t);

void write_key_values(std::ostream& out, const KeyValues& kv);

/// Inverse of write_key_values; blank lines and `#` comments are skipped.
/// Throws ParseError with the 1-based line number on a line without `=`.
KeyValues read_key_values(std::string_view text);

/// Columns t,x,x0_target on the report grid.
void write_dip_target_csv(std::ostream& out, const DipResult& result);
/// Columns period,displacement,x_min,x_max,y_min,y_max.
void write_buffering_csv(std::ostream& out, const BufferingReport& r);
/// Columns response,driver,perturbation,driver_change,response_change,claimed,observed,testable,matches.
void write_sensitivity_csv(std::ostream& out, const SensitivityTable& t);

}  // namespace lactodyn
