#include "lactodyn/report.hpp"

#include <sstream>

#include "lactodyn/errors.hpp"

namespace lactodyn {

namespace {

std::string flag(bool b) { return b ? "true" : "false"; }

void add(KeyValues& kv, std::string key, double v) { kv.emplace_back(std::move(key), format_number(v)); }
void add(KeyValues& kv, std::string key, int v) { kv.emplace_back(std::move(key), std::to_string(v)); }
void add(KeyValues& kv, std::string key, bool v) { kv.emplace_back(std::move(key), flag(v)); }

void add_complex_list(KeyValues& kv, const std::string& stem, const std::vector<std::complex<double>>& values) {
    for (std::size_t i = 0; i < values.size(); ++i) {
        add(kv, stem + "_re_" + std::to_string(i + 1), values[i].real());
        add(kv, stem + "_im_" + std::to_string(i + 1), values[i].imag());
    }
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

}  // namespace

KeyValues report_equilibrium(const EquilibriumReport& r) {
    KeyValues kv;
    static const char* names2[] = {"x0", "y0"};
    static const char* names4[] = {"x0", "u0", "v0", "y0"};
    const bool four = r.point.size() == 4;
    for (Eigen::Index i = 0; i < r.point.size(); ++i) add(kv, four ? names4[i] : names2[i], r.point[i]);
    add_complex_list(kv, "lambda", r.eigenvalues);
    kv.emplace_back("class", to_string(r.classification));
    add(kv, "stable", r.stable);
    add(kv, "feasible", r.feasible);
    add(kv, "residual", r.residual_norm);
    return kv;
}

KeyValues report_mu(const MuBound& mu) {
    KeyValues kv;
    add(kv, "mu", mu.mu);
    add(kv, "mu_floor", mu.analytic_floor);
    add(kv, "t_at_min", mu.t_at_min);
    add(kv, "x_at_min", mu.x_at_min);
    add(kv, "attractive", mu.mu > 0.0);
    return kv;
}

KeyValues report_averaging(const AveragingReport& r) {
    KeyValues kv;
    add(kv, "period", r.period);
    add(kv, "mu", r.mu_bound);
    add(kv, "mu_floor", r.mu_floor);
    add(kv, "condition_a", r.mu_bound > 0.0);
    add(kv, "condition_b_integral", r.condition_b_integral);
    add(kv, "condition_b", true);
    add(kv, "x0_avg", r.x0_avg);
    add(kv, "isolation_margin", r.isolation_margin);
    add(kv, "condition_c", true);
    add(kv, "predicted_x", r.predicted_initial[0]);
    add(kv, "predicted_y", r.predicted_initial[1]);
    add(kv, "defect", r.defect);
    add(kv, "defect_x", r.defect_vector[0]);
    add(kv, "defect_y", r.defect_vector[1]);
    return kv;
}

KeyValues report_orbit(const PeriodicOrbitReport& r) {
    KeyValues kv;
    for (Eigen::Index i = 0; i < r.fixed_point.size(); ++i)
        add(kv, "fixed_point_" + std::to_string(i + 1), r.fixed_point[i]);
    add(kv, "initial_defect", r.initial_defect);
    add(kv, "final_defect", r.final_defect);
    add(kv, "iterations", r.iterations);
    add_complex_list(kv, "floquet", r.floquet_multipliers);
    add(kv, "floquet_max_abs", r.floquet_multipliers.empty() ? 0.0 : std::abs(r.floquet_multipliers.front()));
    add(kv, "orbit_stable", r.stable);
    return kv;
}

KeyValues report_dip(const DipReport& r) {
    KeyValues kv;
    add(kv, "baseline_x", r.baseline_x);
    add(kv, "min_x", r.min_x);
    add(kv, "t_min", r.t_min);
    add(kv, "dip_depth", r.dip_depth);
    add(kv, "dip_detected", r.dip_detected);
    add(kv, "overshoot_max", r.overshoot_max);
    add(kv, "t_overshoot", r.t_overshoot);
    add(kv, "overshoot_detected", r.overshoot_detected);
    add(kv, "final_x", r.final_x);
    add(kv, "returned_to_baseline", r.returned_to_baseline);
    add(kv, "t_transient", r.t_transient);
    add(kv, "chase_fraction", r.chase_fraction);
    return kv;
}

KeyValues report_buffering(const BufferingReport& r) {
    KeyValues kv;
    add(kv, "period", r.period);
    add(kv, "n_periods", r.n_periods);
    add(kv, "locked", r.locked);
    add(kv, "lock_period", r.lock_period);
    add(kv, "contraction_ratio", r.contraction_ratio);
    add(kv, "monotone_after_3", r.monotone_after_3);
    add(kv, "final_displacement", r.final_displacement);
    if (!r.section.empty()) {
        add(kv, "limit_x", r.section.back()[0]);
        add(kv, "limit_y", r.section.back()[1]);
    }
    add(kv, "shooting_agreement", r.shooting_agreement);
    return kv;
}

KeyValues report_sensitivity(const SensitivityTable& t) {
    KeyValues kv = report_equilibrium(t.base);
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const SensitivityRow& row = t.rows[i];
        const std::string stem = "claim_" + std::to_string(i + 1) + "_";
        kv.emplace_back(stem + "text", row.claim);
        add(kv, stem + "driver_change", row.driver_change);
        add(kv, stem + "response_change", row.response_change);
        add(kv, stem + "claimed", row.claimed_relation);
        add(kv, stem + "observed", row.observed_relation);
        add(kv, stem + "testable", row.testable);
        add(kv, stem + "matches", row.matches);
    }
    add(kv, "all_match", t.all_match);
    return kv;
}

void write_key_values(std::ostream& out, const KeyValues& kv) {
    for (const auto& [k, v] : kv) out << k << " = " << v << '\n';
}

KeyValues read_key_values(std::string_view text) {
    KeyValues kv;
    std::istringstream in{std::string(text)};
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        const std::string t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw ParseError("expected `key = value`", number);
        const std::string key = trim(std::string_view(t).substr(0, eq));
        if (key.empty()) throw ParseError("empty key", number);
        kv.emplace_back(key, trim(std::string_view(t).substr(eq + 1)));
    }
    return kv;
}

void write_dip_target_csv(std::ostream& out, const DipResult& result) {
    out << "t,x,x0_target\n";
    for (std::size_t i = 0; i < result.grid.size(); ++i) {
        const double t = result.grid[i];
        out << format_number(t) << ',' << format_number(result.trajectory(t)[0]) << ','
            << format_number(result.target_x0[i]) << '\n';
    }
}

void write_buffering_csv(std::ostream& out, const BufferingReport& r) {
    out << "period,displacement,x_min,x_max,y_min,y_max\n";
    for (std::size_t k = 0; k < r.displacement.size(); ++k)
        out << k + 1 << ',' << format_number(r.displacement[k]) << ',' << format_number(r.x_min[k]) << ','
            << format_number(r.x_max[k]) << ',' << format_number(r.y_min[k]) << ',' << format_number(r.y_max[k])
            << '\n';
}

void write_sensitivity_csv(std::ostream& out, const SensitivityTable& t) {
    out << "response,driver,perturbation,driver_change,response_change,claimed,observed,testable,matches\n";
    for (const SensitivityRow& row : t.rows)
        out << row.response << ',' << row.driver << ",\"" << row.perturbation << "\"," << format_number(row.driver_change)
            << ',' << format_number(row.response_change) << ',' << row.claimed_relation << ','
            << row.observed_relation << ',' << flag(row.testable) << ',' << flag(row.matches) << '\n';
}

}  // namespace lactodyn
