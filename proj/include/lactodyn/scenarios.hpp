#pragma once

// Canonical experiments: the stimulus-induced dip, periodic buffering
// (frequency locking) and the 4D quasi-stationary sensitivity table.

#include <optional>
#include <string>
#include <vector>

#include "lactodyn/averaging.hpp"
#include "lactodyn/dynamics.hpp"
#include "lactodyn/equilibria.hpp"
#include "lactodyn/integrator.hpp"

namespace lactodyn {

enum class Model { TwoD, FourD };

std::string to_string(Model m);

/// Declarative description of a Signal/Control, kept so configs can be
/// written back out with every default materialised.
struct SignalSpec {
    enum class Kind { Constant, Trapezoid, Dip, Points };

    Kind kind = Kind::Constant;
    double value = 0.0;
    TrapezoidSpec trapezoid;
    DipControlSpec dip;
    /// Kind::Points: path of a signal text file and its parsed content.
    std::string file;
    Signal points;
    double coupling = 0.0;
    double x_ref = 0.0;

    Signal build() const;
    Control control() const { return {build(), coupling, x_ref}; }
    bool operator==(const SignalSpec&) const = default;
};

std::string to_string(SignalSpec::Kind k);

struct DetectionThresholds {
    double dip_fraction = 0.01;    ///< dip depth needed for a positive detection, fraction of baseline
    double return_tol = 1e-4;      ///< |x(horizon) - baseline| for returned_to_baseline, mM
    double lock_threshold = 1e-8;  ///< stroboscopic displacement, mM
    int lock_periods = 3;
    bool operator==(const DetectionThresholds&) const = default;
};

struct ScenarioConfig {
    std::string name = "custom";
    Model model = Model::TwoD;
    Params4D params;  ///< 2D runs read only the Params2D part
    SignalSpec F;
    SignalSpec J;     ///< 2D control
    SignalSpec J0, J1, J2;
    IntegratorConfig integrator;
    double horizon = 100.0;
    double period = 20.0;
    int n_periods = 40;
    double sensitivity_delta = 1e-6;
    DetectionThresholds detect;
    int shooting_max_iterations = 50;
    double shooting_tol = 1e-10;

    /// Throws InvalidArgument when a signal spec is invalid or the horizon
    /// ends before the last non-periodic transition.
    void validate() const;
    bool operator==(const ScenarioConfig&) const = default;
};

/// "dip", "buffer" or "sensitivity"; throws InvalidArgument for anything else.
ScenarioConfig default_scenario(const std::string& name);

/// Stationary point for inputs frozen at time t (control coupling included).
Eigen::VectorXd frozen_equilibrium(const ScenarioConfig& cfg, double t);

/// Equilibrium of the frozen system at the period-averaged inputs.
Eigen::VectorXd mean_input_equilibrium(const ScenarioConfig& cfg);

struct DipReport {
    double baseline_x = 0.0;
    double min_x = 0.0;
    double t_min = 0.0;
    double dip_depth = 0.0;
    bool dip_detected = false;
    double overshoot_max = 0.0;
    double t_overshoot = 0.0;
    bool overshoot_detected = false;
    double final_x = 0.0;
    bool returned_to_baseline = false;
    /// Share of post-transient grid times where sign(dx/dt) = sign(x0(t) - x).
    double chase_fraction = 0.0;
    double t_transient = 0.0;
};

struct DipResult {
    DipReport report;
    Trajectory trajectory;
    std::vector<double> grid;       ///< uniform time grid
    std::vector<double> target_x0;  ///< instantaneous equilibrium x0(F(t), J(t)); NaN where infeasible
};

/// Throws for integration failures; a missing dip is reported, not thrown.
DipResult run_dip(const ScenarioConfig& cfg);

struct BufferingReport {
    double period = 0.0;
    int n_periods = 0;
    std::vector<Eigen::VectorXd> section;  ///< state at t = nT, n = 0..n_periods
    std::vector<double> displacement;      ///< |s_{n+1} - s_n|
    std::vector<double> x_min, x_max, y_min, y_max;
    bool locked = false;
    int lock_period = -1;
    double contraction_ratio = 0.0;
    bool monotone_after_3 = false;
    double final_displacement = 0.0;
    /// max-norm distance between the last section point and the shooting fixed point
    double shooting_agreement = 0.0;
};

struct BufferingResult {
    BufferingReport report;
    AveragingReport averaging;
    PeriodicOrbitReport orbit;
    Trajectory trajectory;
};

BufferingResult run_buffering(const ScenarioConfig& cfg, int n_periods);

struct SensitivityRow {
    std::string claim;
    std::string response;       ///< "y0", "x0", "u0", "v0"
    std::string driver;         ///< control combination the claim is stated in
    std::string perturbation;   ///< which controls were moved
    double driver_change = 0.0;
    double response_change = 0.0;
    int claimed_relation = 0;   ///< +1: response moves with the driver, -1: against it
    int observed_relation = 0;
    bool testable = false;
    bool matches = false;
};

struct SensitivityTable {
    EquilibriumReport base;
    std::vector<SensitivityRow> rows;
    bool all_match = false;
};

SensitivityTable run_sensitivity_4d(const ScenarioConfig& cfg, double delta);

}  // namespace lactodyn
