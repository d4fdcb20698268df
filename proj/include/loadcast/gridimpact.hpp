#pragma once

#include "loadcast/loadgen.hpp"

#include <complex>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace loadcast {

// Rural overhead-line class constants (4x70 mm^2 aerial cable).
inline constexpr double kOverheadResistanceOhmPerKm = 0.568;
inline constexpr double kOverheadReactanceOhmPerKm = 0.26;
inline constexpr double kOverheadAmpacityA = 270.0;

struct Line {
    std::size_t from;
    std::size_t to;
    double resistance_ohm;
    double reactance_ohm;
    double ampacity_a;
};

/// Balanced radial LV network; bus 0 is the slack.
struct NetworkModel {
    double nominal_kv = 0.4;  // line-to-line
    std::size_t n_buses = 0;
    std::vector<Line> lines;
    std::vector<double> power_factor;  // per bus, lagging

    /// Checks the tree topology and line data.
    void validate() const;
};

/// Slack bus followed by `n_loads` buses in a chain.
NetworkModel build_kerber_feeder(std::size_t n_loads = 14, double segment_length_m = 30.0,
                                 double power_factor = 0.95);

struct PowerFlowOptions {
    double tol_pu = 1e-10;
    int max_iter = 100;
    double base_mva = 1.0;  // power base for the mismatch check
};

struct PowerFlowResult {
    std::vector<std::complex<double>> voltages_pu;  // complex, slack = 1 + 0j
    std::vector<double> bus_voltages;               // |V| in pu
    std::vector<double> line_currents;              // A
    std::vector<double> line_loading;               // percent of ampacity
    double losses_kw = 0.0;
    double losses_kvar = 0.0;
    std::complex<double> slack_power_kva;
    double max_mismatch_pu = 0.0;
    bool converged = false;
    int iterations = 0;

    double min_voltage() const;
    double max_loading() const;
};

/// Backward current summation / forward voltage drop with constant-power loads.
PowerFlowResult run_power_flow(const NetworkModel& net, std::span<const double> bus_loads_kw,
                               const PowerFlowOptions& options = {});

struct ImpactOptions {
    double feeder_kw_per_system_mw = 1.0;
    double min_voltage_pu = 0.95;
    double max_loading_pct = 100.0;
    PowerFlowOptions power_flow;
};

struct ImpactStep {
    Timestamp timestamp;
    double min_v_actual;
    double min_v_forecast;
    double max_loading_actual;
    double max_loading_forecast;
    bool violation_actual;
    bool violation_forecast;
    bool converged;  // both solves
};

struct GridImpactReport {
    std::vector<ImpactStep> steps;
    std::size_t actual_violations = 0;
    std::size_t forecast_violations = 0;
    std::size_t correctly_flagged = 0;
    std::size_t missed = 0;        // actual violates, forecast does not
    std::size_t false_alarms = 0;  // forecast violates, actual does not
    std::size_t nonconverged_steps = 0;
};

/// Uniform weights over the non-slack buses (slack weight 0).
std::vector<double> uniform_allocation(const NetworkModel& net);

/// `allocation` has one weight per bus and sums to 1.
GridImpactReport impact_report(const NetworkModel& net, const LoadSeries& actual, std::span<const double> forecast,
                               std::span<const double> allocation, const ImpactOptions& options = {});

std::string impact_csv(const GridImpactReport& report);
nlohmann::json impact_summary_json(const GridImpactReport& report);

}  // namespace loadcast
