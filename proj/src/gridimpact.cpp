#include "loadcast/gridimpact.hpp"

#include "loadcast/error.hpp"
#include "loadcast/io.hpp"

#include <algorithm>
#include <cmath>

namespace loadcast {

using cd = std::complex<double>;

namespace {

/// Tree orientation from the slack: BFS order, parent bus and feeding line.
struct Orientation {
    std::vector<std::size_t> order;
    std::vector<std::size_t> parent;
    std::vector<std::size_t> feeder_line;
};

Orientation orient(const NetworkModel& net) {
    const std::size_t n = net.n_buses;
    std::vector<std::vector<std::size_t>> adjacent(n);
    for (std::size_t k = 0; k < net.lines.size(); ++k) {
        adjacent[net.lines[k].from].push_back(k);
        adjacent[net.lines[k].to].push_back(k);
    }
    Orientation o;
    o.parent.assign(n, n);
    o.feeder_line.assign(n, net.lines.size());
    std::vector<bool> seen(n, false);
    o.order.push_back(0);
    seen[0] = true;
    for (std::size_t head = 0; head < o.order.size(); ++head) {
        const std::size_t b = o.order[head];
        for (const std::size_t k : adjacent[b]) {
            const std::size_t other = net.lines[k].from == b ? net.lines[k].to : net.lines[k].from;
            if (seen[other]) continue;
            seen[other] = true;
            o.parent[other] = b;
            o.feeder_line[other] = k;
            o.order.push_back(other);
        }
    }
    if (o.order.size() != n) throw InvalidInput("network: not connected (not a tree rooted at the slack)");
    return o;
}

}  // namespace

void NetworkModel::validate() const {
    if (!(nominal_kv > 0.0)) throw InvalidInput("network: nominal voltage must be > 0");
    if (n_buses < 1) throw InvalidInput("network: needs at least the slack bus");
    if (lines.size() != n_buses - 1) throw InvalidInput("network: not radial (|lines| != |buses| - 1)");
    if (power_factor.size() != n_buses) throw InvalidInput("network: one power factor per bus required");
    for (const double pf : power_factor) {
        if (!(pf > 0.0 && pf <= 1.0)) throw InvalidInput("network: power factor must lie in (0, 1]");
    }
    for (const auto& l : lines) {
        if (l.from >= n_buses || l.to >= n_buses || l.from == l.to) throw InvalidInput("network: bad line endpoints");
        if (!(l.resistance_ohm >= 0.0) || !(l.reactance_ohm >= 0.0)) {
            throw InvalidInput("network: line impedance must be >= 0");
        }
        if (!(l.ampacity_a > 0.0)) throw InvalidInput("network: ampacity must be > 0");
    }
    orient(*this);
}

NetworkModel build_kerber_feeder(std::size_t n_loads, double segment_length_m, double power_factor) {
    if (n_loads < 1) throw InvalidInput("kerber feeder: n_loads must be >= 1");
    if (!(segment_length_m > 0.0)) throw InvalidInput("kerber feeder: segment length must be > 0");
    NetworkModel net;
    net.n_buses = n_loads + 1;
    net.power_factor.assign(net.n_buses, power_factor);
    const double km = segment_length_m / 1000.0;
    for (std::size_t b = 1; b <= n_loads; ++b) {
        net.lines.push_back({b - 1, b, kOverheadResistanceOhmPerKm * km, kOverheadReactanceOhmPerKm * km,
                             kOverheadAmpacityA});
    }
    net.validate();
    return net;
}

double PowerFlowResult::min_voltage() const {
    return bus_voltages.empty() ? 1.0 : *std::min_element(bus_voltages.begin(), bus_voltages.end());
}

double PowerFlowResult::max_loading() const {
    return line_loading.empty() ? 0.0 : *std::max_element(line_loading.begin(), line_loading.end());
}


PowerFlowResult run_power_flow(const NetworkModel& net, std::span<const double> bus_loads_kw,
                               const PowerFlowOptions& options) {
    net.validate();
    const std::size_t n = net.n_buses;
    if (bus_loads_kw.size() != n) throw InvalidInput("power flow: one load per bus required");
    for (const double p : bus_loads_kw) {
        if (!std::isfinite(p) || p < 0.0) throw InvalidInput("power flow: loads must be finite and >= 0");
    }
    const Orientation topo = orient(net);

    // Per-phase quantities in volts, amperes and volt-amperes.
    const double v_base = net.nominal_kv * 1000.0 / std::sqrt(3.0);
    std::vector<cd> s_phase(n);
    for (std::size_t b = 0; b < n; ++b) {
        const double p = bus_loads_kw[b] * 1000.0 / 3.0;
        const double pf = net.power_factor[b];
        const double q = pf >= 1.0 ? 0.0 : p * std::tan(std::acos(pf));
        s_phase[b] = cd(p, q);
    }
    std::vector<cd> z(net.lines.size());
    for (std::size_t k = 0; k < net.lines.size(); ++k) z[k] = cd(net.lines[k].resistance_ohm, net.lines[k].reactance_ohm);

    std::vector<cd> v(n, cd(v_base, 0.0));
    std::vector<cd> i_line(net.lines.size());
    std::vector<cd> i_bus(n);

    const auto backward = [&] {
        for (std::size_t b = 0; b < n; ++b) i_bus[b] = b == 0 ? cd{} : std::conj(s_phase[b] / v[b]);
        for (std::size_t idx = n; idx-- > 1;) {
            const std::size_t b = topo.order[idx];
            i_line[topo.feeder_line[b]] = i_bus[b];
            i_bus[topo.parent[b]] += i_bus[b];
        }
    };

    PowerFlowResult out;
    for (int it = 1; it <= options.max_iter; ++it) {
        backward();
        double max_change = 0.0;
        for (std::size_t idx = 1; idx < n; ++idx) {
            const std::size_t b = topo.order[idx];
            const std::size_t k = topo.feeder_line[b];
            const cd next = v[topo.parent[b]] - z[k] * i_line[k];
            max_change = std::max(max_change, std::abs(next - v[b]) / v_base);
            v[b] = next;
        }
        out.iterations = it;
        if (max_change < options.tol_pu) {
            out.converged = true;
            break;
        }
    }
    // Currents consistent with the final voltages.
    backward();

    out.voltages_pu.resize(n);
    out.bus_voltages.resize(n);
    for (std::size_t b = 0; b < n; ++b) {
        out.voltages_pu[b] = v[b] / v_base;
        out.bus_voltages[b] = std::abs(out.voltages_pu[b]);
    }
    out.voltages_pu[0] = cd(1.0, 0.0);
    out.bus_voltages[0] = 1.0;

    out.line_currents.resize(net.lines.size());
    out.line_loading.resize(net.lines.size());
    cd losses{};
    for (std::size_t k = 0; k < net.lines.size(); ++k) {
        const double amps = std::abs(i_line[k]);
        out.line_currents[k] = amps;
        out.line_loading[k] = 100.0 * amps / net.lines[k].ampacity_a;
        losses += 3.0 * z[k] * amps * amps;
    }
    out.losses_kw = losses.real() / 1000.0;
    out.losses_kvar = losses.imag() / 1000.0;

    cd slack_current{};
    for (std::size_t b = 1; b < n; ++b) {
        if (topo.parent[b] == 0) slack_current += i_line[topo.feeder_line[b]];
    }
    // A load sitting on the slack bus is served directly.
    out.slack_power_kva = (3.0 * v[0] * std::conj(slack_current) + 3.0 * s_phase[0]) / 1000.0;

    // Bus power mismatch with branch currents re-derived from the voltages
    // (zero-impedance branches fall back to the swept current).
    std::vector<cd> injection(n);
    for (std::size_t b = 1; b < n; ++b) {
        const std::size_t k = topo.feeder_line[b];
        const cd current = std::abs(z[k]) > 0.0 ? (v[topo.parent[b]] - v[b]) / z[k] : i_line[k];
        injection[b] -= current;
        injection[topo.parent[b]] += current;
    }
    const double s_base = options.base_mva * 1e6;
    double mismatch = 0.0;
    for (std::size_t b = 1; b < n; ++b) {
        const cd s_in = 3.0 * v[b] * std::conj(-injection[b]);
        mismatch = std::max(mismatch, std::abs(s_in - 3.0 * s_phase[b]) / s_base);
    }
    out.max_mismatch_pu = mismatch;
    return out;
}

std::vector<double> uniform_allocation(const NetworkModel& net) {
    std::vector<double> w(net.n_buses, 0.0);
    if (net.n_buses < 2) return w;
    std::fill(w.begin() + 1, w.end(), 1.0 / static_cast<double>(net.n_buses - 1));
    return w;
}

GridImpactReport impact_report(const NetworkModel& net, const LoadSeries& actual, std::span<const double> forecast,
                               std::span<const double> allocation, const ImpactOptions& options) {
    net.validate();
    if (forecast.size() != actual.size()) throw InvalidInput("impact: forecast and actual lengths differ");
    if (allocation.size() != net.n_buses) throw InvalidInput("impact: one allocation weight per bus required");
    double total = 0.0;
    for (const double w : allocation) {
        if (!(w >= 0.0)) throw InvalidInput("impact: allocation weights must be >= 0");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-9) throw InvalidInput("impact: allocation weights must sum to 1");

    const auto violates = [&](const PowerFlowResult& r) {
        return r.min_voltage() < options.min_voltage_pu || r.max_loading() > options.max_loading_pct;
    };
    const auto bus_loads = [&](double system_mw) {
        std::vector<double> kw(net.n_buses);
        const double feeder_kw = std::max(0.0, system_mw) * options.feeder_kw_per_system_mw;
        for (std::size_t b = 0; b < net.n_buses; ++b) kw[b] = feeder_kw * allocation[b];
        return kw;
    };

    GridImpactReport report;
    report.steps.reserve(actual.size());
    for (std::size_t t = 0; t < actual.size(); ++t) {
        const PowerFlowResult ra = run_power_flow(net, bus_loads(actual.values()[t]), options.power_flow);
        const PowerFlowResult rf = run_power_flow(net, bus_loads(forecast[t]), options.power_flow);
        ImpactStep s{actual.timestamps()[t], ra.min_voltage(), rf.min_voltage(), ra.max_loading(), rf.max_loading(),
                     violates(ra), violates(rf), ra.converged && rf.converged};
        report.actual_violations += s.violation_actual;
        report.forecast_violations += s.violation_forecast;
        report.correctly_flagged += s.violation_actual && s.violation_forecast;
        report.missed += s.violation_actual && !s.violation_forecast;
        report.false_alarms += !s.violation_actual && s.violation_forecast;
        report.nonconverged_steps += !s.converged;
        report.steps.push_back(s);
    }
    return report;
}

std::string impact_csv(const GridImpactReport& report) {
    std::string out =
        "timestamp,min_v_actual,min_v_forecast,max_loading_actual,max_loading_forecast,violation_actual,"
        "violation_forecast\n";
    for (const auto& s : report.steps) {
        out += format_iso8601(s.timestamp) + "," + io::fixed(s.min_v_actual, 8) + "," + io::fixed(s.min_v_forecast, 8) +
               "," + io::fixed(s.max_loading_actual, 6) + "," + io::fixed(s.max_loading_forecast, 6) + "," +
               (s.violation_actual ? "1" : "0") + "," + (s.violation_forecast ? "1" : "0") + "\n";
    }
    return out;
}

nlohmann::json impact_summary_json(const GridImpactReport& r) {
    return {{"steps", r.steps.size()},
            {"actual_violations", r.actual_violations},
            {"forecast_violations", r.forecast_violations},
            {"correctly_flagged", r.correctly_flagged},
            {"missed", r.missed},
            {"false_alarms", r.false_alarms},
            {"nonconverged_steps", r.nonconverged_steps}};
}

}  // namespace loadcast
