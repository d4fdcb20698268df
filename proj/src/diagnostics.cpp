#include "loadcast/diagnostics.hpp"

#include "loadcast/error.hpp"
#include "loadcast/io.hpp"

#include <cmath>

namespace loadcast {

ResidualSeries ResidualSeries::from(std::span<const Timestamp> ts, std::span<const double> actual,
                                    std::span<const double> predicted) {
    if (ts.size() != actual.size() || actual.size() != predicted.size()) {
        throw InvalidInput("residuals: misaligned inputs");
    }
    ResidualSeries r;
    r.timestamps.assign(ts.begin(), ts.end());
    r.residuals.resize(actual.size());
    for (std::size_t i = 0; i < actual.size(); ++i) {
        r.residuals[i] = actual[i] - predicted[i];
        if (!std::isfinite(r.residuals[i])) throw InvalidInput("residuals: non-finite value");
    }
    return r;
}

HeatmapGrid residual_heatmap(const ResidualSeries& r) {
    if (r.residuals.empty()) throw InvalidInput("residual_heatmap: empty residual series");
    if (r.timestamps.size() != r.residuals.size()) throw InvalidInput("residual_heatmap: misaligned inputs");
    std::array<std::array<double, 24>, 7> sums{};
    HeatmapGrid grid;
    for (std::size_t i = 0; i < r.residuals.size(); ++i) {
        const CalendarFields c = calendar_fields(r.timestamps[i]);
        sums[c.day_of_week][c.hour] += r.residuals[i];
        ++grid.cells[c.day_of_week][c.hour].count;
    }
    for (int d = 0; d < 7; ++d) {
        for (int h = 0; h < 24; ++h) {
            auto& cell = grid.cells[d][h];
            if (cell.count > 0) cell.mean_residual = sums[d][h] / static_cast<double>(cell.count);
        }
    }
    return grid;
}

AcfResult autocorrelation(std::span<const double> r, int max_lag) {
    if (max_lag < 0) throw InvalidInput("autocorrelation: max_lag must be >= 0");
    const std::size_t n = r.size();
    if (n <= static_cast<std::size_t>(max_lag)) {
        throw InvalidInput("autocorrelation: need more than max_lag (" + std::to_string(max_lag) +
                           ") samples, got " + std::to_string(n));
    }
    double mean = 0.0;
    for (const double v : r) mean += v;
    mean /= static_cast<double>(n);
    double denom = 0.0;
    for (const double v : r) denom += (v - mean) * (v - mean);
    if (!(denom > 0.0)) throw DegenerateInput("autocorrelation: residuals have zero variance");

    AcfResult out;
    out.n = n;
    out.acf.resize(static_cast<std::size_t>(max_lag) + 1);
    out.acf[0] = 1.0;
    for (int k = 1; k <= max_lag; ++k) {
        double num = 0.0;
        for (std::size_t t = 0; t + static_cast<std::size_t>(k) < n; ++t) {
            num += (r[t] - mean) * (r[t + static_cast<std::size_t>(k)] - mean);
        }
        out.acf[static_cast<std::size_t>(k)] = num / denom;
    }
    out.confidence_halfwidth = 1.96 / std::sqrt(static_cast<double>(n));
    return out;
}

WhitenessSummary whiteness_summary(const AcfResult& a) {
    int exceed = 0;
    for (std::size_t k = 1; k < a.acf.size(); ++k) {
        if (std::abs(a.acf[k]) > a.confidence_halfwidth) ++exceed;
    }
    const int allowed = static_cast<int>(std::ceil(0.1 * a.max_lag()));
    return {exceed, exceed <= allowed};
}

std::string heatmap_csv(const HeatmapGrid& grid) {
    std::string out = "day_of_week,hour,mean_residual,count\n";
    for (int d = 0; d < 7; ++d) {
        for (int h = 0; h < 24; ++h) {
            const auto& c = grid.cells[d][h];
            out += std::to_string(d) + "," + std::to_string(h) + "," + io::fixed(c.mean_residual, 6) + "," +
                   std::to_string(c.count) + "\n";
        }
    }
    return out;
}

std::string acf_csv(const AcfResult& a) {
    std::string out = "lag,acf,conf_halfwidth\n";
    for (std::size_t k = 0; k < a.acf.size(); ++k) {
        out += std::to_string(k) + "," + io::fixed(a.acf[k], 8) + "," + io::fixed(a.confidence_halfwidth, 8) + "\n";
    }
    return out;
}

}  // namespace loadcast
