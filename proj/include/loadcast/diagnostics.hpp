#pragma once

#include "loadcast/time.hpp"

#include <array>
#include <span>
#include <string>
#include <vector>

namespace loadcast {

/// actual - predicted (positive = under-prediction).
struct ResidualSeries {
    std::vector<Timestamp> timestamps;
    std::vector<double> residuals;

    static ResidualSeries from(std::span<const Timestamp> ts, std::span<const double> actual,
                               std::span<const double> predicted);
};

struct HeatmapCell {
    double mean_residual = 0.0;
    std::size_t count = 0;
    bool empty() const noexcept { return count == 0; }
};

/// Rows are day of week (0 = Monday), columns hour of day.
struct HeatmapGrid {
    std::array<std::array<HeatmapCell, 24>, 7> cells{};
};

HeatmapGrid residual_heatmap(const ResidualSeries& r);

struct AcfResult {
    std::vector<double> acf;  // lags 0..max_lag
    double confidence_halfwidth = 0.0;
    std::size_t n = 0;

    int max_lag() const noexcept { return static_cast<int>(acf.size()) - 1; }
};

/// Biased (1/n) sample autocorrelation with the +-1.96/sqrt(n) white-noise band.
AcfResult autocorrelation(std::span<const double> residuals, int max_lag = 50);

struct WhitenessSummary {
    int exceed_count;
    bool is_white;  // exceed_count <= ceil(0.1 * max_lag)
};

WhitenessSummary whiteness_summary(const AcfResult& a);

/// `day_of_week,hour,mean_residual,count`, 168 rows.
std::string heatmap_csv(const HeatmapGrid& grid);
/// `lag,acf,conf_halfwidth`
std::string acf_csv(const AcfResult& a);

}  // namespace loadcast
