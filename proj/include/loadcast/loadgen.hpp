#pragma once

#include "loadcast/time.hpp"

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace loadcast {

/// Hourly load series in MW. Timestamps are strictly increasing with a
/// constant one-hour step.
class LoadSeries {
public:
    LoadSeries() = default;
    /// Validates the hourly-step and finiteness invariants.
    LoadSeries(std::vector<Timestamp> timestamps, std::vector<double> values);

    std::size_t size() const noexcept { return values_.size(); }
    bool empty() const noexcept { return values_.empty(); }
    const std::vector<Timestamp>& timestamps() const& noexcept { return timestamps_; }
    const std::vector<double>& values() const& noexcept { return values_; }
    std::vector<Timestamp> timestamps() && noexcept { return std::move(timestamps_); }
    std::vector<double> values() && noexcept { return std::move(values_); }

    LoadSeries slice(std::size_t first, std::size_t last) const;

    bool operator==(const LoadSeries&) const = default;

private:
    std::vector<Timestamp> timestamps_;
    std::vector<double> values_;
};

struct GeneratorConfig {
    std::chrono::sys_seconds start;
    std::chrono::sys_seconds end;  // exclusive
    double base_mw = 100.0;
    double daily_amp_mw = 20.0;
    double weekend_factor = 0.9;
    double seasonal_amp_mw = 15.0;
    double noise_sigma_mw = 5.0;
    std::uint64_t seed = 0;

    /// 2023-10-01 .. 2025-02-01, so a 20 % test slice lands in late autumn/winter 2024.
    static GeneratorConfig defaults();
    void validate() const;
};

inline constexpr const char* kPrngName = "mt19937_64/box-muller";

/// Noise-free component of the profile at hour `t`.
double deterministic_load(const GeneratorConfig& config, Timestamp t);

LoadSeries generate_profile(const GeneratorConfig& config);

struct TrainTestSplit {
    LoadSeries train;
    LoadSeries test;
};

/// Chronological split; train gets the first ceil(n * (1 - test_fraction)) points.
TrainTestSplit split_train_test(const LoadSeries& series, double test_fraction);

// CSV: header `timestamp,load_mw`, ISO-8601 UTC, six decimals.
std::string series_to_csv(const LoadSeries& series);
LoadSeries series_from_csv(std::string_view text);

nlohmann::json generator_metadata(const GeneratorConfig& config);
nlohmann::json to_json(const GeneratorConfig& config);
GeneratorConfig generator_config_from_json(const nlohmann::json& j);

}  // namespace loadcast
