#include "loadcast/loadgen.hpp"

#include "loadcast/error.hpp"
#include "loadcast/io.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace loadcast {

using namespace std::chrono;

LoadSeries::LoadSeries(std::vector<Timestamp> timestamps, std::vector<double> values)
    : timestamps_(std::move(timestamps)), values_(std::move(values)) {
    if (timestamps_.size() != values_.size()) {
        throw InvalidInput("load series: timestamp and value counts differ");
    }
    for (std::size_t i = 1; i < timestamps_.size(); ++i) {
        if (timestamps_[i] - timestamps_[i - 1] != hours{1}) {
            throw InvalidInput("load series: timestamps must advance by exactly one hour (at " +
                               format_iso8601(timestamps_[i]) + ")");
        }
    }
    for (const double v : values_) {
        if (!std::isfinite(v)) throw InvalidInput("load series: non-finite value");
    }
}

LoadSeries LoadSeries::slice(std::size_t first, std::size_t last) const {
    LoadSeries out;
    out.timestamps_.assign(timestamps_.begin() + static_cast<std::ptrdiff_t>(first),
                           timestamps_.begin() + static_cast<std::ptrdiff_t>(last));
    out.values_.assign(values_.begin() + static_cast<std::ptrdiff_t>(first),
                       values_.begin() + static_cast<std::ptrdiff_t>(last));
    return out;
}

GeneratorConfig GeneratorConfig::defaults() {
    GeneratorConfig c;
    c.start = sys_days{2023y / October / 1};
    c.end = sys_days{2025y / February / 1};
    return c;
}

void GeneratorConfig::validate() const {
    if (floor<hours>(start) != start || floor<hours>(end) != end) {
        throw InvalidInput("generator: start and end must be hour-aligned");
    }
    if (end <= start) throw InvalidInput("generator: end must be after start");
    if (!(base_mw > 0.0)) throw InvalidInput("generator: base_mw must be > 0");
    if (!(daily_amp_mw >= 0.0) || !(seasonal_amp_mw >= 0.0) || !(noise_sigma_mw >= 0.0)) {
        throw InvalidInput("generator: amplitudes and noise sigma must be >= 0");
    }
    if (!(weekend_factor > 0.0 && weekend_factor <= 1.5)) {
        throw InvalidInput("generator: weekend_factor must lie in (0, 1.5]");
    }
}

double deterministic_load(const GeneratorConfig& config, Timestamp t) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    const CalendarFields cal = calendar_fields(t);
    const double daily = config.daily_amp_mw * std::sin(two_pi * (cal.hour - 7) / 24.0);
    const double weekly = cal.day_of_week >= 5 ? config.base_mw * (config.weekend_factor - 1.0) : 0.0;
    const double seasonal = config.seasonal_amp_mw * std::sin(two_pi * (cal.day_of_year - 15) / 365.25);
    return config.base_mw + daily + weekly + seasonal;
}

namespace {

/// Standard normals from a 64-bit Mersenne Twister via Box–Muller; both
/// variates of each pair are used.
class NormalStream {
public:
    explicit NormalStream(std::uint64_t seed) : engine_(seed) {}

    double next() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        // u1 in (0, 1], u2 in [0, 1), 53-bit resolution.
        const double u1 = static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
        const double u2 = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace

LoadSeries generate_profile(const GeneratorConfig& config) {
    config.validate();
    const Timestamp first = floor<hours>(config.start);
    const auto n = static_cast<std::size_t>((floor<hours>(config.end) - first).count());

    NormalStream noise(config.seed);
    const double floor_mw = 0.1 * config.base_mw;
    std::vector<Timestamp> ts(n);
    std::vector<double> values(n);
    for (std::size_t i = 0; i < n; ++i) {
        ts[i] = first + hours{static_cast<long>(i)};
        double v = deterministic_load(config, ts[i]);
        if (config.noise_sigma_mw > 0.0) v += config.noise_sigma_mw * noise.next();
        values[i] = std::max(v, floor_mw);
    }
    return LoadSeries(std::move(ts), std::move(values));
}

TrainTestSplit split_train_test(const LoadSeries& series, double test_fraction) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw InvalidInput("split: test_fraction must lie in (0, 1)");
    }
    if (series.size() < 10) throw InvalidInput("split: series needs at least 10 points");
    const std::size_t n = series.size();
    // The 1e-9 slack keeps e.g. 100 * (1 - 0.2) from rounding up to 81.
    auto n_train =
        static_cast<std::size_t>(std::ceil(static_cast<double>(n) * (1.0 - test_fraction) - 1e-9));
    n_train = std::min(n_train, n - 1);
    return {series.slice(0, n_train), series.slice(n_train, n)};
}

std::string series_to_csv(const LoadSeries& series) {
    std::string out = "timestamp,load_mw\n";
    out.reserve(out.size() + series.size() * 34);
    for (std::size_t i = 0; i < series.size(); ++i) {
        out += format_iso8601(series.timestamps()[i]);
        out += ',';
        out += io::fixed(series.values()[i], 6);
        out += '\n';
    }
    return out;
}

LoadSeries series_from_csv(std::string_view text) {
    const auto rows = io::parse_csv(text);
    if (rows.empty() || rows[0].size() != 2 || rows[0][0] != "timestamp" || rows[0][1] != "load_mw") {
        throw InvalidInput("series CSV: expected header 'timestamp,load_mw'");
    }
    std::vector<Timestamp> ts;
    std::vector<double> values;
    ts.reserve(rows.size() - 1);
    values.reserve(rows.size() - 1);
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() != 2) throw InvalidInput("series CSV: row " + std::to_string(r) + " needs 2 fields");
        ts.push_back(parse_hour(rows[r][0]));
        values.push_back(io::parse_double(rows[r][1]));
    }
    return LoadSeries(std::move(ts), std::move(values));
}

nlohmann::json to_json(const GeneratorConfig& c) {
    return {
        {"start", format_iso8601(c.start)},
        {"end", format_iso8601(c.end)},
        {"base_mw", c.base_mw},
        {"daily_amp_mw", c.daily_amp_mw},
        {"weekend_factor", c.weekend_factor},
        {"seasonal_amp_mw", c.seasonal_amp_mw},
        {"noise_sigma_mw", c.noise_sigma_mw},
        {"seed", c.seed},
    };
}

GeneratorConfig generator_config_from_json(const nlohmann::json& j) {
    GeneratorConfig c = GeneratorConfig::defaults();
    if (j.contains("start")) c.start = parse_iso8601(j.at("start").get<std::string>());
    if (j.contains("end")) c.end = parse_iso8601(j.at("end").get<std::string>());
    c.base_mw = j.value("base_mw", c.base_mw);
    c.daily_amp_mw = j.value("daily_amp_mw", c.daily_amp_mw);
    c.weekend_factor = j.value("weekend_factor", c.weekend_factor);
    c.seasonal_amp_mw = j.value("seasonal_amp_mw", c.seasonal_amp_mw);
    c.noise_sigma_mw = j.value("noise_sigma_mw", c.noise_sigma_mw);
    c.seed = j.value("seed", c.seed);
    return c;
}

nlohmann::json generator_metadata(const GeneratorConfig& config) {
    return {
        {"generator", to_json(config)},
        {"prng", kPrngName},
        {"model", "base + daily*sin(2pi(h-7)/24) + weekend + seasonal*sin(2pi(d-15)/365.25) + noise"},
        {"floor_mw", 0.1 * config.base_mw},
    };
}

}  // namespace loadcast
