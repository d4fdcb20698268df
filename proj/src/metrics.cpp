#include "loadcast/metrics.hpp"

#include "loadcast/error.hpp"
#include "loadcast/io.hpp"

#include <algorithm>
#include <cmath>

namespace loadcast {

void MetricConfig::validate() const {
    if (!(under_penalty >= 1.0)) throw InvalidInput("metrics: under_penalty must be >= 1");
    if (!(peak_weight >= 1.0)) throw InvalidInput("metrics: peak_weight must be >= 1");
    for (const int h : peak_hours) {
        if (h < 0 || h > 23) throw InvalidInput("metrics: peak hour " + std::to_string(h) + " outside 0..23");
    }
    if (!(composite_asymmetric_weight >= 0.0) || !(composite_time_weight >= 0.0) ||
        std::abs(composite_asymmetric_weight + composite_time_weight - 1.0) > 1e-12) {
        throw InvalidInput("metrics: composite weights must be non-negative and sum to 1");
    }
}

namespace {

void check_pair(std::span<const double> actual, std::span<const double> predicted) {
    if (actual.size() != predicted.size()) throw InvalidInput("metrics: actual and predicted lengths differ");
    if (actual.empty()) throw InvalidInput("metrics: empty input");
}

}  // namespace

StandardMetrics standard_metrics(std::span<const double> actual, std::span<const double> predicted) {
    check_pair(actual, predicted);
    double se = 0.0, ae = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        const double e = actual[i] - predicted[i];
        se += e * e;
        ae += std::abs(e);
    }
    const auto n = static_cast<double>(actual.size());
    const double mse = se / n;
    return {mse, ae / n, std::sqrt(mse)};
}

double asymmetric_error(std::span<const double> actual, std::span<const double> predicted, double alpha) {
    check_pair(actual, predicted);
    if (!(alpha >= 1.0)) throw InvalidInput("asymmetric_error: alpha must be >= 1");
    double sum = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        const double e = actual[i] - predicted[i];
        sum += (predicted[i] < actual[i] ? alpha : 1.0) * std::abs(e);
    }
    return sum / static_cast<double>(actual.size());
}

double time_weighted_error(std::span<const double> actual, std::span<const double> predicted,
                           std::span<const Timestamp> timestamps, std::span<const int> peak_hours, double beta) {
    check_pair(actual, predicted);
    if (timestamps.size() != actual.size()) throw InvalidInput("time_weighted_error: timestamps misaligned");
    if (!(beta >= 1.0)) throw InvalidInput("time_weighted_error: beta must be >= 1");
    bool peak[24] = {};
    for (const int h : peak_hours) {
        if (h < 0 || h > 23) throw InvalidInput("time_weighted_error: peak hour outside 0..23");
        peak[h] = true;
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        const int h = calendar_fields(timestamps[i]).hour;
        sum += (peak[h] ? beta : 1.0) * std::abs(actual[i] - predicted[i]);
    }
    return sum / static_cast<double>(actual.size());
}

double composite_metric(double asymmetric, double time_weighted, double w_asymmetric, double w_time) {
    if (!(w_asymmetric >= 0.0) || !(w_time >= 0.0) || std::abs(w_asymmetric + w_time - 1.0) > 1e-12) {
        throw InvalidInput("composite_metric: weights must be non-negative and sum to 1");
    }
    return w_asymmetric * asymmetric + w_time * time_weighted;
}

MetricsReport evaluate_metrics(std::string model, std::span<const double> actual,
                               std::span<const double> predicted, std::span<const Timestamp> timestamps,
                               const MetricConfig& config) {
    config.validate();
    const StandardMetrics s = standard_metrics(actual, predicted);
    MetricsReport r;
    r.model = std::move(model);
    r.mse = s.mse;
    r.mae = s.mae;
    r.rmse = s.rmse;
    r.asymmetric = asymmetric_error(actual, predicted, config.under_penalty);
    r.time_weighted = time_weighted_error(actual, predicted, timestamps, config.peak_hours, config.peak_weight);
    r.composite = composite_metric(r.asymmetric, r.time_weighted, config.composite_asymmetric_weight,
                                   config.composite_time_weight);
    r.n = actual.size();
    r.config = config;
    return r;
}

double reduction_percent(double baseline, double model) {
    return 100.0 * (baseline - model) / baseline;
}

ImprovementReport improvement_report(const MetricsReport& baseline, const MetricsReport& model) {
    if (!(baseline.config == model.config)) throw InvalidInput("improvement_report: metric configs differ");
    if (baseline.n != model.n) throw InvalidInput("improvement_report: sample counts differ");
    ImprovementReport out;
    out.baseline_model = baseline.model;
    out.model = model.model;
    const auto add = [&](const char* name, double b, double m) {
        std::optional<double> pct;
        if (b != 0.0) pct = reduction_percent(b, m);
        out.rows.push_back({name, b, m, pct});
    };
    add("mse", baseline.mse, model.mse);
    add("mae", baseline.mae, model.mae);
    add("rmse", baseline.rmse, model.rmse);
    add("asymmetric", baseline.asymmetric, model.asymmetric);
    add("time_weighted", baseline.time_weighted, model.time_weighted);
    add("composite", baseline.composite, model.composite);
    return out;
}

nlohmann::json to_json(const MetricConfig& c) {
    return {{"under_penalty", c.under_penalty},
            {"peak_hours", c.peak_hours},
            {"peak_weight", c.peak_weight},
            {"composite_weights", {c.composite_asymmetric_weight, c.composite_time_weight}}};
}

MetricConfig metric_config_from_json(const nlohmann::json& j) {
    MetricConfig c;
    c.under_penalty = j.value("under_penalty", c.under_penalty);
    c.peak_hours = j.value("peak_hours", c.peak_hours);
    c.peak_weight = j.value("peak_weight", c.peak_weight);
    if (j.contains("composite_weights")) {
        const auto w = j.at("composite_weights").get<std::vector<double>>();
        if (w.size() != 2) throw InvalidInput("metrics: composite_weights needs two entries");
        c.composite_asymmetric_weight = w[0];
        c.composite_time_weight = w[1];
    }
    c.validate();
    return c;
}

nlohmann::json to_json(const MetricsReport& r) {
    return {{"model", r.model},
            {"n", r.n},
            {"mse", r.mse},
            {"mae", r.mae},
            {"rmse", r.rmse},
            {"asymmetric", r.asymmetric},
            {"time_weighted", r.time_weighted},
            {"composite", r.composite},
            {"config", to_json(r.config)}};
}

MetricsReport metrics_report_from_json(const nlohmann::json& j) {
    MetricsReport r;
    r.model = j.at("model").get<std::string>();
    r.n = j.at("n").get<std::size_t>();
    r.mse = j.at("mse").get<double>();
    r.mae = j.at("mae").get<double>();
    r.rmse = j.at("rmse").get<double>();
    r.asymmetric = j.at("asymmetric").get<double>();
    r.time_weighted = j.at("time_weighted").get<double>();
    r.composite = j.at("composite").get<double>();
    r.config = metric_config_from_json(j.at("config"));
    return r;
}

std::string comparison_csv(const ImprovementReport& report) {
    std::string out = "metric," + report.model + "," + report.baseline_model + ",reduction_pct\n";
    for (const auto& row : report.rows) {
        out += row.metric + "," + io::fixed(row.model, 6) + "," + io::fixed(row.baseline, 6) + ",";
        out += row.reduction_pct ? io::fixed(*row.reduction_pct, 4) : std::string("nan");
        out += "\n";
    }
    return out;
}

}  // namespace loadcast
