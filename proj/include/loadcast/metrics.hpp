#pragma once

#include "loadcast/time.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace loadcast {

/// Weights for the operational error metrics. Errors are actual - predicted,
/// so a positive error is an under-prediction.
struct MetricConfig {
    double under_penalty = 2.0;  // alpha, >= 1
    std::vector<int> peak_hours{6, 7, 8, 9, 17, 18, 19, 20, 21, 22};
    double peak_weight = 2.0;  // beta, >= 1
    double composite_asymmetric_weight = 0.5;
    double composite_time_weight = 0.5;

    void validate() const;
    bool operator==(const MetricConfig&) const = default;
};

struct StandardMetrics {
    double mse;
    double mae;
    double rmse;
};

StandardMetrics standard_metrics(std::span<const double> actual, std::span<const double> predicted);

/// mean(w_i |e_i|), w_i = alpha for under-predictions, else 1.
double asymmetric_error(std::span<const double> actual, std::span<const double> predicted, double alpha);

/// mean(v_i |e_i|), v_i = beta when the hour is a peak hour, else 1.
/// Divides by n, not by the weight sum.
double time_weighted_error(std::span<const double> actual, std::span<const double> predicted,
                           std::span<const Timestamp> timestamps, std::span<const int> peak_hours, double beta);

double composite_metric(double asymmetric, double time_weighted, double w_asymmetric, double w_time);

struct MetricsReport {
    std::string model;
    double mse = 0.0;
    double mae = 0.0;
    double rmse = 0.0;
    double asymmetric = 0.0;
    double time_weighted = 0.0;
    double composite = 0.0;
    std::size_t n = 0;
    MetricConfig config;
};

MetricsReport evaluate_metrics(std::string model, std::span<const double> actual,
                               std::span<const double> predicted, std::span<const Timestamp> timestamps,
                               const MetricConfig& config);

struct MetricImprovement {
    std::string metric;
    double baseline;
    double model;
    /// 100 * (baseline - model) / baseline; empty when baseline is 0.
    std::optional<double> reduction_pct;
};

struct ImprovementReport {
    std::string baseline_model;
    std::string model;
    std::vector<MetricImprovement> rows;  // mse, mae, rmse, asymmetric, time_weighted, composite
};

double reduction_percent(double baseline, double model);
ImprovementReport improvement_report(const MetricsReport& baseline, const MetricsReport& model);

nlohmann::json to_json(const MetricConfig& c);
MetricConfig metric_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const MetricsReport& r);
MetricsReport metrics_report_from_json(const nlohmann::json& j);

/// `metric,svr,persistence,reduction_pct`
std::string comparison_csv(const ImprovementReport& report);

}  // namespace loadcast
