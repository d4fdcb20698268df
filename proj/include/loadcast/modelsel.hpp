#pragma once

#include "loadcast/features.hpp"
#include "loadcast/loadgen.hpp"
#include "loadcast/metrics.hpp"
#include "loadcast/svr.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace loadcast {

/// Expanding-window fold: train on [0, train_end), validate on
/// [train_end, validation_end).
struct Fold {
    std::size_t train_end;
    std::size_t validation_end;

    std::size_t validation_begin() const noexcept { return train_end; }
};

struct TimeSeriesSplits {
    std::size_t n_samples = 0;
    std::size_t n_splits = 0;
    std::vector<Fold> folds;
};

/// Validation block size v = floor(n / (n_splits + 1)); fold k trains on
/// [0, k v) and validates on [k v, (k + 1) v). Leftover samples join the last
/// validation block.
TimeSeriesSplits make_splits(std::size_t n_samples, std::size_t n_splits);

/// Grid axes. A gamma entry of std::nullopt means "scale":
/// 1 / (p * Var(X)) over the preprocessed training design matrix.
struct GridSpec {
    std::vector<double> c_values{1.0, 10.0, 100.0};
    std::vector<double> epsilon_values{0.1, 0.5, 1.0};
    std::vector<std::optional<double>> gamma_values{std::nullopt, 0.01, 0.1};

    void validate() const;
    std::size_t size() const noexcept {
        return c_values.size() * epsilon_values.size() * gamma_values.size();
    }
};

/// 1 / (p * Var(all entries)); 1 when the matrix has zero variance.
double scale_gamma(const Matrix& design);

struct GridCell {
    double c;
    double epsilon;
    double gamma;
    bool gamma_from_scale = false;
};

struct GridRow {
    GridCell cell;
    std::vector<double> fold_mse;
    std::vector<double> fold_composite;  // empty when no timestamps were given
    std::vector<bool> fold_converged;
    double mean_mse = 0.0;
    double mean_composite = 0.0;
};

struct GridSearchOptions {
    PipelineOptions pipeline;
    SvrParams solver;  // c/epsilon/gamma are overwritten per cell
    unsigned threads = 1;
    /// When set, each fold also reports the composite metric.
    std::span<const Timestamp> timestamps;
    MetricConfig metric_config;
};

struct GridSearchResult {
    std::vector<GridRow> table;  // grid order: C outer, epsilon, gamma inner
    std::size_t best_index = 0;
    GridCell best_params{};
    SvrModel best_model;
    std::size_t models_trained = 0;  // fold models + the refit
    std::vector<std::string> warnings;
};

GridSearchResult grid_search(const FeatureMatrix& x, std::span<const double> y, const GridSpec& grid,
                             const TimeSeriesSplits& splits, const GridSearchOptions& options = {});

/// Rolling persistence: prediction at t is the observed value at t - lag.
std::vector<double> persistence_forecast(const LoadSeries& history, int lag_hours,
                                         std::span<const Timestamp> horizon);

/// `c,epsilon,gamma,fold,val_mse`
std::string grid_report_csv(const GridSearchResult& result);
nlohmann::json grid_summary_json(const GridSearchResult& result);

nlohmann::json to_json(const GridSpec& grid);
GridSpec grid_spec_from_json(const nlohmann::json& j);

}  // namespace loadcast
