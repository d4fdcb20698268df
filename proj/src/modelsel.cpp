#include "loadcast/modelsel.hpp"

#include "loadcast/error.hpp"
#include "loadcast/io.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>
#include <tuple>

namespace loadcast {

TimeSeriesSplits make_splits(std::size_t n_samples, std::size_t n_splits) {
    if (n_splits < 1) throw InvalidInput("make_splits: n_splits must be >= 1");
    if (n_samples < 2 * (n_splits + 1)) {
        throw InvalidInput("make_splits: need at least " + std::to_string(2 * (n_splits + 1)) +
                           " samples for " + std::to_string(n_splits) + " splits");
    }
    const std::size_t v = n_samples / (n_splits + 1);
    TimeSeriesSplits s{n_samples, n_splits, {}};
    for (std::size_t k = 1; k <= n_splits; ++k) s.folds.push_back({k * v, (k + 1) * v});
    s.folds.back().validation_end = n_samples;
    return s;
}

void GridSpec::validate() const {
    if (c_values.empty() || epsilon_values.empty() || gamma_values.empty()) {
        throw InvalidInput("grid: every axis needs at least one value");
    }
    for (const double c : c_values) {
        if (!(c > 0.0)) throw InvalidInput("grid: C values must be > 0");
    }
    for (const double e : epsilon_values) {
        if (!(e >= 0.0)) throw InvalidInput("grid: epsilon values must be >= 0");
    }
    for (const auto& g : gamma_values) {
        if (g && !(*g > 0.0)) throw InvalidInput("grid: gamma values must be > 0");
    }
}

double scale_gamma(const Matrix& design) {
    const auto& d = design.data();
    if (d.empty()) return 1.0;
    double mean = 0.0;
    for (const double v : d) mean += v;
    mean /= static_cast<double>(d.size());
    double var = 0.0;
    for (const double v : d) var += (v - mean) * (v - mean);
    var /= static_cast<double>(d.size());
    return var > 0.0 ? 1.0 / (static_cast<double>(design.cols()) * var) : 1.0;
}

namespace {

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (const double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

/// Runs fn(k) for k in [0, count) on up to `threads` workers.
template <typename Fn>
void parallel_for(std::size_t count, unsigned threads, Fn fn) {
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(count)));
    if (threads == 1) {
        for (std::size_t k = 0; k < count; ++k) fn(k);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t k = next++; k < count; k = next++) fn(k);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace

GridSearchResult grid_search(const FeatureMatrix& x, std::span<const double> y, const GridSpec& grid,
                             const TimeSeriesSplits& splits, const GridSearchOptions& options) {
    grid.validate();
    if (y.size() != x.rows()) throw InvalidInput("grid_search: X and y lengths differ");
    if (splits.n_samples != x.rows() || splits.folds.empty()) {
        throw InvalidInput("grid_search: splits do not cover X");
    }
    const bool with_composite = !options.timestamps.empty();
    if (with_composite && options.timestamps.size() != x.rows()) {
        throw InvalidInput("grid_search: timestamps misaligned with X");
    }

    // Resolve "scale" once, on the full training set's design matrix.
    double scale = 1.0;
    if (std::any_of(grid.gamma_values.begin(), grid.gamma_values.end(), [](const auto& g) { return !g; })) {
        const Preprocessor pre = Preprocessor::fit(x, options.pipeline.standardize, options.pipeline.poly_degree,
                                                   options.pipeline.include_interactions);
        scale = scale_gamma(pre.transform(x).values);
    }

    GridSearchResult result;
    for (const double c : grid.c_values) {
        for (const double e : grid.epsilon_values) {
            for (const auto& g : grid.gamma_values) {
                GridRow row;
                row.cell = {c, e, g ? *g : scale, !g};
                result.table.push_back(std::move(row));
            }
        }
    }

    const std::size_t n_folds = splits.folds.size();
    const std::size_t n_work = result.table.size() * n_folds;
    const unsigned threads = std::max(1u, options.threads);
    std::vector<double> mse(n_work), composite(n_work);
    std::vector<char> converged(n_work);

    SvrParams base = options.solver;
    base.cache_bytes = std::max<std::size_t>(base.cache_bytes / threads, 1);

    parallel_for(n_work, threads, [&](std::size_t k) {
        const GridCell& cell = result.table[k / n_folds].cell;
        const Fold& fold = splits.folds[k % n_folds];
        SvrParams params = base;
        params.c = cell.c;
        params.epsilon = cell.epsilon;
        params.gamma = cell.gamma;
        const FeatureMatrix x_train = x.slice_rows(0, fold.train_end);
        const FeatureMatrix x_val = x.slice_rows(fold.validation_begin(), fold.validation_end);
        const SvrModel model = train_svr(x_train, y.subspan(0, fold.train_end), params, options.pipeline);
        const std::vector<double> pred = predict(model, x_val);
        const auto y_val = y.subspan(fold.validation_begin(), fold.validation_end - fold.validation_begin());
        mse[k] = standard_metrics(y_val, pred).mse;
        if (with_composite) {
            const auto ts = options.timestamps.subspan(fold.validation_begin(), y_val.size());
            composite[k] = evaluate_metrics("svr", y_val, pred, ts, options.metric_config).composite;
        }
        converged[k] = model.meta.converged ? 1 : 0;
    });

    for (std::size_t r = 0; r < result.table.size(); ++r) {
        GridRow& row = result.table[r];
        for (std::size_t f = 0; f < n_folds; ++f) {
            const std::size_t k = r * n_folds + f;
            row.fold_mse.push_back(mse[k]);
            row.fold_converged.push_back(converged[k] != 0);
            if (with_composite) row.fold_composite.push_back(composite[k]);
            if (!converged[k]) {
                result.warnings.push_back("solver did not converge: C=" + io::round_trip(row.cell.c) +
                                          " epsilon=" + io::round_trip(row.cell.epsilon) +
                                          " gamma=" + io::round_trip(row.cell.gamma) +
                                          " fold=" + std::to_string(f + 1));
            }
        }
        row.mean_mse = mean_of(row.fold_mse);
        row.mean_composite = mean_of(row.fold_composite);
    }

    // argmin of mean MSE; ties go to the lexicographically smallest (C, eps, gamma).
    const auto key = [&](std::size_t r) {
        const GridCell& c = result.table[r].cell;
        return std::make_tuple(result.table[r].mean_mse, c.c, c.epsilon, c.gamma, r);
    };
    std::size_t best = 0;
    for (std::size_t r = 1; r < result.table.size(); ++r) {
        if (key(r) < key(best)) best = r;
    }
    result.best_index = best;
    result.best_params = result.table[best].cell;

    SvrParams refit = options.solver;
    refit.c = result.best_params.c;
    refit.epsilon = result.best_params.epsilon;
    refit.gamma = result.best_params.gamma;
    result.best_model = train_svr(x, y, refit, options.pipeline);
    if (!result.best_model.meta.converged) result.warnings.push_back("refit solver did not converge");
    result.models_trained = n_work + 1;
    return result;
}

std::vector<double> persistence_forecast(const LoadSeries& history, int lag_hours,
                                         std::span<const Timestamp> horizon) {
    if (lag_hours < 1) throw InvalidInput("persistence: lag_hours must be >= 1");
    if (history.empty()) throw InvalidInput("persistence: empty history");
    const Timestamp first = history.timestamps().front();
    std::vector<double> out;
    out.reserve(horizon.size());
    for (const Timestamp t : horizon) {
        const Timestamp ref = t - std::chrono::hours{lag_hours};
        const long idx = (ref - first).count();
        if (idx < 0 || static_cast<std::size_t>(idx) >= history.size()) {
            throw InvalidInput("persistence: no observation at " + format_iso8601(ref) + " for forecast time " +
                               format_iso8601(t));
        }
        out.push_back(history.values()[static_cast<std::size_t>(idx)]);
    }
    return out;
}

std::string grid_report_csv(const GridSearchResult& result) {
    std::string out = "c,epsilon,gamma,fold,val_mse\n";
    for (const auto& row : result.table) {
        for (std::size_t f = 0; f < row.fold_mse.size(); ++f) {
            out += io::round_trip(row.cell.c) + "," + io::round_trip(row.cell.epsilon) + "," +
                   io::round_trip(row.cell.gamma) + "," + std::to_string(f + 1) + "," +
                   io::fixed(row.fold_mse[f], 6) + "\n";
        }
    }
    return out;
}

nlohmann::json grid_summary_json(const GridSearchResult& result) {
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& row : result.table) {
        cells.push_back({{"c", row.cell.c},
                         {"epsilon", row.cell.epsilon},
                         {"gamma", row.cell.gamma},
                         {"gamma_from_scale", row.cell.gamma_from_scale},
                         {"mean_val_mse", row.mean_mse},
                         {"mean_val_composite", row.mean_composite},
                         {"all_folds_converged", std::all_of(row.fold_converged.begin(), row.fold_converged.end(),
                                                             [](bool b) { return b; })}});
    }
    const auto& meta = result.best_model.meta;
    return {{"best_params",
             {{"c", result.best_params.c},
              {"epsilon", result.best_params.epsilon},
              {"gamma", result.best_params.gamma},
              {"gamma_from_scale", result.best_params.gamma_from_scale}}},
            {"best_mean_val_mse", result.table[result.best_index].mean_mse},
            {"models_trained", result.models_trained},
            {"refit",
             {{"iterations", meta.iterations},
              {"n_support", meta.n_support},
              {"duality_gap", meta.duality_gap},
              {"converged", meta.converged}}},
            {"cells", std::move(cells)},
            {"warnings", result.warnings}};
}

nlohmann::json to_json(const GridSpec& grid) {
    nlohmann::json gammas = nlohmann::json::array();
    for (const auto& g : grid.gamma_values) {
        if (g) {
            gammas.push_back(*g);
        } else {
            gammas.push_back("scale");
        }
    }
    return {{"c_values", grid.c_values}, {"epsilon_values", grid.epsilon_values}, {"gamma_values", gammas}};
}

GridSpec grid_spec_from_json(const nlohmann::json& j) {
    GridSpec g;
    if (j.contains("c_values")) g.c_values = j.at("c_values").get<std::vector<double>>();
    if (j.contains("epsilon_values")) g.epsilon_values = j.at("epsilon_values").get<std::vector<double>>();
    if (j.contains("gamma_values")) {
        g.gamma_values.clear();
        for (const auto& v : j.at("gamma_values")) {
            if (v.is_string()) {
                if (v.get<std::string>() != "scale") throw InvalidInput("grid: unknown gamma keyword");
                g.gamma_values.emplace_back(std::nullopt);
            } else {
                g.gamma_values.emplace_back(v.get<double>());
            }
        }
    }
    g.validate();
    return g;
}

}  // namespace loadcast
