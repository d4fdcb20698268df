#include "loadcast/experiment.hpp"

#include "loadcast/error.hpp"
#include "loadcast/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace loadcast {

namespace fs = std::filesystem;

// ---------------------------------------------------------------- config

void ExperimentConfig::validate() const {
    generator.validate();
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw InvalidInput("config: test_fraction must lie in (0, 1)");
    if (pipeline.poly_degree < 1) throw InvalidInput("config: poly_degree must be >= 1");
    grid.validate();
    if (n_splits < 1) throw InvalidInput("config: n_splits must be >= 1");
    if (!(solver.tol > 0.0) || solver.max_iter < 1) throw InvalidInput("config: invalid solver settings");
    metrics.validate();
    if (persistence_lag_hours < 1) throw InvalidInput("config: persistence_lag_hours must be >= 1");
    if (max_lag < 0) throw InvalidInput("config: max_lag must be >= 0");
    if (gridimpact.n_loads < 1 || !(gridimpact.segment_length_m > 0.0)) {
        throw InvalidInput("config: invalid feeder settings");
    }
    if (!gridimpact.allocation.empty() && gridimpact.allocation.size() != gridimpact.n_loads + 1) {
        throw InvalidInput("config: allocation needs one weight per bus (slack included)");
    }
}

std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view tag) {
    std::uint64_t z = global_seed ^ io::fnv1a64(tag);
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

GeneratorConfig ExperimentConfig::resolved_generator() const {
    GeneratorConfig g = generator;
    g.seed = derive_seed(global_seed, "loadgen");
    return g;
}

namespace {

// A misspelled or misplaced key would otherwise be ignored silently.
void reject_unknown_keys(const nlohmann::json& obj, std::initializer_list<std::string_view> known,
                         const std::string& section) {
    if (!obj.is_object()) {
        throw InvalidInput("config: " + (section.empty() ? std::string("top level") : section) +
                           " must be a JSON object");
    }
    for (const auto& item : obj.items()) {
        if (std::find(known.begin(), known.end(), item.key()) == known.end()) {
            throw InvalidInput("config: unknown key '" + (section.empty() ? "" : section + ".") + item.key() + "'");
        }
    }
}

}  // namespace

nlohmann::json to_json(const ExperimentConfig& c) {
    nlohmann::json gen = to_json(c.generator);
    gen.erase("seed");
    nlohmann::json grid = to_json(c.grid);
    grid["n_splits"] = c.n_splits;
    return {
        {"generator", gen},
        {"test_fraction", c.test_fraction},
        {"features",
         {{"standardize", c.pipeline.standardize},
          {"poly_degree", c.pipeline.poly_degree},
          {"include_interactions", c.pipeline.include_interactions}}},
        {"grid", grid},
        {"svr", {{"tol", c.solver.tol}, {"max_iter", c.solver.max_iter}, {"cache_bytes", c.solver.cache_bytes}}},
        {"metrics", to_json(c.metrics)},
        {"persistence_lag_hours", c.persistence_lag_hours},
        {"diagnostics", {{"max_lag", c.max_lag}}},
        {"gridimpact",
         {{"n_loads", c.gridimpact.n_loads},
          {"segment_length_m", c.gridimpact.segment_length_m},
          {"power_factor", c.gridimpact.power_factor},
          {"allocation", c.gridimpact.allocation},
          {"feeder_kw_per_system_mw", c.gridimpact.impact.feeder_kw_per_system_mw},
          {"min_voltage_pu", c.gridimpact.impact.min_voltage_pu},
          {"max_loading_pct", c.gridimpact.impact.max_loading_pct}}},
        {"global_seed", c.global_seed},
    };
}

ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
    try {
        ExperimentConfig c;
        reject_unknown_keys(j,
                            {"generator", "test_fraction", "features", "grid", "svr", "metrics",
                             "persistence_lag_hours", "diagnostics", "gridimpact", "global_seed", "output_dir"},
                            "");
        if (j.contains("generator")) {
            reject_unknown_keys(j.at("generator"),
                                {"start", "end", "base_mw", "daily_amp_mw", "weekend_factor", "seasonal_amp_mw",
                                 "noise_sigma_mw", "seed"},
                                "generator");
        }
        if (j.contains("features")) {
            reject_unknown_keys(j.at("features"), {"standardize", "poly_degree", "include_interactions"}, "features");
        }
        if (j.contains("grid")) {
            reject_unknown_keys(j.at("grid"), {"c_values", "epsilon_values", "gamma_values", "n_splits"}, "grid");
        }
        if (j.contains("svr")) reject_unknown_keys(j.at("svr"), {"tol", "max_iter", "cache_bytes"}, "svr");
        if (j.contains("metrics")) {
            reject_unknown_keys(j.at("metrics"), {"under_penalty", "peak_hours", "peak_weight", "composite_weights"},
                                "metrics");
        }
        if (j.contains("diagnostics")) reject_unknown_keys(j.at("diagnostics"), {"max_lag"}, "diagnostics");
        if (j.contains("gridimpact")) {
            reject_unknown_keys(j.at("gridimpact"),
                                {"n_loads", "segment_length_m", "power_factor", "allocation",
                                 "feeder_kw_per_system_mw", "min_voltage_pu", "max_loading_pct"},
                                "gridimpact");
        }
        if (j.contains("generator")) {
            if (j.at("generator").contains("seed")) {
                throw InvalidInput("config: generator.seed is derived from global_seed; set global_seed instead");
            }
            c.generator = generator_config_from_json(j.at("generator"));
        }
        c.test_fraction = j.value("test_fraction", c.test_fraction);
        if (j.contains("features")) {
            const auto& f = j.at("features");
            c.pipeline.standardize = f.value("standardize", c.pipeline.standardize);
            c.pipeline.poly_degree = f.value("poly_degree", c.pipeline.poly_degree);
            c.pipeline.include_interactions = f.value("include_interactions", c.pipeline.include_interactions);
        }
        if (j.contains("grid")) {
            c.grid = grid_spec_from_json(j.at("grid"));
            c.n_splits = j.at("grid").value("n_splits", c.n_splits);
        }
        if (j.contains("svr")) {
            const auto& s = j.at("svr");
            c.solver.tol = s.value("tol", c.solver.tol);
            c.solver.max_iter = s.value("max_iter", c.solver.max_iter);
            c.solver.cache_bytes = s.value("cache_bytes", c.solver.cache_bytes);
        }
        if (j.contains("metrics")) c.metrics = metric_config_from_json(j.at("metrics"));
        c.persistence_lag_hours = j.value("persistence_lag_hours", c.persistence_lag_hours);
        if (j.contains("diagnostics")) c.max_lag = j.at("diagnostics").value("max_lag", c.max_lag);
        if (j.contains("gridimpact")) {
            const auto& g = j.at("gridimpact");
            auto& f = c.gridimpact;
            f.n_loads = g.value("n_loads", f.n_loads);
            f.segment_length_m = g.value("segment_length_m", f.segment_length_m);
            f.power_factor = g.value("power_factor", f.power_factor);
            f.allocation = g.value("allocation", f.allocation);
            f.impact.feeder_kw_per_system_mw = g.value("feeder_kw_per_system_mw", f.impact.feeder_kw_per_system_mw);
            f.impact.min_voltage_pu = g.value("min_voltage_pu", f.impact.min_voltage_pu);
            f.impact.max_loading_pct = g.value("max_loading_pct", f.impact.max_loading_pct);
        }
        c.global_seed = j.value("global_seed", c.global_seed);
        if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("config: ") + e.what());
    }
}

std::string config_hash(const ExperimentConfig& config) {
    return io::hex64(io::fnv1a64(to_json(config).dump()));
}

// ---------------------------------------------------------------- phases

namespace {

void mark_partial(const ExperimentConfig& config) {
    std::error_code ec;
    fs::create_directories(config.output_dir, ec);
    std::ofstream(config.output_dir / artifact::kPartialMarker) << "incomplete\n";
}

/// Tags any failure with the phase name and leaves a `.partial` marker.
template <typename Fn>
auto in_phase(const char* phase, const ExperimentConfig& config, Fn fn) {
    try {
        config.validate();
        return fn();
    } catch (const MissingArtifact&) {
        mark_partial(config);
        throw;
    } catch (const DegenerateInput& e) {
        mark_partial(config);
        throw DegenerateInput(std::string("[") + phase + "] " + e.what());
    } catch (const InvalidInput& e) {
        mark_partial(config);
        throw InvalidInput(std::string("[") + phase + "] " + e.what());
    } catch (const std::exception& e) {
        mark_partial(config);
        throw PhaseError(std::string("[") + phase + "] " + e.what());
    }
}

fs::path require(const ExperimentConfig& config, const char* name, const char* producer) {
    fs::path p = config.output_dir / name;
    if (!fs::exists(p)) throw MissingArtifact(p.string(), producer);
    return p;
}

LoadSeries load_series(const ExperimentConfig& config) {
    return series_from_csv(io::read_file(require(config, artifact::kSeries, "generate")));
}

SvrModel load_trained_model(const ExperimentConfig& config) {
    return load_model(require(config, artifact::kModel, "train"));
}

void write_json(const fs::path& path, const nlohmann::json& j) {
    io::write_file(path, j.dump(2) + "\n");
}

struct TestPredictions {
    LoadSeries series;
    LoadSeries test;
    std::vector<double> svr;
    std::vector<double> persistence;
};

TestPredictions predict_test(const ExperimentConfig& config) {
    TestPredictions out;
    out.series = load_series(config);
    out.test = split_train_test(out.series, config.test_fraction).test;
    const SvrModel model = load_trained_model(config);
    out.svr = predict(model, extract_features(out.test));
    out.persistence = persistence_forecast(out.series, config.persistence_lag_hours, out.test.timestamps());
    return out;
}

}  // namespace

GenerateOutput run_generate(const ExperimentConfig& config) {
    return in_phase("generate", config, [&] {
        const GeneratorConfig gen = config.resolved_generator();
        LoadSeries series = generate_profile(gen);
        io::write_file(config.output_dir / artifact::kSeries, series_to_csv(series));
        write_json(config.output_dir / artifact::kSeriesMeta, generator_metadata(gen));
        return GenerateOutput{std::move(series)};
    });
}

TrainOutput run_train(const ExperimentConfig& config) {
    return in_phase("train", config, [&] {
        const LoadSeries series = load_series(config);
        const LoadSeries train = split_train_test(series, config.test_fraction).train;
        const FeatureMatrix x = extract_features(train);
        const TimeSeriesSplits splits = make_splits(x.rows(), config.n_splits);
        GridSearchOptions opts;
        opts.pipeline = config.pipeline;
        opts.solver = config.solver;
        opts.threads = config.threads;
        opts.timestamps = train.timestamps();
        opts.metric_config = config.metrics;
        const GridSearchResult result = grid_search(x, train.values(), config.grid, splits, opts);
        save_model(result.best_model, config.output_dir / artifact::kModel);
        io::write_file(config.output_dir / artifact::kGridCsv, grid_report_csv(result));
        write_json(config.output_dir / artifact::kGridSummary, grid_summary_json(result));
        return TrainOutput{result.best_params, result.warnings};
    });
}

EvaluateOutput run_evaluate(const ExperimentConfig& config) {
    return in_phase("evaluate", config, [&] {
        const TestPredictions p = predict_test(config);
        const auto& actual = p.test.values();
        const auto& ts = p.test.timestamps();
        EvaluateOutput out{evaluate_metrics("svr", actual, p.svr, ts, config.metrics),
                           evaluate_metrics("persistence", actual, p.persistence, ts, config.metrics),
                           {}};
        out.improvement = improvement_report(out.persistence, out.svr);
        nlohmann::json js = to_json(out.svr);
        nlohmann::json jp = to_json(out.persistence);
        jp["lag_hours"] = config.persistence_lag_hours;
        write_json(config.output_dir / artifact::kMetricsSvr, js);
        write_json(config.output_dir / artifact::kMetricsPersistence, jp);
        io::write_file(config.output_dir / artifact::kComparison, comparison_csv(out.improvement));
        return out;
    });
}

DiagnoseOutput run_diagnose(const ExperimentConfig& config) {
    return in_phase("diagnose", config, [&] {
        const TestPredictions p = predict_test(config);
        const ResidualSeries r = ResidualSeries::from(p.test.timestamps(), p.test.values(), p.svr);
        DiagnoseOutput out;
        out.heatmap = residual_heatmap(r);
        out.acf = autocorrelation(r.residuals, config.max_lag);
        out.whiteness = whiteness_summary(out.acf);
        double sum = 0.0;
        for (const double v : r.residuals) sum += v;
        out.residual_mean = sum / static_cast<double>(r.residuals.size());
        io::write_file(config.output_dir / artifact::kHeatmap, heatmap_csv(out.heatmap));
        io::write_file(config.output_dir / artifact::kAcf, acf_csv(out.acf));
        write_json(config.output_dir / artifact::kDiagnosticsSummary,
                   {{"n", r.residuals.size()},
                    {"residual_mean", out.residual_mean},
                    {"max_lag", config.max_lag},
                    {"confidence_halfwidth", out.acf.confidence_halfwidth},
                    {"exceed_count", out.whiteness.exceed_count},
                    {"is_white", out.whiteness.is_white}});
        return out;
    });
}

GridsimOutput run_gridsim(const ExperimentConfig& config) {
    return in_phase("gridsim", config, [&] {
        const TestPredictions p = predict_test(config);
        const auto& g = config.gridimpact;
        const NetworkModel net = build_kerber_feeder(g.n_loads, g.segment_length_m, g.power_factor);
        const std::vector<double> allocation = g.allocation.empty() ? uniform_allocation(net) : g.allocation;
        GridsimOutput out{impact_report(net, p.test, p.svr, allocation, g.impact),
                          impact_report(net, p.test, p.persistence, allocation, g.impact)};
        io::write_file(config.output_dir / artifact::kImpact, impact_csv(out.svr));
        write_json(config.output_dir / artifact::kImpactSummary,
                   {{"svr", impact_summary_json(out.svr)}, {"persistence", impact_summary_json(out.persistence)}});
        return out;
    });
}

// ---------------------------------------------------------------- manifest

namespace {

struct ArtifactEntry {
    const char* file;
    const char* phase;
};

constexpr ArtifactEntry kArtifacts[] = {
    {artifact::kSeries, "generate"},          {artifact::kModel, "train"},
    {artifact::kGridCsv, "train"},            {artifact::kMetricsSvr, "evaluate"},
    {artifact::kMetricsPersistence, "evaluate"}, {artifact::kComparison, "evaluate"},
    {artifact::kHeatmap, "diagnose"},         {artifact::kAcf, "diagnose"},
    {artifact::kImpact, "gridsim"},
};

constexpr ArtifactEntry kSidecars[] = {
    {artifact::kSeriesMeta, "generate"},
    {artifact::kGridSummary, "train"},
    {artifact::kDiagnosticsSummary, "diagnose"},
    {artifact::kImpactSummary, "gridsim"},
};

nlohmann::json describe(const ExperimentConfig& config, const ArtifactEntry& e) {
    const std::string bytes = io::read_file(require(config, e.file, e.phase));
    return {{"file", e.file}, {"phase", e.phase}, {"bytes", bytes.size()}, {"fnv1a64", io::hex64(io::fnv1a64(bytes))}};
}

}  // namespace

std::string write_manifest(const ExperimentConfig& config) {
    nlohmann::json artifacts = nlohmann::json::array();
    for (const auto& e : kArtifacts) artifacts.push_back(describe(config, e));
    nlohmann::json sidecars = nlohmann::json::array();
    for (const auto& e : kSidecars) sidecars.push_back(describe(config, e));

    const auto read_json = [&](const char* name, const char* producer) {
        return nlohmann::json::parse(io::read_file(require(config, name, producer)));
    };
    const nlohmann::json svr = read_json(artifact::kMetricsSvr, "evaluate");
    const nlohmann::json persistence = read_json(artifact::kMetricsPersistence, "evaluate");
    const nlohmann::json grid = read_json(artifact::kGridSummary, "train");

    nlohmann::json manifest = {
        {"tool", "loadcast"},
        {"version", kVersion},
        {"model_format_version", kModelFormatVersion},
        {"prng", kPrngName},
        {"config", to_json(config)},
        {"config_hash", config_hash(config)},
        {"generator_seed", config.resolved_generator().seed},
        {"artifacts", std::move(artifacts)},
        {"sidecars", std::move(sidecars)},
        {"headline",
         {{"best_params", grid.at("best_params")},
          {"svr", {{"mse", svr.at("mse")}, {"mae", svr.at("mae")}, {"composite", svr.at("composite")}}},
          {"persistence",
           {{"mse", persistence.at("mse")}, {"mae", persistence.at("mae")}, {"composite", persistence.at("composite")}}}}},
    };
    const std::string hash = io::hex64(io::fnv1a64(manifest.dump()));
    manifest["manifest_hash"] = hash;
    write_json(config.output_dir / artifact::kManifest, manifest);
    return hash;
}

ExperimentSummary run_experiment(const ExperimentConfig& config) {
    config.validate();
    fs::create_directories(config.output_dir);
    std::ofstream(config.output_dir / artifact::kPartialMarker) << "incomplete\n";

    ExperimentSummary s;
    run_generate(config);
    s.training = run_train(config);
    s.evaluation = run_evaluate(config);
    s.diagnostics = run_diagnose(config);
    s.gridsim = run_gridsim(config);
    s.manifest_hash = in_phase("manifest", config, [&] { return write_manifest(config); });
    s.config_hash = config_hash(config);
    s.manifest = config.output_dir / artifact::kManifest;
    for (const auto& e : kArtifacts) s.artifacts.push_back(config.output_dir / e.file);
    fs::remove(config.output_dir / artifact::kPartialMarker);
    return s;
}

}  // namespace loadcast
