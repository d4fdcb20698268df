#pragma once

#include "loadcast/diagnostics.hpp"
#include "loadcast/gridimpact.hpp"
#include "loadcast/loadgen.hpp"
#include "loadcast/metrics.hpp"
#include "loadcast/modelsel.hpp"
#include "loadcast/svr.hpp"

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace loadcast {

inline constexpr const char* kVersion = "1.0.0";

/// Failure inside a phase that is not the caller's fault.
class PhaseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct FeederSettings {
    std::size_t n_loads = 14;
    double segment_length_m = 30.0;
    double power_factor = 0.95;
    std::vector<double> allocation;  // per bus incl. slack; empty = uniform
    ImpactOptions impact;
};

struct ExperimentConfig {
    GeneratorConfig generator = GeneratorConfig::defaults();  // seed is derived from global_seed
    double test_fraction = 0.2;
    PipelineOptions pipeline;
    GridSpec grid;
    std::size_t n_splits = 5;
    SvrParams solver;  // tol / max_iter / cache budget
    MetricConfig metrics;
    int persistence_lag_hours = 24;
    int max_lag = 50;
    FeederSettings gridimpact;
    std::uint64_t global_seed = 2024;

    // Not part of the experiment identity.
    std::filesystem::path output_dir = "loadcast-out";
    unsigned threads = 1;

    void validate() const;
    /// Generator config with the derived seed filled in.
    GeneratorConfig resolved_generator() const;
};

/// splitmix64(global ^ fnv1a64(tag))
std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view tag);

/// Canonical JSON; excludes output_dir and threads.
nlohmann::json to_json(const ExperimentConfig& config);
/// Missing keys keep their defaults.
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
std::string config_hash(const ExperimentConfig& config);

/// Artifact file names inside the output directory.
namespace artifact {
inline constexpr const char* kSeries = "series.csv";
inline constexpr const char* kSeriesMeta = "series.meta.json";
inline constexpr const char* kModel = "model.json";
inline constexpr const char* kGridCsv = "grid_search.csv";
inline constexpr const char* kGridSummary = "grid_search_summary.json";
inline constexpr const char* kMetricsSvr = "metrics_svr.json";
inline constexpr const char* kMetricsPersistence = "metrics_persistence.json";
inline constexpr const char* kComparison = "comparison.csv";
inline constexpr const char* kHeatmap = "residual_heatmap.csv";
inline constexpr const char* kAcf = "residual_acf.csv";
inline constexpr const char* kDiagnosticsSummary = "diagnostics_summary.json";
inline constexpr const char* kImpact = "grid_impact.csv";
inline constexpr const char* kImpactSummary = "grid_impact_summary.json";
inline constexpr const char* kManifest = "manifest.json";
inline constexpr const char* kPartialMarker = ".partial";
}  // namespace artifact

struct GenerateOutput {
    LoadSeries series;
};
struct TrainOutput {
    GridCell best_params;
    std::vector<std::string> warnings;
};
struct EvaluateOutput {
    MetricsReport svr;
    MetricsReport persistence;
    ImprovementReport improvement;
};
struct DiagnoseOutput {
    HeatmapGrid heatmap;
    AcfResult acf;
    WhitenessSummary whiteness;
    double residual_mean;
};
struct GridsimOutput {
    GridImpactReport svr;
    GridImpactReport persistence;
};

// Each phase reads its inputs from, and writes its outputs to, output_dir.
GenerateOutput run_generate(const ExperimentConfig& config);
TrainOutput run_train(const ExperimentConfig& config);
EvaluateOutput run_evaluate(const ExperimentConfig& config);
DiagnoseOutput run_diagnose(const ExperimentConfig& config);
GridsimOutput run_gridsim(const ExperimentConfig& config);

struct ExperimentSummary {
    std::vector<std::filesystem::path> artifacts;
    std::filesystem::path manifest;
    std::string config_hash;
    std::string manifest_hash;
    EvaluateOutput evaluation;
    DiagnoseOutput diagnostics;
    GridsimOutput gridsim;
    TrainOutput training;
};

/// Runs every phase in order and writes the manifest.
ExperimentSummary run_experiment(const ExperimentConfig& config);

/// Writes manifest.json describing the artifacts in output_dir (content
/// hashes plus headline numbers read back from the metric files) and returns
/// the manifest hash.
std::string write_manifest(const ExperimentConfig& config);

}  // namespace loadcast
