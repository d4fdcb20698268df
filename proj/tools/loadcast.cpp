// loadcast: command-line front end for the forecasting experiment.
//
//   loadcast <generate|train|evaluate|diagnose|gridsim|run> [--config FILE] [overrides]
//
// Exit codes: 0 success, 1 phase failure, 2 invalid input or configuration.

#include "loadcast/error.hpp"
#include "loadcast/experiment.hpp"
#include "loadcast/io.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

namespace {

using namespace loadcast;

struct Overrides {
    std::string config_path;
    std::optional<std::string> output_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> persistence_lag;
    std::optional<double> test_fraction;
    std::optional<int> max_lag;
};

void add_common_options(CLI::App& sub, Overrides& o) {
    sub.add_option("--config", o.config_path, "experiment config (JSON); omitted keys keep their defaults");
    sub.add_option("--output-dir", o.output_dir, "artifact directory");
    sub.add_option("--seed", o.seed, "global seed");
    sub.add_option("--persistence-lag", o.persistence_lag, "persistence lag in hours");
    sub.add_option("--test-fraction", o.test_fraction, "chronological test share in (0, 1)");
    sub.add_option("--max-lag", o.max_lag, "largest ACF lag");
}

unsigned threads_from_env() {
    const char* raw = std::getenv("LOADCAST_THREADS");
    if (raw == nullptr || *raw == '\0') return 1;
    const double v = io::parse_double(raw);
    if (!(v >= 1.0) || v != static_cast<double>(static_cast<unsigned>(v))) {
        throw InvalidInput("LOADCAST_THREADS must be a positive integer");
    }
    return static_cast<unsigned>(v);
}

ExperimentConfig resolve_config(const Overrides& o) {
    ExperimentConfig config;
    if (!o.config_path.empty()) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(io::read_file(o.config_path));
        } catch (const nlohmann::json::exception& e) {
            throw InvalidInput("config " + o.config_path + ": " + e.what());
        }
        config = experiment_config_from_json(j);
    }
    if (o.output_dir) config.output_dir = *o.output_dir;
    if (o.seed) config.global_seed = *o.seed;
    if (o.persistence_lag) config.persistence_lag_hours = *o.persistence_lag;
    if (o.test_fraction) config.test_fraction = *o.test_fraction;
    if (o.max_lag) config.max_lag = *o.max_lag;
    config.threads = threads_from_env();
    config.validate();
    return config;
}

void warn_all(const std::vector<std::string>& warnings) {
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

void print_evaluation(const EvaluateOutput& e) {
    std::cout << comparison_csv(e.improvement);
}

void print_diagnostics(const DiagnoseOutput& d) {
    std::printf("residual mean %.4f MW; ACF exceedances %d of %d lags (band +-%.4f): %s\n", d.residual_mean,
                d.whiteness.exceed_count, d.acf.max_lag(), d.acf.confidence_halfwidth,
                d.whiteness.is_white ? "white" : "not white");
}

void print_gridsim(const GridsimOutput& g) {
    const auto line = [](const char* name, const GridImpactReport& r) {
        std::printf("%-12s steps %zu, actual violations %zu, flagged %zu, missed %zu, false alarms %zu\n", name,
                    r.steps.size(), r.actual_violations, r.correctly_flagged, r.missed, r.false_alarms);
        if (r.nonconverged_steps > 0) {
            std::cerr << "warning: " << name << ": " << r.nonconverged_steps
                      << " power-flow steps did not converge\n";
        }
    };
    line("svr", g.svr);
    line("persistence", g.persistence);
}

int run(const std::string& command, const Overrides& o) {
    const ExperimentConfig config = resolve_config(o);
    if (command == "generate") {
        const GenerateOutput g = run_generate(config);
        std::printf("wrote %zu hourly points to %s\n", g.series.size(),
                    (config.output_dir / artifact::kSeries).string().c_str());
    } else if (command == "train") {
        const TrainOutput t = run_train(config);
        warn_all(t.warnings);
        std::printf("best C=%s epsilon=%s gamma=%s%s\n", io::round_trip(t.best_params.c).c_str(),
                    io::round_trip(t.best_params.epsilon).c_str(), io::round_trip(t.best_params.gamma).c_str(),
                    t.best_params.gamma_from_scale ? " (scale)" : "");
    } else if (command == "evaluate") {
        print_evaluation(run_evaluate(config));
    } else if (command == "diagnose") {
        print_diagnostics(run_diagnose(config));
    } else if (command == "gridsim") {
        print_gridsim(run_gridsim(config));
    } else {
        const ExperimentSummary s = run_experiment(config);
        warn_all(s.training.warnings);
        print_evaluation(s.evaluation);
        print_diagnostics(s.diagnostics);
        print_gridsim(s.gridsim);
        std::printf("manifest %s (hash %s, config %s)\n", s.manifest.string().c_str(), s.manifest_hash.c_str(),
                    s.config_hash.c_str());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Load forecasting with epsilon-SVR against a persistence baseline"};
    app.set_version_flag("--version", std::string(loadcast::kVersion));
    app.require_subcommand(1);

    Overrides overrides;
    const std::pair<const char*, const char*> commands[] = {
        {"generate", "write the synthetic hourly load series"},
        {"train", "grid search with time-series cross-validation, then refit"},
        {"evaluate", "score the SVR and the persistence baseline on the test window"},
        {"diagnose", "residual heatmap and autocorrelation"},
        {"gridsim", "power-flow impact of both forecasts on the LV feeder"},
        {"run", "all phases in order plus the manifest"},
    };
    for (const auto& [name, help] : commands) add_common_options(*app.add_subcommand(name, help), overrides);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        return run(command, overrides);
    } catch (const loadcast::InvalidInput& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
