// Acceptance gate. Prints one PASS/FAIL line per criterion and exits non-zero
// if any criterion fails. The default-config experiments are the expensive
// part (a few minutes each on one core); they run once and feed criteria 2, 3,
// 5 and 7.

#include "loadcast/experiment.hpp"
#include "loadcast/io.hpp"
#include "nr_oracle.hpp"
#include "svr_fixtures.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace loadcast;
namespace fs = std::filesystem;

namespace {

struct Verdict {
    bool pass = true;
    std::ostringstream detail;
    std::string first_failure;

    void require(bool ok, const std::string& what) {
        if (!ok && pass) first_failure = what;
        pass = pass && ok;
    }
};

int g_failures = 0;
std::map<int, std::string> g_lines;

void report(int id, const char* title, Verdict& v) {
    std::string line = std::string(v.pass ? "PASS" : "FAIL") + " criterion " + std::to_string(id) + " (" + title +
                       ")" + v.detail.str();
    if (!v.pass) line += " | first failure: " + v.first_failure;
    std::printf("%s\n", line.c_str());
    std::fflush(stdout);
    g_lines[id] = std::move(line);
    if (!v.pass) ++g_failures;
}

unsigned env_threads() {
    const char* raw = std::getenv("LOADCAST_THREADS");
    if (raw == nullptr || *raw == '\0') return 1;
    return static_cast<unsigned>(std::max(1, std::atoi(raw)));
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

ExperimentConfig default_config(std::uint64_t seed, const std::string& dir) {
    ExperimentConfig c;
    c.global_seed = seed;
    c.threads = env_threads();
    c.output_dir = fs::temp_directory_path() / ("loadcast_acceptance_" + dir);
    fs::remove_all(c.output_dir);
    return c;
}

// 1 ------------------------------------------------------------------------

void solver_oracle_equivalence() {
    Verdict v;
    int instances = 0;
    double worst_dual = 0.0, worst_pred = 0.0, worst_gap_ratio = 0.0;
    for (unsigned seed = 0; seed < 120; ++seed) {
        const auto inst = fixtures::small_instance(seed);
        const SvrModel m = train_svr(inst.x, inst.y, inst.params, fixtures::raw_pipeline());
        const auto prob = fixtures::to_oracle(inst.x, inst.y, inst.params);
        const auto ref = oracle::solve_svr(prob);
        v.require(ref.gap <= 1e-10 * std::max(1.0, std::abs(ref.dual)), "oracle did not converge");

        const double rel = std::abs(m.meta.dual_objective - ref.dual) / std::max(1.0, std::abs(ref.dual));
        worst_dual = std::max(worst_dual, rel);
        for (const FeatureMatrix* at : {&inst.x, &inst.probe}) {
            const auto f = predict(m, *at);
            const auto g = fixtures::oracle_predict(prob, ref, *at);
            for (std::size_t i = 0; i < f.size(); ++i) worst_pred = std::max(worst_pred, std::abs(f[i] - g[i]));
        }
        const double gap = duality_gap(m, inst.x, inst.y);
        const double limit = std::max(1e-6, 1e-6 * std::abs(m.meta.dual_objective));
        worst_gap_ratio = std::max(worst_gap_ratio, gap / limit);
        v.require(m.meta.converged, "solver flagged non-convergence");
        ++instances;
    }
    v.require(instances >= 100, "fewer than 100 instances");
    v.require(worst_dual <= 1e-4, "dual objective differs from the oracle");
    v.require(worst_pred <= 1e-4, "predictions differ from the oracle");
    v.require(worst_gap_ratio <= 1.0, "duality gap above the certificate");
    v.detail << ": " << instances << " instances, max rel dual diff " << worst_dual << ", max |f - f_oracle| "
             << worst_pred << ", max gap / bound " << worst_gap_ratio;
    report(1, "solver oracle equivalence", v);
}

// 2, 3 ------------------------------------------------------------------------

struct SeedRun {
    std::uint64_t seed;
    ExperimentSummary summary;
    double seconds;
};

void end_to_end_ordering(const std::vector<SeedRun>& runs, double smoke_seconds) {
    Verdict v;
    const std::vector<std::pair<std::string, double>> bands = {{"mse", 40.0},           {"mae", 25.0},
                                                               {"rmse", 25.0},          {"asymmetric", 20.0},
                                                               {"time_weighted", 25.0}, {"composite", 20.0}};
    v.detail << ": " << runs.size() << " seeds; median reductions";
    for (std::size_t k = 0; k < bands.size(); ++k) {
        std::vector<double> reductions;
        for (const SeedRun& r : runs) {
            const MetricImprovement& row = r.summary.evaluation.improvement.rows.at(k);
            v.require(row.metric == bands[k].first, "unexpected metric order");
            v.require(row.model < row.baseline,
                      "seed " + std::to_string(r.seed) + ": SVR does not beat persistence on " + row.metric);
            reductions.push_back(row.reduction_pct.value_or(0.0));
        }
        const double med = median(reductions);
        v.require(med >= bands[k].second, bands[k].first + " median reduction below band");
        char buf[64];
        std::snprintf(buf, sizeof buf, " %s %.1f%%", bands[k].first.c_str(), med);
        v.detail << buf;
    }
    double slowest = 0.0;
    for (const SeedRun& r : runs) slowest = std::max(slowest, r.seconds);
    v.require(runs.size() >= 5, "fewer than 5 seeds");
    v.require(slowest <= 15.0 * 60.0, "a seed took longer than 15 min");
    v.require(smoke_seconds <= 120.0, "2x2x2 smoke grid took longer than 2 min");
    char buf[128];
    std::snprintf(buf, sizeof buf, "; slowest seed %.0f s; smoke grid %.0f s", slowest, smoke_seconds);
    v.detail << buf;
    report(2, "end-to-end ordering", v);
}

void noise_floor(const std::vector<SeedRun>& runs) {
    Verdict v;
    v.detail << ":";
    for (const SeedRun& r : runs) {
        const double svr = r.summary.evaluation.svr.mae;
        const double pers = r.summary.evaluation.persistence.mae;
        v.require(svr >= 4.0 && svr <= 5.5, "seed " + std::to_string(r.seed) + ": SVR MAE outside [4.0, 5.5]");
        v.require(pers >= 5.0 && pers <= 7.5,
                  "seed " + std::to_string(r.seed) + ": persistence MAE outside [5.0, 7.5]");
        char buf[96];
        std::snprintf(buf, sizeof buf, " seed %llu svr %.3f pers %.3f;", static_cast<unsigned long long>(r.seed), svr,
                      pers);
        v.detail << buf;
    }
    report(3, "noise-floor sanity", v);
}

// 4 ------------------------------------------------------------------------

void metric_identities() {
    Verdict v;
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> load(40.0, 160.0), err(-15.0, 15.0);
    const MetricConfig defaults;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + static_cast<std::size_t>(trial) * 7 % 500;
        std::vector<double> actual(n), predicted(n);
        std::vector<Timestamp> ts(n);
        const Timestamp t0 = parse_hour("2024-03-01T00:00:00Z") + std::chrono::hours(trial * 5);
        for (std::size_t i = 0; i < n; ++i) {
            actual[i] = load(rng);
            predicted[i] = actual[i] + err(rng);
            ts[i] = t0 + std::chrono::hours(static_cast<long>(i));
        }
        const StandardMetrics s = standard_metrics(actual, predicted);
        v.require(std::abs(s.rmse - std::sqrt(s.mse)) <= 1e-12, "rmse != sqrt(mse)");
        v.require(asymmetric_error(actual, predicted, 1.0) == s.mae, "alpha = 1 differs from MAE");
        v.require(time_weighted_error(actual, predicted, ts, defaults.peak_hours, 1.0) == s.mae,
                  "beta = 1 differs from MAE");
        const MetricsReport r = evaluate_metrics("m", actual, predicted, ts, defaults);
        v.require(r.composite == 0.5 * (r.asymmetric + r.time_weighted), "composite != mean of the two");
    }

    struct Published {
        const char* metric;
        double baseline, model, expected, tol;
    };
    const Published cases[] = {{"mse", 69.63, 31.91, 54.2, 0.05},          {"mae", 6.73, 4.48, 33.4, 0.1},
                               {"rmse", 8.34, 5.65, 32.3, 0.05},           {"asymmetric", 10.10, 7.09, 29.8, 0.05},
                               {"time_weighted", 7.98, 5.33, 33.2, 0.05}, {"composite", 9.12, 6.27, 31.3, 0.05}};
    v.detail << ":";
    for (const Published& c : cases) {
        const double got = reduction_percent(c.baseline, c.model);
        v.require(std::abs(got - c.expected) <= c.tol + 1e-12, std::string(c.metric) + " percentage");
        char buf[48];
        std::snprintf(buf, sizeof buf, " %s %.2f%%", c.metric, got);
        v.detail << buf;
    }
    v.detail << "; identities over 200 random series";
    report(4, "metric identities", v);
}

// 5 ------------------------------------------------------------------------

void residual_whiteness(const ExperimentConfig& config, const ExperimentSummary& s) {
    Verdict v;
    const DiagnoseOutput& d = s.diagnostics;
    v.require(d.acf.max_lag() == 50, "ACF not over lags 1..50");
    v.require(d.whiteness.exceed_count <= 5, "more than 5 ACF exceedances");

    // Residuals rebuilt from the saved series and model.
    const LoadSeries series = series_from_csv(io::read_file(config.output_dir / artifact::kSeries));
    const LoadSeries test = split_train_test(series, config.test_fraction).test;
    const SvrModel model = load_model(config.output_dir / artifact::kModel);
    const std::vector<double> pred = predict(model, extract_features(test));
    const ResidualSeries r = ResidualSeries::from(test.timestamps(), test.values(), pred);
    const HeatmapGrid grid = residual_heatmap(r);

    double weighted = 0.0, mean = 0.0;
    std::size_t count = 0;
    for (const auto& row : grid.cells) {
        for (const HeatmapCell& c : row) {
            weighted += c.mean_residual * static_cast<double>(c.count);
            count += c.count;
        }
    }
    for (const double e : r.residuals) mean += e;
    mean /= static_cast<double>(r.residuals.size());
    const double drift = std::abs(weighted / static_cast<double>(count) - mean);
    v.require(count == r.residuals.size(), "heatmap counts do not cover the residuals");
    v.require(drift <= 1e-9, "heatmap does not conserve the residual mean");
    v.require(std::abs(d.residual_mean - mean) <= 1e-9, "reported residual mean disagrees");

    char buf[160];
    std::snprintf(buf, sizeof buf, ": %d of 50 lags outside +-%.4f (n = %zu); conservation error %.2e",
                  d.whiteness.exceed_count, d.acf.confidence_halfwidth, d.acf.n, drift);
    v.detail << buf;
    report(5, "residual whiteness", v);
}

// 6 ------------------------------------------------------------------------

void power_flow_correctness() {
    Verdict v;
    double worst_balance = 0.0;
    const auto balance = [&](std::span<const double> loads, const PowerFlowResult& r) {
        double total = r.losses_kw;
        for (const double p : loads) total += p;
        const double rel = std::abs(r.slack_power_kva.real() - total) / std::max(1.0, total);
        worst_balance = std::max(worst_balance, rel);
    };

    NetworkModel two;
    two.n_buses = 2;
    two.lines = {{0, 1, 0.1, 0.0, 270.0}};
    two.power_factor = {1.0, 1.0};
    const std::vector<double> p2{0.0, 10.0};
    const PowerFlowResult r2 = run_power_flow(two, p2);
    const double closed = 0.5 * (1.0 + std::sqrt(1.0 - 4.0 * 0.1 * 10e3 / (400.0 * 400.0)));
    const double err2 = std::abs(r2.bus_voltages[1] - closed);
    v.require(r2.converged && err2 <= 1e-8, "2-bus closed form");
    balance(p2, r2);

    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst_nr = 0.0;
    int trees = 0;
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 2 + static_cast<std::size_t>(trial % 3);
        NetworkModel net;
        net.n_buses = n;
        std::vector<oracle::NrLine> nr_lines;
        for (std::size_t b = 1; b < n; ++b) {
            const std::size_t parent = static_cast<std::size_t>(u(rng) * static_cast<double>(b));
            const double r = 0.01 + 0.2 * u(rng);
            const double x = 0.1 * u(rng);
            net.lines.push_back({parent, b, r, x, 270.0});
            nr_lines.push_back({static_cast<int>(parent), static_cast<int>(b), r, x});
        }
        net.power_factor.assign(n, 1.0);
        for (std::size_t b = 1; b < n; ++b) net.power_factor[b] = 0.9 + 0.1 * u(rng);
        std::vector<double> p(n, 0.0), q(n, 0.0);
        for (std::size_t b = 1; b < n; ++b) {
            p[b] = 30.0 * u(rng);
            q[b] = p[b] * std::tan(std::acos(net.power_factor[b]));
        }
        const PowerFlowResult sweep = run_power_flow(net, p);
        const oracle::NrResult ref = oracle::newton_raphson(0.4, static_cast<int>(n), nr_lines, p, q);
        v.require(sweep.converged && ref.max_mismatch <= 1e-12, "small tree did not solve");
        for (std::size_t b = 0; b < n; ++b) worst_nr = std::max(worst_nr, std::abs(sweep.voltages_pu[b] - ref.v_pu[b]));
        balance(p, sweep);
        ++trees;
    }
    v.require(worst_nr <= 1e-8, "sweep differs from Newton-Raphson");

    const NetworkModel feeder = build_kerber_feeder();
    std::uniform_real_distribution<double> kw(0.0, 15.0);
    int converged = 0;
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> p(feeder.n_buses, 0.0);
        for (std::size_t b = 1; b < p.size(); ++b) p[b] = kw(rng);
        const PowerFlowResult r = run_power_flow(feeder, p);
        if (!r.converged) continue;
        balance(p, r);
        ++converged;
    }
    v.require(converged > 0, "no converged feeder solve");
    v.require(worst_balance <= 1e-6, "power balance");

    const PowerFlowResult zero = run_power_flow(feeder, std::vector<double>(feeder.n_buses, 0.0));
    bool flat = zero.converged;
    for (const double m : zero.bus_voltages) flat = flat && m == 1.0;
    v.require(flat, "zero load is not exactly 1.0 pu");

    char buf[200];
    std::snprintf(buf, sizeof buf,
                  ": 2-bus error %.1e; %d trees, max |V - V_nr| %.1e; worst balance %.1e over %d feeder solves; zero "
                  "load flat",
                  err2, trees, worst_nr, worst_balance, converged + trees + 1);
    v.detail << buf;
    report(6, "power-flow correctness", v);
}

// 7 ------------------------------------------------------------------------

void determinism(const ExperimentSummary& first, const ExperimentConfig& first_config) {
    Verdict v;
    const ExperimentConfig again = default_config(first_config.global_seed, "determinism_b");
    const ExperimentSummary second = run_experiment(again);
    v.require(first.manifest_hash == second.manifest_hash, "manifest hashes differ");

    const ExperimentConfig chained = default_config(first_config.global_seed, "determinism_chained");
    run_generate(chained);
    run_train(chained);
    run_evaluate(chained);
    run_diagnose(chained);
    run_gridsim(chained);
    const std::string chained_hash = write_manifest(chained);
    v.require(chained_hash == first.manifest_hash, "chained manifest hash differs");

    const char* files[] = {artifact::kSeries,  artifact::kSeriesMeta,    artifact::kModel,
                           artifact::kGridCsv, artifact::kGridSummary,   artifact::kMetricsSvr,
                           artifact::kMetricsPersistence, artifact::kComparison, artifact::kHeatmap,
                           artifact::kAcf,     artifact::kDiagnosticsSummary, artifact::kImpact,
                           artifact::kImpactSummary, artifact::kManifest};
    int compared = 0;
    for (const char* f : files) {
        const std::string bytes = io::read_file(first_config.output_dir / f);
        v.require(bytes == io::read_file(again.output_dir / f), std::string(f) + " differs between runs");
        v.require(bytes == io::read_file(chained.output_dir / f), std::string(f) + " differs when chained");
        ++compared;
    }
    v.detail << ": manifest " << first.manifest_hash << " reproduced by a second run and by chained phases; "
             << compared << " files byte-identical";
    report(7, "determinism", v);
    fs::remove_all(again.output_dir);
    fs::remove_all(chained.output_dir);
}

// 8 ------------------------------------------------------------------------

void cv_hygiene() {
    Verdict v;
    std::mt19937_64 rng(8);
    std::uniform_int_distribution<std::size_t> k_dist(1, 30);
    int trials = 0;
    for (; trials < 5000; ++trials) {
        const std::size_t k = k_dist(rng);
        std::uniform_int_distribution<std::size_t> n_dist(2 * (k + 1), 20000);
        const std::size_t n = n_dist(rng);
        const TimeSeriesSplits s = make_splits(n, k);
        v.require(s.folds.size() == k, "fold count");
        std::size_t expected_begin = n / (k + 1);
        for (const Fold& f : s.folds) {
            v.require(f.train_end >= 1 && f.train_end - 1 < f.validation_begin(), "train index reaches validation");
            v.require(f.validation_begin() == expected_begin, "validation blocks are not contiguous");
            v.require(f.validation_end > f.validation_begin(), "empty validation block");
            expected_begin = f.validation_end;
        }
        v.require(expected_begin == n, "validation blocks do not end at n");
    }
    v.detail << ": " << trials << " random (n, n_splits) pairs";
    report(8, "cross-validation hygiene", v);
}

}  // namespace

int main() {
    std::printf("LOADCAST_THREADS=%u\n", env_threads());
    std::fflush(stdout);

    solver_oracle_equivalence();
    metric_identities();
    power_flow_correctness();
    cv_hygiene();

    // Reduced grid, end to end on the default data.
    ExperimentConfig smoke = default_config(2024, "smoke");
    smoke.grid.c_values = {1.0, 10.0};
    smoke.grid.epsilon_values = {0.1, 0.5};
    smoke.grid.gamma_values = {std::nullopt, 0.01};
    auto t0 = std::chrono::steady_clock::now();
    run_experiment(smoke);
    const double smoke_seconds = seconds_since(t0);
    fs::remove_all(smoke.output_dir);
    std::printf("smoke grid (2x2x2) finished in %.1f s\n", smoke_seconds);

    std::vector<SeedRun> runs;
    std::vector<ExperimentConfig> configs;
    for (std::uint64_t seed = 2024; seed < 2029; ++seed) {
        configs.push_back(default_config(seed, "seed_" + std::to_string(seed)));
        t0 = std::chrono::steady_clock::now();
        ExperimentSummary s = run_experiment(configs.back());
        runs.push_back({seed, std::move(s), seconds_since(t0)});
        const auto& e = runs.back().summary.evaluation;
        std::printf("seed %llu: %.0f s, SVR MAE %.3f, persistence MAE %.3f, best C=%g eps=%g gamma=%g\n",
                    static_cast<unsigned long long>(seed), runs.back().seconds, e.svr.mae, e.persistence.mae,
                    runs.back().summary.training.best_params.c, runs.back().summary.training.best_params.epsilon,
                    runs.back().summary.training.best_params.gamma);
        std::fflush(stdout);
    }

    end_to_end_ordering(runs, smoke_seconds);
    noise_floor(runs);
    residual_whiteness(configs.front(), runs.front().summary);
    determinism(runs.front().summary, configs.front());

    for (const auto& c : configs) fs::remove_all(c.output_dir);
    std::printf("\nsummary\n");
    for (const auto& [id, line] : g_lines) std::printf("%s\n", line.c_str());
    std::printf("%s: %d criterion(s) failed\n", g_failures == 0 ? "ACCEPTED" : "REJECTED", g_failures);
    return g_failures == 0 ? 0 : 1;
}
