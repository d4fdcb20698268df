#pragma once

#include "loadcast/features.hpp"
#include "loadcast/matrix.hpp"

#include <cstddef>
#include <filesystem>
#include <list>
#include <span>
#include <vector>

#include <json.hpp>

namespace loadcast {

struct SvrParams {
    double c = 1.0;
    double epsilon = 0.1;  // tube half-width, target units
    double gamma = 0.1;    // multiplies the squared Euclidean distance
    double tol = 1e-3;     // max KKT violation at termination
    long max_iter = 1'000'000;
    std::size_t cache_bytes = std::size_t{512} << 20;

    void validate() const;
};

/// exp(-gamma * ||x - z||^2)
double rbf_kernel(std::span<const double> x, std::span<const double> z, double gamma);

struct TrainingMeta {
    long iterations = 0;
    double max_kkt_violation = 0.0;
    double primal_objective = 0.0;
    double dual_objective = 0.0;
    double duality_gap = 0.0;
    /// KKT violation <= tol and the gap certificate
    /// gap <= max(1e-6, 1e-6 * |dual|) both hold.
    bool converged = false;
    std::size_t n_support = 0;
};

/// Gap threshold a converged solve must meet.
double gap_certificate_threshold(double dual_objective);

/// Rows of the RBF Gram matrix computed on demand and kept in an LRU cache
/// bounded by a byte budget (never fewer than two rows).
class KernelCache {
public:
    KernelCache(const Matrix& x, double gamma, std::size_t budget_bytes);

    /// Row u of the Gram matrix. The span stays valid until a later call
    /// evicts this row; the two most recently requested rows are never evicted.
    std::span<const double> row(std::size_t u);

    std::size_t hits() const noexcept { return hits_; }
    std::size_t misses() const noexcept { return misses_; }

private:
    const Matrix& x_;
    double gamma_;
    std::size_t max_rows_;
    std::vector<std::vector<double>> rows_;
    std::list<std::size_t> lru_;  // front = most recent
    std::vector<std::list<std::size_t>::iterator> where_;
    std::vector<bool> cached_;
    std::size_t hits_ = 0;
    std::size_t misses_ = 0;
};

/// Solution of the epsilon-SVR dual on a prepared design matrix:
///   max  -1/2 b'Kb - eps*sum|b_i| + y'b   s.t.  sum b_i = 0, |b_i| <= C*w_i
/// with f(x) = sum_i b_i K(x_i, x) + bias.
struct DualSolution {
    std::vector<double> beta;
    double bias = 0.0;
    TrainingMeta meta;
};

/// Two-variable working-set SMO. `box_scale`, when non-empty, scales C per
/// sample.
DualSolution solve_svr_dual(const Matrix& design, std::span<const double> y, const SvrParams& params,
                            std::span<const double> box_scale = {});

/// Primal and dual objectives of (beta, bias) evaluated from scratch.
struct Objectives {
    double primal;
    double dual;
};
Objectives svr_objectives(const Matrix& design, std::span<const double> y, std::span<const double> beta,
                          double bias, const SvrParams& params, std::span<const double> box_scale = {});

struct PipelineOptions {
    bool standardize = true;
    int poly_degree = 2;
    bool include_interactions = true;
};

struct SvrModel {
    SvrParams params;
    Preprocessor preprocessing;
    Matrix support_vectors;  // rows in preprocessed (design) space
    std::vector<double> dual_coefs;
    std::vector<std::size_t> support_indices;  // training-row index of each support vector
    double bias = 0.0;
    TrainingMeta meta;

    /// f(x) for one preprocessed row.
    double decision(std::span<const double> design_row) const;
};

inline constexpr int kModelFormatVersion = 1;

/// Fits the preprocessing chain on `x`, then solves the dual.
SvrModel train_svr(const FeatureMatrix& x, std::span<const double> y, const SvrParams& params,
                   const PipelineOptions& pipeline = {});

/// Solves the dual with an already fitted preprocessing chain.
SvrModel train_svr(const FeatureMatrix& x, std::span<const double> y, const SvrParams& params,
                   Preprocessor preprocessing, std::span<const double> box_scale = {});

std::vector<double> predict(const SvrModel& model, const FeatureMatrix& x_raw);

/// Primal minus dual objective of a trained model on its training data.
double duality_gap(const SvrModel& model, const FeatureMatrix& x_raw, std::span<const double> y);

nlohmann::json to_json(const SvrModel& model);
SvrModel model_from_json(const nlohmann::json& j);
void save_model(const SvrModel& model, const std::filesystem::path& path);
SvrModel load_model(const std::filesystem::path& path);

}  // namespace loadcast
