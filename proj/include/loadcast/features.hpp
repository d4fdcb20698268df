#pragma once

#include "loadcast/loadgen.hpp"
#include "loadcast/matrix.hpp"

#include <string>
#include <vector>

#include <json.hpp>

namespace loadcast {

/// Design matrix with named columns; row i belongs to timestamp i of the
/// source series.
struct FeatureMatrix {
    std::vector<std::string> column_names;
    Matrix values;

    FeatureMatrix() = default;
    /// Checks column count, name uniqueness and finiteness.
    FeatureMatrix(std::vector<std::string> names, Matrix m);

    std::size_t rows() const noexcept { return values.rows(); }
    std::size_t cols() const noexcept { return values.cols(); }
    FeatureMatrix slice_rows(std::size_t first, std::size_t last) const {
        FeatureMatrix out;
        out.column_names = column_names;
        out.values = values.slice_rows(first, last);
        return out;
    }
};

/// hour, day_of_week, day_of_year, month, is_weekend, sin_hour, cos_hour,
/// sin_doy, cos_doy.
const std::vector<std::string>& calendar_feature_names();

FeatureMatrix extract_features(std::span<const Timestamp> timestamps);
inline FeatureMatrix extract_features(const LoadSeries& series) {
    return extract_features(series.timestamps());
}

/// Per-column affine scaling to zero mean / unit population variance.
struct Standardizer {
    std::vector<std::string> column_names;
    std::vector<double> means;
    std::vector<double> stddevs;  // constant columns store 1

    std::size_t cols() const noexcept { return means.size(); }
};

Standardizer fit_standardizer(const FeatureMatrix& x);
FeatureMatrix apply_standardizer(const Standardizer& s, const FeatureMatrix& x);

/// Monomial expansion. Output keeps the original columns first, then the
/// degree-2 monomials x_i*x_j (i <= j) in lexicographic order, then degree 3,
/// and so on. Without interactions only pure powers x_i^k are produced.
struct PolynomialExpander {
    int degree = 2;
    bool include_interactions = true;
    std::vector<std::string> input_names;
    std::vector<std::string> output_names;
    /// Column index tuples (non-decreasing) for every output column.
    std::vector<std::vector<std::size_t>> terms;

    static PolynomialExpander make(std::vector<std::string> input_names, int degree,
                                   bool include_interactions);
    std::size_t output_cols() const noexcept { return terms.size(); }
};

FeatureMatrix expand_polynomial(const PolynomialExpander& e, const FeatureMatrix& x);

/// Number of output columns for p inputs.
std::size_t polynomial_output_count(std::size_t p, int degree, bool include_interactions);

/// The full fitted chain: optional standardization, then expansion.
struct Preprocessor {
    bool standardize = true;
    Standardizer standardizer;
    PolynomialExpander expander;

    static Preprocessor fit(const FeatureMatrix& x, bool standardize, int degree, bool include_interactions);
    /// Identity map onto the given columns.
    static Preprocessor identity(std::vector<std::string> names);

    FeatureMatrix transform(const FeatureMatrix& x) const;
    const std::vector<std::string>& input_names() const noexcept { return expander.input_names; }
};

nlohmann::json to_json(const Preprocessor& p);
Preprocessor preprocessor_from_json(const nlohmann::json& j);

}  // namespace loadcast
