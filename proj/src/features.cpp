#include "loadcast/features.hpp"

#include "loadcast/error.hpp"

#include <cmath>
#include <numbers>
#include <set>

namespace loadcast {

FeatureMatrix::FeatureMatrix(std::vector<std::string> names, Matrix m)
    : column_names(std::move(names)), values(std::move(m)) {
    if (column_names.size() != values.cols()) {
        throw InvalidInput("feature matrix: column name count does not match column count");
    }
    if (std::set<std::string>(column_names.begin(), column_names.end()).size() != column_names.size()) {
        throw InvalidInput("feature matrix: duplicate column names");
    }
    for (const double v : values.data()) {
        if (!std::isfinite(v)) throw InvalidInput("feature matrix: non-finite entry");
    }
}

const std::vector<std::string>& calendar_feature_names() {
    static const std::vector<std::string> names{"hour",     "day_of_week", "day_of_year",
                                                "month",    "is_weekend",  "sin_hour",
                                                "cos_hour", "sin_doy",     "cos_doy"};
    return names;
}

FeatureMatrix extract_features(std::span<const Timestamp> timestamps) {
    if (timestamps.empty()) throw InvalidInput("extract_features: empty series");
    constexpr double two_pi = 2.0 * std::numbers::pi;
    Matrix m(timestamps.size(), calendar_feature_names().size());
    for (std::size_t i = 0; i < timestamps.size(); ++i) {
        const CalendarFields c = calendar_fields(timestamps[i]);
        const double h = c.hour;
        const double d = c.day_of_year;
        auto row = m.row(i);
        row[0] = h;
        row[1] = c.day_of_week;
        row[2] = d;
        row[3] = c.month;
        row[4] = c.day_of_week >= 5 ? 1.0 : 0.0;
        row[5] = std::sin(two_pi * h / 24.0);
        row[6] = std::cos(two_pi * h / 24.0);
        row[7] = std::sin(two_pi * d / 365.25);
        row[8] = std::cos(two_pi * d / 365.25);
    }
    return FeatureMatrix(calendar_feature_names(), std::move(m));
}

Standardizer fit_standardizer(const FeatureMatrix& x) {
    const std::size_t n = x.rows();
    const std::size_t p = x.cols();
    if (n < 2) throw InvalidInput("fit_standardizer: need at least 2 rows");
    Standardizer s;
    s.column_names = x.column_names;
    s.means.assign(p, 0.0);
    s.stddevs.assign(p, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < p; ++j) s.means[j] += x.values(i, j);
    }
    for (double& m : s.means) m /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < p; ++j) {
            const double d = x.values(i, j) - s.means[j];
            s.stddevs[j] += d * d;
        }
    }
    for (std::size_t j = 0; j < p; ++j) {
        const double sd = std::sqrt(s.stddevs[j] / static_cast<double>(n));
        // Rounding in the mean can leave a constant column with a tiny
        // nonzero spread; treat that as constant too.
        s.stddevs[j] = sd <= 1e-12 * std::max(1.0, std::abs(s.means[j])) ? 1.0 : sd;
    }
    return s;
}

FeatureMatrix apply_standardizer(const Standardizer& s, const FeatureMatrix& x) {
    if (x.cols() != s.cols()) {
        throw InvalidInput("apply_standardizer: fitted on " + std::to_string(s.cols()) + " columns, got " +
                           std::to_string(x.cols()));
    }
    if (!s.column_names.empty() && x.column_names != s.column_names) {
        throw InvalidInput("apply_standardizer: column names/order differ from the fitted matrix");
    }
    FeatureMatrix out = x;
    for (std::size_t i = 0; i < out.rows(); ++i) {
        auto row = out.values.row(i);
        for (std::size_t j = 0; j < row.size(); ++j) row[j] = (row[j] - s.means[j]) / s.stddevs[j];
    }
    return out;
}

namespace {

void combinations(std::size_t p, int degree, std::size_t first, std::vector<std::size_t>& current,
                  std::vector<std::vector<std::size_t>>& out) {
    if (static_cast<int>(current.size()) == degree) {
        out.push_back(current);
        return;
    }
    for (std::size_t j = first; j < p; ++j) {
        current.push_back(j);
        combinations(p, degree, j, current, out);
        current.pop_back();
    }
}

std::string term_name(const std::vector<std::string>& names, const std::vector<std::size_t>& term) {
    std::string out;
    std::size_t k = 0;
    while (k < term.size()) {
        std::size_t run = 1;
        while (k + run < term.size() && term[k + run] == term[k]) ++run;
        if (!out.empty()) out += '*';
        out += names[term[k]];
        if (run > 1) out += '^' + std::to_string(run);
        k += run;
    }
    return out;
}

}  // namespace

PolynomialExpander PolynomialExpander::make(std::vector<std::string> input_names, int degree,
                                            bool include_interactions) {
    if (degree < 1) throw InvalidInput("polynomial expander: degree must be >= 1");
    PolynomialExpander e;
    e.degree = degree;
    e.include_interactions = include_interactions;
    e.input_names = std::move(input_names);
    const std::size_t p = e.input_names.size();
    for (int d = 1; d <= degree; ++d) {
        if (include_interactions || d == 1) {
            std::vector<std::size_t> current;
            combinations(p, d, 0, current, e.terms);
        } else {
            for (std::size_t j = 0; j < p; ++j) e.terms.emplace_back(static_cast<std::size_t>(d), j);
        }
    }
    e.output_names.reserve(e.terms.size());
    for (const auto& t : e.terms) e.output_names.push_back(term_name(e.input_names, t));
    return e;
}

std::size_t polynomial_output_count(std::size_t p, int degree, bool include_interactions) {
    if (!include_interactions) return p * static_cast<std::size_t>(degree);
    // C(p + degree, degree) - 1
    std::size_t c = 1;
    for (int k = 1; k <= degree; ++k) c = c * (p + static_cast<std::size_t>(k)) / static_cast<std::size_t>(k);
    return c - 1;
}

FeatureMatrix expand_polynomial(const PolynomialExpander& e, const FeatureMatrix& x) {
    if (x.cols() != e.input_names.size()) {
        throw InvalidInput("expand_polynomial: expected " + std::to_string(e.input_names.size()) +
                           " columns, got " + std::to_string(x.cols()));
    }
    Matrix out(x.rows(), e.terms.size());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const auto in = x.values.row(i);
        auto o = out.row(i);
        for (std::size_t t = 0; t < e.terms.size(); ++t) {
            double v = 1.0;
            for (const std::size_t j : e.terms[t]) v *= in[j];
            o[t] = v;
        }
    }
    FeatureMatrix result;
    result.column_names = e.output_names;
    result.values = std::move(out);
    return result;
}

Preprocessor Preprocessor::fit(const FeatureMatrix& x, bool standardize, int degree, bool include_interactions) {
    Preprocessor p;
    p.standardize = standardize;
    if (standardize) p.standardizer = fit_standardizer(x);
    p.expander = PolynomialExpander::make(x.column_names, degree, include_interactions);
    return p;
}

Preprocessor Preprocessor::identity(std::vector<std::string> names) {
    Preprocessor p;
    p.standardize = false;
    p.expander = PolynomialExpander::make(std::move(names), 1, false);
    return p;
}

FeatureMatrix Preprocessor::transform(const FeatureMatrix& x) const {
    if (x.column_names != input_names()) {
        throw InvalidInput("preprocessor: input columns do not match the fitted layout");
    }
    if (standardize) return expand_polynomial(expander, apply_standardizer(standardizer, x));
    return expand_polynomial(expander, x);
}

nlohmann::json to_json(const Preprocessor& p) {
    nlohmann::json j;
    j["input_names"] = p.expander.input_names;
    if (p.standardize) {
        j["standardizer"] = {{"means", p.standardizer.means}, {"stddevs", p.standardizer.stddevs}};
    } else {
        j["standardizer"] = nullptr;
    }
    j["expander"] = {{"degree", p.expander.degree},
                     {"include_interactions", p.expander.include_interactions},
                     {"output_names", p.expander.output_names}};
    return j;
}

Preprocessor preprocessor_from_json(const nlohmann::json& j) {
    Preprocessor p;
    auto names = j.at("input_names").get<std::vector<std::string>>();
    const auto& st = j.at("standardizer");
    p.standardize = !st.is_null();
    if (p.standardize) {
        p.standardizer.column_names = names;
        p.standardizer.means = st.at("means").get<std::vector<double>>();
        p.standardizer.stddevs = st.at("stddevs").get<std::vector<double>>();
        if (p.standardizer.means.size() != names.size() || p.standardizer.stddevs.size() != names.size()) {
            throw InvalidInput("model artifact: standardizer size mismatch");
        }
    }
    const auto& ex = j.at("expander");
    p.expander = PolynomialExpander::make(std::move(names), ex.at("degree").get<int>(),
                                          ex.at("include_interactions").get<bool>());
    if (ex.at("output_names").get<std::vector<std::string>>() != p.expander.output_names) {
        throw InvalidInput("model artifact: expander output names do not match its configuration");
    }
    return p;
}

}  // namespace loadcast
