#include "loadcast/svr.hpp"

#include "loadcast/error.hpp"
#include "loadcast/io.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace loadcast {

void SvrParams::validate() const {
    if (!(c > 0.0)) throw InvalidInput("svr: C must be > 0");
    if (!(epsilon >= 0.0)) throw InvalidInput("svr: epsilon must be >= 0");
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw InvalidInput("svr: gamma must be finite and > 0");
    if (!(tol > 0.0)) throw InvalidInput("svr: tol must be > 0");
    if (max_iter < 1) throw InvalidInput("svr: max_iter must be >= 1");
}

namespace {

// Four independent partial sums; every kernel evaluation in the library goes
// through here so cached and on-the-fly values agree bit for bit.
double squared_distance(const double* x, const double* z, std::size_t p) noexcept {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t k = 0;
    for (; k + 4 <= p; k += 4) {
        const double d0 = x[k] - z[k];
        const double d1 = x[k + 1] - z[k + 1];
        const double d2 = x[k + 2] - z[k + 2];
        const double d3 = x[k + 3] - z[k + 3];
        s0 += d0 * d0;
        s1 += d1 * d1;
        s2 += d2 * d2;
        s3 += d3 * d3;
    }
    for (; k < p; ++k) {
        const double d = x[k] - z[k];
        s0 += d * d;
    }
    return (s0 + s1) + (s2 + s3);
}

}  // namespace

double rbf_kernel(std::span<const double> x, std::span<const double> z, double gamma) {
    if (x.size() != z.size()) {
        throw InvalidInput("rbf_kernel: dimension mismatch (" + std::to_string(x.size()) + " vs " +
                           std::to_string(z.size()) + ")");
    }
    return std::exp(-gamma * squared_distance(x.data(), z.data(), x.size()));
}

double gap_certificate_threshold(double dual_objective) {
    return std::max(1e-6, 1e-6 * std::abs(dual_objective));
}

// ---------------------------------------------------------------- KernelCache

KernelCache::KernelCache(const Matrix& x, double gamma, std::size_t budget_bytes)
    : x_(x), gamma_(gamma), rows_(x.rows()), where_(x.rows()), cached_(x.rows(), false) {
    const std::size_t row_bytes = std::max<std::size_t>(1, x.rows()) * sizeof(double);
    max_rows_ = std::max<std::size_t>(2, budget_bytes / row_bytes);
}

std::span<const double> KernelCache::row(std::size_t u) {
    if (cached_[u]) {
        ++hits_;
        lru_.splice(lru_.begin(), lru_, where_[u]);
        return rows_[u];
    }
    ++misses_;
    std::vector<double> buf;
    if (lru_.size() >= max_rows_) {
        const std::size_t victim = lru_.back();
        lru_.pop_back();
        cached_[victim] = false;
        buf = std::move(rows_[victim]);
        rows_[victim] = {};
    }
    const std::size_t n = x_.rows();
    buf.resize(n);
    const auto xu = x_.row(u);
    for (std::size_t v = 0; v < n; ++v) {
        if (v == u) {
            buf[v] = 1.0;
            continue;
        }
        buf[v] = std::exp(-gamma_ * squared_distance(xu.data(), x_.row(v).data(), xu.size()));
    }
    rows_[u] = std::move(buf);
    lru_.push_front(u);
    where_[u] = lru_.begin();
    cached_[u] = true;
    return rows_[u];
}

// ---------------------------------------------------------------- SMO solver

namespace {

/// SMO over the 2n-variable form: alpha_t in [0, C_t], sign s_t = +1 for
/// t < n (alpha) and -1 for t >= n (alpha*), minimizing
///   1/2 a'Qa + p'a,  Q_ts = s_t s_s K(t mod n, s mod n),
///   p_t = eps - y_t (t < n), eps + y_t (t >= n),  sum s_t a_t = 0.
///
/// Variables stuck at a bound are shrunk out of the active set as in libsvm;
/// grad_bar_ holds the contribution of upper-bounded variables so the full
/// gradient can be rebuilt before any final optimality check.
class SmoSolver {
public:
    SmoSolver(const Matrix& x, std::span<const double> y, const SvrParams& params,
              std::span<const double> box_scale)
        : n_(x.rows()), y_(y), yc_(n_), params_(params), cache_(x, params.gamma, params.cache_bytes),
          alpha_(2 * n_, 0.0), grad_(2 * n_), grad_bar_(2 * n_, 0.0), p_(2 * n_), box_(2 * n_),
          active_(2 * n_) {
        // Centering keeps the linear term on the same scale as the kernel
        // terms; the optimum is unchanged because sum(beta) = 0.
        for (const double v : y) y_mean_ += v;
        y_mean_ /= static_cast<double>(n_);
        for (std::size_t i = 0; i < n_; ++i) {
            yc_[i] = y[i] - y_mean_;
            p_[i] = params.epsilon - yc_[i];
            p_[i + n_] = params.epsilon + yc_[i];
            const double c = params.c * (box_scale.empty() ? 1.0 : box_scale[i]);
            box_[i] = c;
            box_[i + n_] = c;
        }
        grad_ = p_;
        for (std::size_t t = 0; t < 2 * n_; ++t) active_[t] = t;
        split_ = n_;
    }

    DualSolution solve() {
        DualSolution out;
        long iter = 0;
        double tol = params_.tol;
        double violation = 0.0;
        bool kkt_met = false;
        while (true) {
            kkt_met = false;
            bool unshrunk = false;
            long counter = shrink_period();
            while (iter < params_.max_iter) {
                if (--counter == 0) {
                    counter = shrink_period();
                    shrink(tol, unshrunk);
                }
                std::size_t i = 0, j = 0;
                violation = select_working_set(i, j);
                if (violation <= tol && active_.size() < 2 * n_) {
                    unshrink();
                    violation = select_working_set(i, j);
                    counter = 1;
                }
                if (violation <= tol) {
                    kkt_met = true;
                    break;
                }
                update_pair(i, j);
                ++iter;
            }
            if (!kkt_met) {
                unshrink();
                violation = current_violation();
            }
            out.beta = beta();
            out.bias = bias();
            objectives(out.beta, out.bias, out.meta);
            out.meta.converged = false;
            if (!kkt_met) break;
            if (out.meta.duality_gap <= gap_certificate_threshold(out.meta.dual_objective)) {
                out.meta.converged = true;
                break;
            }
            // KKT met at `tol` but the gap is not certified yet: tighten and keep
            // iterating from the current point.
            if (tol <= kMinTol) break;
            tol = std::max(tol * 0.1, kMinTol);
        }
        out.meta.iterations = iter;
        out.meta.max_kkt_violation = violation;
        out.meta.n_support = static_cast<std::size_t>(
            std::count_if(out.beta.begin(), out.beta.end(), [](double b) { return b != 0.0; }));
        return out;
    }

private:
    static constexpr double kTau = 1e-12;
    static constexpr double kMinTol = 1e-12;

    long shrink_period() const noexcept { return static_cast<long>(std::min<std::size_t>(2 * n_, 1000)); }
    double sign(std::size_t t) const noexcept { return t < n_ ? 1.0 : -1.0; }
    std::size_t unit(std::size_t t) const noexcept { return t < n_ ? t : t - n_; }
    bool at_upper(std::size_t t) const noexcept { return alpha_[t] >= box_[t]; }
    bool at_lower(std::size_t t) const noexcept { return alpha_[t] <= 0.0; }
    bool in_up(std::size_t t) const noexcept { return t < n_ ? !at_upper(t) : !at_lower(t); }
    bool in_low(std::size_t t) const noexcept { return t < n_ ? !at_lower(t) : !at_upper(t); }

    double current_violation() const {
        double gmax = -std::numeric_limits<double>::infinity();
        double gmax2 = -std::numeric_limits<double>::infinity();
        for (const std::size_t t : active_) {
            const double sg = sign(t) * grad_[t];
            if (in_up(t)) gmax = std::max(gmax, -sg);
            if (in_low(t)) gmax2 = std::max(gmax2, sg);
        }
        return gmax + gmax2;
    }

    /// Picks i as the maximal violator and j by the second-order gain rule
    /// within the active set; returns the maximal KKT violation there. Ties
    /// keep the lowest index.
    double select_working_set(std::size_t& out_i, std::size_t& out_j) {
        const std::size_t none = 2 * n_;
        double gmax = -std::numeric_limits<double>::infinity();
        std::size_t i = none;
        for (const std::size_t t : active_) {
            if (!in_up(t)) continue;
            const double v = -sign(t) * grad_[t];
            if (v > gmax) {
                gmax = v;
                i = t;
            }
        }
        double gmax2 = -std::numeric_limits<double>::infinity();
        if (i == none) {
            for (const std::size_t t : active_) {
                if (in_low(t)) gmax2 = std::max(gmax2, sign(t) * grad_[t]);
            }
            out_i = out_j = 0;
            return gmax + gmax2;
        }

        const auto ki = cache_.row(unit(i));
        std::size_t j = none;
        double best = std::numeric_limits<double>::infinity();
        for (const std::size_t t : active_) {
            if (!in_low(t)) continue;
            const double sg = sign(t) * grad_[t];
            gmax2 = std::max(gmax2, sg);
            const double diff = gmax + sg;
            if (diff <= 0.0) continue;
            // K(i,i) = K(t,t) = 1 for the RBF kernel.
            double quad = 2.0 - 2.0 * ki[unit(t)];
            if (quad <= 0.0) quad = kTau;
            const double gain = -(diff * diff) / quad;
            if (gain < best) {
                best = gain;
                j = t;
            }
        }
        out_i = i;
        out_j = j == none ? i : j;
        return gmax + gmax2;
    }

    bool be_shrunk(std::size_t t, double gmax1, double gmax2) const {
        if (at_upper(t)) return t < n_ ? -grad_[t] > gmax1 : -grad_[t] > gmax2;
        if (at_lower(t)) return t < n_ ? grad_[t] > gmax2 : grad_[t] > gmax1;
        return false;
    }

    void shrink(double tol, bool& unshrunk) {
        double gmax1 = -std::numeric_limits<double>::infinity();
        double gmax2 = -std::numeric_limits<double>::infinity();
        for (const std::size_t t : active_) {
            const double sg = sign(t) * grad_[t];
            if (in_up(t)) gmax1 = std::max(gmax1, -sg);
            if (in_low(t)) gmax2 = std::max(gmax2, sg);
        }
        if (!unshrunk && gmax1 + gmax2 <= tol * 10.0) {
            unshrunk = true;
            unshrink();
        }
        std::size_t kept = 0;
        split_ = 0;
        for (const std::size_t t : active_) {
            if (be_shrunk(t, gmax1, gmax2)) continue;
            active_[kept++] = t;
            if (t < n_) split_ = kept;
        }
        active_.resize(kept);
    }

    /// Rebuilds the gradient of shrunk variables and reactivates everything:
    /// G_t = p_t + grad_bar_t + sum over free s of Q_ts a_s.
    void unshrink() {
        if (active_.size() == 2 * n_) return;
        std::vector<char> is_active(2 * n_, 0);
        for (const std::size_t t : active_) is_active[t] = 1;
        std::vector<std::size_t> inactive;
        std::vector<std::size_t> free;
        for (std::size_t t = 0; t < 2 * n_; ++t) {
            if (!is_active[t]) {
                inactive.push_back(t);
                grad_[t] = p_[t] + grad_bar_[t];
            } else if (!at_upper(t) && !at_lower(t)) {
                free.push_back(t);
            }
        }
        if (free.size() <= inactive.size()) {
            for (const std::size_t s : free) {
                const auto ks = cache_.row(unit(s));
                const double a = sign(s) * alpha_[s];
                for (const std::size_t t : inactive) grad_[t] += sign(t) * a * ks[unit(t)];
            }
        } else {
            for (const std::size_t t : inactive) {
                const auto kt = cache_.row(unit(t));
                double acc = 0.0;
                for (const std::size_t s : free) acc += sign(s) * alpha_[s] * kt[unit(s)];
                grad_[t] += sign(t) * acc;
            }
        }
        active_.resize(2 * n_);
        for (std::size_t t = 0; t < 2 * n_; ++t) active_[t] = t;
        split_ = n_;
    }

    void update_pair(std::size_t i, std::size_t j) {
        const std::size_t iu = unit(i);
        const std::size_t ju = unit(j);
        const auto ki = cache_.row(iu);
        const auto kj = cache_.row(ju);
        const double ci = box_[i];
        const double cj = box_[j];
        const double old_i = alpha_[i];
        const double old_j = alpha_[j];
        const bool upper_i = at_upper(i);
        const bool upper_j = at_upper(j);
        double quad = 2.0 - 2.0 * ki[ju];
        if (quad <= 0.0) quad = kTau;

        double& ai = alpha_[i];
        double& aj = alpha_[j];
        if (sign(i) != sign(j)) {
            const double delta = (-grad_[i] - grad_[j]) / quad;
            const double diff = ai - aj;
            ai += delta;
            aj += delta;
            if (diff > 0.0) {
                if (aj < 0.0) {
                    aj = 0.0;
                    ai = diff;
                }
            } else if (ai < 0.0) {
                ai = 0.0;
                aj = -diff;
            }
            if (diff > ci - cj) {
                if (ai > ci) {
                    ai = ci;
                    aj = ci - diff;
                }
            } else if (aj > cj) {
                aj = cj;
                ai = cj + diff;
            }
        } else {
            const double delta = (grad_[i] - grad_[j]) / quad;
            const double sum = ai + aj;
            ai -= delta;
            aj += delta;
            if (sum > ci) {
                if (ai > ci) {
                    ai = ci;
                    aj = sum - ci;
                }
            } else if (aj < 0.0) {
                aj = 0.0;
                ai = sum;
            }
            if (sum > cj) {
                if (aj > cj) {
                    aj = cj;
                    ai = sum - cj;
                }
            } else if (ai < 0.0) {
                ai = 0.0;
                aj = sum;
            }
        }

        // G_t += Q_ti dA_i + Q_tj dA_j over the active set; the active list is
        // sorted, so alpha entries come before alpha* entries.
        const double di = sign(i) * (ai - old_i);
        const double dj = sign(j) * (aj - old_j);
        for (std::size_t k = 0; k < split_; ++k) {
            const std::size_t t = active_[k];
            grad_[t] += di * ki[t] + dj * kj[t];
        }
        for (std::size_t k = split_; k < active_.size(); ++k) {
            const std::size_t t = active_[k];
            grad_[t] -= di * ki[t - n_] + dj * kj[t - n_];
        }

        update_grad_bar(i, upper_i, ki);
        update_grad_bar(j, upper_j, kj);
    }

    void update_grad_bar(std::size_t t, bool was_upper, std::span<const double> kt) {
        const bool now_upper = at_upper(t);
        if (was_upper == now_upper) return;
        const double c = (now_upper ? box_[t] : -box_[t]) * sign(t);
        for (std::size_t u = 0; u < n_; ++u) {
            grad_bar_[u] += c * kt[u];
            grad_bar_[u + n_] -= c * kt[u];
        }
    }

    std::vector<double> beta() const {
        std::vector<double> b(n_);
        for (std::size_t i = 0; i < n_; ++i) b[i] = alpha_[i] - alpha_[i + n_];
        return b;
    }

    /// Mean of s_t G_t over free variables, else the midpoint of the
    /// feasible interval; bias = -rho (plus the centering offset).
    double bias() const {
        double ub = std::numeric_limits<double>::infinity();
        double lb = -std::numeric_limits<double>::infinity();
        double sum_free = 0.0;
        std::size_t n_free = 0;
        for (std::size_t t = 0; t < 2 * n_; ++t) {
            const double yg = sign(t) * grad_[t];
            // Round-off residue of order 1e-17 next to a bound must not pin b.
            const double slack = 1e-12 * box_[t];
            if (alpha_[t] >= box_[t] - slack) {
                if (t >= n_) {
                    ub = std::min(ub, yg);
                } else {
                    lb = std::max(lb, yg);
                }
            } else if (alpha_[t] <= slack) {
                if (t < n_) {
                    ub = std::min(ub, yg);
                } else {
                    lb = std::max(lb, yg);
                }
            } else {
                ++n_free;
                sum_free += yg;
            }
        }
        const double rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : (ub + lb) / 2.0;
        return y_mean_ - rho;
    }

    /// Objectives from the maintained gradient: (K beta)_i = G_i - p_i.
    void objectives(const std::vector<double>& b, double bias, TrainingMeta& meta) const {
        double quad = 0.0;
        double linear = 0.0;
        double abs_sum = 0.0;
        double loss = 0.0;
        for (std::size_t i = 0; i < n_; ++i) {
            const double kb = grad_[i] - p_[i];
            quad += b[i] * kb;
            linear += y_[i] * b[i];
            abs_sum += std::abs(b[i]);
            const double r = std::abs(y_[i] - kb - bias) - params_.epsilon;
            if (r > 0.0) loss += box_[i] * r;
        }
        meta.primal_objective = 0.5 * quad + loss;
        meta.dual_objective = -0.5 * quad - params_.epsilon * abs_sum + linear;
        meta.duality_gap = meta.primal_objective - meta.dual_objective;
    }

    std::size_t n_;
    std::span<const double> y_;
    std::vector<double> yc_;
    double y_mean_ = 0.0;
    SvrParams params_;
    KernelCache cache_;
    std::vector<double> alpha_;
    std::vector<double> grad_;
    std::vector<double> grad_bar_;
    std::vector<double> p_;
    std::vector<double> box_;
    std::vector<std::size_t> active_;  // sorted
    std::size_t split_ = 0;            // active_[0, split_) are alpha entries
};

void check_training_inputs(const Matrix& x, std::span<const double> y, std::span<const double> box_scale) {
    if (x.rows() < 2) throw InvalidInput("train_svr: need at least 2 samples");
    if (y.size() != x.rows()) throw InvalidInput("train_svr: X and y lengths differ");
    for (const double v : x.data()) {
        if (!std::isfinite(v)) throw InvalidInput("train_svr: non-finite feature value");
    }
    for (const double v : y) {
        if (!std::isfinite(v)) throw InvalidInput("train_svr: non-finite target");
    }
    if (!box_scale.empty()) {
        if (box_scale.size() != y.size()) throw InvalidInput("train_svr: box_scale length differs from y");
        for (const double w : box_scale) {
            if (!(w > 0.0) || !std::isfinite(w)) throw InvalidInput("train_svr: box_scale entries must be > 0");
        }
    }
}

}  // namespace

DualSolution solve_svr_dual(const Matrix& design, std::span<const double> y, const SvrParams& params,
                            std::span<const double> box_scale) {
    params.validate();
    check_training_inputs(design, y, box_scale);
    SmoSolver solver(design, y, params, box_scale);
    return solver.solve();
}

Objectives svr_objectives(const Matrix& design, std::span<const double> y, std::span<const double> beta,
                          double bias, const SvrParams& params, std::span<const double> box_scale) {
    const std::size_t n = design.rows();
    std::vector<double> kb(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (beta[j] != 0.0) kb[i] += beta[j] * rbf_kernel(design.row(i), design.row(j), params.gamma);
        }
    }
    double quad = 0.0, linear = 0.0, abs_sum = 0.0, loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        quad += beta[i] * kb[i];
        linear += y[i] * beta[i];
        abs_sum += std::abs(beta[i]);
        const double c = params.c * (box_scale.empty() ? 1.0 : box_scale[i]);
        loss += c * std::max(0.0, std::abs(y[i] - kb[i] - bias) - params.epsilon);
    }
    return {0.5 * quad + loss, -0.5 * quad - params.epsilon * abs_sum + linear};
}

// ---------------------------------------------------------------- model

double SvrModel::decision(std::span<const double> design_row) const {
    double f = bias;
    for (std::size_t k = 0; k < dual_coefs.size(); ++k) {
        f += dual_coefs[k] * rbf_kernel(support_vectors.row(k), design_row, params.gamma);
    }
    return f;
}

SvrModel train_svr(const FeatureMatrix& x, std::span<const double> y, const SvrParams& params,
                   Preprocessor preprocessing, std::span<const double> box_scale) {
    const FeatureMatrix design = preprocessing.transform(x);
    DualSolution sol = solve_svr_dual(design.values, y, params, box_scale);

    SvrModel model;
    model.params = params;
    model.preprocessing = std::move(preprocessing);
    model.bias = sol.bias;
    model.meta = sol.meta;
    std::vector<double> sv_data;
    for (std::size_t i = 0; i < sol.beta.size(); ++i) {
        if (sol.beta[i] == 0.0) continue;
        model.dual_coefs.push_back(sol.beta[i]);
        model.support_indices.push_back(i);
        const auto r = design.values.row(i);
        sv_data.insert(sv_data.end(), r.begin(), r.end());
    }
    model.support_vectors = Matrix(model.dual_coefs.size(), design.cols(), std::move(sv_data));
    return model;
}

SvrModel train_svr(const FeatureMatrix& x, std::span<const double> y, const SvrParams& params,
                   const PipelineOptions& pipeline) {
    params.validate();
    if (x.rows() < 2) throw InvalidInput("train_svr: need at least 2 samples");
    return train_svr(x, y, params,
                     Preprocessor::fit(x, pipeline.standardize, pipeline.poly_degree, pipeline.include_interactions));
}

std::vector<double> predict(const SvrModel& model, const FeatureMatrix& x_raw) {
    const FeatureMatrix design = model.preprocessing.transform(x_raw);
    if (design.cols() != model.support_vectors.cols() && model.support_vectors.rows() > 0) {
        throw InvalidInput("predict: preprocessed width does not match the support vectors");
    }
    std::vector<double> out(design.rows());
    for (std::size_t i = 0; i < design.rows(); ++i) out[i] = model.decision(design.values.row(i));
    return out;
}

double duality_gap(const SvrModel& model, const FeatureMatrix& x_raw, std::span<const double> y) {
    if (y.size() != x_raw.rows()) throw InvalidInput("duality_gap: X and y lengths differ");
    const FeatureMatrix design = model.preprocessing.transform(x_raw);
    double quad = 0.0, linear = 0.0, abs_sum = 0.0, loss = 0.0;
    for (std::size_t k = 0; k < model.dual_coefs.size(); ++k) {
        const std::size_t i = model.support_indices[k];
        if (i >= y.size()) throw InvalidInput("duality_gap: support index outside the training data");
        const double b = model.dual_coefs[k];
        quad += b * (model.decision(model.support_vectors.row(k)) - model.bias);
        linear += y[i] * b;
        abs_sum += std::abs(b);
    }
    for (std::size_t i = 0; i < design.rows(); ++i) {
        const double f = model.decision(design.values.row(i));
        loss += std::max(0.0, std::abs(y[i] - f) - model.params.epsilon);
    }
    const double primal = 0.5 * quad + model.params.c * loss;
    const double dual = -0.5 * quad - model.params.epsilon * abs_sum + linear;
    return primal - dual;
}

// ---------------------------------------------------------------- JSON

nlohmann::json to_json(const SvrModel& m) {
    nlohmann::json sv = nlohmann::json::array();
    for (std::size_t k = 0; k < m.support_vectors.rows(); ++k) {
        const auto r = m.support_vectors.row(k);
        sv.push_back(std::vector<double>(r.begin(), r.end()));
    }
    return {
        {"format_version", kModelFormatVersion},
        {"kind", "epsilon-svr/rbf"},
        {"params",
         {{"c", m.params.c},
          {"epsilon", m.params.epsilon},
          {"gamma", m.params.gamma},
          {"tol", m.params.tol},
          {"max_iter", m.params.max_iter},
          {"cache_bytes", m.params.cache_bytes}}},
        {"preprocessing", to_json(m.preprocessing)},
        {"bias", m.bias},
        {"dual_coefs", m.dual_coefs},
        {"support_indices", m.support_indices},
        {"support_vectors", std::move(sv)},
        {"training_meta",
         {{"iterations", m.meta.iterations},
          {"max_kkt_violation", m.meta.max_kkt_violation},
          {"primal_objective", m.meta.primal_objective},
          {"dual_objective", m.meta.dual_objective},
          {"duality_gap", m.meta.duality_gap},
          {"converged", m.meta.converged},
          {"n_support", m.meta.n_support}}},
    };
}

SvrModel model_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format_version").get<int>() != kModelFormatVersion) {
            throw InvalidInput("model artifact: unsupported format_version");
        }
        SvrModel m;
        const auto& p = j.at("params");
        m.params.c = p.at("c").get<double>();
        m.params.epsilon = p.at("epsilon").get<double>();
        m.params.gamma = p.at("gamma").get<double>();
        m.params.tol = p.at("tol").get<double>();
        m.params.max_iter = p.at("max_iter").get<long>();
        m.params.cache_bytes = p.at("cache_bytes").get<std::size_t>();
        m.params.validate();
        m.preprocessing = preprocessor_from_json(j.at("preprocessing"));
        m.bias = j.at("bias").get<double>();
        m.dual_coefs = j.at("dual_coefs").get<std::vector<double>>();
        m.support_indices = j.at("support_indices").get<std::vector<std::size_t>>();
        const auto& sv = j.at("support_vectors");
        const std::size_t width = m.preprocessing.expander.output_cols();
        std::vector<double> data;
        data.reserve(sv.size() * width);
        for (const auto& row : sv) {
            auto r = row.get<std::vector<double>>();
            if (r.size() != width) throw InvalidInput("model artifact: support vector width mismatch");
            data.insert(data.end(), r.begin(), r.end());
        }
        m.support_vectors = Matrix(sv.size(), width, std::move(data));
        if (m.dual_coefs.size() != m.support_vectors.rows() || m.support_indices.size() != m.dual_coefs.size()) {
            throw InvalidInput("model artifact: coefficient / support vector count mismatch");
        }
        const auto& meta = j.at("training_meta");
        m.meta.iterations = meta.at("iterations").get<long>();
        m.meta.max_kkt_violation = meta.at("max_kkt_violation").get<double>();
        m.meta.primal_objective = meta.at("primal_objective").get<double>();
        m.meta.dual_objective = meta.at("dual_objective").get<double>();
        m.meta.duality_gap = meta.at("duality_gap").get<double>();
        m.meta.converged = meta.at("converged").get<bool>();
        m.meta.n_support = meta.at("n_support").get<std::size_t>();
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("model artifact: ") + e.what());
    }
}

void save_model(const SvrModel& model, const std::filesystem::path& path) {
    io::write_file(path, to_json(model).dump(1) + "\n");
}

SvrModel load_model(const std::filesystem::path& path) {
    const std::string text = io::read_file(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput("model artifact '" + path.string() + "': " + e.what());
    }
    return model_from_json(j);
}

}  // namespace loadcast
