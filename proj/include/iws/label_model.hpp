#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include <json.hpp>

#include "iws/error.hpp"
#include "iws/lf.hpp"
#include "iws/mlp.hpp"

namespace iws {

/// Canonical parameters of the binary label model: accuracy weights,
/// propensity weights and the known class prior P(y = +1).
struct LabelModelParams {
    std::vector<double> theta_acc;
    std::vector<double> theta_lab;
    double prior = 0.5;

    std::size_t m() const { return theta_acc.size(); }

    static LabelModelParams zeros(std::size_t m, double prior = 0.5) { return {std::vector<double>(m, 0.0), std::vector<double>(m, 0.0), prior}; }
};

inline nlohmann::ordered_json to_json(const LabelModelParams& p)
{
    return {{"theta_acc", p.theta_acc}, {"theta_lab", p.theta_lab}, {"prior", p.prior}};
}

inline LabelModelParams label_model_params_from_json(const nlohmann::json& j)
{
    LabelModelParams p{j.at("theta_acc").get<std::vector<double>>(), j.at("theta_lab").get<std::vector<double>>(), j.at("prior").get<double>()};
    if (p.theta_acc.size() != p.theta_lab.size())
        throw ValidationError("theta_acc and theta_lab lengths differ");
    if (!(p.prior > 0.0 && p.prior < 1.0))
        throw ValidationError("prior must be strictly inside (0,1)");
    return p;
}

namespace detail {
inline double logsumexp2(double a, double b)
{
    const double hi = std::max(a, b);
    return hi + std::log(std::exp(a - hi) + std::exp(b - hi));
}
inline double logsumexp3(double a, double b, double c)
{
    const double hi = std::max({a, b, c});
    return hi + std::log(std::exp(a - hi) + std::exp(b - hi) + std::exp(c - hi));
}

inline void check_params(const LFMatrix& lambda, const LabelModelParams& p)
{
    if (p.theta_acc.size() != lambda.p() || p.theta_lab.size() != lambda.p())
        throw ValidationError("label model has " + std::to_string(p.theta_acc.size()) + " LFs but the matrix has " +
                              std::to_string(lambda.p()) + " columns");
    if (!(p.prior > 0.0 && p.prior < 1.0))
        throw DomainError("class prior must lie strictly inside (0,1)");
}

/// log of the per-LF normalizer e^{a+b} + e^{b} + 1.
inline double log_partition_factor(double acc, double lab) { return logsumexp3(acc + lab, lab, 0.0); }

struct RowScores {
    double pos = 0.0, neg = 0.0, lab = 0.0;  ///< sum of acc weights agreeing with +1 / -1, sum of lab weights
};

inline std::vector<RowScores> row_scores(const LFMatrix& lambda, const LabelModelParams& p)
{
    std::vector<RowScores> rows(lambda.n());
    for (std::size_t j = 0; j < lambda.p(); ++j)
        for (const auto& cell : lambda.column(j)) {
            auto& r = rows[cell.row];
            (cell.value > 0 ? r.pos : r.neg) += p.theta_acc[j];
            r.lab += p.theta_lab[j];
        }
    return rows;
}
} // namespace detail

/// sum_i log sum_y pi_y exp(theta . phi(Lambda_i, y)) - n log Z, where Z
/// factorizes over LFs in the binary case.
inline double log_marginal_likelihood(const LFMatrix& lambda, const LabelModelParams& p)
{
    detail::check_params(lambda, p);
    const double lp = std::log(p.prior), ln = std::log1p(-p.prior);
    double ll = 0.0;
    for (const auto& r : detail::row_scores(lambda, p))
        ll += r.lab + detail::logsumexp2(lp + r.pos, ln + r.neg);
    double log_z = 0.0;
    for (std::size_t j = 0; j < p.m(); ++j)
        log_z += detail::log_partition_factor(p.theta_acc[j], p.theta_lab[j]);
    return ll - static_cast<double>(lambda.n()) * log_z;
}

struct LabelModelGradient {
    std::vector<double> acc;
    std::vector<double> lab;

    double max_abs() const
    {
        double m = 0.0;
        for (double g : acc)
            m = std::max(m, std::abs(g));
        for (double g : lab)
            m = std::max(m, std::abs(g));
        return m;
    }
};

/// Exact gradient of log_marginal_likelihood: posterior-expected factor counts
/// minus n times their model expectation.
inline LabelModelGradient log_marginal_likelihood_gradient(const LFMatrix& lambda, const LabelModelParams& p)
{
    detail::check_params(lambda, p);
    const auto rows = detail::row_scores(lambda, p);
    const double prior_logit = std::log(p.prior) - std::log1p(-p.prior);
    std::vector<double> q(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        q[i] = sigmoid(rows[i].pos - rows[i].neg + prior_logit);

    LabelModelGradient g{std::vector<double>(p.m(), 0.0), std::vector<double>(p.m(), 0.0)};
    const double n = static_cast<double>(lambda.n());
    for (std::size_t j = 0; j < p.m(); ++j) {
        double agree = 0.0;
        for (const auto& cell : lambda.column(j))
            agree += cell.value > 0 ? q[cell.row] : 1.0 - q[cell.row];
        const double log_z = detail::log_partition_factor(p.theta_acc[j], p.theta_lab[j]);
        const double e_acc = std::exp(p.theta_acc[j] + p.theta_lab[j] - log_z);
        const double e_lab = e_acc + std::exp(p.theta_lab[j] - log_z);
        g.acc[j] = agree - n * e_acc;
        g.lab[j] = static_cast<double>(lambda.column(j).size()) - n * e_lab;
    }
    return g;
}

enum class FactorModel { acc_only, acc_prop };

struct ClosedFormTheta {
    double theta_acc;
    std::optional<double> theta_lab;
};

struct LabelModelFitConfig {
    double step = 0.1;
    int max_steps = 2000;
    double tolerance = 1e-6;  ///< on the max-norm of the per-sample gradient
    /// Starting point: closed-form parameters of an LF with this accuracy and
    /// its observed coverage. 0.5 starts the accuracy weights at zero. A value
    /// above 0.5 selects the mode where LFs beat chance; the likelihood is
    /// symmetric under flipping every label.
    double init_accuracy = 0.7;
    /// Projects theta_acc onto [0, inf): every LF handed to the label model is
    /// believed better than chance, which is exactly theta_acc > 0.
    bool nonnegative_accuracy = true;
};

struct LabelModelFit {
    LabelModelParams params;
    int steps = 0;
    bool converged = false;
};

inline ClosedFormTheta closed_form_theta(double alpha, double coverage, int classes, FactorModel model);

/// Gradient ascent on the per-sample log marginal likelihood.
inline LabelModelFit fit_mle_report(const LFMatrix& lambda, double prior, const LabelModelFitConfig& cfg = {})
{
    if (lambda.p() < 1)
        throw ConfigError("label model needs at least one LF");
    if (lambda.n() < 1)
        throw ConfigError("label model needs at least one sample");
    for (std::size_t j = 0; j < lambda.p(); ++j)
        if (lambda.column(j).empty())
            throw ValidationError("LF column " + std::to_string(j) + " has zero coverage");
    LabelModelFit fit{LabelModelParams::zeros(lambda.p(), prior)};
    detail::check_params(lambda, fit.params);
    const double inv_n = 1.0 / static_cast<double>(lambda.n());
    for (std::size_t j = 0; j < lambda.p(); ++j) {
        // keep the starting coverage strictly inside (0,1)
        const double cov = std::clamp(static_cast<double>(lambda.column(j).size()) * inv_n, 1e-6, 1.0 - 1e-6);
        const auto init = closed_form_theta(cfg.init_accuracy, cov, 2, FactorModel::acc_prop);
        fit.params.theta_acc[j] = init.theta_acc;
        fit.params.theta_lab[j] = *init.theta_lab;
    }
    for (fit.steps = 0; fit.steps < cfg.max_steps; ++fit.steps) {
        auto g = log_marginal_likelihood_gradient(lambda, fit.params);
        if (cfg.nonnegative_accuracy)
            for (std::size_t j = 0; j < lambda.p(); ++j)
                if (fit.params.theta_acc[j] <= 0.0 && g.acc[j] < 0.0)
                    g.acc[j] = 0.0;  // projected gradient at the boundary
        if (g.max_abs() * inv_n < cfg.tolerance) {
            fit.converged = true;
            break;
        }
        for (std::size_t j = 0; j < lambda.p(); ++j) {
            fit.params.theta_acc[j] += cfg.step * inv_n * g.acc[j];
            if (cfg.nonnegative_accuracy)
                fit.params.theta_acc[j] = std::max(0.0, fit.params.theta_acc[j]);
            fit.params.theta_lab[j] += cfg.step * inv_n * g.lab[j];
        }
    }
    return fit;
}

inline LabelModelParams fit_mle(const LFMatrix& lambda, double prior, const LabelModelFitConfig& cfg = {})
{
    return fit_mle_report(lambda, prior, cfg).params;
}

/// P(y_i = +1 | Lambda_i). Rows without any vote carry the prior exactly.
struct ProbLabels {
    std::vector<double> probs;
    std::vector<char> covered;

    std::size_t covered_count() const { return static_cast<std::size_t>(std::count(covered.begin(), covered.end(), 1)); }
};

inline ProbLabels posterior_prob_labels(const LFMatrix& lambda, const LabelModelParams& p)
{
    detail::check_params(lambda, p);
    const double prior_logit = std::log(p.prior) - std::log1p(-p.prior);
    std::vector<double> score(lambda.n(), 0.0);
    std::vector<char> covered(lambda.n(), 0);
    for (std::size_t j = 0; j < lambda.p(); ++j)
        for (const auto& cell : lambda.column(j)) {
            score[cell.row] += p.theta_acc[j] * cell.value;
            covered[cell.row] = 1;
        }
    ProbLabels out{std::vector<double>(lambda.n()), std::move(covered)};
    for (std::size_t i = 0; i < lambda.n(); ++i)
        out.probs[i] = out.covered[i] ? sigmoid(score[i] + prior_logit) : p.prior;
    return out;
}

/// Optimal canonical parameters for an LF with known statistics and L classes.
/// acc_prop: alpha = P(H = Y | H != 0), coverage = P(H != 0).
/// acc_only: `alpha` is P(H = Y) and coverage is ignored.
inline ClosedFormTheta closed_form_theta(double alpha, double coverage, int classes, FactorModel model)
{
    if (classes < 2)
        throw DomainError("class count must be at least 2");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw DomainError("accuracy must lie strictly inside (0,1)");
    const double L = classes;
    if (model == FactorModel::acc_only)
        return {std::log(alpha * L / (1.0 - alpha)), std::nullopt};
    if (!(coverage > 0.0 && coverage < 1.0))
        throw DomainError("coverage must lie strictly inside (0,1)");
    return {std::log((L - 1.0) * alpha / (1.0 - alpha)), std::log((1.0 - alpha) * coverage / ((L - 1.0) * (1.0 - coverage)))};
}

struct ImpliedStats {
    double alpha;     ///< P(H = Y | H != 0)
    double coverage;  ///< P(H != 0)
};

/// Statistics implied by (theta_acc, theta_lab) under the accuracy + propensity model.
inline ImpliedStats implied_stats(double theta_acc, double theta_lab, int classes = 2)
{
    const double a = std::exp(theta_acc + theta_lab);
    const double wrong = (classes - 1) * std::exp(theta_lab);
    return {a / (a + wrong), 1.0 - 1.0 / (a + wrong + 1.0)};
}

/// Lower bound on P(y_hat = y*) for the weighted vote sign(sum theta_j lambda_j).
inline double theorem_bound(std::span<const double> theta_acc, std::span<const double> alpha, std::span<const double> coverage)
{
    if (theta_acc.size() != alpha.size() || alpha.size() != coverage.size())
        throw ValidationError("theorem_bound inputs differ in length");
    double num = 0.0, sq = 0.0;
    for (std::size_t j = 0; j < theta_acc.size(); ++j) {
        num += theta_acc[j] * (2.0 * alpha[j] - 1.0) * coverage[j];
        sq += theta_acc[j] * theta_acc[j];
    }
    if (sq == 0.0)
        throw DomainError("theorem_bound needs a non-zero accuracy weight vector");
    return std::clamp(1.0 - std::exp(-(num * num) / (2.0 * sq)), 0.0, 1.0);
}

/// sign of the row sum; ties and all-abstain rows give +1.
inline std::vector<int> majority_vote(const LFMatrix& lambda)
{
    std::vector<int> sum(lambda.n(), 0);
    for (std::size_t j = 0; j < lambda.p(); ++j)
        for (const auto& cell : lambda.column(j))
            sum[cell.row] += cell.value;
    std::vector<int> out(lambda.n());
    for (std::size_t i = 0; i < lambda.n(); ++i)
        out[i] = sum[i] >= 0 ? 1 : -1;
    return out;
}

} // namespace iws
