#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "iws/error.hpp"
#include "iws/label_model.hpp"
#include "iws/mlp.hpp"

namespace iws {

struct ClassifierConfig {
    std::vector<Eigen::Index> hidden{20, 20};
    AdamConfig adam{300, 1e-3};
};

/// Noise-aware end model: feature standardization followed by an MLP.
class Classifier {
public:
    Classifier() = default;
    Classifier(Eigen::RowVectorXd mean, Eigen::RowVectorXd scale, Mlp net)
        : _mean(std::move(mean)), _scale(std::move(scale)), _net(std::move(net)) {}

    Eigen::Index input_dim() const { return _mean.size(); }

    Eigen::MatrixXd standardize(const Eigen::MatrixXd& X) const
    {
        if (X.cols() != input_dim())
            throw ValidationError("feature width " + std::to_string(X.cols()) + " does not match classifier input " +
                                  std::to_string(input_dim()));
        return (X.rowwise() - _mean).array().rowwise() / _scale.array();
    }

    const Mlp& network() const { return _net; }

private:
    Eigen::RowVectorXd _mean, _scale;
    Mlp _net;
};

namespace detail {
inline Classifier train_classifier(const Eigen::MatrixXd& features, const std::vector<std::size_t>& rows,
                                   const Eigen::VectorXd& targets, std::uint64_t seed, const ClassifierConfig& cfg)
{
    const auto N = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXd X(N, features.cols());
    for (Eigen::Index i = 0; i < N; ++i)
        X.row(i) = features.row(static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)]));
    const Eigen::RowVectorXd mean = X.colwise().mean();
    Eigen::RowVectorXd scale = ((X.rowwise() - mean).array().square().colwise().sum() / static_cast<double>(N)).sqrt();
    for (Eigen::Index c = 0; c < scale.size(); ++c)
        if (!(scale(c) > 1e-12))
            scale(c) = 1.0;
    X = (X.rowwise() - mean).array().rowwise() / scale.array();
    Mlp net(features.cols(), cfg.hidden, seed);
    net.train(X, targets, Eigen::VectorXd::Ones(N), cfg.adam);
    return Classifier(mean, scale, std::move(net));
}
} // namespace detail

/// Expected cross-entropy under the soft labels, restricted to rows with at
/// least one LF vote.
inline Classifier train_noise_aware(const Eigen::MatrixXd& features, const ProbLabels& labels, std::uint64_t seed,
                                    const ClassifierConfig& cfg = {})
{
    if (static_cast<std::size_t>(features.rows()) != labels.probs.size())
        throw ValidationError("feature rows do not match label count");
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < labels.probs.size(); ++i)
        if (labels.covered[i])
            rows.push_back(i);
    if (rows.empty())
        throw ValidationError("no sample is covered by any LF");
    Eigen::VectorXd t(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k)
        t(static_cast<Eigen::Index>(k)) = labels.probs[rows[k]];
    return detail::train_classifier(features, rows, t, seed, cfg);
}

/// Standard cross-entropy on hard labels in {-1,+1} for the given rows.
inline Classifier train_supervised(const Eigen::MatrixXd& features, const std::vector<std::size_t>& rows, const std::vector<int>& labels,
                                   std::uint64_t seed, const ClassifierConfig& cfg = {})
{
    if (rows.empty())
        throw ValidationError("no labeled rows to train on");
    Eigen::VectorXd t(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k)
        t(static_cast<Eigen::Index>(k)) = labels.at(rows[k]) > 0 ? 1.0 : 0.0;
    return detail::train_classifier(features, rows, t, seed, cfg);
}

inline Eigen::VectorXd predict_proba(const Classifier& clf, const Eigen::MatrixXd& features)
{
    return clf.network().predict(clf.standardize(features));
}

/// Mann-Whitney AUC; a tied (positive, negative) pair counts one half.
inline double auc(std::span<const double> scores, std::span<const int> gold)
{
    if (scores.size() != gold.size())
        throw ValidationError("score and label counts differ");
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    double pos_rank_sum = 0.0;
    std::size_t n_pos = 0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]])
            ++j;
        const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);  // average of ranks i+1..j
        for (std::size_t k = i; k < j; ++k)
            if (gold[order[k]] > 0) {
                pos_rank_sum += mid_rank;
                ++n_pos;
            }
        i = j;
    }
    const std::size_t n_neg = scores.size() - n_pos;
    if (n_pos == 0 || n_neg == 0)
        throw ValidationError("AUC needs both classes present");
    const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
    return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

inline double auc(const Eigen::VectorXd& scores, const std::vector<int>& gold)
{
    return auc(std::span<const double>(scores.data(), static_cast<std::size_t>(scores.size())), std::span<const int>(gold));
}

} // namespace iws
