#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "iws/error.hpp"
#include "iws/lf.hpp"
#include "iws/linalg.hpp"
#include "iws/mlp.hpp"

namespace iws {

enum class Response { useful, not_useful, unsure };

inline std::string to_string(Response r)
{
    switch (r) {
    case Response::useful: return "useful";
    case Response::not_useful: return "not_useful";
    case Response::unsure: return "unsure";
    }
    return "unsure";
}

inline Response parse_response(const std::string& s)
{
    if (s == "useful")
        return Response::useful;
    if (s == "not_useful")
        return Response::not_useful;
    if (s == "unsure")
        return Response::unsure;
    throw ConfigError("unknown response '" + s + "'", "response");
}

struct QueryRecord {
    std::size_t lf_id = 0;
    Response response = Response::unsure;
    double weight = 1.0;  ///< 1.0 confident, 0.5 unconfident
    int iteration = 0;    ///< 1-based

    bool labeled() const { return response != Response::unsure; }
    bool operator==(const QueryRecord&) const = default;
};

/// Expert interactions in the order they happened.
class QueryDataset {
public:
    const std::vector<QueryRecord>& records() const { return _records; }
    std::size_t size() const { return _records.size(); }
    bool empty() const { return _records.empty(); }

    bool contains(std::size_t lf_id) const { return _ids.count(lf_id) > 0; }

    /// Appends with iteration = size()+1.
    const QueryRecord& append(std::size_t lf_id, Response response, double weight = 1.0)
    {
        if (contains(lf_id))
            throw ProtocolError("LF " + std::to_string(lf_id) + " was already queried");
        if (weight != 1.0 && weight != 0.5)
            throw ValidationError("query weight must be 1.0 or 0.5");
        _records.push_back({lf_id, response, weight, static_cast<int>(_records.size()) + 1});
        _ids.insert(lf_id);
        return _records.back();
    }

    std::size_t count(Response r) const
    {
        return static_cast<std::size_t>(std::count_if(_records.begin(), _records.end(), [r](const QueryRecord& q) { return q.response == r; }));
    }

    /// First k records as their own dataset.
    QueryDataset prefix(std::size_t k) const
    {
        QueryDataset q;
        for (std::size_t i = 0; i < std::min(k, size()); ++i)
            q.append(_records[i].lf_id, _records[i].response, _records[i].weight);
        return q;
    }

    std::unordered_set<std::size_t> queried_ids() const { return _ids; }

private:
    std::vector<QueryRecord> _records;
    std::unordered_set<std::size_t> _ids;
};

inline nlohmann::ordered_json to_json(const QueryDataset& q)
{
    auto arr = nlohmann::ordered_json::array();
    for (const auto& r : q.records())
        arr.push_back({{"lf_id", r.lf_id}, {"response", to_string(r.response)}, {"weight", r.weight}, {"iteration", r.iteration}});
    return arr;
}

inline QueryDataset query_dataset_from_json(const nlohmann::json& arr)
{
    QueryDataset q;
    for (const auto& j : arr) {
        const auto& rec = q.append(j.at("lf_id").get<std::size_t>(), parse_response(j.at("response").get<std::string>()),
                                   j.value("weight", 1.0));
        if (j.contains("iteration") && j["iteration"].get<int>() != rec.iteration)
            throw ValidationError("query iterations must increase by one from 1");
    }
    return q;
}

// ---------------------------------------------------------------------------
// LF features
// ---------------------------------------------------------------------------

/// p x d' matrix; row j is LF j's output column projected onto the leading
/// principal directions of the pool.
struct LFFeatures {
    Eigen::MatrixXd matrix;
    Eigen::MatrixXd components;  ///< p x d' left singular vectors of the centred pool

    Eigen::Index width() const { return matrix.cols(); }
};

/// PCA of the LF output vectors: every LF is an observation in R^n, centred
/// by the mean LF, then projected to min(d', p, n) components.
inline LFFeatures featurize_lfs(const LFMatrix& lambda, Eigen::Index d_prime = 150)
{
    if (lambda.p() < 2)
        throw ConfigError("featurizing LFs needs at least two LFs");
    if (lambda.nnz() == 0)
        throw ValidationError("LF matrix is all abstain");
    const auto p = static_cast<Eigen::Index>(lambda.p());
    const auto n = static_cast<Eigen::Index>(lambda.n());
    Eigen::MatrixXd X = Eigen::MatrixXd::Zero(p, n);
    for (std::size_t j = 0; j < lambda.p(); ++j)
        for (const auto& cell : lambda.column(j))
            X(static_cast<Eigen::Index>(j), cell.row) = cell.value;
    const Eigen::RowVectorXd mean = X.colwise().mean();
    X.rowwise() -= mean;
    auto svd = truncated_svd(X, d_prime);
    LFFeatures f;
    f.matrix = svd.U * svd.S.asDiagonal();
    f.components = std::move(svd.U);
    return f;
}

// ---------------------------------------------------------------------------
// Bagged MLP ensemble
// ---------------------------------------------------------------------------

struct EnsembleConfig {
    int members = 50;
    std::vector<Eigen::Index> hidden{10, 10};
    AdamConfig adam{200, 1e-3};
};

struct EnsembleModel {
    std::vector<Mlp> members;
};

/// Cold-start value used before any fit is possible.
struct AccuracyPosterior {
    double mean = 0.5;
    double stddev = 0.25;
};

/// Trains each member on a with-replacement bootstrap of the labeled records.
/// Returns nullopt (skip) unless Q holds at least one useful and one
/// not_useful response. Records are sorted by lf_id before resampling so the
/// result does not depend on query order.
inline std::optional<EnsembleModel> fit_ensemble(const LFFeatures& features, const QueryDataset& q, std::uint64_t seed,
                                                 const EnsembleConfig& cfg = {})
{
    std::vector<QueryRecord> labeled;
    for (const auto& r : q.records())
        if (r.labeled())
            labeled.push_back(r);
    const bool has_pos = std::any_of(labeled.begin(), labeled.end(), [](const QueryRecord& r) { return r.response == Response::useful; });
    const bool has_neg = std::any_of(labeled.begin(), labeled.end(), [](const QueryRecord& r) { return r.response == Response::not_useful; });
    if (!has_pos || !has_neg)
        return std::nullopt;
    std::sort(labeled.begin(), labeled.end(), [](const QueryRecord& a, const QueryRecord& b) { return a.lf_id < b.lf_id; });
    for (const auto& r : labeled)
        if (static_cast<Eigen::Index>(r.lf_id) >= features.matrix.rows())
            throw ValidationError("query references LF " + std::to_string(r.lf_id) + " outside the feature matrix");

    const auto N = static_cast<Eigen::Index>(labeled.size());
    const Eigen::Index width = features.width();
    EnsembleModel model;
    model.members.reserve(static_cast<std::size_t>(cfg.members));
    Eigen::MatrixXd X(N, width);
    Eigen::VectorXd t(N), w(N);
    for (int m = 0; m < cfg.members; ++m) {
        const std::uint64_t member_seed = mix_seed(seed, static_cast<std::uint64_t>(m));
        std::mt19937_64 rng(member_seed);
        std::uniform_int_distribution<Eigen::Index> pick(0, N - 1);
        for (Eigen::Index i = 0; i < N; ++i) {
            const auto& r = labeled[static_cast<std::size_t>(pick(rng))];
            X.row(i) = features.matrix.row(static_cast<Eigen::Index>(r.lf_id));
            t(i) = r.response == Response::useful ? 1.0 : 0.0;
            w(i) = r.weight;
        }
        Mlp net(width, cfg.hidden, mix_seed(member_seed, 0xA11CE));
        net.train(X, t, w, cfg.adam);
        model.members.push_back(std::move(net));
    }
    return model;
}

inline std::vector<AccuracyPosterior> posterior_from_samples(const Eigen::MatrixXd& samples);

/// Member outputs are accuracy samples (identity link); returns their mean and
/// population standard deviation for every LF.
inline std::vector<AccuracyPosterior> posterior_accuracy(const EnsembleModel& model, const LFFeatures& features)
{
    const Eigen::Index p = features.matrix.rows();
    if (model.members.empty())
        return std::vector<AccuracyPosterior>(static_cast<std::size_t>(p));
    Eigen::MatrixXd samples(p, static_cast<Eigen::Index>(model.members.size()));
    for (std::size_t m = 0; m < model.members.size(); ++m)
        samples.col(static_cast<Eigen::Index>(m)) = model.members[m].predict(features.matrix);
    return posterior_from_samples(samples);
}

/// Rows are LFs, columns ensemble members.
inline std::vector<AccuracyPosterior> posterior_from_samples(const Eigen::MatrixXd& samples)
{
    std::vector<AccuracyPosterior> out(static_cast<std::size_t>(samples.rows()));
    const double s = static_cast<double>(samples.cols());
    for (Eigen::Index j = 0; j < samples.rows(); ++j) {
        const double mean = samples.row(j).sum() / s;
        double var = 0.0;
        for (Eigen::Index m = 0; m < samples.cols(); ++m)
            var += (samples(j, m) - mean) * (samples(j, m) - mean);
        out[static_cast<std::size_t>(j)] = {mean, std::sqrt(var / s)};
    }
    return out;
}

inline std::vector<AccuracyPosterior> cold_start_posterior(std::size_t p) { return std::vector<AccuracyPosterior>(p); }

} // namespace iws
