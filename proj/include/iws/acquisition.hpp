#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "iws/error.hpp"
#include "iws/feedback_model.hpp"

namespace iws {

enum class AcquisitionMode { lse_a, lse_ac, active_search, random };

inline std::string to_string(AcquisitionMode m)
{
    switch (m) {
    case AcquisitionMode::lse_a: return "lse_a";
    case AcquisitionMode::lse_ac: return "lse_ac";
    case AcquisitionMode::active_search: return "as";
    case AcquisitionMode::random: return "random";
    }
    return "random";
}

inline AcquisitionMode parse_mode(const std::string& s)
{
    if (s == "lse_a")
        return AcquisitionMode::lse_a;
    if (s == "lse_ac")
        return AcquisitionMode::lse_ac;
    if (s == "as" || s == "active_search")
        return AcquisitionMode::active_search;
    if (s == "random")
        return AcquisitionMode::random;
    throw ConfigError("unknown acquisition mode '" + s + "'", "mode");
}

struct AcquisitionConfig {
    AcquisitionMode mode = AcquisitionMode::lse_a;
    double r = 0.7;
    std::size_t m_tilde = 100;
    std::uint64_t seed = 0;

    void validate() const
    {
        if (!(r > 0.5 && r < 1.0))
            throw ConfigError("r must lie strictly between 0.5 and 1", "r");
        if (mode == AcquisitionMode::lse_ac && m_tilde < 1)
            throw ConfigError("mtilde must be at least 1", "mtilde");
    }
};

/// Level-set straddle score 1.96 sigma - |mu - r|.
inline double straddle_score(double mean, double stddev, double r) { return 1.96 * stddev - std::abs(mean - r); }

/// One-step active-search score: the posterior probability of u = 1.
inline double as_score(double mean) { return mean; }

inline std::vector<double> acquisition_scores(const std::vector<AccuracyPosterior>& post, AcquisitionMode mode, double r)
{
    std::vector<double> s(post.size());
    for (std::size_t j = 0; j < post.size(); ++j)
        s[j] = mode == AcquisitionMode::active_search ? as_score(post[j].mean) : straddle_score(post[j].mean, post[j].stddev, r);
    return s;
}

/// argmax over unqueried LFs, ties to the lowest id.
inline std::size_t select_next(std::span<const double> scores, const std::unordered_set<std::size_t>& queried)
{
    std::size_t best = scores.size();
    for (std::size_t j = 0; j < scores.size(); ++j) {
        if (queried.count(j))
            continue;
        if (best == scores.size() || scores[j] > scores[best])
            best = j;
    }
    if (best == scores.size())
        throw SessionComplete("every LF in the pool has been queried");
    return best;
}

/// Uniform draw among unqueried LFs.
inline std::size_t select_random(std::size_t p, const std::unordered_set<std::size_t>& queried, std::uint64_t seed)
{
    std::vector<std::size_t> open;
    for (std::size_t j = 0; j < p; ++j)
        if (!queried.count(j))
            open.push_back(j);
    if (open.empty())
        throw SessionComplete("every LF in the pool has been queried");
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, open.size() - 1);
    return open[pick(rng)];
}

/// { j : mu_j > r }.
inline std::vector<std::size_t> final_set_a(std::span<const double> mean, double r)
{
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < mean.size(); ++j)
        if (mean[j] > r)
            out.push_back(j);
    return out;
}

/// Accuracy-coverage trade-off used to rank LFs above the threshold.
inline double accuracy_coverage_score(double mean, double coverage) { return (2.0 * mean - 1.0) * coverage; }

/// Thresholds by r, ranks by (2 mu - 1) * coverage (ties to lowest id), keeps
/// the top m. Returned in rank order.
inline std::vector<std::size_t> final_set_ac(std::span<const double> mean, std::span<const double> coverage, double r, std::size_t m)
{
    if (m < 1)
        throw ConfigError("final set bound m must be at least 1", "m");
    if (coverage.size() != mean.size())
        throw ValidationError("coverage and posterior sizes differ");
    auto out = final_set_a(mean, r);
    std::stable_sort(out.begin(), out.end(), [&](std::size_t a, std::size_t b) {
        return accuracy_coverage_score(mean[a], coverage[a]) > accuracy_coverage_score(mean[b], coverage[b]);
    });
    if (out.size() > m)
        out.resize(m);
    return out;
}

/// Validated LFs only: those answered useful, in query order.
inline std::vector<std::size_t> final_set_as(const QueryDataset& q)
{
    std::vector<std::size_t> out;
    for (const auto& r : q.records())
        if (r.response == Response::useful)
            out.push_back(r.lf_id);
    return out;
}

/// Bound on the scenario-B set: useful answers so far plus m_tilde.
inline std::size_t lse_ac_bound(const QueryDataset& q, std::size_t m_tilde) { return q.count(Response::useful) + m_tilde; }

} // namespace iws
