#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "iws/acquisition.hpp"
#include "iws/corpus.hpp"
#include "iws/end_classifier.hpp"
#include "iws/error.hpp"
#include "iws/feedback_model.hpp"
#include "iws/label_model.hpp"
#include "iws/lf.hpp"

namespace iws {

// ---------------------------------------------------------------------------
// Workspace: everything derived from a corpus that a session reads
// ---------------------------------------------------------------------------

enum class LfFamily { keyword, mknn };

inline LfFamily parse_family(const std::string& s)
{
    if (s == "keyword")
        return LfFamily::keyword;
    if (s == "mknn")
        return LfFamily::mknn;
    throw ConfigError("unknown LF family '" + s + "'", "family");
}

struct WorkspaceOptions {
    std::optional<LfFamily> family;  ///< default: keyword for text, mknn for vector corpora
    VocabConfig vocab;
    double min_coverage = 0.002;
    std::size_t k1 = 20;
    std::size_t k2 = 1500;
    Eigen::Index embed_dim = 300;
    Eigen::Index lf_feature_dim = 150;
    EnsembleConfig ensemble;
    ClassifierConfig classifier;
    LabelModelFitConfig label_model;
};

struct Workspace {
    Dataset ds;
    std::optional<Vocabulary> vocab;
    LfPool pool;
    std::string pool_ref;
    LFMatrix lambda;
    std::vector<LFStats> stats;
    std::vector<double> coverage;
    LFFeatures lf_features;
    Eigen::MatrixXd train_features;  ///< end-classifier inputs
    Eigen::MatrixXd test_features;
    std::vector<int> train_gold, test_gold;
    bool has_train_gold = false;
    bool has_test_gold = false;
    double prior = 0.5;  ///< known class balance
    EnsembleConfig ensemble;
    ClassifierConfig classifier;
    LabelModelFitConfig label_model;

    std::size_t p() const { return pool.size(); }
};

inline LfPool generate_pool(const Dataset& ds, const WorkspaceOptions& opt, const Vocabulary* vocab)
{
    const LfFamily family = opt.family.value_or(ds.has_embeddings() ? LfFamily::mknn : LfFamily::keyword);
    if (family == LfFamily::mknn)
        return generate_mknn_lfs_both(ds, opt.k1, opt.k2);
    if (!vocab)
        throw ConfigError("keyword LFs need a text corpus");
    return generate_keyword_lfs(ds, *vocab, opt.min_coverage);
}

/// Builds vocabulary/embeddings, the LF pool (unless supplied), Lambda, LF
/// statistics and LF features.
inline Workspace build_workspace(Dataset ds, const WorkspaceOptions& opt = {}, std::optional<LfPool> pool = std::nullopt)
{
    validate_dataset(ds);
    Workspace ws;
    ws.ensemble = opt.ensemble;
    ws.classifier = opt.classifier;
    ws.label_model = opt.label_model;
    const bool has_text = std::any_of(ds.train.begin(), ds.train.end(), [](const Document& d) { return !d.text.empty(); });
    if (ds.has_embeddings()) {
        ws.train_features = *ds.train_embeddings;
        ws.test_features = ds.test_embeddings ? *ds.test_embeddings : Eigen::MatrixXd(0, ws.train_features.cols());
    }
    if (has_text) {
        ws.vocab = build_vocab(ds, opt.vocab);
        if (!ds.has_embeddings()) {
            auto emb = embed_svd(ds, *ws.vocab, opt.embed_dim);
            ws.train_features = std::move(emb.train);
            ws.test_features = std::move(emb.test);
        }
    }
    if (!ds.has_embeddings() && !has_text)
        throw ConfigError("corpus has neither text nor embeddings");
    ws.pool = pool ? std::move(*pool) : generate_pool(ds, opt, ws.vocab ? &*ws.vocab : nullptr);
    if (ws.pool.empty())
        throw ConfigError("LF pool is empty");
    ws.pool_ref = pool_fingerprint(ws.pool);
    ws.lambda = build_lf_matrix(ds, ws.pool);
    ws.has_train_gold = ds.train_has_gold();
    ws.has_test_gold = ds.test_has_gold();
    ws.train_gold = ds.train_gold();
    ws.test_gold = ds.test_gold();
    ws.stats = ws.has_train_gold ? lf_stats(ws.lambda, ws.train_gold) : lf_stats(ws.lambda);
    for (const auto& s : ws.stats)
        ws.coverage.push_back(s.coverage);
    if (ws.has_train_gold) {
        const auto pos = std::count(ws.train_gold.begin(), ws.train_gold.end(), 1);
        ws.prior = std::clamp(static_cast<double>(pos) / static_cast<double>(ws.train_gold.size()), 0.01, 0.99);
    }
    ws.lf_features = featurize_lfs(ws.lambda, opt.lf_feature_dim);
    ws.ds = std::move(ds);
    return ws;
}

// ---------------------------------------------------------------------------
// Session state
// ---------------------------------------------------------------------------

inline constexpr int kSessionVersion = 1;
inline constexpr std::size_t kSeedQueries = 8;
inline constexpr double kSeedBandLow = 0.7;
inline constexpr double kSeedBandHigh = 0.75;

enum class Scenario { a, ac, as };

inline Scenario parse_scenario(const std::string& s)
{
    if (s == "a")
        return Scenario::a;
    if (s == "ac")
        return Scenario::ac;
    if (s == "as")
        return Scenario::as;
    throw ConfigError("unknown scenario '" + s + "'", "scenario");
}

inline std::string to_string(Scenario s) { return s == Scenario::a ? "a" : s == Scenario::ac ? "ac" : "as"; }

inline Scenario scenario_for(AcquisitionMode m)
{
    switch (m) {
    case AcquisitionMode::lse_ac: return Scenario::ac;
    case AcquisitionMode::active_search: return Scenario::as;
    default: return Scenario::a;
    }
}

struct OracleConfig {
    double threshold = 0.7;

    void validate() const
    {
        if (!(threshold > 0.5 && threshold < 1.0))
            throw ConfigError("oracle threshold must lie strictly between 0.5 and 1", "threshold");
    }
};

struct ResultRecord {
    int iteration = 0;
    std::string mode;
    std::uint64_t seed = 0;
    std::size_t n_lfs = 0;
    double coverage = 0.0;          ///< fraction of train samples with >= 1 selected vote
    double mean_lf_coverage = 0.0;  ///< mean coverage of the selected LFs
    std::optional<double> auc;
    std::vector<std::size_t> selected;
};

inline nlohmann::ordered_json to_json(const ResultRecord& r)
{
    nlohmann::ordered_json j;
    j["iteration"] = r.iteration;
    j["mode"] = r.mode;
    j["seed"] = r.seed;
    j["n_selected"] = r.n_lfs;
    j["coverage"] = r.coverage;
    j["mean_lf_coverage"] = r.mean_lf_coverage;
    j["auc"] = r.auc ? nlohmann::ordered_json(*r.auc) : nlohmann::ordered_json(nullptr);
    j["selected"] = r.selected;
    return j;
}

inline ResultRecord result_from_json(const nlohmann::json& j)
{
    ResultRecord r;
    r.iteration = j.at("iteration").get<int>();
    r.mode = j.at("mode").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.n_lfs = j.at("n_selected").get<std::size_t>();
    r.coverage = j.at("coverage").get<double>();
    r.mean_lf_coverage = j.at("mean_lf_coverage").get<double>();
    if (!j.at("auc").is_null())
        r.auc = j["auc"].get<double>();
    r.selected = j.at("selected").get<std::vector<std::size_t>>();
    return r;
}

struct SessionState {
    AcquisitionConfig config;
    int T = 0;
    int iteration = 0;  ///< |Q|, plus one while a query is pending
    QueryDataset Q;
    std::string pool_ref;
    std::uint64_t seed = 0;
    std::optional<std::size_t> pending;
    std::optional<ResultRecord> finalized;
    std::vector<std::size_t> schedule;  ///< the pre-scheduled opening queries
    std::vector<std::string> warnings;
    int refit_stride = 1;

    struct PosteriorCache {
        std::size_t fit_size;
        std::vector<AccuracyPosterior> posterior;
    };
    /// Not persisted; rebuilt deterministically from Q.
    mutable std::optional<PosteriorCache> cache;

    bool complete(std::size_t pool_size) const { return iteration >= T || Q.size() >= pool_size; }
};

/// Opening schedule: four LFs drawn from the [0.7, 0.75] accuracy band plus
/// four drawn from the whole pool. Without gold labels all eight are random.
inline SessionState init_session(const Workspace& ws, const AcquisitionConfig& config, int T, int refit_stride = 1)
{
    config.validate();
    if (ws.pool.empty())
        throw ConfigError("LF pool is empty");
    if (T < static_cast<int>(kSeedQueries))
        throw ConfigError("T must be at least 8", "T");
    if (refit_stride < 1)
        throw ConfigError("refit stride must be at least 1", "refit_stride");
    SessionState s;
    s.config = config;
    s.T = T;
    s.seed = config.seed;
    s.pool_ref = ws.pool_ref;
    s.refit_stride = refit_stride;

    std::mt19937_64 rng(mix_seed(config.seed, 0x5EED));
    const bool has_accuracy = std::any_of(ws.stats.begin(), ws.stats.end(), [](const LFStats& st) { return st.true_accuracy.has_value(); });
    const std::size_t want_band = kSeedQueries / 2;
    if (has_accuracy) {
        std::vector<std::size_t> band;
        for (std::size_t j = 0; j < ws.stats.size(); ++j)
            if (ws.stats[j].true_accuracy && *ws.stats[j].true_accuracy >= kSeedBandLow && *ws.stats[j].true_accuracy <= kSeedBandHigh)
                band.push_back(j);
        std::shuffle(band.begin(), band.end(), rng);
        if (band.size() < want_band)
            s.warnings.push_back("only " + std::to_string(band.size()) + " LFs have accuracy in [0.7, 0.75]; filling with random LFs");
        band.resize(std::min(want_band, band.size()));
        s.schedule = band;
    } else {
        s.warnings.push_back("no gold labels: all opening queries are random");
    }
    std::vector<std::size_t> rest;
    for (std::size_t j = 0; j < ws.pool.size(); ++j)
        if (std::find(s.schedule.begin(), s.schedule.end(), j) == s.schedule.end())
            rest.push_back(j);
    std::shuffle(rest.begin(), rest.end(), rng);
    for (std::size_t k = 0; k < rest.size() && s.schedule.size() < kSeedQueries; ++k)
        s.schedule.push_back(rest[k]);
    return s;
}

/// Posterior from the ensemble fitted on the first `fit_size` records.
inline std::vector<AccuracyPosterior> posterior_after(const SessionState& s, const Workspace& ws, std::size_t fit_size)
{
    if (s.cache && s.cache->fit_size == fit_size)
        return s.cache->posterior;
    const QueryDataset q = fit_size == s.Q.size() ? s.Q : s.Q.prefix(fit_size);
    auto model = fit_ensemble(ws.lf_features, q, mix_seed(s.seed, fit_size), ws.ensemble);
    auto post = model ? posterior_accuracy(*model, ws.lf_features) : cold_start_posterior(ws.p());
    s.cache = SessionState::PosteriorCache{fit_size, post};
    return post;
}

struct Query {
    std::size_t lf_id = 0;
    std::string description;
    std::vector<Snippet> snippets;
    int iteration = 0;
};

inline Query describe_query(const SessionState& s, const Workspace& ws, std::size_t lf_id)
{
    const auto& lf = ws.pool.at(lf_id);
    Query q;
    q.lf_id = lf_id;
    q.description = lf.describe();
    q.snippets = sample_snippets(ws.ds, lf, 4, mix_seed(s.seed, 0x5A1E0000ULL + lf_id));
    q.iteration = s.iteration;
    return q;
}

/// Picks the next LF and marks it pending.
inline Query next_query(SessionState& s, const Workspace& ws)
{
    if (s.finalized)
        throw ProtocolError("session is finalized");
    if (s.pending)
        throw ProtocolError("LF " + std::to_string(*s.pending) + " is still awaiting a response");
    if (s.complete(ws.p()))
        throw SessionComplete("session complete after " + std::to_string(s.Q.size()) + " queries");
    const auto t = static_cast<std::size_t>(s.iteration) + 1;
    std::size_t lf_id;
    if (t <= s.schedule.size()) {
        lf_id = s.schedule[t - 1];
    } else if (s.config.mode == AcquisitionMode::random) {
        lf_id = select_random(ws.p(), s.Q.queried_ids(), mix_seed(s.seed, 0xA000000ULL + t));
    } else {
        // The model is refit every `refit_stride` iterations after the schedule.
        const std::size_t first = s.schedule.size() + 1;
        const std::size_t refit_t = first + ((t - first) / static_cast<std::size_t>(s.refit_stride)) * static_cast<std::size_t>(s.refit_stride);
        const auto post = posterior_after(s, ws, refit_t - 1);
        const auto scores = acquisition_scores(post, s.config.mode, s.config.r);
        lf_id = select_next(scores, s.Q.queried_ids());
    }
    s.pending = lf_id;
    s.iteration = static_cast<int>(t);
    return describe_query(s, ws, lf_id);
}

inline void record_response(SessionState& s, std::size_t lf_id, Response response, bool confident)
{
    if (!s.pending)
        throw ProtocolError("no query is pending");
    if (*s.pending != lf_id)
        throw ProtocolError("response for LF " + std::to_string(lf_id) + " but LF " + std::to_string(*s.pending) + " is pending");
    s.Q.append(lf_id, response, confident ? 1.0 : 0.5);
    s.pending.reset();
}

/// Simulated expert: useful iff the gold-measured accuracy reaches the threshold.
inline Response oracle_response(std::size_t lf_id, const std::vector<LFStats>& stats, const OracleConfig& oracle = {})
{
    const auto& st = stats.at(lf_id);
    if (!st.true_accuracy)
        throw ValidationError("LF " + std::to_string(lf_id) + " has no measurable accuracy");
    return *st.true_accuracy >= oracle.threshold ? Response::useful : Response::not_useful;
}

/// Final LF set for a scenario given the session's query history.
inline std::vector<std::size_t> final_set(const SessionState& s, const Workspace& ws, Scenario scenario)
{
    if (scenario == Scenario::as)
        return final_set_as(s.Q);
    const auto post = posterior_after(s, ws, s.Q.size());
    std::vector<double> mean(post.size());
    for (std::size_t j = 0; j < post.size(); ++j)
        mean[j] = post[j].mean;
    if (scenario == Scenario::a)
        return final_set_a(mean, s.config.r);
    return final_set_ac(mean, ws.coverage, s.config.r, lse_ac_bound(s.Q, s.config.m_tilde));
}

/// Label model + end classifier on a given LF selection.
inline ResultRecord evaluate_selection(const Workspace& ws, std::vector<std::size_t> selected, std::uint64_t seed)
{
    ResultRecord r;
    r.seed = seed;
    r.n_lfs = selected.size();
    r.selected = selected;
    if (selected.empty())
        return r;
    std::sort(selected.begin(), selected.end());
    double cov = 0.0;
    for (auto j : selected)
        cov += ws.coverage[j];
    r.mean_lf_coverage = cov / static_cast<double>(selected.size());
    const LFMatrix sub = ws.lambda.select_columns(selected);
    const auto params = fit_mle(sub, ws.prior, ws.label_model);
    const auto labels = posterior_prob_labels(sub, params);
    r.coverage = static_cast<double>(labels.covered_count()) / static_cast<double>(std::max<std::size_t>(ws.lambda.n(), 1));
    if (labels.covered_count() == 0)
        return r;
    const auto clf = train_noise_aware(ws.train_features, labels, mix_seed(seed, 0xC1A55), ws.classifier);
    if (ws.has_test_gold && ws.test_features.rows() > 0)
        r.auc = auc(predict_proba(clf, ws.test_features), ws.test_gold);
    return r;
}

inline ResultRecord finalize_pipeline(const SessionState& s, const Workspace& ws, Scenario scenario)
{
    if (s.Q.size() < kSeedQueries)
        throw ProtocolError("finalizing needs at least 8 annotations");
    ResultRecord r = evaluate_selection(ws, final_set(s, ws, scenario), s.seed);
    r.iteration = static_cast<int>(s.Q.size());
    r.mode = to_string(s.config.mode);
    return r;
}

inline const std::vector<int>& default_checkpoints()
{
    static const std::vector<int> c{25, 50, 100, 150, 200};
    return c;
}

struct OracleRun {
    SessionState state;
    std::vector<ResultRecord> results;
};

/// Full loop against the simulated oracle, finalizing at each checkpoint in [8, T].
inline OracleRun run_with_oracle_session(const Workspace& ws, AcquisitionConfig config, int T, const OracleConfig& oracle,
                                         std::uint64_t seed, const std::vector<int>& checkpoints = default_checkpoints(),
                                         int refit_stride = 1)
{
    if (!ws.has_train_gold || !ws.has_test_gold)
        throw ConfigError("oracle runs need gold train and test labels");
    oracle.validate();
    config.seed = seed;
    OracleRun run{init_session(ws, config, T, refit_stride), {}};
    std::set<int> marks;
    for (int c : checkpoints)
        if (c >= static_cast<int>(kSeedQueries) && c <= T)
            marks.insert(c);
    auto& s = run.state;
    const Scenario scenario = scenario_for(config.mode);
    while (!s.complete(ws.p())) {
        const auto q = next_query(s, ws);
        record_response(s, q.lf_id, oracle_response(q.lf_id, ws.stats, oracle), true);
        if (marks.count(s.iteration))
            run.results.push_back(finalize_pipeline(s, ws, scenario));
    }
    return run;
}

inline std::vector<ResultRecord> run_with_oracle(const Workspace& ws, AcquisitionConfig config, int T, const OracleConfig& oracle,
                                                 std::uint64_t seed, const std::vector<int>& checkpoints = default_checkpoints(),
                                                 int refit_stride = 1)
{
    return run_with_oracle_session(ws, config, T, oracle, seed, checkpoints, refit_stride).results;
}

/// Pool-based uncertainty sampling with a noiseless oracle: 8 random labels,
/// then repeatedly the training sample whose score is closest to 0.5.
inline std::vector<ResultRecord> active_learning_baseline(const Workspace& ws, int T, std::uint64_t seed,
                                                          const std::vector<int>& checkpoints = default_checkpoints())
{
    if (!ws.has_train_gold || !ws.has_test_gold)
        throw ConfigError("active learning baseline needs gold train and test labels");
    const std::size_t n = ws.ds.n();
    if (T < static_cast<int>(kSeedQueries) || static_cast<std::size_t>(T) > n)
        throw ConfigError("T must lie in [8, n]", "T");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(mix_seed(seed, 0xA1));
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::size_t> labeled(order.begin(), order.begin() + kSeedQueries);
    std::vector<char> is_labeled(n, 0);
    for (auto i : labeled)
        is_labeled[i] = 1;
    const std::set<int> marks(checkpoints.begin(), checkpoints.end());
    std::vector<ResultRecord> out;
    for (;;) {
        const auto clf = train_supervised(ws.train_features, labeled, ws.train_gold, mix_seed(seed, labeled.size()), ws.classifier);
        const int k = static_cast<int>(labeled.size());
        if (marks.count(k)) {
            ResultRecord r;
            r.iteration = k;
            r.mode = "al";
            r.seed = seed;
            r.coverage = static_cast<double>(k) / static_cast<double>(n);
            r.auc = auc(predict_proba(clf, ws.test_features), ws.test_gold);
            out.push_back(std::move(r));
        }
        if (k >= T)
            break;
        const Eigen::VectorXd scores = predict_proba(clf, ws.train_features);
        std::size_t best = n;
        double best_gap = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (is_labeled[i])
                continue;
            const double gap = std::abs(scores(static_cast<Eigen::Index>(i)) - 0.5);
            if (best == n || gap < best_gap) {
                best = i;
                best_gap = gap;
            }
        }
        labeled.push_back(best);
        is_labeled[best] = 1;
    }
    return out;
}

/// Test AUC of the end classifier trained on every gold training label.
inline double full_supervision_auc(const Workspace& ws, std::uint64_t seed)
{
    if (!ws.has_train_gold || !ws.has_test_gold)
        throw ConfigError("full supervision needs gold train and test labels");
    std::vector<std::size_t> rows(ws.ds.n());
    std::iota(rows.begin(), rows.end(), 0);
    const auto clf = train_supervised(ws.train_features, rows, ws.train_gold, mix_seed(seed, 0xC1A55), ws.classifier);
    return auc(predict_proba(clf, ws.test_features), ws.test_gold);
}

// ---------------------------------------------------------------------------
// CSV and persistence
// ---------------------------------------------------------------------------

inline std::string results_csv_header() { return "iteration,mode,seed,n_lfs,coverage,auc\n"; }

inline std::string results_csv_row(const ResultRecord& r)
{
    char buf[160];
    std::snprintf(buf, sizeof buf, "%d,%s,%llu,%zu,%.6f,", r.iteration, r.mode.c_str(), static_cast<unsigned long long>(r.seed), r.n_lfs,
                  r.coverage);
    std::string row = buf;
    if (r.auc) {
        std::snprintf(buf, sizeof buf, "%.6f", *r.auc);
        row += buf;
    }
    return row + "\n";
}

inline std::string results_csv(const std::vector<ResultRecord>& rows, bool header = true)
{
    std::string out = header ? results_csv_header() : std::string{};
    for (const auto& r : rows)
        out += results_csv_row(r);
    return out;
}

inline nlohmann::ordered_json to_json(const SessionState& s)
{
    nlohmann::ordered_json j;
    j["version"] = kSessionVersion;
    j["config"] = {{"mode", to_string(s.config.mode)}, {"r", s.config.r}, {"mtilde", s.config.m_tilde}, {"seed", s.config.seed}};
    j["T"] = s.T;
    j["iteration"] = s.iteration;
    j["seed"] = s.seed;
    j["pool_ref"] = s.pool_ref;
    j["refit_stride"] = s.refit_stride;
    j["schedule"] = s.schedule;
    j["warnings"] = s.warnings;
    j["pending"] = s.pending ? nlohmann::ordered_json(*s.pending) : nlohmann::ordered_json(nullptr);
    j["queries"] = to_json(s.Q);
    j["finalized"] = s.finalized ? to_json(*s.finalized) : nlohmann::ordered_json(nullptr);
    return j;
}

inline SessionState session_from_json(const nlohmann::json& j)
{
    if (!j.is_object() || !j.contains("version"))
        throw VersionError("session file has no version");
    if (j["version"] != kSessionVersion)
        throw VersionError("unsupported session version " + j["version"].dump());
    SessionState s;
    try {
        const auto& c = j.at("config");
        s.config.mode = parse_mode(c.at("mode").get<std::string>());
        s.config.r = c.at("r").get<double>();
        s.config.m_tilde = c.at("mtilde").get<std::size_t>();
        s.config.seed = c.at("seed").get<std::uint64_t>();
        s.T = j.at("T").get<int>();
        s.iteration = j.at("iteration").get<int>();
        s.seed = j.at("seed").get<std::uint64_t>();
        s.pool_ref = j.at("pool_ref").get<std::string>();
        s.refit_stride = j.at("refit_stride").get<int>();
        s.schedule = j.at("schedule").get<std::vector<std::size_t>>();
        s.warnings = j.at("warnings").get<std::vector<std::string>>();
        if (!j.at("pending").is_null())
            s.pending = j["pending"].get<std::size_t>();
        s.Q = query_dataset_from_json(j.at("queries"));
        if (!j.at("finalized").is_null())
            s.finalized = result_from_json(j["finalized"]);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed session: ") + e.what());
    }
    s.config.validate();
    if (s.iteration != static_cast<int>(s.Q.size()) + (s.pending ? 1 : 0))
        throw ValidationError("session iteration does not match its query history");
    if (s.pending && s.finalized)
        throw ValidationError("finalized session cannot have a pending query");
    return s;
}

inline std::string serialize_session(const SessionState& s) { return to_json(s).dump(2) + "\n"; }

/// Writes through a temporary file and rename so a failed write leaves the
/// previous file intact.
inline void save_session(const SessionState& s, const std::filesystem::path& path)
{
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw Error("cannot write session file '" + tmp + "'");
        out << serialize_session(s);
        out.flush();
        if (!out)
            throw Error("failed writing session file '" + tmp + "'");
    }
    std::filesystem::rename(tmp, path);
}

inline SessionState parse_session(const std::string& text)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(0, std::string("session file is not valid JSON: ") + e.what());
    }
    return session_from_json(j);
}

inline SessionState load_session(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("cannot open session file '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_session(ss.str());
}

} // namespace iws
