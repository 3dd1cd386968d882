#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "iws/corpus.hpp"
#include "iws/error.hpp"

namespace iws {

enum class LfKind { keyword, mknn_cluster };

inline std::string to_string(LfKind k) { return k == LfKind::keyword ? "keyword" : "mknn-cluster"; }

/// One candidate heuristic: votes `target_label` where it fires, abstains elsewhere.
struct LabelingFunction {
    std::size_t id = 0;
    LfKind kind = LfKind::keyword;
    int target_label = 1;
    std::string keyword;                  ///< kind == keyword
    std::vector<std::string> member_ids;  ///< kind == mknn_cluster, sorted
    std::vector<std::string> core_ids;    ///< subset of member_ids, sorted

    std::string describe() const
    {
        const std::string label = target_label > 0 ? "+1" : "-1";
        if (kind == LfKind::keyword)
            return "if document contains '" + keyword + "' then label " + label;
        return "cluster of " + std::to_string(member_ids.size()) + " items (core " + std::to_string(core_ids.size()) +
               ") then label " + label;
    }
};

using LfPool = std::vector<LabelingFunction>;

/// Sparse ternary n x p matrix; absent entries abstain. Stored column-major.
class LFMatrix {
public:
    struct Cell {
        std::uint32_t row;
        std::int8_t value;
    };
    struct Triplet {
        std::size_t row, col;
        int value;
    };

    LFMatrix() = default;
    LFMatrix(std::size_t n, std::size_t p) : _n(n), _cols(p) {}

    static LFMatrix from_triplets(std::size_t n, std::size_t p, const std::vector<Triplet>& entries)
    {
        LFMatrix m(n, p);
        for (const auto& t : entries) {
            if (t.row >= n || t.col >= p)
                throw ValidationError("LF matrix entry out of range");
            if (t.value != 1 && t.value != -1)
                throw ValidationError("LF matrix values must be -1 or +1");
            m._cols[t.col].push_back({static_cast<std::uint32_t>(t.row), static_cast<std::int8_t>(t.value)});
        }
        for (auto& col : m._cols) {
            std::sort(col.begin(), col.end(), [](const Cell& a, const Cell& b) { return a.row < b.row; });
            for (std::size_t k = 1; k < col.size(); ++k)
                if (col[k].row == col[k - 1].row)
                    throw ValidationError("duplicate LF matrix entry");
        }
        return m;
    }

    /// Dense n x p input with values in {-1, 0, +1}.
    static LFMatrix from_dense(const Eigen::MatrixXi& dense)
    {
        std::vector<Triplet> entries;
        for (Eigen::Index c = 0; c < dense.cols(); ++c)
            for (Eigen::Index r = 0; r < dense.rows(); ++r)
                if (dense(r, c) != 0)
                    entries.push_back({static_cast<std::size_t>(r), static_cast<std::size_t>(c), dense(r, c)});
        return from_triplets(static_cast<std::size_t>(dense.rows()), static_cast<std::size_t>(dense.cols()), entries);
    }

    std::size_t n() const { return _n; }
    std::size_t p() const { return _cols.size(); }
    const std::vector<Cell>& column(std::size_t j) const { return _cols.at(j); }

    std::size_t nnz() const
    {
        std::size_t s = 0;
        for (const auto& c : _cols)
            s += c.size();
        return s;
    }

    /// Appends a column given as sorted, de-duplicated cells.
    void push_column(std::vector<Cell> cells) { _cols.push_back(std::move(cells)); }

    LFMatrix select_columns(const std::vector<std::size_t>& cols) const
    {
        LFMatrix m(_n, 0);
        for (auto c : cols)
            m._cols.push_back(_cols.at(c));
        return m;
    }

    Eigen::MatrixXi dense() const
    {
        Eigen::MatrixXi d = Eigen::MatrixXi::Zero(static_cast<Eigen::Index>(_n), static_cast<Eigen::Index>(p()));
        for (std::size_t j = 0; j < p(); ++j)
            for (const auto& cell : _cols[j])
                d(cell.row, static_cast<Eigen::Index>(j)) = cell.value;
        return d;
    }

    /// Row-major view: for each row the list of (column, value).
    std::vector<std::vector<std::pair<std::uint32_t, std::int8_t>>> rows() const
    {
        std::vector<std::vector<std::pair<std::uint32_t, std::int8_t>>> out(_n);
        for (std::size_t j = 0; j < p(); ++j)
            for (const auto& cell : _cols[j])
                out[cell.row].emplace_back(static_cast<std::uint32_t>(j), cell.value);
        return out;
    }

    std::vector<Triplet> triplets() const
    {
        std::vector<Triplet> out;
        out.reserve(nnz());
        for (std::size_t j = 0; j < p(); ++j)
            for (const auto& cell : _cols[j])
                out.push_back({cell.row, j, cell.value});
        return out;
    }

private:
    std::size_t _n = 0;
    std::vector<std::vector<Cell>> _cols;
};

// ---------------------------------------------------------------------------
// Keyword family
// ---------------------------------------------------------------------------

/// Sorted unique token set for each training document.
inline std::vector<std::vector<std::string>> document_token_sets(const std::vector<Document>& docs)
{
    std::vector<std::vector<std::string>> out;
    out.reserve(docs.size());
    for (const auto& d : docs) {
        auto t = tokenize(d.text);
        std::sort(t.begin(), t.end());
        t.erase(std::unique(t.begin(), t.end()), t.end());
        out.push_back(std::move(t));
    }
    return out;
}

/// Two LFs per vocabulary token (target +1 then -1), pruned below
/// min_coverage. Coverage is the token's document frequency over n.
inline LfPool generate_keyword_lfs(const Dataset& ds, const Vocabulary& vocab, double min_coverage = 0.002)
{
    if (vocab.empty())
        throw ConfigError("keyword LF generation needs a non-empty vocabulary");
    const double n = static_cast<double>(std::max<std::size_t>(ds.n(), 1));
    LfPool pool;
    for (const auto& entry : vocab.entries) {
        if (static_cast<double>(entry.doc_frequency) / n < min_coverage)
            continue;
        for (int label : {1, -1}) {
            LabelingFunction lf;
            lf.id = pool.size();
            lf.kind = LfKind::keyword;
            lf.target_label = label;
            lf.keyword = entry.token;
            pool.push_back(std::move(lf));
        }
    }
    if (pool.empty())
        throw ConfigError("no keyword LF reaches min_coverage", "min_coverage");
    return pool;
}

// ---------------------------------------------------------------------------
// Mutual-kNN cluster family
// ---------------------------------------------------------------------------

/// Indices of the k nearest points to every row (Euclidean, self excluded,
/// ties by index), nearest first.
inline std::vector<std::vector<std::size_t>> knn_lists(const Eigen::MatrixXd& points, std::size_t k)
{
    const auto n = static_cast<std::size_t>(points.rows());
    k = std::min(k, n - 1);
    const Eigen::VectorXd sq = points.rowwise().squaredNorm();
    std::vector<std::vector<std::size_t>> out(n);
    std::vector<std::pair<double, std::size_t>> dist(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Eigen::VectorXd dots = points * points.row(static_cast<Eigen::Index>(i)).transpose();
        for (std::size_t j = 0; j < n; ++j) {
            const auto jj = static_cast<Eigen::Index>(j);
            dist[j] = {std::max(0.0, sq(jj) + sq(static_cast<Eigen::Index>(i)) - 2.0 * dots(jj)), j};
        }
        dist[i].first = std::numeric_limits<double>::infinity();
        std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
        out[i].reserve(k);
        for (std::size_t r = 0; r < k; ++r)
            out[i].push_back(dist[r].second);
    }
    return out;
}

struct MknnCluster {
    std::vector<std::size_t> core;     ///< sorted row indices
    std::vector<std::size_t> members;  ///< sorted, contains core
};

/// Core clusters are cliques of the mutual-k1-NN graph seeded greedily by
/// ascending point index (each point joins at most one core, singletons are
/// dropped). Each core is extended by the points appearing in the k2-NN lists
/// of at least two core members. Clusters with identical member sets are
/// reported once.
inline std::vector<MknnCluster> mknn_clusters(const Eigen::MatrixXd& points, std::size_t k1, std::size_t k2)
{
    const auto n = static_cast<std::size_t>(points.rows());
    if (k1 < 2)
        throw ConfigError("k1 must be at least 2", "k1");
    if (k2 < k1)
        throw ConfigError("k2 must be at least k1", "k2");
    if (n < k1 + 1)
        throw ConfigError("mutual kNN clustering needs at least k1+1 points", "k1");

    const auto far = knn_lists(points, k2);
    std::vector<std::vector<std::size_t>> near(n);
    for (std::size_t i = 0; i < n; ++i)
        near[i].assign(far[i].begin(), far[i].begin() + static_cast<std::ptrdiff_t>(std::min(k1, far[i].size())));
    auto in_near = [&](std::size_t a, std::size_t b) {
        return std::find(near[a].begin(), near[a].end(), b) != near[a].end();
    };
    auto mutual = [&](std::size_t a, std::size_t b) { return in_near(a, b) && in_near(b, a); };

    std::vector<char> assigned(n, 0);
    std::vector<MknnCluster> clusters;
    std::set<std::vector<std::size_t>> seen_members;
    std::vector<unsigned> hits(n, 0);
    for (std::size_t seed = 0; seed < n; ++seed) {
        if (assigned[seed])
            continue;
        std::vector<std::size_t> core{seed};
        for (auto cand : near[seed]) {  // nearest first
            if (core.size() >= k1)
                break;
            if (assigned[cand] || !mutual(seed, cand))
                continue;
            if (std::all_of(core.begin(), core.end(), [&](std::size_t c) { return mutual(c, cand); }))
                core.push_back(cand);
        }
        if (core.size() < 2)
            continue;
        for (auto c : core)
            assigned[c] = 1;
        std::sort(core.begin(), core.end());

        std::vector<std::size_t> touched;
        for (auto c : core)
            for (auto x : far[c]) {
                if (hits[x]++ == 0)
                    touched.push_back(x);
            }
        std::vector<std::size_t> members = core;
        for (auto x : touched) {
            if (hits[x] >= 2)
                members.push_back(x);
            hits[x] = 0;
        }
        std::sort(members.begin(), members.end());
        members.erase(std::unique(members.begin(), members.end()), members.end());
        if (!seen_members.insert(members).second)
            continue;
        clusters.push_back({std::move(core), std::move(members)});
    }
    return clusters;
}

inline LfPool generate_mknn_lfs(const Dataset& ds, std::size_t k1, std::size_t k2, int target_label)
{
    if (!ds.has_embeddings())
        throw ConfigError("mutual kNN LFs need embeddings");
    if (target_label != 1 && target_label != -1)
        throw ConfigError("target label must be -1 or 1", "target_label");
    LfPool pool;
    for (auto& cl : mknn_clusters(*ds.train_embeddings, k1, k2)) {
        LabelingFunction lf;
        lf.id = pool.size();
        lf.kind = LfKind::mknn_cluster;
        lf.target_label = target_label;
        for (auto i : cl.members)
            lf.member_ids.push_back(ds.train[i].id);
        for (auto i : cl.core)
            lf.core_ids.push_back(ds.train[i].id);
        std::sort(lf.member_ids.begin(), lf.member_ids.end());
        std::sort(lf.core_ids.begin(), lf.core_ids.end());
        pool.push_back(std::move(lf));
    }
    return pool;
}

/// Cluster LFs for both targets: all +1 LFs, then the same clusters with -1.
inline LfPool generate_mknn_lfs_both(const Dataset& ds, std::size_t k1 = 20, std::size_t k2 = 1500)
{
    LfPool pos = generate_mknn_lfs(ds, k1, k2, 1);
    const std::size_t base = pos.size();
    for (std::size_t i = 0; i < base; ++i) {
        LabelingFunction neg = pos[i];
        neg.target_label = -1;
        neg.id = base + i;
        pos.push_back(std::move(neg));
    }
    return pos;
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

/// Rows of the training set on which `lf` votes, ascending.
inline std::vector<std::size_t> lf_matches(const Dataset& ds, const LabelingFunction& lf,
                                           const std::vector<std::vector<std::string>>* token_sets = nullptr)
{
    std::vector<std::size_t> rows;
    if (lf.kind == LfKind::keyword) {
        for (std::size_t i = 0; i < ds.train.size(); ++i) {
            bool hit;
            if (token_sets) {
                const auto& ts = (*token_sets)[i];
                hit = std::binary_search(ts.begin(), ts.end(), lf.keyword);
            } else {
                const auto toks = tokenize(ds.train[i].text);
                hit = std::find(toks.begin(), toks.end(), lf.keyword) != toks.end();
            }
            if (hit)
                rows.push_back(i);
        }
        return rows;
    }
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < ds.train.size(); ++i)
        index.emplace(ds.train[i].id, i);
    for (const auto& id : lf.member_ids) {
        auto it = index.find(id);
        if (it == index.end())
            throw ValidationError("LF " + std::to_string(lf.id) + " references unknown document '" + id + "'");
        rows.push_back(it->second);
    }
    std::sort(rows.begin(), rows.end());
    rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
    return rows;
}

/// Lambda over the training documents, one column per LF in pool order.
inline LFMatrix build_lf_matrix(const Dataset& ds, const LfPool& lfs)
{
    const auto token_sets = document_token_sets(ds.train);
    LFMatrix m(ds.n(), 0);
    for (const auto& lf : lfs) {
        if (lf.target_label != 1 && lf.target_label != -1)
            throw ValidationError("LF " + std::to_string(lf.id) + " has invalid target label");
        std::vector<LFMatrix::Cell> cells;
        for (auto r : lf_matches(ds, lf, &token_sets))
            cells.push_back({static_cast<std::uint32_t>(r), static_cast<std::int8_t>(lf.target_label)});
        m.push_column(std::move(cells));
    }
    return m;
}

struct LFStats {
    double coverage = 0.0;
    std::optional<double> true_accuracy;  ///< needs gold labels and nonzero coverage
};

inline std::vector<LFStats> lf_stats(const LFMatrix& lambda, const std::optional<std::vector<int>>& gold = std::nullopt)
{
    if (gold && gold->size() != lambda.n())
        throw ValidationError("gold label count does not match LF matrix rows");
    std::vector<LFStats> out(lambda.p());
    const double n = static_cast<double>(std::max<std::size_t>(lambda.n(), 1));
    for (std::size_t j = 0; j < lambda.p(); ++j) {
        const auto& col = lambda.column(j);
        out[j].coverage = static_cast<double>(col.size()) / n;
        if (gold && !col.empty()) {
            std::size_t correct = 0;
            for (const auto& cell : col)
                correct += (*gold)[cell.row] == cell.value;
            out[j].true_accuracy = static_cast<double>(correct) / static_cast<double>(col.size());
        }
    }
    return out;
}

struct Snippet {
    std::string doc_id;
    std::string text;
};

/// Up to k matching documents drawn uniformly without replacement. Keyword
/// snippets are cut to +-window tokens around the first keyword occurrence.
inline std::vector<Snippet> sample_snippets(const Dataset& ds, const LabelingFunction& lf, std::size_t k, std::uint64_t seed,
                                            std::size_t window = 10)
{
    if (k < 1)
        throw ConfigError("snippet count must be at least 1", "k");
    auto rows = lf_matches(ds, lf);
    if (rows.empty())
        throw ValidationError("LF " + std::to_string(lf.id) + " has zero coverage");
    std::mt19937_64 rng(seed);
    std::shuffle(rows.begin(), rows.end(), rng);
    rows.resize(std::min(k, rows.size()));

    std::vector<Snippet> out;
    for (auto r : rows) {
        const auto& doc = ds.train[r];
        Snippet s{doc.id, doc.text};
        if (lf.kind == LfKind::keyword) {
            const auto toks = tokenize_with_offsets(doc.text);
            for (std::size_t t = 0; t < toks.size(); ++t) {
                if (toks[t].text != lf.keyword)
                    continue;
                const std::size_t lo = t >= window ? t - window : 0;
                const std::size_t hi = std::min(toks.size() - 1, t + window);
                s.text = doc.text.substr(toks[lo].begin, toks[hi].end - toks[lo].begin);
                break;
            }
        } else if (s.text.empty()) {
            s.text = "item " + doc.id;
        }
        out.push_back(std::move(s));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline nlohmann::ordered_json pool_to_json(const LfPool& pool)
{
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& lf : pool) {
        nlohmann::ordered_json j;
        j["id"] = lf.id;
        j["kind"] = to_string(lf.kind);
        j["target_label"] = lf.target_label;
        if (lf.kind == LfKind::keyword) {
            j["keyword"] = lf.keyword;
        } else {
            j["member_ids"] = lf.member_ids;
            j["core_ids"] = lf.core_ids;
        }
        arr.push_back(std::move(j));
    }
    return arr;
}

inline LfPool pool_from_json(const nlohmann::json& arr)
{
    if (!arr.is_array())
        throw ValidationError("LF pool must be a JSON array");
    LfPool pool;
    for (const auto& j : arr) {
        LabelingFunction lf;
        lf.id = j.at("id").get<std::size_t>();
        if (lf.id != pool.size())
            throw ValidationError("LF ids must be 0..p-1 in order");
        const auto kind = j.at("kind").get<std::string>();
        lf.target_label = j.at("target_label").get<int>();
        if (lf.target_label != 1 && lf.target_label != -1)
            throw ValidationError("LF target_label must be -1 or 1");
        if (kind == "keyword") {
            lf.kind = LfKind::keyword;
            lf.keyword = j.at("keyword").get<std::string>();
        } else if (kind == "mknn-cluster") {
            lf.kind = LfKind::mknn_cluster;
            lf.member_ids = j.at("member_ids").get<std::vector<std::string>>();
            if (j.contains("core_ids"))
                lf.core_ids = j.at("core_ids").get<std::vector<std::string>>();
            std::sort(lf.member_ids.begin(), lf.member_ids.end());
            std::sort(lf.core_ids.begin(), lf.core_ids.end());
            if (!std::includes(lf.member_ids.begin(), lf.member_ids.end(), lf.core_ids.begin(), lf.core_ids.end()))
                throw ValidationError("LF core_ids must be a subset of member_ids");
        } else {
            throw ValidationError("unknown LF kind '" + kind + "'");
        }
        pool.push_back(std::move(lf));
    }
    return pool;
}

inline nlohmann::ordered_json matrix_to_json(const LFMatrix& m)
{
    nlohmann::ordered_json j;
    j["n"] = m.n();
    j["p"] = m.p();
    auto entries = nlohmann::ordered_json::array();
    for (const auto& t : m.triplets())
        entries.push_back({t.row, t.col, t.value});
    j["entries"] = std::move(entries);
    return j;
}

inline LFMatrix matrix_from_json(const nlohmann::json& j)
{
    std::vector<LFMatrix::Triplet> entries;
    for (const auto& e : j.at("entries"))
        entries.push_back({e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>(), e.at(2).get<int>()});
    return LFMatrix::from_triplets(j.at("n").get<std::size_t>(), j.at("p").get<std::size_t>(), entries);
}

/// FNV-1a over the canonical pool JSON; identifies a pool inside session files.
inline std::string pool_fingerprint(const LfPool& pool)
{
    const std::string s = pool_to_json(pool).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace iws
