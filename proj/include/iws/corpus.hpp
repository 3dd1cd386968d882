#pragma once

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "iws/error.hpp"
#include "iws/linalg.hpp"

namespace iws {

struct Document {
    std::string id;
    std::string text;
    std::optional<int> gold_label;  ///< -1 or +1; evaluation and oracle only
};

/// Documents plus optional fixed-width embeddings (one row per document).
struct Dataset {
    std::vector<Document> train;
    std::vector<Document> test;
    std::optional<Eigen::MatrixXd> train_embeddings;
    std::optional<Eigen::MatrixXd> test_embeddings;

    std::size_t n() const { return train.size(); }
    bool has_embeddings() const { return train_embeddings.has_value(); }

    bool train_has_gold() const
    {
        return !train.empty() && std::all_of(train.begin(), train.end(), [](const Document& d) { return d.gold_label.has_value(); });
    }
    bool test_has_gold() const
    {
        return !test.empty() && std::all_of(test.begin(), test.end(), [](const Document& d) { return d.gold_label.has_value(); });
    }
    std::vector<int> train_gold() const { return gold_of(train); }
    std::vector<int> test_gold() const { return gold_of(test); }

private:
    static std::vector<int> gold_of(const std::vector<Document>& docs)
    {
        std::vector<int> out;
        out.reserve(docs.size());
        for (const auto& d : docs)
            out.push_back(d.gold_label.value_or(0));
        return out;
    }
};

enum class CorpusFormat { jsonl_text, jsonl_vectors };

inline CorpusFormat parse_corpus_format(std::string_view s)
{
    if (s == "jsonl-text")
        return CorpusFormat::jsonl_text;
    if (s == "jsonl-vectors")
        return CorpusFormat::jsonl_vectors;
    throw ConfigError("unknown corpus format '" + std::string(s) + "'", "format");
}

inline std::string to_string(CorpusFormat f) { return f == CorpusFormat::jsonl_text ? "jsonl-text" : "jsonl-vectors"; }

// ---------------------------------------------------------------------------
// Ingestion
// ---------------------------------------------------------------------------

/// Parses a JSONL corpus. Records carry {"id", "text"|"vector", "label"?, "split"?};
/// split is "train" (default) or "test". Document order follows the stream.
inline Dataset parse_corpus(std::istream& in, CorpusFormat format)
{
    Dataset ds;
    std::vector<std::vector<double>> train_rows, test_rows;
    std::unordered_set<std::string> seen;
    std::optional<std::size_t> width;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(lineno, std::string("malformed record: ") + e.what());
        }
        if (!rec.is_object())
            throw ParseError(lineno, "record is not an object");
        if (!rec.contains("id") || !rec["id"].is_string())
            throw ParseError(lineno, "record missing string field 'id'");
        Document doc;
        doc.id = rec["id"].get<std::string>();
        if (!seen.insert(doc.id).second)
            throw ValidationError("duplicate document id '" + doc.id + "' at line " + std::to_string(lineno));
        if (rec.contains("label") && !rec["label"].is_null()) {
            if (!rec["label"].is_number_integer())
                throw ParseError(lineno, "label must be -1 or 1");
            const int y = rec["label"].get<int>();
            if (y != -1 && y != 1)
                throw ParseError(lineno, "label must be -1 or 1");
            doc.gold_label = y;
        }
        bool is_test = false;
        if (rec.contains("split")) {
            if (!rec["split"].is_string())
                throw ParseError(lineno, "split must be \"train\" or \"test\"");
            const auto split = rec["split"].get<std::string>();
            if (split != "train" && split != "test")
                throw ParseError(lineno, "split must be \"train\" or \"test\"");
            is_test = split == "test";
        }
        if (rec.contains("text")) {
            if (!rec["text"].is_string())
                throw ParseError(lineno, "text must be a string");
            doc.text = rec["text"].get<std::string>();
        }
        if (format == CorpusFormat::jsonl_text) {
            if (!rec.contains("text"))
                throw ParseError(lineno, "record missing field 'text'");
        } else {
            if (!rec.contains("vector") || !rec["vector"].is_array())
                throw ParseError(lineno, "record missing array field 'vector'");
            std::vector<double> row;
            for (const auto& v : rec["vector"]) {
                if (!v.is_number())
                    throw ParseError(lineno, "vector entries must be numbers");
                row.push_back(v.get<double>());
            }
            if (row.empty())
                throw ParseError(lineno, "empty vector");
            if (width && *width != row.size())
                throw ParseError(lineno, "vector width " + std::to_string(row.size()) + " differs from " + std::to_string(*width));
            width = row.size();
            (is_test ? test_rows : train_rows).push_back(std::move(row));
        }
        (is_test ? ds.test : ds.train).push_back(std::move(doc));
    }
    if (format == CorpusFormat::jsonl_vectors && width) {
        auto to_matrix = [&](const std::vector<std::vector<double>>& rows) {
            Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(*width));
            for (std::size_t i = 0; i < rows.size(); ++i)
                for (std::size_t c = 0; c < *width; ++c)
                    m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[i][c];
            return m;
        };
        ds.train_embeddings = to_matrix(train_rows);
        ds.test_embeddings = to_matrix(test_rows);
    }
    return ds;
}

inline Dataset load_corpus(const std::string& path, CorpusFormat format)
{
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open corpus '" + path + "'");
    return parse_corpus(in, format);
}

/// Writes the canonical JSONL form read by parse_corpus: train records first, then test.
inline void write_corpus(std::ostream& out, const Dataset& ds)
{
    const bool vectors = ds.has_embeddings();
    auto emit = [&](const std::vector<Document>& docs, const std::optional<Eigen::MatrixXd>& emb, bool test) {
        for (std::size_t i = 0; i < docs.size(); ++i) {
            nlohmann::ordered_json rec;
            rec["id"] = docs[i].id;
            if (!vectors || !docs[i].text.empty())
                rec["text"] = docs[i].text;
            if (vectors) {
                std::vector<double> row(static_cast<std::size_t>(emb->cols()));
                for (Eigen::Index c = 0; c < emb->cols(); ++c)
                    row[static_cast<std::size_t>(c)] = (*emb)(static_cast<Eigen::Index>(i), c);
                rec["vector"] = row;
            }
            if (docs[i].gold_label)
                rec["label"] = *docs[i].gold_label;
            if (test)
                rec["split"] = "test";
            out << rec.dump() << '\n';
        }
    };
    emit(ds.train, ds.train_embeddings, false);
    emit(ds.test, ds.test_embeddings, true);
}

inline std::string serialize_corpus(const Dataset& ds)
{
    std::ostringstream os;
    write_corpus(os, ds);
    return os.str();
}

inline void validate_dataset(const Dataset& ds)
{
    std::unordered_set<std::string> ids;
    for (const auto* part : {&ds.train, &ds.test})
        for (const auto& d : *part) {
            if (!ids.insert(d.id).second)
                throw ValidationError("duplicate document id '" + d.id + "'");
            if (d.gold_label && *d.gold_label != 1 && *d.gold_label != -1)
                throw ValidationError("gold label of '" + d.id + "' must be -1 or 1");
        }
    if (ds.train_embeddings && ds.train_embeddings->rows() != static_cast<Eigen::Index>(ds.train.size()))
        throw ValidationError("train embedding rows do not match document count");
    if (ds.test_embeddings && ds.test_embeddings->rows() != static_cast<Eigen::Index>(ds.test.size()))
        throw ValidationError("test embedding rows do not match document count");
}

// ---------------------------------------------------------------------------
// Tokenization and vocabulary
// ---------------------------------------------------------------------------

struct Token {
    std::string text;    ///< lowercased
    std::size_t begin;   ///< byte offset in the source
    std::size_t end;
};

// Word characters are ASCII alphanumerics plus any non-ASCII byte, so UTF-8
// sequences stay inside a token.
inline bool is_word_byte(unsigned char c) { return std::isalnum(c) || c >= 0x80; }

/// Lowercase tokens split on runs of non-alphanumeric characters.
inline std::vector<Token> tokenize_with_offsets(std::string_view text)
{
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && !is_word_byte(static_cast<unsigned char>(text[i])))
            ++i;
        if (i >= text.size())
            break;
        const std::size_t begin = i;
        std::string tok;
        while (i < text.size() && is_word_byte(static_cast<unsigned char>(text[i]))) {
            tok.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(text[i]))));
            ++i;
        }
        out.push_back({std::move(tok), begin, i});
    }
    return out;
}

inline std::vector<std::string> tokenize(std::string_view text)
{
    std::vector<std::string> out;
    for (auto& t : tokenize_with_offsets(text))
        out.push_back(std::move(t.text));
    return out;
}

struct VocabEntry {
    std::string token;
    std::size_t doc_frequency;
};

struct Vocabulary {
    std::vector<VocabEntry> entries;  ///< sorted by token

    std::size_t size() const { return entries.size(); }
    bool empty() const { return entries.empty(); }

    std::optional<std::size_t> index_of(std::string_view token) const
    {
        auto it = std::lower_bound(entries.begin(), entries.end(), token,
                                   [](const VocabEntry& e, std::string_view t) { return e.token < t; });
        if (it == entries.end() || it->token != token)
            return std::nullopt;
        return static_cast<std::size_t>(it - entries.begin());
    }
};

struct VocabConfig {
    std::size_t df_min = 10;
    double df_max_frac = 0.20;
};

/// Unigrams over the training documents with df_min <= df <= df_max_frac * n.
inline Vocabulary build_vocab(const Dataset& ds, std::size_t df_min, double df_max_frac)
{
    if (df_min < 1)
        throw ConfigError("df_min must be at least 1", "df_min");
    if (!(df_max_frac > 0.0 && df_max_frac <= 1.0))
        throw ConfigError("df_max_frac must lie in (0, 1]", "df_max_frac");
    std::map<std::string, std::size_t> df;
    for (const auto& doc : ds.train) {
        auto toks = tokenize(doc.text);
        std::sort(toks.begin(), toks.end());
        toks.erase(std::unique(toks.begin(), toks.end()), toks.end());
        for (auto& t : toks)
            ++df[t];
    }
    const double df_max = df_max_frac * static_cast<double>(ds.n());
    Vocabulary vocab;
    for (const auto& [tok, count] : df)
        if (count >= df_min && static_cast<double>(count) <= df_max)
            vocab.entries.push_back({tok, count});
    if (vocab.empty())
        throw ConfigError("vocabulary is empty under df_min=" + std::to_string(df_min) +
                          " df_max_frac=" + std::to_string(df_max_frac));
    return vocab;
}

inline Vocabulary build_vocab(const Dataset& ds, const VocabConfig& cfg = {})
{
    return build_vocab(ds, cfg.df_min, cfg.df_max_frac);
}

/// Term-count matrix (documents x vocabulary).
inline Eigen::MatrixXd bag_of_words(const std::vector<Document>& docs, const Vocabulary& vocab)
{
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(docs.size()), static_cast<Eigen::Index>(vocab.size()));
    std::unordered_map<std::string, Eigen::Index> index;
    for (std::size_t c = 0; c < vocab.size(); ++c)
        index.emplace(vocab.entries[c].token, static_cast<Eigen::Index>(c));
    for (std::size_t i = 0; i < docs.size(); ++i)
        for (const auto& t : tokenize(docs[i].text))
            if (auto it = index.find(t); it != index.end())
                m(static_cast<Eigen::Index>(i), it->second) += 1.0;
    return m;
}

struct Embedding {
    Eigen::MatrixXd train;       ///< n x k
    Eigen::MatrixXd test;        ///< n_test x k
    Eigen::MatrixXd components;  ///< |vocab| x k, orthonormal columns
    Eigen::VectorXd singular_values;

    Eigen::Index width() const { return components.cols(); }
};

/// Truncated-SVD projection of the training bag-of-words; k = min(d, n, |vocab|).
/// Test documents are projected onto the training components.
inline Embedding embed_svd(const Dataset& ds, const Vocabulary& vocab, Eigen::Index d = 300)
{
    if (vocab.empty())
        throw ConfigError("embed_svd requires a non-empty vocabulary");
    if (d < 1)
        throw ConfigError("embedding dimension must be at least 1", "d");
    const Eigen::MatrixXd bow = bag_of_words(ds.train, vocab);
    auto svd = truncated_svd(bow, d);
    Embedding e;
    e.components = std::move(svd.V);
    e.singular_values = std::move(svd.S);
    e.train = bow * e.components;
    e.test = bag_of_words(ds.test, vocab) * e.components;
    return e;
}

} // namespace iws
