#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "iws/corpus.hpp"

namespace iws {

/// Two-class topic mixture. Every term has a polarity (the class it leans
/// towards) and a lean a in [min_lean, max_lean]: a document of its favoured
/// class draws it with relative weight a, the other class with 1 - a. A
/// fraction of documents is written from the opposite class's distribution,
/// which caps achievable accuracy.
struct SyntheticCorpusConfig {
    std::size_t n_train = 5000;
    std::size_t n_test = 1000;
    std::size_t vocab_size = 400;
    std::size_t min_length = 12;
    std::size_t max_length = 28;
    double min_lean = 0.5;
    double max_lean = 0.97;
    double lean_skew = 1.6;     ///< >1 concentrates leans near min_lean
    double min_frequency = 1.0;  ///< relative term frequency is log-uniform in [min, max]
    double max_frequency = 5.0;
    double flip_rate = 0.05;
    std::uint64_t seed = 20201007;
};

inline std::string synthetic_term(std::size_t k)
{
    char buf[16];
    std::snprintf(buf, sizeof buf, "t%03zu", k);
    return buf;
}

inline Dataset make_synthetic_corpus(const SyntheticCorpusConfig& cfg = {})
{
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const std::size_t V = cfg.vocab_size;
    std::vector<double> weight_pos(V), weight_neg(V);
    for (std::size_t k = 0; k < V; ++k) {
        const double freq = cfg.min_frequency * std::exp(unit(rng) * std::log(cfg.max_frequency / cfg.min_frequency));
        const double lean = cfg.min_lean + (cfg.max_lean - cfg.min_lean) * std::pow(unit(rng), cfg.lean_skew);
        const bool favours_pos = k % 2 == 0;
        weight_pos[k] = freq * (favours_pos ? lean : 1.0 - lean);
        weight_neg[k] = freq * (favours_pos ? 1.0 - lean : lean);
    }
    std::discrete_distribution<std::size_t> draw_pos(weight_pos.begin(), weight_pos.end());
    std::discrete_distribution<std::size_t> draw_neg(weight_neg.begin(), weight_neg.end());
    std::uniform_int_distribution<std::size_t> length(cfg.min_length, cfg.max_length);

    auto make = [&](std::size_t count, const char* prefix) {
        std::vector<Document> docs;
        docs.reserve(count);
        for (std::size_t i = 0; i < count; ++i) {
            const int y = unit(rng) < 0.5 ? 1 : -1;
            const bool flipped = unit(rng) < cfg.flip_rate;
            const int topic = flipped ? -y : y;
            const std::size_t len = length(rng);
            std::string text;
            for (std::size_t w = 0; w < len; ++w) {
                if (w)
                    text.push_back(' ');
                text += synthetic_term(topic > 0 ? draw_pos(rng) : draw_neg(rng));
            }
            char id[32];
            std::snprintf(id, sizeof id, "%s%05zu", prefix, i);
            docs.push_back({id, std::move(text), y});
        }
        return docs;
    };
    Dataset ds;
    ds.train = make(cfg.n_train, "tr");
    ds.test = make(cfg.n_test, "te");
    return ds;
}

} // namespace iws
