#include "iws/iws.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace iws;

namespace {

Dataset from_text(const std::string& jsonl, CorpusFormat fmt = CorpusFormat::jsonl_text)
{
    std::istringstream in(jsonl);
    return parse_corpus(in, fmt);
}

Dataset docs(std::initializer_list<const char*> texts)
{
    Dataset ds;
    int i = 0;
    for (const char* t : texts)
        ds.train.push_back({"d" + std::to_string(i++), t, std::nullopt});
    return ds;
}

}  // namespace

TEST(Corpus, LoadsTextRecords)
{
    const auto ds = from_text("{\"id\":\"a\",\"text\":\"good movie\",\"label\":1}\n{\"id\":\"b\",\"text\":\"bad film\"}\n");
    ASSERT_EQ(ds.n(), 2u);
    EXPECT_FALSE(ds.has_embeddings());
    EXPECT_EQ(ds.train[0].text, "good movie");
    EXPECT_EQ(ds.train[0].gold_label, 1);
    EXPECT_FALSE(ds.train[1].gold_label);
}

TEST(Corpus, MissingIdNamesTheLine)
{
    try {
        from_text("{\"id\":\"a\",\"text\":\"x\"}\n{\"text\":\"y\"}\n");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
    }
    EXPECT_THROW(from_text("{\"id\":\"a\",\"text\":\"x\"}\nnot json\n"), ParseError);
    EXPECT_THROW(from_text("{\"id\":\"a\",\"text\":\"x\",\"label\":0}\n"), ParseError);
}

TEST(Corpus, DuplicateIdIsValidationError)
{
    EXPECT_THROW(from_text("{\"id\":\"a\",\"text\":\"x\"}\n{\"id\":\"a\",\"text\":\"y\"}\n"), ValidationError);
}

TEST(Corpus, VectorRecordsKeepTheirWidth)
{
    std::string body;
    for (int i = 0; i < 3; ++i)
        body += "{\"id\":\"v" + std::to_string(i) + "\",\"vector\":[1,2,3,4,5,6,7," + std::to_string(i) + "]}\n";
    body += "{\"id\":\"t0\",\"vector\":[0,0,0,0,0,0,0,0],\"split\":\"test\"}\n";
    const auto ds = from_text(body, CorpusFormat::jsonl_vectors);
    ASSERT_TRUE(ds.has_embeddings());
    EXPECT_EQ(ds.train_embeddings->cols(), 8);
    EXPECT_EQ(ds.train_embeddings->rows(), 3);
    EXPECT_EQ(ds.test.size(), 1u);
    EXPECT_EQ((*ds.train_embeddings)(2, 7), 2.0);
    EXPECT_THROW(from_text("{\"id\":\"a\",\"vector\":[1,2]}\n{\"id\":\"b\",\"vector\":[1]}\n", CorpusFormat::jsonl_vectors), ParseError);
}

TEST(Corpus, SerializeRoundTripsExactly)
{
    const auto ds = make_synthetic_corpus({.n_train = 50, .n_test = 10, .vocab_size = 30});
    const auto text = serialize_corpus(ds);
    const auto back = from_text(text);
    EXPECT_EQ(serialize_corpus(back), text);
    EXPECT_EQ(back.train.size(), 50u);
    EXPECT_EQ(back.test.size(), 10u);

    std::string vec = "{\"id\":\"a\",\"vector\":[0.1,-2.5e-07,3]}\n{\"id\":\"b\",\"vector\":[1,2,3],\"label\":-1}\n";
    const auto v = from_text(vec, CorpusFormat::jsonl_vectors);
    EXPECT_EQ(serialize_corpus(from_text(serialize_corpus(v), CorpusFormat::jsonl_vectors)), serialize_corpus(v));
}

TEST(Tokenize, LowercasesAndSplits)
{
    EXPECT_EQ(tokenize("Great movie, GREAT cast!"), (std::vector<std::string>{"great", "movie", "great", "cast"}));
    EXPECT_TRUE(tokenize("  ..  ").empty());
    const auto t = tokenize_with_offsets("ab, cd");
    ASSERT_EQ(t.size(), 2u);
    EXPECT_EQ(t[1].begin, 4u);
    EXPECT_EQ(t[1].end, 6u);
}

TEST(Vocab, Examples)
{
    const auto ds = docs({"a b", "a c"});
    const auto v = build_vocab(ds, 1, 1.0);
    ASSERT_EQ(v.size(), 3u);
    EXPECT_EQ(v.entries[0].token, "a");
    EXPECT_EQ(v.entries[0].doc_frequency, 2u);
    EXPECT_EQ(v.entries[1].doc_frequency, 1u);
    const auto w = build_vocab(ds, 1, 0.5);
    ASSERT_EQ(w.size(), 2u);
    EXPECT_EQ(w.entries[0].token, "b");
    EXPECT_EQ(w.entries[1].token, "c");
    EXPECT_THROW(build_vocab(ds, 3, 1.0), ConfigError);
    EXPECT_EQ(v.index_of("c"), 2u);
    EXPECT_FALSE(v.index_of("z"));
}

TEST(Embed, WidthIsClamped)
{
    const auto ds = docs({"a b", "b c", "a c", "a a"});
    const auto v = build_vocab(ds, 1, 1.0);
    const auto e = embed_svd(ds, v, 300);
    EXPECT_EQ(e.width(), 3);
    EXPECT_EQ(e.train.rows(), 4);
}

TEST(Embed, ComponentsAreOrthonormal)
{
    const auto ds = make_synthetic_corpus({.n_train = 200, .n_test = 20, .vocab_size = 60});
    const auto v = build_vocab(ds, 2, 0.9);
    const auto e = embed_svd(ds, v, 25);
    const Eigen::MatrixXd g = e.components.transpose() * e.components;
    EXPECT_LT((g - Eigen::MatrixXd::Identity(25, 25)).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_EQ(e.test.rows(), 20);
}

TEST(Embed, DuplicateDocumentsShareRows)
{
    const auto ds = docs({"a b c", "b c", "a b c", "c a"});
    const auto e = embed_svd(ds, build_vocab(ds, 1, 1.0), 2);
    EXPECT_EQ(e.train.row(0), e.train.row(2));
}

TEST(Embed, ReconstructionErrorShrinksWithRank)
{
    const auto ds = make_synthetic_corpus({.n_train = 150, .n_test = 10, .vocab_size = 40});
    const auto v = build_vocab(ds, 2, 0.9);
    const Eigen::MatrixXd bow = bag_of_words(ds.train, v);
    double prev = std::numeric_limits<double>::infinity();
    for (Eigen::Index d = 1; d <= 30; d += 3) {
        const auto e = embed_svd(ds, v, d);
        const double err = (bow - e.train * e.components.transpose()).squaredNorm();
        EXPECT_LE(err, prev + 1e-9);
        prev = err;
    }
}

TEST(Embed, MatchesEigenSvdSpectrum)
{
    const auto ds = make_synthetic_corpus({.n_train = 80, .n_test = 5, .vocab_size = 30});
    const auto v = build_vocab(ds, 2, 0.9);
    const Eigen::MatrixXd bow = bag_of_words(ds.train, v);
    const Eigen::JacobiSVD<Eigen::MatrixXd> ref(bow);
    const auto e = embed_svd(ds, v, 10);
    for (Eigen::Index k = 0; k < 10; ++k)
        EXPECT_NEAR(e.singular_values(k), ref.singularValues()(k), 1e-8 * ref.singularValues()(0));
}

TEST(Dataset, OverlappingSplitsAreRejected)
{
    Dataset ds = docs({"a", "b"});
    ds.test.push_back({"d0", "c", std::nullopt});
    EXPECT_THROW(validate_dataset(ds), ValidationError);
}
