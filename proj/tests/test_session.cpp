#include "support/workspace.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

using namespace iws;
namespace it = iws::testing;

namespace {

AcquisitionConfig config(AcquisitionMode mode, std::uint64_t seed = 3)
{
    AcquisitionConfig c;
    c.mode = mode;
    c.seed = seed;
    return c;
}

void answer(SessionState& s, const Workspace& ws, int k)
{
    for (int i = 0; i < k && !s.complete(ws.p()); ++i) {
        const auto q = next_query(s, ws);
        record_response(s, q.lf_id, oracle_response(q.lf_id, ws.stats), true);
    }
}

std::filesystem::path temp_path(const std::string& name)
{
    auto dir = std::filesystem::temp_directory_path() / "iws_session_tests";
    std::filesystem::create_directories(dir);
    return dir / name;
}

}  // namespace

TEST(Workspace, PoolAndStatsAreConsistent)
{
    const auto& ws = it::small_workspace();
    EXPECT_GT(ws.p(), 20u);
    EXPECT_EQ(ws.lambda.p(), ws.p());
    EXPECT_EQ(ws.lf_features.matrix.rows(), static_cast<Eigen::Index>(ws.p()));
    EXPECT_EQ(ws.train_features.rows(), static_cast<Eigen::Index>(ws.ds.n()));
    EXPECT_TRUE(ws.has_train_gold);
    EXPECT_GT(ws.prior, 0.3);
    EXPECT_LT(ws.prior, 0.7);
}

TEST(Session, OpeningScheduleUsesTheBand)
{
    const auto& ws = it::small_workspace();
    const auto s = init_session(ws, config(AcquisitionMode::lse_a), 20);
    ASSERT_EQ(s.schedule.size(), kSeedQueries);
    std::size_t in_band = 0;
    for (std::size_t k = 0; k < 4; ++k) {
        const double a = *ws.stats[s.schedule[k]].true_accuracy;
        in_band += a >= kSeedBandLow && a <= kSeedBandHigh;
    }
    if (s.warnings.empty()) {
        EXPECT_EQ(in_band, 4u);
    }
    std::set<std::size_t> uniq(s.schedule.begin(), s.schedule.end());
    EXPECT_EQ(uniq.size(), kSeedQueries);
    EXPECT_EQ(init_session(ws, config(AcquisitionMode::lse_a), 20).schedule, s.schedule);
    EXPECT_NE(init_session(ws, config(AcquisitionMode::lse_a, 4), 20).schedule, s.schedule);
}

TEST(Session, ConfigErrors)
{
    const auto& ws = it::small_workspace();
    EXPECT_THROW(init_session(ws, config(AcquisitionMode::lse_a), 7), ConfigError);
    auto bad = config(AcquisitionMode::lse_a);
    bad.r = 0.4;
    EXPECT_THROW(init_session(ws, bad, 20), ConfigError);
    EXPECT_THROW(init_session(ws, config(AcquisitionMode::lse_a), 20, 0), ConfigError);
}

TEST(Session, QueryProtocol)
{
    const auto& ws = it::small_workspace();
    auto s = init_session(ws, config(AcquisitionMode::lse_a), 12);
    EXPECT_THROW(record_response(s, 0, Response::useful, true), ProtocolError);
    const auto q = next_query(s, ws);
    EXPECT_EQ(q.iteration, 1);
    EXPECT_EQ(q.lf_id, s.schedule[0]);
    EXPECT_FALSE(q.snippets.empty());
    EXPECT_LE(q.snippets.size(), 4u);
    EXPECT_THROW(next_query(s, ws), ProtocolError);
    EXPECT_THROW(record_response(s, q.lf_id + 1, Response::useful, true), ProtocolError);
    record_response(s, q.lf_id, Response::unsure, false);
    EXPECT_EQ(s.Q.records()[0].weight, 0.5);
    answer(s, ws, 20);
    EXPECT_EQ(s.Q.size(), 12u);
    EXPECT_THROW(next_query(s, ws), SessionComplete);
    std::set<std::size_t> ids;
    for (const auto& r : s.Q.records())
        ids.insert(r.lf_id);
    EXPECT_EQ(ids.size(), 12u);
}

TEST(Session, OracleThreshold)
{
    std::vector<LFStats> stats{{0.1, 0.7}, {0.1, 0.6999}, {0.1, std::nullopt}};
    EXPECT_EQ(oracle_response(0, stats), Response::useful);
    EXPECT_EQ(oracle_response(1, stats), Response::not_useful);
    EXPECT_EQ(oracle_response(1, stats, {0.6}), Response::useful);
    EXPECT_THROW(oracle_response(2, stats), ValidationError);
    EXPECT_THROW(OracleConfig{0.5}.validate(), ConfigError);
}

TEST(Session, RandomModeIsSeeded)
{
    const auto& ws = it::small_workspace();
    auto a = init_session(ws, config(AcquisitionMode::random, 9), 20);
    auto b = init_session(ws, config(AcquisitionMode::random, 9), 20);
    answer(a, ws, 20);
    answer(b, ws, 20);
    EXPECT_EQ(a.Q.records(), b.Q.records());
}

TEST(Session, SaveLoadRoundTripsBytes)
{
    const auto& ws = it::small_workspace();
    auto s = init_session(ws, config(AcquisitionMode::lse_ac), 15);
    answer(s, ws, 9);
    next_query(s, ws);
    const auto path = temp_path("roundtrip.json");
    save_session(s, path);
    const auto back = load_session(path);
    EXPECT_EQ(serialize_session(back), serialize_session(s));
    EXPECT_EQ(back.pending, s.pending);
    EXPECT_EQ(back.Q.records(), s.Q.records());
}

TEST(Session, ResumeContinuesIdentically)
{
    const auto& ws = it::small_workspace();
    auto straight = init_session(ws, config(AcquisitionMode::lse_a), 14);
    answer(straight, ws, 14);

    auto first = init_session(ws, config(AcquisitionMode::lse_a), 14);
    answer(first, ws, 10);
    auto resumed = parse_session(serialize_session(first));
    answer(resumed, ws, 10);
    EXPECT_EQ(resumed.Q.records(), straight.Q.records());
}

TEST(Session, CorruptAndVersionedFiles)
{
    EXPECT_THROW(parse_session("{not json"), ParseError);
    EXPECT_THROW(parse_session("{\"version\": 99}"), VersionError);
    EXPECT_THROW(parse_session("[]"), VersionError);
    const auto& ws = it::small_workspace();
    auto s = init_session(ws, config(AcquisitionMode::lse_a), 10);
    auto j = to_json(s);
    j["iteration"] = 3;
    EXPECT_THROW(session_from_json(j), ValidationError);
    auto k = to_json(s);
    k.erase("schedule");
    EXPECT_THROW(session_from_json(k), ValidationError);
    const auto path = temp_path("truncated.json");
    {
        std::ofstream out(path);
        out << serialize_session(s).substr(0, 40);
    }
    EXPECT_THROW(load_session(path), ParseError);
}

TEST(Session, ScenarioSets)
{
    const auto& ws = it::small_workspace();
    auto s = init_session(ws, config(AcquisitionMode::active_search), 20);
    answer(s, ws, 20);
    const auto as = final_set(s, ws, Scenario::as);
    for (auto j : as)
        EXPECT_EQ(oracle_response(j, ws.stats), Response::useful);
    EXPECT_EQ(as.size(), s.Q.count(Response::useful));
    s.config.m_tilde = 2;
    EXPECT_LE(final_set(s, ws, Scenario::ac).size(), s.Q.count(Response::useful) + 2);
    EXPECT_EQ(scenario_for(AcquisitionMode::lse_ac), Scenario::ac);
    EXPECT_EQ(scenario_for(AcquisitionMode::random), Scenario::a);
    EXPECT_THROW(parse_scenario("b"), ConfigError);
}

TEST(Session, FinalizeNeedsEightAnnotations)
{
    const auto& ws = it::small_workspace();
    auto s = init_session(ws, config(AcquisitionMode::lse_a), 20);
    answer(s, ws, 7);
    EXPECT_THROW(finalize_pipeline(s, ws, Scenario::a), ProtocolError);
    answer(s, ws, 1);
    const auto r = finalize_pipeline(s, ws, Scenario::as);
    EXPECT_EQ(r.iteration, 8);
    EXPECT_EQ(r.n_lfs, s.Q.count(Response::useful));
    if (r.n_lfs > 0) {
        ASSERT_TRUE(r.auc);
        EXPECT_GE(*r.auc, 0.0);
        EXPECT_LE(*r.auc, 1.0);
    }
}

TEST(Results, CsvFormat)
{
    ResultRecord a{25, "lse_a", 3, 12, 0.5, 0.1, 0.81234567, {}};
    ResultRecord b{50, "random", 3, 0, 0.0, 0.0, std::nullopt, {}};
    EXPECT_EQ(results_csv({a, b}), "iteration,mode,seed,n_lfs,coverage,auc\n25,lse_a,3,12,0.500000,0.812346\n50,random,3,0,0.000000,\n");
    const auto back = result_from_json(nlohmann::json::parse(to_json(a).dump()));
    EXPECT_EQ(back.n_lfs, 12u);
    EXPECT_EQ(back.auc, a.auc);
}

TEST(Results, OracleRunIsDeterministic)
{
    const auto& ws = it::small_workspace();
    const auto a = results_csv(run_with_oracle(ws, config(AcquisitionMode::lse_a), 16, {}, 5, {8, 16}));
    const auto b = results_csv(run_with_oracle(ws, config(AcquisitionMode::lse_a), 16, {}, 5, {8, 16}));
    EXPECT_EQ(a, b);
    EXPECT_EQ(std::count(a.begin(), a.end(), '\n'), 3);
}

TEST(Baseline, ActiveLearningRecordsCheckpoints)
{
    const auto& ws = it::small_workspace();
    const auto rows = active_learning_baseline(ws, 12, 1, {8, 12});
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].mode, "al");
    EXPECT_EQ(rows[1].iteration, 12);
    EXPECT_TRUE(rows[1].auc);
    const double gold = full_supervision_auc(ws, 1);
    EXPECT_GT(gold, 0.6);
}
