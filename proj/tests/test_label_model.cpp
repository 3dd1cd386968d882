#include "support/oracles.hpp"

#include <cmath>
#include <gtest/gtest.h>

using namespace iws;
namespace it = iws::testing;

TEST(LabelModel, ZeroThetaGivesMinusMLn3PerSample)
{
    std::mt19937_64 rng(3);
    for (std::size_t m : {1u, 2u, 5u}) {
        const auto lambda = it::random_matrix(17, m, 0.4, rng);
        const auto p = LabelModelParams::zeros(m, 0.5);
        EXPECT_NEAR(log_marginal_likelihood(lambda, p) / 17.0, -static_cast<double>(m) * std::log(3.0), 1e-12);
    }
}

TEST(LabelModel, PartitionFactorizesPerLf)
{
    std::mt19937_64 rng(5);
    const auto p = it::random_params(3, rng);
    double z = 1.0;
    for (std::size_t j = 0; j < 3; ++j)
        z *= std::exp(p.theta_acc[j] + p.theta_lab[j]) + std::exp(p.theta_lab[j]) + 1.0;
    EXPECT_NEAR(it::partition_by_enumeration(p, 1), z, 1e-10 * z);
    EXPECT_NEAR(it::partition_by_enumeration(p, -1), z, 1e-10 * z);
}

TEST(LabelModel, LikelihoodMatchesEnumeration)
{
    std::mt19937_64 rng(7);
    for (int rep = 0; rep < 10; ++rep) {
        const auto lambda = it::random_matrix(4, 3, 0.6, rng);
        const auto p = it::random_params(3, rng);
        EXPECT_NEAR(log_marginal_likelihood(lambda, p), it::log_likelihood_by_enumeration(lambda, p), 1e-12);
    }
}

TEST(LabelModel, GradientMatchesCentralDifferences)
{
    std::mt19937_64 rng(11);
    const double h = 1e-5;
    for (int rep = 0; rep < 10; ++rep) {
        const auto lambda = it::random_matrix(30, 4, 0.5, rng);
        auto p = it::random_params(4, rng);
        const auto g = log_marginal_likelihood_gradient(lambda, p);
        for (std::size_t j = 0; j < 4; ++j) {
            for (int which = 0; which < 2; ++which) {
                auto& v = which == 0 ? p.theta_acc[j] : p.theta_lab[j];
                const double keep = v;
                v = keep + h;
                const double up = log_marginal_likelihood(lambda, p);
                v = keep - h;
                const double down = log_marginal_likelihood(lambda, p);
                v = keep;
                const double fd = (up - down) / (2.0 * h);
                const double an = which == 0 ? g.acc[j] : g.lab[j];
                EXPECT_LE(std::abs(an - fd), 1e-5 * std::max(1.0, std::abs(fd)));
            }
        }
    }
}

TEST(LabelModel, PosteriorExamples)
{
    Eigen::MatrixXi d(2, 2);
    d << 1, 1, 1, -1;
    const auto lambda = LFMatrix::from_dense(d);
    LabelModelParams p{{1.0, 1.0}, {0.3, -0.2}, 0.5};
    const auto labels = posterior_prob_labels(lambda, p);
    EXPECT_NEAR(labels.probs[0], 1.0 / (1.0 + std::exp(-2.0)), 1e-15);
    EXPECT_NEAR(labels.probs[0], 0.8808, 1e-4);
    EXPECT_DOUBLE_EQ(labels.probs[1], 0.5);
}

TEST(LabelModel, PosteriorMatchesEnumerationOnEveryRow)
{
    std::mt19937_64 rng(13);
    for (std::size_t m = 1; m <= 4; ++m) {
        const auto lambda = it::all_rows_matrix(m);
        const auto p = it::random_params(m, rng);
        const auto got = posterior_prob_labels(lambda, p);
        const auto want = it::posterior_by_enumeration(lambda, p);
        for (std::size_t i = 0; i < lambda.n(); ++i)
            EXPECT_NEAR(got.probs[i], want[i], 1e-12);
    }
}

TEST(LabelModel, UncoveredRowsCarryThePrior)
{
    Eigen::MatrixXi d(3, 2);
    d << 0, 0, 1, 0, 0, -1;
    const auto labels = posterior_prob_labels(LFMatrix::from_dense(d), {{0.5, 0.5}, {0, 0}, 0.3});
    EXPECT_DOUBLE_EQ(labels.probs[0], 0.3);
    EXPECT_FALSE(labels.covered[0]);
    EXPECT_TRUE(labels.covered[1]);
    EXPECT_EQ(labels.covered_count(), 2u);
}

TEST(LabelModel, PropensityShiftLeavesArgmaxUnchanged)
{
    std::mt19937_64 rng(17);
    const auto lambda = it::random_matrix(50, 5, 0.5, rng);
    auto p = it::random_params(5, rng);
    const auto before = posterior_prob_labels(lambda, p);
    for (auto& t : p.theta_lab)
        t += 3.7;
    const auto after = posterior_prob_labels(lambda, p);
    for (std::size_t i = 0; i < lambda.n(); ++i)
        EXPECT_EQ(before.probs[i] > 0.5, after.probs[i] > 0.5);
}

TEST(LabelModel, ConcaveAlongLinesThroughZero)
{
    std::mt19937_64 rng(19);
    std::normal_distribution<double> g(0.0, 1.0);
    const auto lambda = it::random_matrix(40, 3, 0.5, rng);
    for (int dir = 0; dir < 10; ++dir) {
        LabelModelParams d = LabelModelParams::zeros(3, 0.5);
        for (std::size_t j = 0; j < 3; ++j) {
            d.theta_acc[j] = g(rng);
            d.theta_lab[j] = g(rng);
        }
        auto at = [&](double t) {
            auto q = d;
            for (std::size_t j = 0; j < 3; ++j) {
                q.theta_acc[j] *= t;
                q.theta_lab[j] *= t;
            }
            return log_marginal_likelihood(lambda, q);
        };
        for (double t = -2.0; t <= 2.0; t += 0.25)
            EXPECT_LE(at(t - 0.1) + at(t + 0.1) - 2.0 * at(t), 1e-8);
    }
}

TEST(LabelModel, RecoversClosedFormAccuracy)
{
    const auto data = it::sample_homogeneous(10000, 5, 0.9, 1.0, 0.5, 20201007);
    const auto fit = fit_mle_report(data.lambda, 0.5);
    for (double t : fit.params.theta_acc)
        EXPECT_NEAR(t, std::log(0.9 / 0.1), 0.1);
}

TEST(LabelModel, SymmetricDataGivesZeroAccuracyWeight)
{
    // every pattern of {-1,0,+1}^4 exactly once: the LFs are independent and no LF beats chance
    const auto lambda = it::all_rows_matrix(4);
    LabelModelFitConfig chance;
    chance.init_accuracy = 0.5;
    const auto at_chance = fit_mle(lambda, 0.5, chance);
    for (double t : at_chance.theta_acc)
        EXPECT_DOUBLE_EQ(t, 0.0);

    // the likelihood is quartic around zero, so a start away from it drifts in slowly
    LabelModelFitConfig slow;
    slow.max_steps = 200000;
    const auto fit = fit_mle_report(lambda, 0.5, slow);
    for (double t : fit.params.theta_acc)
        EXPECT_LT(std::abs(t), 0.05);
    EXPECT_LE(log_marginal_likelihood(lambda, fit.params), log_marginal_likelihood(lambda, at_chance) + 1e-9);

    LabelModelFitConfig free = slow;
    free.nonnegative_accuracy = false;
    free.init_accuracy = 0.6;
    for (double t : fit_mle(lambda, 0.5, free).theta_acc)
        EXPECT_LT(std::abs(t), 0.05);
}

TEST(LabelModel, FitIsDeterministic)
{
    const auto data = it::sample_homogeneous(500, 4, 0.8, 0.5, 0.5, 1);
    const auto a = fit_mle(data.lambda, 0.5);
    const auto b = fit_mle(data.lambda, 0.5);
    EXPECT_EQ(a.theta_acc, b.theta_acc);
    EXPECT_EQ(a.theta_lab, b.theta_lab);
}

TEST(LabelModel, ZeroCoverageColumnIsRejected)
{
    Eigen::MatrixXi d(3, 2);
    d << 1, 0, -1, 0, 1, 0;
    EXPECT_THROW(fit_mle(LFMatrix::from_dense(d), 0.5), ValidationError);
}

TEST(LabelModel, ParamsJsonRoundTrip)
{
    LabelModelParams p{{0.25, -1.5}, {0.125, 2.0}, 0.4};
    const auto q = label_model_params_from_json(nlohmann::json::parse(to_json(p).dump()));
    EXPECT_EQ(q.theta_acc, p.theta_acc);
    EXPECT_EQ(q.theta_lab, p.theta_lab);
    EXPECT_EQ(q.prior, p.prior);
}

TEST(ClosedForm, Examples)
{
    const auto t = closed_form_theta(0.7, 0.4, 2, FactorModel::acc_prop);
    EXPECT_NEAR(t.theta_acc, std::log(7.0 / 3.0), 1e-12);
    EXPECT_NEAR(t.theta_acc, 0.8473, 1e-4);
    ASSERT_TRUE(t.theta_lab);
    EXPECT_NEAR(*t.theta_lab, std::log(0.2), 1e-12);
    EXPECT_NEAR(*t.theta_lab, -1.6094, 1e-4);
    EXPECT_EQ(closed_form_theta(0.5, 0.3, 2, FactorModel::acc_prop).theta_acc, 0.0);
    EXPECT_NEAR(closed_form_theta(1.0 / 3.0, 0.0, 2, FactorModel::acc_only).theta_acc, 0.0, 1e-15);
    EXPECT_FALSE(closed_form_theta(0.6, 0.0, 2, FactorModel::acc_only).theta_lab);
}

TEST(ClosedForm, RoundTripThroughImpliedStats)
{
    for (int classes : {2, 3, 5})
        for (double a : {0.55, 0.7, 0.9, 0.99})
            for (double l : {0.01, 0.2, 0.5, 0.95}) {
                const auto t = closed_form_theta(a, l, classes, FactorModel::acc_prop);
                const auto s = implied_stats(t.theta_acc, *t.theta_lab, classes);
                EXPECT_NEAR(s.alpha, a, 1e-10);
                EXPECT_NEAR(s.coverage, l, 1e-10);
            }
}

TEST(ClosedForm, BoundaryInputsAreDomainErrors)
{
    EXPECT_THROW(closed_form_theta(1.0, 0.5, 2, FactorModel::acc_prop), DomainError);
    EXPECT_THROW(closed_form_theta(0.0, 0.5, 2, FactorModel::acc_prop), DomainError);
    EXPECT_THROW(closed_form_theta(0.7, 1.0, 2, FactorModel::acc_prop), DomainError);
    EXPECT_THROW(closed_form_theta(0.7, 0.5, 1, FactorModel::acc_prop), DomainError);
}

TEST(TheoremBound, HandExample)
{
    const std::vector<double> theta(10, 1.0), alpha(10, 0.8), l(10, 1.0);
    EXPECT_NEAR(theorem_bound(theta, alpha, l), 1.0 - std::exp(-36.0 / 20.0), 1e-12);
    EXPECT_NEAR(theorem_bound(theta, alpha, l), 0.8347, 1e-4);
}

TEST(TheoremBound, ZeroWeightsAreDomainError)
{
    const std::vector<double> theta(3, 0.0), alpha(3, 0.8), l(3, 1.0);
    EXPECT_THROW(theorem_bound(theta, alpha, l), DomainError);
}

TEST(TheoremBound, MonotoneInAccuracy)
{
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 200; ++rep) {
        std::vector<double> theta(4), alpha(4), l(4);
        for (int j = 0; j < 4; ++j) {
            theta[j] = 0.1 + 2.0 * u(rng);
            alpha[j] = 0.5 + 0.45 * u(rng);
            l[j] = 0.1 + 0.9 * u(rng);
        }
        const double base = theorem_bound(theta, alpha, l);
        const std::size_t j = rep % 4;
        alpha[j] = std::min(0.999, alpha[j] + 0.05);
        EXPECT_GE(theorem_bound(theta, alpha, l), base - 1e-15);
    }
}

TEST(TheoremBound, HoldsUnderSampling)
{
    std::mt19937_64 rng(29);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 10; ++rep) {
        std::vector<double> alpha(6), l(6), theta(6);
        for (int j = 0; j < 6; ++j) {
            alpha[j] = 0.55 + 0.4 * u(rng);
            l[j] = 0.2 + 0.8 * u(rng);
            theta[j] = std::log(alpha[j] / (1.0 - alpha[j]));
        }
        const auto data = it::sample_homogeneous(10000, alpha, l, 0.5, rng());
        std::vector<double> score(data.y.size(), 0.0);
        for (std::size_t j = 0; j < 6; ++j)
            for (const auto& c : data.lambda.column(j))
                score[c.row] += theta[j] * c.value;
        std::size_t hit = 0;
        for (std::size_t i = 0; i < score.size(); ++i)
            hit += (score[i] > 0 && data.y[i] == 1) || (score[i] < 0 && data.y[i] == -1);
        EXPECT_GE(static_cast<double>(hit) / 10000.0, theorem_bound(theta, alpha, l) - 0.02);
    }
}

TEST(MajorityVote, TiesAndAbstainsGoPositive)
{
    Eigen::MatrixXi d(4, 3);
    d << 1, 1, -1, -1, -1, 1, 1, -1, 0, 0, 0, 0;
    EXPECT_EQ(majority_vote(LFMatrix::from_dense(d)), (std::vector<int>{1, -1, 1, 1}));
}
