#include <gtest/gtest.h>

#include <cmath>

#include "matchnet/policy.hpp"

using namespace matchnet;

namespace {

ModelSpec paw_model(double reward = 0.0, NoiseSpec noise = NoiseSpec::none())
{
    return uniform_model(graphs::paw(), {2, 1, 1, 1}, {0, 0, 0, 0}, reward, noise);
}

// Upper 0.001 quantiles of the chi-square law, indexed by degrees of freedom.
constexpr double chi2_999[] = {0.0, 10.828, 13.816, 16.266, 18.467, 20.515, 22.458};

/// Pearson statistic of choose_match frequencies against the exact distribution.
void expect_chi_square_fit(PolicyKind kind, const ModelSpec& spec, const QueueState& x, Vertex j, std::uint64_t seed)
{
    const MatchDistribution exact = match_distribution(kind, spec, x, j);
    constexpr int m = 100'000;
    std::vector<double> counts(spec.size(), 0.0);
    Rng rng(seed);
    for (int s = 0; s < m; ++s) {
        const auto i = choose_match(kind, spec, x, j, rng);
        ASSERT_TRUE(i.has_value());
        ASSERT_GT(exact.prob[*i], 0.0) << "chose a class outside the argmax";
        counts[*i] += 1.0;
    }
    double stat = 0.0;
    int cells = 0;
    for (Vertex i = 0; i < spec.size(); ++i) {
        if (exact.prob[i] > 0.0) {
            const double e = m * exact.prob[i];
            stat += (counts[i] - e) * (counts[i] - e) / e;
            ++cells;
        }
    }
    if (cells > 1) {
        EXPECT_LT(stat, chi2_999[cells - 1]);
    }
}

}  // namespace

TEST(Policy, ParseAndName)
{
    EXPECT_EQ(parse_policy("max_weight"), PolicyKind::MaxWeight);
    EXPECT_EQ(parse_policy("match_longest"), PolicyKind::MatchTheLongest);
    EXPECT_EQ(parse_policy("priority"), PolicyKind::Priority);
    EXPECT_EQ(to_string(PolicyKind::Priority), "priority");
    EXPECT_THROW(parse_policy("fcfm"), InputError);
}

TEST(Policy, MwScore)
{
    EXPECT_EQ(mw_score(3, 0.0, 0.0), 3.0);
    EXPECT_EQ(mw_score(1, -5.0, 2.0), 2.0);
    EXPECT_EQ(mw_score(4, 0.5, 1.5), 6.0);
}

TEST(Policy, ChooseMatchExamples)
{
    Rng rng(1);
    const ModelSpec k3 = uniform_model(graphs::complete(3), {1, 1, 1}, {0, 0, 0});
    EXPECT_EQ(choose_match(PolicyKind::MatchTheLongest, k3, QueueState{{0, 2, 0}}, 0, rng), Vertex{1});
    EXPECT_EQ(choose_match(PolicyKind::MatchTheLongest, k3, QueueState{{0, 0, 0}}, 0, rng), std::nullopt);

    const ModelSpec paw = paw_model();
    for (int k = 0; k < 100; ++k) {
        EXPECT_EQ(choose_match(PolicyKind::MatchTheLongest, paw, QueueState{{0, 3, 0, 1}}, 0, rng), Vertex{1});
    }
    int ones = 0;
    constexpr int trials = 100'000;
    for (int k = 0; k < trials; ++k) {
        const auto i = choose_match(PolicyKind::MatchTheLongest, paw, QueueState{{0, 1, 0, 1}}, 0, rng);
        ASSERT_TRUE(i == Vertex{1} || i == Vertex{3});
        ones += *i == 1 ? 1 : 0;
    }
    EXPECT_NEAR(static_cast<double>(ones) / trials, 0.5, 0.01);
}

TEST(Policy, ChooseMatchErrors)
{
    Rng rng(1);
    const ModelSpec k3 = uniform_model(graphs::complete(3), {1, 1, 1}, {0, 0, 0});
    EXPECT_THROW(choose_match(PolicyKind::MaxWeight, k3, QueueState{{1, 1, 0}}, 2, rng), ContractViolation);
    EXPECT_THROW(choose_match(PolicyKind::MaxWeight, k3, QueueState{{1, 0, 0}}, 3, rng), InputError);
}

TEST(Policy, NeverChoosesEmptyOrIncompatible)
{
    Rng rng(17);
    const ModelSpec spec = uniform_model(graphs::cycle(5), {1, 2, 3, 1, 2}, {0, 0, 0, 0, 0}, 1.0,
                                         NoiseSpec::uniform(-2, 2));
    const std::vector<QueueState> states{QueueState{{2, 0, 1, 0, 0}}, QueueState{{0, 4, 0, 1, 0}},
                                         QueueState{{3, 0, 0, 0, 0}}, QueueState{{0, 0, 0, 0, 0}}};
    for (PolicyKind kind : {PolicyKind::MaxWeight, PolicyKind::MatchTheLongest, PolicyKind::Priority}) {
        for (const auto& x : states) {
            for (Vertex j = 0; j < 5; ++j) {
                for (int s = 0; s < 200; ++s) {
                    if (const auto i = choose_match(kind, spec, x, j, rng)) {
                        EXPECT_GT(x[*i], 0);
                        EXPECT_TRUE(spec.graph.adjacent(*i, j));
                    }
                }
            }
        }
    }
}

TEST(Policy, PriorityFollowsRewards)
{
    ModelSpec spec = paw_model();
    spec.rewards[{0, 1}] = 1.0;
    spec.rewards[{0, 3}] = 5.0;
    Rng rng(2);
    for (int k = 0; k < 100; ++k) {
        EXPECT_EQ(choose_match(PolicyKind::Priority, spec, QueueState{{0, 9, 0, 1}}, 0, rng), Vertex{3});
    }
    // Max-Weight trades the reward gap against the queue gap.
    EXPECT_EQ(choose_match(PolicyKind::MaxWeight, spec, QueueState{{0, 9, 0, 1}}, 0, rng), Vertex{1});
}

TEST(Policy, ExactMatchDistribution)
{
    const ModelSpec paw = paw_model();
    const auto strict = match_distribution(PolicyKind::MatchTheLongest, paw, QueueState{{0, 3, 0, 1}}, 0);
    EXPECT_EQ(strict.prob, (std::vector<double>{0, 1, 0, 0}));
    const auto tie = match_distribution(PolicyKind::MatchTheLongest, paw, QueueState{{0, 1, 0, 1}}, 0);
    EXPECT_EQ(tie.prob, (std::vector<double>{0, 0.5, 0, 0.5}));
    const auto none = match_distribution(PolicyKind::MatchTheLongest, paw, QueueState{{0, 1, 0, 1}}, 1);
    EXPECT_EQ(none.prob, (std::vector<double>{0, 0, 0, 0}));

    const ModelSpec noisy = paw_model(0.0, NoiseSpec::uniform(-1, 1));
    EXPECT_THROW(match_distribution(PolicyKind::MaxWeight, noisy, QueueState{{0, 2, 0, 1}}, 0), UnsupportedMode);
    // Match the Longest ignores the noise law, so its distribution stays exact.
    EXPECT_NO_THROW(match_distribution(PolicyKind::MatchTheLongest, noisy, QueueState{{0, 2, 0, 1}}, 0));
}

TEST(Policy, MonteCarloMatchDistributionWithUniformNoise)
{
    // nu(1) = P(max(2+U1, 0) > max(1+U2, 0)) = P(U2 - U1 < 1) = 7/8.
    const ModelSpec noisy = paw_model(0.0, NoiseSpec::uniform(-1, 1));
    Rng rng(3);
    const auto mc = match_distribution_mc(PolicyKind::MaxWeight, noisy, QueueState{{0, 2, 0, 1}}, 0, 1'000'000, rng);
    EXPECT_NEAR(mc.prob[1], 0.875, 0.002);
    EXPECT_NEAR(mc.prob[1] + mc.prob[3], 1.0, 1e-12);
    EXPECT_GT(mc.std_error[1], 0.0);
}

TEST(Policy, MatchTheLongestEqualsConstantRewardMaxWeight)
{
    Rng rng(21);
    const Graph g = graphs::cycle(5);
    ModelSpec mw = uniform_model(g, {1, 1, 1, 1, 1}, {0, 0, 0, 0, 0});
    for (auto& [pair, w] : mw.rewards) {
        w = 0.5 + static_cast<double>(pair.arriving);  // w_{(j,i)} = c_j
    }
    for (int trial = 0; trial < 200; ++trial) {
        QueueState x(5);
        for (Vertex i = 0; i < 5; ++i) {
            if (rng.bernoulli(0.5) && (i == 0 || x[i - 1] == 0) && (i != 4 || x[0] == 0)) {
                x[i] = static_cast<std::int64_t>(1 + rng.below(4));
            }
        }
        ASSERT_TRUE(is_admissible(mw, x));
        for (Vertex j = 0; j < 5; ++j) {
            EXPECT_EQ(match_distribution(PolicyKind::MatchTheLongest, mw, x, j).prob,
                      match_distribution(PolicyKind::MaxWeight, mw, x, j).prob);
        }
    }
}

TEST(Policy, PriorityIgnoresQueueMagnitudes)
{
    ModelSpec spec = uniform_model(graphs::star(4), {3, 1, 1, 1}, {0, 0, 0, 0});
    spec.rewards[{0, 1}] = 2.0;
    spec.rewards[{0, 2}] = 2.0;
    spec.rewards[{0, 3}] = 1.0;
    const auto a = match_distribution(PolicyKind::Priority, spec, QueueState{{0, 1, 7, 2}}, 0);
    const auto b = match_distribution(PolicyKind::Priority, spec, QueueState{{0, 9, 1, 1}}, 0);
    EXPECT_EQ(a.prob, b.prob);
    EXPECT_EQ(a.prob, (std::vector<double>{0, 0.5, 0.5, 0}));
}

TEST(Policy, EmpiricalFrequenciesFitExactDistribution)
{
    ModelSpec spec = uniform_model(graphs::star(4), {3, 1, 1, 1}, {0, 0, 0, 0});
    spec.rewards[{0, 1}] = 2.0;
    spec.rewards[{0, 2}] = 2.0;
    spec.rewards[{0, 3}] = 2.0;
    expect_chi_square_fit(PolicyKind::MatchTheLongest, spec, QueueState{{0, 3, 3, 3}}, 0, 100);
    expect_chi_square_fit(PolicyKind::MaxWeight, spec, QueueState{{0, 2, 2, 1}}, 0, 101);
    expect_chi_square_fit(PolicyKind::Priority, spec, QueueState{{0, 1, 5, 2}}, 0, 102);
}

TEST(Policy, EffectiveModel)
{
    const ModelSpec noisy = paw_model(3.0, NoiseSpec::uniform(-1, 1));
    const ModelSpec eff = effective_max_weight_model(noisy, PolicyKind::MatchTheLongest);
    EXPECT_EQ(eff.max_reward(), 0.0);
    EXPECT_EQ(eff.noise_bound(), 0.0);
    EXPECT_EQ(effective_max_weight_model(noisy, PolicyKind::MaxWeight).max_reward(), 3.0);
    EXPECT_THROW(effective_max_weight_model(noisy, PolicyKind::Priority), BoundInapplicable);
}
