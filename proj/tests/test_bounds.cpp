#include <gtest/gtest.h>

#include <cmath>

#include "matchnet/bounds.hpp"
#include "matchnet/oracle.hpp"

using namespace matchnet;

namespace {

ModelSpec k3(std::vector<double> gamma = {0, 0, 0}) { return uniform_model(graphs::complete(3), {1, 1, 1}, gamma); }
ModelSpec paw() { return uniform_model(graphs::paw(), {2, 1, 1, 1}, {0, 0, 0, 0}); }

QueueState delta(std::size_t n, Vertex i, std::int64_t k)
{
    QueueState x(n);
    x[i] = k;
    return x;
}

/// Connected graphs with NCOND-forced intensities, Dirac(0) noise and zero rewards.
std::vector<ModelSpec> drift_corpus(std::size_t count, std::uint64_t seed)
{
    std::vector<ModelSpec> out;
    Rng rng(seed);
    while (out.size() < count) {
        const Graph g = erdos_renyi(3 + rng.below(4), 0.5, rng);
        if (!is_connected(g) || is_bipartite(g)) {
            continue;
        }
        const std::vector<double> gamma(g.size(), 0.0);
        if (const auto lam = find_stabilizing_lambda(g, gamma, rng, 100000)) {
            out.push_back(uniform_model(g, *lam, gamma));
        }
    }
    return out;
}

}  // namespace

TEST(Bounds, RhoTilde)
{
    const auto r = rho_tilde(paw());
    EXPECT_DOUBLE_EQ(r[0], 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(r[1], 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(r[2], 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(r[3], 0.5);
}

TEST(Bounds, LowerBoundMean)
{
    EXPECT_DOUBLE_EQ(lower_bound_mean(k3()), 1.0);
    EXPECT_NEAR(lower_bound_mean(paw()), 2.0, 1e-12);
    EXPECT_THROW(lower_bound_mean(uniform_model(graphs::path(2), {2, 1}, {0, 0})), BoundInapplicable);

    // Reneging: compare with a plain 10^4-term product-form summation.
    double weight = 1.0;
    double mass = 1.0;
    double first = 0.0;
    for (int z = 1; z <= 10000; ++z) {
        weight *= 1.0 / (2.0 + z);
        mass += weight;
        first += z * weight;
    }
    EXPECT_NEAR(lower_bound_mean(k3({1, 1, 1})), first / mass, 1e-9);
}

TEST(Bounds, UpperBoundMean)
{
    EXPECT_DOUBLE_EQ(upper_bound_mean(k3()), 1.5);
    EXPECT_DOUBLE_EQ(upper_bound_mean(paw()), 2.5);
    ModelSpec noisy = uniform_model(graphs::complete(3), {1, 1, 1}, {0, 0, 0}, 0.0, NoiseSpec::uniform(-1, 1));
    noisy.rewards[{0, 1}] = 2.0;
    EXPECT_DOUBLE_EQ(upper_bound_mean(noisy), 37.5);
    EXPECT_THROW(upper_bound_mean(k3({1, 0, 0})), BoundInapplicable);
    EXPECT_THROW(upper_bound_mean(uniform_model(graphs::path(2), {2, 1}, {0, 0})), BoundInapplicable);
}

TEST(Bounds, UpperBoundVariance)
{
    EXPECT_NEAR(upper_bound_variance(k3()), 9.0, 1e-12);
    EXPECT_NEAR(upper_bound_variance(paw()), 68.0 / 3.0, 1e-12);
    EXPECT_THROW(upper_bound_variance(k3({1, 1, 1})), BoundInapplicable);
    const double lower = lower_bound_mean(paw());
    EXPECT_GE(upper_bound_variance(paw()), -lower * lower);
}

TEST(Bounds, DriftF2Rhs)
{
    EXPECT_DOUBLE_EQ(drift_f2_rhs(k3(), delta(3, 0, 5), 0.5), -2.0);
    EXPECT_DOUBLE_EQ(drift_f2_rhs(k3(), QueueState(3), 0.5), 3.0);
    EXPECT_DOUBLE_EQ(drift_f2_rhs(k3({1, 1, 1}), delta(3, 0, 5), 0.5), -32.0);
    EXPECT_THROW(drift_f2_rhs(k3(), delta(3, 0, 5), 3.0), InputError);
    const ModelSpec noisy = uniform_model(graphs::complete(3), {1, 1, 1}, {0, 0, 0}, 0.0, NoiseSpec::uniform(-1, 1));
    EXPECT_GE(drift_f2_rhs(noisy, QueueState(3), 0.5), 3.0);
}

TEST(Bounds, DriftF2UsesPatientMaximum)
{
    // P2, lambda = (1, 8), gamma = (0, 1), x = 10 delta_1: the largest queue reneges.
    // L f2 = 1 (81 - 100) + 8 (121 - 100) + 10 (81 - 100) = -41.
    const ModelSpec spec = uniform_model(graphs::path(2), {1, 8}, {0, 1});
    const QueueState x{{0, 10}};
    EXPECT_DOUBLE_EQ(generator_apply(spec, PolicyKind::MaxWeight, lyapunov::quadratic, x), -41.0);
    // 9 + 2 (-100 + 8.5 * 10) + 2 (kappa - eta) * 0; the ||x||_inf reading would give -91.
    EXPECT_DOUBLE_EQ(drift_f2_rhs(spec, x, 3.5), -21.0);
}

TEST(Bounds, DriftF3Rhs)
{
    EXPECT_DOUBLE_EQ(drift_f3_rhs(k3(), delta(3, 0, 5)), 18.0);
    EXPECT_DOUBLE_EQ(drift_f3_rhs(k3(), QueueState(3)), 3.0);
    EXPECT_DOUBLE_EQ(drift_f3_rhs(k3(), delta(3, 0, 20)), -837.0);
    EXPECT_THROW(drift_f3_rhs(k3({1, 1, 1}), delta(3, 0, 5)), BoundInapplicable);
}

TEST(Bounds, GeneratorExamples)
{
    const QueueState x = delta(3, 0, 5);
    EXPECT_DOUBLE_EQ(generator_apply(k3(), PolicyKind::MatchTheLongest, lyapunov::quadratic, x), -7.0);
    EXPECT_DOUBLE_EQ(generator_apply(k3(), PolicyKind::MatchTheLongest, lyapunov::cubic, x), -31.0);
    const StateFunction constant = [](const QueueState&) { return 4.2; };
    EXPECT_EQ(generator_apply(k3(), PolicyKind::MatchTheLongest, constant, x), 0.0);
    EXPECT_EQ(generator_apply(k3(), PolicyKind::MatchTheLongest, constant, QueueState(3)), 0.0);
    EXPECT_THROW(generator_apply(k3(), PolicyKind::MaxWeight, constant, QueueState{{1, 1, 0}}), ContractViolation);
}

TEST(Bounds, GeneratorWithReneging)
{
    // P2, gamma = (1, 1), x = (3, 0): arrivals of 0 store, arrivals of 1 match, 3 items renege.
    const ModelSpec spec = uniform_model(graphs::path(2), {2, 1}, {1, 1});
    const QueueState x{{3, 0}};
    const double expected = 2.0 * (16 - 9) + (1.0 + 3.0) * (4 - 9);
    EXPECT_DOUBLE_EQ(generator_apply(spec, PolicyKind::MatchTheLongest, lyapunov::quadratic, x), expected);
}

TEST(Bounds, MonteCarloGeneratorAgreesWithExact)
{
    const ModelSpec spec = uniform_model(graphs::paw(), {2, 1, 1, 1}, {0, 0, 0, 0}, 0.0, NoiseSpec::uniform(-1, 1));
    Rng rng(8);
    const QueueState x{{0, 2, 0, 1}};
    // nu_{x,0}(1) = 7/8; other arrivals: 1 and 3 store, 2 matches 1.
    const double exact = 2.0 * (7.0 / 8.0 * (1 + 1 - 5) + 1.0 / 8.0 * (4 + 0 - 5)) + 1.0 * (9 + 1 - 5) +
                         1.0 * (1 + 1 - 5) + 1.0 * (4 + 4 - 5);
    const double mc = generator_apply_mc(spec, PolicyKind::MaxWeight, lyapunov::quadratic, x, 400'000, rng);
    EXPECT_NEAR(mc, exact, 0.02);
}

TEST(Bounds, QuadraticAndCubicDriftDomination)
{
    const auto corpus = drift_corpus(12, 404);
    std::size_t checked = 0;
    for (const ModelSpec& spec : corpus) {
        const double eta = check_ncond(spec).eta;
        const TruncatedChain chain = build_chain(spec, PolicyKind::MatchTheLongest, 12);
        for (const QueueState& x : chain.states) {
            const double l2 = generator_apply(spec, PolicyKind::MaxWeight, lyapunov::quadratic, x);
            const double l3 = generator_apply(spec, PolicyKind::MaxWeight, lyapunov::cubic, x);
            for (double kappa : {eta / 2, eta / 4}) {
                EXPECT_LE(l2, drift_f2_rhs(spec, x, kappa) + 1e-9);
            }
            EXPECT_LE(l3, drift_f3_rhs(spec, x) + 1e-9);
            ++checked;
        }
    }
    EXPECT_GT(checked, 1000U);
}

TEST(Bounds, GeometricDrift)
{
    // The threshold grows like lambda(V)/eta, so keep the instances whose region beyond it
    // is reachable with a modest truncation level.
    std::vector<ModelSpec> corpus{k3(), paw(), uniform_model(graphs::complete(4), {1, 1, 1, 1}, {0, 0, 0, 0}),
                                  uniform_model(graphs::complete(5), {1, 2, 1, 2, 1}, {0, 0, 0, 0, 0})};
    for (const ModelSpec& spec : drift_corpus(40, 505)) {
        if (geometric_drift(spec).threshold <= 25.0) {
            corpus.push_back(spec);
        }
    }
    for (const ModelSpec& spec : corpus) {
        const GeometricDrift gd = geometric_drift(spec);
        ASSERT_LE(gd.threshold, 25.0);
        EXPECT_GT(gd.alpha, 0.0);
        const auto f = lyapunov::exp_norm(gd.alpha);
        const auto level = static_cast<std::int64_t>(std::ceil(gd.threshold)) + 3;
        int beyond = 0;
        for (const QueueState& x : build_chain(spec, PolicyKind::MatchTheLongest, level).states) {
            if (x.l2_norm() > gd.threshold) {
                EXPECT_LT(generator_apply(spec, PolicyKind::MaxWeight, f, x), 0.0);
                ++beyond;
            }
        }
        EXPECT_GT(beyond, 0);
    }
    EXPECT_THROW(geometric_drift(uniform_model(graphs::path(2), {2, 1}, {0, 0})), BoundInapplicable);
    EXPECT_THROW(geometric_drift(k3(), 1.0), InputError);
    EXPECT_THROW(geometric_drift(uniform_model(graphs::path(2), {1, 8}, {0, 1})), BoundInapplicable);
}

TEST(Bounds, StationarityIdentity)
{
    // sum_x pi(x) (L f2)(x) vanishes up to the flux through the truncation boundary.
    for (const ModelSpec& spec : {k3(), paw()}) {
        const TruncatedChain chain = build_chain(spec, PolicyKind::MatchTheLongest, 60);
        const StationaryResult st = stationary(chain);
        double total = 0.0;
        double boundary = 0.0;
        for (std::size_t s = 0; s < chain.size(); ++s) {
            const QueueState& x = chain.states[s];
            total += st.pi[static_cast<Eigen::Index>(s)] *
                     generator_apply(spec, PolicyKind::MatchTheLongest, lyapunov::quadratic, x);
            if (x.max_norm() == 60) {
                boundary += st.pi[static_cast<Eigen::Index>(s)] * spec.lambda_total() * 121.0;
            }
        }
        EXPECT_LE(std::abs(total), boundary + 1e-8);
    }
}

TEST(Bounds, ComputeBoundsReport)
{
    const BoundsReport r = compute_bounds(k3(), PolicyKind::MatchTheLongest);
    EXPECT_TRUE(r.ncond_holds);
    EXPECT_EQ(r.eta, 1.0);
    ASSERT_TRUE(r.kappa && r.u_kappa && r.lower_mean && r.upper_mean && r.upper_variance);
    EXPECT_EQ(*r.kappa, 0.5);
    EXPECT_EQ(*r.u_kappa, 0.0);
    EXPECT_EQ(*r.lower_mean, 1.0);
    EXPECT_EQ(*r.upper_mean, 1.5);
    EXPECT_LE(*r.upper_variance, 9.0 + 1e-12);

    const BoundsReport ren = compute_bounds(k3({1, 1, 1}), PolicyKind::MatchTheLongest);
    EXPECT_FALSE(ren.upper_mean.has_value());
    EXPECT_EQ(ren.upper_reason, "requires R=∅");
    EXPECT_TRUE(ren.lower_mean.has_value());

    const BoundsReport pr = compute_bounds(paw(), PolicyKind::Priority);
    EXPECT_FALSE(pr.upper_mean.has_value());
    EXPECT_NEAR(*pr.lower_mean, 2.0, 1e-12);

    const BoundsReport bad = compute_bounds(uniform_model(graphs::path(2), {2, 1}, {0, 0}));
    EXPECT_FALSE(bad.ncond_holds);
    EXPECT_FALSE(bad.lower_mean.has_value());
    EXPECT_FALSE(bad.upper_mean.has_value());

    // Match the Longest is bounded as error-free Max-Weight even when the file carries noise.
    const ModelSpec noisy = uniform_model(graphs::complete(3), {1, 1, 1}, {0, 0, 0}, 2.0, NoiseSpec::uniform(-1, 1));
    EXPECT_EQ(*compute_bounds(noisy, PolicyKind::MatchTheLongest).upper_mean, 1.5);
    EXPECT_EQ(*compute_bounds(noisy, PolicyKind::MaxWeight).upper_mean, 3.0 * (0.5 + 4.0 * 3.0));

    EXPECT_THROW(compute_bounds(k3(), PolicyKind::MaxWeight, 5.0), InputError);
}
