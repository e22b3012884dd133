#include <gtest/gtest.h>

#include <cmath>

#include "matchnet/engine.hpp"
#include "matchnet/io.hpp"
#include "matchnet/stats.hpp"

using namespace matchnet;

namespace {

ModelSpec k3() { return uniform_model(graphs::complete(3), {1, 1, 1}, {0, 0, 0}); }

/// Stationary law of ||x||_inf for K3 under Match the Longest with unit rates: from the empty
/// state the level jumps up at rate 3, elsewhere up at rate 1 and down at rate 2, so
/// pi(0) = 1/4 and pi(n) = (3/8) 2^{-(n-1)} for n >= 1.
double k3_level_law(std::size_t n) { return n == 0 ? 0.25 : 0.375 * std::pow(0.5, static_cast<double>(n - 1)); }

ModelSpec random_spec(Rng& rng)
{
    while (true) {
        Graph g = erdos_renyi(3 + rng.below(5), 0.45, rng);
        if (!is_connected(g)) {
            continue;
        }
        std::vector<double> lambda(g.size());
        std::vector<double> gamma(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) {
            lambda[i] = 0.1 + rng.uniform(0, 3);
            gamma[i] = rng.bernoulli(0.3) ? rng.uniform(0.1, 2) : 0.0;
        }
        ModelSpec spec = uniform_model(std::move(g), lambda, gamma, 0.0, NoiseSpec::uniform(-1, 1));
        for (auto& [pair, w] : spec.rewards) {
            w = rng.uniform(0, 3);
        }
        return spec;
    }
}

}  // namespace

TEST(Engine, StepFromEmptyStores)
{
    Rng rng(1);
    const ModelSpec spec = uniform_model(graphs::complete(3), {1, 2, 3}, {0, 0, 0});
    std::vector<double> counts(3, 0.0);
    constexpr int m = 60'000;
    for (int k = 0; k < m; ++k) {
        const StepResult r = step(spec, PolicyKind::MatchTheLongest, QueueState(3), rng);
        ASSERT_EQ(r.event.kind, EventKind::ArrivalStored);
        QueueState expected(3);
        expected[r.event.arriving] = 1;
        EXPECT_EQ(r.next, expected);
        EXPECT_GT(r.holding_time, 0.0);
        counts[r.event.arriving] += 1.0;
    }
    for (Vertex j = 0; j < 3; ++j) {
        EXPECT_NEAR(counts[j] / m, spec.lambda[j] / 6.0, 0.01);
    }
}

TEST(Engine, StepMatchesUniqueCandidate)
{
    Rng rng(2);
    int seen = 0;
    while (seen < 50) {
        const StepResult r = step(k3(), PolicyKind::MatchTheLongest, QueueState{{5, 0, 0}}, rng);
        if (r.event.arriving == 1) {
            ++seen;
            EXPECT_EQ(r.event.kind, EventKind::ArrivalMatched);
            EXPECT_EQ(r.event.matched, 0U);
            EXPECT_EQ(r.next, (QueueState{{4, 0, 0}}));
        }
    }
}

TEST(Engine, RenegingProbabilityAndHoldingTime)
{
    Rng rng(3);
    const ModelSpec spec = uniform_model(graphs::path(2), {1, 1}, {1, 1});
    constexpr int m = 100'000;
    int reneged = 0;
    double holding = 0.0;
    for (int k = 0; k < m; ++k) {
        const StepResult r = step(spec, PolicyKind::MatchTheLongest, QueueState{{3, 0}}, rng);
        if (r.event.kind == EventKind::Reneged) {
            ++reneged;
            EXPECT_EQ(r.next, (QueueState{{2, 0}}));
        }
        holding += r.holding_time;
    }
    EXPECT_NEAR(static_cast<double>(reneged) / m, 3.0 / 5.0, 0.005);
    EXPECT_NEAR(holding / m, 1.0 / 5.0, 0.003);
}

TEST(Engine, StepRejectsInadmissibleState)
{
    Rng rng(4);
    EXPECT_THROW(step(k3(), PolicyKind::MaxWeight, QueueState{{1, 1, 0}}, rng), ContractViolation);
}

TEST(Engine, RunMatchesRepeatedSteps)
{
    Rng spec_rng(5);
    for (int trial = 0; trial < 5; ++trial) {
        SimConfig cfg;
        cfg.spec = random_spec(spec_rng);
        cfg.policy = PolicyKind::MaxWeight;
        cfg.horizon = 50.0;
        cfg.seed = 1000 + static_cast<std::uint64_t>(trial);
        cfg.record_states = true;
        const TrajectoryRecord rec = run(cfg);

        Rng rng(cfg.seed);
        QueueState x(cfg.spec.size());
        double t = 0.0;
        for (std::size_t k = 1; k < rec.state_path.size(); ++k) {
            const StepResult r = step(cfg.spec, cfg.policy, x, rng);
            t += r.holding_time;
            x = r.next;
            EXPECT_EQ(x, rec.state_path[k]);
            EXPECT_EQ(t, rec.event_times[k]);
        }
    }
}

TEST(Engine, InvariantsOnRandomSpecs)
{
    Rng spec_rng(6);
    std::uint64_t events = 0;
    for (int trial = 0; events < 400'000; ++trial) {
        SimConfig cfg;
        cfg.spec = random_spec(spec_rng);
        cfg.policy = static_cast<PolicyKind>(trial % 3);
        cfg.horizon = 2000.0;
        cfg.seed = static_cast<std::uint64_t>(trial);
        cfg.record_states = true;
        cfg.max_events = 200'000;
        const TrajectoryRecord rec = run(cfg);
        events += rec.event_count;
        for (const auto& x : rec.state_path) {
            ASSERT_TRUE(is_admissible(cfg.spec, x));
        }
        EXPECT_EQ(static_cast<std::int64_t>(rec.arrivals),
                  rec.departures() + static_cast<std::int64_t>(rec.reneged) + rec.final_state.l1_norm() -
                      rec.initial_state.l1_norm());
        for (std::size_t k = 1; k < rec.event_times.size(); ++k) {
            EXPECT_LT(rec.event_times[k - 1], rec.event_times[k]);
            EXPECT_LE(rec.cumulative_reward[k - 1], rec.cumulative_reward[k]);
            EXPECT_LE(rec.cumulative_departures[k - 1], rec.cumulative_departures[k]);
            EXPECT_LE(rec.cumulative_reneged[k - 1], rec.cumulative_reneged[k]);
        }
        EXPECT_EQ(rec.final_state.max_norm(), rec.max_queue_path.back());
        EXPECT_LE(rec.event_times.back(), cfg.horizon);
    }
}

TEST(Engine, InitialStateAndConservation)
{
    SimConfig cfg;
    cfg.spec = uniform_model(graphs::paw(), {2, 1, 1, 1}, {0, 1, 0, 0});
    cfg.policy = PolicyKind::MatchTheLongest;
    cfg.initial_state = QueueState{{0, 4, 0, 2}};
    cfg.horizon = 300.0;
    cfg.seed = 8;
    const TrajectoryRecord rec = run(cfg);
    EXPECT_EQ(rec.initial_state, *cfg.initial_state);
    EXPECT_EQ(rec.max_queue_path.front(), 4);
    EXPECT_EQ(static_cast<std::int64_t>(rec.arrivals),
              rec.departures() + static_cast<std::int64_t>(rec.reneged) + rec.final_state.l1_norm() - 6);

    cfg.initial_state = QueueState{{1, 1, 0, 0}};
    EXPECT_THROW(run(cfg), InputError);
}

TEST(Engine, ShortHorizonUsuallyNoEvents)
{
    SimConfig cfg;
    cfg.spec = uniform_model(graphs::complete(3), {1e-3, 1e-3, 1e-3}, {0, 0, 0});
    cfg.horizon = 0.001;
    cfg.initial_state = QueueState{{2, 0, 0}};
    cfg.seed = 9;
    const TrajectoryRecord rec = run(cfg);
    EXPECT_EQ(rec.event_count, 0U);
    EXPECT_EQ(rec.final_state, *cfg.initial_state);
    EXPECT_DOUBLE_EQ(rec.max_queue_area, 2.0 * 0.001);
}

TEST(Engine, MaxEventsTruncates)
{
    SimConfig cfg;
    cfg.spec = k3();
    cfg.horizon = 1e6;
    cfg.max_events = 100;
    const TrajectoryRecord rec = run(cfg);
    EXPECT_TRUE(rec.truncated);
    EXPECT_EQ(rec.event_count, 100U);
}

TEST(Engine, RejectsBadHorizon)
{
    SimConfig cfg;
    cfg.spec = k3();
    cfg.horizon = 0.0;
    EXPECT_THROW(run(cfg), InputError);
}

TEST(Engine, Determinism)
{
    SimConfig cfg;
    cfg.spec = uniform_model(graphs::complete(3), {1, 1, 1}, {0, 0, 0}, 1.0, NoiseSpec::uniform(-1, 1));
    cfg.horizon = 100.0;
    cfg.seed = 7;
    EXPECT_EQ(trajectory_csv(run(cfg)), trajectory_csv(run(cfg)));
    cfg.seed = 8;
    const std::string other = trajectory_csv(run(cfg));
    cfg.seed = 7;
    EXPECT_NE(trajectory_csv(run(cfg)), other);
}

TEST(Engine, TimeAverageMatchesStationaryMean)
{
    SimConfig cfg;
    cfg.spec = k3();
    cfg.policy = PolicyKind::MatchTheLongest;
    cfg.horizon = 1e5;
    cfg.seed = 12345;
    const TrajectoryRecord rec = run(cfg);
    const BatchMeans bm = batch_means(rec.event_times, rec.max_queue_path, 0.0, cfg.horizon, 50);
    EXPECT_NEAR(bm.mean, rec.max_queue_area / cfg.horizon, 1e-9);
    EXPECT_NEAR(bm.mean, 1.5, 3.0 * bm.std_error);
    EXPECT_LT(bm.std_error, 0.03);
}

TEST(Engine, UnstableGrowth)
{
    // P2 with lambda = (2, 1): x(0) - x(1) drifts at rate lambda(0) - lambda(1) = 1.
    SimConfig cfg;
    cfg.spec = uniform_model(graphs::path(2), {2, 1}, {0, 0});
    cfg.policy = PolicyKind::MatchTheLongest;
    cfg.horizon = 1e4;
    cfg.seed = 99;
    const TrajectoryRecord rec = run(cfg);
    std::vector<double> ts;
    std::vector<double> ys;
    for (int k = 0; k <= 100; ++k) {
        const double t = cfg.horizon / 2 + cfg.horizon / 200 * k;
        ts.push_back(t);
        ys.push_back(static_cast<double>(value_at(rec.event_times, rec.total_items_path, t)));
    }
    EXPECT_GE(least_squares(ts, ys).slope, 0.5);
}

TEST(Engine, PathHelpers)
{
    const std::vector<double> times{0.0, 1.0, 3.0};
    const std::vector<std::int64_t> path{2, 5, 1};
    EXPECT_EQ(value_at(times, path, 0.5), 2);
    EXPECT_EQ(value_at(times, path, 1.0), 5);
    EXPECT_EQ(value_at(times, path, 10.0), 1);
    EXPECT_DOUBLE_EQ(time_average(times, path, 0.0, 4.0), (2.0 + 10.0 + 1.0) / 4.0);
    EXPECT_DOUBLE_EQ(time_average(times, path, 0.5, 1.5), 3.5);
    EXPECT_THROW(time_average(times, path, 1.0, 1.0), InputError);

    const FiveNumber f = five_number({5, 1, 4, 2, 3});
    EXPECT_EQ(f.min, 1);
    EXPECT_EQ(f.q1, 2);
    EXPECT_EQ(f.median, 3);
    EXPECT_EQ(f.q3, 4);
    EXPECT_EQ(f.max, 5);
    EXPECT_DOUBLE_EQ(quantile_sorted({0, 10}, 0.25), 2.5);
}

TEST(Ensemble, SingleRunSummary)
{
    SimConfig cfg;
    cfg.spec = k3();
    cfg.horizon = 50.0;
    cfg.seed = 3;
    const EnsembleResult res = run_ensemble(cfg, 1, 1);
    SimConfig single = cfg;
    single.seed = hash64(cfg.seed, 0);
    const TrajectoryRecord rec = run(single);
    EXPECT_EQ(res.summary.terminal_max_queue, (std::vector<std::int64_t>{rec.final_state.max_norm()}));
    EXPECT_EQ(res.summary.terminal_departures, (std::vector<std::int64_t>{rec.departures()}));
    EXPECT_EQ(res.summary.max_queue_quantiles.median, static_cast<double>(rec.final_state.max_norm()));
    EXPECT_EQ(res.summary.var_max_queue, 0.0);
    EXPECT_THROW(run_ensemble(cfg, 0, 1), InputError);
}

TEST(Ensemble, ParallelismDoesNotChangeResults)
{
    SimConfig cfg;
    cfg.spec = uniform_model(graphs::paw(), {2, 1, 1, 1}, {0, 0, 0, 0}, 0.0, NoiseSpec::uniform(-1, 1));
    cfg.horizon = 100.0;
    cfg.seed = 42;
    const EnsembleResult a = run_ensemble(cfg, 40, 1);
    const EnsembleResult b = run_ensemble(cfg, 40, 8);
    EXPECT_EQ(ensemble_summary_to_json(a.summary).dump(), ensemble_summary_to_json(b.summary).dump());
    for (std::size_t i = 0; i < 40; ++i) {
        EXPECT_EQ(a.runs[i].event_times, b.runs[i].event_times);
    }
}

TEST(Ensemble, TerminalLawMatchesStationaryLaw)
{
    SimConfig cfg;
    cfg.spec = k3();
    cfg.policy = PolicyKind::MatchTheLongest;
    cfg.horizon = 100.0;
    cfg.seed = 2718;
    cfg.record_paths = false;
    constexpr std::size_t runs = 500;
    const EnsembleResult res = run_ensemble(cfg, runs, 1);
    // Pearson test with cells 0..4 and a pooled tail (expected counts >= 5).
    const auto& h = res.summary.max_queue_histogram;
    double stat = 0.0;
    double tail_expected = runs;
    double tail_observed = runs;
    for (std::size_t n = 0; n <= 4; ++n) {
        const double e = runs * k3_level_law(n);
        const double o = n < h.size() ? static_cast<double>(h[n]) : 0.0;
        stat += (o - e) * (o - e) / e;
        tail_expected -= e;
        tail_observed -= o;
    }
    stat += (tail_observed - tail_expected) * (tail_observed - tail_expected) / tail_expected;
    EXPECT_LT(stat, 20.515);  // chi-square, 5 degrees of freedom, upper 0.001 quantile
}

TEST(Stats, BatchMeansAndLeastSquares)
{
    const std::vector<double> times{0.0, 1.0, 2.0, 3.0};
    const std::vector<int> path{1, 3, 1, 3};
    const BatchMeans bm = batch_means(times, path, 0.0, 4.0, 2);
    EXPECT_DOUBLE_EQ(bm.mean, 2.0);
    EXPECT_DOUBLE_EQ(bm.std_error, 0.0);
    EXPECT_THROW(batch_means(times, path, 0.0, 4.0, 1), InputError);

    const std::vector<double> x{0, 1, 2, 3};
    const std::vector<double> y{1, 3, 5, 7};
    const LinearFit fit = least_squares(x, y);
    EXPECT_DOUBLE_EQ(fit.slope, 2.0);
    EXPECT_DOUBLE_EQ(fit.intercept, 1.0);
    EXPECT_DOUBLE_EQ(fit.r_squared, 1.0);
}
