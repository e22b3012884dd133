#ifndef MATCHNET_EXPERIMENT_HPP
#define MATCHNET_EXPERIMENT_HPP

#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "matchnet/engine.hpp"
#include "matchnet/errors.hpp"
#include "matchnet/graph.hpp"
#include "matchnet/model.hpp"
#include "matchnet/policy.hpp"
#include "matchnet/rng.hpp"

namespace matchnet {

enum class Preset { MwVsPriority, Boxplot, HistogramMl, HistogramNoisy };

inline std::string_view to_string(Preset p)
{
    switch (p) {
    case Preset::MwVsPriority:
        return "mw_vs_priority";
    case Preset::Boxplot:
        return "boxplot";
    case Preset::HistogramMl:
        return "histogram_ml";
    case Preset::HistogramNoisy:
        return "histogram_noisy";
    }
    return "?";
}

inline Preset parse_preset(std::string_view name)
{
    for (Preset p : {Preset::MwVsPriority, Preset::Boxplot, Preset::HistogramMl, Preset::HistogramNoisy}) {
        if (to_string(p) == name) {
            return p;
        }
    }
    throw InputError("unknown preset '" + std::string(name) +
                     "' (expected mw_vs_priority, boxplot, histogram_ml or histogram_noisy)");
}

enum class Scale { Desk, Paper };

/// Sampling and run parameters of one experiment.
struct ExperimentParams {
    Preset preset = Preset::MwVsPriority;
    std::size_t n_vertices = 12;
    double edge_probability = 0.25;
    std::size_t runs = 30;
    double horizon = 200.0;
    double reneging_probability = 0.5;  ///< P(gamma(i) > 0), comparison presets only
    double reneging_rate = 1.0;         ///< the value gamma(i) takes when positive
    double max_lambda = 10.0;           ///< lambda(i) ~ Unif[0, max_lambda]
    double max_reward = 10.0;           ///< symmetric rewards ~ Unif[0, max_reward]
    std::size_t max_instance_tries = 1'000'000;
};

/// Defaults per preset. Paper scale: |V| = 30, p = 0.1, T = 100, 100 paired runs or 500
/// ensemble runs. Desk scale keeps the same sampling laws on smaller instances.
inline ExperimentParams preset_defaults(Preset preset, Scale scale)
{
    ExperimentParams p;
    p.preset = preset;
    const bool paired = preset == Preset::MwVsPriority || preset == Preset::Boxplot;
    if (scale == Scale::Paper) {
        p.n_vertices = 30;
        p.edge_probability = 0.1;
        p.horizon = 100.0;
        p.runs = paired ? 100 : 500;
    } else if (paired) {
        p.n_vertices = 12;
        p.edge_probability = 0.25;
        p.horizon = 200.0;
        p.runs = 30;
    } else {
        p.n_vertices = 10;
        p.edge_probability = 0.3;
        p.horizon = 100.0;
        p.runs = 200;
    }
    return p;
}

/// Which ingredients an instance carries beyond (G, lambda).
struct InstanceKind {
    bool reneging = false;
    bool rewards = false;
    bool uniform_noise = false;
};

inline InstanceKind instance_kind(Preset preset)
{
    switch (preset) {
    case Preset::MwVsPriority:
    case Preset::Boxplot:
        return InstanceKind{true, true, false};
    case Preset::HistogramMl:
        return InstanceKind{false, false, false};
    case Preset::HistogramNoisy:
        return InstanceKind{false, true, true};
    }
    return {};
}

/// Draws (G, lambda, gamma, w, noise): G ~ G(n, p) redrawn until connected; lambda(i) i.i.d.
/// Unif[0, max_lambda] (clamped at 1e-6); gamma(i) = reneging_rate with probability
/// reneging_probability; symmetric rewards i.i.d. Unif[0, max_reward]; noise Unif[-1, 1] or
/// none. The whole tuple is redrawn until the stability condition holds.
inline ModelSpec sample_instance(const ExperimentParams& params, InstanceKind kind, Rng& rng)
{
    for (std::size_t attempt = 0; attempt < params.max_instance_tries; ++attempt) {
        Graph g = erdos_renyi(params.n_vertices, params.edge_probability, rng);
        if (!is_connected(g)) {
            continue;
        }
        std::vector<double> lambda(g.size());
        for (auto& l : lambda) {
            l = std::max(1e-6, rng.uniform(0.0, params.max_lambda));
        }
        std::vector<double> gamma(g.size(), 0.0);
        if (kind.reneging) {
            for (auto& gm : gamma) {
                gm = rng.bernoulli(params.reneging_probability) ? params.reneging_rate : 0.0;
            }
        }
        ModelSpec spec = uniform_model(std::move(g), std::move(lambda), std::move(gamma), 0.0,
                                       kind.uniform_noise ? NoiseSpec::uniform(-1.0, 1.0) : NoiseSpec::none());
        if (kind.rewards) {
            for (const auto& [a, b] : spec.graph.edges()) {
                const double w = rng.uniform(0.0, params.max_reward);
                spec.rewards[{a, b}] = w;
                spec.rewards[{b, a}] = w;
            }
        }
        const auto d = max_deficit(spec.graph, spec.lambda, spec.patient(), 0.0);
        if (d.vacuous || d.value < 0.0) {
            return spec;
        }
    }
    throw SizeError("no stable instance found within max_instance_tries draws");
}

/// One sampled instance simulated under Max-Weight and under the matching priority policy,
/// with common random numbers.
struct PairedRun {
    ModelSpec spec;
    TrajectoryRecord max_weight;
    TrajectoryRecord priority;
};

/// Pair r draws its instance from stream hash64(seed, 2r) and simulates both policies with
/// seed hash64(seed, 2r + 1).
inline std::vector<PairedRun> run_paired(const ExperimentParams& params, std::uint64_t seed, std::size_t jobs = 1,
                                         bool record_paths = true)
{
    std::vector<PairedRun> out(params.runs);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    const InstanceKind kind = instance_kind(params.preset);
    auto worker = [&] {
        for (std::size_t r = next.fetch_add(1); r < params.runs; r = next.fetch_add(1)) {
            try {
                Rng rng(hash64(seed, 2 * r));
                PairedRun pr;
                pr.spec = sample_instance(params, kind, rng);
                SimConfig cfg;
                cfg.spec = pr.spec;
                cfg.horizon = params.horizon;
                cfg.seed = hash64(seed, 2 * r + 1);
                cfg.record_paths = record_paths;
                cfg.policy = PolicyKind::MaxWeight;
                pr.max_weight = run(cfg);
                cfg.policy = PolicyKind::Priority;
                pr.priority = run(cfg);
                out[r] = std::move(pr);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) {
                    failure = std::current_exception();
                }
            }
        }
    };
    const std::size_t threads = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(1, params.runs));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t) {
            pool.emplace_back(worker);
        }
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
    return out;
}

/// One instance drawn once (stream hash64(seed, 0)), then an ensemble of runs under the
/// preset's policy seeded from hash64(seed, 1).
struct EnsembleExperiment {
    ModelSpec spec;
    PolicyKind policy = PolicyKind::MatchTheLongest;
    EnsembleResult result;
};

inline EnsembleExperiment run_histogram_experiment(const ExperimentParams& params, std::uint64_t seed,
                                                   std::size_t jobs = 1)
{
    if (params.preset != Preset::HistogramMl && params.preset != Preset::HistogramNoisy) {
        throw InputError("histogram experiment requires a histogram preset");
    }
    EnsembleExperiment ex;
    Rng rng(hash64(seed, 0));
    ex.spec = sample_instance(params, instance_kind(params.preset), rng);
    ex.policy = params.preset == Preset::HistogramMl ? PolicyKind::MatchTheLongest : PolicyKind::MaxWeight;
    SimConfig cfg;
    cfg.spec = ex.spec;
    cfg.policy = ex.policy;
    cfg.horizon = params.horizon;
    cfg.seed = hash64(seed, 1);
    cfg.record_paths = false;
    ex.result = run_ensemble(cfg, params.runs, jobs);
    return ex;
}

}  // namespace matchnet

#endif  // MATCHNET_EXPERIMENT_HPP
