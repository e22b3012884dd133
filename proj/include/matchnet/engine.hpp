#ifndef MATCHNET_ENGINE_HPP
#define MATCHNET_ENGINE_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "matchnet/errors.hpp"
#include "matchnet/model.hpp"
#include "matchnet/policy.hpp"
#include "matchnet/rng.hpp"

namespace matchnet {

struct SimConfig {
    ModelSpec spec;
    PolicyKind policy = PolicyKind::MaxWeight;
    double horizon = 100.0;
    std::optional<QueueState> initial_state;  ///< default: empty buffer
    std::uint64_t seed = 0;
    std::optional<double> sample_grid;        ///< output downsampling step, never used by the dynamics
    std::uint64_t max_events = 1'000'000'000;
    bool record_paths = true;                 ///< keep per-event observable paths
    bool record_states = false;               ///< also keep the full state after every event
};

enum class EventKind { ArrivalMatched, ArrivalStored, Reneged };

struct Event {
    EventKind kind = EventKind::ArrivalStored;
    Vertex arriving = 0;  ///< j for arrivals; the reneging class for Reneged
    Vertex matched = 0;   ///< i for ArrivalMatched, unused otherwise
};

struct StepResult {
    double holding_time = 0.0;
    Event event;
    QueueState next;
};

/// Piecewise-constant observables of one trajectory, sampled at t = 0 and after each event.
/// Index k of every path holds the value on [event_times[k], event_times[k+1]).
struct TrajectoryRecord {
    std::vector<double> event_times;
    std::vector<std::int64_t> max_queue_path;
    std::vector<std::int64_t> total_items_path;
    std::vector<double> cumulative_reward;
    std::vector<std::int64_t> cumulative_departures;  ///< items leaving through matches, 2 per match
    std::vector<std::int64_t> cumulative_reneged;
    std::vector<QueueState> state_path;               ///< only with SimConfig::record_states

    QueueState initial_state;
    QueueState final_state;
    double horizon = 0.0;
    std::uint64_t event_count = 0;
    std::uint64_t arrivals = 0;
    std::uint64_t matches = 0;
    std::uint64_t reneged = 0;
    double total_reward = 0.0;
    bool truncated = false;  ///< max_events hit before the horizon

    /// Time integrals over [0, horizon], kept even when paths are not recorded.
    double max_queue_area = 0.0;
    double total_items_area = 0.0;

    std::int64_t departures() const noexcept { return 2 * static_cast<std::int64_t>(matches); }
};

namespace detail {

/// Precomputed rate tables for one model. The event sampling below is the single source of
/// truth for the dynamics; both step() and run() go through it.
class Dynamics {
public:
    Dynamics(const ModelSpec& spec, PolicyKind policy) : spec_(&spec), policy_(policy)
    {
        double acc = 0.0;
        cumulative_lambda_.reserve(spec.size());
        for (double l : spec.lambda) {
            acc += l;
            cumulative_lambda_.push_back(acc);
        }
        lambda_total_ = acc;
        reneging_ = spec.reneging();
    }

    double total_rate(const QueueState& x) const
    {
        double r = lambda_total_;
        for (Vertex i : reneging_) {
            r += spec_->gamma[i] * static_cast<double>(x[i]);
        }
        return r;
    }

    /// RNG use per event: holding time, event selector, then the policy's own draws.
    std::pair<double, Event> next_event(QueueState& x, Rng& rng) const
    {
        const double rate = total_rate(x);
        const double holding = rng.exponential(rate);
        double u = rng.uniform() * rate;
        Event ev;
        if (u < lambda_total_ || reneging_.empty()) {
            const auto it = std::upper_bound(cumulative_lambda_.begin(), cumulative_lambda_.end(), u);
            const Vertex j = std::min<Vertex>(static_cast<Vertex>(it - cumulative_lambda_.begin()), spec_->size() - 1);
            ev.arriving = j;
            if (auto i = choose_match_unchecked(policy_, *spec_, x, j, rng)) {
                ev.kind = EventKind::ArrivalMatched;
                ev.matched = *i;
                x[*i] -= 1;
            } else {
                ev.kind = EventKind::ArrivalStored;
                x[j] += 1;
            }
            return {holding, ev};
        }
        u -= lambda_total_;
        Vertex chosen = reneging_.back();
        for (Vertex i : reneging_) {
            const double r = spec_->gamma[i] * static_cast<double>(x[i]);
            if (u < r) {
                chosen = i;
                break;
            }
            u -= r;
        }
        // Rounding can leave u just past the last positive rate; fall back to the last
        // nonempty reneging class.
        if (x[chosen] == 0) {
            for (auto it = reneging_.rbegin(); it != reneging_.rend(); ++it) {
                if (x[*it] > 0) {
                    chosen = *it;
                    break;
                }
            }
        }
        ev.kind = EventKind::Reneged;
        ev.arriving = chosen;
        x[chosen] -= 1;
        return {holding, ev};
    }

private:
    const ModelSpec* spec_;
    PolicyKind policy_;
    std::vector<double> cumulative_lambda_;
    double lambda_total_ = 0.0;
    VertexSet reneging_;
};

}  // namespace detail

/// One jump of the chain from x: Exponential(Lambda(x)) holding time with
/// Lambda(x) = lambda(V) + sum_{i in R} gamma(i) x(i), then an arrival (class ~ mu_lambda,
/// matched or stored by the policy) or the departure of one reneging item.
inline StepResult step(const ModelSpec& spec, PolicyKind policy, const QueueState& x, Rng& rng)
{
    if (!is_admissible(spec, x)) {
        throw ContractViolation("step called on an inadmissible state");
    }
    detail::Dynamics dyn(spec, policy);
    StepResult out;
    out.next = x;
    std::tie(out.holding_time, out.event) = dyn.next_event(out.next, rng);
    return out;
}

/// Simulates on [0, horizon]. Bit-identical output for identical configurations.
inline TrajectoryRecord run(const SimConfig& cfg)
{
    require_valid(cfg.spec);
    if (!(cfg.horizon > 0.0) || !std::isfinite(cfg.horizon)) {
        throw InputError("horizon must be positive and finite");
    }
    QueueState x = cfg.initial_state.value_or(QueueState(cfg.spec.size()));
    if (!is_admissible(cfg.spec, x)) {
        throw InputError("initial state is not admissible");
    }

    const detail::Dynamics dyn(cfg.spec, cfg.policy);
    Rng rng(cfg.seed);

    TrajectoryRecord rec;
    rec.initial_state = x;
    rec.horizon = cfg.horizon;

    std::int64_t max_q = x.max_norm();
    std::int64_t total = x.l1_norm();
    auto push = [&](double t) {
        if (cfg.record_paths) {
            rec.event_times.push_back(t);
            rec.max_queue_path.push_back(max_q);
            rec.total_items_path.push_back(total);
            rec.cumulative_reward.push_back(rec.total_reward);
            rec.cumulative_departures.push_back(rec.departures());
            rec.cumulative_reneged.push_back(static_cast<std::int64_t>(rec.reneged));
        }
        if (cfg.record_states) {
            rec.state_path.push_back(x);
        }
    };
    push(0.0);

    double t = 0.0;
    while (true) {
        if (rec.event_count >= cfg.max_events) {
            rec.truncated = true;
            break;
        }
        const auto [holding, ev] = dyn.next_event(x, rng);
        const double next_t = t + holding;
        if (next_t > cfg.horizon) {
            // The sampled event lies beyond the horizon: undo it.
            switch (ev.kind) {
            case EventKind::ArrivalMatched:
                x[ev.matched] += 1;
                break;
            case EventKind::ArrivalStored:
                x[ev.arriving] -= 1;
                break;
            case EventKind::Reneged:
                x[ev.arriving] += 1;
                break;
            }
            break;
        }
        rec.max_queue_area += static_cast<double>(max_q) * holding;
        rec.total_items_area += static_cast<double>(total) * holding;
        t = next_t;
        ++rec.event_count;
        switch (ev.kind) {
        case EventKind::ArrivalMatched:
            ++rec.arrivals;
            ++rec.matches;
            rec.total_reward += cfg.spec.reward(ev.arriving, ev.matched);
            --total;
            break;
        case EventKind::ArrivalStored:
            ++rec.arrivals;
            ++total;
            break;
        case EventKind::Reneged:
            ++rec.reneged;
            --total;
            break;
        }
        max_q = x.max_norm();
        push(t);
    }
    const double tail = (rec.truncated ? t : cfg.horizon) - t;
    rec.max_queue_area += static_cast<double>(max_q) * tail;
    rec.total_items_area += static_cast<double>(total) * tail;
    rec.final_state = std::move(x);
    return rec;
}

/// Value at time t of a piecewise-constant path recorded at `times`.
template <class T>
T value_at(const std::vector<double>& times, const std::vector<T>& path, double t)
{
    if (times.empty()) {
        throw InputError("empty path");
    }
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    const auto k = it == times.begin() ? 0 : static_cast<std::size_t>(it - times.begin()) - 1;
    return path[k];
}

/// (1/(b-a)) * integral over [a, b] of a piecewise-constant path.
template <class T>
double time_average(const std::vector<double>& times, const std::vector<T>& path, double a, double b)
{
    if (!(b > a)) {
        throw InputError("time_average needs b > a");
    }
    double area = 0.0;
    auto it = std::upper_bound(times.begin(), times.end(), a);
    std::size_t k = it == times.begin() ? 0 : static_cast<std::size_t>(it - times.begin()) - 1;
    double left = a;
    while (left < b) {
        const double right = (k + 1 < times.size()) ? std::min(times[k + 1], b) : b;
        area += static_cast<double>(path[k]) * (right - left);
        left = right;
        ++k;
    }
    return area / (b - a);
}

/// Five-number summary for box plots (linear interpolation between order statistics).
struct FiveNumber {
    double min = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double max = 0.0;
};

inline double quantile_sorted(const std::vector<double>& sorted, double q)
{
    if (sorted.empty()) {
        throw InputError("quantile of empty sample");
    }
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline FiveNumber five_number(std::vector<double> values)
{
    std::sort(values.begin(), values.end());
    return FiveNumber{values.front(), quantile_sorted(values, 0.25), quantile_sorted(values, 0.5),
                      quantile_sorted(values, 0.75), values.back()};
}

struct EnsembleSummary {
    std::size_t runs = 0;
    double horizon = 0.0;
    std::vector<std::int64_t> terminal_max_queue;    ///< per run, in run order
    std::vector<std::int64_t> terminal_total_items;
    std::vector<double> terminal_cum_reward;
    std::vector<std::int64_t> terminal_departures;
    std::vector<std::int64_t> terminal_reneged;
    FiveNumber max_queue_quantiles;
    double mean_max_queue = 0.0;
    double var_max_queue = 0.0;                      ///< unbiased sample variance (0 for one run)
    /// histogram[k] = number of runs with terminal ||X_T||_inf == k, k = 0..max.
    std::vector<std::size_t> max_queue_histogram;
    std::size_t truncated_runs = 0;
};

struct EnsembleResult {
    std::vector<TrajectoryRecord> runs;
    EnsembleSummary summary;
};

inline EnsembleSummary summarize(const std::vector<TrajectoryRecord>& runs)
{
    EnsembleSummary s;
    s.runs = runs.size();
    if (runs.empty()) {
        return s;
    }
    s.horizon = runs.front().horizon;
    std::vector<double> maxq;
    for (const auto& r : runs) {
        s.terminal_max_queue.push_back(r.final_state.max_norm());
        s.terminal_total_items.push_back(r.final_state.l1_norm());
        s.terminal_cum_reward.push_back(r.total_reward);
        s.terminal_departures.push_back(r.departures());
        s.terminal_reneged.push_back(static_cast<std::int64_t>(r.reneged));
        s.truncated_runs += r.truncated ? 1 : 0;
        maxq.push_back(static_cast<double>(r.final_state.max_norm()));
    }
    s.max_queue_quantiles = five_number(maxq);
    std::sort(maxq.begin(), maxq.end());
    double sum = 0.0;
    for (double v : maxq) {
        sum += v;
    }
    s.mean_max_queue = sum / static_cast<double>(maxq.size());
    if (maxq.size() > 1) {
        double ss = 0.0;
        for (double v : maxq) {
            ss += (v - s.mean_max_queue) * (v - s.mean_max_queue);
        }
        s.var_max_queue = ss / static_cast<double>(maxq.size() - 1);
    }
    s.max_queue_histogram.assign(static_cast<std::size_t>(maxq.back()) + 1, 0);
    for (double v : maxq) {
        ++s.max_queue_histogram[static_cast<std::size_t>(v)];
    }
    return s;
}

/// Runs n_runs independent trajectories, run i seeded with hash64(cfg.seed, i), on up to
/// `parallelism` threads. Results are identical for every parallelism level.
inline EnsembleResult run_ensemble(const SimConfig& cfg, std::size_t n_runs, std::size_t parallelism = 1)
{
    if (n_runs == 0) {
        throw InputError("ensemble needs at least one run");
    }
    require_valid(cfg.spec);
    EnsembleResult result;
    result.runs.resize(n_runs);

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t i = next.fetch_add(1); i < n_runs; i = next.fetch_add(1)) {
            try {
                SimConfig c = cfg;
                c.seed = hash64(cfg.seed, i);
                result.runs[i] = run(c);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) {
                    failure = std::current_exception();
                }
            }
        }
    };
    const std::size_t threads = std::clamp<std::size_t>(parallelism, 1, n_runs);
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (std::size_t t = 0; t < threads; ++t) {
            pool.emplace_back(worker);
        }
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
    result.summary = summarize(result.runs);
    return result;
}

}  // namespace matchnet

#endif  // MATCHNET_ENGINE_HPP
