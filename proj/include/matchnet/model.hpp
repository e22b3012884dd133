#ifndef MATCHNET_MODEL_HPP
#define MATCHNET_MODEL_HPP

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "matchnet/errors.hpp"
#include "matchnet/graph.hpp"
#include "matchnet/noise.hpp"
#include "matchnet/rng.hpp"

namespace matchnet {

/// Ordered pair (j, i): an arriving j-item considering a stored i-item.
struct OrderedPair {
    Vertex arriving = 0;
    Vertex stored = 0;
    friend auto operator<=>(const OrderedPair&, const OrderedPair&) = default;
};

/// Per-class buffer contents x(i). Admissibility is a property checked against a
/// graph, not enforced by the type.
struct QueueState {
    std::vector<std::int64_t> counts;

    QueueState() = default;
    explicit QueueState(std::size_t n) : counts(n, 0) {}
    explicit QueueState(std::vector<std::int64_t> c) : counts(std::move(c)) {}

    std::size_t size() const noexcept { return counts.size(); }
    std::int64_t operator[](Vertex i) const { return counts[i]; }
    std::int64_t& operator[](Vertex i) { return counts[i]; }

    std::int64_t max_norm() const noexcept
    {
        std::int64_t m = 0;
        for (auto c : counts) {
            m = std::max(m, c);
        }
        return m;
    }

    std::int64_t l1_norm() const noexcept { return std::accumulate(counts.begin(), counts.end(), std::int64_t{0}); }

    double l2_norm() const noexcept
    {
        double s = 0.0;
        for (auto c : counts) {
            s += static_cast<double>(c) * static_cast<double>(c);
        }
        return std::sqrt(s);
    }

    VertexSet support() const
    {
        VertexSet s;
        for (Vertex i = 0; i < counts.size(); ++i) {
            if (counts[i] > 0) {
                s.push_back(i);
            }
        }
        return s;
    }

    /// x + k * delta_i
    QueueState shifted(Vertex i, std::int64_t k) const
    {
        QueueState y = *this;
        y.counts[i] += k;
        return y;
    }

    friend auto operator<=>(const QueueState&, const QueueState&) = default;
};

/// The tuple (G, MW_{w,F}, lambda, gamma).
///
/// `rewards` and `noise` are keyed by ordered pairs and must cover both directions of
/// every edge, and nothing else; validate() reports gaps instead of throwing so that
/// file loaders can surface every problem at once.
struct ModelSpec {
    Graph graph;
    std::vector<double> lambda;
    std::vector<double> gamma;
    std::map<OrderedPair, double> rewards;
    std::map<OrderedPair, NoiseSpec> noise;

    std::size_t size() const noexcept { return graph.size(); }

    double reward(Vertex j, Vertex i) const { return rewards.at(OrderedPair{j, i}); }
    const NoiseSpec& noise_for(Vertex j, Vertex i) const { return noise.at(OrderedPair{j, i}); }

    double lambda_total() const { return std::accumulate(lambda.begin(), lambda.end(), 0.0); }

    double lambda_of(std::span<const Vertex> a) const
    {
        double s = 0.0;
        for (Vertex v : a) {
            s += lambda[v];
        }
        return s;
    }

    /// R = { i : gamma(i) > 0 }
    VertexSet reneging() const
    {
        VertexSet r;
        for (Vertex i = 0; i < gamma.size(); ++i) {
            if (gamma[i] > 0.0) {
                r.push_back(i);
            }
        }
        return r;
    }

    /// R^c = { i : gamma(i) = 0 }
    VertexSet patient() const
    {
        VertexSet r;
        for (Vertex i = 0; i < gamma.size(); ++i) {
            if (gamma[i] == 0.0) {
                r.push_back(i);
            }
        }
        return r;
    }

    /// w-check: max reward over ordered pairs (0 when the graph has no edges).
    double max_reward() const
    {
        double m = 0.0;
        for (const auto& [pair, w] : rewards) {
            m = std::max(m, w);
        }
        return m;
    }

    /// B: the common almost-sure bound on every measurement error.
    double noise_bound() const
    {
        double b = 0.0;
        for (const auto& [pair, ns] : noise) {
            b = std::max(b, ns.bound());
        }
        return b;
    }

    bool all_noise_dirac() const
    {
        return std::all_of(noise.begin(), noise.end(), [](const auto& kv) { return kv.second.is_dirac(); });
    }
};

/// Builds a model with one reward value and one error law shared by every ordered pair.
inline ModelSpec uniform_model(Graph g, std::vector<double> lambda, std::vector<double> gamma, double reward = 0.0,
                               NoiseSpec noise = NoiseSpec::none())
{
    ModelSpec spec;
    spec.graph = std::move(g);
    spec.lambda = std::move(lambda);
    spec.gamma = gamma.empty() ? std::vector<double>(spec.graph.size(), 0.0) : std::move(gamma);
    for (const auto& [a, b] : spec.graph.edges()) {
        spec.rewards[{a, b}] = reward;
        spec.rewards[{b, a}] = reward;
        spec.noise[{a, b}] = noise;
        spec.noise[{b, a}] = noise;
    }
    return spec;
}

/// Every violated ModelSpec invariant, one human-readable line each. Empty iff valid.
inline std::vector<std::string> validate(const ModelSpec& spec)
{
    std::vector<std::string> out;
    const std::size_t n = spec.graph.size();
    if (n == 0) {
        out.emplace_back("graph must have at least one vertex");
        return out;
    }
    if (!is_connected(spec.graph)) {
        out.emplace_back("graph must be connected");
    }
    if (spec.lambda.size() != n) {
        out.push_back("lambda must have " + std::to_string(n) + " entries");
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            if (!(spec.lambda[i] > 0.0)) {
                out.push_back("lambda[" + std::to_string(i) + "] must be > 0");
            } else if (!std::isfinite(spec.lambda[i])) {
                out.push_back("lambda[" + std::to_string(i) + "] must be finite");
            }
        }
    }
    if (spec.gamma.size() != n) {
        out.push_back("gamma must have " + std::to_string(n) + " entries");
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            if (!(spec.gamma[i] >= 0.0) || !std::isfinite(spec.gamma[i])) {
                out.push_back("gamma[" + std::to_string(i) + "] must be finite and >= 0");
            }
        }
    }

    auto check_pairs = [&](const auto& table, const std::string& name) {
        bool incomplete = false;
        for (const auto& [a, b] : spec.graph.edges()) {
            if (!table.contains(OrderedPair{a, b}) || !table.contains(OrderedPair{b, a})) {
                incomplete = true;
            }
        }
        if (incomplete) {
            out.push_back(name + " incomplete");
        }
        for (const auto& [pair, value] : table) {
            if (pair.arriving >= n || pair.stored >= n || !spec.graph.adjacent(pair.arriving, pair.stored)) {
                out.push_back(name + " defined for non-edge (" + std::to_string(pair.arriving) + "," +
                              std::to_string(pair.stored) + ")");
            }
        }
    };
    check_pairs(spec.rewards, "rewards");
    check_pairs(spec.noise, "noise");
    for (const auto& [pair, w] : spec.rewards) {
        if (!(w >= 0.0) || !std::isfinite(w)) {
            out.push_back("reward (" + std::to_string(pair.arriving) + "," + std::to_string(pair.stored) +
                          ") must be finite and >= 0");
        }
    }
    return out;
}

inline void require_valid(const ModelSpec& spec)
{
    const auto violations = validate(spec);
    if (!violations.empty()) {
        std::string msg = "invalid model:";
        for (const auto& v : violations) {
            msg += " " + v + ";";
        }
        throw InputError(msg);
    }
}

/// x(i) x(j) = 0 on every edge, and x >= 0.
inline bool is_admissible(const Graph& g, const QueueState& x)
{
    if (x.size() != g.size()) {
        throw InputError("state has " + std::to_string(x.size()) + " entries, graph has " +
                         std::to_string(g.size()) + " vertices");
    }
    for (auto c : x.counts) {
        if (c < 0) {
            return false;
        }
    }
    for (const auto& [a, b] : g.edges()) {
        if (x[a] > 0 && x[b] > 0) {
            return false;
        }
    }
    return true;
}

inline bool is_admissible(const ModelSpec& spec, const QueueState& x) { return is_admissible(spec.graph, x); }

/// mu_lambda(j) = lambda(j) / lambda(V)
inline std::vector<double> arrival_probabilities(const ModelSpec& spec)
{
    const double total = spec.lambda_total();
    std::vector<double> mu(spec.lambda.size());
    std::transform(spec.lambda.begin(), spec.lambda.end(), mu.begin(), [total](double l) { return l / total; });
    return mu;
}

struct NcondResult {
    bool holds = true;
    /// Minimal slack lambda(E(I)) - lambda(I) over independent I within R^c; 0 when R^c is
    /// empty. When `holds` is false this is the raw (non-positive) value and must not be
    /// fed into bound formulas.
    double eta = 0.0;
    /// Tightest (or violating) independent set; absent when R^c is empty.
    std::optional<VertexSet> witness;
};

namespace detail {

inline NcondResult ncond_from_deficit(const DeficitResult& d)
{
    if (d.vacuous) {
        return NcondResult{true, 0.0, std::nullopt};
    }
    return NcondResult{d.value < 0.0, -d.value, d.witness};
}

}  // namespace detail

/// Stability condition: lambda(I) < lambda(E(I)) for every independent I within R^c.
inline NcondResult check_ncond(const ModelSpec& spec)
{
    require_valid(spec);
    return detail::ncond_from_deficit(max_deficit(spec.graph, spec.lambda, spec.patient()));
}

/// Some lambda satisfies the stability condition iff G is non-bipartite or R is nonempty.
inline bool is_stabilizable(const Graph& g, std::span<const double> gamma)
{
    if (!is_connected(g)) {
        throw InputError("is_stabilizable requires a connected graph");
    }
    if (gamma.size() != g.size()) {
        throw InputError("gamma size does not match graph");
    }
    const bool any_reneging = std::any_of(gamma.begin(), gamma.end(), [](double v) { return v > 0.0; });
    return any_reneging || !is_bipartite(g);
}

/// Rejection sampling of lambda with i.i.d. Unif[0,10] entries (clamped below at 1e-6)
/// until the stability condition holds; nullopt after `max_tries` failures.
inline std::optional<std::vector<double>> find_stabilizing_lambda(const Graph& g, std::span<const double> gamma,
                                                                  Rng& rng, std::size_t max_tries)
{
    if (gamma.size() != g.size()) {
        throw InputError("gamma size does not match graph");
    }
    VertexSet patient;
    for (Vertex i = 0; i < g.size(); ++i) {
        if (gamma[i] == 0.0) {
            patient.push_back(i);
        }
    }
    std::vector<double> lambda(g.size());
    for (std::size_t attempt = 0; attempt < max_tries; ++attempt) {
        for (auto& l : lambda) {
            l = std::max(1e-6, rng.uniform(0.0, 10.0));
        }
        // Only the verdict matters here, so stop at the first non-negative deficit.
        const auto d = max_deficit(g, lambda, patient, 0.0);
        if (d.vacuous || d.value < 0.0) {
            return lambda;
        }
    }
    return std::nullopt;
}

/// u_kappa = max over ordered pairs of u_{kappa,(j,i)}.
inline double u_kappa(const ModelSpec& spec, double kappa)
{
    const double lambda_V = spec.lambda_total();
    double u = 0.0;
    for (const auto& [pair, ns] : spec.noise) {
        u = std::max(u, u_kappa_single(ns, kappa, lambda_V, spec.graph.edge_count()));
    }
    if (spec.noise.empty()) {
        // Still validates kappa.
        (void)tail_budget(kappa, lambda_V, std::max<std::size_t>(1, spec.graph.edge_count()));
    }
    return u;
}

}  // namespace matchnet

#endif  // MATCHNET_MODEL_HPP
