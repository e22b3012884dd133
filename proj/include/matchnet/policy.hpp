#ifndef MATCHNET_POLICY_HPP
#define MATCHNET_POLICY_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "matchnet/errors.hpp"
#include "matchnet/model.hpp"
#include "matchnet/noise.hpp"
#include "matchnet/rng.hpp"

namespace matchnet {

enum class PolicyKind {
    MaxWeight,        ///< argmax [x(i) + U]^+ + w_(j,i), with the model's rewards and noise
    MatchTheLongest,  ///< argmax x(i); rewards and noise ignored
    Priority,         ///< argmax w_(j,i) among nonempty candidates; queue sizes ignored
};

inline std::string_view to_string(PolicyKind k)
{
    switch (k) {
    case PolicyKind::MaxWeight:
        return "max_weight";
    case PolicyKind::MatchTheLongest:
        return "match_longest";
    case PolicyKind::Priority:
        return "priority";
    }
    return "?";
}

inline PolicyKind parse_policy(std::string_view name)
{
    if (name == "max_weight") {
        return PolicyKind::MaxWeight;
    }
    if (name == "match_longest") {
        return PolicyKind::MatchTheLongest;
    }
    if (name == "priority") {
        return PolicyKind::Priority;
    }
    throw InputError("unknown policy '" + std::string(name) + "' (expected max_weight, match_longest or priority)");
}

/// Max-Weight score [x(i) + u]^+ + w.
inline double mw_score(std::int64_t queue, double noise, double reward)
{
    return std::max(static_cast<double>(queue) + noise, 0.0) + reward;
}

/// Stored classes compatible with an arriving j-item: E(j) intersected with supp(x), ascending.
inline VertexSet match_candidates(const ModelSpec& spec, const QueueState& x, Vertex j)
{
    VertexSet c;
    for (Vertex i : spec.graph.neighbors(j)) {
        if (x[i] > 0) {
            c.push_back(i);
        }
    }
    return c;
}

namespace detail {

/// Deterministic part of each policy's score (everything except the noise draw).
inline double base_score(PolicyKind kind, const ModelSpec& spec, const QueueState& x, Vertex j, Vertex i)
{
    switch (kind) {
    case PolicyKind::MatchTheLongest:
        return static_cast<double>(x[i]);
    case PolicyKind::Priority:
        return spec.reward(j, i);
    case PolicyKind::MaxWeight:
        break;
    }
    return mw_score(x[i], 0.0, spec.reward(j, i));
}

/// Indices (into `scores`) achieving the maximum; exact comparison.
inline void argmax_into(const std::vector<double>& scores, std::vector<std::size_t>& out)
{
    out.clear();
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < scores.size(); ++k) {
        if (scores[k] > best) {
            best = scores[k];
            out.clear();
        }
        if (scores[k] == best) {
            out.push_back(k);
        }
    }
}

/// Policy decision without the admissibility check. RNG use, in order: one noise draw per
/// candidate in ascending class order (MaxWeight only; Dirac draws are free), then one
/// tie-break draw if the argmax has more than one element.
inline std::optional<Vertex> choose_match_unchecked(PolicyKind kind, const ModelSpec& spec, const QueueState& x,
                                                    Vertex j, Rng& rng)
{
    thread_local std::vector<Vertex> candidates;
    thread_local std::vector<double> scores;
    thread_local std::vector<std::size_t> best;
    candidates.clear();
    scores.clear();
    for (Vertex i : spec.graph.neighbors(j)) {
        if (x[i] > 0) {
            candidates.push_back(i);
        }
    }
    if (candidates.empty()) {
        return std::nullopt;
    }
    if (candidates.size() == 1) {
        // The noise draw cannot change a single-candidate decision, but it is still a draw
        // of the underlying process; keep the stream aligned with the multi-candidate path.
        if (kind == PolicyKind::MaxWeight) {
            (void)sample(spec.noise_for(j, candidates.front()), rng);
        }
        return candidates.front();
    }
    for (Vertex i : candidates) {
        if (kind == PolicyKind::MaxWeight) {
            scores.push_back(mw_score(x[i], sample(spec.noise_for(j, i), rng), spec.reward(j, i)));
        } else {
            scores.push_back(base_score(kind, spec, x, j, i));
        }
    }
    argmax_into(scores, best);
    const std::size_t pick = best.size() == 1 ? best.front() : best[rng.below(best.size())];
    return candidates[pick];
}

}  // namespace detail

/// The stored class an arriving j-item is matched with, or nullopt if it must be stored.
/// Ties are broken uniformly at random in every policy.
inline std::optional<Vertex> choose_match(PolicyKind kind, const ModelSpec& spec, const QueueState& x, Vertex j,
                                          Rng& rng)
{
    if (j >= spec.size()) {
        throw InputError("arriving class out of range");
    }
    if (!is_admissible(spec, x)) {
        throw ContractViolation("choose_match called on an inadmissible state");
    }
    return detail::choose_match_unchecked(kind, spec, x, j, rng);
}

/// nu_{x,j}: per-class probability of matching an arriving j-item; all zeros when the
/// item would be stored. `std_error` is zero for exact distributions.
struct MatchDistribution {
    std::vector<double> prob;
    std::vector<double> std_error;
};

/// True when the policy's decision at (x, j) is a deterministic function of the state up
/// to the uniform tie-break, so nu can be computed exactly.
inline bool exact_match_distribution_available(PolicyKind kind, const ModelSpec& spec, const QueueState& x, Vertex j)
{
    if (kind != PolicyKind::MaxWeight) {
        return true;
    }
    for (Vertex i : match_candidates(spec, x, j)) {
        if (!spec.noise_for(j, i).is_dirac()) {
            return false;
        }
    }
    return true;
}

/// Exact nu_{x,j}. Throws UnsupportedMode for Max-Weight with a non-Dirac candidate error.
inline MatchDistribution match_distribution(PolicyKind kind, const ModelSpec& spec, const QueueState& x, Vertex j)
{
    if (j >= spec.size()) {
        throw InputError("arriving class out of range");
    }
    if (!is_admissible(spec, x)) {
        throw ContractViolation("match_distribution called on an inadmissible state");
    }
    if (!exact_match_distribution_available(kind, spec, x, j)) {
        throw UnsupportedMode("exact match distribution requires Dirac noise on every candidate pair");
    }
    MatchDistribution out{std::vector<double>(spec.size(), 0.0), std::vector<double>(spec.size(), 0.0)};
    const VertexSet candidates = match_candidates(spec, x, j);
    if (candidates.empty()) {
        return out;
    }
    std::vector<double> scores;
    for (Vertex i : candidates) {
        if (kind == PolicyKind::MaxWeight) {
            scores.push_back(mw_score(x[i], std::get<Dirac>(spec.noise_for(j, i).law()).c, spec.reward(j, i)));
        } else {
            scores.push_back(detail::base_score(kind, spec, x, j, i));
        }
    }
    std::vector<std::size_t> best;
    detail::argmax_into(scores, best);
    for (std::size_t k : best) {
        out.prob[candidates[k]] = 1.0 / static_cast<double>(best.size());
    }
    return out;
}

/// Monte Carlo estimate of nu_{x,j} from `samples` independent policy decisions.
inline MatchDistribution match_distribution_mc(PolicyKind kind, const ModelSpec& spec, const QueueState& x, Vertex j,
                                               std::size_t samples, Rng& rng)
{
    if (samples == 0) {
        throw InputError("match_distribution_mc needs at least one sample");
    }
    if (!is_admissible(spec, x)) {
        throw ContractViolation("match_distribution_mc called on an inadmissible state");
    }
    std::vector<double> hits(spec.size(), 0.0);
    for (std::size_t s = 0; s < samples; ++s) {
        if (auto i = detail::choose_match_unchecked(kind, spec, x, j, rng)) {
            hits[*i] += 1.0;
        }
    }
    MatchDistribution out{std::vector<double>(spec.size(), 0.0), std::vector<double>(spec.size(), 0.0)};
    const double m = static_cast<double>(samples);
    for (Vertex i = 0; i < spec.size(); ++i) {
        const double p = hits[i] / m;
        out.prob[i] = p;
        out.std_error[i] = std::sqrt(p * (1.0 - p) / m);
    }
    return out;
}

/// The model as seen by the Max-Weight bounds for a given policy: Match the Longest is
/// Max-Weight with equal per-arrival rewards (taken as 0) and error-free measurement.
inline ModelSpec effective_max_weight_model(const ModelSpec& spec, PolicyKind kind)
{
    if (kind == PolicyKind::Priority) {
        throw BoundInapplicable("priority policies are not in the Max-Weight family");
    }
    if (kind == PolicyKind::MaxWeight) {
        return spec;
    }
    ModelSpec eff = spec;
    for (auto& [pair, w] : eff.rewards) {
        w = 0.0;
    }
    for (auto& [pair, ns] : eff.noise) {
        ns = NoiseSpec::none();
    }
    return eff;
}

}  // namespace matchnet

#endif  // MATCHNET_POLICY_HPP
