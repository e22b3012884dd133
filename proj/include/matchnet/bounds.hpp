#ifndef MATCHNET_BOUNDS_HPP
#define MATCHNET_BOUNDS_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "matchnet/errors.hpp"
#include "matchnet/model.hpp"
#include "matchnet/policy.hpp"
#include "matchnet/rng.hpp"

namespace matchnet {

/// rho~_i = lambda(i) / lambda(E(i)); +inf for an isolated vertex.
inline std::vector<double> rho_tilde(const ModelSpec& spec)
{
    std::vector<double> rho(spec.size());
    for (Vertex i = 0; i < spec.size(); ++i) {
        const double service = spec.lambda_of(spec.graph.neighbors(i));
        rho[i] = service > 0.0 ? spec.lambda[i] / service : std::numeric_limits<double>::infinity();
    }
    return rho;
}

/// Stationary mean of the birth-death chain with birth rate `birth` and death rate
/// base_death + gamma * z in state z >= 1.
///
/// gamma == 0: closed form rho/(1-rho) (infinite when rho >= 1). Otherwise the product-form
/// series, summed until the current weight falls below 1e-12 of the accumulated mass once
/// the weight ratio is below 1/2.
inline double birth_death_mean(double birth, double base_death, double gamma)
{
    if (gamma == 0.0) {
        const double rho = base_death > 0.0 ? birth / base_death : std::numeric_limits<double>::infinity();
        return rho < 1.0 ? rho / (1.0 - rho) : std::numeric_limits<double>::infinity();
    }
    double weight = 1.0;
    double mass = 1.0;
    double first = 0.0;
    for (std::size_t z = 1;; ++z) {
        const double ratio = birth / (base_death + gamma * static_cast<double>(z));
        weight *= ratio;
        mass += weight;
        first += static_cast<double>(z) * weight;
        if (ratio < 0.5 && weight < 1e-12 * mass) {
            break;
        }
        if (z > 100'000'000) {
            throw NumericalError("birth-death series failed to converge");
        }
    }
    return first / mass;
}

/// Max over classes of the stationary mean of the queue-by-queue dominated chain (birth
/// lambda(i), death lambda(E(i)) + gamma(i) z): a lower bound on E_pi ||x||_inf.
/// Requires the stability condition.
inline double lower_bound_mean(const ModelSpec& spec)
{
    const auto nc = check_ncond(spec);
    if (!nc.holds) {
        throw BoundInapplicable("lower bound requires the stability condition (NCOND)");
    }
    double best = 0.0;
    for (Vertex i = 0; i < spec.size(); ++i) {
        best = std::max(best, birth_death_mean(spec.lambda[i], spec.lambda_of(spec.graph.neighbors(i)), spec.gamma[i]));
    }
    return best;
}

namespace detail {

/// eta > 0 under R = empty set with bounded noise; throws otherwise.
inline double require_upper_bound_hypotheses(const ModelSpec& spec)
{
    if (!spec.reneging().empty()) {
        throw BoundInapplicable("requires R=∅ (no reneging)");
    }
    const auto nc = check_ncond(spec);
    if (!nc.holds || !(nc.eta > 0.0)) {
        throw BoundInapplicable("requires the stability condition (NCOND)");
    }
    // Dirac and Uniform errors are always bounded; B = spec.noise_bound().
    return nc.eta;
}

}  // namespace detail

/// (lambda(V)/eta) (1/2 + (w_check + 2B)|V|), for Max-Weight without reneging.
inline double upper_bound_mean(const ModelSpec& spec)
{
    const double eta = detail::require_upper_bound_hypotheses(spec);
    const double n = static_cast<double>(spec.size());
    return spec.lambda_total() / eta * (0.5 + (spec.max_reward() + 2.0 * spec.noise_bound()) * n);
}

/// (lambda(V)/eta)(1/3 + (1/eta)[1 + 2(w+2B)|V|][lambda(V) + (w+2B)|V|]) - [max rho/(1-rho)]^2
inline double upper_bound_variance(const ModelSpec& spec)
{
    const double eta = detail::require_upper_bound_hypotheses(spec);
    const double lv = spec.lambda_total();
    const double spread = (spec.max_reward() + 2.0 * spec.noise_bound()) * static_cast<double>(spec.size());
    const double lower = lower_bound_mean(spec);
    return lv / eta * (1.0 / 3.0 + (1.0 / eta) * (1.0 + 2.0 * spread) * (lv + spread)) - lower * lower;
}

/// Right-hand side of the quadratic drift inequality for f2(x) = sum x(i)^2:
///   lambda(V) + 2 sum_{i in R} [-gamma(i) x(i)^2 + (gamma(i)/2 + lambda(i)) x(i)]
///     + 2 [lambda(V)(2 u_kappa + w_check)|V| + (kappa - eta) max_{i in R^c} x(i)] 1{R^c nonempty}.
/// The last term is often quoted with ||x||_inf, which is false when the largest queue is a
/// reneging class (e.g. x supported on R alone: the patient part contributes 0, not a
/// negative multiple of ||x||_inf). Without reneging both readings agree.
/// kappa only matters (and is only checked) when R^c is nonempty.
inline double drift_f2_rhs(const ModelSpec& spec, const QueueState& x, double kappa)
{
    if (!is_admissible(spec, x)) {
        throw ContractViolation("drift_f2_rhs called on an inadmissible state");
    }
    const double lv = spec.lambda_total();
    double rhs = lv;
    for (Vertex i : spec.reneging()) {
        const double xi = static_cast<double>(x[i]);
        rhs += 2.0 * (-spec.gamma[i] * xi * xi + (0.5 * spec.gamma[i] + spec.lambda[i]) * xi);
    }
    if (!spec.patient().empty()) {
        const double u = u_kappa(spec, kappa);
        const double eta = check_ncond(spec).eta;
        std::int64_t patient_max = 0;
        for (Vertex i : spec.patient()) {
            patient_max = std::max(patient_max, x[i]);
        }
        rhs += 2.0 * (lv * (2.0 * u + spec.max_reward()) * static_cast<double>(spec.size()) +
                      (kappa - eta) * static_cast<double>(patient_max));
    }
    return rhs;
}

/// Right-hand side of the cubic drift inequality for f3(x) = sum x(i)^3 (no reneging):
///   lambda(V) + 6 ||x||_inf [(w_check + 2B)|V| + lambda(V)] - 3 eta ||x||_inf^2.
inline double drift_f3_rhs(const ModelSpec& spec, const QueueState& x)
{
    const double eta = detail::require_upper_bound_hypotheses(spec);
    if (!is_admissible(spec, x)) {
        throw ContractViolation("drift_f3_rhs called on an inadmissible state");
    }
    const double lv = spec.lambda_total();
    const double m = static_cast<double>(x.max_norm());
    const double spread = (spec.max_reward() + 2.0 * spec.noise_bound()) * static_cast<double>(spec.size());
    return lv + 6.0 * m * (spread + lv) - 3.0 * eta * m * m;
}

using StateFunction = std::function<double(const QueueState&)>;

namespace lyapunov {

/// f2(x) = sum x(i)^2
inline double quadratic(const QueueState& x)
{
    double s = 0.0;
    for (auto c : x.counts) {
        s += static_cast<double>(c) * static_cast<double>(c);
    }
    return s;
}

/// f3(x) = sum x(i)^3
inline double cubic(const QueueState& x)
{
    double s = 0.0;
    for (auto c : x.counts) {
        const auto d = static_cast<double>(c);
        s += d * d * d;
    }
    return s;
}

/// x -> exp(alpha ||x||_2)
inline StateFunction exp_norm(double alpha)
{
    return [alpha](const QueueState& x) { return std::exp(alpha * x.l2_norm()); };
}

}  // namespace lyapunov

namespace detail {

template <class MatchFn>
double generator_apply_with(const ModelSpec& spec, const StateFunction& f, const QueueState& x, MatchFn&& nu)
{
    const double fx = f(x);
    double total = 0.0;
    for (Vertex j = 0; j < spec.size(); ++j) {
        const MatchDistribution d = nu(j);
        double matched = 0.0;
        for (Vertex i = 0; i < spec.size(); ++i) {
            if (d.prob[i] > 0.0) {
                matched += d.prob[i];
                total += spec.lambda[j] * d.prob[i] * (f(x.shifted(i, -1)) - fx);
            }
        }
        // Stored when no compatible item exists; with Monte Carlo nu this is the residual mass.
        const double stored = 1.0 - matched;
        if (stored > 0.0 && match_candidates(spec, x, j).empty()) {
            total += spec.lambda[j] * (f(x.shifted(j, +1)) - fx);
        }
    }
    for (Vertex i : spec.reneging()) {
        if (x[i] > 0) {
            total += spec.gamma[i] * static_cast<double>(x[i]) * (f(x.shifted(i, -1)) - fx);
        }
    }
    return total;
}

}  // namespace detail

/// (L f)(x) for the chain under `policy`, with exact match probabilities.
inline double generator_apply(const ModelSpec& spec, PolicyKind policy, const StateFunction& f, const QueueState& x)
{
    if (!is_admissible(spec, x)) {
        throw ContractViolation("generator_apply called on an inadmissible state");
    }
    return detail::generator_apply_with(spec, f, x, [&](Vertex j) { return match_distribution(policy, spec, x, j); });
}

/// (L f)(x) with match probabilities estimated from `samples` decisions per arriving class.
inline double generator_apply_mc(const ModelSpec& spec, PolicyKind policy, const StateFunction& f,
                                 const QueueState& x, std::size_t samples, Rng& rng)
{
    if (!is_admissible(spec, x)) {
        throw ContractViolation("generator_apply_mc called on an inadmissible state");
    }
    return detail::generator_apply_with(
        spec, f, x, [&](Vertex j) { return match_distribution_mc(policy, spec, x, j, samples, rng); });
}

/// Parameters of the exponential Lyapunov function exp(alpha ||x||).
///
/// With A = lambda(V)(2 u_kappa + w_check)|V| + lambda(V)/2 the drift satisfies
///   L e^{alpha||x||} <= alpha e^{alpha||x||} [A/||x|| + (kappa - eta)/sqrt|V| + alpha lambda(V)].
/// alpha = (eta - kappa)/(2 sqrt|V| lambda(V)) makes the bracket negative once
/// ||x|| > threshold = 2 sqrt|V| A / (eta - kappa).
struct GeometricDrift {
    double alpha = 0.0;
    double kappa = 0.0;
    double threshold = 0.0;
};

inline GeometricDrift geometric_drift(const ModelSpec& spec, std::optional<double> kappa_opt = std::nullopt)
{
    // The explicit constants drop the reneging terms, which is only sound without reneging:
    // a large reneging queue adds no (kappa - eta) drift.
    if (!spec.reneging().empty()) {
        throw BoundInapplicable("geometric drift constants require R=∅");
    }
    const auto nc = check_ncond(spec);
    if (!nc.holds || !(nc.eta > 0.0)) {
        throw BoundInapplicable("geometric drift requires the stability condition with eta > 0");
    }
    const double kappa = kappa_opt.value_or(nc.eta / 2.0);
    if (!(kappa > 0.0 && kappa < nc.eta)) {
        throw InputError("geometric drift requires 0 < kappa < eta");
    }
    const double lv = spec.lambda_total();
    const double root_n = std::sqrt(static_cast<double>(spec.size()));
    const double a = lv * (2.0 * u_kappa(spec, kappa) + spec.max_reward()) * static_cast<double>(spec.size()) + lv / 2.0;
    GeometricDrift g;
    g.kappa = kappa;
    g.alpha = (nc.eta - kappa) / (2.0 * root_n * lv);
    g.threshold = 2.0 * root_n * a / (nc.eta - kappa);
    return g;
}

/// Everything the bounds module can say about one model under one policy.
struct BoundsReport {
    bool ncond_holds = false;
    double eta = 0.0;
    std::optional<double> kappa;
    std::optional<double> u_kappa;
    double w_check = 0.0;
    double noise_bound = 0.0;
    std::vector<double> rho_tilde;
    std::optional<double> lower_mean;
    std::optional<double> upper_mean;
    std::optional<double> upper_variance;
    bool no_reneging = false;
    bool bounded_noise = true;
    std::string lower_reason;  ///< why lower_mean is absent (empty when present)
    std::string upper_reason;  ///< why the upper bounds are absent (empty when present)
};

/// Evaluates every bound that applies; kappa defaults to eta/2.
inline BoundsReport compute_bounds(const ModelSpec& spec, PolicyKind policy = PolicyKind::MaxWeight,
                                   std::optional<double> kappa = std::nullopt)
{
    require_valid(spec);
    BoundsReport r;
    const auto nc = check_ncond(spec);
    r.ncond_holds = nc.holds;
    r.eta = nc.eta;
    r.rho_tilde = rho_tilde(spec);
    r.no_reneging = spec.reneging().empty();

    if (nc.holds) {
        r.lower_mean = lower_bound_mean(spec);
    } else {
        r.lower_reason = "requires NCOND";
    }

    if (policy == PolicyKind::Priority) {
        r.upper_reason = "requires a Max-Weight policy";
        r.w_check = spec.max_reward();
        r.noise_bound = spec.noise_bound();
        return r;
    }
    const ModelSpec eff = effective_max_weight_model(spec, policy);
    r.w_check = eff.max_reward();
    r.noise_bound = eff.noise_bound();

    if (kappa && !(*kappa > 0.0 && *kappa < spec.lambda_total())) {
        throw InputError("kappa must lie in (0, lambda(V))");
    }
    const double k = kappa.value_or(nc.eta / 2.0);
    if (nc.holds && k > 0.0 && k < spec.lambda_total() && spec.graph.edge_count() > 0) {
        r.kappa = k;
        r.u_kappa = u_kappa(eff, k);
    }

    if (!r.no_reneging) {
        r.upper_reason = "requires R=∅";
    } else if (!nc.holds) {
        r.upper_reason = "requires NCOND";
    } else {
        r.upper_mean = upper_bound_mean(eff);
        r.upper_variance = upper_bound_variance(eff);
    }
    return r;
}

}  // namespace matchnet

#endif  // MATCHNET_BOUNDS_HPP
