#ifndef MATCHNET_NOISE_HPP
#define MATCHNET_NOISE_HPP

#include <algorithm>
#include <cmath>
#include <string>
#include <type_traits>
#include <variant>

#include "matchnet/errors.hpp"
#include "matchnet/rng.hpp"

namespace matchnet {

/// Point mass at c. Dirac(0) is the error-free measurement.
struct Dirac {
    double c = 0.0;
    friend bool operator==(const Dirac&, const Dirac&) = default;
};

/// Uniform on [a, b], a <= b.
struct Uniform {
    double a = -1.0;
    double b = 1.0;
    friend bool operator==(const Uniform&, const Uniform&) = default;
};

/// Law of a queue-length measurement error U_(j,i).
class NoiseSpec {
public:
    NoiseSpec() = default;
    NoiseSpec(Dirac d) : law_(d) {}  // NOLINT(google-explicit-constructor)
    NoiseSpec(Uniform u) : law_(u)   // NOLINT(google-explicit-constructor)
    {
        if (!(u.a <= u.b) || !std::isfinite(u.a) || !std::isfinite(u.b)) {
            throw InputError("uniform noise requires finite a <= b");
        }
    }

    static NoiseSpec none() { return NoiseSpec(Dirac{0.0}); }
    static NoiseSpec dirac(double c) { return NoiseSpec(Dirac{c}); }
    static NoiseSpec uniform(double a, double b) { return NoiseSpec(Uniform{a, b}); }

    bool is_dirac() const noexcept { return std::holds_alternative<Dirac>(law_); }
    const std::variant<Dirac, Uniform>& law() const noexcept { return law_; }

    /// Smallest B with P(-B <= U <= B) = 1.
    double bound() const
    {
        return std::visit(
            [](const auto& l) -> double {
                using L = std::decay_t<decltype(l)>;
                if constexpr (std::is_same_v<L, Dirac>) {
                    return std::abs(l.c);
                } else {
                    return std::max(std::abs(l.a), std::abs(l.b));
                }
            },
            law_);
    }

    friend bool operator==(const NoiseSpec&, const NoiseSpec&) = default;

private:
    std::variant<Dirac, Uniform> law_{Dirac{0.0}};
};

/// One draw. Dirac draws consume no randomness.
inline double sample(const NoiseSpec& ns, Rng& rng)
{
    return std::visit(
        [&rng](const auto& l) -> double {
            using L = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<L, Dirac>) {
                return l.c;
            } else {
                return l.a == l.b ? l.a : rng.uniform(l.a, l.b);
            }
        },
        ns.law());
}

/// P(|U| > u) for u >= 0.
inline double abs_tail(const NoiseSpec& ns, double u)
{
    if (!(u >= 0.0)) {
        throw InputError("abs_tail requires u >= 0");
    }
    return std::visit(
        [u](const auto& l) -> double {
            using L = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<L, Dirac>) {
                return std::abs(l.c) > u ? 1.0 : 0.0;
            } else {
                if (l.a == l.b) {
                    return std::abs(l.a) > u ? 1.0 : 0.0;
                }
                // (u, b] and [a, -u) are disjoint for u >= 0.
                const double upper = std::max(0.0, l.b - std::max(u, l.a));
                const double lower = std::max(0.0, std::min(-u, l.b) - l.a);
                return (upper + lower) / (l.b - l.a);
            }
        },
        ns.law());
}

/// tau = 1 - (1 - kappa/lambda_V)^(1/(2|E|)): the per-pair tail budget making all 2|E|
/// errors simultaneously small with probability >= 1 - kappa/lambda_V.
inline double tail_budget(double kappa, double lambda_V, std::size_t n_edges)
{
    if (!(lambda_V > 0.0) || !std::isfinite(lambda_V)) {
        throw InputError("lambda(V) must be positive and finite");
    }
    if (!(kappa > 0.0 && kappa < lambda_V)) {
        throw InputError("kappa must lie in (0, lambda(V))");
    }
    if (n_edges == 0) {
        throw InputError("u_kappa needs at least one edge");
    }
    return -std::expm1(std::log1p(-kappa / lambda_V) / (2.0 * static_cast<double>(n_edges)));
}

/// inf { u >= 0 : abs_tail(ns, u) < tau } by bisection to absolute tolerance 1e-9.
/// Works for any law with bounded support given only abs_tail.
inline double tail_quantile_bisect(const NoiseSpec& ns, double tau)
{
    if (abs_tail(ns, 0.0) < tau) {
        return 0.0;
    }
    double lo = 0.0;
    double hi = 1.0;
    while (abs_tail(ns, hi) >= tau) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e300) {
            throw NumericalError("tail quantile search diverged (unbounded noise?)");
        }
    }
    while (hi - lo > 1e-9) {
        const double mid = 0.5 * (lo + hi);
        (abs_tail(ns, mid) < tau ? hi : lo) = mid;
    }
    return hi;
}

/// u_{kappa,(j,i)} for a single error law.
inline double u_kappa_single(const NoiseSpec& ns, double kappa, double lambda_V, std::size_t n_edges)
{
    const double tau = tail_budget(kappa, lambda_V, n_edges);
    if (const auto* d = std::get_if<Dirac>(&ns.law())) {
        // 1{u < |c|} < tau holds exactly on [|c|, inf) because 0 < tau <= 1.
        return std::abs(d->c);
    }
    const auto& uni = std::get<Uniform>(ns.law());
    if (uni.a == -uni.b) {
        return std::max(0.0, uni.b * (1.0 - tau));
    }
    return tail_quantile_bisect(ns, tau);
}

inline std::string to_string(const NoiseSpec& ns)
{
    if (const auto* d = std::get_if<Dirac>(&ns.law())) {
        return "dirac(" + std::to_string(d->c) + ")";
    }
    const auto& u = std::get<Uniform>(ns.law());
    return "uniform(" + std::to_string(u.a) + "," + std::to_string(u.b) + ")";
}

}  // namespace matchnet

#endif  // MATCHNET_NOISE_HPP
