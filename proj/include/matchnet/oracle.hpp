#ifndef MATCHNET_ORACLE_HPP
#define MATCHNET_ORACLE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "matchnet/errors.hpp"
#include "matchnet/graph.hpp"
#include "matchnet/model.hpp"
#include "matchnet/policy.hpp"

namespace matchnet {

/// The chain restricted to admissible states with ||x||_inf <= level. Arrivals that would
/// leave the box are suppressed, so the truncated chain stays conservative.
struct TruncatedChain {
    std::int64_t level = 0;
    std::vector<QueueState> states;
    /// Generator Q: off-diagonal jump rates, diagonal minus the row sum.
    Eigen::SparseMatrix<double, Eigen::RowMajor> generator;
    std::map<std::vector<std::int64_t>, std::size_t> index;
    bool irreducible = false;

    std::size_t size() const noexcept { return states.size(); }

    std::size_t index_of(const QueueState& x) const
    {
        const auto it = index.find(x.counts);
        if (it == index.end()) {
            throw InputError("state is outside the truncated state space");
        }
        return it->second;
    }
};

namespace detail {

/// All independent sets of g (including the empty set), as ascending vertex lists.
inline std::vector<VertexSet> independent_sets(const Graph& g)
{
    std::vector<VertexSet> out;
    VertexSet current;
    auto rec = [&](auto&& self, Vertex from) -> void {
        out.push_back(current);
        for (Vertex v = from; v < g.size(); ++v) {
            bool ok = true;
            for (Vertex u : current) {
                if (g.adjacent(u, v)) {
                    ok = false;
                    break;
                }
            }
            if (ok) {
                current.push_back(v);
                self(self, v + 1);
                current.pop_back();
            }
        }
    };
    rec(rec, 0);
    return out;
}

inline bool all_reachable(const Eigen::SparseMatrix<double, Eigen::RowMajor>& q, std::size_t root, bool reverse)
{
    const auto n = static_cast<std::size_t>(q.rows());
    std::vector<std::vector<std::size_t>> adj(n);
    for (Eigen::Index r = 0; r < q.outerSize(); ++r) {
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(q, r); it; ++it) {
            if (it.row() != it.col() && it.value() > 0.0) {
                const auto from = static_cast<std::size_t>(it.row());
                const auto to = static_cast<std::size_t>(it.col());
                (reverse ? adj[to] : adj[from]).push_back(reverse ? from : to);
            }
        }
    }
    std::vector<char> seen(n, 0);
    std::vector<std::size_t> stack{root};
    seen[root] = 1;
    std::size_t count = 1;
    while (!stack.empty()) {
        const auto v = stack.back();
        stack.pop_back();
        for (auto u : adj[v]) {
            if (!seen[u]) {
                seen[u] = 1;
                ++count;
                stack.push_back(u);
            }
        }
    }
    return count == n;
}

}  // namespace detail

/// Builds the truncated generator. Only policies with exact match probabilities are
/// supported (Dirac noise for Max-Weight).
inline TruncatedChain build_chain(const ModelSpec& spec, PolicyKind policy, std::int64_t level,
                                  std::size_t max_states = 2'000'000)
{
    require_valid(spec);
    if (level < 1) {
        throw InputError("truncation level must be >= 1");
    }
    if (policy == PolicyKind::MaxWeight && !spec.all_noise_dirac()) {
        throw UnsupportedMode("oracle requires Dirac noise (exact match probabilities)");
    }
    const auto sets = detail::independent_sets(spec.graph);
    double count = 0.0;
    for (const auto& s : sets) {
        count += std::pow(static_cast<double>(level), static_cast<double>(s.size()));
    }
    if (count > static_cast<double>(max_states)) {
        throw SizeError("truncated state space has " + std::to_string(static_cast<long long>(count)) +
                        " states, limit is " + std::to_string(max_states));
    }

    TruncatedChain chain;
    chain.level = level;
    for (const auto& s : sets) {
        QueueState x(spec.size());
        for (Vertex v : s) {
            x[v] = 1;
        }
        // Odometer over {1..level}^s.
        while (true) {
            chain.index.emplace(x.counts, chain.states.size());
            chain.states.push_back(x);
            std::size_t k = 0;
            for (; k < s.size(); ++k) {
                if (x[s[k]] < level) {
                    ++x[s[k]];
                    break;
                }
                x[s[k]] = 1;
            }
            if (k == s.size()) {
                break;
            }
        }
    }

    const std::size_t n = chain.states.size();
    std::vector<Eigen::Triplet<double>> triplets;
    std::vector<double> diag(n, 0.0);
    for (std::size_t a = 0; a < n; ++a) {
        const QueueState& x = chain.states[a];
        auto add = [&](const QueueState& y, double rate) {
            if (rate <= 0.0) {
                return;
            }
            triplets.emplace_back(static_cast<int>(a), static_cast<int>(chain.index.at(y.counts)), rate);
            diag[a] -= rate;
        };
        for (Vertex j = 0; j < spec.size(); ++j) {
            const MatchDistribution nu = match_distribution(policy, spec, x, j);
            bool matched = false;
            for (Vertex i = 0; i < spec.size(); ++i) {
                if (nu.prob[i] > 0.0) {
                    matched = true;
                    add(x.shifted(i, -1), spec.lambda[j] * nu.prob[i]);
                }
            }
            if (!matched && x[j] < level) {
                add(x.shifted(j, +1), spec.lambda[j]);
            }
        }
        for (Vertex i = 0; i < spec.size(); ++i) {
            if (x[i] > 0 && spec.gamma[i] > 0.0) {
                add(x.shifted(i, -1), spec.gamma[i] * static_cast<double>(x[i]));
            }
        }
    }
    for (std::size_t a = 0; a < n; ++a) {
        triplets.emplace_back(static_cast<int>(a), static_cast<int>(a), diag[a]);
    }
    chain.generator.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    chain.generator.setFromTriplets(triplets.begin(), triplets.end());
    chain.generator.makeCompressed();

    const std::size_t origin = chain.index_of(QueueState(spec.size()));
    chain.irreducible =
        detail::all_reachable(chain.generator, origin, false) && detail::all_reachable(chain.generator, origin, true);
    return chain;
}

struct StationaryResult {
    Eigen::VectorXd pi;
    double residual = 0.0;  ///< ||pi Q||_inf
};

/// Solves pi Q = 0, sum pi = 1: dense LU up to `dense_limit` states, sparse LU above.
inline StationaryResult stationary(const TruncatedChain& chain, std::size_t dense_limit = 5000)
{
    if (!chain.irreducible) {
        throw NumericalError("truncated chain is not irreducible");
    }
    const auto n = static_cast<Eigen::Index>(chain.size());
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    rhs(n - 1) = 1.0;

    StationaryResult out;
    if (chain.size() <= dense_limit) {
        Eigen::MatrixXd a = Eigen::MatrixXd(chain.generator.transpose());
        a.row(n - 1).setOnes();
        out.pi = a.fullPivLu().solve(rhs);
    } else {
        Eigen::SparseMatrix<double> a = chain.generator.transpose();
        // Replace the last balance equation by the normalization.
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(static_cast<std::size_t>(a.nonZeros() + n));
        for (Eigen::Index c = 0; c < a.outerSize(); ++c) {
            for (Eigen::SparseMatrix<double>::InnerIterator it(a, c); it; ++it) {
                if (it.row() != n - 1) {
                    trip.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
                }
            }
        }
        for (Eigen::Index c = 0; c < n; ++c) {
            trip.emplace_back(static_cast<int>(n - 1), static_cast<int>(c), 1.0);
        }
        Eigen::SparseMatrix<double> m(n, n);
        m.setFromTriplets(trip.begin(), trip.end());
        m.makeCompressed();
        Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
        lu.compute(m);
        if (lu.info() != Eigen::Success) {
            throw NumericalError("sparse LU factorization failed");
        }
        out.pi = lu.solve(rhs);
    }
    // Clip solver noise and renormalize.
    for (Eigen::Index k = 0; k < n; ++k) {
        if (out.pi(k) < 0.0 && out.pi(k) > -1e-13) {
            out.pi(k) = 0.0;
        }
    }
    out.pi /= out.pi.sum();
    const Eigen::VectorXd flux = chain.generator.transpose() * out.pi;
    out.residual = flux.cwiseAbs().maxCoeff();
    const double scale = std::max(1.0, chain.generator.coeffs().cwiseAbs().maxCoeff());
    if (!(out.residual <= 1e-10 * scale) || (out.pi.array() < -1e-9).any()) {
        throw NumericalError("stationary solve residual " + std::to_string(out.residual) + " exceeds tolerance");
    }
    return out;
}

struct StationaryMoments {
    double mean_max = 0.0;
    double second_moment_max = 0.0;
    double variance_max = 0.0;
    double mean_total = 0.0;
};

inline StationaryMoments stationary_moments(const TruncatedChain& chain, const Eigen::VectorXd& pi)
{
    StationaryMoments m;
    for (std::size_t k = 0; k < chain.size(); ++k) {
        const double p = pi(static_cast<Eigen::Index>(k));
        const auto mx = static_cast<double>(chain.states[k].max_norm());
        m.mean_max += p * mx;
        m.second_moment_max += p * mx * mx;
        m.mean_total += p * static_cast<double>(chain.states[k].l1_norm());
    }
    m.variance_max = m.second_moment_max - m.mean_max * m.mean_max;
    return m;
}

/// sum_x pi(x) g(x) for an arbitrary state function.
template <class F>
double expectation(const TruncatedChain& chain, const Eigen::VectorXd& pi, F&& g)
{
    double s = 0.0;
    for (std::size_t k = 0; k < chain.size(); ++k) {
        s += pi(static_cast<Eigen::Index>(k)) * g(chain.states[k]);
    }
    return s;
}

/// Law at time t started from distribution p0, by uniformization:
/// p(t) = sum_k Poisson(k; q t) p0 P^k with P = I + Q/q, truncated once the Poisson mass
/// accumulated exceeds 1 - 1e-14.
inline Eigen::VectorXd transient(const TruncatedChain& chain, const Eigen::VectorXd& p0, double t)
{
    if (!(t >= 0.0)) {
        throw InputError("transient needs t >= 0");
    }
    const auto n = static_cast<Eigen::Index>(chain.size());
    double q = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
        q = std::max(q, -chain.generator.coeff(k, k));
    }
    if (q == 0.0 || t == 0.0) {
        return p0;
    }
    const Eigen::SparseMatrix<double, Eigen::RowMajor> qt = chain.generator.transpose();
    const double qt_mean = q * t;
    Eigen::VectorXd term = p0;  // p0 P^k, as a column vector
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
    double mass = 0.0;
    for (std::size_t k = 0;; ++k) {
        const double log_w = -qt_mean + static_cast<double>(k) * std::log(qt_mean) - std::lgamma(static_cast<double>(k) + 1.0);
        const double w = std::exp(log_w);
        out += w * term;
        mass += w;
        const double kd = static_cast<double>(k);
        if ((kd > qt_mean && mass > 1.0 - 1e-14) || kd > qt_mean + 40.0 * std::sqrt(qt_mean) + 100.0) {
            break;
        }
        term = term + (qt * term) / q;
    }
    return out;
}

inline double total_variation(const Eigen::VectorXd& p, const Eigen::VectorXd& q)
{
    return 0.5 * (p - q).cwiseAbs().sum();
}

}  // namespace matchnet

#endif  // MATCHNET_ORACLE_HPP
