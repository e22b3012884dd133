#ifndef MATCHNET_GRAPH_HPP
#define MATCHNET_GRAPH_HPP

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "matchnet/errors.hpp"
#include "matchnet/rng.hpp"

namespace matchnet {

using Vertex = std::size_t;

/// Sorted, duplicate-free list of vertex indices.
using VertexSet = std::vector<Vertex>;

using Edge = std::pair<Vertex, Vertex>;

/// Finite simple undirected graph on vertices 0..n-1.
///
/// Edges are stored normalized (first < second) and sorted lexicographically;
/// adjacency lists are sorted. Self-loops and duplicate edges are rejected at
/// construction. Connectivity is not enforced here, see is_connected().
class Graph {
public:
    Graph() = default;

    Graph(std::size_t n_vertices, std::vector<Edge> edges) : adjacency_(n_vertices)
    {
        if (n_vertices == 0) {
            throw InputError("graph must have at least one vertex");
        }
        for (auto& [a, b] : edges) {
            if (a >= n_vertices || b >= n_vertices) {
                throw InputError("edge <" + std::to_string(a) + "," + std::to_string(b) +
                                 "> references a vertex outside 0.." + std::to_string(n_vertices - 1));
            }
            if (a == b) {
                throw InputError("self-loop at vertex " + std::to_string(a));
            }
            if (a > b) {
                std::swap(a, b);
            }
        }
        std::sort(edges.begin(), edges.end());
        if (std::adjacent_find(edges.begin(), edges.end()) != edges.end()) {
            throw InputError("duplicate edge in graph");
        }
        edges_ = std::move(edges);
        for (const auto& [a, b] : edges_) {
            adjacency_[a].push_back(b);
            adjacency_[b].push_back(a);
        }
        for (auto& nbrs : adjacency_) {
            std::sort(nbrs.begin(), nbrs.end());
        }
    }

    std::size_t size() const noexcept { return adjacency_.size(); }
    std::size_t edge_count() const noexcept { return edges_.size(); }
    const std::vector<Edge>& edges() const noexcept { return edges_; }

    /// E(i): sorted neighbors of i.
    const VertexSet& neighbors(Vertex i) const { return adjacency_.at(i); }

    bool adjacent(Vertex i, Vertex j) const
    {
        const auto& nbrs = adjacency_.at(i);
        return std::binary_search(nbrs.begin(), nbrs.end(), j);
    }

    friend bool operator==(const Graph&, const Graph&) = default;

private:
    std::vector<VertexSet> adjacency_;
    std::vector<Edge> edges_;
};

namespace detail {

inline void check_vertex_set(const Graph& g, std::span<const Vertex> a)
{
    for (Vertex v : a) {
        if (v >= g.size()) {
            throw InputError("vertex " + std::to_string(v) + " out of range for graph with " +
                             std::to_string(g.size()) + " vertices");
        }
    }
}

inline std::uint64_t neighbor_mask(const Graph& g, Vertex v)
{
    std::uint64_t m = 0;
    for (Vertex u : g.neighbors(v)) {
        m |= std::uint64_t{1} << u;
    }
    return m;
}

inline double mask_weight(std::uint64_t mask, std::span<const double> weight)
{
    double total = 0.0;
    while (mask != 0) {
        total += weight[static_cast<std::size_t>(std::countr_zero(mask))];
        mask &= mask - 1;
    }
    return total;
}

inline VertexSet mask_to_set(std::uint64_t mask)
{
    VertexSet out;
    while (mask != 0) {
        out.push_back(static_cast<Vertex>(std::countr_zero(mask)));
        mask &= mask - 1;
    }
    return out;
}

}  // namespace detail

/// E(A) = { i : <i,j> in E for some j in A }.
inline VertexSet neighborhood(const Graph& g, std::span<const Vertex> a)
{
    detail::check_vertex_set(g, a);
    std::vector<char> hit(g.size(), 0);
    for (Vertex v : a) {
        for (Vertex u : g.neighbors(v)) {
            hit[u] = 1;
        }
    }
    VertexSet out;
    for (Vertex i = 0; i < g.size(); ++i) {
        if (hit[i]) {
            out.push_back(i);
        }
    }
    return out;
}

/// True iff no two members of `a` are adjacent. The empty set counts as independent here;
/// callers that need the paper-style "nonempty" convention check that separately.
inline bool is_independent(const Graph& g, std::span<const Vertex> a)
{
    detail::check_vertex_set(g, a);
    for (std::size_t x = 0; x < a.size(); ++x) {
        for (std::size_t y = x + 1; y < a.size(); ++y) {
            if (g.adjacent(a[x], a[y])) {
                return false;
            }
        }
    }
    return true;
}

inline bool is_connected(const Graph& g)
{
    if (g.size() == 0) {
        return true;
    }
    std::vector<char> seen(g.size(), 0);
    std::vector<Vertex> stack{0};
    seen[0] = 1;
    std::size_t reached = 1;
    while (!stack.empty()) {
        const Vertex v = stack.back();
        stack.pop_back();
        for (Vertex u : g.neighbors(v)) {
            if (!seen[u]) {
                seen[u] = 1;
                ++reached;
                stack.push_back(u);
            }
        }
    }
    return reached == g.size();
}

struct Bipartition {
    VertexSet left;
    VertexSet right;
};

/// Result of a BFS 2-coloring: either a bipartition or an odd cycle certificate.
struct TwoColoring {
    std::optional<Bipartition> bipartition;
    /// Closed walk v0, v1, ..., vk with <vk, v0> an edge and k+1 odd. Present iff not bipartite.
    std::optional<std::vector<Vertex>> odd_cycle;
};

inline TwoColoring two_coloring(const Graph& g)
{
    const std::size_t n = g.size();
    constexpr std::size_t unset = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> depth(n, unset);
    std::vector<Vertex> parent(n, 0);

    for (Vertex root = 0; root < n; ++root) {
        if (depth[root] != unset) {
            continue;
        }
        depth[root] = 0;
        parent[root] = root;
        std::queue<Vertex> frontier;
        frontier.push(root);
        while (!frontier.empty()) {
            const Vertex v = frontier.front();
            frontier.pop();
            for (Vertex u : g.neighbors(v)) {
                if (depth[u] == unset) {
                    depth[u] = depth[v] + 1;
                    parent[u] = v;
                    frontier.push(u);
                } else if ((depth[u] % 2) == (depth[v] % 2)) {
                    // Conflict edge <v,u>: climb both BFS branches to their common ancestor.
                    std::vector<Vertex> left{v};
                    std::vector<Vertex> right{u};
                    Vertex a = v;
                    Vertex b = u;
                    while (depth[a] > depth[b]) {
                        a = parent[a];
                        left.push_back(a);
                    }
                    while (depth[b] > depth[a]) {
                        b = parent[b];
                        right.push_back(b);
                    }
                    while (a != b) {
                        a = parent[a];
                        b = parent[b];
                        left.push_back(a);
                        right.push_back(b);
                    }
                    right.pop_back();  // common ancestor already in `left`
                    std::vector<Vertex> cycle(left.rbegin(), left.rend());
                    cycle.insert(cycle.end(), right.begin(), right.end());
                    return TwoColoring{std::nullopt, std::move(cycle)};
                }
            }
        }
    }

    Bipartition parts;
    for (Vertex v = 0; v < n; ++v) {
        (depth[v] % 2 == 0 ? parts.left : parts.right).push_back(v);
    }
    return TwoColoring{std::move(parts), std::nullopt};
}

inline bool is_bipartite(const Graph& g) { return two_coloring(g).bipartition.has_value(); }

inline std::optional<Bipartition> bipartition(const Graph& g) { return two_coloring(g).bipartition; }

/// Result of max_deficit. `vacuous` is set (and `value` is -infinity) when the searched
/// set is empty, so there is no independent subset to take the maximum over.
struct DeficitResult {
    double value = -std::numeric_limits<double>::infinity();
    VertexSet witness;
    bool vacuous = true;
};

/// max { lambda(I) - lambda(E(I)) : I nonempty independent subset of s }, with a maximizer.
///
/// Exact depth-first branch and bound over the vertices of `s`. A partial set I with
/// remaining candidates C is pruned when lambda(I) + lambda(C) - lambda(E(I)) cannot
/// beat the incumbent. Exponential in the worst case; intended for graphs of up to a
/// few dozen vertices. Requires |V| <= 64.
///
/// If `stop_at` is given the search returns as soon as the incumbent reaches it; the
/// value is then a lower bound on the maximum (still a valid deficit of the witness).
inline DeficitResult max_deficit(const Graph& g, std::span<const double> lambda, std::span<const Vertex> s,
                                 std::optional<double> stop_at = std::nullopt)
{
    if (lambda.size() != g.size()) {
        throw InputError("lambda has " + std::to_string(lambda.size()) + " entries, graph has " +
                         std::to_string(g.size()) + " vertices");
    }
    for (std::size_t i = 0; i < lambda.size(); ++i) {
        if (!(lambda[i] > 0.0) || !std::isfinite(lambda[i])) {
            throw InputError("lambda[" + std::to_string(i) + "] must be > 0 and finite");
        }
    }
    if (g.size() > 64) {
        throw InputError("max_deficit supports at most 64 vertices");
    }
    detail::check_vertex_set(g, s);

    DeficitResult result;
    if (s.empty()) {
        return result;
    }
    result.vacuous = false;

    std::vector<std::uint64_t> nbr(g.size());
    for (Vertex v = 0; v < g.size(); ++v) {
        nbr[v] = detail::neighbor_mask(g, v);
    }
    std::uint64_t candidates = 0;
    for (Vertex v : s) {
        candidates |= std::uint64_t{1} << v;
    }

    std::uint64_t best_set = 0;
    bool done = false;

    auto search = [&](auto&& self, std::uint64_t in_set, std::uint64_t in_nbhd, double lam_set, double lam_nbhd,
                      std::uint64_t cand) -> void {
        while (cand != 0 && !done) {
            if (lam_set + detail::mask_weight(cand, lambda) - lam_nbhd <= result.value) {
                return;
            }
            const auto v = static_cast<Vertex>(std::countr_zero(cand));
            const std::uint64_t bit = std::uint64_t{1} << v;
            cand &= ~bit;

            // Include v.
            const std::uint64_t added_nbhd = nbr[v] & ~in_nbhd;
            const double set_w = lam_set + lambda[v];
            const double nbhd_w = lam_nbhd + detail::mask_weight(added_nbhd, lambda);
            const std::uint64_t next_set = in_set | bit;
            if (set_w - nbhd_w > result.value) {
                result.value = set_w - nbhd_w;
                best_set = next_set;
                if (stop_at && result.value >= *stop_at) {
                    done = true;
                    return;
                }
            }
            const std::uint64_t next_cand = cand & ~nbr[v];
            if (next_cand != 0) {
                self(self, next_set, in_nbhd | added_nbhd, set_w, nbhd_w, next_cand);
            }
            // Exclude v: continue the loop with v removed from the candidates.
        }
    };
    search(search, 0, 0, 0.0, 0.0, candidates);

    result.witness = detail::mask_to_set(best_set);
    return result;
}

/// G(n, p): each of the n(n-1)/2 pairs, in lexicographic order, is kept iff one uniform
/// draw falls below p. Exactly one draw per pair, so the graph is a pure function of the
/// stream state.
inline Graph erdos_renyi(std::size_t n, double p, Rng& rng)
{
    if (n == 0) {
        throw InputError("erdos_renyi requires n >= 1");
    }
    if (!(p >= 0.0 && p <= 1.0)) {
        throw InputError("erdos_renyi requires 0 <= p <= 1");
    }
    std::vector<Edge> edges;
    for (Vertex i = 0; i < n; ++i) {
        for (Vertex j = i + 1; j < n; ++j) {
            if (rng.uniform() < p) {
                edges.emplace_back(i, j);
            }
        }
    }
    return Graph(n, std::move(edges));
}

/// Small named graphs used throughout the tests and docs.
namespace graphs {

inline Graph complete(std::size_t n)
{
    std::vector<Edge> edges;
    for (Vertex i = 0; i < n; ++i) {
        for (Vertex j = i + 1; j < n; ++j) {
            edges.emplace_back(i, j);
        }
    }
    return Graph(n, std::move(edges));
}

inline Graph path(std::size_t n)
{
    std::vector<Edge> edges;
    for (Vertex i = 0; i + 1 < n; ++i) {
        edges.emplace_back(i, i + 1);
    }
    return Graph(n, std::move(edges));
}

inline Graph cycle(std::size_t n)
{
    std::vector<Edge> edges;
    for (Vertex i = 0; i < n; ++i) {
        edges.emplace_back(i, (i + 1) % n);
    }
    return Graph(n, std::move(edges));
}

/// Triangle 0-1-2 with pendant vertex 3 attached to 0.
/// Center 0 joined to 1..n-1.
inline Graph star(std::size_t n)
{
    std::vector<Edge> edges;
    for (Vertex v = 1; v < n; ++v) {
        edges.emplace_back(0, v);
    }
    return Graph(n, std::move(edges));
}

inline Graph paw() { return Graph(4, {{0, 1}, {0, 2}, {1, 2}, {0, 3}}); }

}  // namespace graphs

}  // namespace matchnet

#endif  // MATCHNET_GRAPH_HPP
