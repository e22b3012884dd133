#ifndef MATCHNET_IO_HPP
#define MATCHNET_IO_HPP

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "matchnet/bounds.hpp"
#include "matchnet/engine.hpp"
#include "matchnet/errors.hpp"
#include "matchnet/graph.hpp"
#include "matchnet/model.hpp"
#include "matchnet/noise.hpp"
#include "matchnet/policy.hpp"

namespace matchnet {

using json = nlohmann::json;

/// Shortest round-trip decimal representation.
inline std::string format_number(double v)
{
    char buf[64];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{}) {
        throw NumericalError("number formatting failed");
    }
    return std::string(buf, end);
}

inline std::string format_number(std::int64_t v) { return std::to_string(v); }

/// JSON has no infinities; map non-finite values to null.
inline json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

// ---------------------------------------------------------------- graph

inline json graph_to_json(const Graph& g)
{
    json edges = json::array();
    for (const auto& [a, b] : g.edges()) {
        edges.push_back({a, b});
    }
    return json{{"n", g.size()}, {"edges", std::move(edges)}};
}

inline Graph graph_from_json(const json& j)
{
    if (!j.is_object() || !j.contains("n") || !j.contains("edges")) {
        throw InputError("graph: expected an object with keys \"n\" and \"edges\"");
    }
    const auto n = j.at("n").get<std::size_t>();
    std::vector<Edge> edges;
    for (const auto& e : j.at("edges")) {
        if (!e.is_array() || e.size() != 2) {
            throw InputError("graph: every edge must be a pair [i, j]");
        }
        edges.emplace_back(e[0].get<Vertex>(), e[1].get<Vertex>());
    }
    return Graph(n, std::move(edges));
}

// ---------------------------------------------------------------- noise

inline json noise_to_json(const NoiseSpec& ns)
{
    if (const auto* d = std::get_if<Dirac>(&ns.law())) {
        return json{{"kind", "dirac"}, {"c", d->c}};
    }
    const auto& u = std::get<Uniform>(ns.law());
    return json{{"kind", "uniform"}, {"a", u.a}, {"b", u.b}};
}

inline NoiseSpec noise_from_json(const json& j)
{
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "dirac") {
        return NoiseSpec::dirac(j.value("c", 0.0));
    }
    if (kind == "uniform") {
        return NoiseSpec::uniform(j.at("a").get<double>(), j.at("b").get<double>());
    }
    throw InputError("noise: unknown kind '" + kind + "' (expected dirac or uniform)");
}

// ---------------------------------------------------------------- model

inline std::string pair_key(const OrderedPair& p) { return std::to_string(p.arriving) + "," + std::to_string(p.stored); }

inline OrderedPair parse_pair_key(const std::string& key)
{
    const auto comma = key.find(',');
    auto parse = [&key](std::string_view part) {
        std::size_t v = 0;
        const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
        if (ec != std::errc{} || ptr != part.data() + part.size()) {
            throw InputError("malformed ordered-pair key '" + key + "' (expected \"j,i\")");
        }
        return v;
    };
    if (comma == std::string::npos) {
        throw InputError("malformed ordered-pair key '" + key + "' (expected \"j,i\")");
    }
    const std::string_view view(key);
    return OrderedPair{parse(view.substr(0, comma)), parse(view.substr(comma + 1))};
}

/// A model file: the model plus the policy it should be run under.
struct ModelFile {
    ModelSpec spec;
    PolicyKind policy = PolicyKind::MaxWeight;
};

/// Reads the pair-keyed table `key`. Listed pairs are taken as given; a "default" entry fills
/// every edge direction not listed. An absent table means the default for every pair.
template <class T, class Parse>
std::map<OrderedPair, T> read_pair_table(const json& j, const char* key, const Graph& g, const T& fallback,
                                         Parse&& parse)
{
    std::map<OrderedPair, T> table;
    std::optional<T> def;
    if (!j.contains(key)) {
        def = fallback;
    } else {
        for (const auto& [k, v] : j.at(key).items()) {
            if (k == "default") {
                def = parse(v);
            } else {
                table[parse_pair_key(k)] = parse(v);
            }
        }
    }
    if (def) {
        for (const auto& [a, b] : g.edges()) {
            table.try_emplace(OrderedPair{a, b}, *def);
            table.try_emplace(OrderedPair{b, a}, *def);
        }
    }
    return table;
}

/// Parses a model document. Structural problems throw InputError; invariant violations
/// (e.g. missing reward directions) are left for validate() to report.
inline ModelFile model_from_json(const json& j)
{
    if (!j.is_object()) {
        throw InputError("model: expected a JSON object");
    }
    ModelFile mf;
    ModelSpec& spec = mf.spec;
    try {
        spec.graph = graph_from_json(j.at("graph"));
        spec.lambda = j.at("lambda").get<std::vector<double>>();
        spec.gamma = j.contains("gamma") ? j.at("gamma").get<std::vector<double>>()
                                         : std::vector<double>(spec.graph.size(), 0.0);
        spec.rewards = read_pair_table<double>(j, "rewards", spec.graph, 0.0,
                                               [](const json& v) { return v.get<double>(); });
        spec.noise = read_pair_table<NoiseSpec>(j, "noise", spec.graph, NoiseSpec::none(),
                                                [](const json& v) { return noise_from_json(v); });
        if (j.contains("policy")) {
            mf.policy = parse_policy(j.at("policy").at("kind").get<std::string>());
        }
    } catch (const json::exception& e) {
        throw InputError(std::string("model: ") + e.what());
    }
    return mf;
}

inline json model_to_json(const ModelSpec& spec, std::optional<PolicyKind> policy = std::nullopt)
{
    json rewards = json::object();
    for (const auto& [p, w] : spec.rewards) {
        rewards[pair_key(p)] = w;
    }
    json noise = json::object();
    for (const auto& [p, ns] : spec.noise) {
        noise[pair_key(p)] = noise_to_json(ns);
    }
    json j{{"graph", graph_to_json(spec.graph)},
           {"lambda", spec.lambda},
           {"gamma", spec.gamma},
           {"rewards", std::move(rewards)},
           {"noise", std::move(noise)}};
    if (policy) {
        j["policy"] = json{{"kind", std::string(to_string(*policy))}};
    }
    return j;
}

inline json parse_json_text(const std::string& text, const std::string& origin)
{
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw InputError(origin + ": " + e.what());
    }
}

inline json read_json_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot open '" + path + "'");
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_json_text(ss.str(), path);
}

inline ModelFile load_model(const std::string& path) { return model_from_json(read_json_file(path)); }

// ---------------------------------------------------------------- reports

inline json bounds_to_json(const BoundsReport& r)
{
    auto opt = [](const std::optional<double>& v) { return v ? finite_or_null(*v) : json(nullptr); };
    json rho = json::array();
    for (double v : r.rho_tilde) {
        rho.push_back(finite_or_null(v));
    }
    return json{{"ncond_holds", r.ncond_holds},
                {"eta", r.eta},
                {"kappa", opt(r.kappa)},
                {"u_kappa", opt(r.u_kappa)},
                {"w_check", r.w_check},
                {"B", r.noise_bound},
                {"rho_tilde", std::move(rho)},
                {"lower_mean", opt(r.lower_mean)},
                {"upper_mean", opt(r.upper_mean)},
                {"upper_variance", opt(r.upper_variance)},
                {"applicability",
                 {{"requires_ncond", true},
                  {"no_reneging", r.no_reneging},
                  {"bounded_noise", r.bounded_noise},
                  {"lower", r.lower_mean.has_value()},
                  {"upper", r.upper_mean.has_value()},
                  {"lower_reason", r.lower_reason},
                  {"upper_reason", r.upper_reason}}}};
}

inline json five_number_to_json(const FiveNumber& f)
{
    return json{{"min", f.min}, {"q1", f.q1}, {"median", f.median}, {"q3", f.q3}, {"max", f.max}};
}

inline json ensemble_summary_to_json(const EnsembleSummary& s)
{
    return json{{"runs", s.runs},
                {"horizon", s.horizon},
                {"terminal_max_queue", s.terminal_max_queue},
                {"terminal_total_items", s.terminal_total_items},
                {"terminal_cum_reward", s.terminal_cum_reward},
                {"terminal_departures", s.terminal_departures},
                {"terminal_reneged", s.terminal_reneged},
                {"max_queue_quantiles", five_number_to_json(s.max_queue_quantiles)},
                {"mean_max_queue", s.mean_max_queue},
                {"var_max_queue", s.var_max_queue},
                {"max_queue_histogram", s.max_queue_histogram},
                {"truncated_runs", s.truncated_runs}};
}

inline constexpr std::string_view trajectory_csv_header = "t,max_queue,total_items,cum_reward,cum_departures,cum_reneged";

/// Trajectory CSV. Without a grid: one row at t=0 and one per event. With a grid step dt:
/// rows at t = 0, dt, 2dt, ... <= horizon, evaluated from the piecewise-constant paths.
inline std::string trajectory_csv(const TrajectoryRecord& rec, std::optional<double> grid = std::nullopt)
{
    if (rec.event_times.empty()) {
        throw InputError("trajectory has no recorded paths");
    }
    std::string out(trajectory_csv_header);
    out += '\n';
    auto row = [&](double t, std::size_t k) {
        out += format_number(t);
        out += ',';
        out += format_number(rec.max_queue_path[k]);
        out += ',';
        out += format_number(rec.total_items_path[k]);
        out += ',';
        out += format_number(rec.cumulative_reward[k]);
        out += ',';
        out += format_number(rec.cumulative_departures[k]);
        out += ',';
        out += format_number(rec.cumulative_reneged[k]);
        out += '\n';
    };
    if (!grid) {
        for (std::size_t k = 0; k < rec.event_times.size(); ++k) {
            row(rec.event_times[k], k);
        }
        return out;
    }
    if (!(*grid > 0.0)) {
        throw InputError("sample grid step must be positive");
    }
    std::size_t k = 0;
    for (std::size_t step = 0;; ++step) {
        const double t = static_cast<double>(step) * *grid;
        if (t > rec.horizon) {
            break;
        }
        while (k + 1 < rec.event_times.size() && rec.event_times[k + 1] <= t) {
            ++k;
        }
        row(t, k);
    }
    return out;
}

inline void write_text_file(const std::string& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw InputError("cannot write '" + path + "'");
    }
    out << content;
    if (!out) {
        throw InputError("write to '" + path + "' failed");
    }
}

}  // namespace matchnet

#endif  // MATCHNET_IO_HPP
