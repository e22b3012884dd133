// matchnet: command-line front end for the stochastic matching simulator.
//
//   matchnet check      <model.json>            stability verdict (exit 0 stable, 2 unstable, 1 error)
//   matchnet bounds     <model.json>            moment bounds report
//   matchnet simulate   <model.json>            one trajectory as CSV
//   matchnet ensemble   <model.json>            independent runs, summary JSON
//   matchnet oracle     <model.json>            truncated exact stationary moments
//   matchnet experiment <preset>                simulation study artifacts in --out-dir
//   matchnet gen-graph                          Erdos-Renyi graph JSON

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "matchnet/matchnet.hpp"

namespace fs = std::filesystem;
using namespace matchnet;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_error = 1;
constexpr int exit_unstable = 2;

struct Globals {
    std::uint64_t seed = 1;
    std::string format;
    std::string out;
    std::string out_dir = "out";
    std::size_t jobs = 1;
};

void emit(const Globals& g, const std::string& text)
{
    if (g.out.empty() || g.out == "-") {
        std::cout << text;
    } else {
        write_text_file(g.out, text);
    }
}

std::string set_to_string(const VertexSet& s)
{
    std::string out = "{";
    for (std::size_t k = 0; k < s.size(); ++k) {
        out += (k ? "," : "") + std::to_string(s[k]);
    }
    return out + "}";
}

std::string json_text(const json& j) { return j.dump(2) + "\n"; }

/// Loads and validates a model; violations are reported on stderr and turned into an error.
ModelFile load_valid_model(const std::string& path)
{
    ModelFile mf = load_model(path);
    const auto violations = validate(mf.spec);
    if (!violations.empty()) {
        std::string msg = path + ": invalid model";
        for (const auto& v : violations) {
            msg += "\n  - " + v;
        }
        throw InputError(msg);
    }
    return mf;
}

int cmd_check(const Globals& g, const std::string& path)
{
    const ModelFile mf = load_valid_model(path);
    const ModelSpec& spec = mf.spec;
    const bool connected = is_connected(spec.graph);
    const auto coloring = two_coloring(spec.graph);
    const bool stabilizable = is_stabilizable(spec.graph, spec.gamma);
    const auto nc = check_ncond(spec);

    if (g.format == "json") {
        json j{{"connected", connected},
               {"bipartite", coloring.bipartition.has_value()},
               {"stabilizable", stabilizable},
               {"ncond_holds", nc.holds},
               {"eta", nc.eta},
               {"witness", nc.witness ? json(*nc.witness) : json(nullptr)}};
        if (nc.witness) {
            j["witness_deficit"] = -nc.eta;
        }
        emit(g, json_text(j));
    } else {
        std::ostringstream os;
        os << "connected: " << (connected ? "yes" : "no") << "\n";
        os << "bipartite: " << (coloring.bipartition ? "yes" : "no") << "\n";
        os << "stabilizable: " << (stabilizable ? "yes" : "no") << "\n";
        if (nc.holds) {
            os << "NCOND: holds, eta=" << format_number(nc.eta) << "\n";
        } else {
            os << "NCOND: violated, deficit=" << format_number(-nc.eta) << "\n";
        }
        os << "witness: " << (nc.witness ? set_to_string(*nc.witness) : std::string("none (R^c empty)")) << "\n";
        emit(g, os.str());
    }
    return nc.holds ? exit_ok : exit_unstable;
}

int cmd_bounds(const Globals& g, const std::string& path, std::optional<double> kappa,
               const std::optional<std::string>& policy_name)
{
    const ModelFile mf = load_valid_model(path);
    const PolicyKind policy = policy_name ? parse_policy(*policy_name) : mf.policy;
    const BoundsReport r = compute_bounds(mf.spec, policy, kappa);
    if (g.format == "json") {
        emit(g, json_text(bounds_to_json(r)));
        return exit_ok;
    }
    auto show = [](const std::optional<double>& v, const std::string& reason) {
        return v ? format_number(*v) : "n/a (" + reason + ")";
    };
    std::ostringstream os;
    os << "NCOND: " << (r.ncond_holds ? "holds" : "violated") << "\n";
    os << "eta: " << format_number(r.eta) << "\n";
    os << "kappa: " << show(r.kappa, "needs 0 < kappa < lambda(V); default eta/2") << "\n";
    os << "u_kappa: " << show(r.u_kappa, "needs 0 < kappa < lambda(V); default eta/2") << "\n";
    os << "w_check: " << format_number(r.w_check) << "\n";
    os << "B: " << format_number(r.noise_bound) << "\n";
    os << "rho_tilde:";
    for (double v : r.rho_tilde) {
        os << " " << format_number(v);
    }
    os << "\n";
    os << "lower_mean: " << show(r.lower_mean, r.lower_reason) << "\n";
    os << "upper_mean: " << show(r.upper_mean, r.upper_reason) << "\n";
    os << "upper_variance: " << show(r.upper_variance, r.upper_reason) << "\n";
    emit(g, os.str());
    return exit_ok;
}

std::string trajectory_svg(const TrajectoryRecord& rec, const std::string& title)
{
    svg::Series mq{"max queue", {}, {}};
    svg::Series dep{"departures", {}, {}};
    for (std::size_t k = 0; k < rec.event_times.size(); ++k) {
        mq.x.push_back(rec.event_times[k]);
        mq.y.push_back(static_cast<double>(rec.max_queue_path[k]));
        dep.x.push_back(rec.event_times[k]);
        dep.y.push_back(static_cast<double>(rec.cumulative_departures[k]));
    }
    return svg::line_chart(title, {mq, dep});
}

int cmd_simulate(const Globals& g, const std::string& path, const std::optional<std::string>& policy_name,
                 double horizon, std::optional<double> grid, std::uint64_t max_events, const std::string& svg_path)
{
    const ModelFile mf = load_valid_model(path);
    SimConfig cfg;
    cfg.spec = mf.spec;
    cfg.policy = policy_name ? parse_policy(*policy_name) : mf.policy;
    cfg.horizon = horizon;
    cfg.seed = g.seed;
    cfg.max_events = max_events;
    const TrajectoryRecord rec = run(cfg);
    emit(g, trajectory_csv(rec, grid));
    if (!svg_path.empty()) {
        write_text_file(svg_path, trajectory_svg(rec, "trajectory (" + std::string(to_string(cfg.policy)) + ")"));
    }
    if (rec.truncated) {
        std::cerr << "warning: max_events reached before the horizon\n";
    }
    return exit_ok;
}

std::string histogram_csv(const std::vector<std::size_t>& counts)
{
    std::string out = "max_queue,count\n";
    for (std::size_t k = 0; k < counts.size(); ++k) {
        out += std::to_string(k) + "," + std::to_string(counts[k]) + "\n";
    }
    return out;
}

int cmd_ensemble(const Globals& g, const std::string& path, const std::optional<std::string>& policy_name,
                 std::size_t runs, double horizon, const std::string& hist_csv, const std::string& svg_path)
{
    const ModelFile mf = load_valid_model(path);
    SimConfig cfg;
    cfg.spec = mf.spec;
    cfg.policy = policy_name ? parse_policy(*policy_name) : mf.policy;
    cfg.horizon = horizon;
    cfg.seed = g.seed;
    cfg.record_paths = false;
    const EnsembleResult res = run_ensemble(cfg, runs, g.jobs);
    json j = ensemble_summary_to_json(res.summary);
    j["policy"] = std::string(to_string(cfg.policy));
    j["seed"] = g.seed;
    emit(g, json_text(j));
    if (!hist_csv.empty()) {
        write_text_file(hist_csv, histogram_csv(res.summary.max_queue_histogram));
    }
    if (!svg_path.empty()) {
        write_text_file(svg_path, svg::histogram("terminal max queue", res.summary.max_queue_histogram));
    }
    return exit_ok;
}

int cmd_oracle(const Globals& g, const std::string& path, const std::optional<std::string>& policy_name,
               std::int64_t level)
{
    const ModelFile mf = load_valid_model(path);
    const PolicyKind policy = policy_name ? parse_policy(*policy_name) : mf.policy;
    const TruncatedChain chain = build_chain(mf.spec, policy, level);
    const StationaryResult st = stationary(chain);
    const StationaryMoments m = stationary_moments(chain, st.pi);
    const json j{{"states", chain.size()},
                 {"N", level},
                 {"mean_max", m.mean_max},
                 {"var_max", m.variance_max},
                 {"mean_total", m.mean_total},
                 {"residual", st.residual}};
    if (g.format == "pretty") {
        std::ostringstream os;
        os << "states: " << chain.size() << "\nN: " << level << "\nmean_max: " << format_number(m.mean_max)
           << "\nvar_max: " << format_number(m.variance_max) << "\nmean_total: " << format_number(m.mean_total)
           << "\nresidual: " << format_number(st.residual) << "\n";
        emit(g, os.str());
    } else {
        emit(g, json_text(j));
    }
    return exit_ok;
}

json params_to_json(const ExperimentParams& p)
{
    return json{{"preset", std::string(to_string(p.preset))},
                {"n_vertices", p.n_vertices},
                {"p", p.edge_probability},
                {"runs", p.runs},
                {"horizon", p.horizon},
                {"reneging_probability", p.reneging_probability},
                {"reneging_rate", p.reneging_rate}};
}

std::string pair_name(std::size_t r)
{
    std::string s = std::to_string(r);
    return "pair_" + std::string(s.size() < 3 ? 3 - s.size() : 0, '0') + s;
}

int run_paired_preset(const Globals& g, const ExperimentParams& params)
{
    const fs::path dir(g.out_dir);
    fs::create_directories(dir);
    const bool with_trajectories = params.preset == Preset::MwVsPriority;
    const auto pairs = run_paired(params, g.seed, g.jobs, with_trajectories);

    std::string table =
        "pair,mw_max_queue,priority_max_queue,mw_cum_reward,priority_cum_reward,mw_departures,priority_departures,"
        "mw_reneged,priority_reneged\n";
    std::vector<double> mw_q;
    std::vector<double> pr_q;
    std::size_t mw_le = 0;
    double mw_dep = 0.0;
    double pr_dep = 0.0;
    double mw_rew = 0.0;
    double pr_rew = 0.0;
    for (std::size_t r = 0; r < pairs.size(); ++r) {
        const auto& p = pairs[r];
        const auto a = p.max_weight.final_state.max_norm();
        const auto b = p.priority.final_state.max_norm();
        mw_q.push_back(static_cast<double>(a));
        pr_q.push_back(static_cast<double>(b));
        mw_le += a <= b ? 1 : 0;
        mw_dep += static_cast<double>(p.max_weight.departures());
        pr_dep += static_cast<double>(p.priority.departures());
        mw_rew += p.max_weight.total_reward;
        pr_rew += p.priority.total_reward;
        table += std::to_string(r) + "," + std::to_string(a) + "," + std::to_string(b) + "," +
                 format_number(p.max_weight.total_reward) + "," + format_number(p.priority.total_reward) + "," +
                 std::to_string(p.max_weight.departures()) + "," + std::to_string(p.priority.departures()) + "," +
                 std::to_string(p.max_weight.reneged) + "," + std::to_string(p.priority.reneged) + "\n";
    }
    write_text_file((dir / "comparison.csv").string(), table);

    const FiveNumber mw_box = five_number(mw_q);
    const FiveNumber pr_box = five_number(pr_q);
    const auto n = static_cast<double>(pairs.size());
    const json summary{{"params", params_to_json(params)},
                       {"seed", g.seed},
                       {"max_weight", {{"max_queue", five_number_to_json(mw_box)},
                                       {"mean_departures", mw_dep / n},
                                       {"mean_cum_reward", mw_rew / n}}},
                       {"priority", {{"max_queue", five_number_to_json(pr_box)},
                                     {"mean_departures", pr_dep / n},
                                     {"mean_cum_reward", pr_rew / n}}},
                       {"pairs_mw_max_queue_le_priority", mw_le}};
    write_text_file((dir / "summary.json").string(), json_text(summary));
    write_text_file((dir / "boxplot.svg").string(),
                    svg::box_plot("terminal max queue", {{"Priority", pr_box}, {"Max-Weight", mw_box}}));

    if (with_trajectories) {
        fs::create_directories(dir / "trajectories");
        fs::create_directories(dir / "instances");
        const double grid = params.horizon / 200.0;
        for (std::size_t r = 0; r < pairs.size(); ++r) {
            const auto& p = pairs[r];
            const std::string stem = pair_name(r);
            write_text_file((dir / "instances" / (stem + ".json")).string(), json_text(model_to_json(p.spec)));
            write_text_file((dir / "trajectories" / (stem + "_max_weight.csv")).string(),
                            trajectory_csv(p.max_weight, grid));
            write_text_file((dir / "trajectories" / (stem + "_priority.csv")).string(),
                            trajectory_csv(p.priority, grid));
        }
        if (!pairs.empty()) {
            write_text_file((dir / "trajectory_pair_000.svg").string(),
                            svg::line_chart("max queue, pair 0",
                                            {svg::Series{"Priority", pairs[0].priority.event_times,
                                                         std::vector<double>(pairs[0].priority.max_queue_path.begin(),
                                                                             pairs[0].priority.max_queue_path.end())},
                                             svg::Series{"Max-Weight", pairs[0].max_weight.event_times,
                                                         std::vector<double>(pairs[0].max_weight.max_queue_path.begin(),
                                                                             pairs[0].max_weight.max_queue_path.end())}}));
        }
    }
    return exit_ok;
}

int run_histogram_preset(const Globals& g, const ExperimentParams& params)
{
    const fs::path dir(g.out_dir);
    fs::create_directories(dir);
    const EnsembleExperiment ex = run_histogram_experiment(params, g.seed, g.jobs);
    const BoundsReport bounds = compute_bounds(ex.spec, ex.policy);

    write_text_file((dir / "instance.json").string(), json_text(model_to_json(ex.spec, ex.policy)));
    write_text_file((dir / "bounds.json").string(), json_text(bounds_to_json(bounds)));
    json summary = ensemble_summary_to_json(ex.result.summary);
    summary["params"] = params_to_json(params);
    summary["seed"] = g.seed;
    summary["policy"] = std::string(to_string(ex.policy));
    write_text_file((dir / "summary.json").string(), json_text(summary));
    write_text_file((dir / "histogram.csv").string(), histogram_csv(ex.result.summary.max_queue_histogram));

    std::vector<std::pair<std::string, double>> markers;
    if (bounds.lower_mean) {
        markers.emplace_back("lower bound", *bounds.lower_mean);
    }
    if (bounds.upper_mean && params.preset == Preset::HistogramMl) {
        markers.emplace_back("upper bound", *bounds.upper_mean);
    }
    write_text_file((dir / "histogram.svg").string(),
                    svg::histogram("terminal max queue at t=" + format_number(params.horizon),
                                   ex.result.summary.max_queue_histogram, markers));
    return exit_ok;
}

int cmd_experiment(const Globals& g, const std::string& preset_name, const std::string& scale_name,
                   std::optional<std::size_t> n, std::optional<double> p, std::optional<std::size_t> runs,
                   std::optional<double> horizon, std::optional<double> reneging_rate)
{
    const Preset preset = parse_preset(preset_name);
    if (scale_name != "desk" && scale_name != "paper") {
        throw InputError("--scale must be desk or paper");
    }
    ExperimentParams params = preset_defaults(preset, scale_name == "paper" ? Scale::Paper : Scale::Desk);
    if (n) {
        params.n_vertices = *n;
    }
    if (p) {
        params.edge_probability = *p;
    }
    if (runs) {
        params.runs = *runs;
    }
    if (horizon) {
        params.horizon = *horizon;
    }
    if (reneging_rate) {
        params.reneging_rate = *reneging_rate;
    }
    if (preset == Preset::MwVsPriority || preset == Preset::Boxplot) {
        return run_paired_preset(g, params);
    }
    return run_histogram_preset(g, params);
}

int cmd_gen_graph(const Globals& g, std::size_t n, double p, bool connected)
{
    Rng rng(g.seed);
    for (std::size_t attempt = 0; attempt < 1'000'000; ++attempt) {
        Graph graph = erdos_renyi(n, p, rng);
        if (!connected || is_connected(graph)) {
            emit(g, json_text(graph_to_json(graph)));
            return exit_ok;
        }
    }
    throw SizeError("no connected graph found in 10^6 draws");
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"matchnet: stochastic matching models with reneging under Max-Weight"};
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--seed", g.seed, "64-bit random seed")->capture_default_str();
    app.add_option("--format", g.format, "Output format: json, csv or pretty");
    app.add_option("--out", g.out, "Output file (default: stdout)");
    app.add_option("--out-dir", g.out_dir, "Output directory for experiment artifacts")->capture_default_str();
    app.add_option("--jobs", g.jobs, "Worker threads for ensembles")
        ->envname("MATCHNET_JOBS")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();

    std::string model_path;
    std::optional<std::string> policy;
    std::optional<double> kappa;
    double horizon = 100.0;
    std::optional<double> grid;
    std::uint64_t max_events = 1'000'000'000;
    std::string svg_path;
    std::string hist_csv;
    std::size_t runs = 100;
    std::int64_t level = 40;
    std::string preset;
    std::string scale = "desk";
    std::optional<std::size_t> exp_n;
    std::optional<double> exp_p;
    std::optional<std::size_t> exp_runs;
    std::optional<double> exp_horizon;
    std::optional<double> reneging_rate;
    std::size_t gen_n = 30;
    double gen_p = 0.1;
    bool gen_connected = false;

    auto* check = app.add_subcommand("check", "Stability verdict: exit 0 stable, 2 unstable, 1 error");
    check->add_option("model", model_path, "Model JSON file")->required();

    auto* bounds = app.add_subcommand("bounds", "Moment bounds report");
    bounds->add_option("model", model_path, "Model JSON file")->required();
    bounds->add_option("--kappa", kappa, "kappa in (0, lambda(V)); default eta/2");
    bounds->add_option("--policy", policy, "max_weight, match_longest or priority (default: from model)");

    auto* simulate = app.add_subcommand("simulate", "Simulate one trajectory, CSV output");
    simulate->add_option("model", model_path, "Model JSON file")->required();
    simulate->add_option("--policy", policy, "max_weight, match_longest or priority (default: from model)");
    simulate->add_option("--horizon", horizon, "Time horizon T")->capture_default_str();
    simulate->add_option("--grid", grid, "Downsample output to this time step");
    simulate->add_option("--max-events", max_events, "Event cap")->capture_default_str();
    simulate->add_option("--svg", svg_path, "Also write an SVG line plot here");

    auto* ensemble = app.add_subcommand("ensemble", "Independent runs, summary JSON");
    ensemble->add_option("model", model_path, "Model JSON file")->required();
    ensemble->add_option("--policy", policy, "max_weight, match_longest or priority (default: from model)");
    ensemble->add_option("--runs", runs, "Number of runs")->capture_default_str();
    ensemble->add_option("--horizon", horizon, "Time horizon T")->capture_default_str();
    ensemble->add_option("--hist-csv", hist_csv, "Also write the terminal max-queue histogram as CSV");
    ensemble->add_option("--svg", svg_path, "Also write an SVG histogram");

    auto* oracle = app.add_subcommand("oracle", "Exact stationary moments of the truncated chain");
    oracle->add_option("model", model_path, "Model JSON file")->required();
    oracle->add_option("--policy", policy, "max_weight, match_longest or priority (default: from model)");
    oracle->add_option("--level", level, "Truncation level N (||x||_inf <= N)")->capture_default_str();

    auto* experiment = app.add_subcommand("experiment", "Simulation study presets");
    experiment->add_option("preset", preset, "mw_vs_priority, boxplot, histogram_ml or histogram_noisy")->required();
    experiment->add_option("--scale", scale, "desk or paper")->capture_default_str();
    experiment->add_option("--n", exp_n, "Override |V|");
    experiment->add_option("--p", exp_p, "Override the edge probability");
    experiment->add_option("--runs", exp_runs, "Override the number of runs");
    experiment->add_option("--horizon", exp_horizon, "Override the horizon");
    experiment->add_option("--reneging-rate", reneging_rate, "gamma(i) for reneging classes (default 1)");

    auto* gen_graph = app.add_subcommand("gen-graph", "Erdos-Renyi graph JSON");
    gen_graph->add_option("--n", gen_n, "Number of vertices")->capture_default_str();
    gen_graph->add_option("--p", gen_p, "Edge probability")->capture_default_str();
    gen_graph->add_flag("--connected", gen_connected, "Redraw until connected");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? exit_ok : exit_error;
    }

    try {
        if (check->parsed()) {
            return cmd_check(g, model_path);
        }
        if (bounds->parsed()) {
            return cmd_bounds(g, model_path, kappa, policy);
        }
        if (simulate->parsed()) {
            return cmd_simulate(g, model_path, policy, horizon, grid, max_events, svg_path);
        }
        if (ensemble->parsed()) {
            return cmd_ensemble(g, model_path, policy, runs, horizon, hist_csv, svg_path);
        }
        if (oracle->parsed()) {
            return cmd_oracle(g, model_path, policy, level);
        }
        if (experiment->parsed()) {
            return cmd_experiment(g, preset, scale, exp_n, exp_p, exp_runs, exp_horizon, reneging_rate);
        }
        if (gen_graph->parsed()) {
            return cmd_gen_graph(g, gen_n, gen_p, gen_connected);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_error;
    }
    return exit_error;
}
