// Command-line front end: dataset ingestion, uniform-network generation,
// mean-field analysis, and batch simulation with reproducible outputs.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "sky/experiment.hpp"
#include "sky/mean_field.hpp"

namespace {

using nlohmann::json;

std::string params_hash(const json& params) {
    char buf[19];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(sky::fnv1a64(params.dump())));
    return buf;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

sky::RateForm parse_rates(const std::string& s) {
    if (s == "exact") return sky::RateForm::exact_expectation;
    if (s == "closed") return sky::RateForm::closed_form;
    throw CLI::ValidationError("--rates must be 'exact' or 'closed'");
}

sky::DegreeRounding parse_rounding(const std::string& s) {
    if (s == "nearest") return sky::DegreeRounding::nearest;
    if (s == "down") return sky::DegreeRounding::down;
    throw CLI::ValidationError("--rounding must be 'nearest' or 'down'");
}

sky::AdversaryMap parse_map(const std::string& s) {
    if (s == "none") return sky::AdversaryMap::none;
    if (s == "always-one") return sky::AdversaryMap::always_one;
    if (s == "always-zero") return sky::AdversaryMap::always_zero;
    if (s == "split-half") return sky::AdversaryMap::split_half;
    if (s == "random-opinion") return sky::AdversaryMap::random_opinion;
    if (s == "silent") return sky::AdversaryMap::silent;
    throw CLI::ValidationError("unknown adversary mapping: " + s);
}

void emit(const std::string& path, const std::string& content) {
    if (path.empty() || path == "-") {
        std::cout << content;
    } else {
        sky::write_file(path, content);
    }
}

int cmd_ingest(const std::string& input, unsigned min_followees, const std::string& graph_out,
               const std::string& stats_out) {
    const auto report = sky::parse_edge_list(sky::read_file(input));
    const auto filtered = sky::enforce_min_followees(report.graph, min_followees);
    json j;
    j["input"] = input;
    j["min_followees"] = min_followees;
    j["raw"] = sky::stats_json(report.graph.stats());
    j["dropped_duplicate_edges"] = report.duplicate_edges;
    j["dropped_self_loops"] = report.self_loops;
    j["removed_nodes"] = filtered.removed_nodes;
    j["annihilated"] = filtered.annihilated;
    if (filtered.annihilated) {
        std::cout << j.dump(2) << "\n";
        std::cerr << "graph annihilated: no node satisfies the minimum followee count\n";
        return 0;
    }
    j["filtered"] = sky::stats_json(filtered.graph.stats());
    if (!graph_out.empty()) sky::write_file(graph_out, sky::to_edge_list(filtered.graph));
    const std::string text = j.dump(2) + "\n";
    if (!stats_out.empty()) sky::write_file(stats_out, text);
    std::cout << text;
    return 0;
}

int cmd_gen_uniform(std::size_t nodes, std::size_t degree, std::uint64_t seed,
                    const std::string& out) {
    const auto g = sky::generate_uniform(nodes, degree, seed);
    emit(out, sky::to_edge_list(g));
    std::cerr << "uniform network: " << nodes << " nodes, degree " << degree << ", seed " << seed
              << "\n";
    return 0;
}

int cmd_trajectory(const std::string& model, const std::vector<double>& degrees, double c0,
                   double f, const std::string& map_name, double dt, double t_max,
                   const std::string& rates, const std::string& rounding,
                   const std::string& out) {
    const json params{{"kind", "trajectory"}, {"model", model}, {"D", degrees}, {"c0", c0},
                      {"f", f},               {"adversary", map_name}, {"dt", dt},
                      {"t_max", t_max},       {"rates", rates},        {"rounding", rounding}};
    std::string csv = "# spec_hash=" + params_hash(params) + "\nt,c0,D\n";
    for (double D : degrees) {
        sky::MeanFieldState s;
        s.c0 = c0 * (1.0 - f);
        s.c1 = (1.0 - c0) * (1.0 - f);
        s.f1 = f;
        s.mean_degree = D;
        sky::IntegrateOptions opts;
        opts.dt = dt;
        opts.t_max = t_max;
        opts.form = parse_rates(rates);
        opts.rounding = parse_rounding(rounding);
        const auto traj =
            sky::integrate(s, sky::parse_model(model), parse_map(map_name), opts);
        for (const auto& pt : traj)
            csv += fmt(pt.t) + "," + fmt(pt.c0) + "," + fmt(D) + "\n";
    }
    emit(out, csv);
    return 0;
}

int cmd_derivative(const std::string& model, const std::vector<double>& degrees, double f,
                   const std::string& map_name, const std::string& rates,
                   const std::string& rounding, const std::string& out) {
    const json params{{"kind", "derivative"}, {"model", model},       {"D", degrees},
                      {"f", f},               {"adversary", map_name}, {"rates", rates},
                      {"rounding", rounding}};
    std::string csv = "# spec_hash=" + params_hash(params) + "\nc0,dc0dt,D\n";
    for (double D : degrees) {
        for (int i = 0; i <= 1000; ++i) {
            const double c0 = (1.0 - f) * i / 1000.0;
            sky::MeanFieldState s;
            s.c0 = c0;
            s.c1 = (1.0 - f) - c0;
            s.f1 = f;
            s.mean_degree = D;
            const sky::AdversaryMap map = parse_map(map_name);
            const auto eff = map == sky::AdversaryMap::none
                                 ? sky::effective_densities(s)
                                 : sky::adversary_densities(map, s.c0, s.c1, f);
            const double v = sky::dc0_dt(s, sky::parse_model(model), eff, parse_rates(rates),
                                         parse_rounding(rounding));
            csv += fmt(c0) + "," + fmt(v) + "," + fmt(D) + "\n";
        }
    }
    emit(out, csv);
    return 0;
}

int cmd_critical(double p_min, double p_max, double p_step, const std::vector<double>& degrees,
                 double epsilon, const std::string& model, const std::string& rates,
                 const std::string& rounding, const std::string& out) {
    const json params{{"kind", "critical"}, {"p_min", p_min},     {"p_max", p_max},
                      {"p_step", p_step},   {"D", degrees},       {"epsilon", epsilon},
                      {"model", model},     {"rates", rates},     {"rounding", rounding}};
    std::string csv = "# spec_hash=" + params_hash(params) + "\np,D,f_critical\n";
    sky::IntegrateOptions opts;
    opts.form = parse_rates(rates);
    opts.rounding = parse_rounding(rounding);
    for (double p = p_min; p <= p_max + 1e-12; p += p_step) {
        for (double D : degrees) {
            const auto cp = sky::critical_point(p, D, epsilon, sky::parse_model(model), opts);
            csv += fmt(p) + "," + fmt(D) + "," + fmt(cp.f_critical) + "\n";
        }
        if (p_step <= 0) break;
    }
    emit(out, csv);
    return 0;
}

int cmd_fixed_points(double f, const std::vector<double>& degrees, const std::string& model,
                     const std::string& rates, const std::string& rounding,
                     const std::string& out) {
    const json params{{"kind", "fixed-points"}, {"f", f},         {"D", degrees},
                      {"model", model},         {"rates", rates}, {"rounding", rounding}};
    std::string csv = "# spec_hash=" + params_hash(params) + "\nf,D,model,c0_root\n";
    for (double D : degrees) {
        const auto roots = sky::fixed_points(f, D, sky::parse_model(model), parse_rates(rates),
                                             parse_rounding(rounding));
        for (double r : roots)
            csv += fmt(f) + "," + fmt(D) + "," + model + "," + fmt(r) + "\n";
    }
    emit(out, csv);
    return 0;
}

int cmd_simulate(const sky::ExperimentSpec& spec, const std::string& runs_out,
                 const std::string& summary_out, const std::string& series_out,
                 const std::string& trace_out) {
    const auto graph = sky::load_dataset(spec.dataset);
    const auto results = sky::run_batch(spec, graph);
    emit(runs_out, sky::runs_to_csv(spec, results));
    if (!series_out.empty()) sky::write_file(series_out, sky::series_to_csv(spec, results));
    if (!trace_out.empty()) sky::write_file(trace_out, sky::traces_to_text(spec, results));
    const std::string summary = sky::summary_json(spec, results).dump(2) + "\n";
    if (!summary_out.empty()) sky::write_file(summary_out, summary);
    else std::cout << summary;
    return 0;
}

int cmd_sweep(sky::ExperimentSpec spec, const std::vector<double>& fractions,
              const std::string& out) {
    const auto graph = sky::load_dataset(spec.dataset);
    json params = sky::to_json(spec);
    params["fractions"] = fractions;
    std::string csv = "# spec_hash=" + params_hash(params) + "\n";
    csv += "f,runs,mean_decision,decision_ci95,incomplete_fraction,sentinel_count,"
           "mean_signed_cvg,confused_fraction\n";
    for (double f : fractions) {
        spec.fraction = f;
        const auto results = sky::run_batch(spec, graph);
        const auto s = sky::summarize(results, spec.max_rounds);
        csv += fmt(f) + "," + std::to_string(s.runs) + "," + fmt(s.mean_decision) + "," +
               fmt(s.decision_ci95) + "," + fmt(s.incomplete_fraction) + "," +
               std::to_string(s.sentinel_count) + "," + fmt(s.mean_signed_cvg) + "," +
               fmt(s.confused_fraction) + "\n";
    }
    emit(out, csv);
    return 0;
}

// --config <file.json> provides defaults with flat keys mirroring the flags;
// explicit flags override it.
sky::ExperimentSpec load_config_defaults(int argc, char** argv) {
    for (int i = 1; i + 1 < argc; ++i)
        if (std::string_view(argv[i]) == "--config")
            return sky::spec_from_json(json::parse(sky::read_file(argv[i + 1])));
    return {};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"simulation laboratory for trust-graph opinion consensus"};
    app.require_subcommand(1);

    sky::ExperimentSpec spec;
    try {
        spec = load_config_defaults(argc, argv);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }

    // ingest
    auto* ingest = app.add_subcommand("ingest", "parse an edge list, enforce the minimum "
                                                "followee count, write graph + stats");
    std::string in_path, graph_out, stats_out;
    unsigned min_followees = 10;
    ingest->add_option("input", in_path, "edge-list file")->required();
    ingest->add_option("--min-followees", min_followees, "minimum followee count (default 10)");
    ingest->add_option("--graph-out", graph_out, "write the filtered graph here");
    ingest->add_option("--stats-out", stats_out, "write the stats JSON here");

    // gen-uniform
    auto* gen = app.add_subcommand("gen-uniform", "generate a degree-regular random network");
    std::size_t gen_nodes = 1000, gen_degree = 30;
    std::uint64_t gen_seed = 1;
    std::string gen_out;
    gen->add_option("--nodes", gen_nodes, "node count")->required();
    gen->add_option("--degree", gen_degree, "followee count per node")->required();
    gen->add_option("--seed", gen_seed, "generation seed");
    gen->add_option("--out", gen_out, "output edge-list path (default stdout)");

    // meanfield
    auto* mf = app.add_subcommand("meanfield", "mean-field analysis");
    mf->require_subcommand(1);
    std::string mf_model = "sky", mf_map = "none", mf_rates = "exact", mf_rounding = "nearest",
                mf_out;
    std::vector<double> mf_degrees{5, 10, 50, 100, 400};
    double mf_c0 = 0.51, mf_f = 0.0, mf_dt = 1.0, mf_tmax = 200.0, mf_eps = 0.05;
    double mf_pmin = 0.5, mf_pmax = 1.0, mf_pstep = 0.05;

    auto* deriv = mf->add_subcommand("derivative", "dc0/dt across c0 (CSV: c0,dc0dt,D)");
    deriv->add_option("--model", mf_model, "sky|mr|sa");
    deriv->add_option("--D", mf_degrees, "mean degrees")->delimiter(',');
    deriv->add_option("--f", mf_f, "faulty density");
    deriv->add_option("--adversary", mf_map, "density mapping (none|always-one|...)");
    deriv->add_option("--rates", mf_rates, "exact|closed flip-rate form");
    deriv->add_option("--rounding", mf_rounding, "nearest|down degree rounding");
    deriv->add_option("--out", mf_out, "output CSV (default stdout)");

    auto* traj = mf->add_subcommand("trajectory", "evolution of c0 (CSV: t,c0,D)");
    traj->add_option("--model", mf_model, "sky|mr|sa");
    traj->add_option("--D", mf_degrees, "mean degrees")->delimiter(',');
    traj->add_option("--c0", mf_c0, "initial correct-0 share p (c0 = p*(1-f))");
    traj->add_option("--f", mf_f, "faulty density");
    traj->add_option("--adversary", mf_map, "density mapping (none|always-one|...)");
    traj->add_option("--dt", mf_dt, "step size");
    traj->add_option("--t-max", mf_tmax, "horizon");
    traj->add_option("--rates", mf_rates, "exact|closed flip-rate form");
    traj->add_option("--rounding", mf_rounding, "nearest|down degree rounding");
    traj->add_option("--out", mf_out, "output CSV (default stdout)");

    auto* crit = mf->add_subcommand("critical", "critical faulty densities (CSV: p,D,f_critical)");
    crit->add_option("--p-min", mf_pmin, "initial majority, range start");
    crit->add_option("--p-max", mf_pmax, "range end");
    crit->add_option("--p-step", mf_pstep, "range step");
    crit->add_option("--D", mf_degrees, "mean degrees")->delimiter(',');
    crit->add_option("--epsilon", mf_eps, "tolerated wrong-decision share");
    crit->add_option("--model", mf_model, "sky|mr|sa");
    crit->add_option("--rates", mf_rates, "exact|closed flip-rate form");
    crit->add_option("--rounding", mf_rounding, "nearest|down degree rounding");
    crit->add_option("--out", mf_out, "output CSV (default stdout)");

    auto* fixed = mf->add_subcommand("fixed-points", "roots of dc0/dt (CSV: f,D,model,c0_root)");
    fixed->add_option("--f", mf_f, "faulty density");
    fixed->add_option("--D", mf_degrees, "mean degrees")->delimiter(',');
    fixed->add_option("--model", mf_model, "sky|mr|sa");
    fixed->add_option("--rates", mf_rates, "exact|closed flip-rate form");
    fixed->add_option("--rounding", mf_rounding, "nearest|down degree rounding");
    fixed->add_option("--out", mf_out, "output CSV (default stdout)");

    // simulate / sweep share the experiment flags
    std::string runs_out, summary_out, series_out, trace_out, sweep_out, config_path;
    std::vector<double> sweep_fractions;
    std::uint64_t seed_single = 0;
    const auto add_experiment_flags = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON spec file; flags override its values");
        cmd->add_option("--mode", spec.mode, "sync|async");
        cmd->add_option("--dataset", spec.dataset,
                        "edge-list path or uniform:<n>,<degree>[,<seed>]");
        cmd->add_option("--model", spec.model, "sky|mr|sa|voter|sznajd");
        cmd->add_option("--adversary", spec.adversary,
                        "none|always-one|always-zero|silent|random-opinion|split-half|inverted");
        cmd->add_option("--selection", spec.selection, "random|top");
        cmd->add_option("--fraction", spec.fraction, "faulty fraction");
        cmd->add_option("--init-cvg", spec.init_cvg, "target initial signed convergence");
        cmd->add_option("--seed-begin", spec.seed_begin, "first seed");
        cmd->add_option("--seed-end", spec.seed_end, "last seed (inclusive)");
        cmd->add_option("--seed", seed_single, "single seed (sets begin and end)");
        cmd->add_option("--max-rounds", spec.max_rounds, "rounds before the final decision");
        cmd->add_option("--T", spec.threshold_T, "decision threshold");
        cmd->add_option("--sky-ratio", spec.sky_mr_ratio,
                        "probability that the sky rule applies the majority sub-rule");
        cmd->add_option("--timeout", spec.timeout_ms, "failure-detector timeout (ms)");
        cmd->add_option("--mu", spec.latency_mu, "latency mean (ms)");
        cmd->add_option("--sigma", spec.latency_sigma, "latency std dev (ms)");
        cmd->add_option("--cutoff", spec.latency_cutoff, "latency lower cutoff (ms)");
        cmd->add_option("--horizon", spec.horizon_ms, "async horizon (ms)");
        cmd->add_option("--period", spec.adversary_period_ms, "faulty broadcast period (ms)");
        cmd->add_option("--series-sample", spec.series_sample_ms,
                        "sample interval for the per-run convergence series (ms; 0 = off)");
        cmd->add_option("--jobs", spec.jobs, "worker threads (does not affect results)");
    };
    auto* sim = app.add_subcommand("simulate", "batch of seeded runs (CSV per run + summary)");
    add_experiment_flags(sim);
    sim->add_option("--runs-out", runs_out, "per-run CSV path (default stdout)");
    sim->add_option("--summary-out", summary_out, "summary JSON path (default stdout)");
    sim->add_option("--series-out", series_out, "per-run (time_ms, signed_cvg) CSV path");
    sim->add_option("--trace-out", trace_out, "per-event trace log path (async; implies tracing)");
    auto* sweep = app.add_subcommand("sweep", "simulate across a grid of faulty fractions");
    add_experiment_flags(sweep);
    sweep->add_option("--fractions", sweep_fractions, "faulty fractions to sweep")
        ->delimiter(',')
        ->required();
    sweep->add_option("--out", sweep_out, "sweep CSV path (default stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (seed_single != 0) {
            spec.seed_begin = seed_single;
            spec.seed_end = seed_single;
        }
        if (ingest->parsed()) return cmd_ingest(in_path, min_followees, graph_out, stats_out);
        if (gen->parsed()) return cmd_gen_uniform(gen_nodes, gen_degree, gen_seed, gen_out);
        if (mf->parsed()) {
            if (deriv->parsed())
                return cmd_derivative(mf_model, mf_degrees, mf_f, mf_map, mf_rates, mf_rounding,
                                      mf_out);
            if (traj->parsed())
                return cmd_trajectory(mf_model, mf_degrees, mf_c0, mf_f, mf_map, mf_dt, mf_tmax,
                                      mf_rates, mf_rounding, mf_out);
            if (crit->parsed())
                return cmd_critical(mf_pmin, mf_pmax, mf_pstep, mf_degrees, mf_eps, mf_model,
                                    mf_rates, mf_rounding, mf_out);
            if (fixed->parsed())
                return cmd_fixed_points(mf_f, mf_degrees, mf_model, mf_rates, mf_rounding,
                                        mf_out);
        }
        if (sim->parsed()) {
            spec.command = "simulate";
            if (!trace_out.empty()) spec.record_trace = true;
            return cmd_simulate(spec, runs_out, summary_out, series_out, trace_out);
        }
        if (sweep->parsed()) {
            spec.command = "sweep";
            return cmd_sweep(spec, sweep_fractions, sweep_out);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
