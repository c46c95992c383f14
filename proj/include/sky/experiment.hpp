#pragma once

#include <atomic>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "sky/metrics.hpp"
#include "sky/simulator.hpp"

namespace sky {

// Flat, fully serializable description of one experiment. A spec plus the
// code version determines every output byte; no entropy enters from the
// environment.
struct ExperimentSpec {
    std::string command = "simulate";
    std::string mode = "sync";  // sync | async
    std::string dataset;        // edge-list path, or "uniform:<n>,<degree>[,<seed>]"
    std::string model = "sky";
    std::string adversary = "none";
    std::string selection = "random";  // random | top | explicit
    double fraction = 0.0;
    double init_cvg = 0.0;
    std::uint64_t seed_begin = 1;
    std::uint64_t seed_end = 1;  // inclusive
    std::uint32_t max_rounds = 40;
    double threshold_T = 2.0 / 3.0;
    double sky_mr_ratio = 0.5;
    double timeout_ms = 2000.0;
    double latency_mu = 500.0;
    double latency_sigma = 500.0;
    double latency_cutoff = 50.0;
    double horizon_ms = 300000.0;
    double adversary_period_ms = 1000.0;
    double series_sample_ms = 0.0;  // 0 = no per-run convergence series
    bool record_trace = false;
    unsigned jobs = 1;
};

inline nlohmann::json to_json(const ExperimentSpec& s) {
    return nlohmann::json{{"command", s.command},
                          {"mode", s.mode},
                          {"dataset", s.dataset},
                          {"model", s.model},
                          {"adversary", s.adversary},
                          {"selection", s.selection},
                          {"fraction", s.fraction},
                          {"init_cvg", s.init_cvg},
                          {"seed_begin", s.seed_begin},
                          {"seed_end", s.seed_end},
                          {"max_rounds", s.max_rounds},
                          {"T", s.threshold_T},
                          {"sky_mr_ratio", s.sky_mr_ratio},
                          {"timeout_ms", s.timeout_ms},
                          {"latency_mu", s.latency_mu},
                          {"latency_sigma", s.latency_sigma},
                          {"latency_cutoff", s.latency_cutoff},
                          {"horizon_ms", s.horizon_ms},
                          {"adversary_period_ms", s.adversary_period_ms},
                          {"series_sample_ms", s.series_sample_ms},
                          {"record_trace", s.record_trace}};
    // jobs intentionally omitted: worker count must not change results
}

inline ExperimentSpec spec_from_json(const nlohmann::json& j) {
    ExperimentSpec s;
    s.command = j.value("command", s.command);
    s.mode = j.value("mode", s.mode);
    s.dataset = j.value("dataset", s.dataset);
    s.model = j.value("model", s.model);
    s.adversary = j.value("adversary", s.adversary);
    s.selection = j.value("selection", s.selection);
    s.fraction = j.value("fraction", s.fraction);
    s.init_cvg = j.value("init_cvg", s.init_cvg);
    s.seed_begin = j.value("seed_begin", s.seed_begin);
    s.seed_end = j.value("seed_end", s.seed_end);
    s.max_rounds = j.value("max_rounds", s.max_rounds);
    s.threshold_T = j.value("T", s.threshold_T);
    s.sky_mr_ratio = j.value("sky_mr_ratio", s.sky_mr_ratio);
    s.timeout_ms = j.value("timeout_ms", s.timeout_ms);
    s.latency_mu = j.value("latency_mu", s.latency_mu);
    s.latency_sigma = j.value("latency_sigma", s.latency_sigma);
    s.latency_cutoff = j.value("latency_cutoff", s.latency_cutoff);
    s.horizon_ms = j.value("horizon_ms", s.horizon_ms);
    s.adversary_period_ms = j.value("adversary_period_ms", s.adversary_period_ms);
    s.series_sample_ms = j.value("series_sample_ms", s.series_sample_ms);
    s.record_trace = j.value("record_trace", s.record_trace);
    return s;
}

inline std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Hash of the canonical (sorted-key) JSON form; embedded in every output.
inline std::string spec_hash(const ExperimentSpec& s) {
    char buf[19];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(to_json(s).dump())));
    return buf;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

// Loads "uniform:<n>,<degree>[,<seed>]" or an edge-list file (used as-is:
// filtering is ingest's job).
inline TrustGraph load_dataset(const std::string& dataset) {
    if (dataset.empty())
        throw std::invalid_argument(
            "dataset is required (edge-list path or uniform:<n>,<degree>[,<seed>])");
    if (dataset.rfind("uniform:", 0) == 0) {
        unsigned long long n = 0, degree = 0, seed = 1;
        const int got = std::sscanf(dataset.c_str(), "uniform:%llu,%llu,%llu", &n, &degree, &seed);
        if (got < 2) throw std::invalid_argument("bad uniform dataset spec: " + dataset);
        return generate_uniform(n, degree, seed);
    }
    return parse_edge_list(read_file(dataset)).graph;
}

namespace detail {

inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string quoted = "\"";
    for (char c : s) {
        if (c == '"') quoted += '"';
        quoted += c;
    }
    quoted += '"';
    return quoted;
}

inline std::pair<std::uint32_t, std::uint32_t> round_percentiles(const RunResult& r) {
    if (r.rounds_to_consensus > 0)  // sync mode
        return {r.rounds_to_consensus, r.rounds_to_consensus};
    std::vector<std::uint32_t> rounds;
    rounds.reserve(r.outcomes.size());
    for (const auto& o : r.outcomes) rounds.push_back(o.round);
    if (rounds.empty()) return {0, 0};
    std::sort(rounds.begin(), rounds.end());
    return {rounds[rounds.size() / 2], rounds.back()};
}

}  // namespace detail

inline AdversaryStrategy strategy_from_spec(const ExperimentSpec& spec) {
    AdversaryStrategy adv;
    adv.kind = parse_adversary(spec.adversary);
    adv.fraction = spec.fraction;
    if (spec.selection == "random") adv.selection = SelectionMode::random_fraction;
    else if (spec.selection == "top") adv.selection = SelectionMode::top_influential;
    else if (spec.selection == "explicit") adv.selection = SelectionMode::explicit_set;
    else throw std::invalid_argument("unknown selection mode: " + spec.selection);
    return adv;
}

inline RunResult run_one(const ExperimentSpec& spec, const TrustGraph& g, std::uint64_t seed) {
    InitialConfiguration init;
    init.target_signed_cvg = spec.init_cvg;
    if (spec.mode == "sync")
        return run_sync(g, parse_model(spec.model), init, spec.max_rounds, seed,
                        spec.sky_mr_ratio);
    if (spec.mode != "async") throw std::invalid_argument("mode must be sync or async");
    AsyncOptions opts;
    opts.protocol.max_rounds = spec.max_rounds;
    opts.protocol.T = spec.threshold_T;
    opts.protocol.timeout_ms = spec.timeout_ms;
    opts.protocol.model = parse_model(spec.model);
    opts.protocol.sky_mr_ratio = spec.sky_mr_ratio;
    opts.latency = LatencyModel{spec.latency_mu, spec.latency_sigma, spec.latency_cutoff};
    opts.horizon_ms = spec.horizon_ms;
    opts.adversary_period_ms = spec.adversary_period_ms;
    opts.series_sample_ms = spec.series_sample_ms;
    opts.record_trace = spec.record_trace;
    return run_async(g, opts, strategy_from_spec(spec), init, seed);
}

// All seeds in [seed_begin, seed_end], fanned out to `jobs` workers; results
// land in seed order, so the merge is deterministic regardless of timing.
inline std::vector<RunResult> run_batch(const ExperimentSpec& spec, const TrustGraph& g) {
    if (spec.seed_end < spec.seed_begin)
        throw std::invalid_argument("seed range is empty");
    const std::size_t count = static_cast<std::size_t>(spec.seed_end - spec.seed_begin + 1);
    std::vector<RunResult> results(count);
    const unsigned jobs = std::max(1u, spec.jobs);
    if (jobs == 1) {
        for (std::size_t i = 0; i < count; ++i)
            results[i] = run_one(spec, g, spec.seed_begin + i);
        return results;
    }
    std::atomic<std::size_t> cursor{0};
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (unsigned w = 0; w < jobs; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = cursor.fetch_add(1); i < count; i = cursor.fetch_add(1))
                results[i] = run_one(spec, g, spec.seed_begin + i);
        });
    for (auto& t : pool) t.join();
    return results;
}

inline std::string runs_csv_header() {
    return "seed,dataset,model,adversary,f,init_cvg,final_cvg_signed,decision,d0,d1,confused,"
           "rounds_p50,rounds_max,end_time_ms";
}

inline std::string runs_to_csv(const ExperimentSpec& spec, std::span<const RunResult> results) {
    std::string out = "# spec_hash=" + spec_hash(spec) + "\n" + runs_csv_header() + "\n";
    for (std::size_t i = 0; i < results.size(); ++i) {
        const RunResult& r = results[i];
        const auto [p50, pmax] = detail::round_percentiles(r);
        out += std::to_string(spec.seed_begin + i);
        out += ',' + detail::csv_field(spec.dataset) + ',' + spec.model + ',' + spec.adversary;
        out += ',' + detail::fmt(spec.fraction);
        out += ',' + detail::fmt(r.initial_signed_cvg);
        out += ',' + detail::fmt(signed_convergence(r.final_c0, r.final_c1));
        out += ',';
        if (r.d0 + r.d1 > 0) out += detail::fmt(decision_metric(r.d0, r.d1));
        out += ',' + std::to_string(r.d0) + ',' + std::to_string(r.d1);
        out += ',' + std::to_string(r.confused);
        out += ',' + std::to_string(p50) + ',' + std::to_string(pmax);
        out += ',' + detail::fmt(r.end_time_ms);
        out += '\n';
    }
    return out;
}

inline nlohmann::json summary_json(const ExperimentSpec& spec, std::span<const RunResult> results) {
    const BatchSummary s = summarize(results, spec.max_rounds);
    nlohmann::json j;
    j["spec"] = to_json(spec);
    j["spec_hash"] = spec_hash(spec);
    j["runs"] = s.runs;
    j["round_histogram_bin_width"] = s.bin_width;
    j["round_histogram"] = s.round_histogram;
    j["cvg_histogram"] = s.cvg_histogram;
    j["sentinel_count"] = s.sentinel_count;
    j["incomplete_runs"] = s.incomplete_runs;
    j["incomplete_fraction"] = s.incomplete_fraction;
    j["decided_runs"] = s.decided_runs;
    j["mean_decision"] = s.mean_decision;
    j["decision_ci95"] = s.decision_ci95;
    j["mean_signed_cvg"] = s.mean_signed_cvg;
    j["mean_abs_cvg"] = s.mean_abs_cvg;
    j["confused_fraction"] = s.confused_fraction;
    j["mean_end_time_ms"] = s.mean_end_time_ms;
    return j;
}

// Per-node event trace, one block per seed.
inline std::string traces_to_text(const ExperimentSpec& spec, std::span<const RunResult> results) {
    std::string out = "# spec_hash=" + spec_hash(spec) + "\n";
    for (std::size_t i = 0; i < results.size(); ++i) {
        out += "# seed " + std::to_string(spec.seed_begin + i) + "\n";
        for (const auto& line : results[i].trace) {
            out += line;
            out += '\n';
        }
    }
    return out;
}

// Per-run signed-convergence time series, one block per seed.
inline std::string series_to_csv(const ExperimentSpec& spec, std::span<const RunResult> results) {
    std::string out = "# spec_hash=" + spec_hash(spec) + "\nseed,time_ms,signed_cvg\n";
    for (std::size_t i = 0; i < results.size(); ++i) {
        for (const auto& [t, cvg] : results[i].cvg_series) {
            out += std::to_string(spec.seed_begin + i);
            out += ',' + detail::fmt(t) + ',' + detail::fmt(cvg) + '\n';
        }
    }
    return out;
}

inline nlohmann::json stats_json(const GraphStats& stats) {
    return nlohmann::json{{"nodes", stats.node_count},
                          {"edges", stats.edge_count},
                          {"average_degree", stats.average_degree},
                          {"density", stats.density}};
}

}  // namespace sky
