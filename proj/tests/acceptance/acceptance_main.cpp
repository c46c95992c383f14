// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Skipped criteria (missing optional inputs) are reported and do
// not fail the run.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "../oracle_binomial.hpp"
#include "sky/experiment.hpp"
#include "sky/mean_field.hpp"
#include "sky/metrics.hpp"
#include "sky/simulator.hpp"

namespace {

struct Criterion {
    std::string name;
    bool pass = false;
    bool skipped = false;
    std::string detail;
    double seconds = 0.0;
};

std::vector<Criterion> g_results;

template <typename Fn>
void run_criterion(const std::string& name, Fn&& fn) {
    Criterion c;
    c.name = name;
    const auto start = std::chrono::steady_clock::now();
    try {
        fn(c);
    } catch (const std::exception& e) {
        c.pass = false;
        c.detail = std::string("exception: ") + e.what();
    }
    c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const char* tag = c.skipped ? "SKIP" : (c.pass ? "PASS" : "FAIL");
    std::printf("[%s] %-22s (%.1fs) %s\n", tag, c.name.c_str(), c.seconds, c.detail.c_str());
    std::fflush(stdout);
    g_results.push_back(std::move(c));
}

sky::MeanFieldState no_fault_state(double c0, double D) {
    sky::MeanFieldState s;
    s.c0 = c0;
    s.c1 = 1.0 - c0;
    s.mean_degree = D;
    return s;
}

// ---- criterion 1: dc0/dt > 0 for every correct majority under sky ----
void criterion_sign(Criterion& c) {
    std::size_t checked = 0;
    double min_rate = 1e9;
    for (double D : {5.0, 10.0, 50.0, 100.0, 400.0}) {
        for (int i = 501; i <= 999; ++i) {
            const double c0 = i / 1000.0;
            const auto s = no_fault_state(c0, D);
            const double v = sky::dc0_dt(s, sky::ModelKind::sky, {c0, 1.0 - c0});
            min_rate = std::min(min_rate, v);
            if (v <= 0.0) {
                c.detail = "dc0/dt <= 0 at c0=" + std::to_string(c0) + " D=" + std::to_string(D);
                return;
            }
            ++checked;
        }
    }
    c.pass = true;
    c.detail = std::to_string(checked) + " grid points, min rate " + std::to_string(min_rate);
}

// ---- criterion 2: convergence speed from a sliver of majority ----
void criterion_speed(Criterion& c) {
    const auto traj =
        sky::integrate(no_fault_state(0.51, 5.0), sky::ModelKind::sky, sky::AdversaryMap::none);
    std::size_t steps = traj.size();
    for (std::size_t i = 0; i < traj.size(); ++i) {
        if (traj[i].c0 >= 0.99) {
            steps = i;
            break;
        }
    }
    c.pass = steps <= 15;
    c.detail = "c0 >= 0.99 after " + std::to_string(steps) + " steps (limit 15)";
}

// ---- criterion 3: tolerated faulty density across degrees ----
void criterion_critical(Criterion& c) {
    std::string table;
    bool ok = true;
    for (double D : {10.0, 20.0, 50.0, 100.0, 200.0, 400.0}) {
        const auto cp = sky::critical_point(0.75, D, 0.05);
        char buf[48];
        std::snprintf(buf, sizeof(buf), " D=%g:%.4f", D, cp.f_critical);
        table += buf;
        ok = ok && cp.f_critical >= 0.13;
    }
    c.pass = ok;
    c.detail = "f_critical(p=0.75):" + table + " (floor 0.13)";
}

// ---- criterion 4: always-1 is the worst density mapping ----
void criterion_dominance(Criterion& c) {
    using sky::AdversaryMap;
    std::size_t checked = 0;
    for (double D : {5.0, 10.0, 50.0}) {
        for (int qi = 0; qi < 50; ++qi) {
            const double q = 0.5 + 0.5 * qi / 49.0;
            for (int fi = 0; fi < 50; ++fi) {
                const double f = 0.98 * fi / 49.0;
                sky::MeanFieldState s;
                s.c0 = q * (1.0 - f);
                s.c1 = (1.0 - f) - s.c0;
                s.f1 = f;
                s.mean_degree = D;
                const double worst = sky::dc0_dt(
                    s, sky::ModelKind::sky,
                    sky::adversary_densities(AdversaryMap::always_one, s.c0, s.c1, f));
                for (AdversaryMap m : {AdversaryMap::split_half, AdversaryMap::random_opinion,
                                       AdversaryMap::silent}) {
                    const double v = sky::dc0_dt(
                        s, sky::ModelKind::sky, sky::adversary_densities(m, s.c0, s.c1, f));
                    if (worst > v + 1e-12) {
                        char buf[96];
                        std::snprintf(buf, sizeof(buf), "violated at q=%.3f f=%.3f D=%g", q, f, D);
                        c.detail = buf;
                        return;
                    }
                    ++checked;
                }
            }
        }
    }
    c.pass = true;
    c.detail = std::to_string(checked) + " (state, mapping) comparisons";
}

// ---- criterion 5: synchronous convergence on uniform-1000 ----
void criterion_sync(Criterion& c) {
    const auto g = sky::generate_uniform(1000, 30, 1);
    sky::InitialConfiguration init;
    init.target_signed_cvg = 0.0;

    std::vector<std::uint32_t> sky_rounds;
    for (std::uint64_t seed = 1; seed <= 200; ++seed) {
        const auto r = sky::run_sync(g, sky::ModelKind::sky, init, 40, seed);
        sky_rounds.push_back(r.rounds_to_consensus);
    }
    const std::size_t failures = static_cast<std::size_t>(
        std::count_if(sky_rounds.begin(), sky_rounds.end(), [](auto r) { return r > 40; }));
    std::sort(sky_rounds.begin(), sky_rounds.end());
    const std::uint32_t median = sky_rounds[sky_rounds.size() / 2];

    std::size_t mr_sentinels = 0;
    for (std::uint64_t seed = 1; seed <= 200; ++seed) {
        const auto r = sky::run_sync(g, sky::ModelKind::mr, init, 40, seed);
        mr_sentinels += r.rounds_to_consensus > 40;
    }

    c.pass = failures == 0 && median <= 15;
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "sky: %zu/200 failures, median %u rounds; mr sentinel runs: %zu%s", failures,
                  median, mr_sentinels,
                  mr_sentinels == 0
                      ? " (majority rule converged on this uniform topology; stalls show up on "
                        "heterogeneous graphs)"
                      : "");
    c.detail = buf;
}

// shared by criteria 6 and 7
struct AsyncBatch {
    std::vector<sky::RunResult> results;
};

AsyncBatch run_fault_batch() {
    AsyncBatch batch;
    const auto g = sky::generate_uniform(1000, 30, 1);
    sky::AsyncOptions opts;
    sky::AdversaryStrategy adv;
    adv.kind = sky::AdversaryKind::always_one;
    adv.selection = sky::SelectionMode::random_fraction;
    adv.fraction = 0.13;
    sky::InitialConfiguration init;
    init.target_signed_cvg = 0.5;
    for (std::uint64_t seed = 1; seed <= 20; ++seed)
        batch.results.push_back(sky::run_async(g, opts, adv, init, seed));
    return batch;
}

void criterion_async_tolerance(Criterion& c, const AsyncBatch& batch) {
    double share_sum = 0.0;
    std::size_t runs = 0;
    for (const auto& r : batch.results) {
        if (r.d0 + r.d1 == 0) continue;
        share_sum += static_cast<double>(r.d0) / (r.d0 + r.d1);
        ++runs;
    }
    const double mean_share = runs ? share_sum / runs : 0.0;
    c.pass = runs == batch.results.size() && mean_share >= 0.90;
    char buf[96];
    std::snprintf(buf, sizeof(buf), "mean decided-0 share %.4f over %zu runs (floor 0.90)",
                  mean_share, runs);
    c.detail = buf;
}

void criterion_async_timing(Criterion& c, const AsyncBatch& batch) {
    std::size_t total = 0, in_time = 0, decided_in_time = 0;
    for (const auto& r : batch.results) {
        for (const auto& o : r.outcomes) {
            ++total;
            if (o.decided_at_ms >= 0 && o.decided_at_ms <= 70000.0) {
                ++in_time;
                decided_in_time += o.state == sky::NodeState::decided;
            }
        }
    }
    const double frac = total ? static_cast<double>(in_time) / total : 0.0;
    c.pass = frac >= 0.96;
    char buf[128];
    std::snprintf(buf, sizeof(buf),
                  "%.2f%% of correct nodes final within 70s (%zu/%zu; %zu decided 0/1)",
                  100.0 * frac, in_time, total, decided_in_time);
    c.detail = buf;
}

// ---- criterion 8: the wiki pipeline, when the SNAP file is available ----
void criterion_wiki(Criterion& c, const std::string& wiki_path) {
    namespace fs = std::filesystem;
    std::string path = wiki_path;
    if (path.empty()) {
        if (const char* env = std::getenv("SKY_WIKI_PATH")) path = env;
        else if (fs::exists("data/wiki-Vote.txt")) path = "data/wiki-Vote.txt";
    }
    if (path.empty() || !fs::exists(path)) {
        c.skipped = true;
        c.pass = true;
        c.detail = "SNAP wiki-Vote file not supplied (set SKY_WIKI_PATH or data/wiki-Vote.txt)";
        return;
    }

    const auto report = sky::parse_edge_list(sky::read_file(path));
    const auto filtered = sky::enforce_min_followees(report.graph, 10);
    const auto stats = filtered.graph.stats();
    const bool nodes_ok = std::abs(static_cast<double>(stats.node_count) - 998.0) <= 0.02 * 998.0;
    const bool degree_ok = std::abs(stats.average_degree - 33.33) <= 0.05 * 33.33;

    const auto run_top = [&](double fraction) {
        sky::AsyncOptions opts;
        sky::AdversaryStrategy adv;
        adv.kind = sky::AdversaryKind::always_one;
        adv.selection = sky::SelectionMode::top_influential;
        adv.fraction = fraction;
        sky::InitialConfiguration init;
        init.target_signed_cvg = 0.5;
        std::size_t below = 0, above = 0;
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
            const auto r = sky::run_async(filtered.graph, opts, adv, init, seed);
            const double d = r.d0 + r.d1 ? sky::decision_metric(r.d0, r.d1) : 0.0;
            // success threshold 0.90 = 1 - 2*epsilon for epsilon = 5%
            if (d < 0.90) ++below;
            else ++above;
        }
        return std::pair{below, above};
    };
    const auto [top3_below, top3_above] = run_top(0.03);
    const auto [top2_below, top2_above] = run_top(0.02);

    // diagnostic: trust edges reaching each faulty set from the outside
    const auto incoming_from_correct = [&](const std::vector<sky::NodeId>& set) {
        std::vector<bool> in(filtered.graph.node_count(), false);
        for (sky::NodeId v : set) in[v] = true;
        std::size_t edges = 0;
        for (sky::NodeId v : set)
            for (sky::NodeId u : filtered.graph.followers(v)) edges += !in[u];
        return edges;
    };
    const std::size_t top3_edges = incoming_from_correct(sky::top_influential(filtered.graph, 0.03));
    std::size_t random_edges = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed)
        random_edges += incoming_from_correct(sky::random_selection(filtered.graph, 0.13, seed));
    random_edges /= 20;

    const bool top3_ok = top3_below >= 10;
    const bool top2_ok = top2_above >= 10;
    c.pass = nodes_ok && degree_ok && top3_ok && top2_ok;
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "nodes=%zu (998 +-2%%), avg degree=%.2f (33.33 +-5%%); top-3%% fails goal in "
                  "%zu/20, top-2%% meets goal in %zu/20; trust into top-3%%: %zu, into "
                  "random-13%%: %zu (mean)",
                  stats.node_count, stats.average_degree, top3_below, top2_above, top3_edges,
                  random_edges);
    c.detail = buf;
}

// ---- criterion 9: oracle equivalence for the binomial kernel ----
void criterion_oracle(Criterion& c) {
    double worst = 0.0;
    for (int n = 1; n <= 60; ++n) {
        for (double p : {0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95}) {
            sky::BinomialTable t(n, p);
            const oracle::ExactBinomial exact(n, p);
            for (int k = 0; k <= n; ++k) {
                worst = std::max(worst, oracle::rel_err(t.pmf(k), exact.pmf(k)));
                worst = std::max(worst, oracle::rel_err(t.cdf(k), exact.cdf(k)));
                if (worst >= 1e-10) {
                    c.detail = "relative error " + std::to_string(worst) + " at n=" +
                               std::to_string(n) + " k=" + std::to_string(k);
                    return;
                }
            }
        }
    }
    for (int n : {100, 400}) {
        for (double p : {0.25, 0.5, 0.8}) {
            sky::BinomialTable t(n, p);
            const oracle::ExactBinomial exact(n, p);
            for (int k : {0, 1, n / 4, n / 2, 3 * n / 4, n - 1, n}) {
                worst = std::max(worst, oracle::rel_err(t.pmf(k), exact.pmf(k)));
                worst = std::max(worst, oracle::rel_err(t.cdf(k), exact.cdf(k)));
            }
        }
    }
    const auto rates = sky::flip_sa(5.0, 0.5, 0.5, sky::RateForm::closed_form);
    const bool sa_exact = std::abs(rates.s1 - 0.75) < 1e-12;
    c.pass = worst < 1e-10 && sa_exact;
    char buf[96];
    std::snprintf(buf, sizeof(buf), "worst rel err %.2e; flip_sa(5,0.5)=%.17g", worst, rates.s1);
    c.detail = buf;
}

// ---- criterion 10: unfollowed identities cannot touch a decision ----
void criterion_sybil(Criterion& c) {
    const std::size_t n_base = 300;
    const std::size_t n_sybil = 10000;
    const auto base = sky::generate_uniform(n_base, 10, 7);

    // augmented graph: same base edges and ids, plus sybil nodes following
    // five correct nodes and five other sybils each
    std::vector<std::pair<sky::NodeId, sky::NodeId>> edges;
    for (sky::NodeId u = 0; u < n_base; ++u)
        for (sky::NodeId v : base.followees(u)) edges.emplace_back(u, v);
    sky::Rng rng(12345);
    std::vector<sky::NodeId> sybils;
    for (std::size_t i = 0; i < n_sybil; ++i) {
        const sky::NodeId s = static_cast<sky::NodeId>(n_base + i);
        sybils.push_back(s);
        for (int k = 0; k < 5; ++k)
            edges.emplace_back(s, static_cast<sky::NodeId>(rng.below(n_base)));
        for (int k = 0; k < 5; ++k)
            edges.emplace_back(s, static_cast<sky::NodeId>(n_base + rng.below(n_sybil)));
    }
    const auto augmented = sky::TrustGraph::from_edges(n_base + n_sybil, std::move(edges));

    sky::AsyncOptions opts;
    opts.record_trace = true;
    sky::InitialConfiguration init;
    init.target_signed_cvg = 0.2;

    sky::AdversaryStrategy none;
    sky::AdversaryStrategy sybil_adv;
    sybil_adv.kind = sky::AdversaryKind::inverted;  // maximally chatty scripted behavior
    sybil_adv.selection = sky::SelectionMode::explicit_set;
    sybil_adv.explicit_faulty = sybils;

    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const auto plain = sky::run_async(base, opts, none, init, seed);
        const auto attacked = sky::run_async(augmented, opts, sybil_adv, init, seed);
        if (plain.trace != attacked.trace) {
            c.detail = "trace diverged at seed " + std::to_string(seed);
            return;
        }
        if (plain.outcomes.size() != attacked.outcomes.size()) {
            c.detail = "outcome count diverged";
            return;
        }
        for (std::size_t i = 0; i < plain.outcomes.size(); ++i) {
            const auto& a = plain.outcomes[i];
            const auto& b = attacked.outcomes[i];
            if (a.id != b.id || a.opinion != b.opinion || a.state != b.state ||
                a.decided_at_ms != b.decided_at_ms || a.round != b.round) {
                c.detail = "outcome diverged for node " + std::to_string(a.id);
                return;
            }
        }
    }
    c.pass = true;
    c.detail = "3 seeds, 10000 sybil nodes, traces byte-identical";
}

// ---- criterion 11: CLI outputs are byte-identical across reruns ----
void criterion_determinism(Criterion& c, const std::string& cli) {
    namespace fs = std::filesystem;
    if (cli.empty() || !fs::exists(cli)) {
        c.detail = "CLI binary not found (pass --cli <path>)";
        return;
    }
    const fs::path dir = fs::path("acceptance_tmp");
    fs::create_directories(dir);
    const auto run = [&](const std::string& args, const std::string& out) {
        const std::string cmd = cli + " " + args + " >" + out + ".stdout 2>/dev/null";
        return std::system(cmd.c_str()) == 0;
    };
    const auto same = [&](const std::string& a, const std::string& b) {
        return sky::read_file(a) == sky::read_file(b);
    };
    const std::string d = dir.string();
    const std::vector<std::pair<std::string, std::string>> cases = {
        {"gen-uniform --nodes 200 --degree 10 --seed 5 --out " + d + "/g{R}.edges",
         d + "/g{R}.edges"},
        {"ingest " + d + "/g1.edges --min-followees 10 --graph-out " + d +
             "/i{R}.edges --stats-out " + d + "/i{R}.json",
         d + "/i{R}.edges"},
        {"meanfield derivative --model sky --D 10 --out " + d + "/d{R}.csv", d + "/d{R}.csv"},
        {"meanfield trajectory --model sky --D 5,50 --c0 0.51 --out " + d + "/t{R}.csv",
         d + "/t{R}.csv"},
        {"meanfield critical --p-min 0.75 --p-max 0.75 --p-step 1 --D 10,50 --out " + d +
             "/c{R}.csv",
         d + "/c{R}.csv"},
        {"meanfield fixed-points --f 0.13 --D 50 --out " + d + "/f{R}.csv", d + "/f{R}.csv"},
        {"simulate --mode sync --dataset uniform:200,10,3 --model sky --seed-begin 1 --seed-end "
         "10 --runs-out " +
             d + "/s{R}.csv --summary-out " + d + "/s{R}.json",
         d + "/s{R}.csv"},
        {"simulate --mode async --dataset uniform:100,8,3 --model sky --adversary always-one "
         "--fraction 0.1 --init-cvg 0.5 --seed 42 --series-sample 1000 --runs-out " +
             d + "/a{R}.csv --summary-out " + d + "/a{R}.json --series-out " + d + "/a{R}_series.csv",
         d + "/a{R}.csv"},
        {"sweep --mode async --dataset uniform:60,6,2 --model sky --adversary always-one "
         "--init-cvg 0.5 --seed-begin 1 --seed-end 2 --fractions 0.0,0.1 --out " +
             d + "/w{R}.csv",
         d + "/w{R}.csv"},
    };
    const auto subst = [](std::string s, const std::string& r) {
        for (std::size_t pos; (pos = s.find("{R}")) != std::string::npos;)
            s.replace(pos, 3, r);
        return s;
    };
    for (const auto& [args, out] : cases) {
        if (!run(subst(args, "1"), subst(out, "1")) || !run(subst(args, "2"), subst(out, "2"))) {
            c.detail = "CLI invocation failed: " + args;
            return;
        }
        if (!same(subst(out, "1"), subst(out, "2"))) {
            c.detail = "outputs differ for: " + args;
            return;
        }
    }
    // companion outputs too
    if (!same(d + "/s1.json", d + "/s2.json") || !same(d + "/a1.json", d + "/a2.json") ||
        !same(d + "/i1.json", d + "/i2.json") || !same(d + "/a1_series.csv", d + "/a2_series.csv")) {
        c.detail = "companion output differs across reruns";
        return;
    }
    c.pass = true;
    c.detail = std::to_string(cases.size()) + " commands re-run byte-identical";
}

}  // namespace

int main(int argc, char** argv) {
    std::string cli_path, wiki_path;
    for (int i = 1; i + 1 < argc; ++i) {
        const std::string_view a = argv[i];
        if (a == "--cli") cli_path = argv[i + 1];
        if (a == "--wiki") wiki_path = argv[i + 1];
    }

    run_criterion("1 mean-field sign", criterion_sign);
    run_criterion("2 convergence speed", criterion_speed);
    run_criterion("3 critical points", criterion_critical);
    run_criterion("4 worst-case adversary", criterion_dominance);
    run_criterion("5 sync convergence", criterion_sync);
    AsyncBatch batch;
    run_criterion("6 async tolerance", [&](Criterion& c) {
        batch = run_fault_batch();
        criterion_async_tolerance(c, batch);
    });
    run_criterion("7 async timing", [&](Criterion& c) { criterion_async_timing(c, batch); });
    run_criterion("8 wiki pipeline", [&](Criterion& c) { criterion_wiki(c, wiki_path); });
    run_criterion("9 oracle equivalence", criterion_oracle);
    run_criterion("10 sybil no-op", criterion_sybil);
    run_criterion("11 determinism", [&](Criterion& c) { criterion_determinism(c, cli_path); });

    std::size_t failed = 0, skipped = 0;
    for (const auto& c : g_results) {
        failed += !c.pass && !c.skipped;
        skipped += c.skipped;
    }
    std::printf("%zu/%zu criteria passed", g_results.size() - failed - skipped,
                g_results.size() - skipped);
    if (skipped) std::printf(" (%zu skipped)", skipped);
    std::printf("\n");
    return failed == 0 ? 0 : 1;
}
