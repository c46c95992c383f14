#include <catch2/catch_amalgamated.hpp>

#include "sky/metrics.hpp"

using namespace sky;

TEST_CASE("convergence") {
    CHECK(convergence(500, 500) == 0.0);
    CHECK(convergence(1000, 0) == 1.0);
    CHECK(convergence(750, 250) == 0.5);
    CHECK_THROWS_AS(convergence(0, 0), std::invalid_argument);
}

TEST_CASE("signed convergence") {
    CHECK(signed_convergence(250, 750) == -0.5);
    CHECK(signed_convergence(998, 0) == 1.0);
    CHECK_THROWS_AS(signed_convergence(0, 0), std::invalid_argument);
}

TEST_CASE("|signed convergence| equals convergence") {
    Rng rng(2);
    for (int i = 0; i < 500; ++i) {
        const std::size_t a = rng.below(1000);
        const std::size_t b = rng.below(1000);
        if (a + b == 0) continue;
        CHECK(std::abs(signed_convergence(a, b)) == Catch::Approx(convergence(a, b)).margin(0));
    }
}

TEST_CASE("decision metric") {
    CHECK(decision_metric(96, 4) == Catch::Approx(0.92));
    CHECK(decision_metric(50, 50) == 0.0);
    CHECK(decision_metric(100, 0) == 1.0);
    CHECK_THROWS_AS(decision_metric(0, 0), std::invalid_argument);
}

TEST_CASE("decision metric is label-symmetric") {
    Rng rng(3);
    for (int i = 0; i < 500; ++i) {
        const std::size_t a = rng.below(500);
        const std::size_t b = rng.below(500);
        if (a + b == 0) continue;
        CHECK(decision_metric(a, b) == decision_metric(b, a));
    }
}

namespace {
RunResult sync_result(std::uint32_t rounds, std::size_t c0, std::size_t c1, bool complete = true) {
    RunResult r;
    r.rounds_to_consensus = rounds;
    r.final_c0 = c0;
    r.final_c1 = c1;
    r.correct_count = c0 + c1;
    r.complete = complete;
    return r;
}
}  // namespace

TEST_CASE("summarize bins rounds with width two and a sentinel") {
    std::vector<RunResult> rs;
    rs.push_back(sync_result(1, 100, 0));
    rs.push_back(sync_result(2, 100, 0));
    rs.push_back(sync_result(3, 100, 0));
    rs.push_back(sync_result(40, 100, 0));
    rs.push_back(sync_result(41, 60, 40, false));  // failure sentinel
    const auto s = summarize(rs, 40);
    REQUIRE(s.round_histogram.size() == 20);
    CHECK(s.round_histogram[0] == 2);  // rounds 1-2
    CHECK(s.round_histogram[1] == 1);  // rounds 3-4
    CHECK(s.round_histogram[19] == 1);  // rounds 39-40
    CHECK(s.sentinel_count == 1);
    std::size_t mass = s.sentinel_count;
    for (auto b : s.round_histogram) mass += b;
    CHECK(mass == rs.size());
    CHECK(s.incomplete_runs == 1);
    // convergence distribution: four unanimous runs plus one at cvg 0.2
    CHECK(s.cvg_histogram[19] == 4);
    CHECK(s.cvg_histogram[4] == 1);
    std::size_t cvg_mass = 0;
    for (auto b : s.cvg_histogram) cvg_mass += b;
    CHECK(cvg_mass == rs.size());
}

TEST_CASE("summarize single run") {
    std::vector<RunResult> rs{sync_result(7, 100, 0)};
    const auto s = summarize(rs, 40);
    std::size_t nonzero = 0;
    for (auto b : s.round_histogram) nonzero += b > 0;
    CHECK(nonzero == 1);
    CHECK(s.round_histogram[3] == 1);  // rounds 7-8
}

TEST_CASE("summarize excludes incomplete runs from the decision mean") {
    RunResult done;
    done.complete = true;
    done.d0 = 90;
    done.d1 = 10;
    done.final_c0 = 90;
    done.final_c1 = 10;
    done.correct_count = 100;
    RunResult stuck = done;
    stuck.complete = false;
    stuck.undecided = 5;
    stuck.d0 = 50;
    stuck.d1 = 45;
    std::vector<RunResult> rs{done, stuck};
    const auto s = summarize(rs, 40);
    CHECK(s.decided_runs == 1);
    CHECK(s.mean_decision == Catch::Approx(0.8));
    CHECK(s.incomplete_fraction == 0.5);
    CHECK_THROWS_AS(summarize({}, 40), std::invalid_argument);
}

TEST_CASE("clopper-pearson interval brackets the point estimate") {
    const auto [lo, hi] = clopper_pearson(90, 100);
    CHECK(lo < 0.9);
    CHECK(hi > 0.9);
    CHECK(lo > 0.8);
    CHECK(hi < 0.97);
    CHECK(clopper_pearson(0, 20).first == 0.0);
    CHECK(clopper_pearson(20, 20).second == 1.0);
}
