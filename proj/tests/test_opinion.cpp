#include <catch2/catch_amalgamated.hpp>

#include "sky/opinion.hpp"

#include <vector>

using namespace sky;

namespace {

template <typename Rule>
double freq_zero(Rule&& rule, int draws = 10000, std::uint64_t seed = 1234) {
    Rng rng(seed);
    int zeros = 0;
    for (int i = 0; i < draws; ++i) zeros += rule(rng) == Opinion::zero;
    return static_cast<double>(zeros) / draws;
}

}  // namespace

TEST_CASE("mr_rule follows the strict majority") {
    Rng rng(1);
    CHECK(mr_rule({5, 3}, rng) == Opinion::zero);
    CHECK(mr_rule({2, 7}, rng) == Opinion::one);
}

TEST_CASE("mr_rule ties are a fair coin") {
    const double f = freq_zero([](Rng& r) { return mr_rule({4, 4}, r); });
    CHECK(std::abs(f - 0.5) < 0.02);
}

TEST_CASE("sa_rule is deterministic beyond the 4:1 ratio") {
    Rng rng(1);
    CHECK(sa_rule({9, 2}, rng) == Opinion::zero);  // 9 > 8
    CHECK(sa_rule({0, 5}, rng) == Opinion::one);   // 5 > 0
    // boundary n0 == 4*n1 falls to the probabilistic branch
    int zeros = 0;
    Rng r2(99);
    for (int i = 0; i < 10000; ++i) zeros += sa_rule({8, 2}, r2) == Opinion::zero;
    CHECK(zeros > 7600);
    CHECK(zeros < 8400);  // 0.8 +- noise, not deterministic
}

TEST_CASE("sa_rule adopts proportionally otherwise") {
    const double f = freq_zero([](Rng& r) { return sa_rule({3, 2}, r); });
    CHECK(std::abs(f - 0.6) < 0.02);
}

TEST_CASE("sky_rule mixes the two rules evenly") {
    Rng rng(1);
    CHECK(sky_rule({10, 0}, rng) == Opinion::zero);
    CHECK(sky_rule({9, 2}, rng) == Opinion::zero);  // both sub-rules agree
    const double f = freq_zero([](Rng& r) { return sky_rule({3, 2}, r); });
    CHECK(std::abs(f - 0.8) < 0.02);  // 0.5*1 + 0.5*0.6
}

TEST_CASE("voter_rule picks a uniform followee") {
    Rng rng(1);
    const std::vector<Opinion> unanimous{Opinion::one, Opinion::one, Opinion::one};
    CHECK(voter_rule(unanimous, rng) == Opinion::one);
    const std::vector<Opinion> single{Opinion::zero};
    CHECK(voter_rule(single, rng) == Opinion::zero);
    const std::vector<Opinion> mixed{Opinion::zero, Opinion::zero, Opinion::one};
    const double f = freq_zero([&](Rng& r) { return voter_rule(mixed, r); });
    CHECK(std::abs(f - 2.0 / 3.0) < 0.02);
    CHECK_THROWS_AS(voter_rule({}, rng), std::invalid_argument);
}

TEST_CASE("sznajd_rule requires an agreeing pair") {
    Rng rng(1);
    const std::vector<Opinion> pair0{Opinion::zero, Opinion::zero};
    CHECK(sznajd_rule(Opinion::one, pair0, rng) == Opinion::zero);
    const std::vector<Opinion> split{Opinion::zero, Opinion::one};
    CHECK(sznajd_rule(Opinion::zero, split, rng) == Opinion::zero);  // pair disagrees
    const std::vector<Opinion> three{Opinion::zero, Opinion::zero, Opinion::one};
    // P(adopt 0) = P(both picks are 0) = 1/3; otherwise keeps current 1
    const double f = freq_zero([&](Rng& r) { return sznajd_rule(Opinion::one, three, r); });
    CHECK(std::abs(f - 1.0 / 3.0) < 0.02);
    const std::vector<Opinion> one{Opinion::zero};
    CHECK_THROWS_AS(sznajd_rule(Opinion::one, one, rng), std::invalid_argument);
}

TEST_CASE("final_decision thresholds are strict") {
    CHECK(final_decision({7, 3}, 2.0 / 3.0) == DecisionKind::decided0);
    CHECK(final_decision({6, 4}, 2.0 / 3.0) == DecisionKind::confused);
    CHECK(final_decision({0, 10}, 2.0 / 3.0) == DecisionKind::decided1);
    // 2 > 3*(2/3) must be false
    CHECK(final_decision({2, 1}, 2.0 / 3.0) == DecisionKind::confused);
}

TEST_CASE("final_decision is exclusive for every split up to 200") {
    for (double T : {0.51, 2.0 / 3.0, 0.75, 1.0}) {
        for (std::uint32_t total = 1; total <= 200; ++total) {
            for (std::uint32_t n0 = 0; n0 <= total; ++n0) {
                const OpinionCounts c{n0, total - n0};
                const double threshold = total * T;
                const bool hit0 = n0 > threshold;
                const bool hit1 = (total - n0) > threshold;
                REQUIRE_FALSE((hit0 && hit1));
                const DecisionKind d = final_decision(c, T);
                if (hit0) REQUIRE(d == DecisionKind::decided0);
                else if (hit1) REQUIRE(d == DecisionKind::decided1);
                else REQUIRE(d == DecisionKind::confused);
            }
        }
    }
}

TEST_CASE("rules are symmetric under 0/1 relabeling") {
    const auto check_pair = [](auto&& rule, OpinionCounts c) {
        const OpinionCounts swapped{c.n1, c.n0};
        const double f0 = freq_zero([&](Rng& r) { return rule(c, r); }, 20000, 7);
        const double f1 = 1.0 - freq_zero([&](Rng& r) { return rule(swapped, r); }, 20000, 8);
        CHECK(std::abs(f0 - f1) < 0.02);
    };
    check_pair([](OpinionCounts c, Rng& r) { return mr_rule(c, r); }, {4, 4});
    check_pair([](OpinionCounts c, Rng& r) { return sa_rule(c, r); }, {3, 2});
    check_pair([](OpinionCounts c, Rng& r) { return sky_rule(c, r); }, {5, 3});
}

TEST_CASE("mr and sa are deterministic in their stated regions") {
    Rng rng(1);
    for (std::uint32_t n0 = 0; n0 <= 30; ++n0) {
        for (std::uint32_t n1 = 0; n1 <= 30; ++n1) {
            if (n0 + n1 == 0) continue;
            if (n0 != n1) {
                const Opinion expected = n0 > n1 ? Opinion::zero : Opinion::one;
                for (int k = 0; k < 5; ++k) REQUIRE(mr_rule({n0, n1}, rng) == expected);
            }
            if (n0 > 4 * n1 || n1 > 4 * n0) {
                const Opinion expected = n0 > 4 * n1 ? Opinion::zero : Opinion::one;
                for (int k = 0; k < 5; ++k) REQUIRE(sa_rule({n0, n1}, rng) == expected);
            }
        }
    }
}

TEST_CASE("identical seeds give identical rule outcomes") {
    Rng a(31337), b(31337);
    for (int i = 0; i < 200; ++i) {
        REQUIRE(sky_rule({3, 2}, a) == sky_rule({3, 2}, b));
        REQUIRE(mr_rule({4, 4}, a) == mr_rule({4, 4}, b));
    }
}

TEST_CASE("model names round-trip") {
    for (ModelKind m : {ModelKind::sky, ModelKind::mr, ModelKind::sa, ModelKind::voter,
                        ModelKind::sznajd})
        CHECK(parse_model(model_name(m)) == m);
    CHECK_THROWS_AS(parse_model("bogus"), std::invalid_argument);
}
