#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "sky/binomial.hpp"
#include "sky/simulator.hpp"

namespace sky {

// cvg = |c0 - c1| / (c0 + c1)
inline double convergence(std::size_t c0_count, std::size_t c1_count) {
    const double sum = static_cast<double>(c0_count) + static_cast<double>(c1_count);
    if (sum < 1.0) throw std::invalid_argument("convergence: no opinions counted");
    return std::abs(static_cast<double>(c0_count) - static_cast<double>(c1_count)) / sum;
}

// cvg = (c0 - c1) / (c0 + c1); positive means opinion 0 is ahead.
inline double signed_convergence(std::size_t c0_count, std::size_t c1_count) {
    const double sum = static_cast<double>(c0_count) + static_cast<double>(c1_count);
    if (sum < 1.0) throw std::invalid_argument("signed_convergence: no opinions counted");
    return (static_cast<double>(c0_count) - static_cast<double>(c1_count)) / sum;
}

// decision = |d0 - d1| / (d0 + d1) over decided correct nodes only.
inline double decision_metric(std::size_t d0, std::size_t d1) {
    const double sum = static_cast<double>(d0) + static_cast<double>(d1);
    if (sum < 1.0) throw std::invalid_argument("decision_metric: no decided nodes");
    return std::abs(static_cast<double>(d0) - static_cast<double>(d1)) / sum;
}

// Exact (Clopper-Pearson) bounds for a binomial proportion; the flagged
// alternative to the default normal approximation for small batches.
inline std::pair<double, double> clopper_pearson(std::size_t successes, std::size_t trials,
                                                 double alpha = 0.05) {
    if (trials == 0) throw std::invalid_argument("clopper_pearson: no trials");
    // bisection on the beta cdf via the binomial tail; adequate for test use
    const auto binom_tail_at_most = [&](double p, std::size_t k) {
        BinomialTable t(static_cast<int>(trials), p);
        return t.cdf(static_cast<int>(k));
    };
    const auto solve = [&](auto f) {
        double lo = 0.0, hi = 1.0;
        for (int i = 0; i < 60; ++i) {
            const double mid = 0.5 * (lo + hi);
            if (f(mid)) lo = mid;
            else hi = mid;
        }
        return 0.5 * (lo + hi);
    };
    const double lower =
        successes == 0 ? 0.0
                       : solve([&](double p) { return 1.0 - binom_tail_at_most(p, successes - 1) < alpha / 2; });
    const double upper =
        successes == trials
            ? 1.0
            : solve([&](double p) { return binom_tail_at_most(p, successes) >= alpha / 2; });
    return {lower, upper};
}

struct BatchSummary {
    std::size_t runs = 0;
    std::uint32_t max_rounds = 40;
    std::uint32_t bin_width = 2;
    std::vector<std::size_t> round_histogram;  // bin i = rounds in [1+2i, 3+2i)
    std::size_t sentinel_count = 0;            // runs at max_rounds + 1
    std::vector<std::size_t> cvg_histogram;    // final convergence, 20 bins over [0,1]
    std::size_t incomplete_runs = 0;
    double incomplete_fraction = 0.0;
    std::size_t decided_runs = 0;  // runs contributing a decision metric
    double mean_decision = 0.0;
    double decision_ci95 = 0.0;
    double mean_signed_cvg = 0.0;
    double mean_abs_cvg = 0.0;
    double confused_fraction = 0.0;
    double mean_end_time_ms = 0.0;
};

// Rounds-to-consensus of a run for histogram purposes: the sync-mode round
// (with its failure sentinel), or the slowest correct node's round in async
// mode (sentinel when the run did not complete).
inline std::uint32_t consensus_round(const RunResult& r, std::uint32_t max_rounds) {
    if (r.rounds_to_consensus > 0) return r.rounds_to_consensus;
    if (!r.complete) return max_rounds + 1;
    std::uint32_t worst = 1;
    for (const auto& o : r.outcomes) worst = std::max(worst, o.round);
    return worst;
}

inline BatchSummary summarize(std::span<const RunResult> results, std::uint32_t max_rounds) {
    if (results.empty()) throw std::invalid_argument("summarize: no runs");
    BatchSummary s;
    s.runs = results.size();
    s.max_rounds = max_rounds;
    s.round_histogram.assign((max_rounds + s.bin_width - 1) / s.bin_width, 0);
    s.cvg_histogram.assign(20, 0);

    double decision_sum = 0.0, decision_sq = 0.0;
    double signed_sum = 0.0, abs_sum = 0.0, end_sum = 0.0;
    std::size_t confused = 0, correct_total = 0;
    for (const RunResult& r : results) {
        const std::uint32_t rounds = consensus_round(r, max_rounds);
        if (rounds > max_rounds) {
            ++s.sentinel_count;
        } else {
            const std::size_t bin = (rounds - 1) / s.bin_width;
            s.round_histogram.at(bin) += 1;
        }
        if (!r.complete) ++s.incomplete_runs;
        if (r.complete && r.d0 + r.d1 > 0) {
            const double d = decision_metric(r.d0, r.d1);
            decision_sum += d;
            decision_sq += d * d;
            ++s.decided_runs;
        }
        const double cvg = signed_convergence(r.final_c0, r.final_c1);
        signed_sum += cvg;
        abs_sum += std::abs(cvg);
        const std::size_t cvg_bin =
            std::min<std::size_t>(19, static_cast<std::size_t>(std::abs(cvg) * 20.0));
        s.cvg_histogram[cvg_bin] += 1;
        end_sum += r.end_time_ms;
        confused += r.confused;
        correct_total += r.correct_count;
    }
    s.incomplete_fraction = static_cast<double>(s.incomplete_runs) / s.runs;
    if (s.decided_runs > 0) {
        s.mean_decision = decision_sum / s.decided_runs;
        if (s.decided_runs > 1) {
            const double var = (decision_sq - decision_sum * decision_sum / s.decided_runs) /
                               (s.decided_runs - 1);
            s.decision_ci95 = 1.96 * std::sqrt(std::max(var, 0.0) / s.decided_runs);
        }
    }
    s.mean_signed_cvg = signed_sum / s.runs;
    s.mean_abs_cvg = abs_sum / s.runs;
    s.mean_end_time_ms = end_sum / s.runs;
    if (correct_total > 0) s.confused_fraction = static_cast<double>(confused) / correct_total;
    return s;
}

}  // namespace sky
