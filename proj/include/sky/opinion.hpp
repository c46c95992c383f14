#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string_view>

#include "sky/random.hpp"

namespace sky {

enum class Opinion : std::uint8_t { zero = 0, one = 1 };

inline Opinion opposite(Opinion o) { return o == Opinion::zero ? Opinion::one : Opinion::zero; }

// Counts over a node's own opinion plus its (non-suspect) followees' buffered
// opinions. n0 + n1 >= 1 whenever a rule is applied.
struct OpinionCounts {
    std::uint32_t n0 = 0;
    std::uint32_t n1 = 0;
    std::uint32_t total() const { return n0 + n1; }
};

enum class DecisionKind : std::uint8_t { decided0, decided1, confused };

enum class ModelKind : std::uint8_t { sky, mr, sa, voter, sznajd };

inline std::string_view model_name(ModelKind m) {
    switch (m) {
        case ModelKind::sky: return "sky";
        case ModelKind::mr: return "mr";
        case ModelKind::sa: return "sa";
        case ModelKind::voter: return "voter";
        case ModelKind::sznajd: return "sznajd";
    }
    return "?";
}

inline ModelKind parse_model(std::string_view name) {
    if (name == "sky") return ModelKind::sky;
    if (name == "mr") return ModelKind::mr;
    if (name == "sa") return ModelKind::sa;
    if (name == "voter") return ModelKind::voter;
    if (name == "sznajd") return ModelKind::sznajd;
    throw std::invalid_argument("unknown model: " + std::string(name));
}

namespace detail {
inline void require_counts(const OpinionCounts& c) {
    if (c.total() == 0) throw std::invalid_argument("opinion rule: n0 + n1 must be >= 1");
}
}  // namespace detail

// Majority rule: adopt the strict majority, fair coin on ties.
inline Opinion mr_rule(const OpinionCounts& c, Rng& rng) {
    detail::require_counts(c);
    if (c.n0 > c.n1) return Opinion::zero;
    if (c.n1 > c.n0) return Opinion::one;
    return rng.coin() ? Opinion::one : Opinion::zero;
}

// Annealing rule: deterministic beyond a strict 4:1 ratio, otherwise adopt 0
// with probability n0/(n0+n1).
inline Opinion sa_rule(const OpinionCounts& c, Rng& rng) {
    detail::require_counts(c);
    if (c.n0 > 4 * c.n1) return Opinion::zero;
    if (c.n1 > 4 * c.n0) return Opinion::one;
    const double p0 = static_cast<double>(c.n0) / c.total();
    return rng.uniform01() < p0 ? Opinion::zero : Opinion::one;
}

// Fair per-application mixture of the majority and annealing rules.
// mr_probability is a sensitivity knob; 1/2 everywhere in this project.
inline Opinion sky_rule(const OpinionCounts& c, Rng& rng, double mr_probability = 0.5) {
    detail::require_counts(c);
    return rng.uniform01() < mr_probability ? mr_rule(c, rng) : sa_rule(c, rng);
}

// Adopt the opinion of one uniformly chosen followee.
inline Opinion voter_rule(std::span<const Opinion> followee_opinions, Rng& rng) {
    if (followee_opinions.empty())
        throw std::invalid_argument("voter_rule: needs at least one followee opinion");
    return followee_opinions[rng.below(followee_opinions.size())];
}

// Two distinct followees drawn without replacement; adopt their opinion iff
// they agree, else keep the current one.
inline Opinion sznajd_rule(Opinion current, std::span<const Opinion> followee_opinions, Rng& rng) {
    const std::size_t n = followee_opinions.size();
    if (n < 2) throw std::invalid_argument("sznajd_rule: needs at least two followee opinions");
    const std::size_t i = rng.below(n);
    std::size_t j = rng.below(n - 1);
    if (j >= i) ++j;
    if (followee_opinions[i] == followee_opinions[j]) return followee_opinions[i];
    return current;
}

// Final decision with strict thresholds: decided0 iff n0 > (n0+n1)*T, same
// for 1; anything else is confused. T in (0.5, 1] makes the cases exclusive.
inline DecisionKind final_decision(const OpinionCounts& c, double T) {
    detail::require_counts(c);
    if (!(T > 0.5 && T <= 1.0)) throw std::invalid_argument("final_decision: T must be in (0.5, 1]");
    const double threshold = static_cast<double>(c.total()) * T;
    if (static_cast<double>(c.n0) > threshold) return DecisionKind::decided0;
    if (static_cast<double>(c.n1) > threshold) return DecisionKind::decided1;
    return DecisionKind::confused;
}

}  // namespace sky
