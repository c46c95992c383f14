#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "sky/binomial.hpp"
#include "sky/opinion.hpp"

namespace sky {

// Population densities: correct nodes holding 0/1 and faulty nodes
// broadcasting 0/1/nothing. All five sum to 1.
struct MeanFieldState {
    double c0 = 0.5;
    double c1 = 0.5;
    double f0 = 0.0;
    double f1 = 0.0;
    double fs = 0.0;
    double mean_degree = 30.0;

    double faulty() const { return f0 + f1 + fs; }
    double correct() const { return c0 + c1; }

    void validate() const {
        if (c0 < 0 || c1 < 0 || f0 < 0 || f1 < 0 || fs < 0)
            throw std::invalid_argument("mean-field state: negative density");
        if (std::abs(c0 + c1 + f0 + f1 + fs - 1.0) > 1e-12)
            throw std::invalid_argument("mean-field state: densities must sum to 1");
        if (!(mean_degree > 0)) throw std::invalid_argument("mean-field state: D must be > 0");
    }
};

// Densities of broadcast opinions among broadcasting nodes; a0 + a1 = 1.
struct EffectiveDensities {
    double a0 = 0.5;
    double a1 = 0.5;
};

inline EffectiveDensities effective_densities(const MeanFieldState& s) {
    if (s.fs >= 1.0) throw std::invalid_argument("effective_densities: every node is silent");
    return {(s.c0 + s.f0) / (1.0 - s.fs), (s.c1 + s.f1) / (1.0 - s.fs)};
}

// s0/s1: per-step probability that a correct node flips 0->1 / 1->0.
struct FlipRates {
    double s0 = 0.0;
    double s1 = 0.0;
};

// Two discretizations of the flip rates.
//   closed_form:       quantile-bounded closed expressions (majority: CDF up
//                      to D/2-1 plus a half-count tie term for even D;
//                      annealing: CDF at the lower quintile plus boundary-
//                      weighted mass over the middle band).
//   exact_expectation: exact expectation of the implemented stochastic rule
//                      over a Binomial(D, a) followee sample with the node's
//                      own opinion counted and strict ratio boundaries.
// The closed forms are what flip_mr/flip_sa return by default; the dynamics
// default to exact_expectation, which matches large-population one-step
// simulations (see tests) and the published tolerance curves.
enum class RateForm : std::uint8_t { closed_form, exact_expectation };

// How a fractional mean degree is snapped to the integer binomial order.
enum class DegreeRounding : std::uint8_t { nearest, down };

namespace detail {

inline int integer_degree(double D, DegreeRounding rounding) {
    if (!(D > 0)) throw std::invalid_argument("flip rates: D must be > 0");
    const int n = rounding == DegreeRounding::nearest ? static_cast<int>(std::llround(D))
                                                      : static_cast<int>(std::floor(D));
    return n < 1 ? 1 : n;
}

// Weight w[k] = flip probability given k of D sampled followees broadcast the
// node's current opinion; the rate is E[w(K)], K ~ Binomial(D, a_current).
inline std::vector<double> flip_weights(ModelKind model, RateForm form, int D) {
    std::vector<double> w(static_cast<std::size_t>(D) + 1, 0.0);
    if (model == ModelKind::mr) {
        if (form == RateForm::closed_form) {
            for (int k = 0; k <= D / 2 - 1; ++k) w[k] = 1.0;
            if (D % 2 == 0) w[D / 2] += 0.5;
        } else {
            for (int k = 0; k <= D; ++k) {
                const int n_own = k + 1;
                const int n_other = D - k;
                if (n_other > n_own) w[k] = 1.0;
                else if (n_other == n_own) w[k] = 0.5;
            }
        }
    } else if (model == ModelKind::sa) {
        if (form == RateForm::closed_form) {
            for (int k = 0; k <= D / 5; ++k) w[k] += 1.0;
            const int lo = (D + 4) / 5;
            const int hi = (4 * D) / 5;
            for (int k = lo; k <= hi; ++k)
                w[k] += static_cast<double>(D - k) / D + 0.5 / D;
        } else {
            for (int k = 0; k <= D; ++k) {
                const int n_own = k + 1;
                const int n_other = D - k;
                if (n_other > 4 * n_own) w[k] = 1.0;
                else if (n_own > 4 * n_other) w[k] = 0.0;
                else w[k] = static_cast<double>(n_other) / (n_own + n_other);
            }
        }
    } else {
        throw std::invalid_argument("flip rates: model must be mr or sa");
    }
    return w;
}

inline double expect_weight(const std::vector<double>& w, const BinomialTable& table) {
    double s = 0.0;
    for (int k = 0; k <= table.n(); ++k) s += table.pmf(k) * w[static_cast<std::size_t>(k)];
    return s;
}

inline FlipRates flip_rates(ModelKind model, double D, double a0, double a1, RateForm form,
                            DegreeRounding rounding) {
    if (std::abs(a0 + a1 - 1.0) > 1e-9)
        throw std::invalid_argument("flip rates: a0 + a1 must equal 1");
    const int n = integer_degree(D, rounding);
    const auto w = flip_weights(model, form, n);
    const BinomialTable t0(n, a0), t1(n, a1);
    // s1 flips 1->0: the node's current opinion is 1, sampled count ~ Bin(D, a1)
    return {expect_weight(w, t0), expect_weight(w, t1)};
}

}  // namespace detail

inline FlipRates flip_mr(double D, double a0, double a1,
                         RateForm form = RateForm::closed_form,
                         DegreeRounding rounding = DegreeRounding::nearest) {
    if (D < 2) throw std::invalid_argument("flip_mr: D must be >= 2");
    return detail::flip_rates(ModelKind::mr, D, a0, a1, form, rounding);
}

inline FlipRates flip_sa(double D, double a0, double a1,
                         RateForm form = RateForm::closed_form,
                         DegreeRounding rounding = DegreeRounding::nearest) {
    if (D < 5) throw std::invalid_argument("flip_sa: D must be >= 5");
    return detail::flip_rates(ModelKind::sa, D, a0, a1, form, rounding);
}

// dc0/dt = c1*s1 - c0*s0 under the given model; sky is the mean of the
// majority and annealing rates.
inline double dc0_dt(const MeanFieldState& state, ModelKind model, const EffectiveDensities& eff,
                     RateForm form = RateForm::exact_expectation,
                     DegreeRounding rounding = DegreeRounding::nearest) {
    switch (model) {
        case ModelKind::mr: {
            const FlipRates r = flip_mr(state.mean_degree, eff.a0, eff.a1, form, rounding);
            return state.c1 * r.s1 - state.c0 * r.s0;
        }
        case ModelKind::sa: {
            const FlipRates r = flip_sa(state.mean_degree, eff.a0, eff.a1, form, rounding);
            return state.c1 * r.s1 - state.c0 * r.s0;
        }
        case ModelKind::sky: {
            const FlipRates m = flip_mr(state.mean_degree, eff.a0, eff.a1, form, rounding);
            const FlipRates s = flip_sa(state.mean_degree, eff.a0, eff.a1, form, rounding);
            return 0.5 * ((state.c1 * m.s1 - state.c0 * m.s0) +
                          (state.c1 * s.s1 - state.c0 * s.s0));
        }
        default:
            throw std::invalid_argument("dc0_dt: model must be mr, sa or sky");
    }
}

enum class PopulationEvent : std::uint8_t { faulty_leave, correct_join_0 };

inline MeanFieldState apply_population_event(const MeanFieldState& s, PopulationEvent event) {
    MeanFieldState out = s;
    if (event == PopulationEvent::faulty_leave) {
        const double f = s.faulty();
        if (f >= 1.0) throw std::invalid_argument("faulty_leave: no correct nodes remain");
        out.c0 = s.c0 / (1.0 - f);
        out.c1 = s.c1 / (1.0 - f);
        out.f0 = out.f1 = out.fs = 0.0;
    } else {
        // as many new correct 0-holders join as there were correct 0-holders
        out.c0 = 2.0 * s.c0 / (1.0 + s.c0);
        out.c1 = s.c1 / (1.0 + s.c0);
        out.f0 = s.f0 / (1.0 + s.c0);
        out.f1 = s.f1 / (1.0 + s.c0);
        out.fs = s.fs / (1.0 + s.c0);
    }
    return out;
}

// Density-level adversary mappings from the fault scenarios: given current
// correct densities and total faulty density f, what broadcast densities do
// receivers observe.
enum class AdversaryMap : std::uint8_t {
    none,            // faulty densities from the state's own f0/f1/fs
    always_one,      // a0 = c0,            a1 = c1 + f
    always_zero,     // a0 = c0 + f,        a1 = c1
    split_half,      // a0 = c0 + f/2,      a1 = c1 + f/2
    random_opinion,  // same densities as split_half
    silent,          // a0 = c0/(1-f),      a1 = c1/(1-f)
};

inline EffectiveDensities adversary_densities(AdversaryMap map, double c0, double c1, double f) {
    switch (map) {
        case AdversaryMap::always_one: return {c0, c1 + f};
        case AdversaryMap::always_zero: return {c0 + f, c1};
        case AdversaryMap::split_half:
        case AdversaryMap::random_opinion: return {c0 + 0.5 * f, c1 + 0.5 * f};
        case AdversaryMap::silent:
            if (f >= 1.0) throw std::invalid_argument("silent mapping: f must be < 1");
            return {c0 / (1.0 - f), c1 / (1.0 - f)};
        case AdversaryMap::none: break;
    }
    return {c0, c1};
}

struct TrajectoryPoint {
    double t;
    double c0;
};

struct IntegrateOptions {
    double dt = 1.0;
    double t_max = 200.0;
    double rate_tolerance = 1e-9;  // |dc0/dt| below this stops the run
    RateForm form = RateForm::exact_expectation;
    DegreeRounding rounding = DegreeRounding::nearest;
};

// Forward-Euler evolution of c0 with the adversary mapping re-applied each
// step; c0 is clamped to [0, 1-f]. One step of dt=1 is one protocol round.
inline std::vector<TrajectoryPoint> integrate(const MeanFieldState& initial, ModelKind model,
                                              AdversaryMap adversary,
                                              const IntegrateOptions& opts = {}) {
    if (!(opts.dt > 0)) throw std::invalid_argument("integrate: dt must be > 0");
    initial.validate();
    const double f = initial.faulty();
    MeanFieldState s = initial;
    std::vector<TrajectoryPoint> traj;
    traj.push_back({0.0, s.c0});
    double t = 0.0;
    while (t < opts.t_max) {
        EffectiveDensities eff = adversary == AdversaryMap::none
                                     ? effective_densities(s)
                                     : adversary_densities(adversary, s.c0, s.c1, f);
        const double rate = dc0_dt(s, model, eff, opts.form, opts.rounding);
        if (std::abs(rate) < opts.rate_tolerance) break;
        double next = s.c0 + rate * opts.dt;
        if (next < 0.0) next = 0.0;
        if (next > 1.0 - f) next = 1.0 - f;
        if (next == s.c0) break;  // pinned at a boundary
        s.c0 = next;
        s.c1 = (1.0 - f) - s.c0;
        t += opts.dt;
        traj.push_back({t, s.c0});
    }
    return traj;
}

struct CriticalPoint {
    double p = 0.0;
    double mean_degree = 0.0;
    double f_critical = 0.0;
    double epsilon = 0.0;
};

// Largest faulty density f (resolution 1e-4) such that, starting from a
// correct majority p under the always-1 adversary, the limiting fraction of
// correct nodes at 0 stays >= 1 - epsilon.
inline CriticalPoint critical_point(double p, double D, double epsilon,
                                    ModelKind model = ModelKind::sky,
                                    const IntegrateOptions& opts = {}) {
    if (!(p >= 0.5 && p <= 1.0)) throw std::invalid_argument("critical_point: p must be in [0.5, 1]");
    if (!(epsilon > 0.0 && epsilon < 0.5))
        throw std::invalid_argument("critical_point: epsilon must be in (0, 0.5)");
    const auto survives = [&](double f) {
        MeanFieldState s;
        s.c0 = p * (1.0 - f);
        s.c1 = (1.0 - p) * (1.0 - f);
        s.f0 = 0.0;
        s.f1 = f;
        s.fs = 0.0;
        s.mean_degree = D;
        const auto traj = integrate(s, model, AdversaryMap::always_one, opts);
        return traj.back().c0 / (1.0 - f) >= 1.0 - epsilon;
    };
    CriticalPoint result{p, D, 0.0, epsilon};
    if (!survives(0.0)) return result;
    double lo = 0.0, hi = 0.9999;
    if (survives(hi)) {
        result.f_critical = hi;
        return result;
    }
    while (hi - lo > 1e-4) {
        const double mid = 0.5 * (lo + hi);
        if (survives(mid)) lo = mid;
        else hi = mid;
    }
    result.f_critical = lo;
    return result;
}

// Roots of dc0/dt over c0 in [0, 1-f] under the always-1 adversary: grid scan
// at 1e-3 for sign changes, refined by bisection to 1e-8; exact zeros on the
// grid (the boundaries included) are reported directly.
inline std::vector<double> fixed_points(double f, double D, ModelKind model,
                                        RateForm form = RateForm::exact_expectation,
                                        DegreeRounding rounding = DegreeRounding::nearest) {
    if (!(f >= 0.0 && f < 1.0)) throw std::invalid_argument("fixed_points: f must be in [0,1)");
    const double span = 1.0 - f;
    const auto rate_at = [&](double c0) {
        MeanFieldState s;
        s.c0 = c0;
        s.c1 = span - c0;
        s.f1 = f;
        s.mean_degree = D;
        return dc0_dt(s, model, adversary_densities(AdversaryMap::always_one, s.c0, s.c1, f),
                      form, rounding);
    };
    const std::size_t cells = 1000;
    std::vector<double> roots;
    const auto push_root = [&](double r) {
        if (roots.empty() || std::abs(roots.back() - r) > 1e-7) roots.push_back(r);
    };
    double prev_x = 0.0;
    double prev_v = rate_at(prev_x);
    if (std::abs(prev_v) < 1e-14) push_root(prev_x);
    for (std::size_t i = 1; i <= cells; ++i) {
        const double x = span * static_cast<double>(i) / cells;
        const double v = rate_at(x);
        if (std::abs(v) < 1e-14) {
            push_root(x);
        } else if (prev_v != 0.0 && std::signbit(prev_v) != std::signbit(v)) {
            double lo = prev_x, hi = x, vlo = prev_v;
            while (hi - lo > 1e-8) {
                const double mid = 0.5 * (lo + hi);
                const double vm = rate_at(mid);
                if (vm == 0.0 || std::signbit(vm) == std::signbit(vlo)) {
                    lo = mid;
                    vlo = vm;
                } else {
                    hi = mid;
                }
            }
            push_root(0.5 * (lo + hi));
        }
        prev_x = x;
        prev_v = v;
    }
    return roots;
}

}  // namespace sky
