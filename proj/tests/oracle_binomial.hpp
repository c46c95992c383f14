#pragma once

// Exact rational binomial oracle (test-only). Independent of the production
// path: big-integer arithmetic over the exact rational value of the double p.
// Terms are built in one incremental pass so n = 400 stays tractable.

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

namespace oracle {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

inline BigInt choose(int n, int k) {
    if (k < 0 || k > n) return 0;
    if (k > n - k) k = n - k;
    BigInt result = 1;
    for (int i = 0; i < k; ++i) {
        result *= n - i;
        result /= i + 1;
    }
    return result;
}

inline Rational pow_rational(const Rational& base, int e) {
    Rational r = 1;
    for (int i = 0; i < e; ++i) r *= base;
    return r;
}

inline Rational exact_pmf(int k, int n, const Rational& p) {
    return Rational(choose(n, k)) * pow_rational(p, k) * pow_rational(1 - p, n - k);
}

// All pmf/cdf values of Binomial(n, exact(p)) via the term ratio
// t_k = t_{k-1} * (n-k+1)/k * p/(1-p).
class ExactBinomial {
  public:
    ExactBinomial(int n, double p) : n_(n), pmf_(n + 1), cdf_(n + 1) {
        if (!(p > 0.0 && p < 1.0))
            throw std::invalid_argument("ExactBinomial: p must be in (0,1)");
        const Rational rp(p);
        const Rational rq = 1 - rp;
        const Rational ratio = rp / rq;
        Rational term = pow_rational(rq, n);
        Rational acc = 0;
        for (int k = 0; k <= n; ++k) {
            if (k > 0) term *= ratio * Rational(n - k + 1) / Rational(k);
            acc += term;
            pmf_[k] = static_cast<double>(term);
            cdf_[k] = static_cast<double>(acc);
        }
    }

    double pmf(int k) const { return pmf_[k]; }
    double cdf(int k) const { return cdf_[k]; }
    int n() const { return n_; }

  private:
    int n_;
    std::vector<double> pmf_;
    std::vector<double> cdf_;
};

// (pmf, cdf) at the exact rational value of the double p.
inline std::pair<double, double> exact_pmf_cdf(int k, int n, double p) {
    if (p <= 0.0 || p >= 1.0) {
        const Rational rp(p);
        Rational cdf = 0;
        Rational pmf = 0;
        for (int i = 0; i <= k; ++i) {
            const Rational term = exact_pmf(i, n, rp);
            cdf += term;
            if (i == k) pmf = term;
        }
        return {static_cast<double>(pmf), static_cast<double>(cdf)};
    }
    const ExactBinomial table(n, p);
    return {table.pmf(k), table.cdf(k)};
}

inline double rel_err(double got, double expected) {
    if (expected == 0.0) return got == 0.0 ? 0.0 : 1.0;
    return std::abs(got - expected) / std::abs(expected);
}

}  // namespace oracle
