#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

namespace sky {

// Full pmf/cdf table for Binomial(n, p). Terms are grown outward from the
// mode by the ratio recurrence, so tails stay accurate where a plain
// left-to-right product would underflow (needed up to n = 400).
class BinomialTable {
  public:
    BinomialTable(int n, double p) : n_(n), p_(p), pmf_(n + 1, 0.0), cdf_(n + 1, 0.0) {
        if (n < 0) throw std::invalid_argument("binomial: n must be >= 0");
        if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("binomial: p must be in [0,1]");
        if (p == 0.0) {
            pmf_[0] = 1.0;
        } else if (p == 1.0) {
            pmf_[n] = 1.0;
        } else {
            const double q = 1.0 - p;
            int mode = static_cast<int>(std::floor((n + 1) * p));
            if (mode > n) mode = n;
            const double log_mode = std::lgamma(n + 1.0) - std::lgamma(mode + 1.0) -
                                    std::lgamma(n - mode + 1.0) + mode * std::log(p) +
                                    (n - mode) * std::log(q);
            pmf_[mode] = std::exp(log_mode);
            const double ratio_up = p / q;
            for (int k = mode; k < n; ++k)
                pmf_[k + 1] = pmf_[k] * (static_cast<double>(n - k) / (k + 1)) * ratio_up;
            const double ratio_down = q / p;
            for (int k = mode; k > 0; --k)
                pmf_[k - 1] = pmf_[k] * (static_cast<double>(k) / (n - k + 1)) * ratio_down;
        }
        double acc = 0.0;
        for (int k = 0; k <= n; ++k) {
            acc += pmf_[k];
            cdf_[k] = acc;
        }
    }

    int n() const { return n_; }
    double p() const { return p_; }

    double pmf(int k) const {
        if (k < 0 || k > n_) return 0.0;
        return pmf_[k];
    }

    // P(X <= k), clamped for out-of-range k.
    double cdf(int k) const {
        if (k < 0) return 0.0;
        if (k >= n_) return 1.0;
        return cdf_[k];
    }

  private:
    int n_;
    double p_;
    std::vector<double> pmf_;
    std::vector<double> cdf_;
};

struct BinomPoint {
    double pmf;
    double cdf;
};

inline BinomPoint binom(int k, int n, double p) {
    if (k < 0 || k > n) throw std::invalid_argument("binom: k out of [0, n]");
    BinomialTable table(n, p);
    return {table.pmf(k), table.cdf(k)};
}

}  // namespace sky
