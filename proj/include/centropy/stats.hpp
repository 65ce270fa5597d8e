// stats.hpp -- paired t-test on entropy curves and discrete KL divergence
#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <span>
#include <vector>

#include "centropy/common.hpp"
#include "centropy/entropy.hpp"

namespace centropy {
namespace detail {

inline double log_beta(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

// Modified Lentz evaluation of the incomplete-beta continued fraction.
inline double incomplete_beta_cf(double x, double a, double b) {
    constexpr double tiny = 1e-300;
    constexpr double tolerance = 1e-15;
    constexpr int max_terms = 200000;

    auto numer = [x, a, b](int n) {
        if (n % 2 == 0) {
            const double m = n / 2;
            return m * (b - m) * x / ((a + 2.0 * m - 1.0) * (a + 2.0 * m));
        }
        const double m = (n - 1) / 2;
        return -(a + m) * (a + b + m) * x / ((a + 2.0 * m) * (a + 2.0 * m + 1.0));
    };

    double f = 1.0;  // denom(0)
    double c = f;
    double d = 0.0;
    for (int n = 1; n < max_terms; ++n) {
        d = 1.0 + numer(n) * d;
        if (d == 0.0) d = tiny;
        c = 1.0 + numer(n) / c;
        if (c == 0.0) c = tiny;
        d = 1.0 / d;
        const double mult = c * d;
        f *= mult;
        if (std::fabs(mult - 1.0) <= tolerance) break;
    }
    return f;
}

}  // namespace detail

/// Regularized incomplete beta I_x(a, b).
inline double regularized_incomplete_beta(double x, double a, double b) {
    if (!(x >= 0.0 && x <= 1.0 && a > 0.0 && b > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double log_x = std::log(x);
    const double log_y = std::log1p(-x);
    if (x <= (a + 1.0) / (a + b + 2.0))
        return std::exp(log_x * a + log_y * b - detail::log_beta(a, b)) / a / detail::incomplete_beta_cf(x, a, b);
    return 1.0 - std::exp(log_y * b + log_x * a - detail::log_beta(a, b)) / b / detail::incomplete_beta_cf(1.0 - x, b, a);
}

/// Student-t CDF via the regularized incomplete beta.
inline double student_t_cdf(double t, double degrees_of_freedom) {
    const double v = degrees_of_freedom;
    if (!(v > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    const double tail = 0.5 * regularized_incomplete_beta(v / (t * t + v), 0.5 * v, 0.5);
    return t >= 0.0 ? 1.0 - tail : tail;
}

struct PairedTestResult {
    double t_statistic{0.0};
    std::size_t degrees_of_freedom{0};
    double p_value{1.0};
    bool reject_at_5pct{false};
    bool zero_variance{false};  // flagged when sd(d)=0 with a nonzero mean
    std::size_t pairs{0};
};

/// Two-sided paired t-test on d_i = a_i - b_i.
/// All-zero differences give t=0, p=1; zero variance with a nonzero mean is
/// flagged and reported as p=0.
inline PairedTestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw error("paired t-test requires equal-length samples");
    const std::size_t k = a.size();
    if (k < 2) throw error("paired t-test requires at least 2 pairs");

    double mean = 0.0;
    for (std::size_t i = 0; i < k; ++i) mean += a[i] - b[i];
    mean /= static_cast<double>(k);
    double ss = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const double d = (a[i] - b[i]) - mean;
        ss += d * d;
    }
    const double sd = std::sqrt(ss / static_cast<double>(k - 1));

    PairedTestResult result;
    result.degrees_of_freedom = k - 1;
    result.pairs = k;
    if (sd == 0.0) {
        if (mean == 0.0) {
            result.t_statistic = 0.0;
            result.p_value = 1.0;
        } else {
            result.zero_variance = true;
            result.t_statistic = mean > 0.0 ? std::numeric_limits<double>::infinity()
                                            : -std::numeric_limits<double>::infinity();
            result.p_value = 0.0;
        }
    } else {
        result.t_statistic = mean / (sd / std::sqrt(static_cast<double>(k)));
        result.p_value = 2.0 * (1.0 - student_t_cdf(std::fabs(result.t_statistic),
                                                    static_cast<double>(result.degrees_of_freedom)));
        if (result.p_value > 1.0) result.p_value = 1.0;
        if (result.p_value < 0.0) result.p_value = 0.0;
    }
    result.reject_at_5pct = result.p_value < 0.05;
    return result;
}

/// Pairs S values at matching (n, tau) points of two curve sets (intersection
/// of support) and delegates to paired_t_test.
inline PairedTestResult entropy_comparison_test(const std::vector<EntropyCurve>& market,
                                                const std::vector<EntropyCurve>& benchmark) {
    std::map<std::size_t, const EntropyCurve*> by_window;
    for (const EntropyCurve& c : benchmark) by_window[c.window] = &c;

    std::vector<double> a, b;
    for (const EntropyCurve& m : market) {
        auto it = by_window.find(m.window);
        if (it == by_window.end()) continue;
        const EntropyCurve& bench = *it->second;
        std::size_t j = 0;
        for (const auto& [tau, s] : m.points) {
            while (j < bench.points.size() && bench.points[j].first < tau) ++j;
            if (j == bench.points.size()) break;
            if (bench.points[j].first == tau) {
                a.push_back(s);
                b.push_back(bench.points[j].second);
            }
        }
    }
    if (a.empty()) throw error("entropy comparison has empty pairing support");
    if (a.size() < 2) throw error("entropy comparison needs at least 2 paired points");
    return paired_t_test(a, b);
}

/// Discrete KL divergence sum p log(p/q) in nats over a common support.
/// Terms with p_i = 0 contribute nothing; p_i > 0 with q_i = 0 yields +inf.
inline double kl_divergence(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) throw error("KL divergence requires a common support");
    if (p.empty()) throw error("KL divergence of empty distributions");
    double sum_p = 0.0, sum_q = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] < 0.0 || q[i] < 0.0) throw error("negative probability");
        sum_p += p[i];
        sum_q += q[i];
    }
    if (std::fabs(sum_p - 1.0) > 1e-9 || std::fabs(sum_q - 1.0) > 1e-9)
        throw error("KL divergence inputs must be normalized");

    double kl = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] == 0.0) continue;
        if (q[i] == 0.0) return std::numeric_limits<double>::infinity();
        kl += p[i] * std::log(p[i] / q[i]);
    }
    return kl;
}

}  // namespace centropy
