// cluster.hpp -- price/moving-average intersection clusters, duration
// distributions and the power-law fit of P(tau, n)
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <vector>

#include "centropy/common.hpp"
#include "centropy/moving_average.hpp"
#include "centropy/series.hpp"

namespace centropy {

enum class ClusterSide { above, below };

/// Maximal run of samples between two consecutive price/MA intersections.
/// start/end are parent-series indices; duration = end - start >= 1.
struct Cluster {
    std::size_t start{0};
    std::size_t end{0};
    ClusterSide side{ClusterSide::above};

    std::size_t duration() const { return end - start; }
};

/// Interior clusters of the sign runs of d_t = p_t - ma_t.
///
/// Ties (d_t == 0) inherit the most recent nonzero sign; a leading run of
/// zeros is skipped. The partial runs before the first and after the last
/// intersection are discarded, so fewer than two sign changes yield an empty
/// list (a degenerate partition, not an error).
inline std::vector<Cluster> extract_clusters(const PriceSeries& series, const MovingAverageSeries& ma) {
    if (ma.values.empty()) throw error("moving average is empty");
    if (ma.offset + ma.size() > series.size())
        throw error("moving average does not fit its parent series (length mismatch)");
    if (ma.size() != series.size() - ma.window)
        throw error("moving average length " + std::to_string(ma.size()) + " does not match N - n = " +
                    std::to_string(series.size() - ma.window));
    if (ma.size() < 2) return {};

    std::vector<Cluster> clusters;
    int run_sign = 0;                 // sign of the current run; 0 until first nonzero d
    std::size_t run_start = 0;        // absolute parent index where the run began
    bool have_interior_start = false; // true once the first intersection was seen

    for (std::size_t i = 0; i < ma.size(); ++i) {
        const std::size_t t = ma.offset + i;
        const double d = series.values[t] - ma.values[i];
        int s = (d > 0.0) ? 1 : (d < 0.0 ? -1 : 0);
        if (s == 0) s = run_sign;  // tie rule
        if (s == 0) continue;      // leading zeros

        if (run_sign == 0) {
            run_sign = s;
            run_start = t;
            continue;
        }
        if (s != run_sign) {
            if (have_interior_start) {
                clusters.push_back({run_start, t, run_sign > 0 ? ClusterSide::above : ClusterSide::below});
            }
            have_interior_start = true;
            run_sign = s;
            run_start = t;
        }
    }
    return clusters;
}

/// Histogram of cluster durations with exact probabilities count/total.
struct ClusterDistribution {
    std::size_t window{0};
    std::map<std::size_t, std::size_t> counts;  // tau -> N(tau, n), tau ascending
    std::size_t total{0};

    double probability(std::size_t tau) const {
        auto it = counts.find(tau);
        if (it == counts.end()) return 0.0;
        return static_cast<double>(it->second) / static_cast<double>(total);
    }
    std::size_t distinct_durations() const { return counts.size(); }
    std::size_t min_duration() const { return counts.begin()->first; }
    std::size_t max_duration() const { return counts.rbegin()->first; }
};

inline ClusterDistribution cluster_distribution(const std::vector<Cluster>& clusters, std::size_t window) {
    if (clusters.empty()) throw error("cannot build a distribution from an empty cluster list");
    ClusterDistribution dist;
    dist.window = window;
    dist.total = clusters.size();
    for (const Cluster& c : clusters) ++dist.counts[c.duration()];
    return dist;
}

struct PowerLawFitOptions {
    double tau_min{1.0};
    double tau_max{std::numeric_limits<double>::infinity()};  // effective upper bound is min(n, tau_max)
    double bin_ratio{1.2};
};

/// P(tau, n) ~ tau^-alpha * exp(-tau/n); alpha from a log-log regression,
/// the cutoff scale pinned to the window.
struct PowerLawFit {
    double alpha{0.0};
    double cutoff_scale{0.0};  // the n in exp(-tau/n)
    double tau_min{0.0};
    double tau_max{0.0};
    double r_squared{0.0};
    std::size_t bins{0};
};

/// Least-squares fit of log P against log tau over tau in [tau_min, min(n, tau_max)].
///
/// Probabilities are first averaged inside logarithmic bins (successive edges
/// grow by bin_ratio; the per-bin estimate divides the binned mass by the
/// number of integer durations the bin covers). Bins with no observed mass
/// are skipped. Requires at least 5 distinct durations inside the fit range.
inline PowerLawFit fit_power_law(const ClusterDistribution& dist, const PowerLawFitOptions& options = {}) {
    if (dist.total == 0 || dist.counts.empty()) throw error("empty cluster distribution");
    if (options.bin_ratio <= 1.0) throw error("bin ratio must exceed 1");

    const double upper = std::min({static_cast<double>(dist.window), options.tau_max,
                                   static_cast<double>(dist.max_duration())});
    const double lower = std::max(1.0, options.tau_min);
    std::size_t distinct_in_range = 0;
    for (const auto& [tau, count] : dist.counts) {
        const auto t = static_cast<double>(tau);
        if (t >= lower && t <= upper) ++distinct_in_range;
    }
    if (distinct_in_range < 5)
        throw error("insufficient distinct durations in fit range [" + format_double(lower) + ", " +
                    format_double(upper) + "]: " + std::to_string(distinct_in_range));

    const double inv_total = 1.0 / static_cast<double>(dist.total);
    std::vector<double> xs, ys;
    double edge = lower;
    while (edge <= upper) {
        const double next = edge * options.bin_ratio;
        // integer durations covered by [edge, min(next, upper+1))
        const auto first = static_cast<std::size_t>(std::ceil(edge - 1e-9));
        auto last = static_cast<std::size_t>(std::ceil(std::min(next, upper + 1.0) - 1e-9)) - 1;
        last = std::min(last, static_cast<std::size_t>(upper + 1e-9));
        if (last >= first) {
            double mass = 0.0;
            double log_center = 0.0;
            std::size_t lattice = 0;
            for (std::size_t tau = first; tau <= last; ++tau) {
                auto it = dist.counts.find(tau);
                if (it != dist.counts.end()) mass += static_cast<double>(it->second) * inv_total;
                log_center += std::log(static_cast<double>(tau));
                ++lattice;
            }
            if (mass > 0.0 && lattice > 0) {
                xs.push_back(log_center / static_cast<double>(lattice));
                ys.push_back(std::log(mass / static_cast<double>(lattice)));
            }
        }
        edge = next;
    }

    const std::size_t k = xs.size();
    if (k < 3) throw error("fewer than 3 populated bins in fit range");

    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= static_cast<double>(k);
    my /= static_cast<double>(k);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const double dx = xs[i] - mx;
        const double dy = ys[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx <= 0.0) throw error("degenerate fit range (no spread in log tau)");
    const double slope = sxy / sxx;
    double r2 = 1.0;
    if (syy > 0.0) {
        double ss_res = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            const double resid = (ys[i] - my) - slope * (xs[i] - mx);
            ss_res += resid * resid;
        }
        r2 = 1.0 - ss_res / syy;
    }

    PowerLawFit fit;
    fit.alpha = -slope;
    fit.cutoff_scale = static_cast<double>(dist.window);
    fit.tau_min = lower;
    fit.tau_max = upper;
    fit.r_squared = r2;
    fit.bins = k;
    return fit;
}

}  // namespace centropy
