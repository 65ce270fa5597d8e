// entropy.hpp -- cluster entropy curves, the Market Dynamic Index I(M,n)
// and the Market Horizon Dependence H(M,n) = I(M,n) - I(1,n)
#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "centropy/cluster.hpp"
#include "centropy/common.hpp"

namespace centropy {

/// Per-duration entropy curve: (tau, S(tau,n)) with tau strictly increasing.
/// S is the self-information -log P(tau,n) in nats; for distributions of the
/// form tau^-alpha exp(-tau/n) it follows S0 + alpha log tau + tau/n.
struct EntropyCurve {
    std::size_t window{0};
    std::vector<std::pair<std::size_t, double>> points;

    std::size_t size() const { return points.size(); }
};

inline EntropyCurve cluster_entropy(const ClusterDistribution& dist) {
    if (dist.total == 0 || dist.counts.empty()) throw error("empty cluster distribution");
    EntropyCurve curve;
    curve.window = dist.window;
    curve.points.reserve(dist.counts.size());
    const double log_total = std::log(static_cast<double>(dist.total));
    for (const auto& [tau, count] : dist.counts)
        curve.points.emplace_back(tau, log_total - std::log(static_cast<double>(count)));
    return curve;
}

/// Scalar Shannon functional -sum P log P (non-negative convention, nats).
inline double shannon_entropy(const ClusterDistribution& dist) {
    if (dist.total == 0 || dist.counts.empty()) throw error("empty cluster distribution");
    double s = 0.0;
    const double inv_total = 1.0 / static_cast<double>(dist.total);
    for (const auto& [tau, count] : dist.counts) {
        const double p = static_cast<double>(count) * inv_total;
        s -= p * std::log(p);
    }
    return s;
}

enum class MdiNormalization { raw_sum, per_count };

inline const char* to_string(MdiNormalization n) {
    return n == MdiNormalization::raw_sum ? "raw" : "per-count";
}

inline MdiNormalization mdi_normalization_from_string(const std::string& s) {
    if (s == "raw" || s == "raw_sum") return MdiNormalization::raw_sum;
    if (s == "per-count" || s == "per_count") return MdiNormalization::per_count;
    throw error("unknown normalization mode: " + s);
}

/// I(n): sum of S(tau,n) over observed durations tau <= tau_max, optionally
/// divided by the number of contributing curve points.
inline double market_dynamic_index(const EntropyCurve& curve, std::size_t tau_max,
                                   MdiNormalization normalization = MdiNormalization::raw_sum) {
    if (curve.points.empty()) throw error("empty entropy curve");
    double sum = 0.0;
    std::size_t used = 0;
    for (const auto& [tau, s] : curve.points) {
        if (tau > tau_max) break;
        sum += s;
        ++used;
    }
    if (used == 0)
        throw error("tau_max " + std::to_string(tau_max) + " is below every observed duration (min " +
                    std::to_string(curve.points.front().first) + ")");
    if (normalization == MdiNormalization::per_count) return sum / static_cast<double>(used);
    return sum;
}

/// External one-period entropy used to rescale the horizon dependence.
struct ReferenceModel {
    std::string name;
    double one_period_index{0.0};  // I(1)_ref
};

/// I, H, h_rel grids over horizons M (rows) and windows n (columns), plus
/// optional rescaled reference rows. Missing (degenerate) cells are NaN.
struct HorizonReport {
    std::vector<std::size_t> windows;
    std::size_t horizons{0};
    std::vector<std::vector<double>> index;       // I(M,n)
    std::vector<std::vector<double>> dependence;  // H(M,n) = I(M,n) - I(1,n)
    std::vector<std::vector<double>> relative;    // h_rel = H / I(1,n)

    struct Rescaled {
        std::string model;
        double reference{0.0};                       // I(1)_ref
        std::vector<std::vector<double>> dependence; // H_ref = h_rel * I(1)_ref
        std::vector<std::vector<double>> index;      // I_ref  = I(1)_ref + H_ref
    };
    std::vector<Rescaled> references;
    std::vector<std::size_t> rescaling_skipped;  // windows where I(1,n) == 0

    static bool missing(double v) { return std::isnan(v); }
};

/// H(M,n) = I(M,n) - I(1,n) with per-reference proportional rescaling.
/// index_grid is indexed [M-1][window]; every column must have an M=1 entry.
inline HorizonReport horizon_dependence(const std::vector<std::vector<double>>& index_grid,
                                        const std::vector<std::size_t>& windows,
                                        const std::vector<ReferenceModel>& references = {}) {
    if (index_grid.empty()) throw error("empty index grid");
    const std::size_t horizons = index_grid.size();
    const std::size_t width = windows.size();
    for (const auto& row : index_grid)
        if (row.size() != width) throw error("index grid rows must all match the window list");

    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    HorizonReport report;
    report.windows = windows;
    report.horizons = horizons;
    report.index = index_grid;
    report.dependence.assign(horizons, std::vector<double>(width, nan));
    report.relative.assign(horizons, std::vector<double>(width, nan));

    for (std::size_t c = 0; c < width; ++c) {
        const double base = index_grid[0][c];
        if (HorizonReport::missing(base))
            throw error("missing I(1,n) value for window " + std::to_string(windows[c]));
        for (std::size_t m = 0; m < horizons; ++m) {
            const double v = index_grid[m][c];
            if (HorizonReport::missing(v)) continue;
            const double h = (m == 0) ? 0.0 : v - base;
            report.dependence[m][c] = h;
            if (base != 0.0) report.relative[m][c] = h / base;
        }
        if (base == 0.0 && !references.empty()) report.rescaling_skipped.push_back(windows[c]);
    }

    for (const ReferenceModel& ref : references) {
        HorizonReport::Rescaled r;
        r.model = ref.name;
        r.reference = ref.one_period_index;
        r.dependence.assign(horizons, std::vector<double>(width, nan));
        r.index.assign(horizons, std::vector<double>(width, nan));
        for (std::size_t c = 0; c < width; ++c) {
            if (index_grid[0][c] == 0.0) continue;  // flagged above, rescaling skipped
            for (std::size_t m = 0; m < horizons; ++m) {
                const double hr = report.relative[m][c];
                if (HorizonReport::missing(hr)) continue;
                r.dependence[m][c] = hr * ref.one_period_index;
                r.index[m][c] = ref.one_period_index + r.dependence[m][c];
            }
        }
        report.references.push_back(std::move(r));
    }
    return report;
}

}  // namespace centropy
