// moving_average.hpp -- backward/centered/forward moving averages and window grids
#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "centropy/common.hpp"
#include "centropy/series.hpp"

namespace centropy {

enum class MaVariant { backward, centered, forward };

inline const char* to_string(MaVariant v) {
    switch (v) {
        case MaVariant::backward: return "backward";
        case MaVariant::centered: return "centered";
        case MaVariant::forward: return "forward";
    }
    return "backward";
}

inline MaVariant ma_variant_from_string(const std::string& s) {
    if (s == "backward") return MaVariant::backward;
    if (s == "centered") return MaVariant::centered;
    if (s == "forward") return MaVariant::forward;
    throw error("unknown moving-average variant: " + s);
}

/// Moving average of window n over a parent series of length N.
/// values has length exactly N - n; values[i] is the mean of n consecutive
/// parent values and is aligned with parent index offset + i.
struct MovingAverageSeries {
    std::size_t window{1};
    MaVariant variant{MaVariant::backward};
    std::size_t offset{0};
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
};

namespace detail {

// Sliding-window sum with Kahan compensation. Multi-million-point runs
// accumulate enough rounding drift to matter at the 1e-9 level otherwise.
class CompensatedSum {
public:
    void add(double x) {
        const double y = x - comp_;
        const double t = sum_ + y;
        comp_ = (t - sum_) - y;
        sum_ = t;
    }
    void subtract(double x) { add(-x); }
    double value() const { return sum_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

}  // namespace detail

/// Single-pass moving average.
/// backward: value at parent index t averages series[t-n+1 .. t], t = n-1 .. N-2.
/// centered: window [t-floor(n/2), t+ceil(n/2)-1]; forward: [t, t+n-1].
/// All variants emit N - n values.
inline MovingAverageSeries moving_average(const PriceSeries& series, std::size_t window,
                                          MaVariant variant = MaVariant::backward) {
    const std::size_t n = window;
    const std::size_t N = series.size();
    if (n == 0) throw error("moving-average window must be positive");
    if (n >= N) throw error("moving-average window " + std::to_string(n) + " must be smaller than series length " +
                            std::to_string(N));

    MovingAverageSeries out;
    out.window = n;
    out.variant = variant;
    switch (variant) {
        case MaVariant::backward: out.offset = n - 1; break;
        case MaVariant::centered: out.offset = n / 2; break;
        case MaVariant::forward: out.offset = 0; break;
    }

    const std::size_t count = N - n;
    out.values.resize(count);

    // Window start for output index i: backward -> i, centered -> i, forward -> i.
    // All variants average series[w .. w+n-1] with w = i; only the alignment
    // (offset) differs.
    detail::CompensatedSum sum;
    for (std::size_t j = 0; j < n; ++j) sum.add(series.values[j]);
    const double inv_n = 1.0 / static_cast<double>(n);
    out.values[0] = sum.value() * inv_n;
    for (std::size_t i = 1; i < count; ++i) {
        sum.add(series.values[i + n - 1]);
        sum.subtract(series.values[i - 1]);
        out.values[i] = sum.value() * inv_n;
    }
    return out;
}

/// Strictly increasing list of moving-average windows.
struct WindowGrid {
    std::vector<std::size_t> windows;

    std::size_t size() const { return windows.size(); }
    std::size_t max_window() const { return windows.empty() ? 0 : windows.back(); }

    void validate(std::size_t shortest_series_length) const {
        if (windows.empty()) throw error("window grid is empty");
        std::size_t prev = 0;
        for (std::size_t w : windows) {
            if (w == 0) throw error("window grid contains zero");
            if (w <= prev) throw error("window grid must be strictly increasing");
            prev = w;
        }
        if (windows.back() >= shortest_series_length)
            throw error("max window " + std::to_string(windows.back()) + " must be smaller than shortest series (" +
                        std::to_string(shortest_series_length) + ")");
    }
};

/// The standard grid: {30, 50, 100, 150, 200} then steps of 100 up to max_n.
inline WindowGrid default_window_grid(std::size_t max_n) {
    if (max_n < 30) throw error("window grid maximum must be at least 30");
    WindowGrid grid;
    for (std::size_t w : {std::size_t{30}, std::size_t{50}, std::size_t{100}, std::size_t{150}, std::size_t{200}})
        if (w <= max_n) grid.windows.push_back(w);
    for (std::size_t w = 300; w <= max_n; w += 100) grid.windows.push_back(w);
    return grid;
}

}  // namespace centropy
