// fbm.hpp -- fractional Brownian motion generation with exact increment
// covariance (circulant embedding of fractional Gaussian noise)
#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <random>
#include <utility>
#include <vector>

#include <fftw3.h>

#include "centropy/common.hpp"
#include "centropy/series.hpp"

namespace centropy {

struct FbmConfig {
    double hurst{0.5};
    std::size_t length{0};  // path length N; N-1 fGn increments
    std::uint64_t seed{0};
    std::vector<std::size_t> segment_lengths;  // optional horizon mirror

    void validate() const {
        if (!(hurst > 0.0 && hurst < 1.0)) throw error("Hurst exponent must lie in (0, 1)");
        if (length < 2) throw error("fBm length must be at least 2");
        if (!segment_lengths.empty()) {
            std::size_t prev = 0;
            for (std::size_t l : segment_lengths) {
                if (l <= prev) throw error("segment lengths must be strictly increasing");
                prev = l;
            }
            if (segment_lengths.back() != length) throw error("last segment length must equal the path length");
        }
    }
};

namespace detail {

/// Deterministic standard normals: explicit Box-Muller over mt19937_64 bits,
/// so output is identical across standard libraries for a given seed.
class NormalSource {
public:
    explicit NormalSource(std::uint64_t seed) : engine_(seed) {}

    double next() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v;
        do {
            u = uniform();
        } while (u <= 0.0);
        v = uniform();
        const double r = std::sqrt(-2.0 * std::log(u));
        const double theta = 2.0 * std::numbers::pi * v;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

private:
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;  // [0, 1)
    }
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

/// Autocovariance of fractional Gaussian noise with unit step variance.
inline double fgn_autocovariance(double hurst, std::size_t lag) {
    if (lag == 0) return 1.0;
    const double k = static_cast<double>(lag);
    const double e = 2.0 * hurst;
    return 0.5 * (std::pow(k + 1.0, e) - 2.0 * std::pow(k, e) + std::pow(k - 1.0, e));
}

/// Exact O(N^2) fGn sampler (Durbin-Levinson conditional recursion).
/// Fallback when the circulant embedding is not non-negative definite.
inline std::vector<double> hosking_fgn(double hurst, std::size_t count, NormalSource& normals) {
    std::vector<double> gamma(count);
    for (std::size_t k = 0; k < count; ++k) gamma[k] = fgn_autocovariance(hurst, k);

    std::vector<double> out(count);
    std::vector<double> phi(count, 0.0), phi_prev(count, 0.0);
    double variance = gamma[0];
    out[0] = normals.next() * std::sqrt(variance);

    for (std::size_t t = 1; t < count; ++t) {
        double kappa = gamma[t];
        for (std::size_t j = 1; j < t; ++j) kappa -= phi_prev[j - 1] * gamma[t - j];
        kappa /= variance;
        phi[t - 1] = kappa;
        for (std::size_t j = 0; j + 1 < t; ++j) phi[j] = phi_prev[j] - kappa * phi_prev[t - 2 - j];
        variance *= (1.0 - kappa * kappa);

        double mean = 0.0;
        for (std::size_t j = 0; j < t; ++j) mean += phi[j] * out[t - 1 - j];
        out[t] = mean + normals.next() * std::sqrt(variance);
        std::swap(phi, phi_prev);
    }
    return out;
}

/// Davies-Harte sampler: embeds the fGn covariance in a circulant of size
/// 2*count, checks the spectrum for non-negativity and synthesises the path
/// with one half-spectrum inverse FFT. Returns false when the embedding has
/// genuinely negative eigenvalues.
inline bool davies_harte_fgn(double hurst, std::size_t count, NormalSource& normals, std::vector<double>& out) {
    const std::size_t m = 2 * count;
    std::vector<double> circ(m);
    for (std::size_t k = 0; k <= count; ++k) circ[k] = fgn_autocovariance(hurst, k);
    for (std::size_t k = 1; k < count; ++k) circ[m - k] = circ[k];

    // eigenvalues of the circulant = real FFT of its first row
    std::vector<double> eigen(count + 1);
    {
        fftw_complex* spectrum = fftw_alloc_complex(count + 1);
        fftw_plan plan = fftw_plan_dft_r2c_1d(static_cast<int>(m), circ.data(), spectrum, FFTW_ESTIMATE);
        fftw_execute(plan);
        fftw_destroy_plan(plan);
        for (std::size_t k = 0; k <= count; ++k) eigen[k] = spectrum[k][0];
        fftw_free(spectrum);
    }

    double max_eigen = 0.0;
    for (double l : eigen) max_eigen = std::max(max_eigen, l);
    const double tolerance = -1e-8 * max_eigen;
    for (double& l : eigen) {
        if (l < tolerance) return false;
        if (l < 0.0) l = 0.0;  // clip roundoff
    }

    const double inv_m = 1.0 / static_cast<double>(m);
    fftw_complex* half = fftw_alloc_complex(count + 1);
    half[0][0] = std::sqrt(eigen[0] * inv_m) * normals.next();
    half[0][1] = 0.0;
    for (std::size_t k = 1; k < count; ++k) {
        const double scale = std::sqrt(0.5 * eigen[k] * inv_m);
        half[k][0] = scale * normals.next();
        half[k][1] = scale * normals.next();
    }
    half[count][0] = std::sqrt(eigen[count] * inv_m) * normals.next();
    half[count][1] = 0.0;

    std::vector<double> synth(m);
    fftw_plan plan = fftw_plan_dft_c2r_1d(static_cast<int>(m), half, synth.data(), FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);
    fftw_free(half);

    out.assign(synth.begin(), synth.begin() + static_cast<std::ptrdiff_t>(count));
    return true;
}

}  // namespace detail

/// One fBm path of length N, reproducible from the seed: path[0] = 0 and
/// path[t] is the cumulative sum of t exact-covariance fGn increments.
inline PriceSeries generate_fbm(const FbmConfig& config) {
    config.validate();
    const std::size_t increments = config.length - 1;

    detail::NormalSource normals(config.seed);
    std::vector<double> fgn;
    if (!detail::davies_harte_fgn(config.hurst, increments, normals, fgn)) {
        std::fprintf(stderr,
                     "centropy: circulant embedding not non-negative definite for H=%g, N=%zu; "
                     "falling back to the exact O(N^2) conditional sampler\n",
                     config.hurst, config.length);
        detail::NormalSource fresh(config.seed);
        fgn = detail::hosking_fgn(config.hurst, increments, fresh);
    }

    PriceSeries series;
    series.symbol = "fbm";
    series.origin = SyntheticOrigin{config.seed, config.hurst};
    series.values.resize(config.length);
    series.values[0] = 0.0;
    double level = 0.0;
    for (std::size_t t = 0; t < increments; ++t) {
        level += fgn[t];
        series.values[t + 1] = level;
    }
    return series;
}

/// Path whose horizon schedule copies a market's per-horizon lengths, so the
/// synthetic benchmark has the same cumulative-segment structure.
inline std::pair<PriceSeries, HorizonSchedule> mirror_market_schedule(FbmConfig config,
                                                                      const std::vector<std::size_t>& market_lengths) {
    if (market_lengths.empty()) throw error("market length list is empty");
    config.segment_lengths = market_lengths;
    config.length = market_lengths.back();
    config.validate();

    HorizonSchedule schedule;
    schedule.boundaries = market_lengths;
    schedule.unit = HorizonUnit::month;
    return {generate_fbm(config), schedule};
}

}  // namespace centropy
