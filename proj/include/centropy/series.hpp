// series.hpp -- tick ingestion, price series, sampling, horizons, returns
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "centropy/common.hpp"

namespace centropy {

struct Tick {
    std::int64_t timestamp;  // seconds since epoch
    double price;
};

/// Raw timestamped tick prices as ingested from file.
/// Invariants: timestamps non-decreasing, prices > 0, size >= 2.
struct TickSeries {
    std::string symbol;
    std::vector<Tick> ticks;

    std::size_t size() const { return ticks.size(); }
};

struct RawOrigin {
    bool operator==(const RawOrigin&) const = default;
};
struct SampledOrigin {
    std::size_t step{1};
    bool operator==(const SampledOrigin&) const = default;
};
struct SyntheticOrigin {
    std::uint64_t seed{0};
    double hurst{0.5};
    bool operator==(const SyntheticOrigin&) const = default;
};
using SeriesOrigin = std::variant<RawOrigin, SampledOrigin, SyntheticOrigin>;

/// Uniform price sequence; the object all analysis consumes.
/// Market values are strictly positive; synthetic series may take any level
/// since the cluster machinery only looks at crossings, not price levels.
struct PriceSeries {
    std::string symbol;
    std::vector<double> values;
    SeriesOrigin origin{RawOrigin{}};

    std::size_t size() const { return values.size(); }
    bool synthetic() const { return std::holds_alternative<SyntheticOrigin>(origin); }
};

inline void validate_price_series(const PriceSeries& s) {
    if (s.size() < 2) throw error("price series needs at least 2 values, got " + std::to_string(s.size()));
    if (!s.synthetic()) {
        for (std::size_t i = 0; i < s.values.size(); ++i) {
            if (!(s.values[i] > 0.0))
                throw error("non-positive price " + format_double(s.values[i]) + " at index " + std::to_string(i));
        }
    }
    for (double v : s.values) {
        if (!std::isfinite(v)) throw error("non-finite price value");
    }
}

enum class HorizonUnit { month, segment };

/// Cumulative prefix boundaries: horizon M covers indices [0, boundaries[M-1]).
struct HorizonSchedule {
    std::vector<std::size_t> boundaries;
    HorizonUnit unit{HorizonUnit::segment};

    std::size_t horizons() const { return boundaries.size(); }

    void validate(std::size_t series_length) const {
        if (boundaries.empty()) throw error("horizon schedule has no boundaries");
        std::size_t prev = 0;
        for (std::size_t b : boundaries) {
            if (b <= prev) throw error("horizon boundaries must be strictly increasing");
            prev = b;
        }
        if (boundaries.back() > series_length)
            throw error("horizon boundary " + std::to_string(boundaries.back()) + " exceeds series length " +
                        std::to_string(series_length));
        if (boundaries.front() < 2) throw error("first horizon shorter than 2 samples");
    }

    /// Evenly spaced schedule: boundary k is round(n*k/m).
    static HorizonSchedule equal_segments(std::size_t series_length, std::size_t count) {
        if (count == 0) throw error("horizon count must be positive");
        if (series_length < 2 * count) throw error("series too short for requested horizon count");
        HorizonSchedule s;
        s.boundaries.reserve(count);
        for (std::size_t k = 1; k <= count; ++k)
            s.boundaries.push_back(static_cast<std::size_t>(
                std::llround(static_cast<double>(series_length) * static_cast<double>(k) / static_cast<double>(count))));
        s.boundaries.back() = series_length;
        return s;
    }
};

struct TickFormat {
    char delimiter{','};
};

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line, char delim) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(delim, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

inline std::string_view strip_cr(std::string_view s) {
    if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
    return s;
}

}  // namespace detail

/// Parse a (timestamp, price) CSV. A non-numeric first row is treated as a header.
/// Any malformed row, non-positive price or timestamp going backwards aborts
/// the load with the offending line number.
inline TickSeries load_ticks(const std::filesystem::path& path, const TickFormat& format = {}) {
    std::ifstream in(path);
    if (!in) throw error("cannot open tick file: " + path.string());

    TickSeries series;
    series.symbol = path.stem().string();

    std::string line;
    std::size_t line_no = 0;
    bool first_data_row = true;
    std::int64_t prev_ts = std::numeric_limits<std::int64_t>::min();

    while (std::getline(in, line)) {
        ++line_no;
        std::string_view text = detail::strip_cr(line);
        if (text.empty()) continue;

        auto fields = detail::split_fields(text, format.delimiter);
        if (fields.size() < 2)
            throw error(path.string() + ":" + std::to_string(line_no) + ": expected (timestamp, price) row");

        std::int64_t ts;
        double price;
        bool ok = parse_int64(fields[0], ts) && parse_double(fields[1], price);
        if (!ok) {
            if (first_data_row) continue;  // optional header
            throw error(path.string() + ":" + std::to_string(line_no) + ": malformed row");
        }
        first_data_row = false;
        if (!(price > 0.0))
            throw error(path.string() + ":" + std::to_string(line_no) + ": non-positive price " +
                        format_double(price));
        if (ts < prev_ts)
            throw error(path.string() + ":" + std::to_string(line_no) + ": timestamp decreases");
        prev_ts = ts;
        series.ticks.push_back({ts, price});
    }
    if (series.ticks.empty()) throw error(path.string() + ": no tick rows found");
    if (series.size() < 2) throw error(path.string() + ": need at least 2 ticks, got " + std::to_string(series.size()));
    return series;
}

inline PriceSeries to_price_series(const TickSeries& ticks) {
    PriceSeries out;
    out.symbol = ticks.symbol;
    out.values.reserve(ticks.size());
    for (const Tick& t : ticks.ticks) out.values.push_back(t.price);
    out.origin = RawOrigin{};
    validate_price_series(out);
    return out;
}

/// Keep every k-th value starting at index 0, with k = round(N / target_length).
inline PriceSeries sample_series(const PriceSeries& raw, std::size_t target_length) {
    if (target_length == 0) throw error("sampling target length must be positive");
    if (target_length > raw.size())
        throw error("sampling target " + std::to_string(target_length) + " exceeds series length " +
                    std::to_string(raw.size()));
    const auto step = static_cast<std::size_t>(std::max<long long>(
        1, std::llround(static_cast<double>(raw.size()) / static_cast<double>(target_length))));

    PriceSeries out;
    out.symbol = raw.symbol;
    out.values.reserve(raw.size() / step + 1);
    for (std::size_t i = 0; i < raw.size(); i += step) out.values.push_back(raw.values[i]);
    out.origin = SampledOrigin{step};
    if (raw.synthetic()) out.origin = raw.origin;  // keep synthetic provenance
    return out;
}

inline PriceSeries sample_series(const TickSeries& raw, std::size_t target_length) {
    return sample_series(to_price_series(raw), target_length);
}

/// One prefix series per horizon; horizon M is the prefix of length boundaries[M-1].
inline std::vector<PriceSeries> segment_horizons(const PriceSeries& series, const HorizonSchedule& schedule) {
    schedule.validate(series.size());
    std::vector<PriceSeries> out;
    out.reserve(schedule.horizons());
    for (std::size_t b : schedule.boundaries) {
        PriceSeries prefix;
        prefix.symbol = series.symbol;
        prefix.origin = series.origin;
        prefix.values.assign(series.values.begin(), series.values.begin() + static_cast<std::ptrdiff_t>(b));
        out.push_back(std::move(prefix));
    }
    return out;
}

inline std::vector<double> linear_return(const PriceSeries& series, std::size_t lag) {
    if (lag == 0) throw error("return lag must be positive");
    if (lag >= series.size()) throw error("return lag must be smaller than the series length");
    std::vector<double> r(series.size() - lag);
    for (std::size_t t = lag; t < series.size(); ++t) r[t - lag] = series.values[t] - series.values[t - lag];
    return r;
}

inline std::vector<double> log_return(const PriceSeries& series, std::size_t lag) {
    if (lag == 0) throw error("return lag must be positive");
    if (lag >= series.size()) throw error("return lag must be smaller than the series length");
    std::vector<double> r(series.size() - lag);
    for (std::size_t t = lag; t < series.size(); ++t)
        r[t - lag] = std::log(series.values[t]) - std::log(series.values[t - lag]);
    return r;
}

// --- persistence: CSV of one value per line + JSON sidecar {symbol, origin, length} ---

inline nlohmann::json origin_to_json(const SeriesOrigin& origin) {
    nlohmann::json j;
    if (std::holds_alternative<RawOrigin>(origin)) {
        j["kind"] = "raw";
    } else if (const auto* sampled = std::get_if<SampledOrigin>(&origin)) {
        j["kind"] = "sampled";
        j["step"] = sampled->step;
    } else {
        const auto& synthetic = std::get<SyntheticOrigin>(origin);
        j["kind"] = "synthetic";
        j["seed"] = synthetic.seed;
        j["hurst"] = synthetic.hurst;
    }
    return j;
}

inline SeriesOrigin origin_from_json(const nlohmann::json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "raw") return RawOrigin{};
    if (kind == "sampled") return SampledOrigin{j.at("step").get<std::size_t>()};
    if (kind == "synthetic") return SyntheticOrigin{j.at("seed").get<std::uint64_t>(), j.at("hurst").get<double>()};
    throw error("unknown series origin kind: " + kind);
}

inline std::filesystem::path sidecar_path(const std::filesystem::path& csv_path) {
    std::filesystem::path p = csv_path;
    p.replace_extension(".json");
    return p;
}

inline void save_price_series(const PriceSeries& series, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw error("cannot write price series: " + path.string());
    for (double v : series.values) out << format_double(v) << '\n';
    out.close();

    nlohmann::json meta;
    meta["symbol"] = series.symbol;
    meta["origin"] = origin_to_json(series.origin);
    meta["length"] = series.size();
    std::ofstream side(sidecar_path(path));
    if (!side) throw error("cannot write series sidecar: " + sidecar_path(path).string());
    side << meta.dump(2) << '\n';
}

inline PriceSeries load_price_series(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw error("cannot open price series: " + path.string());

    PriceSeries series;
    series.symbol = path.stem().string();

    const std::filesystem::path side = sidecar_path(path);
    if (std::filesystem::exists(side)) {
        std::ifstream sin(side);
        nlohmann::json meta = nlohmann::json::parse(sin);
        series.symbol = meta.at("symbol").get<std::string>();
        series.origin = origin_from_json(meta.at("origin"));
    }

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view text = detail::strip_cr(line);
        if (text.empty()) continue;
        double v;
        if (!parse_double(text, v))
            throw error(path.string() + ":" + std::to_string(line_no) + ": malformed value");
        series.values.push_back(v);
    }
    validate_price_series(series);
    return series;
}

}  // namespace centropy
