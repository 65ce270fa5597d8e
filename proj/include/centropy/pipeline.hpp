// pipeline.hpp -- full-analysis orchestration: sampling, horizon segmentation,
// per-(M,n) cluster/entropy cells, MDI grid, horizon report, benchmark suite.
// Intermediates are cached on disk under a content-addressed run directory.
#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "centropy/cluster.hpp"
#include "centropy/common.hpp"
#include "centropy/entropy.hpp"
#include "centropy/fbm.hpp"
#include "centropy/moving_average.hpp"
#include "centropy/series.hpp"
#include "centropy/stats.hpp"

namespace centropy {

/// Upper duration bound for the Market Dynamic Index sum.
struct TauMaxRule {
    enum class Kind { multiple_of_window, fixed, all_observed };
    Kind kind{Kind::multiple_of_window};
    double factor{3.0};
    std::size_t value{0};

    std::size_t resolve(std::size_t window) const {
        switch (kind) {
            case Kind::multiple_of_window:
                return static_cast<std::size_t>(std::llround(factor * static_cast<double>(window)));
            case Kind::fixed: return value;
            case Kind::all_observed: return std::numeric_limits<std::size_t>::max();
        }
        return std::numeric_limits<std::size_t>::max();
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        switch (kind) {
            case Kind::multiple_of_window:
                j["rule"] = "multiple-of-window";
                j["factor"] = factor;
                break;
            case Kind::fixed:
                j["rule"] = "fixed";
                j["value"] = value;
                break;
            case Kind::all_observed: j["rule"] = "all"; break;
        }
        return j;
    }

    static TauMaxRule from_json(const nlohmann::json& j) {
        TauMaxRule r;
        const std::string rule = j.at("rule").get<std::string>();
        if (rule == "multiple-of-window") {
            r.kind = Kind::multiple_of_window;
            r.factor = j.at("factor").get<double>();
            if (!(r.factor > 0.0)) throw error("tau-max factor must be positive");
        } else if (rule == "fixed") {
            r.kind = Kind::fixed;
            r.value = j.at("value").get<std::size_t>();
            if (r.value == 0) throw error("fixed tau-max must be positive");
        } else if (rule == "all") {
            r.kind = Kind::all_observed;
        } else {
            throw error("unknown tau-max rule: " + rule);
        }
        return r;
    }
};

/// All knobs of a full analysis run. Serializes deterministically to JSON.
struct AnalysisConfig {
    static constexpr int kSchemaVersion = 1;

    WindowGrid grid;
    std::vector<std::size_t> horizon_boundaries;
    std::optional<std::size_t> sampling_target;
    MaVariant variant{MaVariant::backward};
    TauMaxRule tau_max{};
    MdiNormalization normalization{MdiNormalization::raw_sum};
    std::vector<ReferenceModel> references;
    std::vector<std::uint64_t> benchmark_seeds;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["version"] = kSchemaVersion;
        j["windows"] = grid.windows;
        j["horizon_boundaries"] = horizon_boundaries;
        if (sampling_target)
            j["sampling_target"] = *sampling_target;
        else
            j["sampling_target"] = nullptr;
        j["variant"] = to_string(variant);
        j["tau_max"] = tau_max.to_json();
        j["normalization"] = to_string(normalization);
        nlohmann::json refs = nlohmann::json::array();
        for (const ReferenceModel& r : references) refs.push_back({{"model", r.name}, {"I1", r.one_period_index}});
        j["references"] = refs;
        j["benchmark_seeds"] = benchmark_seeds;
        return j;
    }

    static AnalysisConfig from_json(const nlohmann::json& j) {
        const int version = j.at("version").get<int>();
        if (version != kSchemaVersion)
            throw error("unsupported config schema version " + std::to_string(version));
        AnalysisConfig c;
        c.grid.windows = j.at("windows").get<std::vector<std::size_t>>();
        c.horizon_boundaries = j.at("horizon_boundaries").get<std::vector<std::size_t>>();
        if (!j.at("sampling_target").is_null()) c.sampling_target = j.at("sampling_target").get<std::size_t>();
        c.variant = ma_variant_from_string(j.at("variant").get<std::string>());
        c.tau_max = TauMaxRule::from_json(j.at("tau_max"));
        c.normalization = mdi_normalization_from_string(j.at("normalization").get<std::string>());
        for (const auto& r : j.at("references"))
            c.references.push_back({r.at("model").get<std::string>(), r.at("I1").get<double>()});
        if (j.contains("benchmark_seeds")) c.benchmark_seeds = j.at("benchmark_seeds").get<std::vector<std::uint64_t>>();
        return c;
    }

    void validate(const PriceSeries& series) const {
        HorizonSchedule schedule{horizon_boundaries, HorizonUnit::segment};
        schedule.validate(series.size());
        std::size_t shortest = horizon_boundaries.front();
        if (sampling_target) {
            if (*sampling_target == 0) throw error("sampling target must be positive");
            if (*sampling_target > shortest)
                throw error("sampling target " + std::to_string(*sampling_target) +
                            " exceeds the shortest horizon length " + std::to_string(shortest) + " (M=1)");
            // shortest analyzed series after sampling
            shortest = std::numeric_limits<std::size_t>::max();
            for (std::size_t b : horizon_boundaries) {
                const auto step = static_cast<std::size_t>(std::max<long long>(
                    1, std::llround(static_cast<double>(b) / static_cast<double>(*sampling_target))));
                shortest = std::min(shortest, (b + step - 1) / step);
            }
        }
        if (shortest < grid.max_window() + 2)
            throw error("series too short for the window grid: shortest analyzed horizon has " +
                        std::to_string(shortest) + " samples, need at least max window + 2 = " +
                        std::to_string(grid.max_window() + 2));
        grid.validate(shortest);
    }
};

inline std::string analysis_config_hash(const PriceSeries& series, const AnalysisConfig& config) {
    Fnv1a64 h;
    h.update(kToolkitVersion);
    h.update("|");
    h.update(config.to_json().dump());
    h.update("|");
    h.update(series.symbol);
    h.update("|");
    h.update(origin_to_json(series.origin).dump());
    h.update("|");
    h.update_value<std::uint64_t>(series.size());
    h.update(series.values.data(), series.values.size() * sizeof(double));
    return h.hex();
}

struct StageArtifact {
    std::string stage;    // "series", "dist", "entropy", "mdi", "horizon"
    std::size_t horizon;  // 1-based M; 0 for whole-run artifacts
    std::size_t window;   // n; 0 for per-horizon artifacts
    std::string path;     // relative to the run directory
};

struct RunManifest {
    std::string config_hash;
    std::string toolkit_version;
    std::vector<StageArtifact> artifacts;
    std::vector<std::string> missing_cells;
    std::map<std::string, double> stage_seconds;
    double total_seconds{0.0};

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["config_hash"] = config_hash;
        j["toolkit_version"] = toolkit_version;
        nlohmann::json arts = nlohmann::json::array();
        for (const StageArtifact& a : artifacts)
            arts.push_back({{"stage", a.stage}, {"horizon", a.horizon}, {"window", a.window}, {"path", a.path}});
        j["artifacts"] = arts;
        j["missing_cells"] = missing_cells;
        j["stage_seconds"] = stage_seconds;
        j["total_seconds"] = total_seconds;
        return j;
    }

    static RunManifest from_json(const nlohmann::json& j) {
        RunManifest m;
        m.config_hash = j.at("config_hash").get<std::string>();
        m.toolkit_version = j.at("toolkit_version").get<std::string>();
        for (const auto& a : j.at("artifacts"))
            m.artifacts.push_back({a.at("stage").get<std::string>(), a.at("horizon").get<std::size_t>(),
                                   a.at("window").get<std::size_t>(), a.at("path").get<std::string>()});
        m.missing_cells = j.at("missing_cells").get<std::vector<std::string>>();
        m.stage_seconds = j.at("stage_seconds").get<std::map<std::string, double>>();
        m.total_seconds = j.at("total_seconds").get<double>();
        return m;
    }
};

struct MarketAnalysis {
    std::string config_hash;
    std::filesystem::path run_dir;
    HorizonReport report;
    // curves[m][c]: entropy curve for horizon m+1 and window grid.windows[c];
    // nullopt marks a degenerate cell
    std::vector<std::vector<std::optional<EntropyCurve>>> curves;
    RunManifest manifest;
    bool from_cache{false};
};

namespace detail {

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw error("cannot write " + path.string());
    out << content;
}

inline std::string distribution_csv(const ClusterDistribution& dist, const std::string& symbol, std::size_t horizon,
                                    MaVariant variant) {
    nlohmann::json meta{{"symbol", symbol}, {"n", dist.window}, {"M", horizon},
                        {"variant", to_string(variant)}, {"total", dist.total}};
    std::string out = "# " + meta.dump() + "\ntau,count,probability\n";
    const double inv_total = 1.0 / static_cast<double>(dist.total);
    for (const auto& [tau, count] : dist.counts) {
        out += std::to_string(tau);
        out += ',';
        out += std::to_string(count);
        out += ',';
        out += format_double(static_cast<double>(count) * inv_total);
        out += '\n';
    }
    return out;
}

inline std::string entropy_csv(const EntropyCurve& curve, const std::string& symbol, std::size_t horizon,
                               MaVariant variant, MdiNormalization normalization) {
    nlohmann::json meta{{"symbol", symbol}, {"n", curve.window}, {"M", horizon},
                        {"variant", to_string(variant)}, {"normalization", to_string(normalization)}};
    std::string out = "# " + meta.dump() + "\ntau,S\n";
    for (const auto& [tau, s] : curve.points) {
        out += std::to_string(tau);
        out += ',';
        out += format_double(s);
        out += '\n';
    }
    return out;
}

struct ParsedCurveFile {
    std::size_t horizon{0};
    EntropyCurve curve;
};

inline ParsedCurveFile parse_entropy_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw error("cannot open entropy artifact: " + path.string());
    std::string line;
    if (!std::getline(in, line) || line.rfind("# ", 0) != 0)
        throw error(path.string() + ": missing metadata header");
    nlohmann::json meta = nlohmann::json::parse(line.substr(2));
    ParsedCurveFile parsed;
    parsed.horizon = meta.at("M").get<std::size_t>();
    parsed.curve.window = meta.at("n").get<std::size_t>();
    std::getline(in, line);  // column header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw error(path.string() + ": malformed row");
        std::int64_t tau;
        double s;
        if (!parse_int64(line.substr(0, comma), tau) || !parse_double(line.substr(comma + 1), s))
            throw error(path.string() + ": malformed row");
        parsed.curve.points.emplace_back(static_cast<std::size_t>(tau), s);
    }
    return parsed;
}

inline std::string horizon_long_csv(const HorizonReport& report) {
    std::string out = "M,n,I,H,h_rel,model,H_ref,I_ref\n";
    for (std::size_t m = 0; m < report.horizons; ++m) {
        for (std::size_t c = 0; c < report.windows.size(); ++c) {
            if (HorizonReport::missing(report.index[m][c])) continue;
            out += std::to_string(m + 1) + ',' + std::to_string(report.windows[c]) + ',' +
                   format_double(report.index[m][c]) + ',' + format_double(report.dependence[m][c]) + ',';
            out += HorizonReport::missing(report.relative[m][c]) ? "" : format_double(report.relative[m][c]);
            out += ",,,\n";
            for (const auto& ref : report.references) {
                if (HorizonReport::missing(ref.dependence[m][c])) continue;
                out += std::to_string(m + 1) + ',' + std::to_string(report.windows[c]) + ',' +
                       format_double(report.index[m][c]) + ',' + format_double(report.dependence[m][c]) + ',' +
                       format_double(report.relative[m][c]) + ',' + ref.model + ',' +
                       format_double(ref.dependence[m][c]) + ',' + format_double(ref.index[m][c]) + '\n';
            }
        }
    }
    return out;
}

/// Reference-table-shaped JSON: one block per window with the final-horizon
/// entropy indexes and each model's rescaled pair.
inline nlohmann::json horizon_table_json(const HorizonReport& report, const std::string& symbol,
                                         MdiNormalization normalization) {
    nlohmann::json j;
    j["symbol"] = symbol;
    j["normalization"] = to_string(normalization);
    j["horizons"] = report.horizons;
    const std::size_t last = report.horizons - 1;
    nlohmann::json blocks = nlohmann::json::array();
    for (std::size_t c = 0; c < report.windows.size(); ++c) {
        nlohmann::json block;
        block["n"] = report.windows[c];
        block["I"] = report.index[last][c];
        block["H"] = report.dependence[last][c];
        nlohmann::json refs = nlohmann::json::array();
        for (const auto& ref : report.references) {
            refs.push_back({{"model", ref.model},
                            {"I1_ref", ref.reference},
                            {"I", ref.index[last][c]},
                            {"H", ref.dependence[last][c]}});
        }
        block["references"] = refs;
        blocks.push_back(block);
    }
    j["blocks"] = blocks;
    return j;
}

struct CellOutcome {
    std::optional<EntropyCurve> curve;
    double index = std::numeric_limits<double>::quiet_NaN();
    std::string dist_csv;
    std::string entropy_csv;
    std::string missing_reason;  // non-empty marks a degenerate cell
    std::exception_ptr failure;
};

/// horizon_dependence requires an M=1 value per column; a degenerate M=1
/// cell must not abort the run, so columns without a base value are carved
/// out here and restored as all-missing columns afterwards.
inline HorizonReport tolerant_horizon_report(const std::vector<std::vector<double>>& grid,
                                             const std::vector<std::size_t>& windows,
                                             const std::vector<ReferenceModel>& references,
                                             std::vector<std::size_t>* dropped_windows = nullptr) {
    const std::size_t horizons = grid.size();
    std::vector<std::size_t> keep;
    for (std::size_t c = 0; c < windows.size(); ++c) {
        if (HorizonReport::missing(grid[0][c])) {
            if (dropped_windows) dropped_windows->push_back(windows[c]);
        } else {
            keep.push_back(c);
        }
    }
    if (keep.size() == windows.size()) return horizon_dependence(grid, windows, references);

    constexpr double all_nan = std::numeric_limits<double>::quiet_NaN();
    if (keep.empty()) {
        // no horizon has a base value; report the index grid with H unknown
        HorizonReport bare;
        bare.windows = windows;
        bare.horizons = horizons;
        bare.index = grid;
        bare.dependence.assign(horizons, std::vector<double>(windows.size(), all_nan));
        bare.relative.assign(horizons, std::vector<double>(windows.size(), all_nan));
        return bare;
    }

    std::vector<std::size_t> sub_windows;
    std::vector<std::vector<double>> sub_grid(horizons);
    for (std::size_t c : keep) sub_windows.push_back(windows[c]);
    for (std::size_t m = 0; m < horizons; ++m)
        for (std::size_t c : keep) sub_grid[m].push_back(grid[m][c]);
    HorizonReport sub = horizon_dependence(sub_grid, sub_windows, references);

    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    HorizonReport full;
    full.windows = windows;
    full.horizons = horizons;
    full.index = grid;
    full.dependence.assign(horizons, std::vector<double>(windows.size(), nan));
    full.relative.assign(horizons, std::vector<double>(windows.size(), nan));
    full.rescaling_skipped = sub.rescaling_skipped;
    for (const auto& ref : sub.references) {
        HorizonReport::Rescaled r;
        r.model = ref.model;
        r.reference = ref.reference;
        r.dependence.assign(horizons, std::vector<double>(windows.size(), nan));
        r.index.assign(horizons, std::vector<double>(windows.size(), nan));
        full.references.push_back(std::move(r));
    }
    for (std::size_t k = 0; k < keep.size(); ++k) {
        const std::size_t c = keep[k];
        for (std::size_t m = 0; m < horizons; ++m) {
            full.dependence[m][c] = sub.dependence[m][k];
            full.relative[m][c] = sub.relative[m][k];
            for (std::size_t r = 0; r < sub.references.size(); ++r) {
                full.references[r].dependence[m][c] = sub.references[r].dependence[m][k];
                full.references[r].index[m][c] = sub.references[r].index[m][k];
            }
        }
    }
    return full;
}

}  // namespace detail

/// Load a completed run directory (config + curves + MDI grid) back into a
/// MarketAnalysis. Throws, listing the missing artifacts, when incomplete.
inline MarketAnalysis load_market_analysis(const std::filesystem::path& run_dir,
                                           const std::vector<ReferenceModel>* reference_override = nullptr) {
    const auto manifest_path = run_dir / "manifest.json";
    const auto config_path = run_dir / "config.json";
    if (!std::filesystem::exists(manifest_path)) throw error("no manifest.json in " + run_dir.string());
    if (!std::filesystem::exists(config_path)) throw error("no config.json in " + run_dir.string());

    std::ifstream mf(manifest_path);
    RunManifest manifest = RunManifest::from_json(nlohmann::json::parse(mf));
    std::ifstream cf(config_path);
    AnalysisConfig config = AnalysisConfig::from_json(nlohmann::json::parse(cf));

    std::vector<std::string> absent;
    for (const StageArtifact& a : manifest.artifacts)
        if (!std::filesystem::exists(run_dir / a.path)) absent.push_back(a.path);
    if (!absent.empty()) {
        std::string msg = "incomplete run directory " + run_dir.string() + "; missing:";
        for (const std::string& p : absent) msg += " " + p;
        throw error(msg);
    }

    const std::size_t horizons = config.horizon_boundaries.size();
    const std::size_t width = config.grid.size();
    std::map<std::size_t, std::size_t> column;
    for (std::size_t c = 0; c < width; ++c) column[config.grid.windows[c]] = c;

    MarketAnalysis analysis;
    analysis.config_hash = manifest.config_hash;
    analysis.run_dir = run_dir;
    analysis.manifest = manifest;
    analysis.from_cache = true;
    analysis.curves.assign(horizons, std::vector<std::optional<EntropyCurve>>(width));

    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<std::vector<double>> grid(horizons, std::vector<double>(width, nan));

    for (const StageArtifact& a : manifest.artifacts) {
        if (a.stage == "entropy") {
            auto parsed = detail::parse_entropy_csv(run_dir / a.path);
            analysis.curves.at(parsed.horizon - 1).at(column.at(parsed.curve.window)) = std::move(parsed.curve);
        }
    }

    // MDI grid from the long CSV
    {
        std::ifstream in(run_dir / "mdi.csv");
        if (!in) throw error("cannot open " + (run_dir / "mdi.csv").string());
        std::string line;
        std::getline(in, line);  // metadata
        std::getline(in, line);  // column header
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const auto c1 = line.find(',');
            const auto c2 = line.find(',', c1 + 1);
            std::int64_t m, n;
            double v;
            if (c1 == std::string::npos || c2 == std::string::npos || !parse_int64(line.substr(0, c1), m) ||
                !parse_int64(line.substr(c1 + 1, c2 - c1 - 1), n) || !parse_double(line.substr(c2 + 1), v))
                throw error("malformed mdi.csv row: " + line);
            grid.at(static_cast<std::size_t>(m) - 1).at(column.at(static_cast<std::size_t>(n))) = v;
        }
    }

    const auto& refs = reference_override ? *reference_override : config.references;
    analysis.report = detail::tolerant_horizon_report(grid, config.grid.windows, refs);
    return analysis;
}

/// Run the full analysis: per horizon M sample (when configured), then per
/// window n extract clusters, build the distribution and entropy curve, and
/// integrate the Market Dynamic Index; finally assemble the horizon report.
/// All intermediates land under runs_root/<config-hash>/ and a completed run
/// is reloaded from disk instead of recomputed.
inline MarketAnalysis run_market_analysis(const PriceSeries& series, const AnalysisConfig& config,
                                          const std::filesystem::path& runs_root, unsigned jobs = 0) {
    using clock = std::chrono::steady_clock;
    const auto t_start = clock::now();

    config.validate(series);
    const std::string hash = analysis_config_hash(series, config);
    const std::filesystem::path run_dir = runs_root / hash;

    if (std::filesystem::exists(run_dir / "manifest.json")) {
        try {
            MarketAnalysis cached = load_market_analysis(run_dir);
            if (cached.config_hash == hash) return cached;
        } catch (const std::exception&) {
            // fall through and recompute over the damaged cache entry
        }
    }

    std::filesystem::create_directories(run_dir / "series");
    std::filesystem::create_directories(run_dir / "dist");
    std::filesystem::create_directories(run_dir / "entropy");

    const std::size_t horizons = config.horizon_boundaries.size();
    const std::size_t width = config.grid.size();

    MarketAnalysis analysis;
    analysis.config_hash = hash;
    analysis.run_dir = run_dir;
    analysis.curves.assign(horizons, std::vector<std::optional<EntropyCurve>>(width));
    RunManifest& manifest = analysis.manifest;
    manifest.config_hash = hash;
    manifest.toolkit_version = kToolkitVersion;

    detail::write_text_file(run_dir / "config.json", config.to_json().dump(2) + "\n");

    // stage: per-horizon series (prefix + optional sampling)
    const auto t_prepare = clock::now();
    HorizonSchedule schedule{config.horizon_boundaries, HorizonUnit::segment};
    std::vector<PriceSeries> analyzed = segment_horizons(series, schedule);
    if (config.sampling_target)
        for (PriceSeries& s : analyzed) s = sample_series(s, *config.sampling_target);
    for (std::size_t m = 0; m < horizons; ++m) {
        const std::string rel = "series/" + std::to_string(m + 1) + ".csv";
        save_price_series(analyzed[m], run_dir / rel);
        manifest.artifacts.push_back({"series", m + 1, 0, rel});
    }
    const auto t_cells = clock::now();

    // stage: independent (M, n) cells over a shared work queue
    struct Task {
        std::size_t m, c;
    };
    std::vector<Task> tasks;
    tasks.reserve(horizons * width);
    for (std::size_t m = 0; m < horizons; ++m)
        for (std::size_t c = 0; c < width; ++c) tasks.push_back({m, c});
    std::vector<detail::CellOutcome> outcomes(tasks.size());

    auto run_cell = [&](const Task& task, detail::CellOutcome& out) {
        const PriceSeries& horizon_series = analyzed[task.m];
        const std::size_t n = config.grid.windows[task.c];
        try {
            MovingAverageSeries ma = moving_average(horizon_series, n, config.variant);
            std::vector<Cluster> clusters = extract_clusters(horizon_series, ma);
            if (clusters.empty()) {
                out.missing_reason = "degenerate (no interior clusters)";
                return;
            }
            ClusterDistribution dist = cluster_distribution(clusters, n);
            EntropyCurve curve = cluster_entropy(dist);
            const std::size_t tau_max = config.tau_max.resolve(n);
            if (curve.points.front().first > tau_max) {
                out.missing_reason = "degenerate (tau_max below all observed durations)";
                return;
            }
            out.index = market_dynamic_index(curve, tau_max, config.normalization);
            out.dist_csv = detail::distribution_csv(dist, horizon_series.symbol, task.m + 1, config.variant);
            out.entropy_csv =
                detail::entropy_csv(curve, horizon_series.symbol, task.m + 1, config.variant, config.normalization);
            out.curve = std::move(curve);
        } catch (...) {
            out.failure = std::current_exception();
        }
    };

    unsigned worker_count = jobs ? jobs : std::thread::hardware_concurrency();
    if (worker_count == 0) worker_count = 1;
    worker_count = std::min<unsigned>(worker_count, static_cast<unsigned>(tasks.size()));

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= tasks.size()) break;
            run_cell(tasks[i], outcomes[i]);
        }
    };
    {
        std::vector<std::thread> pool;
        for (unsigned w = 1; w < worker_count; ++w) pool.emplace_back(worker);
        worker();
        for (std::thread& t : pool) t.join();
    }

    for (std::size_t i = 0; i < tasks.size(); ++i) {
        if (!outcomes[i].failure) continue;
        try {
            std::rethrow_exception(outcomes[i].failure);
        } catch (const std::exception& e) {
            throw error("cell M=" + std::to_string(tasks[i].m + 1) + ", n=" +
                        std::to_string(config.grid.windows[tasks[i].c]) + ": " + e.what());
        }
    }

    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<std::vector<double>> grid(horizons, std::vector<double>(width, nan));
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        const auto [m, c] = tasks[i];
        detail::CellOutcome& out = outcomes[i];
        const std::size_t n = config.grid.windows[c];
        if (!out.missing_reason.empty()) {
            manifest.missing_cells.push_back("M=" + std::to_string(m + 1) + ",n=" + std::to_string(n) + ": " +
                                             out.missing_reason);
            continue;
        }
        const std::string cell = std::to_string(m + 1) + "_" + std::to_string(n) + ".csv";
        detail::write_text_file(run_dir / "dist" / cell, out.dist_csv);
        detail::write_text_file(run_dir / "entropy" / cell, out.entropy_csv);
        manifest.artifacts.push_back({"dist", m + 1, n, "dist/" + cell});
        manifest.artifacts.push_back({"entropy", m + 1, n, "entropy/" + cell});
        grid[m][c] = out.index;
        analysis.curves[m][c] = std::move(out.curve);
    }
    const auto t_report = clock::now();

    // stage: MDI grid + horizon report
    {
        nlohmann::json meta{{"symbol", series.symbol},
                            {"normalization", to_string(config.normalization)},
                            {"tau_max", config.tau_max.to_json()}};
        std::string csv = "# " + meta.dump() + "\nM,n,I\n";
        for (std::size_t m = 0; m < horizons; ++m)
            for (std::size_t c = 0; c < width; ++c) {
                if (HorizonReport::missing(grid[m][c])) continue;
                csv += std::to_string(m + 1) + ',' + std::to_string(config.grid.windows[c]) + ',' +
                       format_double(grid[m][c]) + '\n';
            }
        detail::write_text_file(run_dir / "mdi.csv", csv);
        manifest.artifacts.push_back({"mdi", 0, 0, "mdi.csv"});
    }

    analysis.report = detail::tolerant_horizon_report(grid, config.grid.windows, config.references);
    detail::write_text_file(run_dir / "horizon.csv", detail::horizon_long_csv(analysis.report));
    manifest.artifacts.push_back({"horizon", 0, 0, "horizon.csv"});
    detail::write_text_file(
        run_dir / "horizon.json",
        detail::horizon_table_json(analysis.report, series.symbol, config.normalization).dump(2) + "\n");
    manifest.artifacts.push_back({"horizon", 0, 0, "horizon.json"});

    const auto t_end = clock::now();
    auto seconds = [](auto a, auto b) { return std::chrono::duration<double>(b - a).count(); };
    manifest.stage_seconds["prepare"] = seconds(t_prepare, t_cells);
    manifest.stage_seconds["cells"] = seconds(t_cells, t_report);
    manifest.stage_seconds["report"] = seconds(t_report, t_end);
    manifest.total_seconds = seconds(t_start, t_end);
    detail::write_text_file(run_dir / "manifest.json", manifest.to_json().dump(2) + "\n");
    return analysis;
}

// --- benchmark suite -------------------------------------------------------

struct BenchmarkOptions {
    double hurst{0.5};
    std::vector<std::uint64_t> seeds;
    unsigned jobs{0};
};

struct BenchmarkRow {
    std::size_t horizon{0};
    PairedTestResult result;
    std::size_t seeds_used{0};
};

namespace detail {

/// Pointwise mean of entropy curves over the intersection of their supports.
inline std::optional<EntropyCurve> average_curves(const std::vector<const EntropyCurve*>& curves) {
    if (curves.empty()) return std::nullopt;
    std::map<std::size_t, std::pair<double, std::size_t>> acc;  // tau -> (sum, hits)
    for (const auto& [tau, s] : curves.front()->points) acc[tau] = {s, 1};
    for (std::size_t i = 1; i < curves.size(); ++i)
        for (const auto& [tau, s] : curves[i]->points) {
            auto it = acc.find(tau);
            if (it == acc.end()) continue;
            it->second.first += s;
            ++it->second.second;
        }
    EntropyCurve out;
    out.window = curves.front()->window;
    for (const auto& [tau, entry] : acc)
        if (entry.second == curves.size())
            out.points.emplace_back(tau, entry.first / static_cast<double>(curves.size()));
    if (out.points.empty()) return std::nullopt;
    return out;
}

}  // namespace detail

/// Generate mirrored fBm benchmarks per seed, run the same analysis config on
/// each, average the benchmark curves, and run the paired entropy comparison
/// per horizon. Seeds producing any degenerate cell are skipped and logged.
inline std::vector<BenchmarkRow> run_benchmark_suite(const MarketAnalysis& market, const AnalysisConfig& market_config,
                                                     const BenchmarkOptions& options,
                                                     const std::filesystem::path& runs_root) {
    if (options.seeds.empty()) throw error("benchmark needs at least one seed");
    const std::size_t horizons = market.curves.size();
    const std::size_t width = market_config.grid.size();
    for (std::size_t m = 0; m < horizons; ++m)
        for (std::size_t c = 0; c < width; ++c)
            if (!market.curves[m][c])
                throw error("market run has a degenerate cell at M=" + std::to_string(m + 1) + ", n=" +
                            std::to_string(market_config.grid.windows[c]) + "; cannot benchmark");

    AnalysisConfig bench_config = market_config;
    bench_config.references.clear();
    bench_config.benchmark_seeds.clear();

    std::vector<const MarketAnalysis*> used;
    std::vector<MarketAnalysis> runs;
    runs.reserve(options.seeds.size());
    for (std::uint64_t seed : options.seeds) {
        FbmConfig fc;
        fc.hurst = options.hurst;
        fc.seed = seed;
        auto [path, schedule] = mirror_market_schedule(fc, market_config.horizon_boundaries);
        MarketAnalysis run = run_market_analysis(path, bench_config, runs_root, options.jobs);
        bool degenerate = false;
        for (const auto& row : run.curves)
            for (const auto& cell : row)
                if (!cell) degenerate = true;
        if (degenerate) {
            std::fprintf(stderr, "centropy: benchmark seed %llu produced degenerate cells; skipped\n",
                         static_cast<unsigned long long>(seed));
            continue;
        }
        runs.push_back(std::move(run));
    }
    if (runs.empty()) throw error("all benchmark seeds produced degenerate cells");
    for (const MarketAnalysis& r : runs) used.push_back(&r);

    std::vector<BenchmarkRow> rows;
    rows.reserve(horizons);
    for (std::size_t m = 0; m < horizons; ++m) {
        std::vector<EntropyCurve> market_curves, bench_curves;
        for (std::size_t c = 0; c < width; ++c) {
            std::vector<const EntropyCurve*> seeds_cell;
            for (const MarketAnalysis* r : used) seeds_cell.push_back(&*r->curves[m][c]);
            auto averaged = detail::average_curves(seeds_cell);
            if (!averaged) continue;
            market_curves.push_back(*market.curves[m][c]);
            bench_curves.push_back(std::move(*averaged));
        }
        BenchmarkRow row;
        row.horizon = m + 1;
        row.seeds_used = runs.size();
        row.result = entropy_comparison_test(market_curves, bench_curves);
        rows.push_back(std::move(row));
    }
    return rows;
}

/// Reference-table-shaped JSON rows (M, t, dof, p, h).
inline nlohmann::json benchmark_rows_json(const std::vector<BenchmarkRow>& rows) {
    nlohmann::json j = nlohmann::json::array();
    for (const BenchmarkRow& r : rows)
        j.push_back({{"M", r.horizon},
                     {"t", r.result.t_statistic},
                     {"dof", r.result.degrees_of_freedom},
                     {"p", r.result.p_value},
                     {"h", r.result.reject_at_5pct},
                     {"pairs", r.result.pairs},
                     {"seeds", r.seeds_used}});
    return j;
}

}  // namespace centropy
