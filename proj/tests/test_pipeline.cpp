#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>

#include "centropy/pipeline.hpp"
#include "test_support.hpp"

using namespace centropy;
using test_support::TempDir;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

namespace {

AnalysisConfig toy_config(const PriceSeries& series, std::size_t horizons = 3) {
    AnalysisConfig config;
    config.grid.windows = {10, 20, 40};
    config.horizon_boundaries = HorizonSchedule::equal_segments(series.size(), horizons).boundaries;
    config.variant = MaVariant::backward;
    return config;
}

PriceSeries toy_fbm(std::size_t length, std::uint64_t seed) {
    FbmConfig fc;
    fc.hurst = 0.5;
    fc.length = length;
    fc.seed = seed;
    return generate_fbm(fc);
}

}  // namespace

TEST_CASE("config serialization round-trips", "[pipeline]") {
    AnalysisConfig config;
    config.grid.windows = {30, 50, 100};
    config.horizon_boundaries = {100, 220, 360};
    config.sampling_target = 90;
    config.variant = MaVariant::centered;
    config.tau_max.kind = TauMaxRule::Kind::fixed;
    config.tau_max.value = 77;
    config.normalization = MdiNormalization::per_count;
    config.references = {{"power_utility", 0.0049}, {"recursive_utility", 0.0214}};
    config.benchmark_seeds = {3, 9};

    AnalysisConfig back = AnalysisConfig::from_json(config.to_json());
    CHECK(back.to_json() == config.to_json());
    CHECK(back.grid.windows == config.grid.windows);
    CHECK(back.sampling_target == config.sampling_target);
    CHECK(back.tau_max.value == 77);
    CHECK(back.references.size() == 2);

    SECTION("unknown schema version is rejected") {
        auto j = config.to_json();
        j["version"] = 99;
        REQUIRE_THROWS_AS(AnalysisConfig::from_json(j), error);
    }
}

TEST_CASE("config validation catches inconsistent setups", "[pipeline]") {
    PriceSeries series = toy_fbm(1000, 1);
    AnalysisConfig config = toy_config(series);

    SECTION("sampling target above the shortest horizon") {
        config.sampling_target = 500;  // shortest horizon is ~333
        REQUIRE_THROWS_WITH(run_market_analysis(series, config, "/tmp/unused"),
                            ContainsSubstring("sampling target"));
    }
    SECTION("window grid too wide for the sampled series") {
        config.sampling_target = 100;
        config.grid.windows = {10, 20, 99};
        REQUIRE_THROWS_WITH(run_market_analysis(series, config, "/tmp/unused"),
                            ContainsSubstring("window"));
    }
    SECTION("boundary past the end") {
        config.horizon_boundaries.back() = series.size() + 1;
        REQUIRE_THROWS_AS(run_market_analysis(series, config, "/tmp/unused"), error);
    }
}

TEST_CASE("full analysis writes every artifact it lists", "[pipeline]") {
    TempDir runs("runs");
    PriceSeries series = toy_fbm(3000, 7);
    AnalysisConfig config = toy_config(series);
    MarketAnalysis analysis = run_market_analysis(series, config, runs.path());

    CHECK_FALSE(analysis.from_cache);
    CHECK(analysis.report.horizons == 3);
    REQUIRE(analysis.report.windows == config.grid.windows);
    for (std::size_t c = 0; c < config.grid.size(); ++c) {
        CHECK(analysis.report.dependence[0][c] == 0.0);  // H(1, n) = 0 exactly
    }
    for (const StageArtifact& a : analysis.manifest.artifacts) {
        INFO(a.path);
        CHECK(std::filesystem::exists(analysis.run_dir / a.path));
    }
    CHECK(std::filesystem::exists(analysis.run_dir / "config.json"));
    CHECK(std::filesystem::exists(analysis.run_dir / "manifest.json"));

    SECTION("a second invocation is served from the cache with the same content") {
        MarketAnalysis again = run_market_analysis(series, config, runs.path());
        CHECK(again.from_cache);
        CHECK(again.config_hash == analysis.config_hash);
        REQUIRE(again.curves.size() == analysis.curves.size());
        for (std::size_t m = 0; m < again.curves.size(); ++m)
            for (std::size_t c = 0; c < again.curves[m].size(); ++c) {
                REQUIRE(again.curves[m][c].has_value() == analysis.curves[m][c].has_value());
                if (again.curves[m][c]) CHECK(again.curves[m][c]->points == analysis.curves[m][c]->points);
            }
        for (std::size_t m = 0; m < analysis.report.horizons; ++m)
            for (std::size_t c = 0; c < config.grid.size(); ++c) {
                if (HorizonReport::missing(analysis.report.index[m][c])) {
                    CHECK(HorizonReport::missing(again.report.index[m][c]));
                } else {
                    CHECK(again.report.index[m][c] == analysis.report.index[m][c]);
                }
            }
    }
}

TEST_CASE("recomputing from scratch reproduces cached artifacts bit-exactly", "[pipeline]") {
    TempDir runs("rebuild");
    PriceSeries series = toy_fbm(2500, 21);
    AnalysisConfig config = toy_config(series);

    MarketAnalysis first = run_market_analysis(series, config, runs.path());
    std::map<std::string, std::string> bytes;
    for (const StageArtifact& a : first.manifest.artifacts)
        bytes[a.path] = test_support::read_file(first.run_dir / a.path);

    std::filesystem::remove_all(first.run_dir);
    MarketAnalysis second = run_market_analysis(series, config, runs.path());
    CHECK_FALSE(second.from_cache);
    CHECK(second.config_hash == first.config_hash);
    REQUIRE(second.manifest.artifacts.size() == first.manifest.artifacts.size());
    for (const StageArtifact& a : second.manifest.artifacts) {
        INFO(a.path);
        CHECK(test_support::read_file(second.run_dir / a.path) == bytes.at(a.path));
    }
}

TEST_CASE("horizon prefixes reproduce the standalone analysis", "[pipeline]") {
    TempDir runs("prefix");
    PriceSeries series = toy_fbm(4000, 5);

    AnalysisConfig full = toy_config(series, 4);
    MarketAnalysis full_run = run_market_analysis(series, full, runs.path());

    AnalysisConfig two = full;
    two.horizon_boundaries = {full.horizon_boundaries[0], full.horizon_boundaries[1]};
    PriceSeries prefix;
    prefix.symbol = series.symbol;
    prefix.origin = series.origin;
    prefix.values.assign(series.values.begin(),
                         series.values.begin() + static_cast<std::ptrdiff_t>(two.horizon_boundaries.back()));
    MarketAnalysis short_run = run_market_analysis(prefix, two, runs.path());

    for (std::size_t m = 0; m < 2; ++m)
        for (std::size_t c = 0; c < full.grid.size(); ++c) {
            INFO("M=" << m + 1 << " window " << full.grid.windows[c]);
            if (HorizonReport::missing(full_run.report.index[m][c])) {
                CHECK(HorizonReport::missing(short_run.report.index[m][c]));
            } else {
                CHECK(short_run.report.index[m][c] == full_run.report.index[m][c]);
            }
        }
}

TEST_CASE("degenerate cells are recorded as missing without spoiling the rest", "[pipeline]") {
    TempDir runs("degenerate");
    // first horizon is constant (all ties -> no clusters); the rest is a walk
    PriceSeries series = test_support::random_walk(900, 13);
    for (std::size_t i = 0; i < 300; ++i) series.values[i] = 500.0;
    series.origin = SyntheticOrigin{13, 0.5};

    AnalysisConfig config;
    config.grid.windows = {10, 20};
    config.horizon_boundaries = {300, 900};
    MarketAnalysis analysis = run_market_analysis(series, config, runs.path());

    CHECK_FALSE(analysis.manifest.missing_cells.empty());
    for (std::size_t c = 0; c < 2; ++c) {
        CHECK(HorizonReport::missing(analysis.report.index[0][c]));
        CHECK_FALSE(HorizonReport::missing(analysis.report.index[1][c]));
    }

    // degenerate M=1 cells leave the M=2 values exactly what a standalone
    // single-horizon run over the same prefix computes
    AnalysisConfig solo = config;
    solo.horizon_boundaries = {900};
    MarketAnalysis other = run_market_analysis(series, solo, runs.path());
    for (std::size_t c = 0; c < 2; ++c) {
        REQUIRE_FALSE(HorizonReport::missing(other.report.index[0][c]));
        CHECK(analysis.report.index[1][c] == other.report.index[0][c]);
    }
}

TEST_CASE("worker count never changes the artifacts", "[pipeline]") {
    TempDir runs("jobs");
    PriceSeries series = toy_fbm(3000, 11);
    AnalysisConfig config = toy_config(series);

    MarketAnalysis serial = run_market_analysis(series, config, runs.path() / "one", 1);
    MarketAnalysis parallel = run_market_analysis(series, config, runs.path() / "four", 4);
    REQUIRE(serial.manifest.artifacts.size() == parallel.manifest.artifacts.size());
    for (const StageArtifact& a : serial.manifest.artifacts) {
        INFO(a.path);
        CHECK(test_support::read_file(serial.run_dir / a.path) ==
              test_support::read_file(parallel.run_dir / a.path));
    }
}

TEST_CASE("a run where every cell is degenerate still completes", "[pipeline]") {
    TempDir runs("alldeg");
    PriceSeries series;
    series.symbol = "flat";
    series.values.assign(900, 250.0);
    AnalysisConfig config;
    config.grid.windows = {10, 20};
    config.horizon_boundaries = {300, 900};
    MarketAnalysis analysis = run_market_analysis(series, config, runs.path());
    CHECK(analysis.manifest.missing_cells.size() == 4);
    for (std::size_t m = 0; m < 2; ++m)
        for (std::size_t c = 0; c < 2; ++c) {
            CHECK(HorizonReport::missing(analysis.report.index[m][c]));
            CHECK(HorizonReport::missing(analysis.report.dependence[m][c]));
        }
}

TEST_CASE("load_market_analysis reports missing artifacts", "[pipeline]") {
    TempDir runs("load");
    PriceSeries series = toy_fbm(2000, 3);
    AnalysisConfig config = toy_config(series);
    MarketAnalysis analysis = run_market_analysis(series, config, runs.path());

    SECTION("round-trip") {
        MarketAnalysis loaded = load_market_analysis(analysis.run_dir);
        CHECK(loaded.config_hash == analysis.config_hash);
        CHECK(loaded.report.index == analysis.report.index);
    }
    SECTION("a deleted artifact is listed") {
        std::filesystem::remove(analysis.run_dir / analysis.manifest.artifacts.back().path);
        REQUIRE_THROWS_WITH(load_market_analysis(analysis.run_dir), ContainsSubstring("missing"));
    }
    SECTION("not a run dir") {
        REQUIRE_THROWS_WITH(load_market_analysis(runs.path() / "nowhere"), ContainsSubstring("manifest"));
    }
}

TEST_CASE("benchmark suite compares against mirrored fBm", "[pipeline]") {
    TempDir runs("bench");
    PriceSeries market = toy_fbm(6000, 77);
    AnalysisConfig config;
    config.grid.windows = {10, 20};
    config.horizon_boundaries = HorizonSchedule::equal_segments(market.size(), 3).boundaries;
    MarketAnalysis analysis = run_market_analysis(market, config, runs.path());

    SECTION("self-benchmark gives p = 1 at every horizon") {
        BenchmarkOptions options;
        options.hurst = 0.5;
        options.seeds = {77};  // the market itself
        auto rows = run_benchmark_suite(analysis, config, options, runs.path());
        REQUIRE(rows.size() == 3);
        for (const auto& row : rows) {
            CHECK(row.result.t_statistic == 0.0);
            CHECK(row.result.p_value == 1.0);
        }
    }
    SECTION("independent seeds give finite p values and full rows") {
        BenchmarkOptions options;
        options.hurst = 0.5;
        options.seeds = {101, 202};
        auto rows = run_benchmark_suite(analysis, config, options, runs.path());
        REQUIRE(rows.size() == 3);
        for (const auto& row : rows) {
            CHECK(row.result.p_value >= 0.0);
            CHECK(row.result.p_value <= 1.0);
            CHECK(row.seeds_used == 2);
            CHECK(row.result.pairs >= 2);
        }
        // deterministic given seeds
        auto again = run_benchmark_suite(analysis, config, options, runs.path());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            CHECK(again[i].result.t_statistic == rows[i].result.t_statistic);
            CHECK(again[i].result.p_value == rows[i].result.p_value);
        }
    }
}

TEST_CASE("tau max rules resolve per window", "[pipeline]") {
    TauMaxRule rule;
    rule.kind = TauMaxRule::Kind::multiple_of_window;
    rule.factor = 3.0;
    CHECK(rule.resolve(30) == 90);
    rule.kind = TauMaxRule::Kind::fixed;
    rule.value = 42;
    CHECK(rule.resolve(30) == 42);
    rule.kind = TauMaxRule::Kind::all_observed;
    CHECK(rule.resolve(30) == std::numeric_limits<std::size_t>::max());
}
