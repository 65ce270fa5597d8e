// centropy -- command-line front end for the cluster-entropy toolkit
//
// Subcommands mirror the analysis workflow: ingest ticks, sample, generate
// fBm benchmarks, compute entropy curves, integrate the Market Dynamic Index,
// build horizon reports, run the benchmark comparison, export tidy data.
//
// Exit codes: 0 success, 1 stage error, 2 usage error.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "centropy/centropy.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<std::size_t> parse_size_list(const std::string& text) {
    std::vector<std::size_t> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto comma = text.find(',', start);
        const std::string field = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        if (!field.empty()) {
            std::int64_t v;
            if (!centropy::parse_int64(field, v) || v <= 0)
                throw centropy::error("invalid list entry: '" + field + "'");
            out.push_back(static_cast<std::size_t>(v));
        }
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (out.empty()) throw centropy::error("empty list");
    return out;
}

centropy::WindowGrid parse_window_grid(const std::string& spec) {
    if (spec.rfind("default:", 0) == 0) {
        std::int64_t max_n;
        if (!centropy::parse_int64(spec.substr(8), max_n) || max_n <= 0)
            throw centropy::error("invalid window grid spec: " + spec);
        return centropy::default_window_grid(static_cast<std::size_t>(max_n));
    }
    centropy::WindowGrid grid;
    grid.windows = parse_size_list(spec);
    return grid;
}

centropy::TauMaxRule parse_tau_max(const std::string& spec) {
    centropy::TauMaxRule rule;
    if (spec == "all") {
        rule.kind = centropy::TauMaxRule::Kind::all_observed;
        return rule;
    }
    if (!spec.empty() && (spec.back() == 'n' || spec.back() == 'N')) {
        double factor;
        if (!centropy::parse_double(spec.substr(0, spec.size() - 1), factor) || factor <= 0.0)
            throw centropy::error("invalid tau-max spec: " + spec);
        rule.kind = centropy::TauMaxRule::Kind::multiple_of_window;
        rule.factor = factor;
        return rule;
    }
    std::int64_t v;
    if (!centropy::parse_int64(spec, v) || v <= 0) throw centropy::error("invalid tau-max spec: " + spec);
    rule.kind = centropy::TauMaxRule::Kind::fixed;
    rule.value = static_cast<std::size_t>(v);
    return rule;
}

std::vector<centropy::ReferenceModel> load_reference_models(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw centropy::error("cannot open references file: " + path.string());
    json j = json::parse(in);
    const json& items = j.is_array() ? j : j.at("models");
    std::vector<centropy::ReferenceModel> out;
    for (const auto& item : items)
        out.push_back({item.at("model").get<std::string>(), item.at("I1").get<double>()});
    if (out.empty()) throw centropy::error("references file lists no models");
    return out;
}

void write_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw centropy::error("cannot write " + path.string());
    out << content;
}

// Shared flags for the pipeline-backed commands.
struct AnalysisFlags {
    std::string window_grid{"default:200"};
    std::string variant{"backward"};
    std::string segments;
    std::size_t segment_count{0};
    std::size_t horizon{0};  // 0 = all
    std::size_t target{0};   // 0 = no sampling
    std::string tau_max{"3n"};
    std::string normalization{"raw"};

    void attach(CLI::App* cmd) {
        cmd->add_option("--window-grid", window_grid, "Window grid: 'default:<max>' or comma list")
            ->capture_default_str();
        cmd->add_option("--variant", variant, "Moving-average variant")
            ->check(CLI::IsMember({"backward", "centered", "forward"}))
            ->capture_default_str();
        cmd->add_option("--segments", segments, "Cumulative horizon boundaries (comma list)");
        cmd->add_option("--equal-segments", segment_count, "Split the series into this many equal horizons");
        cmd->add_option("--horizon", horizon, "Restrict emitted curves to one horizon M")->check(CLI::PositiveNumber);
        cmd->add_option("--target", target, "Sample each horizon to this length before analysis");
        cmd->add_option("--tau-max", tau_max, "MDI duration cutoff: '<k>n', 'all' or an integer")
            ->capture_default_str();
        cmd->add_option("--normalization", normalization, "MDI normalization")
            ->check(CLI::IsMember({"raw", "per-count"}))
            ->capture_default_str();
    }

    centropy::AnalysisConfig to_config(const centropy::PriceSeries& series) const {
        centropy::AnalysisConfig config;
        config.grid = parse_window_grid(window_grid);
        if (!segments.empty() && segment_count > 0)
            throw centropy::error("--segments and --equal-segments are mutually exclusive");
        if (!segments.empty())
            config.horizon_boundaries = parse_size_list(segments);
        else if (segment_count > 0)
            config.horizon_boundaries =
                centropy::HorizonSchedule::equal_segments(series.size(), segment_count).boundaries;
        else
            config.horizon_boundaries = {series.size()};
        if (target > 0) config.sampling_target = target;
        config.variant = centropy::ma_variant_from_string(variant);
        config.tau_max = parse_tau_max(tau_max);
        config.normalization = centropy::mdi_normalization_from_string(normalization);
        return config;
    }
};

std::string benchmark_csv(const std::vector<centropy::BenchmarkRow>& rows) {
    std::string out = "M,t,dof,p,h,pairs,seeds\n";
    for (const auto& r : rows) {
        out += std::to_string(r.horizon) + ',' + centropy::format_double(r.result.t_statistic) + ',' +
               std::to_string(r.result.degrees_of_freedom) + ',' + centropy::format_double(r.result.p_value) + ',' +
               (r.result.reject_at_5pct ? "1" : "0") + ',' + std::to_string(r.result.pairs) + ',' +
               std::to_string(r.seeds_used) + '\n';
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cluster-entropy analysis of price series"};
    app.require_subcommand(1);

    std::string runs_dir = "runs";
    unsigned jobs = 0;
    app.add_option("--runs-dir", runs_dir, "Artifact cache root")->envname("CENTROPY_RUNS_DIR")
        ->capture_default_str();
    app.add_option("--jobs", jobs, "Parallel (M,n) tasks (default: hardware threads)");

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Parse a (timestamp, price) tick CSV into a price series");
    std::string ingest_input, ingest_out, ingest_symbol;
    std::string ingest_delim = ",";
    ingest->add_option("input", ingest_input, "Tick CSV path")->required();
    ingest->add_option("--out", ingest_out, "Output price-series CSV")->required();
    ingest->add_option("--delimiter", ingest_delim, "Field delimiter")->capture_default_str();
    ingest->add_option("--symbol", ingest_symbol, "Symbol override");

    // sample
    auto* sample = app.add_subcommand("sample", "Resample a price series to a comparable length");
    std::string sample_input, sample_out;
    std::size_t sample_target = 492035;
    sample->add_option("input", sample_input)->required();
    sample->add_option("--target", sample_target, "Target length")->capture_default_str();
    sample->add_option("--out", sample_out)->required();

    // generate-fbm
    auto* gen = app.add_subcommand("generate-fbm", "Generate a fractional Brownian motion benchmark series");
    double gen_hurst = 0.5;
    std::size_t gen_length = 0;
    std::uint64_t gen_seed = 1;
    std::string gen_segments, gen_out;
    gen->add_option("--hurst", gen_hurst, "Hurst exponent in (0,1)")->capture_default_str();
    gen->add_option("--length", gen_length, "Path length N");
    gen->add_option("--seed", gen_seed, "RNG seed")->capture_default_str();
    gen->add_option("--segments", gen_segments, "Mirror these cumulative horizon lengths (comma list)");
    gen->add_option("--out", gen_out)->required();

    // entropy
    auto* entropy = app.add_subcommand("entropy", "Compute cluster entropy curves S(tau, n)");
    std::string entropy_input, entropy_out = ".";
    AnalysisFlags entropy_flags;
    entropy->add_option("input", entropy_input, "Price-series CSV")->required();
    entropy_flags.attach(entropy);
    entropy->add_option("--out", entropy_out, "Directory for curve files")->capture_default_str();

    // mdi
    auto* mdi = app.add_subcommand("mdi", "Emit the Market Dynamic Index grid of a completed run");
    std::string mdi_run, mdi_out;
    mdi->add_option("run-dir", mdi_run, "Run directory (runs/<hash>)")->required();
    mdi->add_option("--out", mdi_out, "Output CSV path")->required();

    // horizon
    auto* horizon = app.add_subcommand("horizon", "Build the horizon-dependence report of a completed run");
    std::string horizon_run, horizon_out = ".", horizon_refs;
    horizon->add_option("run-dir", horizon_run)->required();
    horizon->add_option("--references", horizon_refs, "JSON file with reference one-period entropies");
    horizon->add_option("--out", horizon_out, "Output directory")->capture_default_str();

    // benchmark
    auto* benchmark = app.add_subcommand("benchmark", "Paired t-test of a market run against fBm benchmarks");
    std::string bench_run, bench_out = ".", bench_seed_list;
    double bench_hurst = 0.5;
    std::size_t bench_seeds = 3;
    benchmark->add_option("run-dir", bench_run)->required();
    benchmark->add_option("--hurst", bench_hurst)->capture_default_str();
    benchmark->add_option("--seeds", bench_seeds, "Number of benchmark seeds (1..k)")->capture_default_str();
    benchmark->add_option("--seed-list", bench_seed_list, "Explicit seed list (comma separated)");
    benchmark->add_option("--out", bench_out, "Output directory")->capture_default_str();

    // export
    auto* exp = app.add_subcommand("export", "Export plot-ready data from a completed run");
    std::string exp_run, exp_out = ".", exp_format = "csv";
    exp->add_option("run-dir", exp_run)->required();
    exp->add_option("--format", exp_format)->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
    exp->add_option("--out", exp_out, "Output directory")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*ingest) {
            if (ingest_delim.size() != 1) throw centropy::error("delimiter must be a single character");
            centropy::TickFormat format{ingest_delim[0]};
            centropy::TickSeries ticks = centropy::load_ticks(ingest_input, format);
            if (!ingest_symbol.empty()) ticks.symbol = ingest_symbol;
            centropy::PriceSeries series = centropy::to_price_series(ticks);
            centropy::save_price_series(series, ingest_out);
            std::printf("wrote %s (%zu prices)\n", ingest_out.c_str(), series.size());
        } else if (*sample) {
            centropy::PriceSeries series = centropy::load_price_series(sample_input);
            centropy::PriceSeries sampled = centropy::sample_series(series, sample_target);
            centropy::save_price_series(sampled, sample_out);
            const auto step = static_cast<std::size_t>(std::max<long long>(
                1, std::llround(static_cast<double>(series.size()) / static_cast<double>(sample_target))));
            std::printf("wrote %s (%zu prices, step %zu)\n", sample_out.c_str(), sampled.size(), step);
        } else if (*gen) {
            centropy::FbmConfig config;
            config.hurst = gen_hurst;
            config.seed = gen_seed;
            if (!gen_segments.empty()) {
                auto lengths = parse_size_list(gen_segments);
                auto [series, schedule] = centropy::mirror_market_schedule(config, lengths);
                centropy::save_price_series(series, gen_out);
                json sj{{"boundaries", schedule.boundaries}, {"unit", "month"}};
                write_file(fs::path(gen_out).replace_extension(".schedule.json"), sj.dump(2) + "\n");
                std::printf("wrote %s (N=%zu, %zu horizons)\n", gen_out.c_str(), series.size(),
                            schedule.horizons());
            } else {
                if (gen_length < 2) throw centropy::error("--length is required without --segments");
                config.length = gen_length;
                centropy::PriceSeries series = centropy::generate_fbm(config);
                centropy::save_price_series(series, gen_out);
                std::printf("wrote %s (N=%zu)\n", gen_out.c_str(), series.size());
            }
        } else if (*entropy) {
            centropy::PriceSeries series = centropy::load_price_series(entropy_input);
            centropy::AnalysisConfig config = entropy_flags.to_config(series);
            if (entropy_flags.horizon > config.horizon_boundaries.size())
                throw centropy::error("--horizon " + std::to_string(entropy_flags.horizon) + " exceeds the schedule (" +
                                      std::to_string(config.horizon_boundaries.size()) + " horizons)");
            centropy::MarketAnalysis analysis = centropy::run_market_analysis(series, config, runs_dir, jobs);
            fs::create_directories(entropy_out);
            std::size_t emitted = 0;
            for (std::size_t m = 0; m < analysis.curves.size(); ++m) {
                if (entropy_flags.horizon != 0 && entropy_flags.horizon != m + 1) continue;
                for (std::size_t c = 0; c < config.grid.size(); ++c) {
                    if (!analysis.curves[m][c]) continue;
                    const std::string name = "entropy_M" + std::to_string(m + 1) + "_n" +
                                             std::to_string(config.grid.windows[c]) + ".csv";
                    write_file(fs::path(entropy_out) / name,
                               centropy::detail::entropy_csv(*analysis.curves[m][c], series.symbol, m + 1,
                                                             config.variant, config.normalization));
                    ++emitted;
                }
            }
            std::printf("run %s: %zu curve files -> %s (%s)\n", analysis.config_hash.c_str(), emitted,
                        entropy_out.c_str(), analysis.from_cache ? "cached" : "computed");
        } else if (*mdi) {
            centropy::MarketAnalysis analysis = centropy::load_market_analysis(mdi_run);
            std::ifstream src(fs::path(mdi_run) / "mdi.csv", std::ios::binary);
            std::string content((std::istreambuf_iterator<char>(src)), std::istreambuf_iterator<char>());
            write_file(mdi_out, content);
            std::printf("wrote %s\n", mdi_out.c_str());
        } else if (*horizon) {
            std::optional<std::vector<centropy::ReferenceModel>> refs;
            if (!horizon_refs.empty()) refs = load_reference_models(horizon_refs);
            centropy::MarketAnalysis analysis =
                centropy::load_market_analysis(horizon_run, refs ? &*refs : nullptr);
            std::ifstream cf(fs::path(horizon_run) / "config.json");
            centropy::AnalysisConfig config = centropy::AnalysisConfig::from_json(json::parse(cf));
            fs::create_directories(horizon_out);
            write_file(fs::path(horizon_out) / "horizon.csv", centropy::detail::horizon_long_csv(analysis.report));
            std::ifstream sidecar(fs::path(horizon_run) / "series" / "1.json");
            std::string symbol = "series";
            if (sidecar) symbol = json::parse(sidecar).at("symbol").get<std::string>();
            write_file(fs::path(horizon_out) / "horizon.json",
                       centropy::detail::horizon_table_json(analysis.report, symbol, config.normalization).dump(2) +
                           "\n");
            std::printf("wrote %s/horizon.csv and horizon.json\n", horizon_out.c_str());
        } else if (*benchmark) {
            centropy::MarketAnalysis market = centropy::load_market_analysis(bench_run);
            std::ifstream cf(fs::path(bench_run) / "config.json");
            centropy::AnalysisConfig config = centropy::AnalysisConfig::from_json(json::parse(cf));
            centropy::BenchmarkOptions options;
            options.hurst = bench_hurst;
            options.jobs = jobs;
            if (!bench_seed_list.empty()) {
                for (std::size_t s : parse_size_list(bench_seed_list)) options.seeds.push_back(s);
            } else {
                for (std::uint64_t s = 1; s <= bench_seeds; ++s) options.seeds.push_back(s);
            }
            auto rows = centropy::run_benchmark_suite(market, config, options, runs_dir);
            fs::create_directories(bench_out);
            write_file(fs::path(bench_out) / "benchmark.json", centropy::benchmark_rows_json(rows).dump(2) + "\n");
            write_file(fs::path(bench_out) / "benchmark.csv", benchmark_csv(rows));
            for (const auto& r : rows)
                std::printf("M=%2zu  t=%+.4f  dof=%zu  p=%.4f  h=%d\n", r.horizon, r.result.t_statistic,
                            r.result.degrees_of_freedom, r.result.p_value, r.result.reject_at_5pct ? 1 : 0);
        } else if (*exp) {
            centropy::MarketAnalysis analysis = centropy::load_market_analysis(exp_run);
            std::ifstream cf(fs::path(exp_run) / "config.json");
            centropy::AnalysisConfig config = centropy::AnalysisConfig::from_json(json::parse(cf));
            fs::create_directories(exp_out);
            if (exp_format == "csv") {
                std::string curves = "M,n,tau,S\n";
                for (std::size_t m = 0; m < analysis.curves.size(); ++m)
                    for (std::size_t c = 0; c < config.grid.size(); ++c) {
                        if (!analysis.curves[m][c]) continue;
                        for (const auto& [tau, s] : analysis.curves[m][c]->points)
                            curves += std::to_string(m + 1) + ',' + std::to_string(config.grid.windows[c]) + ',' +
                                      std::to_string(tau) + ',' + centropy::format_double(s) + '\n';
                    }
                write_file(fs::path(exp_out) / "curves.csv", curves);
                std::string mdi_csv = "M,n,I\n";
                for (std::size_t m = 0; m < analysis.report.horizons; ++m)
                    for (std::size_t c = 0; c < config.grid.size(); ++c) {
                        const double v = analysis.report.index[m][c];
                        if (centropy::HorizonReport::missing(v)) continue;
                        mdi_csv += std::to_string(m + 1) + ',' + std::to_string(config.grid.windows[c]) + ',' +
                                   centropy::format_double(v) + '\n';
                    }
                write_file(fs::path(exp_out) / "mdi.csv", mdi_csv);
                write_file(fs::path(exp_out) / "horizon.csv", centropy::detail::horizon_long_csv(analysis.report));
                std::printf("wrote curves.csv, mdi.csv, horizon.csv -> %s\n", exp_out.c_str());
            } else {
                json doc;
                json curves = json::array();
                for (std::size_t m = 0; m < analysis.curves.size(); ++m)
                    for (std::size_t c = 0; c < config.grid.size(); ++c) {
                        if (!analysis.curves[m][c]) continue;
                        json points = json::array();
                        for (const auto& [tau, s] : analysis.curves[m][c]->points) points.push_back({tau, s});
                        curves.push_back({{"M", m + 1}, {"n", config.grid.windows[c]}, {"points", points}});
                    }
                doc["curves"] = curves;
                json mdi_rows = json::array();
                for (std::size_t m = 0; m < analysis.report.horizons; ++m)
                    for (std::size_t c = 0; c < config.grid.size(); ++c) {
                        const double v = analysis.report.index[m][c];
                        if (centropy::HorizonReport::missing(v)) continue;
                        mdi_rows.push_back({{"M", m + 1}, {"n", config.grid.windows[c]}, {"I", v}});
                    }
                doc["mdi"] = mdi_rows;
                json hz_rows = json::array();
                for (std::size_t m = 0; m < analysis.report.horizons; ++m)
                    for (std::size_t c = 0; c < config.grid.size(); ++c) {
                        if (centropy::HorizonReport::missing(analysis.report.index[m][c])) continue;
                        hz_rows.push_back({{"M", m + 1},
                                           {"n", config.grid.windows[c]},
                                           {"I", analysis.report.index[m][c]},
                                           {"H", analysis.report.dependence[m][c]},
                                           {"h_rel", analysis.report.relative[m][c]}});
                    }
                doc["horizon"] = hz_rows;
                write_file(fs::path(exp_out) / "export.json", doc.dump(2) + "\n");
                std::printf("wrote export.json -> %s\n", exp_out.c_str());
            }
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "centropy: %s\n", e.what());
        return 1;
    }
    return 0;
}
