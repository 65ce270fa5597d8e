// test_support.hpp -- shared helpers for the unit suites
#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "centropy/series.hpp"

namespace test_support {

/// Fresh scratch directory, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& label) {
        static std::atomic<unsigned> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("centropy_" + label + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Random-walk price series (positive level shift keeps market invariants).
inline centropy::PriceSeries random_walk(std::size_t length, std::uint64_t seed, double start = 1000.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> step(0.0, 1.0);
    centropy::PriceSeries series;
    series.symbol = "walk";
    series.values.resize(length);
    double level = start;
    for (std::size_t i = 0; i < length; ++i) {
        series.values[i] = level;
        level += step(rng);
    }
    return series;
}

}  // namespace test_support
