#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "centropy/moving_average.hpp"
#include "test_support.hpp"

using namespace centropy;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("backward moving average alignment", "[moving-average]") {
    PriceSeries s;
    s.values = {1, 2, 3, 4};
    MovingAverageSeries ma = moving_average(s, 2, MaVariant::backward);
    REQUIRE(ma.size() == 2);  // N - n
    CHECK(ma.offset == 1);
    CHECK_THAT(ma.values[0], WithinAbs(1.5, 1e-15));
    CHECK_THAT(ma.values[1], WithinAbs(2.5, 1e-15));
}

TEST_CASE("constant series maps to a constant average in every variant", "[moving-average]") {
    PriceSeries s;
    s.values.assign(64, 7.25);
    for (auto variant : {MaVariant::backward, MaVariant::centered, MaVariant::forward}) {
        for (std::size_t n : {1, 2, 5, 63}) {
            MovingAverageSeries ma = moving_average(s, n, variant);
            REQUIRE(ma.size() == s.size() - n);
            for (double v : ma.values) CHECK_THAT(v, WithinAbs(7.25, 1e-15));
        }
    }
}

TEST_CASE("window of one reproduces the series", "[moving-average]") {
    auto s = test_support::random_walk(40, 5);
    MovingAverageSeries ma = moving_average(s, 1, MaVariant::backward);
    REQUIRE(ma.size() == s.size() - 1);
    for (std::size_t i = 0; i < ma.size(); ++i) CHECK(ma.values[i] == s.values[i]);
}

TEST_CASE("every variant emits N - n values and matches a direct mean", "[moving-average]") {
    auto s = test_support::random_walk(257, 21);
    std::mt19937_64 rng(3);
    for (auto variant : {MaVariant::backward, MaVariant::centered, MaVariant::forward}) {
        for (int trial = 0; trial < 8; ++trial) {
            const std::size_t n = 1 + rng() % 200;
            MovingAverageSeries ma = moving_average(s, n, variant);
            REQUIRE(ma.size() == s.size() - n);
            // spot-check against a naive mean of the n values starting at i
            for (std::size_t i : {std::size_t{0}, ma.size() / 2, ma.size() - 1}) {
                double mean = 0.0;
                for (std::size_t j = 0; j < n; ++j) mean += s.values[i + j];
                mean /= static_cast<double>(n);
                CHECK_THAT(ma.values[i], WithinRel(mean, 1e-12));
            }
        }
    }
}

TEST_CASE("moving average is affine-equivariant", "[moving-average]") {
    auto s = test_support::random_walk(300, 9);
    MovingAverageSeries base = moving_average(s, 17, MaVariant::backward);
    PriceSeries scaled;
    scaled.symbol = s.symbol;
    for (double v : s.values) scaled.values.push_back(2.5 * v + 11.0);
    MovingAverageSeries shifted = moving_average(scaled, 17, MaVariant::backward);
    for (std::size_t i = 0; i < base.size(); ++i)
        CHECK_THAT(shifted.values[i], WithinAbs(2.5 * base.values[i] + 11.0, 1e-9));
}

TEST_CASE("running sum stays on top of a naive re-summation over 1e6 points", "[moving-average]") {
    auto s = test_support::random_walk(1'000'000, 77, 5000.0);
    const std::size_t n = 1500;
    MovingAverageSeries ma = moving_average(s, n, MaVariant::backward);
    // re-sum from scratch at a few scattered positions, including the far end
    std::mt19937_64 rng(1);
    for (int k = 0; k < 20; ++k) {
        const std::size_t i = (k == 0) ? ma.size() - 1 : rng() % ma.size();
        double mean = 0.0;
        for (std::size_t j = 0; j < n; ++j) mean += s.values[i + j];
        mean /= static_cast<double>(n);
        REQUIRE_THAT(ma.values[i], WithinRel(mean, 1e-9));
    }
}

TEST_CASE("window validation", "[moving-average]") {
    PriceSeries s;
    s.values = {1, 2, 3};
    REQUIRE_THROWS_AS(moving_average(s, 0), error);
    REQUIRE_THROWS_AS(moving_average(s, 3), error);
}

TEST_CASE("default window grid", "[moving-average]") {
    SECTION("up to 200") {
        auto grid = default_window_grid(200);
        CHECK(grid.windows == std::vector<std::size_t>{30, 50, 100, 150, 200});
    }
    SECTION("up to 1500 extends in steps of 100") {
        auto grid = default_window_grid(1500);
        REQUIRE(grid.windows.size() == 18);
        CHECK(grid.windows.front() == 30);
        CHECK(grid.windows[5] == 300);
        CHECK(grid.windows.back() == 1500);
    }
    SECTION("minimum grid") {
        auto grid = default_window_grid(30);
        CHECK(grid.windows == std::vector<std::size_t>{30});
    }
    SECTION("too small") { REQUIRE_THROWS_AS(default_window_grid(29), error); }
    SECTION("grid must stay below the series length") {
        WindowGrid grid{{10, 20, 40}};
        REQUIRE_THROWS_AS(grid.validate(40), error);
        REQUIRE_NOTHROW(grid.validate(41));
    }
}
