#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "centropy/series.hpp"
#include "test_support.hpp"

using namespace centropy;
using test_support::TempDir;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

TEST_CASE("load_ticks parses a minimal well-formed file", "[series]") {
    TempDir dir("ticks");
    const auto path = dir.path() / "mini.csv";
    test_support::write_file(path, "1,100.0\n2,101.0\n");
    TickSeries ticks = load_ticks(path);
    REQUIRE(ticks.size() == 2);
    CHECK(ticks.ticks[0].timestamp == 1);
    CHECK(ticks.ticks[1].price == 101.0);
    CHECK(ticks.symbol == "mini");
}

TEST_CASE("load_ticks accepts an optional header and custom delimiter", "[series]") {
    TempDir dir("ticks");
    const auto path = dir.path() / "hdr.csv";
    test_support::write_file(path, "time;price\n10;5.5\n11;5.75\n12;6.0\n");
    TickSeries ticks = load_ticks(path, TickFormat{';'});
    REQUIRE(ticks.size() == 3);
    CHECK(ticks.ticks[2].price == 6.0);
}

TEST_CASE("load_ticks rejects bad rows with line numbers", "[series]") {
    TempDir dir("ticks");

    SECTION("negative price") {
        const auto path = dir.path() / "neg.csv";
        test_support::write_file(path, "1,100.0\n2,-3\n");
        REQUIRE_THROWS_WITH(load_ticks(path), ContainsSubstring(":2:") && ContainsSubstring("non-positive"));
    }
    SECTION("malformed row") {
        const auto path = dir.path() / "bad.csv";
        test_support::write_file(path, "1,100.0\n2,abc\n3,101\n");
        REQUIRE_THROWS_WITH(load_ticks(path), ContainsSubstring(":2:") && ContainsSubstring("malformed"));
    }
    SECTION("time going backwards") {
        const auto path = dir.path() / "back.csv";
        test_support::write_file(path, "5,100.0\n4,101.0\n");
        REQUIRE_THROWS_WITH(load_ticks(path), ContainsSubstring(":2:") && ContainsSubstring("timestamp"));
    }
    SECTION("empty file") {
        const auto path = dir.path() / "empty.csv";
        test_support::write_file(path, "");
        REQUIRE_THROWS_WITH(load_ticks(path), ContainsSubstring("no tick rows"));
    }
    SECTION("missing file") {
        REQUIRE_THROWS_WITH(load_ticks(dir.path() / "nope.csv"), ContainsSubstring("cannot open"));
    }
}

TEST_CASE("sample_series picks every k-th value from index 0", "[series]") {
    PriceSeries s;
    s.symbol = "x";
    s.values = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};

    SECTION("N=10 target 5 gives step 2") {
        PriceSeries out = sample_series(s, 5);
        CHECK(out.values == std::vector<double>{1, 3, 5, 7, 9});
        CHECK(std::get<SampledOrigin>(out.origin).step == 2);
    }
    SECTION("target N is the identity") {
        PriceSeries out = sample_series(s, 10);
        CHECK(out.values == s.values);
        CHECK(std::get<SampledOrigin>(out.origin).step == 1);
    }
    SECTION("one-month tick count at the standard target keeps step 1") {
        // 586866 raw ticks sampled towards 492035: round(1.19...) = 1
        const auto step = static_cast<std::size_t>(std::llround(586866.0 / 492035.0));
        CHECK(step == 1);
    }
    SECTION("errors") {
        REQUIRE_THROWS_AS(sample_series(s, 0), error);
        REQUIRE_THROWS_AS(sample_series(s, 11), error);
    }
}

TEST_CASE("sample_series is idempotent at step 1", "[series]") {
    auto walk = test_support::random_walk(1234, 7);
    PriceSeries once = sample_series(walk, walk.size());
    CHECK(once.values == walk.values);
}

TEST_CASE("tick series can be sampled directly", "[series]") {
    TickSeries ticks;
    ticks.symbol = "t";
    for (int i = 0; i < 10; ++i) ticks.ticks.push_back({i, 100.0 + i});
    PriceSeries out = sample_series(ticks, 5);
    CHECK(out.values == std::vector<double>{100, 102, 104, 106, 108});
    CHECK(out.symbol == "t");
}

TEST_CASE("segment_horizons yields nested prefixes", "[series]") {
    PriceSeries s;
    s.symbol = "x";
    s.values.resize(12);
    for (std::size_t i = 0; i < 12; ++i) s.values[i] = static_cast<double>(i + 1);

    HorizonSchedule schedule{{4, 8, 12}, HorizonUnit::segment};
    auto horizons = segment_horizons(s, schedule);
    REQUIRE(horizons.size() == 3);
    CHECK(horizons[0].size() == 4);
    CHECK(horizons[1].size() == 8);
    CHECK(horizons[2].size() == 12);
    for (std::size_t m = 0; m + 1 < horizons.size(); ++m)
        CHECK(std::equal(horizons[m].values.begin(), horizons[m].values.end(), horizons[m + 1].values.begin()));

    SECTION("single boundary equals the input") {
        auto one = segment_horizons(s, HorizonSchedule{{12}, HorizonUnit::segment});
        CHECK(one[0].values == s.values);
    }
    SECTION("boundary beyond the series is rejected") {
        REQUIRE_THROWS_AS(segment_horizons(s, HorizonSchedule{{13}, HorizonUnit::segment}), error);
    }
}

TEST_CASE("returns", "[series]") {
    SECTION("linear return hand cases") {
        PriceSeries s;
        s.values = {100, 101, 103};
        CHECK(linear_return(s, 1) == std::vector<double>{1, 2});
        PriceSeries t;
        t.values = {5, 9};
        CHECK(linear_return(t, 1) == std::vector<double>{4});
    }
    SECTION("constant series gives zero returns for any lag") {
        PriceSeries s;
        s.values.assign(50, 42.0);
        for (std::size_t h : {1, 2, 7}) {
            for (double r : linear_return(s, h)) CHECK(r == 0.0);
            for (double r : log_return(s, h)) CHECK(r == 0.0);
        }
    }
    SECTION("log return hand cases") {
        PriceSeries s;
        s.values = {1.0, std::exp(1.0)};
        CHECK_THAT(log_return(s, 1)[0], WithinAbs(1.0, 1e-15));
        PriceSeries t;
        t.values = {100, 101};
        CHECK_THAT(log_return(t, 1)[0], WithinAbs(0.00995033085316809, 1e-15));
    }
    SECTION("output length is N - h") {
        auto walk = test_support::random_walk(300, 3);
        for (std::size_t h : {1, 5, 299}) CHECK(linear_return(walk, h).size() == walk.size() - h);
    }
    SECTION("log returns of the exponentiated series equal linear returns") {
        auto walk = test_support::random_walk(500, 11, 0.0);
        PriceSeries exp_series;
        exp_series.symbol = "exp";
        for (double v : walk.values) exp_series.values.push_back(std::exp(v * 0.01));
        auto lin = linear_return(walk, 3);
        auto log = log_return(exp_series, 3);
        for (std::size_t i = 0; i < lin.size(); ++i) CHECK_THAT(log[i], WithinAbs(lin[i] * 0.01, 1e-12));
    }
    SECTION("errors") {
        PriceSeries s;
        s.values = {1, 2, 3};
        REQUIRE_THROWS_AS(linear_return(s, 0), error);
        REQUIRE_THROWS_AS(linear_return(s, 3), error);
        REQUIRE_THROWS_AS(log_return(s, 5), error);
    }
}

TEST_CASE("price series round-trips through disk bit-exactly", "[series]") {
    TempDir dir("roundtrip");
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> mag(-30, 30);
    PriceSeries s;
    s.symbol = "rt";
    s.origin = SampledOrigin{3};
    for (int i = 0; i < 500; ++i) s.values.push_back(std::exp(mag(rng)));
    s.values.push_back(1.0 + std::numeric_limits<double>::epsilon());

    const auto path = dir.path() / "series.csv";
    save_price_series(s, path);
    PriceSeries back = load_price_series(path);
    REQUIRE(back.size() == s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        INFO("index " << i);
        CHECK(back.values[i] == s.values[i]);
    }
    CHECK(back.symbol == "rt");
    CHECK(std::get<SampledOrigin>(back.origin).step == 3);
}

TEST_CASE("synthetic origin bypasses the positivity invariant", "[series]") {
    TempDir dir("synthetic");
    PriceSeries s;
    s.symbol = "fbm";
    s.origin = SyntheticOrigin{17, 0.5};
    s.values = {0.0, -1.5, 0.25, -0.75};
    const auto path = dir.path() / "fbm.csv";
    save_price_series(s, path);
    PriceSeries back = load_price_series(path);
    CHECK(back.values == s.values);
    CHECK(std::get<SyntheticOrigin>(back.origin).seed == 17);

    SECTION("raw series with non-positive values is rejected") {
        PriceSeries bad;
        bad.values = {1.0, -2.0};
        REQUIRE_THROWS_AS(validate_price_series(bad), error);
    }
}

TEST_CASE("equal_segments covers the series with increasing boundaries", "[series]") {
    auto schedule = HorizonSchedule::equal_segments(100, 12);
    REQUIRE(schedule.horizons() == 12);
    CHECK(schedule.boundaries.back() == 100);
    schedule.validate(100);
}
