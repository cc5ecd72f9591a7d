#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>
#include <string>

#include "bessbid/ingest.hpp"

using namespace bessbid;

namespace {

std::string error_of(const std::string& csv) {
    std::istringstream is(csv);
    try {
        load_price_csv(is, "in.csv");
    } catch (const IngestError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("loads a contiguous hourly series") {
    std::istringstream is(
        "timestamp,price_eur_mwh\n"
        "2024-01-01T00:00:00Z,50.5\n"
        "2024-01-01T01:00:00Z,-12\n"
        "2024-01-01T02:00:00Z,0\n");
    PriceSeries s = load_price_csv(is);
    CHECK(s.start_epoch == 1704067200);
    REQUIRE(s.pi_da.size() == 3);
    CHECK(s.pi_da[0] == 50.5);
    CHECK(s.pi_da[1] == -12.0);
    CHECK(s.pi_da[2] == 0.0);
}

TEST_CASE("loader errors carry the file, line, and cause") {
    CHECK(error_of("price\n") == "in.csv:1: missing header row");
    CHECK(error_of("timestamp,price_eur_mwh\n2024-01-01T00:00:00Z\n") ==
          "in.csv:2: malformed row");
    CHECK(error_of("timestamp,price_eur_mwh\n2024-01-01T00:30:00Z,5\n") ==
          "in.csv:2: bad timestamp '2024-01-01T00:30:00Z'");
    CHECK(error_of("timestamp,price_eur_mwh\n2024-01-01T00:00:00Z,abc\n") ==
          "in.csv:2: bad price 'abc'");
    CHECK(error_of("timestamp,price_eur_mwh\n2024-01-01T00:00:00Z,nan\n") ==
          "in.csv:2: non-finite price");
    CHECK(error_of("timestamp,price_eur_mwh\n"
                   "2024-01-01T00:00:00Z,1\n"
                   "2024-01-01T00:00:00Z,2\n") ==
          "in.csv:3: duplicate timestamp 2024-01-01T00:00:00Z");
    CHECK(error_of("timestamp,price_eur_mwh\n"
                   "2024-01-01T00:00:00Z,1\n"
                   "2024-01-01T02:00:00Z,2\n") ==
          "in.csv: gap, missing 2024-01-01T01:00:00Z");
    CHECK(error_of("timestamp,price_eur_mwh\n") == "in.csv: no data rows");
    CHECK_THROWS_AS(load_price_csv("/nonexistent/prices.csv"), IngestError);
}

TEST_CASE("write then load is the identity") {
    PriceSeries s;
    s.start_epoch = 1704067200;
    s.pi_da = {42.125, -7.5, 0.0, 123.456};
    std::ostringstream os;
    write_price_csv(os, s);
    std::istringstream is(os.str());
    PriceSeries back = load_price_csv(is);
    CHECK(back.start_epoch == s.start_epoch);
    REQUIRE(back.pi_da.size() == s.pi_da.size());
    for (std::size_t i = 0; i < s.pi_da.size(); ++i)
        CHECK(back.pi_da[i] == s.pi_da[i]);
}

TEST_CASE("synthetic generator is seed-deterministic") {
    SyntheticPriceParams p;
    p.seed = 17;
    p.days = 7;
    PriceSeries a = synth_prices(p);
    PriceSeries b = synth_prices(p);
    CHECK(a.pi_da.size() == 168);
    CHECK(a.pi_da == b.pi_da);
    CHECK(a.start_epoch == p.start_epoch);
    p.seed = 18;
    PriceSeries c = synth_prices(p);
    CHECK(a.pi_da != c.pi_da);
}

TEST_CASE("noise-free deterministic shape repeats every day") {
    SyntheticPriceParams p;
    p.days = 3;
    p.noise_std = 0.0;
    p.negative_prob = 0.0;
    PriceSeries s = synth_prices(p);
    for (int h = 0; h < 24; ++h) {
        CHECK(s.pi_da[h] == s.pi_da[24 + h]);
        CHECK(s.pi_da[h] == s.pi_da[48 + h]);
    }
    // triangular peaks: centre at full amplitude, zero three hours out
    CHECK(s.pi_da[8] == doctest::Approx(70.0 + 45.0));
    CHECK(s.pi_da[19] == doctest::Approx(70.0 + 55.0));
    CHECK(s.pi_da[4] == doctest::Approx(70.0));
    CHECK(s.pi_da[9] == doctest::Approx(70.0 + 45.0 * 2.0 / 3.0 + 0.0));
}

TEST_CASE("synthetic parameter validation") {
    SyntheticPriceParams p;
    p.days = 0;
    CHECK_THROWS_AS(synth_prices(p), ValidationError);
    p = {};
    p.negative_prob = 1.5;
    CHECK_THROWS_AS(synth_prices(p), ValidationError);
    p = {};
    p.noise_std = -1.0;
    CHECK_THROWS_AS(synth_prices(p), ValidationError);
}

TEST_CASE("sample mean converges to the analytic mean") {
    SyntheticPriceParams p;
    p.seed = 5;
    p.days = 2000;
    p.negative_prob = 0.0;
    PriceSeries s = synth_prices(p);
    double sum = 0.0;
    for (double v : s.pi_da) sum += v;
    double n = static_cast<double>(s.pi_da.size());
    double mean = sum / n;
    // each triangular peak contributes 1 + 2*(2/3) + 2*(1/3) = 3 bump-units/day
    double want = p.base + (p.morning_peak + p.evening_peak) * 3.0 / 24.0;
    double tol = 3.0 * p.noise_std / std::sqrt(n);
    CHECK(std::abs(mean - want) <= tol);
}

TEST_CASE("negative-price hours appear at the configured rate") {
    SyntheticPriceParams p;
    p.seed = 9;
    p.days = 1000;
    p.negative_prob = 0.1;
    PriceSeries s = synth_prices(p);
    int neg = 0;
    for (double v : s.pi_da)
        if (v < 0.0) neg += 1;
    double rate = static_cast<double>(neg) / static_cast<double>(s.pi_da.size());
    CHECK(rate == doctest::Approx(0.1).epsilon(0.15));
    // negative draws stay within [-max_amplitude, 0)
    for (double v : s.pi_da)
        if (v < 0.0) CHECK(v >= -55.0);
}
