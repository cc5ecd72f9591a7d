#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "bessbid/rng.hpp"
#include "bessbid/sim.hpp"

using namespace bessbid;

namespace {
BatteryParams table_battery() {
    BatteryParams b;
    b.p_max = 10.0;
    b.capacity = 10.0;
    b.eta_ch = 0.99;
    b.eta_dis = 0.99;
    b.dt = 1.0;
    return b;
}
SocErrorParams table_error() {
    SocErrorParams e;
    e.b = 0.15;
    e.c = 0.9;
    e.beta = 1e-3;
    e.sigma2 = 1e-4;
    e.w_max = 0.2;
    return e;
}
}  // namespace

TEST_CASE("scaling factor piecewise values") {
    SocErrorParams e = table_error();
    CHECK(scaling_factor(0.0, e) == 0.0);
    CHECK(scaling_factor(0.075, e) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(scaling_factor(0.15, e) == 1.0);
    CHECK(scaling_factor(0.525, e) == 1.0);
    CHECK(scaling_factor(0.5, e) == 1.0);
    CHECK(scaling_factor(0.9, e) == 1.0);
    CHECK(scaling_factor(0.95, e) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(scaling_factor(1.0, e) == doctest::Approx(0.0));
    // continuity at the knees
    CHECK(scaling_factor(0.15 + 1e-12, e) == doctest::Approx(1.0));
    CHECK(scaling_factor(0.9 + 1e-12, e) == doctest::Approx(1.0));
}

TEST_CASE("error step matches the scalar recursion") {
    BatteryParams b = table_battery();
    SocErrorParams e = table_error();
    CHECK(step_error(0.01, 0.5, 10.0, 1e-3, e, b) == doctest::Approx(0.011).epsilon(1e-12));
    CHECK(step_error(0.05, 0.0, 3.0, 2e-3, e, b) == 0.0);   // a(0) annihilates
    CHECK(step_error(0.25, 0.5, 0.0, 0.0, e, b) == 0.2);    // saturation clamp
    CHECK(step_error(-0.25, 0.5, 0.0, 0.0, e, b) == -0.2);

    std::mt19937_64 eng(7);
    for (int i = 0; i < 2000; ++i) {
        double w = uniform(eng, -0.2, 0.2);
        double s = uniform01(eng);
        double p = uniform(eng, -10.0, 10.0);
        double eta = gauss(eng, e.beta, std::sqrt(e.sigma2));
        double got = step_error(w, s, p, eta, e, b);
        double a = s <= e.b ? s / e.b : (s <= e.c ? 1.0 : 1.0 - (s - e.c) / (1.0 - e.c));
        double want = a * (w + std::abs(p) / b.p_max * eta);
        want = std::min(std::max(want, -e.w_max), e.w_max);
        CHECK(std::abs(got - want) <= 1e-12);
        CHECK(std::abs(got) <= e.w_max);
    }
}

TEST_CASE("error step is monotone in dispatched power") {
    BatteryParams b = table_battery();
    SocErrorParams e = table_error();
    double prev = step_error(0.01, 0.5, 0.0, 1e-3, e, b);
    for (double p = 1.0; p <= 10.0; p += 1.0) {
        double cur = step_error(0.01, 0.5, p, 1e-3, e, b);
        CHECK(cur >= prev);
        prev = cur;
    }
}

TEST_CASE("hundred plateau hours at full power accumulate the bias") {
    BatteryParams b = table_battery();
    SocErrorParams e = table_error();
    double w = 0.0;
    for (int i = 0; i < 100; ++i) w = step_error(w, 0.5, 10.0, 1e-3, e, b);
    CHECK(w == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("true SOC step clips at the energy limits") {
    BatteryParams b = table_battery();
    {
        auto [s, r] = step_true_soc(0.5, -10.0, b);  // charge command
        CHECK(r.p_ch == doctest::Approx(0.5 * 10.0 / 0.99).epsilon(1e-9));
        CHECK(r.p_dis == 0.0);
        CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
    }
    {
        auto [s, r] = step_true_soc(0.2, 10.0, b);  // discharge command
        CHECK(r.p_dis == doctest::Approx(1.98).epsilon(1e-9));
        CHECK(r.p_ch == 0.0);
        CHECK(s == doctest::Approx(0.0).epsilon(1e-9));
    }
    {
        auto [s, r] = step_true_soc(0.37, 0.0, b);
        CHECK(s == 0.37);
        CHECK(r.p_ch == 0.0);
        CHECK(r.p_dis == 0.0);
        CHECK(r.p_true == 0.0);
    }
}

TEST_CASE("random walk stays inside the SOC box with exact bookkeeping") {
    BatteryParams b = table_battery();
    std::mt19937_64 eng(42);
    double s = 0.5;
    for (int i = 0; i < 100000; ++i) {
        double cmd = uniform(eng, -10.0, 10.0);
        auto [s2, r] = step_true_soc(s, cmd, b);
        CHECK(s2 >= 0.0);
        CHECK(s2 <= 1.0);
        CHECK(r.p_ch * r.p_dis == 0.0);
        CHECK(r.p_ch >= 0.0);
        CHECK(r.p_ch <= b.p_max);
        CHECK(r.p_dis >= 0.0);
        CHECK(r.p_dis <= b.p_max);
        double ds = b.dt / b.capacity * (b.eta_ch * r.p_ch - r.p_dis / b.eta_dis);
        CHECK(std::abs((s2 - s) - ds) <= 1e-12);
        s = s2;
    }
}

TEST_CASE("simulate_hour is deterministic and recalibrates at the extremes") {
    BatteryParams b = table_battery();
    SocErrorParams e = table_error();
    BessState a(0.5, 0.05, 123), c(0.5, 0.05, 123);
    for (int i = 0; i < 20; ++i) {
        double cmd = (i % 3 - 1) * 4.0;
        SimHourResult ra = simulate_hour(a, cmd, b, e);
        SimHourResult rc = simulate_hour(c, cmd, b, e);
        CHECK(ra.s_true_end == rc.s_true_end);
        CHECK(ra.w_end == rc.w_end);
        CHECK(std::abs(a.w) <= e.w_max);
    }
    // drive to full: a(1) = 0 forces w = 0 within the step
    BessState full(0.9, 0.1, 5);
    simulate_hour(full, -10.0, b, e);
    CHECK(full.s_true == doctest::Approx(1.0));
    CHECK(full.w == doctest::Approx(0.0));
}

TEST_CASE("noise-free run contracts the error by a(s) only") {
    BatteryParams b = table_battery();
    SocErrorParams e = table_error();
    e.beta = 0.0;
    e.sigma2 = 0.0;
    BessState st(0.95, 0.1, 9);
    SimHourResult r = simulate_hour(st, 0.0, b, e);
    CHECK(r.s_true_end == 0.95);
    CHECK(st.w == doctest::Approx(scaling_factor(0.95, e) * 0.1));
}

TEST_CASE("reported SOC is the unclamped difference") {
    BessState st(0.5, 0.1, 1);
    CHECK(reported_soc(st) == doctest::Approx(0.4));
    st.w = -0.1;
    CHECK(reported_soc(st) == doctest::Approx(0.6));
    st.s_true = 0.05;
    st.w = 0.1;
    CHECK(reported_soc(st) == doctest::Approx(-0.05));
}
