#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>
#include <string>

#include "bessbid/ingest.hpp"
#include "bessbid/metrics.hpp"
#include "bessbid/rng.hpp"

using namespace bessbid;

namespace {

HourRecord make_record(double da, double fcr, double imb, double deg) {
    HourRecord r;
    r.rev_da = da;
    r.rev_fcr = fcr;
    r.imb_settlement = imb;
    r.deg_cost = deg;
    return r;
}

}  // namespace

TEST_CASE("single-hour revenue decomposition") {
    SimulationLog log;
    log.records.push_back(make_record(500.0, 80.0, 0.0, 182.5));
    RevenueBreakdown b = compute_revenue(log, MarketParams{});
    CHECK(b.r_dam == 500.0);
    CHECK(b.r_fcr == 80.0);
    CHECK(b.c_imb == 0.0);
    CHECK(b.c_deg == 182.5);
    CHECK(b.r_total == 397.5);  // the identity must hold exactly
    CHECK(b.shortfall_hours_pct == 0.0);
}

TEST_CASE("empty log aggregates to zeros") {
    RevenueBreakdown b = compute_revenue(SimulationLog{}, MarketParams{});
    CHECK(b.r_total == 0.0);
    CHECK(b.r_dam == 0.0);
    CHECK(b.shortfall_energy == 0.0);
    CHECK(b.shortfall_hours_pct == 0.0);
    CHECK(b.mean_margin == 0.0);
}

TEST_CASE("identity holds bit-exactly on randomized records") {
    std::mt19937_64 eng(31);
    for (int trial = 0; trial < 50; ++trial) {
        SimulationLog log;
        int n = 1 + static_cast<int>(uniform(eng, 0, 200));
        int bad = 0;
        double margin_sum = 0.0;
        for (int i = 0; i < n; ++i) {
            HourRecord r = make_record(uniform(eng, -1000, 1000), uniform(eng, 0, 500),
                                       uniform(eng, -300, 0), uniform(eng, 0, 400));
            r.shortfall = uniform01(eng) < 0.2 ? uniform(eng, 0, 3) : 0.0;
            r.compliant = r.shortfall == 0.0;
            if (!r.compliant) ++bad;
            r.margin_m = uniform(eng, 0, 0.2);
            margin_sum += r.margin_m;
            log.records.push_back(r);
        }
        RevenueBreakdown b = compute_revenue(log, MarketParams{});
        CHECK(b.r_total == b.r_dam + b.r_fcr + b.c_imb - b.c_deg);
        CHECK(b.shortfall_hours_pct == doctest::Approx(100.0 * bad / n).epsilon(1e-12));
        CHECK(b.mean_margin == doctest::Approx(margin_sum / n).epsilon(1e-12));
    }
}

TEST_CASE("closed-loop revenue satisfies the identity on every emitted row") {
    Config cfg;
    cfg.horizon = 36;
    SyntheticPriceParams sp;
    sp.seed = 4;
    sp.days = 3;
    PriceSeries prices = synth_prices(sp);
    MarginPolicy pol;
    pol.kind = MarginKind::fixed;
    pol.m_fixed = 0.05;
    RunOptions opt;
    opt.hours = 24;
    SimulationLog log = run_receding_horizon(cfg, prices, pol, 8, opt);
    RevenueBreakdown b = compute_revenue(log, cfg.market);
    CHECK(b.r_total == b.r_dam + b.r_fcr + b.c_imb - b.c_deg);
    CHECK(b.mean_margin == doctest::Approx(0.05).epsilon(1e-14));  // fixed policy
}

TEST_CASE("sweep with one point and one seed equals the direct run") {
    Config cfg;
    cfg.horizon = 24;  // delivery fully covered before the next gate
    SyntheticPriceParams sp;
    sp.seed = 2;
    sp.days = 3;
    PriceSeries prices = synth_prices(sp);
    RunOptions opt;
    opt.hours = 12;
    SweepSpec spec;
    spec.kind = MarginKind::fixed;
    spec.grid = {0.1};
    SweepResult res = sweep(cfg, prices, {spec}, {7}, opt);
    REQUIRE(res.entries.size() == 2);  // the seed row plus the mean row
    CHECK(res.entries[0].seed == 7);
    CHECK(res.entries[1].seed == -1);
    CHECK(!res.entries[0].failed);

    MarginPolicy pol = apply_sweep_parameter(cfg.policy, MarginKind::fixed, 0.1);
    SimulationLog direct = run_receding_horizon(cfg, prices, pol, 7, opt);
    RevenueBreakdown want = compute_revenue(direct, cfg.market);
    CHECK(res.entries[0].breakdown.r_total == want.r_total);
    CHECK(res.entries[1].breakdown.r_total == doctest::Approx(want.r_total));
    CHECK(res.entries[1].seed_count == 1);
}

TEST_CASE("noise-free sweep rows are identical across seeds") {
    Config cfg;
    cfg.horizon = 24;
    cfg.error.sigma2 = 0.0;  // the seed no longer matters
    SyntheticPriceParams sp;
    sp.seed = 6;
    sp.days = 3;
    PriceSeries prices = synth_prices(sp);
    RunOptions opt;
    opt.hours = 12;
    SweepSpec spec;
    spec.kind = MarginKind::adaptive;
    spec.grid = {1e-4, 1e-3};
    SweepResult res = sweep(cfg, prices, {spec}, {1, 2}, opt);
    REQUIRE(res.entries.size() == 6);  // 2 grid points x (2 seeds + mean)
    CHECK(res.entries[0].breakdown.r_total == res.entries[1].breakdown.r_total);
    CHECK(res.entries[2].breakdown.r_total == res.entries[0].breakdown.r_total);
    CHECK(res.entries[3].breakdown.r_total == res.entries[4].breakdown.r_total);
    // rows arrive in grid order regardless of worker scheduling
    CHECK(res.entries[0].parameter == 1e-4);
    CHECK(res.entries[3].parameter == 1e-3);
    CHECK(res.entries[2].seed == -1);
    CHECK(res.entries[5].seed == -1);
}

TEST_CASE("sweep input validation") {
    Config cfg;
    PriceSeries prices;
    prices.pi_da.assign(48, 50.0);
    SweepSpec spec;
    spec.kind = MarginKind::fixed;
    spec.grid = {0.1};
    CHECK_THROWS_AS(sweep(cfg, prices, {spec}, {}), ValidationError);
    spec.grid.clear();
    CHECK_THROWS_AS(sweep(cfg, prices, {spec}, {1}), ValidationError);
}

TEST_CASE("report emission") {
    SweepResult res;
    SweepEntry e;
    e.kind = MarginKind::fixed;
    e.parameter = 0.125;
    e.seed = 3;
    e.breakdown.r_dam = 10.0;
    e.breakdown.r_fcr = 2.0;
    e.breakdown.c_imb = -1.0;
    e.breakdown.c_deg = 4.0;
    e.breakdown.r_total = 7.0;
    res.entries.push_back(e);
    e.seed = -1;
    res.entries.push_back(e);

    std::ostringstream csv;
    emit_report(res, ReportFormat::csv, csv);
    std::istringstream lines(csv.str());
    std::string line;
    std::getline(lines, line);
    CHECK(line == report_csv_header());
    std::getline(lines, line);
    CHECK(line == "fixed,0.125,3,1,7,10,2,-1,4,0,0,0");
    std::getline(lines, line);
    CHECK(line.rfind("fixed,0.125,mean,", 0) == 0);
    CHECK(!std::getline(lines, line));  // exactly header + two rows

    std::ostringstream js;
    emit_report(res, ReportFormat::json, js);
    nlohmann::json arr = nlohmann::json::parse(js.str());
    REQUIRE(arr.size() == 2);
    CHECK(arr[0]["policy"] == "fixed");
    CHECK(arr[0]["seed"] == 3);
    CHECK(arr[1]["seed"] == "mean");
    CHECK(arr[0]["breakdown"]["r_total"] == 7.0);

    // empty result: header only
    std::ostringstream empty;
    emit_report(SweepResult{}, ReportFormat::csv, empty);
    CHECK(empty.str() == std::string(report_csv_header()) + "\n");
}
