#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include "bessbid/domain.hpp"

using namespace bessbid;

namespace {

Config table_config() {
    // reference case-study parameters; these are also the defaults
    Config cfg;
    cfg.battery.p_max = 10.0;
    cfg.battery.capacity = 10.0;
    cfg.battery.eta_ch = 0.99;
    cfg.battery.eta_dis = 0.99;
    cfg.error.b = 0.15;
    cfg.error.c = 0.9;
    cfg.policy.gamma = 0.8;
    cfg.market.dt_fcr = 0.5;
    return cfg;
}

std::string error_of(const Config& cfg) {
    try {
        validate_params(cfg);
    } catch (const ValidationError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("reference parameters validate") {
    CHECK_NOTHROW(validate_params(table_config()));
    CHECK_NOTHROW(validate_params(Config{}));
}

TEST_CASE("validation reports the first violated invariant by field") {
    Config cfg = table_config();
    cfg.battery.eta_ch = 0.0;
    CHECK(error_of(cfg) == "eta_ch out of range");

    cfg = table_config();
    cfg.error.b = 0.95;
    cfg.error.c = 0.9;
    CHECK(error_of(cfg) == "b < c violated");

    cfg = table_config();
    cfg.battery.s_min = 0.6;
    cfg.battery.s_max = 0.4;
    CHECK(error_of(cfg) == "s_min < s_max violated");

    cfg = table_config();
    cfg.battery.s_init = 1.5;
    CHECK(error_of(cfg) == "s_init outside [s_min, s_max]");

    cfg = table_config();
    cfg.error.sigma2 = -1.0;
    CHECK(error_of(cfg) == "sigma2 out of range");

    cfg = table_config();
    cfg.policy.delta_max = 0.6;
    CHECK(error_of(cfg) == "delta_max exceeds half the SOC range");

    cfg = table_config();
    cfg.market.fcr_block_len = 5;
    CHECK(error_of(cfg) == "fcr_block_len must divide 24");

    cfg = table_config();
    cfg.horizon = 0;
    CHECK(error_of(cfg) == "horizon out of range");
}

TEST_CASE("configuration JSON round-trip is identity") {
    Config cfg = table_config();
    cfg.policy.kind = MarginKind::adaptive;
    cfg.policy.w_bar = 4.2e-4;
    cfg.horizon = 48;
    nlohmann::json j = cfg;
    Config back = j.get<Config>();
    nlohmann::json j2 = back;
    CHECK(j == j2);
    CHECK(back.policy.kind == MarginKind::adaptive);
    CHECK(back.policy.w_bar == cfg.policy.w_bar);
    CHECK(back.horizon == 48);
    CHECK_NOTHROW(validate_params(back));
}

TEST_CASE("margin kind names") {
    CHECK(to_string(MarginKind::none) == "none");
    CHECK(to_string(MarginKind::uncertainty_aware) == "uncertainty_aware");
    CHECK(margin_kind_from_string("fixed") == MarginKind::fixed);
    CHECK(margin_kind_from_string("uncertainty-aware") == MarginKind::uncertainty_aware);
    CHECK(margin_kind_from_string("uncertainty_aware") == MarginKind::uncertainty_aware);
    CHECK(!margin_kind_from_string("bogus").has_value());
}

TEST_CASE("hour-aligned UTC timestamps") {
    CHECK(format_hour_utc(0) == "1970-01-01T00:00:00Z");
    CHECK(format_hour_utc(1704067200) == "2024-01-01T00:00:00Z");
    CHECK(parse_hour_utc("2024-01-01T00:00:00Z") == 1704067200);
    CHECK(parse_hour_utc("2024-02-29T23:00:00Z").has_value());  // leap day
    CHECK(!parse_hour_utc("2024-01-01T00:30:00Z").has_value()); // not hour-aligned
    CHECK(!parse_hour_utc("2024-13-01T00:00:00Z").has_value());
    CHECK(!parse_hour_utc("garbage").has_value());
    for (std::int64_t e : {0L, 3600L, 1704067200L, 4102444800L}) {
        auto round = parse_hour_utc(format_hour_utc(e));
        REQUIRE(round.has_value());
        CHECK(*round == e);
    }
}

TEST_CASE("hour record invariant helpers") {
    HourRecord r;
    r.p_true = 4.0;
    r.p_da_bid = 5.0;
    r.p_imb_true = r.p_true - r.p_da_bid;
    CHECK(r.p_imb_true == doctest::Approx(-1.0));
}
