#ifndef BESSBID_DOMAIN_HPP
#define BESSBID_DOMAIN_HPP

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace bessbid {

/// Thrown by configuration validation; carries the name of the first
/// violated field.
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// ---------------------------------------------------------------------------
// Parameter blocks
// ---------------------------------------------------------------------------

/// Physical ratings of the battery. All SOC quantities are fractions of
/// capacity in [0,1]; powers in MW, energies in MWh, times in hours.
struct BatteryParams {
    double p_max = 10.0;    ///< rated power [MW]
    double capacity = 10.0; ///< energy capacity C [MWh]
    double eta_ch = 0.99;   ///< charging efficiency
    double eta_dis = 0.99;  ///< discharging efficiency
    double s_min = 0.0;     ///< lower SOC limit [fraction]
    double s_max = 1.0;     ///< upper SOC limit [fraction]
    double dt = 1.0;        ///< market time step [h]
    double s_init = 0.5;    ///< initial SOC [fraction]
};

/// Constants of the decision-dependent SOC estimation error process.
struct SocErrorParams {
    double b = 0.15;      ///< lower plateau threshold [SOC fraction]
    double c = 0.90;      ///< upper plateau threshold [SOC fraction]
    double beta = 1e-3;   ///< mean of the per-step noise (per full-power hour)
    double sigma2 = 1e-4; ///< variance of the per-step noise
    double w_max = 0.20;  ///< saturation bound on |w|
};

/// Market-side constants: prices that are configuration (FCR), optimizer
/// penalties, and settlement parameters.
struct MarketParams {
    double pi_fcr = 16.0;      ///< FCR capacity price [EUR/MW/h]
    double c_deg = 36.5;       ///< degradation cost [EUR/MWh discharged]
    double zeta = 0.1;         ///< mean FCR activation (objective only)
    double c_imb = 1e4;        ///< optimizer imbalance penalty [EUR/MWh]
    double c_fcr = 1e5;        ///< optimizer FCR shortfall penalty [EUR/MWh]
    double dt_fcr = 0.5;       ///< sustained FCR activation duration [h]
    double imb_adder = 0.30;   ///< dual-pricing spread on |pi_DA|
    int fcr_block_len = 4;     ///< FCR product length [h]
};

enum class MarginKind { none, fixed, adaptive, uncertainty_aware };

inline std::string to_string(MarginKind k) {
    switch (k) {
        case MarginKind::none: return "none";
        case MarginKind::fixed: return "fixed";
        case MarginKind::adaptive: return "adaptive";
        case MarginKind::uncertainty_aware: return "uncertainty_aware";
    }
    return "none";
}

inline std::optional<MarginKind> margin_kind_from_string(const std::string& s) {
    if (s == "none") return MarginKind::none;
    if (s == "fixed") return MarginKind::fixed;
    if (s == "adaptive") return MarginKind::adaptive;
    if (s == "uncertainty_aware" || s == "uncertainty-aware")
        return MarginKind::uncertainty_aware;
    return std::nullopt;
}

/// Selection and tuning constants of the constraint-tightening policy.
struct MarginPolicy {
    MarginKind kind = MarginKind::none;
    double m_fixed = 0.0;      ///< constant margin (kind == fixed)
    double w_bar = 0.00018;    ///< per-step margin growth increment
    double gamma = 0.8;        ///< margin decay factor in [0,1]
    double delta_max = 0.2;    ///< tube cap; defaults to w_max
    int tuning_horizon = 720;  ///< N, steps (documentation / tuning metadata)
    double alpha_target = 0.04;///< compliance target probability (metadata)
};

// ---------------------------------------------------------------------------
// Price series
// ---------------------------------------------------------------------------

/// Hourly day-ahead price series, hour-aligned UTC, no gaps.
struct PriceSeries {
    std::int64_t start_epoch = 0;  ///< seconds since epoch, hour-aligned
    std::vector<double> pi_da;     ///< EUR/MWh, one entry per hour

    std::size_t size() const { return pi_da.size(); }
};

/// Formats an hour-aligned epoch as "YYYY-MM-DDTHH:00:00Z".
inline std::string format_hour_utc(std::int64_t epoch) {
    std::int64_t days = epoch / 86400;
    std::int64_t secs = epoch % 86400;
    if (secs < 0) { secs += 86400; days -= 1; }
    int hour = static_cast<int>(secs / 3600);
    // civil_from_days (Howard Hinnant's algorithm)
    std::int64_t z = days + 719468;
    std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    std::int64_t doe = z - era * 146097;
    std::int64_t yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    std::int64_t y = yoe + era * 400;
    std::int64_t doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    std::int64_t mp = (5 * doy + 2) / 153;
    std::int64_t d = doy - (153 * mp + 2) / 5 + 1;
    std::int64_t m = mp < 10 ? mp + 3 : mp - 9;
    if (m <= 2) y += 1;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%04lld-%02lld-%02lldT%02d:00:00Z",
                  static_cast<long long>(y), static_cast<long long>(m),
                  static_cast<long long>(d), hour);
    return buf;
}

/// Parses "YYYY-MM-DDTHH:MM:SSZ" (UTC). Returns nullopt on malformed input
/// or a timestamp not aligned to a full hour.
inline std::optional<std::int64_t> parse_hour_utc(const std::string& ts) {
    int y, mo, d, h, mi, s;
    char zone;
    if (std::sscanf(ts.c_str(), "%d-%d-%dT%d:%d:%d%c", &y, &mo, &d, &h, &mi, &s, &zone) != 7)
        return std::nullopt;
    if (zone != 'Z' || mo < 1 || mo > 12 || d < 1 || d > 31 || h < 0 || h > 23)
        return std::nullopt;
    if (mi != 0 || s != 0) return std::nullopt;  // hour-aligned only
    // days_from_civil
    std::int64_t yy = y - (mo <= 2 ? 1 : 0);
    std::int64_t era = (yy >= 0 ? yy : yy - 399) / 400;
    std::int64_t yoe = yy - era * 400;
    std::int64_t mp = mo > 2 ? mo - 3 : mo + 9;
    std::int64_t doy = (153 * mp + 2) / 5 + d - 1;
    std::int64_t doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    std::int64_t days = era * 146097 + doe - 719468;
    return days * 86400 + static_cast<std::int64_t>(h) * 3600;
}

// ---------------------------------------------------------------------------
// Per-hour record of the closed-loop simulation
// ---------------------------------------------------------------------------

struct HourRecord {
    std::int64_t t = 0;          ///< absolute hour index
    double p_da_bid = 0.0;       ///< committed day-ahead bid [MW, signed]
    double p_fcr_bid = 0.0;      ///< committed FCR bid of the hour's block [MW]
    double p_fcr_delivered = 0.0;///< sustainable FCR level [MW]
    double p_cmd = 0.0;          ///< optimizer command [MW, signed, dis - ch]
    double p_true = 0.0;         ///< realized power [MW, signed]
    double p_imb_true = 0.0;     ///< realized imbalance = p_true - p_da_bid
    double s_true_begin = 0.0;
    double s_true_end = 0.0;
    double s_rep = 0.0;          ///< reported SOC at the beginning of the hour
    double w = 0.0;              ///< estimation error at the beginning of the hour
    double margin_m = 0.0;       ///< applied tightening margin of the hour
    double rev_da = 0.0;         ///< pi_DA * p_da_bid * dt [EUR]
    double rev_fcr = 0.0;        ///< pi_FCR * p_fcr_bid * dt [EUR]
    double imb_settlement = 0.0; ///< dual-priced imbalance settlement [EUR]
    double deg_cost = 0.0;       ///< c_deg * p_dis_true * dt [EUR]
    bool compliant = true;
    double shortfall = 0.0;      ///< FCR energy shortfall [MWh]
    bool solver_fallback = false;///< zero-command fallback was used
    bool s_rep_clamped = false;  ///< reported SOC was clamped into the box
};

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

inline void validate(const BatteryParams& b) {
    if (!(b.eta_ch > 0.0 && b.eta_ch <= 1.0)) throw ValidationError("eta_ch out of range");
    if (!(b.eta_dis > 0.0 && b.eta_dis <= 1.0)) throw ValidationError("eta_dis out of range");
    if (!(b.s_min >= 0.0)) throw ValidationError("s_min out of range");
    if (!(b.s_min < b.s_max)) throw ValidationError("s_min < s_max violated");
    if (!(b.s_max <= 1.0)) throw ValidationError("s_max out of range");
    if (!(b.p_max > 0.0)) throw ValidationError("p_max out of range");
    if (!(b.capacity > 0.0)) throw ValidationError("capacity out of range");
    if (!(b.dt > 0.0)) throw ValidationError("dt out of range");
    if (!(b.s_init >= b.s_min && b.s_init <= b.s_max))
        throw ValidationError("s_init outside [s_min, s_max]");
}

inline void validate(const SocErrorParams& e) {
    if (!(e.b > 0.0)) throw ValidationError("b out of range");
    if (!(e.b < e.c)) throw ValidationError("b < c violated");
    if (!(e.c < 1.0)) throw ValidationError("c out of range");
    if (!(e.sigma2 >= 0.0)) throw ValidationError("sigma2 out of range");
    if (!(e.w_max > 0.0)) throw ValidationError("w_max out of range");
}

inline void validate(const MarketParams& m) {
    if (!(m.dt_fcr > 0.0)) throw ValidationError("dt_fcr out of range");
    if (!(m.zeta >= 0.0 && m.zeta <= 1.0)) throw ValidationError("zeta out of range");
    if (!(m.imb_adder >= 0.0)) throw ValidationError("imb_adder out of range");
    if (!(m.fcr_block_len > 0 && 24 % m.fcr_block_len == 0))
        throw ValidationError("fcr_block_len must divide 24");
}

inline void validate(const MarginPolicy& p, const BatteryParams& b) {
    if (!(p.m_fixed >= 0.0 && p.m_fixed <= 1.0)) throw ValidationError("m_fixed out of range");
    if (!(p.gamma >= 0.0 && p.gamma <= 1.0)) throw ValidationError("gamma out of range");
    if (!(p.w_bar >= 0.0)) throw ValidationError("w_bar out of range");
    if (!(p.delta_max <= (b.s_max - b.s_min) / 2.0))
        throw ValidationError("delta_max exceeds half the SOC range");
    if (!(p.delta_max >= 0.0)) throw ValidationError("delta_max out of range");
}

/// Full simulation configuration.
struct Config {
    BatteryParams battery;
    SocErrorParams error;
    MarketParams market;
    MarginPolicy policy;
    int horizon = 72;  ///< MPC prediction horizon T [h]
};

/// Validates every block; returns the configuration unchanged when all
/// invariants hold, otherwise throws ValidationError naming the first
/// violated field.
inline Config validate_params(const Config& cfg) {
    validate(cfg.battery);
    validate(cfg.error);
    validate(cfg.market);
    validate(cfg.policy, cfg.battery);
    if (cfg.horizon < 1) throw ValidationError("horizon out of range");
    return cfg;
}

// ---------------------------------------------------------------------------
// JSON serialization (reference configuration format)
// ---------------------------------------------------------------------------

inline void to_json(nlohmann::json& j, const BatteryParams& b) {
    j = {{"p_max", b.p_max},   {"capacity", b.capacity}, {"eta_ch", b.eta_ch},
         {"eta_dis", b.eta_dis}, {"s_min", b.s_min},     {"s_max", b.s_max},
         {"dt", b.dt},         {"s_init", b.s_init}};
}
inline void from_json(const nlohmann::json& j, BatteryParams& b) {
    b.p_max = j.value("p_max", b.p_max);
    b.capacity = j.value("capacity", b.capacity);
    b.eta_ch = j.value("eta_ch", b.eta_ch);
    b.eta_dis = j.value("eta_dis", b.eta_dis);
    b.s_min = j.value("s_min", b.s_min);
    b.s_max = j.value("s_max", b.s_max);
    b.dt = j.value("dt", b.dt);
    b.s_init = j.value("s_init", b.s_init);
}

inline void to_json(nlohmann::json& j, const SocErrorParams& e) {
    j = {{"b", e.b}, {"c", e.c}, {"beta", e.beta}, {"sigma2", e.sigma2}, {"w_max", e.w_max}};
}
inline void from_json(const nlohmann::json& j, SocErrorParams& e) {
    e.b = j.value("b", e.b);
    e.c = j.value("c", e.c);
    e.beta = j.value("beta", e.beta);
    e.sigma2 = j.value("sigma2", e.sigma2);
    e.w_max = j.value("w_max", e.w_max);
}

inline void to_json(nlohmann::json& j, const MarketParams& m) {
    j = {{"pi_fcr", m.pi_fcr},   {"c_deg", m.c_deg},   {"zeta", m.zeta},
         {"c_imb", m.c_imb},     {"c_fcr", m.c_fcr},   {"dt_fcr", m.dt_fcr},
         {"imb_adder", m.imb_adder}, {"fcr_block_len", m.fcr_block_len}};
}
inline void from_json(const nlohmann::json& j, MarketParams& m) {
    m.pi_fcr = j.value("pi_fcr", m.pi_fcr);
    m.c_deg = j.value("c_deg", m.c_deg);
    m.zeta = j.value("zeta", m.zeta);
    m.c_imb = j.value("c_imb", m.c_imb);
    m.c_fcr = j.value("c_fcr", m.c_fcr);
    m.dt_fcr = j.value("dt_fcr", m.dt_fcr);
    m.imb_adder = j.value("imb_adder", m.imb_adder);
    m.fcr_block_len = j.value("fcr_block_len", m.fcr_block_len);
}

inline void to_json(nlohmann::json& j, const MarginPolicy& p) {
    j = {{"kind", to_string(p.kind)}, {"m_fixed", p.m_fixed},
         {"w_bar", p.w_bar},          {"gamma", p.gamma},
         {"delta_max", p.delta_max},  {"tuning_horizon", p.tuning_horizon},
         {"alpha_target", p.alpha_target}};
}
inline void from_json(const nlohmann::json& j, MarginPolicy& p) {
    if (j.contains("kind")) {
        auto k = margin_kind_from_string(j.at("kind").get<std::string>());
        if (!k) throw ValidationError("kind: unknown margin policy");
        p.kind = *k;
    }
    p.m_fixed = j.value("m_fixed", p.m_fixed);
    p.w_bar = j.value("w_bar", p.w_bar);
    p.gamma = j.value("gamma", p.gamma);
    p.delta_max = j.value("delta_max", p.delta_max);
    p.tuning_horizon = j.value("tuning_horizon", p.tuning_horizon);
    p.alpha_target = j.value("alpha_target", p.alpha_target);
}

inline void to_json(nlohmann::json& j, const Config& c) {
    j = {{"battery", c.battery}, {"error", c.error},   {"market", c.market},
         {"policy", c.policy},   {"horizon", c.horizon}};
}
inline void from_json(const nlohmann::json& j, Config& c) {
    if (j.contains("battery")) j.at("battery").get_to(c.battery);
    if (j.contains("error")) j.at("error").get_to(c.error);
    if (j.contains("market")) j.at("market").get_to(c.market);
    if (j.contains("policy")) j.at("policy").get_to(c.policy);
    c.horizon = j.value("horizon", c.horizon);
}

}  // namespace bessbid

#endif  // BESSBID_DOMAIN_HPP
