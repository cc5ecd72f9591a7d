#ifndef BESSBID_MARKET_HPP
#define BESSBID_MARKET_HPP

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "bessbid/bidding.hpp"
#include "bessbid/domain.hpp"
#include "bessbid/sim.hpp"

namespace bessbid {

/// Bids already fixed at past gate closures. Append-only per delivery
/// window; overwriting a committed hour is an invariant breach.
struct MarketCommitments {
    std::map<std::int64_t, double> da;   ///< hour -> committed DA bid [MW, signed]
    std::map<std::int64_t, double> fcr;  ///< block -> committed FCR bid [MW, >= 0]
};

/// Both markets close daily at hour 12 for the full next delivery day;
/// hour 0 bootstraps the first day so the simulation always dispatches
/// against committed bids.
inline bool gate_closes_at(std::int64_t hour) {
    return hour == 0 || hour % 24 == 12;
}

/// Delivery window [begin, end) in absolute hours of the gate closing at
/// `hour`. Only meaningful when gate_closes_at(hour).
inline std::pair<std::int64_t, std::int64_t> delivery_window(std::int64_t hour) {
    if (hour == 0) return {0, 24};
    return {(hour / 24 + 1) * 24, (hour / 24 + 2) * 24};
}

/// Copies the plan's bids for the closing delivery window into the
/// commitments. No-op outside gate hours.
inline void gate_closure_update(MarketCommitments& com, std::int64_t clock_hour,
                                const PlanOutputs& plan, int fcr_block_len = 4) {
    if (!gate_closes_at(clock_hour)) return;
    auto [w_begin, w_end] = delivery_window(clock_hour);
    for (std::int64_t h = w_begin; h < w_end; ++h) {
        if (com.da.count(h))
            throw std::logic_error("gate closure would overwrite committed hour " +
                                   std::to_string(h));
        auto it = plan.da_bids.find(h);
        if (it == plan.da_bids.end())
            throw std::logic_error("plan does not cover delivery hour " +
                                   std::to_string(h));
        com.da.emplace(h, it->second);
    }
    for (std::int64_t blk = w_begin / fcr_block_len; blk < w_end / fcr_block_len; ++blk) {
        if (com.fcr.count(blk))
            throw std::logic_error("gate closure would overwrite committed block " +
                                   std::to_string(blk));
        auto it = plan.fcr_bids.find(blk);
        if (it == plan.fcr_bids.end())
            throw std::logic_error("plan does not cover delivery block " +
                                   std::to_string(blk));
        com.fcr.emplace(blk, it->second);
    }
}

/// Dual-priced imbalance settlement [EUR]: surplus energy is sold below
/// spot, deficits are bought above spot; |pi_DA| keeps deviations adverse
/// under negative prices.
inline double settle_imbalance(double p_sched, double p_true, double pi_da,
                               const MarketParams& mkt, double dt = 1.0) {
    double imb = (p_true - p_sched) * dt;  // MWh over the interval
    if (imb > 0.0) return (pi_da - mkt.imb_adder * std::abs(pi_da)) * imb;
    if (imb < 0.0) return (pi_da + mkt.imb_adder * std::abs(pi_da)) * imb;
    return 0.0;
}

struct ComplianceResult {
    bool compliant = true;
    double shortfall_mwh = 0.0;  ///< worst-side energy deficit
    bool power_fail = false;     ///< power headroom check failed (no energy deficit)
};

/// Checks whether the true SOC can sustain a worst-case symmetric FCR
/// activation of duration dt_fcr at the committed level, on both the
/// discharge and the charge side, plus the power headroom against the
/// realized dispatch. Even a tiny violation counts as non-compliant.
inline ComplianceResult evaluate_fcr_compliance(double s_true, double p_fcr_committed,
                                                double p_true, const BatteryParams& battery,
                                                const MarketParams& mkt) {
    constexpr double tol = 1e-9;
    ComplianceResult r;
    if (p_fcr_committed <= 0.0) return r;
    double e_req = mkt.dt_fcr * p_fcr_committed;
    double e_dis = (s_true - battery.s_min) * battery.capacity * battery.eta_dis;
    double e_ch = (battery.s_max - s_true) * battery.capacity / battery.eta_ch;
    bool energy_ok = e_dis >= e_req - tol && e_ch >= e_req - tol;
    bool power_ok = std::abs(p_true) <= battery.p_max - p_fcr_committed + tol;
    if (!energy_ok)
        r.shortfall_mwh = std::max(0.0, std::max(e_req - e_dis, e_req - e_ch));
    r.power_fail = !power_ok;
    r.compliant = energy_ok && power_ok;
    return r;
}

/// Hour-by-hour record of one closed-loop run.
struct SimulationLog {
    std::vector<HourRecord> records;
    nlohmann::json config_snapshot;
    std::uint64_t seed = 0;
    std::int64_t start_epoch = 0;

    static const char* csv_header() {
        return "t,p_da_bid_mw,p_fcr_bid_mw,p_fcr_delivered_mw,p_cmd_mw,p_true_mw,"
               "p_imb_true_mw,s_true_begin,s_true_end,s_rep,w,margin_m,rev_da_eur,"
               "rev_fcr_eur,imb_settlement_eur,deg_cost_eur,compliant,shortfall_mwh,"
               "solver_fallback,s_rep_clamped";
    }

    void write_csv(std::ostream& os) const {
        os << csv_header() << "\n";
        char buf[640];
        for (const auto& r : records) {
            std::snprintf(buf, sizeof buf,
                          "%lld,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,"
                          "%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%d,%.10g,%d,%d\n",
                          static_cast<long long>(r.t), r.p_da_bid, r.p_fcr_bid,
                          r.p_fcr_delivered, r.p_cmd, r.p_true, r.p_imb_true,
                          r.s_true_begin, r.s_true_end, r.s_rep, r.w, r.margin_m,
                          r.rev_da, r.rev_fcr, r.imb_settlement, r.deg_cost,
                          r.compliant ? 1 : 0, r.shortfall, r.solver_fallback ? 1 : 0,
                          r.s_rep_clamped ? 1 : 0);
            os << buf;
        }
    }

    nlohmann::json to_json() const {
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& r : records) {
            rows.push_back({{"t", r.t},
                            {"p_da_bid", r.p_da_bid},
                            {"p_fcr_bid", r.p_fcr_bid},
                            {"p_fcr_delivered", r.p_fcr_delivered},
                            {"p_cmd", r.p_cmd},
                            {"p_true", r.p_true},
                            {"p_imb_true", r.p_imb_true},
                            {"s_true_begin", r.s_true_begin},
                            {"s_true_end", r.s_true_end},
                            {"s_rep", r.s_rep},
                            {"w", r.w},
                            {"margin_m", r.margin_m},
                            {"rev_da", r.rev_da},
                            {"rev_fcr", r.rev_fcr},
                            {"imb_settlement", r.imb_settlement},
                            {"deg_cost", r.deg_cost},
                            {"compliant", r.compliant},
                            {"shortfall", r.shortfall},
                            {"solver_fallback", r.solver_fallback},
                            {"s_rep_clamped", r.s_rep_clamped}});
        }
        return {{"seed", seed},
                {"start_epoch", start_epoch},
                {"config", config_snapshot},
                {"records", rows}};
    }
};

struct RunOptions {
    int hours = 720;                 ///< simulated span
    int milp_node_limit = 8;         ///< per-solve node budget (deterministic)
    double milp_time_limit_s = 0.0;  ///< optional wall-clock cap, 0 = off
    double w0 = 0.0;                 ///< initial estimation error
    /// Test hook, called with the optimizer inputs before every solve.
    std::function<void(const MpcInputs&)> observe_inputs;
};

/// Closed-loop receding-horizon simulation: per hour, solve the MPC
/// (freezing next-day bids at gate closures), apply the first-hour command
/// to the plant, settle the imbalance, and evaluate FCR compliance against
/// the true SOC. Solver failures degrade to a zero command and are logged,
/// never aborting the run.
inline SimulationLog run_receding_horizon(const Config& cfg, const PriceSeries& prices,
                                          const MarginPolicy& pol, std::uint64_t seed,
                                          const RunOptions& opt = {}) {
    const BatteryParams& bat = cfg.battery;
    const SocErrorParams& err = cfg.error;
    const MarketParams& mkt = cfg.market;
    const int T = cfg.horizon;
    const int H = opt.hours;
    if (static_cast<int>(prices.size()) < H + T)
        throw ValidationError("price series shorter than simulation span + horizon");

    Config snap = cfg;
    snap.policy = pol;
    SimulationLog log;
    log.config_snapshot = snap;
    log.seed = seed;
    log.start_epoch = prices.start_epoch;
    log.records.reserve(H);

    BessState st(bat.s_init, opt.w0, seed);
    MarketCommitments com;
    double m_adapt = 0.0;       // adaptive-margin state m(t)
    double delta_track = 0.0;   // plant-side tube scaling delta(t)
    double prev_s_rep = reported_soc(st);
    milp::LpCore::Basis warm;   // root basis carried hour to hour
    bool have_warm = false;

    for (std::int64_t h = 0; h < H; ++h) {
        double s_rep = reported_soc(st);
        if (h > 0) {
            if (pol.kind == MarginKind::adaptive)
                m_adapt = margin_update_adaptive(m_adapt, prev_s_rep, pol, err);
            else if (pol.kind == MarginKind::uncertainty_aware)
                delta_track = margin_update_adaptive(delta_track, prev_s_rep, pol, err);
        }

        MpcInputs in;
        in.t0 = h;
        in.horizon = T;
        in.s_rep0 = s_rep;
        in.pi_da.assign(prices.pi_da.begin() + h, prices.pi_da.begin() + h + T);
        in.pi_fcr = mkt.pi_fcr;
        in.committed_da = com.da;
        in.committed_fcr = com.fcr;
        in.kind = pol.kind;
        switch (pol.kind) {
            case MarginKind::none:
                in.margin.assign(T, 0.0);
                break;
            case MarginKind::fixed:
                in.margin = margin_schedule_fixed(pol, T);
                break;
            case MarginKind::adaptive:
                in.margin.assign(T, m_adapt);
                break;
            case MarginKind::uncertainty_aware:
                in.delta0 = delta_track;
                break;
        }
        if (opt.observe_inputs) opt.observe_inputs(in);

        MpcProblem prob = build_mpc_problem(in, bat, err, mkt, pol);
        milp::SolverOptions sopt;
        sopt.node_limit = opt.milp_node_limit;
        sopt.time_limit_s = opt.milp_time_limit_s;
        sopt.round_heuristic = make_round_heuristic(prob, err);
        milp::BranchAndBound bnb(prob.model, sopt);
        // consecutive hours share the model shape, so the previous root
        // basis is a valid (and usually near-optimal) starting point
        if (have_warm) bnb.set_start_basis(warm);
        milp::Solution sol = bnb.solve();
        warm = bnb.final_root_basis();
        have_warm = true;
        PlanOutputs plan = extract_plan(sol, in, prob.map);

        if (gate_closes_at(h)) {
            PlanOutputs commit_plan = plan;
            if (!plan.feasible) {
                // zero-bid fallback keeps the commitment calendar intact
                auto [w_begin, w_end] = delivery_window(h);
                for (std::int64_t hh = w_begin; hh < w_end; ++hh)
                    commit_plan.da_bids[hh] = 0.0;
                for (std::int64_t blk = w_begin / mkt.fcr_block_len;
                     blk < w_end / mkt.fcr_block_len; ++blk)
                    commit_plan.fcr_bids[blk] = 0.0;
            }
            gate_closure_update(com, h, commit_plan, mkt.fcr_block_len);
        }

        double p_cmd = plan.feasible ? plan.p_cmd : 0.0;
        SimHourResult sim = simulate_hour(st, p_cmd, bat, err);

        double p_sched = com.da.count(h) ? com.da.at(h) : 0.0;
        std::int64_t blk = h / mkt.fcr_block_len;
        double p_fcr_c = com.fcr.count(blk) ? com.fcr.at(blk) : 0.0;

        ComplianceResult c0 = evaluate_fcr_compliance(sim.s_true_begin, p_fcr_c,
                                                      sim.realized.p_true, bat, mkt);
        ComplianceResult c1 = evaluate_fcr_compliance(sim.s_true_end, p_fcr_c,
                                                      sim.realized.p_true, bat, mkt);

        HourRecord r;
        r.t = h;
        r.p_da_bid = p_sched;
        r.p_fcr_bid = p_fcr_c;
        r.p_cmd = p_cmd;
        r.p_true = sim.realized.p_true;
        r.p_imb_true = sim.realized.p_true - p_sched;
        r.s_true_begin = sim.s_true_begin;
        r.s_true_end = sim.s_true_end;
        r.s_rep = s_rep;
        r.w = sim.w_begin;
        switch (pol.kind) {
            case MarginKind::none: r.margin_m = 0.0; break;
            case MarginKind::fixed: r.margin_m = pol.m_fixed; break;
            case MarginKind::adaptive: r.margin_m = m_adapt; break;
            case MarginKind::uncertainty_aware: r.margin_m = delta_track; break;
        }
        r.rev_da = prices.pi_da[h] * p_sched * bat.dt;
        r.rev_fcr = mkt.pi_fcr * p_fcr_c * bat.dt;
        r.imb_settlement = settle_imbalance(p_sched, sim.realized.p_true,
                                            prices.pi_da[h], mkt, bat.dt);
        r.deg_cost = mkt.c_deg * sim.realized.p_dis * bat.dt;
        r.compliant = c0.compliant && c1.compliant;
        r.shortfall = std::max(c0.shortfall_mwh, c1.shortfall_mwh);
        r.p_fcr_delivered =
            std::max(0.0, p_fcr_c - r.shortfall / mkt.dt_fcr);
        r.solver_fallback = !plan.feasible;
        r.s_rep_clamped = plan.s_rep_clamped;
        log.records.push_back(r);

        prev_s_rep = s_rep;
    }
    return log;
}

}  // namespace bessbid

#endif  // BESSBID_MARKET_HPP
