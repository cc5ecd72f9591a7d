#ifndef BESSBID_BIDDING_HPP
#define BESSBID_BIDDING_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "bessbid/domain.hpp"
#include "bessbid/milp.hpp"

namespace bessbid {

/// Everything the hourly optimization sees. By construction there is no
/// field derived from the true SOC: the plant is visible only through
/// s_rep0 (information barrier).
struct MpcInputs {
    std::int64_t t0 = 0;       ///< absolute hour of the first step
    int horizon = 72;          ///< T [h]
    double s_rep0 = 0.5;       ///< reported SOC at t0 [fraction]
    std::vector<double> pi_da; ///< EUR/MWh, size >= horizon
    double pi_fcr = 16.0;      ///< EUR/MW/h, constant FCR price
    std::map<std::int64_t, double> committed_da;  ///< hour -> fixed DA bid [MW]
    std::map<std::int64_t, double> committed_fcr; ///< block -> fixed FCR bid [MW]
    std::vector<double> margin; ///< m[t], size horizon (policies none/fixed/adaptive)
    double delta0 = 0.0;        ///< tracked tube scaling at t0 (uncertainty-aware)
    MarginKind kind = MarginKind::none;

    /// Compares every field except the reported SOC; used by the
    /// information-barrier test.
    bool equal_except_s_rep(const MpcInputs& o) const {
        return t0 == o.t0 && horizon == o.horizon && pi_da == o.pi_da &&
               pi_fcr == o.pi_fcr && committed_da == o.committed_da &&
               committed_fcr == o.committed_fcr && margin == o.margin &&
               delta0 == o.delta0 && kind == o.kind;
    }
};

/// Variable handles of a built MPC model, needed for plan extraction.
struct MpcVarMap {
    std::vector<int> p_ch, p_dis;  // size T
    std::vector<int> s;            // size T+1
    std::vector<int> p_da, imb_pos, imb_neg;  // size T
    std::vector<std::int64_t> block_ids;      // absolute block indices, ordered
    int n_real_blocks = 0;                    // slots beyond this are padding
    std::vector<int> p_fcr;                   // per block slot
    std::vector<int> p_short;                 // per block slot
    std::vector<int> delta;                   // size T (uncertainty-aware), else empty
    std::vector<int> u, v;                    // size T-1 (uncertainty-aware)
    std::vector<int> z;                       // exclusivity binaries, -1 if absent
    double obj_constant = 0.0;                // committed FCR revenue [EUR]
    double s0 = 0.0;                          // initial model SOC after clamping
    bool s0_clamped = false;
};

struct MpcProblem {
    milp::Model model;
    MpcVarMap map;
};

/// First-hour command and the bids extracted from a solved MPC model.
struct PlanOutputs {
    bool feasible = false;      ///< false signals "fallback required"
    double p_cmd = 0.0;         ///< signed first-hour command [MW, dis - ch]
    std::map<std::int64_t, double> da_bids;   ///< hour -> planned DA bid [MW]
    std::map<std::int64_t, double> fcr_bids;  ///< block -> planned FCR bid [MW]
    std::vector<double> planned_s;            ///< size T+1
    std::vector<double> planned_delta;        ///< size T (uncertainty-aware)
    double objective = 0.0;                   ///< EUR over the horizon
    bool s_rep_clamped = false;
};

/// Constant margin schedule of the fixed policy.
inline std::vector<double> margin_schedule_fixed(const MarginPolicy& pol, int horizon) {
    return std::vector<double>(static_cast<std::size_t>(horizon), pol.m_fixed);
}

/// One step of the adaptive-margin recursion: grow by w_bar while the
/// realized SOC sat on the voltage plateau, decay by gamma otherwise.
/// The result is held constant over the next optimization horizon.
inline double margin_update_adaptive(double m_prev, double s_prev,
                                     const MarginPolicy& pol, const SocErrorParams& err) {
    double m = (s_prev > err.b && s_prev < err.c) ? m_prev + pol.w_bar
                                                  : pol.gamma * m_prev;
    return std::clamp(m, 0.0, pol.delta_max);
}

/// Appends the decision-dependent tube dynamics to a model that already
/// carries the SOC variables and delta-tightened bounds. Per step t:
/// regime binaries u_t ("s_t at or below b") and v_t ("s_t at or above c")
/// with big-M links, and epigraph lower bounds on delta_{t+1}. Returns the
/// binary handles.
inline std::pair<std::vector<int>, std::vector<int>>
encode_uncertainty_aware(milp::Model& model, const std::vector<int>& s_vars,
                         const std::vector<int>& delta_vars, const MarginPolicy& pol,
                         const SocErrorParams& err, const BatteryParams& battery) {
    using milp::Relation;
    int T = static_cast<int>(delta_vars.size());
    std::vector<int> u, v;
    u.reserve(T - 1);
    v.reserve(T - 1);
    double big_u = battery.s_max - err.b;   // slack of "s <= b" when u = 0
    double big_v = err.c - battery.s_min;   // slack of "s >= c" when v = 0
    double grow = pol.w_bar + pol.delta_max;
    for (int t = 0; t + 1 < T; ++t) {
        int ut = model.add_variable("u[" + std::to_string(t) + "]", 0, 1, true);
        int vt = model.add_variable("v[" + std::to_string(t) + "]", 0, 1, true);
        u.push_back(ut);
        v.push_back(vt);
        model.add_constraint({{ut, 1.0}, {vt, 1.0}}, Relation::le, 1.0);
        // s_t <= b + (1 - u_t)(s_max - b)
        model.add_constraint({{s_vars[t], 1.0}, {ut, big_u}}, Relation::le,
                             err.b + big_u);
        // s_t >= c - (1 - v_t)(c - s_min)
        model.add_constraint({{s_vars[t], 1.0}, {vt, -big_v}}, Relation::ge,
                             err.c - big_v);
        // delta_{t+1} >= gamma * delta_t
        model.add_constraint({{delta_vars[t + 1], 1.0}, {delta_vars[t], -pol.gamma}},
                             Relation::ge, 0.0);
        // delta_{t+1} >= delta_t + w_bar - (w_bar + delta_max)(u_t + v_t)
        model.add_constraint({{delta_vars[t + 1], 1.0},
                              {delta_vars[t], -1.0},
                              {ut, grow},
                              {vt, grow}},
                             Relation::ge, pol.w_bar);
    }
    return {std::move(u), std::move(v)};
}

/// Builds the hourly bidding problem: battery dynamics over the reported
/// SOC, day-ahead coupling with imbalance slack on committed hours,
/// four-hour FCR blocks with shortfall relaxation on committed blocks,
/// margin-tightened energy buffers, and the net-profit objective.
inline MpcProblem build_mpc_problem(const MpcInputs& in, const BatteryParams& battery,
                                    const SocErrorParams& err, const MarketParams& mkt,
                                    const MarginPolicy& pol) {
    using milp::Relation;
    const int T = in.horizon;
    if (T < 1) throw ValidationError("horizon out of range");
    if (static_cast<int>(in.pi_da.size()) < T)
        throw ValidationError("pi_da shorter than horizon");
    const bool ua = in.kind == MarginKind::uncertainty_aware;
    if (!ua && static_cast<int>(in.margin.size()) < T)
        throw ValidationError("margin schedule shorter than horizon");

    MpcProblem prob;
    milp::Model& mod = prob.model;
    MpcVarMap& vm = prob.map;
    mod.set_sense(milp::Sense::maximize);

    const double P = battery.p_max;
    const double dt = battery.dt;
    const double k_ch = battery.eta_ch * mkt.dt_fcr / battery.capacity;
    const double k_dis = mkt.dt_fcr / (battery.eta_dis * battery.capacity);

    // clamp the reported SOC into the tightened box before the solve
    double m0 = ua ? in.delta0 : in.margin[0];
    double lo0 = battery.s_min + m0, hi0 = battery.s_max - m0;
    vm.s0 = in.s_rep0;
    if (lo0 <= hi0) {
        double c0 = std::clamp(in.s_rep0, lo0, hi0);
        vm.s0_clamped = c0 != in.s_rep0;
        vm.s0 = c0;
    }

    auto name = [](const char* base, auto idx) {
        return std::string(base) + "[" + std::to_string(idx) + "]";
    };

    for (int t = 0; t < T; ++t) {
        vm.p_ch.push_back(mod.add_variable(name("p_ch", t), 0, P, false));
        vm.p_dis.push_back(mod.add_variable(name("p_dis", t), 0, P, false));
    }
    for (int t = 0; t <= T; ++t) {
        double lo = battery.s_min, hi = battery.s_max;
        if (t == 0) lo = hi = vm.s0;
        vm.s.push_back(mod.add_variable(name("s", t), lo, hi, false));
    }
    for (int t = 0; t < T; ++t) {
        std::int64_t h = in.t0 + t;
        auto it = in.committed_da.find(h);
        bool committed = it != in.committed_da.end();
        double lo = -P, hi = P;
        if (committed) lo = hi = std::clamp(it->second, -P, P);
        vm.p_da.push_back(mod.add_variable(name("p_da", t), lo, hi, false));
        // imbalance slack exists only against already-committed schedules
        double imb_hi = committed ? 2.0 * P : 0.0;
        vm.imb_pos.push_back(mod.add_variable(name("imb_pos", t), 0, imb_hi, false));
        vm.imb_neg.push_back(mod.add_variable(name("imb_neg", t), 0, imb_hi, false));
    }

    // FCR blocks covering [t0, t0+T), aligned to absolute hours 0,4,8,...
    // The slot count is padded to the alignment-independent maximum so the
    // model shape stays constant hour to hour (enables basis warm starts).
    std::int64_t first_block = in.t0 / mkt.fcr_block_len;
    std::int64_t last_block = (in.t0 + T - 1) / mkt.fcr_block_len;
    int n_slots = (T + mkt.fcr_block_len - 2) / mkt.fcr_block_len + 1;
    vm.n_real_blocks = static_cast<int>(last_block - first_block + 1);
    for (int k = 0; k < n_slots; ++k) {
        std::int64_t blk = first_block + k;
        vm.block_ids.push_back(blk);
        bool padding = blk > last_block;
        auto it = in.committed_fcr.find(blk);
        if (!padding && it != in.committed_fcr.end()) {
            double bid = std::clamp(it->second, 0.0, P);
            // delivered level; the committed bid is relaxed only through
            // the shortfall variable
            int f = mod.add_variable(name("p_fcr", blk), 0, P, false);
            int sh = mod.add_variable(name("p_short", blk), 0, P, false);
            mod.add_constraint({{f, 1.0}, {sh, 1.0}}, Relation::eq, bid);
            vm.p_fcr.push_back(f);
            vm.p_short.push_back(sh);
        } else {
            // new bids are never self-shorted: bid == delivered
            double hi = padding ? 0.0 : P;
            int f = mod.add_variable(name("p_fcr", blk), 0, hi, false);
            int sh = mod.add_variable(name("p_short", blk), 0, 0, false);
            mod.add_constraint({{sh, 1.0}}, Relation::eq, 0.0);
            vm.p_fcr.push_back(f);
            vm.p_short.push_back(sh);
        }
    }
    auto slot_of = [&](int t) {
        return static_cast<int>((in.t0 + t) / mkt.fcr_block_len - first_block);
    };

    if (ua) {
        for (int t = 0; t < T; ++t) {
            double lo = 0.0, hi = pol.delta_max;
            if (t == 0) lo = hi = std::clamp(in.delta0, 0.0, pol.delta_max);
            vm.delta.push_back(mod.add_variable(name("delta", t), lo, hi, false));
        }
        auto [u, v] = encode_uncertainty_aware(mod, vm.s, vm.delta, pol, err, battery);
        vm.u = std::move(u);
        vm.v = std::move(v);
    }

    // exclusivity binaries only where simultaneous charge/discharge could
    // pay off, i.e. at negative day-ahead prices
    vm.z.assign(T, -1);
    for (int t = 0; t < T; ++t) {
        if (in.pi_da[t] >= 0.0) continue;
        int zt = mod.add_variable(name("z", t), 0, 1, true);
        vm.z[t] = zt;
        mod.add_constraint({{vm.p_ch[t], 1.0}, {zt, -P}}, Relation::le, 0.0);
        mod.add_constraint({{vm.p_dis[t], 1.0}, {zt, P}}, Relation::le, P);
    }

    for (int t = 0; t < T; ++t) {
        // SOC recursion over the reported state
        mod.add_constraint({{vm.s[t + 1], 1.0},
                            {vm.s[t], -1.0},
                            {vm.p_ch[t], -battery.eta_ch * dt / battery.capacity},
                            {vm.p_dis[t], dt / (battery.eta_dis * battery.capacity)}},
                           Relation::eq, 0.0);
        // market coupling
        mod.add_constraint({{vm.p_dis[t], 1.0},
                            {vm.p_ch[t], -1.0},
                            {vm.p_da[t], -1.0},
                            {vm.imb_pos[t], -1.0},
                            {vm.imb_neg[t], 1.0}},
                           Relation::eq, 0.0);
        int f = vm.p_fcr[slot_of(t)];
        // power headroom for full symmetric activation
        mod.add_constraint({{vm.p_ch[t], 1.0}, {f, 1.0}}, Relation::le, P);
        mod.add_constraint({{vm.p_dis[t], 1.0}, {f, 1.0}}, Relation::le, P);
        // tightened energy buffers at both interval endpoints
        for (int e = t; e <= t + 1; ++e) {
            if (ua) {
                mod.add_constraint({{vm.s[e], 1.0}, {f, k_ch}, {vm.delta[t], 1.0}},
                                   Relation::le, battery.s_max);
                mod.add_constraint({{vm.s[e], 1.0}, {f, -k_dis}, {vm.delta[t], -1.0}},
                                   Relation::ge, battery.s_min);
            } else {
                mod.add_constraint({{vm.s[e], 1.0}, {f, k_ch}}, Relation::le,
                                   battery.s_max - in.margin[t]);
                mod.add_constraint({{vm.s[e], 1.0}, {f, -k_dis}}, Relation::ge,
                                   battery.s_min + in.margin[t]);
            }
        }
    }

    // net-profit objective
    for (int t = 0; t < T; ++t) {
        mod.add_objective_coeff(vm.p_da[t], in.pi_da[t] * dt);
        mod.add_objective_coeff(vm.p_dis[t], -mkt.c_deg * dt);
        mod.add_objective_coeff(vm.imb_pos[t], -mkt.c_imb * dt);
        mod.add_objective_coeff(vm.imb_neg[t], -mkt.c_imb * dt);
    }
    for (int k = 0; k < vm.n_real_blocks; ++k) {
        std::int64_t blk = vm.block_ids[k];
        std::int64_t h_lo = std::max<std::int64_t>(blk * mkt.fcr_block_len, in.t0);
        std::int64_t h_hi = std::min<std::int64_t>((blk + 1) * mkt.fcr_block_len,
                                                   in.t0 + T);
        double hours = static_cast<double>(h_hi - h_lo) * dt;
        mod.add_objective_coeff(vm.p_fcr[k], -mkt.c_deg * mkt.zeta * hours);
        auto it = in.committed_fcr.find(blk);
        if (it != in.committed_fcr.end()) {
            // committed block: capacity revenue is a constant
            vm.obj_constant += in.pi_fcr * it->second * hours;
            mod.add_objective_coeff(vm.p_short[k], -mkt.c_fcr * hours);
        } else {
            mod.add_objective_coeff(vm.p_fcr[k], in.pi_fcr * hours);
        }
    }
    return prob;
}

/// Rounding heuristic for the branch-and-bound: fixes the regime binaries
/// to the regime actually visited by the relaxation's SOC trajectory and
/// the exclusivity binaries to the dominant direction.
inline std::function<std::vector<double>(const std::vector<double>&)>
make_round_heuristic(const MpcProblem& prob, const SocErrorParams& err) {
    const MpcVarMap& vm = prob.map;
    return [vm, err](const std::vector<double>& x) {
        std::vector<double> fix = x;
        for (std::size_t t = 0; t < vm.u.size(); ++t) {
            double s = x[vm.s[t]];
            fix[vm.u[t]] = s <= err.b + 1e-9 ? 1.0 : 0.0;
            fix[vm.v[t]] = s >= err.c - 1e-9 ? 1.0 : 0.0;
        }
        for (std::size_t t = 0; t < vm.z.size(); ++t)
            if (vm.z[t] >= 0)
                fix[vm.z[t]] = x[vm.p_ch[t]] > x[vm.p_dis[t]] ? 1.0 : 0.0;
        return fix;
    };
}

/// Reads the plan out of a solution. Infeasible status yields
/// feasible == false (the caller falls back to a zero command).
inline PlanOutputs extract_plan(const milp::Solution& sol, const MpcInputs& in,
                                const MpcVarMap& vm) {
    PlanOutputs out;
    out.s_rep_clamped = vm.s0_clamped;
    if (!sol.has_solution() || (sol.status != milp::SolveStatus::optimal &&
                                sol.status != milp::SolveStatus::feasible_budget_hit))
        return out;
    out.feasible = true;
    out.p_cmd = sol.x[vm.p_dis[0]] - sol.x[vm.p_ch[0]];
    out.objective = sol.objective + vm.obj_constant;
    for (int t = 0; t < in.horizon; ++t)
        out.da_bids[in.t0 + t] = sol.x[vm.p_da[t]];
    for (int k = 0; k < vm.n_real_blocks; ++k) {
        std::int64_t blk = vm.block_ids[k];
        auto it = in.committed_fcr.find(blk);
        // committed blocks read back the committed value exactly
        out.fcr_bids[blk] = it != in.committed_fcr.end()
                                ? it->second
                                : std::max(0.0, sol.x[vm.p_fcr[k]]);
    }
    out.planned_s.reserve(vm.s.size());
    for (int sv : vm.s) out.planned_s.push_back(sol.x[sv]);
    for (int dv : vm.delta) out.planned_delta.push_back(sol.x[dv]);
    return out;
}

}  // namespace bessbid

#endif  // BESSBID_BIDDING_HPP
