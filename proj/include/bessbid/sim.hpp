#ifndef BESSBID_SIM_HPP
#define BESSBID_SIM_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

#include "bessbid/domain.hpp"
#include "bessbid/rng.hpp"

namespace bessbid {

/// Ground-truth plant state. A value type: stepping is a pure function of
/// (state, inputs, sample), so independent simulations can run on
/// independent threads with independent engines.
struct BessState {
    double s_true = 0.5;   ///< physical SOC [fraction]
    double w = 0.0;        ///< estimation error, s_true = s_rep + w
    std::int64_t t = 0;    ///< hour index
    std::mt19937_64 rng;   ///< per-instance noise stream

    BessState() = default;
    BessState(double s0, double w0, std::uint64_t seed)
        : s_true(s0), w(w0), t(0), rng(seed) {}
};

/// Realized dispatch of one hour, split into its physical directions.
/// At most one of the two components is nonzero.
struct RealizedDispatch {
    double p_ch = 0.0;   ///< realized charging power [MW, >= 0]
    double p_dis = 0.0;  ///< realized discharging power [MW, >= 0]
    double p_true = 0.0; ///< signed realized power = p_dis - p_ch [MW]
};

/// Error contraction factor a(s): 0 at the SOC extremes, 1 on the voltage
/// plateau (b, c], linear ramps in between. Continuous, range [0,1].
inline double scaling_factor(double s, const SocErrorParams& err) {
    if (s <= err.b) return s / err.b;
    if (s <= err.c) return 1.0;
    return 1.0 - (s - err.c) / (1.0 - err.c);
}

/// One step of the estimation-error process. The dispatched power enters
/// per-unit (|p_true| / p_max) so that the noise mean has the
/// interpretation "error gain per full-power hour". Saturates at +-w_max.
inline double step_error(double w, double s_true, double p_true, double eta_sample,
                         const SocErrorParams& err, const BatteryParams& battery) {
    double a = scaling_factor(s_true, err);
    double next = a * (w + std::abs(p_true) / battery.p_max * eta_sample);
    return std::clamp(next, -err.w_max, err.w_max);
}

/// Applies a signed power command to the true SOC. The realized power is
/// clipped to the largest magnitude that keeps the SOC inside
/// [s_min, s_max]; the command is netted first, so a step realizes at most
/// one direction.
inline std::pair<double, RealizedDispatch>
step_true_soc(double s_true, double p_cmd, const BatteryParams& b) {
    RealizedDispatch r;
    if (p_cmd > 0.0) {
        // discharge: s' = s - p_dis * dt / (eta_dis * C)
        double cap = std::min(b.p_max, (s_true - b.s_min) * b.capacity * b.eta_dis / b.dt);
        r.p_dis = std::clamp(p_cmd, 0.0, cap);
    } else if (p_cmd < 0.0) {
        // charge: s' = s + eta_ch * p_ch * dt / C
        double cap = std::min(b.p_max, (b.s_max - s_true) * b.capacity / (b.eta_ch * b.dt));
        r.p_ch = std::clamp(-p_cmd, 0.0, cap);
    }
    r.p_true = r.p_dis - r.p_ch;
    double s_next = s_true + b.dt / b.capacity * (b.eta_ch * r.p_ch - r.p_dis / b.eta_dis);
    // realized powers were chosen to keep s_next inside the limits; the
    // clamp only removes residual floating-point spill
    s_next = std::clamp(s_next, b.s_min, b.s_max);
    return {s_next, r};
}

/// What the optimizer sees. Not clamped: the BMS can report a value
/// outside [0,1] when the error is large.
inline double reported_soc(const BessState& st) { return st.s_true - st.w; }

/// Fragment of an HourRecord produced by the plant.
struct SimHourResult {
    RealizedDispatch realized;
    double s_true_begin = 0.0;
    double s_true_end = 0.0;
    double w_begin = 0.0;
    double w_end = 0.0;
};

/// Advances the plant by one market interval: realizes the dispatch, draws
/// one noise sample from the state's stream and steps the error process.
/// The error contraction is evaluated at the end-of-step SOC, so driving
/// the battery to an extreme recalibrates the estimate within the step.
inline SimHourResult simulate_hour(BessState& st, double p_cmd,
                                   const BatteryParams& battery,
                                   const SocErrorParams& err) {
    SimHourResult out;
    out.s_true_begin = st.s_true;
    out.w_begin = st.w;
    auto [s_next, realized] = step_true_soc(st.s_true, p_cmd, battery);
    double eta_sample = gauss(st.rng, err.beta, std::sqrt(err.sigma2));
    st.w = step_error(st.w, s_next, realized.p_true, eta_sample, err, battery);
    st.s_true = s_next;
    st.t += 1;
    out.realized = realized;
    out.s_true_end = st.s_true;
    out.w_end = st.w;
    return out;
}

}  // namespace bessbid

#endif  // BESSBID_SIM_HPP
