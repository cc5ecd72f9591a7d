#ifndef BESSBID_METRICS_HPP
#define BESSBID_METRICS_HPP

#include <atomic>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "bessbid/domain.hpp"
#include "bessbid/market.hpp"

namespace bessbid {

/// The evaluation-side revenue decomposition. Signs follow the settlement:
/// imbalance is usually negative, degradation is subtracted.
struct RevenueBreakdown {
    double r_total = 0.0;
    double r_dam = 0.0;
    double r_fcr = 0.0;
    double c_imb = 0.0;
    double c_deg = 0.0;
    double shortfall_energy = 0.0;   ///< MWh, cumulated
    double shortfall_hours_pct = 0.0;
    double mean_margin = 0.0;
};

/// Aggregates a log in record order (fixed accumulation order, so the
/// identity r_total = r_dam + r_fcr + c_imb - c_deg holds to the last
/// bit of the computed components).
inline RevenueBreakdown compute_revenue(const SimulationLog& log, const MarketParams&) {
    RevenueBreakdown b;
    std::int64_t bad_hours = 0;
    double margin_sum = 0.0;
    for (const auto& r : log.records) {
        b.r_dam += r.rev_da;
        b.r_fcr += r.rev_fcr;
        b.c_imb += r.imb_settlement;
        b.c_deg += r.deg_cost;
        b.shortfall_energy += r.shortfall;
        if (!r.compliant) ++bad_hours;
        margin_sum += r.margin_m;
    }
    b.r_total = b.r_dam + b.r_fcr + b.c_imb - b.c_deg;
    if (!log.records.empty()) {
        b.shortfall_hours_pct =
            100.0 * static_cast<double>(bad_hours) / static_cast<double>(log.records.size());
        b.mean_margin = margin_sum / static_cast<double>(log.records.size());
    }
    return b;
}

inline void to_json(nlohmann::json& j, const RevenueBreakdown& b) {
    j = {{"r_total", b.r_total},
         {"r_dam", b.r_dam},
         {"r_fcr", b.r_fcr},
         {"c_imb", b.c_imb},
         {"c_deg", b.c_deg},
         {"shortfall_energy", b.shortfall_energy},
         {"shortfall_hours_pct", b.shortfall_hours_pct},
         {"mean_margin", b.mean_margin}};
}

/// One policy plus the grid of its tuning parameter (m for fixed, w_bar
/// for adaptive / uncertainty-aware; ignored for none).
struct SweepSpec {
    MarginKind kind = MarginKind::none;
    std::vector<double> grid;
};

struct SweepEntry {
    MarginKind kind = MarginKind::none;
    double parameter = 0.0;
    std::int64_t seed = -1;  ///< -1 marks the seed-averaged row
    int seed_count = 1;
    RevenueBreakdown breakdown;
    bool failed = false;
    std::string error;
};

struct SweepResult {
    std::vector<SweepEntry> entries;
};

inline MarginPolicy apply_sweep_parameter(MarginPolicy pol, MarginKind kind, double param) {
    pol.kind = kind;
    switch (kind) {
        case MarginKind::fixed: pol.m_fixed = param; break;
        case MarginKind::adaptive:
        case MarginKind::uncertainty_aware: pol.w_bar = param; break;
        case MarginKind::none: break;
    }
    return pol;
}

inline int sweep_worker_count() {
    if (const char* env = std::getenv("BESSBID_WORKERS")) {
        int n = std::atoi(env);
        if (n > 0) return n;
    }
    unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? static_cast<int>(hc) : 1;
}

/// Runs the closed loop per (policy, parameter, seed), fanning points out
/// across worker threads, and returns per-seed rows followed by the
/// seed-averaged row for each grid point. Individual run failures are
/// recorded on their row without aborting the other points.
inline SweepResult sweep(const Config& cfg, const PriceSeries& prices,
                         const std::vector<SweepSpec>& specs,
                         const std::vector<std::uint64_t>& seeds,
                         const RunOptions& opt = {}) {
    if (seeds.empty()) throw ValidationError("seed list empty");
    struct Point {
        MarginKind kind;
        double param;
        std::uint64_t seed;
    };
    std::vector<Point> points;
    for (const auto& spec : specs) {
        if (spec.grid.empty()) throw ValidationError("sweep grid empty");
        for (double p : spec.grid)
            for (std::uint64_t s : seeds) points.push_back({spec.kind, p, s});
    }

    std::vector<SweepEntry> per_seed(points.size());
    std::atomic<std::size_t> next{0};
    auto work = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= points.size()) return;
            const Point& pt = points[i];
            SweepEntry e;
            e.kind = pt.kind;
            e.parameter = pt.param;
            e.seed = static_cast<std::int64_t>(pt.seed);
            try {
                MarginPolicy pol = apply_sweep_parameter(cfg.policy, pt.kind, pt.param);
                SimulationLog log = run_receding_horizon(cfg, prices, pol, pt.seed, opt);
                e.breakdown = compute_revenue(log, cfg.market);
            } catch (const std::exception& ex) {
                e.failed = true;
                e.error = ex.what();
            }
            per_seed[i] = e;
        }
    };
    int workers = std::min<int>(sweep_worker_count(), static_cast<int>(points.size()));
    std::vector<std::thread> pool;
    for (int i = 1; i < workers; ++i) pool.emplace_back(work);
    work();
    for (auto& th : pool) th.join();

    // per-seed rows in grid order, then the mean row per grid point
    SweepResult out;
    std::size_t i = 0;
    for (const auto& spec : specs) {
        for (double p : spec.grid) {
            SweepEntry mean;
            mean.kind = spec.kind;
            mean.parameter = p;
            mean.seed = -1;
            mean.seed_count = 0;
            for (std::size_t k = 0; k < seeds.size(); ++k, ++i) {
                out.entries.push_back(per_seed[i]);
                const SweepEntry& e = per_seed[i];
                if (e.failed) {
                    mean.failed = true;
                    mean.error = e.error;
                    continue;
                }
                ++mean.seed_count;
                mean.breakdown.r_dam += e.breakdown.r_dam;
                mean.breakdown.r_fcr += e.breakdown.r_fcr;
                mean.breakdown.c_imb += e.breakdown.c_imb;
                mean.breakdown.c_deg += e.breakdown.c_deg;
                mean.breakdown.shortfall_energy += e.breakdown.shortfall_energy;
                mean.breakdown.shortfall_hours_pct += e.breakdown.shortfall_hours_pct;
                mean.breakdown.mean_margin += e.breakdown.mean_margin;
            }
            if (mean.seed_count > 0) {
                double n = mean.seed_count;
                mean.breakdown.r_dam /= n;
                mean.breakdown.r_fcr /= n;
                mean.breakdown.c_imb /= n;
                mean.breakdown.c_deg /= n;
                mean.breakdown.shortfall_energy /= n;
                mean.breakdown.shortfall_hours_pct /= n;
                mean.breakdown.mean_margin /= n;
                mean.breakdown.r_total = mean.breakdown.r_dam + mean.breakdown.r_fcr +
                                         mean.breakdown.c_imb - mean.breakdown.c_deg;
            }
            out.entries.push_back(mean);
        }
    }
    return out;
}

enum class ReportFormat { csv, json };

inline const char* report_csv_header() {
    return "policy,parameter,seed,seed_count,r_total,r_dam,r_fcr,c_imb,c_deg,"
           "shortfall_energy_mwh,shortfall_hours_pct,mean_margin";
}

inline void emit_report(const SweepResult& results, ReportFormat format, std::ostream& os) {
    char buf[512];
    if (format == ReportFormat::csv) {
        os << report_csv_header() << "\n";
        for (const auto& e : results.entries) {
            std::string seed = e.seed < 0 ? "mean" : std::to_string(e.seed);
            std::snprintf(buf, sizeof buf,
                          "%s,%.10g,%s,%d,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g\n",
                          to_string(e.kind).c_str(), e.parameter, seed.c_str(),
                          e.seed_count, e.breakdown.r_total, e.breakdown.r_dam,
                          e.breakdown.r_fcr, e.breakdown.c_imb, e.breakdown.c_deg,
                          e.breakdown.shortfall_energy, e.breakdown.shortfall_hours_pct,
                          e.breakdown.mean_margin);
            os << buf;
        }
    } else {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& e : results.entries) {
            nlohmann::json row = {{"policy", to_string(e.kind)},
                                  {"parameter", e.parameter},
                                  {"seed", e.seed < 0 ? nlohmann::json("mean")
                                                      : nlohmann::json(e.seed)},
                                  {"seed_count", e.seed_count},
                                  {"breakdown", e.breakdown}};
            if (e.failed) row["error"] = e.error;
            arr.push_back(row);
        }
        os << arr.dump(2) << "\n";
    }
}

inline void emit_report(const SweepResult& results, ReportFormat format,
                        const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    emit_report(results, format, f);
}

}  // namespace bessbid

#endif  // BESSBID_METRICS_HPP
