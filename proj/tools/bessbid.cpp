// bessbid: closed-loop storage bidding simulator CLI.
//
// Subcommands:
//   simulate   one receding-horizon run -> log.csv + summary.json
//   sweep      policy-parameter grid search -> sweep.csv + manifest.json
//   gen-prices deterministic synthetic day-ahead price CSV
//
// Exit codes: 0 ok, 2 usage, 3 config, 4 I/O, 5 internal.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bessbid/domain.hpp"
#include "bessbid/ingest.hpp"
#include "bessbid/market.hpp"
#include "bessbid/metrics.hpp"
#include "bessbid/milp.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitConfig = 3;
constexpr int kExitIo = 4;
constexpr int kExitInternal = 5;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CommonArgs {
    std::string config_path;
    std::string prices_path;
    bool synthetic = false;
    std::uint64_t price_seed = 1;
    std::string policy = "none";
    double m = -1.0;
    double w_bar = -1.0;
    int days = 30;
    int months = 0;
    int horizon = 0;
    int node_limit = 0;
    double time_limit = -1.0;
};

bessbid::Config load_config(const CommonArgs& a) {
    bessbid::Config cfg;  // Table-style defaults
    if (!a.config_path.empty()) {
        std::ifstream f(a.config_path);
        if (!f) throw bessbid::IngestError("cannot open " + a.config_path);
        nlohmann::json j;
        try {
            f >> j;
        } catch (const nlohmann::json::exception& e) {
            throw bessbid::ValidationError(a.config_path + ": " + e.what());
        }
        j.get_to(cfg);
    }
    if (a.horizon > 0) cfg.horizon = a.horizon;
    return cfg;
}

bessbid::MarginKind parse_policy(const std::string& s) {
    auto k = bessbid::margin_kind_from_string(s);
    if (!k) throw UsageError("unknown policy '" + s + "'");
    return *k;
}

int sim_hours(const CommonArgs& a) {
    if (a.months > 0) return a.months * 30 * 24;
    return a.days * 24;
}

// Loads or synthesizes prices long enough to cover the run plus horizon.
bessbid::PriceSeries resolve_prices(const CommonArgs& a, int hours, int horizon,
                                    nlohmann::json& manifest) {
    if (!a.prices_path.empty() && a.synthetic)
        throw UsageError("--prices and --synthetic are mutually exclusive");
    if (!a.prices_path.empty()) {
        manifest["prices"] = {{"source", "file"}, {"path", a.prices_path}};
        return bessbid::load_price_csv(a.prices_path);
    }
    if (!a.synthetic) throw UsageError("need --prices FILE or --synthetic");
    bessbid::SyntheticPriceParams sp;
    sp.seed = a.price_seed;
    sp.days = (hours + horizon + 23) / 24 + 1;
    manifest["prices"] = {{"source", "synthetic"},
                          {"seed", sp.seed},
                          {"days", sp.days}};
    return bessbid::synth_prices(sp);
}

bessbid::MarginPolicy resolve_policy(const CommonArgs& a, bessbid::Config& cfg) {
    bessbid::MarginPolicy pol = cfg.policy;
    pol.kind = parse_policy(a.policy);
    if (a.m >= 0.0) {
        if (pol.kind != bessbid::MarginKind::fixed)
            throw UsageError("--m only applies to --policy fixed");
        pol.m_fixed = a.m;
    }
    if (a.w_bar >= 0.0) {
        if (pol.kind != bessbid::MarginKind::adaptive &&
            pol.kind != bessbid::MarginKind::uncertainty_aware)
            throw UsageError("--w-bar only applies to adaptive or uncertainty-aware");
        pol.w_bar = a.w_bar;
    }
    cfg.policy = pol;
    return pol;
}

bessbid::RunOptions resolve_run_options(const CommonArgs& a, int hours) {
    bessbid::RunOptions opt;
    opt.hours = hours;
    if (a.node_limit > 0) opt.milp_node_limit = a.node_limit;
    if (a.time_limit >= 0.0) opt.milp_time_limit_s = a.time_limit;
    return opt;
}

void ensure_out_dir(const std::string& out) {
    std::error_code ec;
    std::filesystem::create_directories(out, ec);
    if (ec || !std::filesystem::is_directory(out))
        throw bessbid::IngestError("cannot create output directory " + out);
}

void write_file(const std::string& path, const std::string& body) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw bessbid::IngestError("cannot write " + path);
    f << body;
    if (!f) throw bessbid::IngestError("write failed: " + path);
}

std::vector<double> parse_grid(const std::string& spec) {
    double start, stop, step;
    char trailing;
    int n = std::sscanf(spec.c_str(), "%lf:%lf:%lf%c", &start, &stop, &step, &trailing);
    if (n != 3) throw UsageError("grid must be start:stop:step, got '" + spec + "'");
    if (step <= 0.0 || stop < start) throw UsageError("bad grid range '" + spec + "'");
    auto count = static_cast<std::size_t>((stop - start) / step + 1e-9) + 1;
    std::vector<double> g(count);
    for (std::size_t i = 0; i < count; ++i) g[i] = start + static_cast<double>(i) * step;
    return g;
}

std::vector<std::uint64_t> parse_seeds(const std::string& spec) {
    std::vector<std::uint64_t> seeds;
    std::stringstream ss(spec);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        try {
            seeds.push_back(std::stoull(tok));
        } catch (const std::exception&) {
            throw UsageError("bad seed '" + tok + "'");
        }
    }
    if (seeds.empty()) throw UsageError("no seeds given");
    return seeds;
}

void print_summary(const bessbid::RevenueBreakdown& b, int hours) {
    std::printf("%-22s %14s\n", "metric", "value");
    std::printf("%-22s %14d\n", "hours", hours);
    std::printf("%-22s %14.2f\n", "r_total_eur", b.r_total);
    std::printf("%-22s %14.2f\n", "r_dam_eur", b.r_dam);
    std::printf("%-22s %14.2f\n", "r_fcr_eur", b.r_fcr);
    std::printf("%-22s %14.2f\n", "c_imb_eur", b.c_imb);
    std::printf("%-22s %14.2f\n", "c_deg_eur", b.c_deg);
    std::printf("%-22s %14.3f\n", "shortfall_mwh", b.shortfall_energy);
    std::printf("%-22s %14.2f\n", "shortfall_hours_pct", b.shortfall_hours_pct);
    std::printf("%-22s %14.5f\n", "mean_margin", b.mean_margin);
}

int cmd_simulate(const CommonArgs& a, std::uint64_t seed, const std::string& out) {
    bessbid::Config cfg = load_config(a);
    bessbid::MarginPolicy pol = resolve_policy(a, cfg);
    bessbid::validate_params(cfg);
    int hours = sim_hours(a);
    if (hours < 1) throw UsageError("simulation length must be positive");

    nlohmann::json manifest;
    bessbid::PriceSeries prices = resolve_prices(a, hours, cfg.horizon, manifest);
    bessbid::RunOptions opt = resolve_run_options(a, hours);
    ensure_out_dir(out);

    bessbid::SimulationLog log = bessbid::run_receding_horizon(cfg, prices, pol, seed, opt);
    bessbid::RevenueBreakdown rev = bessbid::compute_revenue(log, cfg.market);

    {
        std::ofstream f(out + "/log.csv", std::ios::binary);
        if (!f) throw bessbid::IngestError("cannot write " + out + "/log.csv");
        log.write_csv(f);
    }
    nlohmann::json summary = {{"config", log.config_snapshot},
                              {"seed", seed},
                              {"policy", bessbid::to_string(pol.kind)},
                              {"hours", hours},
                              {"node_limit", opt.milp_node_limit},
                              {"manifest", manifest},
                              {"revenue", rev}};
    write_file(out + "/summary.json", summary.dump(2) + "\n");
    print_summary(rev, hours);
    return kExitOk;
}

int cmd_sweep(const CommonArgs& a, const std::string& grid_spec,
              const std::string& seed_spec, const std::string& out) {
    bessbid::Config cfg = load_config(a);
    bessbid::MarginKind kind = parse_policy(a.policy);
    bessbid::validate_params(cfg);
    int hours = sim_hours(a);
    if (hours < 1) throw UsageError("simulation length must be positive");

    bessbid::SweepSpec spec;
    spec.kind = kind;
    spec.grid = kind == bessbid::MarginKind::none ? std::vector<double>{0.0}
                                                  : parse_grid(grid_spec);
    std::vector<std::uint64_t> seeds = parse_seeds(seed_spec);

    nlohmann::json manifest;
    bessbid::PriceSeries prices = resolve_prices(a, hours, cfg.horizon, manifest);
    bessbid::RunOptions opt = resolve_run_options(a, hours);
    ensure_out_dir(out);

    bessbid::SweepResult res =
        bessbid::sweep(cfg, prices, {spec}, seeds, opt);
    bessbid::emit_report(res, bessbid::ReportFormat::csv, out + "/sweep.csv");

    manifest["config"] = cfg;
    manifest["policy"] = bessbid::to_string(kind);
    manifest["grid"] = spec.grid;
    manifest["seeds"] = seeds;
    manifest["hours"] = hours;
    manifest["node_limit"] = opt.milp_node_limit;
    write_file(out + "/manifest.json", manifest.dump(2) + "\n");

    std::printf("%zu grid points x %zu seeds -> %s/sweep.csv\n", spec.grid.size(),
                seeds.size(), out.c_str());
    for (const auto& e : res.entries) {
        if (e.seed >= 0) continue;
        std::printf("%-18s %-12.6g r_total %12.2f  shortfall %6.2f%%  margin %8.5f%s\n",
                    bessbid::to_string(e.kind).c_str(), e.parameter,
                    e.breakdown.r_total, e.breakdown.shortfall_hours_pct,
                    e.breakdown.mean_margin, e.failed ? "  [failed seeds]" : "");
    }
    return kExitOk;
}

int cmd_gen_prices(const bessbid::SyntheticPriceParams& sp, const std::string& out) {
    bessbid::validate(sp);
    bessbid::PriceSeries series = bessbid::synth_prices(sp);
    std::ofstream f(out, std::ios::binary);
    if (!f) throw bessbid::IngestError("cannot write " + out);
    bessbid::write_price_csv(f, series);
    if (!f) throw bessbid::IngestError("write failed: " + out);
    nlohmann::json manifest = {{"seed", sp.seed},
                               {"days", sp.days},
                               {"base", sp.base},
                               {"morning_peak", sp.morning_peak},
                               {"evening_peak", sp.evening_peak},
                               {"noise_std", sp.noise_std},
                               {"negative_prob", sp.negative_prob},
                               {"start_epoch", sp.start_epoch},
                               {"rows", series.pi_da.size()}};
    write_file(out + ".manifest.json", manifest.dump(2) + "\n");
    std::printf("%zu rows -> %s\n", series.pi_da.size(), out.c_str());
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Battery storage bidding simulator and sweep driver"};
    app.require_subcommand(1);

    CommonArgs a;
    std::uint64_t seed = 1;
    std::string out_dir = "out";
    std::string grid_spec;
    std::string seed_spec = "1";

    auto add_common = [&](CLI::App* sub, bool wants_policy) {
        sub->add_option("--config", a.config_path, "JSON config file (defaults match the reference setup)");
        sub->add_option("--prices", a.prices_path, "day-ahead price CSV");
        sub->add_flag("--synthetic", a.synthetic, "use the synthetic price generator");
        sub->add_option("--price-seed", a.price_seed, "synthetic price seed");
        sub->add_option("--days", a.days, "simulation length in days")->check(CLI::PositiveNumber);
        sub->add_option("--months", a.months, "simulation length in 30-day months");
        sub->add_option("--horizon", a.horizon, "MPC horizon override [h]");
        sub->add_option("--node-limit", a.node_limit, "branch-and-bound node budget per solve");
        sub->add_option("--time-limit", a.time_limit, "optional per-solve wall clock [s]");
        if (wants_policy) {
            sub->add_option("--policy", a.policy,
                            "none | fixed | adaptive | uncertainty-aware")
                ->required();
            sub->add_option("--m", a.m, "fixed margin");
            sub->add_option("--w-bar", a.w_bar, "per-step error growth bound");
        }
    };

    CLI::App* sim = app.add_subcommand("simulate", "run one closed-loop simulation");
    add_common(sim, true);
    sim->add_option("--seed", seed, "simulation seed");
    sim->add_option("--out", out_dir, "output directory");

    CLI::App* sw = app.add_subcommand("sweep", "grid-search a policy parameter");
    add_common(sw, true);
    sw->add_option("--grid", grid_spec, "start:stop:step");
    sw->add_option("--seeds", seed_spec, "comma-separated seed list");
    sw->add_option("--out", out_dir, "output directory");

    bessbid::SyntheticPriceParams sp;
    std::string price_out = "prices.csv";
    CLI::App* gp = app.add_subcommand("gen-prices", "write a synthetic price CSV");
    gp->add_option("--days", sp.days, "number of days")->check(CLI::PositiveNumber);
    gp->add_option("--seed", sp.seed, "generator seed");
    gp->add_option("--base", sp.base, "base price level");
    gp->add_option("--morning-peak", sp.morning_peak, "morning bump amplitude");
    gp->add_option("--evening-peak", sp.evening_peak, "evening bump amplitude");
    gp->add_option("--noise-std", sp.noise_std, "Gaussian noise stddev");
    gp->add_option("--negative-prob", sp.negative_prob, "per-hour negative price probability");
    gp->add_option("--start", sp.start_epoch, "first hour, epoch seconds");
    gp->add_option("--out", price_out, "output CSV path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (sim->parsed()) return cmd_simulate(a, seed, out_dir);
        if (sw->parsed()) {
            if (grid_spec.empty() && a.policy != "none")
                throw UsageError("sweep requires --grid start:stop:step");
            return cmd_sweep(a, grid_spec, seed_spec, out_dir);
        }
        if (gp->parsed()) return cmd_gen_prices(sp, price_out);
        std::cerr << "error: no subcommand\n";
        return kExitUsage;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const bessbid::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const bessbid::IngestError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
}
