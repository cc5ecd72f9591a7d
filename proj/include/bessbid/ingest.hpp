#ifndef BESSBID_INGEST_HPP
#define BESSBID_INGEST_HPP

#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

#include "bessbid/domain.hpp"
#include "bessbid/rng.hpp"

namespace bessbid {

struct IngestError : std::runtime_error {
    explicit IngestError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Parses a `timestamp,price_eur_mwh` CSV (header required, ISO-8601 UTC,
/// hour-aligned, contiguous). Errors name the offending line or the
/// missing timestamp.
inline PriceSeries load_price_csv(std::istream& is, const std::string& origin = "<stream>") {
    PriceSeries series;
    std::string line;
    int lineno = 0;
    bool have_prev = false;
    std::int64_t prev = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (lineno == 1) {
            if (line.rfind("timestamp", 0) != 0)
                throw IngestError(origin + ":1: missing header row");
            continue;
        }
        if (line.empty()) continue;
        auto comma = line.find(',');
        if (comma == std::string::npos)
            throw IngestError(origin + ":" + std::to_string(lineno) + ": malformed row");
        auto ts = parse_hour_utc(line.substr(0, comma));
        if (!ts)
            throw IngestError(origin + ":" + std::to_string(lineno) +
                              ": bad timestamp '" + line.substr(0, comma) + "'");
        double price;
        try {
            std::size_t pos = 0;
            price = std::stod(line.substr(comma + 1), &pos);
            if (pos != line.size() - comma - 1) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw IngestError(origin + ":" + std::to_string(lineno) + ": bad price '" +
                              line.substr(comma + 1) + "'");
        }
        if (!std::isfinite(price))
            throw IngestError(origin + ":" + std::to_string(lineno) +
                              ": non-finite price");
        if (!have_prev) {
            series.start_epoch = *ts;
            have_prev = true;
        } else {
            if (*ts == prev)
                throw IngestError(origin + ":" + std::to_string(lineno) +
                                  ": duplicate timestamp " + format_hour_utc(*ts));
            if (*ts != prev + 3600)
                throw IngestError(origin + ": gap, missing " +
                                  format_hour_utc(prev + 3600));
        }
        prev = *ts;
        series.pi_da.push_back(price);
    }
    if (series.pi_da.empty()) throw IngestError(origin + ": no data rows");
    return series;
}

inline PriceSeries load_price_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IngestError("cannot open " + path);
    return load_price_csv(f, path);
}

/// Emits the schema the loader reads back (round-trip identity up to
/// double formatting).
inline void write_price_csv(std::ostream& os, const PriceSeries& series) {
    os << "timestamp,price_eur_mwh\n";
    char buf[64];
    for (std::size_t i = 0; i < series.pi_da.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.10g", series.pi_da[i]);
        os << format_hour_utc(series.start_epoch + static_cast<std::int64_t>(i) * 3600)
           << "," << buf << "\n";
    }
}

/// Synthetic-series knobs: a daily double-peak shape with Gaussian noise
/// and occasional negative-price hours.
struct SyntheticPriceParams {
    std::uint64_t seed = 1;
    int days = 30;
    double base = 70.0;            ///< EUR/MWh
    double morning_peak = 45.0;    ///< amplitude, EUR/MWh
    double evening_peak = 55.0;    ///< amplitude, EUR/MWh
    int morning_hour = 8;
    int evening_hour = 19;
    double noise_std = 8.0;        ///< EUR/MWh
    double negative_prob = 0.02;   ///< per-hour probability
    std::int64_t start_epoch = 1704067200;  // 2024-01-01T00:00:00Z
};

inline void validate(const SyntheticPriceParams& p) {
    if (p.days < 1) throw ValidationError("days out of range");
    if (p.morning_peak < 0 || p.evening_peak < 0) throw ValidationError("peak amplitude out of range");
    if (p.noise_std < 0) throw ValidationError("noise_std out of range");
    if (!(p.negative_prob >= 0.0 && p.negative_prob <= 1.0))
        throw ValidationError("negative_prob out of range");
}

/// Triangular bump of half-width 3 h centred on `peak_hour`, evaluated on
/// the 24 h clock.
inline double daily_bump(int hour, int peak_hour) {
    int d = std::abs(hour - peak_hour);
    d = std::min(d, 24 - d);
    return d >= 3 ? 0.0 : 1.0 - d / 3.0;
}

/// Deterministic in the seed. Negative-price hours draw from
/// [-max_amplitude, 0).
inline PriceSeries synth_prices(const SyntheticPriceParams& p) {
    validate(p);
    std::mt19937_64 eng(p.seed);
    PriceSeries s;
    s.start_epoch = p.start_epoch;
    s.pi_da.reserve(static_cast<std::size_t>(p.days) * 24);
    double amp = std::max(p.morning_peak, p.evening_peak);
    for (int d = 0; d < p.days; ++d) {
        for (int h = 0; h < 24; ++h) {
            double noise = gauss(eng, 0.0, p.noise_std);
            bool negative = uniform01(eng) < p.negative_prob;
            double neg_draw = uniform(eng, -amp, 0.0);
            double price;
            if (negative) {
                price = neg_draw;
            } else {
                price = p.base + p.morning_peak * daily_bump(h, p.morning_hour) +
                        p.evening_peak * daily_bump(h, p.evening_hour) + noise;
            }
            s.pi_da.push_back(price);
        }
    }
    return s;
}

}  // namespace bessbid

#endif  // BESSBID_INGEST_HPP
