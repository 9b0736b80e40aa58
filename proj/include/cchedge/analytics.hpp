#pragma once

// Hedge-quality measures on relative P&L samples and the rolling historical backtest.

#include "cchedge/dates.hpp"
#include "cchedge/hedging.hpp"
#include "cchedge/vol_surface.hpp"

#include <map>
#include <span>
#include <string>
#include <vector>

namespace cchedge {

/// e^{-rT} Pi_T / premium, elementwise. DomainError for a non-positive premium.
std::vector<double> relative_pnl(std::span<const double> pnl, double premium, double r, double expiry);

/// 100 x sample standard deviation (n - 1 denominator). Needs n >= 2.
double hedge_error(std::span<const double> rel);

/// Two-sided expected shortfall with the order statistic q = x_(ceil(beta n)):
/// beta <= 0.5 averages the values <= q, beta > 0.5 the values >= q.
double expected_shortfall(std::span<const double> sample, double beta);

/// Order statistic x_(ceil(beta n)), 1-based, clamped to [1, n].
double empirical_quantile(std::span<const double> sample, double beta);

struct ReportMeta {
    std::string segment;
    std::string simulator;
    std::string model;
    std::string strategy;
};

struct HedgeReport {
    ReportMeta meta;
    std::size_t n = 0;
    double min = 0.0;
    double es05 = 0.0;
    double median = 0.0;
    double es95 = 0.0;
    double max = 0.0;
    double hedge_error = 0.0;   // 0 when n == 1
    std::vector<double> truncated;   // values within [q5, q95], sorted
    bool model_consistent = true;    // false for a vega hedge under Black-Scholes

    /// min <= es05 <= median <= es95 <= max.
    void validate() const;
};

HedgeReport build_report(std::span<const double> rel, const ReportMeta& meta);

struct PricePoint {
    Date date{};
    double close = 0.0;
};

struct BacktestInput {
    std::vector<PricePoint> prices;          // consecutive calendar days
    std::map<Date, SviSurface> surfaces;     // daily surfaces for inception pricing
    std::map<Date, ModelParams> models;      // daily hedge-model parameters; carried forward over gaps
};

struct BacktestSpec {
    Strategy strategy = Strategy::Delta;
    int expiry_days = 60;
    int second_extra_days = 30;
    HedgeContext ctx;   // ctx.r is the rate; premiums are taken from the surfaces
};

struct BacktestResult {
    std::vector<Date> inception;
    std::vector<double> pnl;
    std::vector<double> rel_pnl;
    std::vector<double> premium;
    std::vector<std::string> skipped;   // "YYYY-MM-DD: reason"
};

/// Writes an ATM call expiring expiry_days later on each day of [start, end]
/// and hedges it daily along the realized closes.
BacktestResult run_backtest(const BacktestInput& input, Date start, Date end, const BacktestSpec& spec);

}  // namespace cchedge
