#include "cchedge/analytics.hpp"
#include "cchedge/errors.hpp"

#include <boost/math/distributions/normal.hpp>
#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

using namespace cchedge;

namespace {

std::vector<double> one_to_hundred() {
    std::vector<double> v(100);
    std::iota(v.begin(), v.end(), 1.0);
    return v;
}

SviSurface flat_surface(Date d, double s0, double sigma) {
    SviSurface s;
    s.date = d;
    s.f0 = s0;
    for (int days : {30, 60, 90, 120}) {
        const double tau = days / 365.0;
        s.slices.push_back({sigma * sigma * tau, 0.0, 0.0, 0.0, 0.1, tau});
    }
    return s;
}

BacktestInput history(const std::vector<double>& closes, double sigma, ModelParams model) {
    BacktestInput in;
    const Date d0 = parse_iso_date("2020-01-01");
    for (std::size_t i = 0; i < closes.size(); ++i) {
        const Date d = d0 + std::chrono::days{static_cast<int>(i)};
        in.prices.push_back({d, closes[i]});
        in.surfaces[d] = flat_surface(d, closes[i], sigma);
    }
    in.models[d0] = model;
    return in;
}

}  // namespace

TEST(RelativePnl, Normalization) {
    const std::vector<double> pnl{0.0, 5.0, 5.0 * std::exp(0.03 * 0.5)};
    const auto r0 = relative_pnl(pnl, 5.0, 0.0, 0.5);
    EXPECT_DOUBLE_EQ(r0[0], 0.0);
    EXPECT_DOUBLE_EQ(r0[1], 1.0);
    EXPECT_NEAR(relative_pnl(pnl, 5.0, 0.03, 0.5)[2], 1.0, 1e-15);
    EXPECT_THROW(relative_pnl(pnl, 0.0, 0.0, 0.5), DomainError);
}

TEST(HedgeError, HandValues) {
    EXPECT_DOUBLE_EQ(hedge_error(std::vector<double>{0.3, 0.3, 0.3}), 0.0);
    EXPECT_NEAR(hedge_error(std::vector<double>{-1.0, 1.0}), 100.0 * std::sqrt(2.0), 1e-12);
    std::vector<double> x{0.1, -0.4, 0.25, 0.9}, y = x;
    for (double& v : y) v += 3.0;
    std::swap(y[0], y[3]);
    EXPECT_NEAR(hedge_error(x), hedge_error(y), 1e-12);
    EXPECT_THROW(hedge_error(std::vector<double>{1.0}), DomainError);
}

TEST(ExpectedShortfall, OrderStatisticHandCounts) {
    const auto v = one_to_hundred();
    EXPECT_DOUBLE_EQ(expected_shortfall(v, 0.05), 3.0);
    EXPECT_DOUBLE_EQ(expected_shortfall(v, 0.95), 97.5);
    EXPECT_DOUBLE_EQ(expected_shortfall(std::vector<double>(7, -0.2), 0.05), -0.2);
    EXPECT_DOUBLE_EQ(expected_shortfall(std::vector<double>(7, -0.2), 0.95), -0.2);
    EXPECT_THROW(expected_shortfall(v, 0.0), DomainError);
    EXPECT_THROW(expected_shortfall(std::vector<double>{}, 0.05), DomainError);
}

TEST(ExpectedShortfall, TranslationAndScaleEquivariance) {
    std::mt19937_64 rng(3);
    std::student_t_distribution<double> t(3.0);
    std::vector<double> x(999), y(999);
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = t(rng);
        y[i] = 2.5 * x[i] - 1.0;
    }
    for (double beta : {0.05, 0.95}) {
        EXPECT_NEAR(expected_shortfall(y, beta), 2.5 * expected_shortfall(x, beta) - 1.0, 1e-12);
    }
}

TEST(ExpectedShortfall, StandardNormalLowerTail) {
    // -phi(z_0.05) / 0.05
    const boost::math::normal nd;
    const double oracle = -boost::math::pdf(nd, boost::math::quantile(nd, 0.05)) / 0.05;
    EXPECT_NEAR(oracle, -2.063, 1e-3);
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> z;
    std::vector<double> x(100000);
    for (double& v : x) v = z(rng);
    EXPECT_NEAR(expected_shortfall(x, 0.05), oracle, 0.03);
    EXPECT_NEAR(build_report(x, {}).es05, oracle, 0.03);
}

TEST(Report, ConstantAndExtremes) {
    const HedgeReport c = build_report(std::vector<double>(10, 0.4), {"calm", "svcj", "SV", "delta"});
    EXPECT_DOUBLE_EQ(c.min, 0.4);
    EXPECT_DOUBLE_EQ(c.max, 0.4);
    EXPECT_DOUBLE_EQ(c.es05, 0.4);
    EXPECT_DOUBLE_EQ(c.es95, 0.4);
    EXPECT_DOUBLE_EQ(c.hedge_error, 0.0);
    EXPECT_EQ(c.meta.segment, "calm");
    const HedgeReport r = build_report(std::vector<double>{1.0, -2.0, 0.0, 2.0, -1.0}, {});
    EXPECT_DOUBLE_EQ(r.min, -2.0);
    EXPECT_DOUBLE_EQ(r.max, 2.0);
    EXPECT_EQ(r.n, 5u);
    EXPECT_TRUE(build_report(std::vector<double>{1.0}, {}).hedge_error == 0.0);
}

TEST(Report, TruncatedSampleAndOrdering) {
    const HedgeReport r = build_report(one_to_hundred(), {});
    ASSERT_EQ(r.truncated.size(), 91u);
    EXPECT_DOUBLE_EQ(r.truncated.front(), 5.0);
    EXPECT_DOUBLE_EQ(r.truncated.back(), 95.0);
    EXPECT_LE(r.min, r.es05);
    EXPECT_LE(r.es05, r.median);
    EXPECT_LE(r.median, r.es95);
    EXPECT_LE(r.es95, r.max);
    EXPECT_FALSE(build_report(one_to_hundred(), {"", "", "BS", "delta-vega"}).model_consistent);
}

TEST(Backtest, StaticWorldKeepsThePremium) {
    // Every option expires ATM; at r = 0 the delta position never moves the book.
    const BacktestInput in = history(std::vector<double>(90, 8000.0), 0.6, {BsParams{0.6}, 0.0, 8000.0});
    BacktestSpec spec;
    const Date d0 = in.prices.front().date;
    const BacktestResult res = run_backtest(in, d0, d0 + std::chrono::days{9}, spec);
    ASSERT_EQ(res.pnl.size(), 10u);
    for (std::size_t i = 0; i < res.pnl.size(); ++i) {
        EXPECT_NEAR(res.premium[i], bs_price(0.6, 8000.0, 0.0, {8000.0, 60.0 / 365.0, true}), 1e-8);
        EXPECT_NEAR(res.pnl[i], res.premium[i], 1e-9);
    }
    const double r = 0.02;
    spec.strategy = Strategy::Unhedged;
    spec.ctx.r = r;
    const BacktestResult un = run_backtest(in, d0, d0 + std::chrono::days{9}, spec);
    for (std::size_t i = 0; i < un.pnl.size(); ++i) {
        EXPECT_NEAR(un.pnl[i], un.premium[i] * std::exp(r * 60.0 / 365.0), 1e-9);
    }
}

TEST(Backtest, SingleDaySegmentAndSkips) {
    const BacktestInput in = history(std::vector<double>(70, 100.0), 0.5, {BsParams{0.5}, 0.0, 100.0});
    BacktestSpec spec;
    const Date d0 = in.prices.front().date;
    EXPECT_EQ(run_backtest(in, d0, d0, spec).pnl.size(), 1u);
    const BacktestResult res = run_backtest(in, d0, d0 + std::chrono::days{20}, spec);
    EXPECT_EQ(res.pnl.size(), 10u);   // the last 11 days lack 60 days of history
    EXPECT_EQ(res.skipped.size(), 11u);
    BacktestInput gap = in;
    gap.surfaces.erase(d0 + std::chrono::days{1});
    EXPECT_EQ(run_backtest(gap, d0, d0 + std::chrono::days{2}, spec).pnl.size(), 2u);
}

TEST(Backtest, CompleteMarketDeltaHedgeIsUnbiased) {
    // Synthetic GBM history with the hedge model equal to the true law.
    const double sigma = 0.6;
    std::mt19937_64 rng(77);
    std::normal_distribution<double> z;
    std::vector<double> closes{8000.0};
    for (int i = 0; i < 120; ++i) {
        const double dt = 1.0 / 365.0;
        closes.push_back(closes.back() * std::exp(-0.5 * sigma * sigma * dt + sigma * std::sqrt(dt) * z(rng)));
    }
    const BacktestInput in = history(closes, sigma, {BsParams{sigma}, 0.0, 8000.0});
    BacktestSpec spec;
    const Date d0 = in.prices.front().date;
    const BacktestResult res = run_backtest(in, d0, d0 + std::chrono::days{59}, spec);
    ASSERT_EQ(res.rel_pnl.size(), 60u);
    const double mean = std::accumulate(res.rel_pnl.begin(), res.rel_pnl.end(), 0.0) / 60.0;
    EXPECT_LT(std::abs(mean), 3.0 * hedge_error(res.rel_pnl) / 100.0 / std::sqrt(60.0));
}

TEST(Backtest, RejectsGappedHistory) {
    BacktestInput in = history(std::vector<double>(70, 100.0), 0.5, {BsParams{0.5}, 0.0, 100.0});
    in.prices.erase(in.prices.begin() + 5);
    EXPECT_THROW(run_backtest(in, in.prices.front().date, in.prices.front().date, {}), DomainError);
}
