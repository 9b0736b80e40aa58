#include "cchedge/errors.hpp"
#include "cchedge/vol_surface.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

using namespace cchedge;

namespace {

std::vector<SviQuote> synth(const SviSlice& s, double lo = -0.5, double hi = 0.5, int n = 21) {
    std::vector<SviQuote> q;
    for (int i = 0; i < n; ++i) {
        const double k = lo + (hi - lo) * i / (n - 1);
        q.push_back({k, svi_total_variance(k, s)});
    }
    return q;
}

// Published smiles at the start of the bullish segment, tau >= 1 week.
SviSurface bullish_surface() {
    SviSurface s;
    s.f0 = 4088.16;
    s.slices = {
        {0.003, 0.01, 0.15, 0.01, 0.17, 0.03},
        {0.01, 0.04, 0.00, -0.01, 0.08, 0.07},
        {0.02, 0.10, -0.11, -0.01, 0.45, 0.24},
        {0.01, 0.17, -0.02, 0.04, 0.77, 0.49},
        {0.14, 0.09, 0.00, 0.01, 0.93, 0.74},
    };
    return s;
}

}  // namespace

TEST(Svi, TotalVarianceExamples) {
    const SviSlice s{0.17, 0.10, 0.0, 0.0, 1.0, 0.01};
    EXPECT_NEAR(svi_total_variance(0.0, s), 0.27, 1e-15);
    const SviSlice flat{0.04, 0.0, 0.3, 0.1, 0.2, 1.0};
    for (double k : {-2.0, 0.0, 3.0}) EXPECT_DOUBLE_EQ(svi_total_variance(k, flat), 0.04);
    const SviSlice skew{0.02, 0.3, -0.4, 0.05, 0.2, 0.5};
    const double slope = (svi_total_variance(1e4 + 1.0, skew) - svi_total_variance(1e4, skew));
    EXPECT_NEAR(slope, 0.3 * (1.0 - 0.4), 1e-8);
}

TEST(Butterfly, FlatSlicePassesWithUnitG) {
    const SviSlice flat{0.04, 0.0, 0.0, 0.0, 0.1, 1.0};
    const ButterflyResult r = butterfly_check(flat);
    EXPECT_TRUE(r.pass);
    EXPECT_NEAR(r.min_g, 1.0, 1e-15);
}

TEST(Butterfly, SteepWingFailsAndCallPricesAreNotConvex) {
    const SviSlice s{0.04, 0.8, 0.0, 0.0, 0.1, 1.0};
    const ButterflyResult r = butterfly_check(s);
    EXPECT_FALSE(r.pass);
    EXPECT_LT(r.min_g, 0.0);
    // Independent check: undiscounted unit-forward calls from this smile violate convexity in K.
    double worst = 0.0;
    const double h = 1e-3;
    for (double k = -0.5; k <= 0.5; k += 0.005) {
        auto call = [&](double kk) {
            const double vol = std::sqrt(svi_total_variance(kk, s));
            return bs_price(vol, 1.0, 0.0, {std::exp(kk), 1.0, true});
        };
        const double kp = std::log(std::exp(k) + h), km = std::log(std::exp(k) - h);
        worst = std::min(worst, call(kp) - 2.0 * call(k) + call(km));
    }
    EXPECT_LT(worst, -1e-9);
}

TEST(Butterfly, PublishedSlicesAreArbitrageFree) {
    const std::vector<SviSlice> all = {
        {0.17, 0.10, 0.00, 0.00, 1.00, 0.01},   {0.003, 0.01, 0.15, 0.01, 0.17, 0.03},
        {0.01, 0.04, 0.00, -0.01, 0.08, 0.07},  {0.02, 0.10, -0.11, -0.01, 0.45, 0.24},
        {0.01, 0.17, -0.02, 0.04, 0.77, 0.49},  {0.14, 0.09, 0.00, 0.01, 0.93, 0.74},
        {0.001, 0.05, -0.13, 0.02, 0.08, 0.01}, {0.01, 0.05, -0.39, 0.01, 0.16, 0.03},
        {0.01, 0.10, -0.02, 0.12, 0.32, 0.07},  {0.06, 0.15, -0.50, -0.17, 0.54, 0.16},
        {0.04, 0.19, -0.27, -0.10, 0.76, 0.24}, {0.18, 0.21, 0.23, 0.38, 1.00, 0.49},
        {0.004, 0.02, 0.50, 0.02, 0.01, 0.02},  {0.003, 0.05, -0.07, -0.03, 0.11, 0.04},
        {0.01, 0.08, -0.09, -0.05, 0.15, 0.07}, {0.02, 0.13, 0.19, 0.07, 0.29, 0.15},
        {0.06, 0.20, -0.15, -0.21, 0.56, 0.40}, {0.14, 0.18, 0.16, -0.12, 0.88, 0.65},
    };
    for (const SviSlice& s : all) EXPECT_TRUE(butterfly_check(s).pass) << s.tau << " " << s.a;
}

TEST(SviFit, RecoversGeneratingSlice) {
    const SviSlice truth{0.01, 0.05, -0.39, 0.01, 0.16, 0.03};
    const SviFitResult fit = fit_svi_slice(synth(truth), truth.tau);
    EXPECT_LT(fit.rmse, 1e-8);
    EXPECT_TRUE(fit.arbitrage_free);
    EXPECT_NEAR(fit.slice.a, truth.a, 1e-6);
    EXPECT_NEAR(fit.slice.b, truth.b, 1e-6);
    EXPECT_NEAR(fit.slice.rho, truth.rho, 1e-6);
    EXPECT_NEAR(fit.slice.m, truth.m, 1e-6);
    EXPECT_NEAR(fit.slice.sigma, truth.sigma, 1e-6);
    EXPECT_TRUE(butterfly_check(fit.slice).pass);
}

TEST(SviFit, SkewedLongSlice) {
    const SviSlice truth{0.06, 0.20, -0.15, -0.21, 0.56, 0.40};
    const SviFitResult fit = fit_svi_slice(synth(truth, -0.8, 0.8, 31), truth.tau);
    EXPECT_LT(fit.rmse, 1e-8);
    EXPECT_TRUE(butterfly_check(fit.slice).pass);
}

TEST(SviFit, FlatQuotesGiveFlatSmile) {
    const double sigma = 0.68, tau = 0.25;
    std::vector<SviQuote> q;
    for (int i = -5; i <= 5; ++i) q.push_back({0.05 * i, sigma * sigma * tau});
    const SviFitResult fit = fit_svi_slice(q, tau);
    EXPECT_LT(fit.rmse, 1e-8);
    for (double k : {-0.25, 0.0, 0.25}) EXPECT_NEAR(svi_total_variance(k, fit.slice), sigma * sigma * tau, 1e-7);
    EXPECT_LT(fit.slice.b, 1e-3);
}

TEST(SviFit, NeedsFiveQuotes) {
    const std::vector<SviQuote> q{{-0.1, 0.01}, {0.0, 0.009}, {0.1, 0.01}, {0.2, 0.012}};
    EXPECT_THROW(fit_svi_slice(q, 0.1), DomainError);
}

TEST(SviFit, CalendarPenaltyKeepsSliceAbovePrevious) {
    const SviSlice prev{0.02, 0.10, -0.11, -0.01, 0.45, 0.24};
    // Quotes below the previous slice everywhere.
    SviSlice low = prev;
    low.a -= 0.01;
    low.tau = 0.3;
    const SviFitResult free = fit_svi_slice(synth(low), low.tau);
    const SviFitResult pen = fit_svi_slice(synth(low), low.tau, &prev);
    EXPECT_LT(atm_total_variance(free.slice), atm_total_variance(prev));
    EXPECT_GE(atm_total_variance(pen.slice), atm_total_variance(prev) - 1e-6);
    EXPECT_TRUE(butterfly_check(pen.slice).pass);
}

TEST(Interp, SliceMaturityReturnsSlicePrice) {
    const SviSurface s = bullish_surface();
    const SviSlice& sl = s.slices[1];
    const double k = 4300.0;
    const double vol = std::sqrt(svi_total_variance(std::log(k / s.f0), sl) / sl.tau);
    const double expected = bs_price(vol, s.f0, 0.0, {k, sl.tau, true});
    EXPECT_DOUBLE_EQ(interp_price(s, {k, sl.tau, true}, 0.0), expected);
    EXPECT_NEAR(implied_vol(interp_price(s, {k, sl.tau, true}, 0.0), s.f0, 0.0, {k, sl.tau, true}), vol, 1e-8);
}

TEST(Interp, BullishOneMonthAtmMatchesPublishedPrice) {
    const double p = interp_price(bullish_surface(), {4088.16, 30.0 / 365.0, true}, 0.0);
    EXPECT_NEAR(p, 206.38, 0.1 * 206.38);
}

TEST(Interp, EqualAtmVariancesGiveShorterSlicePrice) {
    SviSurface s;
    s.f0 = 100.0;
    s.slices = {{0.04, 0.0, 0.0, 0.0, 0.1, 0.1}, {0.04, 0.0, 0.0, 0.0, 0.1, 0.2}};
    const MaturityWeight w = maturity_weight(s, 0.15);
    EXPECT_DOUBLE_EQ(w.alpha, 1.0);
    EXPECT_DOUBLE_EQ(interp_price(s, {105.0, 0.15, true}, 0.0), interp_price(s, {105.0, 0.1, true}, 0.0));
}

TEST(Interp, WeightsInUnitIntervalAndMonotonePrices) {
    const SviSurface s = bullish_surface();
    s.validate();
    for (double t = 0.03; t <= 0.74; t += 0.01) {
        const MaturityWeight w = maturity_weight(s, t);
        EXPECT_GE(w.alpha, 0.0);
        EXPECT_LE(w.alpha, 1.0);
    }
    for (double k = 3000.0; k <= 5500.0; k += 250.0) {
        double prev = 0.0;
        for (double t = 0.03; t <= 0.74; t += 0.02) {
            const double p = interp_price(s, {k, t, true}, 0.0);
            EXPECT_GE(p, prev - 1e-9) << k << " " << t;
            prev = p;
        }
    }
    for (double t : {0.05, 0.1, 0.3, 0.6}) {
        double prev = 1e300;
        for (double k = 3000.0; k <= 5500.0; k += 50.0) {
            const double p = interp_price(s, {k, t, true}, 0.0);
            EXPECT_LE(p, prev + 1e-9);
            prev = p;
        }
    }
}

TEST(Interp, NoExtrapolation) {
    const SviSurface s = bullish_surface();
    EXPECT_THROW(interp_price(s, {4000.0, 0.01, true}, 0.0), DomainError);
    EXPECT_THROW(interp_price(s, {4000.0, 1.0, true}, 0.0), DomainError);
}

TEST(Quotes, DedupKeepsHighestVolume) {
    const Date d = parse_iso_date("2020-01-02");
    const Date e = parse_iso_date("2020-02-28");
    std::vector<QuoteRow> rows{{d, e, 9000.0, OptionType::Call, 0.7, 3.0, 8800.0},
                               {d, e, 9000.0, OptionType::Call, 0.8, 5.0, 8800.0},
                               {d, e, 9000.0, OptionType::Put, 0.75, 1.0, 8800.0}};
    const auto out = dedup_quotes(rows);
    ASSERT_EQ(out.size(), 2u);
    for (const QuoteRow& q : out) {
        if (q.type == OptionType::Call) EXPECT_DOUBLE_EQ(q.iv, 0.8);
    }
}

TEST(Surface, BuildsFromQuotesAndDropsShortMaturities) {
    const Date d = parse_iso_date("2020-01-02");
    const std::vector<std::pair<int, SviSlice>> truth = {
        {3, {0.004, 0.02, 0.0, 0.0, 0.05, 3.0 / 365.0}},
        {28, {0.01, 0.05, -0.2, 0.0, 0.16, 28.0 / 365.0}},
        {91, {0.04, 0.12, -0.2, 0.0, 0.4, 91.0 / 365.0}},
        {182, {0.09, 0.18, -0.2, 0.0, 0.6, 182.0 / 365.0}},
    };
    std::vector<QuoteRow> rows;
    const double spot = 7200.0;
    for (const auto& [days, sl] : truth) {
        for (int i = -8; i <= 8; ++i) {
            const double k = 0.05 * i;
            const double iv = std::sqrt(svi_total_variance(k, sl) / sl.tau);
            rows.push_back({d, d + std::chrono::days{days}, spot * std::exp(k),
                            i < 0 ? OptionType::Put : OptionType::Call, iv, 1.0, spot});
        }
    }
    const SviSurface s = build_surface(rows);
    ASSERT_EQ(s.slices.size(), 3u);
    EXPECT_NEAR(s.slices[0].tau, 28.0 / 365.0, 1e-15);
    s.validate();
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_NEAR(atm_total_variance(s.slices[i]), atm_total_variance(truth[i + 1].second), 1e-8);
    }
}

TEST(Dates, IsoParsing) {
    EXPECT_EQ(format_iso_date(parse_iso_date("2021-03-31")), "2021-03-31");
    EXPECT_THROW(parse_iso_date("2021-02-30"), ParseError);
    EXPECT_THROW(parse_iso_date("03/31/2021"), ParseError);
    EXPECT_NEAR(year_fraction(parse_iso_date("2021-01-01"), parse_iso_date("2021-03-02")), 60.0 / 365.0, 1e-15);
}
