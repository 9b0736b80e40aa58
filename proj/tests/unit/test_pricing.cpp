#include "cchedge/errors.hpp"
#include "cchedge/pricing.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

using namespace cchedge;

namespace {

ModelParams bs(double sigma, double s0 = 100.0, double r = 0.0) { return {BsParams{sigma}, r, s0}; }

std::vector<ModelParams> calibrated_like(double s0) {
    return {
        bs(0.68, s0, 0.01),
        {JdParams{0.42, 0.72, -0.05, 0.25}, 0.01, s0},
        {SvParams{1.60, 1.10, 0.68, 0.17, 0.35}, 0.01, s0},
        {SvjParams{{1.28, 1.05, 0.68, 0.18, 0.33}, 0.37, 0.01, 0.05}, 0.01, s0},
        {SvcjParams{{0.75, 0.38, 0.83, 0.28, 0.30}, 0.85, -0.04, 0.05, 0.45, 0.0}, 0.01, s0},
        {VgParams{0.7, 0.3, -0.1}, 0.01, s0},
        {CgmyParams{1.5, 4.0, 6.0, 0.5}, 0.01, s0},
    };
}

}  // namespace

TEST(CarrMadan, BlackScholesAtTheMoney) {
    const double p = carr_madan_price(bs(0.2), {100.0, 1.0, true});
    EXPECT_NEAR(p, 7.9656, 1e-4);
    EXPECT_NEAR(p, bs_price(0.2, 100.0, 0.0, {100.0, 1.0, true}), 1e-4);
}

TEST(CarrMadan, DeepInTheMoneyIsForwardIntrinsic) {
    // K = 1e-6 S0 sits at k = -13.8, so widen the log-strike grid.
    FftConfig cfg;
    cfg.eta = 0.125;
    const ModelParams m = bs(0.84, 100.0, 0.02);
    const double k = 1e-6 * 100.0;
    const double p = carr_madan_price(m, {k, 0.5, true}, cfg);
    const double expected = 100.0 - k * std::exp(-0.02 * 0.5);
    EXPECT_NEAR(p / expected, 1.0, 1e-6);
}

TEST(CarrMadan, StrikeOutsideGridIsConfigError) {
    EXPECT_THROW(carr_madan_price(bs(0.2), {1e-6 * 100.0, 1.0, true}), ConfigError);
    EXPECT_THROW(carr_madan_price(bs(0.2), {1e8, 1.0, true}), ConfigError);
}

TEST(CarrMadan, VgAndCgmFormsPriceIdentically) {
    const VgParams vg{0.2, 0.5, 0.1};
    const CgmTriple t = vg_to_cgm(vg);
    const ModelParams a{vg, 0.01, 100.0};
    const ModelParams b{CgmyParams{t.c, t.g, t.m, 0.0}, 0.01, 100.0};
    for (double k : {70.0, 90.0, 100.0, 115.0, 150.0}) {
        for (double tau : {1.0 / 12.0, 0.5}) {
            EXPECT_NEAR(carr_madan_price(a, {k, tau, true}), carr_madan_price(b, {k, tau, true}), 1e-8);
        }
    }
}

TEST(CarrMadan, IndependentPutMatchesParity) {
    // Price puts directly with the put-damped transform on the whole grid.
    for (const ModelParams& m : calibrated_like(1.0)) {
        const double tau = 0.25;
        const FftConfig cfg;
        const CarrMadanGrid grid(cfg);
        const Damping d = damping_for(m, cfg);
        auto exps = [&](double alpha) {
            std::vector<cplx> u = grid.arguments(alpha);
            for (cplx& z : u) z = std::log(chf_eval(m, z, tau));
            return u;
        };
        const std::vector<double> puts = grid.transform(exps(d.put), d.put, m.r, tau);
        const std::vector<double> calls = grid.transform(exps(d.call), d.call, m.r, tau);
        for (std::size_t j = 0; j < grid.size(); ++j) {
            const double k = grid.log_moneyness(j);
            if (std::abs(k) > 0.5) continue;
            const double parity = calls[j] - 1.0 + std::exp(k - m.r * tau);
            EXPECT_NEAR(puts[j], parity, 1e-8) << to_string(m.family()) << " k=" << k;
        }
    }
}

TEST(CarrMadan, MonotoneAndConvexInStrike) {
    for (const ModelParams& m : calibrated_like(100.0)) {
        for (double tau : {30.0 / 365.0, 90.0 / 365.0}) {
            const CallCurve curve = carr_madan_curve(m, tau);
            double prev = curve.price(40.0, true);
            std::vector<double> prices{prev};
            for (double k = 41.0; k <= 250.0; k += 1.0) {
                const double p = curve.price(k, true);
                EXPECT_LE(p, prev + 1e-10) << to_string(m.family());
                prices.push_back(p);
                prev = p;
            }
            for (std::size_t i = 1; i + 1 < prices.size(); ++i) {
                EXPECT_GE(prices[i - 1] - 2.0 * prices[i] + prices[i + 1], -1e-8 * 100.0)
                    << to_string(m.family());
            }
        }
    }
}

TEST(CarrMadan, IncreasingInMaturity) {
    for (const ModelParams& m : calibrated_like(100.0)) {
        for (double k : {80.0, 100.0, 125.0}) {
            double prev = 0.0;
            for (double tau : {7.0 / 365.0, 30.0 / 365.0, 60.0 / 365.0, 90.0 / 365.0, 0.75}) {
                const double p = carr_madan_price(m, {k, tau, true});
                EXPECT_GT(p, prev) << to_string(m.family());
                prev = p;
            }
        }
    }
}

TEST(BlackScholes, AtTheMoneyForwardClosedForm) {
    const double sigma = 0.84, t = 0.5;
    const double expected = 100.0 * (2.0 * normal_cdf(0.5 * sigma * std::sqrt(t)) - 1.0);
    EXPECT_NEAR(bs_price(sigma, 100.0, 0.0, {100.0, t, true}), expected, 1e-12);
}

TEST(BlackScholes, SmallVolatilityLimit) {
    const OptionSpec spec{80.0, 0.5, true};
    EXPECT_NEAR(bs_price(1e-6, 100.0, 0.03, spec), 100.0 - 80.0 * std::exp(-0.015), 1e-10);
    EXPECT_NEAR(bs_greeks(1e-6, 100.0, 0.03, spec).delta, 1.0, 1e-12);
}

TEST(BlackScholes, GreeksSignsAndDelta) {
    const Greeks g = bs_greeks(0.2, 100.0, 0.0, {100.0, 1.0, true});
    EXPECT_NEAR(g.delta, 0.539827837277029, 1e-12);
    EXPECT_GT(g.gamma, 0.0);
    EXPECT_GT(g.vega, 0.0);
    EXPECT_THROW(bs_price(0.0, 100.0, 0.0, {100.0, 1.0, true}), DomainError);
}

TEST(ImpliedVol, RoundTrips) {
    for (double k : {60.0, 100.0, 160.0}) {
        for (bool call : {true, false}) {
            const OptionSpec spec{k, 0.25, call};
            const double p = bs_price(0.84, 100.0, 0.02, spec);
            const double iv = implied_vol(p, 100.0, 0.02, spec);
            EXPECT_NEAR(iv, 0.84, 1e-8);
            EXPECT_NEAR(bs_price(iv, 100.0, 0.02, spec), p, 1e-10);
        }
    }
}

TEST(ImpliedVol, FromFftPrice) {
    const OptionSpec spec{110.0, 0.25, true};
    const double p = carr_madan_price(bs(0.65), spec);
    EXPECT_NEAR(implied_vol(p, 100.0, 0.0, spec), 0.65, 1e-4);
}

TEST(ImpliedVol, OutOfBandIsError) {
    const OptionSpec spec{80.0, 0.5, true};
    const double lower = 100.0 - 80.0 * std::exp(-0.01 * 0.5);
    EXPECT_THROW(implied_vol(lower, 100.0, 0.01, spec), DomainError);
    EXPECT_THROW(implied_vol(100.0, 100.0, 0.01, spec), DomainError);
}

TEST(FdGreeks, MatchAnalyticUnderBlackScholes) {
    for (double k : {80.0, 100.0, 120.0}) {
        const OptionSpec spec{k, 0.25, true};
        const Greeks fd = fd_greeks(bs(0.68), spec);
        const Greeks an = bs_greeks(0.68, 100.0, 0.0, spec);
        EXPECT_NEAR(fd.delta, an.delta, 1e-4);
        EXPECT_NEAR(fd.gamma, an.gamma, 1e-4);
        EXPECT_NEAR(fd.vega, an.vega, 1e-4 * std::max(1.0, an.vega));
    }
}

TEST(FdGreeks, ForwardHasNoGamma) {
    FftConfig cfg;
    cfg.eta = 0.125;
    const Greeks g = fd_greeks(bs(0.4), {std::exp(-10.0) * 100.0, 0.5, true}, cfg);
    EXPECT_NEAR(g.gamma, 0.0, 1e-6);
    EXPECT_NEAR(g.delta, 1.0, 1e-6);
}

TEST(FdGreeks, SvAtTheMoneyDeltaBand) {
    const ModelParams sv{SvParams{1.6, 1.10, 0.68, 0.0, 0.35}, 0.0, 100.0};
    const Greeks g = fd_greeks(sv, {100.0, 30.0 / 365.0, true});
    EXPECT_GT(g.delta, 0.4);
    EXPECT_LT(g.delta, 0.7);
    EXPECT_GT(g.vega, 0.0);
}

TEST(FdGreeks, DeltaInUnitIntervalOnFilteredBand) {
    for (const ModelParams& m : calibrated_like(100.0)) {
        for (double k : {85.0, 100.0, 115.0}) {
            const Greeks g = fd_greeks(m, {k, 60.0 / 365.0, true});
            EXPECT_GE(g.delta, 0.0) << to_string(m.family());
            EXPECT_LE(g.delta, 1.0) << to_string(m.family());
        }
    }
}

TEST(FdGreeks, BumpUnderflowIsError) {
    BumpSizes b;
    b.spot = 1e-9;
    EXPECT_THROW(fd_greeks(bs(0.2), {100.0, 1.0, true}, {}, b), DomainError);
}
