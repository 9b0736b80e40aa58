// Acceptance run: one PASS/FAIL line per criterion, tolerances fixed below.
// Exit status is the number of failed criteria.

#include "cchedge/analytics.hpp"
#include "cchedge/calibration.hpp"
#include "cchedge/hedging.hpp"
#include "cchedge/scenarios.hpp"
#include "cchedge/vol_surface.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace cchedge;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

// Calm-segment calibrations from the published parameter table.
const SvParams kSvCalm{1.60, 1.10, 0.68, 0.17, 0.35};
const SvcjParams kSvcjCalm{{0.75, 0.38, 0.83, 0.28, 0.30}, 0.85, -0.30, 0.0, 0.99, 0.0};

// --- 1 ---------------------------------------------------------------------
Outcome pricing_oracle() {
    const auto t0 = Clock::now();
    double worst = 0.0;
    for (double sigma : {0.2, 0.68, 0.84}) {
        for (double tau : {1.0 / 12.0, 0.25, 1.0}) {
            const ModelParams m{BsParams{sigma}, 0.0, 100.0};
            const CallCurve curve = carr_madan_curve(m, tau);
            for (int i = 0; i <= 60; ++i) {
                const double k = 50.0 * std::pow(4.0, i / 60.0);   // K / S0 from 0.5 to 2
                const double fft = curve.price(k, true);
                worst = std::max(worst, std::abs(fft - bs_price(sigma, 100.0, 0.0, {k, tau, true})));
            }
        }
    }
    const double t = seconds_since(t0);
    return {worst < 1e-4 && t < 5.0, fmt("max |FFT - BS| = %.2e (tol 1e-4), %.2f s (limit 5 s)", worst, t)};
}

// --- 2 ---------------------------------------------------------------------
Outcome martingale() {
    const auto t0 = Clock::now();
    const double s0 = 100.0, r = 0.03, tau = 0.5;
    const std::vector<ModelParams> models{
        {BsParams{0.68}, r, s0},
        {JdParams{0.42, 0.72, 0.0, 0.55}, r, s0},
        {kSvCalm, r, s0},
        {SvjParams{{1.28, 1.05, 0.68, 0.18, 0.33}, 0.37, 0.01, 0.2}, r, s0},
        {kSvcjCalm, r, s0},
        {VgParams{0.6, 0.25, -0.1}, r, s0},
        {CgmyParams{1.0, 5.0, 6.0, 0.5}, r, s0},
    };
    double chf_err = 0.0;
    for (const ModelParams& m : models) {
        const cplx phi = chf_eval(m, cplx(0.0, -1.0), tau);
        chf_err = std::max(chf_err, std::abs(phi / (s0 * std::exp(r * tau)) - 1.0));
    }
    const double t_mc = 30.0 / 365.0;
    const PathMatrix pm = simulate_svcj(kSvcjCalm, s0, r, 100000, 30, 1.0 / 365.0, 20240601);
    double mean = 0.0;
    for (std::size_t i = 0; i < pm.n_paths; ++i) mean += pm.price(i, pm.n_steps);
    mean /= static_cast<double>(pm.n_paths);
    const double mc_err = std::abs(std::exp(-r * t_mc) * mean / s0 - 1.0);
    const double t = seconds_since(t0);
    return {chf_err < 1e-8 && mc_err < 0.01 && t < 60.0,
            fmt("max |phi(-i)/(S0 e^rT) - 1| = %.2e over 7 models (tol 1e-8); SVCJ MC mean error %.3f%% (tol 1%%), "
                "%.1f s (limit 60 s)",
                chf_err, 100.0 * mc_err, t)};
}

// --- 3 ---------------------------------------------------------------------
Outcome vg_duality() {
    double worst = 0.0;
    for (const VgParams& vg : {VgParams{0.6, 0.25, -0.1}, VgParams{0.3, 0.5, 0.05}, VgParams{0.9, 0.1, -0.3}}) {
        const CgmTriple c = vg_to_cgm(vg);
        const ModelParams a{vg, 0.01, 100.0}, b{CgmyParams{c.c, c.g, c.m, 0.0}, 0.01, 100.0};
        for (double tau : {1.0 / 12.0, 0.5}) {
            for (double k : {70.0, 90.0, 100.0, 110.0, 140.0}) {
                const OptionSpec spec{k, tau, true};
                worst = std::max(worst, std::abs(carr_madan_price(a, spec) - carr_madan_price(b, spec)));
            }
        }
    }
    return {worst < 1e-8, fmt("max |C_VG - C_CGM| = %.2e (tol 1e-8)", worst)};
}

// --- 4 ---------------------------------------------------------------------
Outcome svi_round_trip() {
    const std::vector<SviSlice> published = {
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
    double worst_rmse = 0.0;
    int butterfly_fail = 0;
    for (const SviSlice& s : published) {
        std::vector<SviQuote> q;
        for (int i = 0; i <= 20; ++i) {
            const double k = s.m - 0.5 + 0.05 * i;
            q.push_back({k, svi_total_variance(k, s)});
        }
        const SviFitResult fit = fit_svi_slice(q, s.tau);
        worst_rmse = std::max(worst_rmse, fit.rmse);
        if (!butterfly_check(fit.slice).pass) ++butterfly_fail;
    }
    SviSurface bullish;
    bullish.f0 = 4088.16;
    bullish.slices = {published[1], published[2], published[3], published[4], published[5]};
    const double atm = interp_price(bullish, {4088.16, 30.0 / 365.0, true}, 0.0);
    const double rel = std::abs(atm / 206.38 - 1.0);
    return {worst_rmse < 1e-6 && butterfly_fail == 0 && rel < 0.10,
            fmt("18 slices: max refit RMSE %.2e (tol 1e-6), %d butterfly failures; bullish 1M ATM %.2f vs 206.38 "
                "(%.1f%%, tol 10%%)",
                worst_rmse, butterfly_fail, atm, 100.0 * rel)};
}

// --- 5 ---------------------------------------------------------------------
Outcome calibration_consistency() {
    const auto t0 = Clock::now();
    const ModelParams truth{kSvCalm, 0.0, 100.0};
    CalibData d;
    d.s0 = 100.0;
    for (int day : {30, 61, 91, 182}) {
        const double tau = day / 365.0;
        const CallCurve curve = carr_madan_curve(truth, tau);
        for (int i = -3; i <= 3; ++i) {
            const double k = 100.0 * std::exp(0.1 * i * std::sqrt(tau / 0.25));
            const OptionSpec spec{k, tau, true};
            d.quotes.push_back({k, tau, true, implied_vol(curve.price(k, true), 100.0, 0.0, spec)});
        }
    }
    const CalibResult bs = calibrate(ModelFamily::BS, d, default_calib_config(ModelFamily::BS));
    const CalibResult sv = calibrate(ModelFamily::SV, d, default_calib_config(ModelFamily::SV));
    CalibConfig cc = default_calib_config(ModelFamily::SVCJ);
    cc.start = nested_start(ModelFamily::SVCJ, sv.params, cc);
    const CalibResult svcj = calibrate(ModelFamily::SVCJ, d, cc);
    const bool ordered = bs.rmse >= sv.rmse && sv.rmse >= svcj.rmse;
    return {sv.rmse < 5e-3 && ordered,
            fmt("RMSE BS %.2e >= SV %.2e >= SVCJ %.2e: %s; SV RMSE tol 5e-3, %.0f s", bs.rmse, sv.rmse, svcj.rmse,
                ordered ? "yes" : "no", seconds_since(t0))};
}

// --- 6 ---------------------------------------------------------------------
Outcome complete_market() {
    const auto t0 = Clock::now();
    const double sigma = 0.68;
    const SvcjParams bs_world{{0.0, sigma * sigma, 0.0, 0.0, sigma * sigma}, 0.0, 0.0, 0.0, 0.0, 0.0};
    const PathMatrix pm = simulate_svcj(bs_world, 100.0, 0.0, 10000, 120, 1.0 / 1460.0, 77);
    HedgeSpec spec;
    spec.hedge_model = {BsParams{sigma}, 0.0, 100.0};
    spec.target = {100.0, 30.0 / 365.0, true};
    spec.rebalance_every = 4;
    const HedgeRun daily = run_hedge_experiment(pm, spec, {});
    spec.rebalance_every = 1;
    const HedgeRun fine = run_hedge_experiment(pm, spec, {});
    const auto& x = daily.rel_pnl;
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
    const double se = hedge_error(x) / 100.0 / std::sqrt(static_cast<double>(x.size()));
    const double ratio = hedge_error(x) / hedge_error(fine.rel_pnl);
    const double t = seconds_since(t0);
    return {std::abs(mean) < 3.0 * se && ratio >= 1.7 && ratio <= 2.3 && t < 120.0,
            fmt("|mean rel P&L| = %.2e vs 3 SE = %.2e; error daily/4x daily = %.3f (band [1.7, 2.3]); %.1f s "
                "(limit 120 s)",
                std::abs(mean), 3.0 * se, ratio, t)};
}

// --- 7 ---------------------------------------------------------------------
Outcome construction_identities() {
    const PathMatrix pm = simulate_svcj(kSvcjCalm, 8000.0, 0.0, 300, 30, 1.0 / 365.0, 5);
    double greek = 0.0, sf = 0.0;
    for (Strategy s : {Strategy::DeltaGamma, Strategy::DeltaVega}) {
        for (const ModelDynamics& dyn : {ModelDynamics{BsParams{0.68}}, ModelDynamics{kSvCalm}}) {
            HedgeSpec spec;
            spec.strategy = s;
            spec.hedge_model = {dyn, 0.0, 8000.0};
            spec.target = {8000.0, 30.0 / 365.0, true};
            spec.second = default_second_instrument(spec.target);
            const HedgeRun run = run_hedge_experiment(pm, spec, {});
            greek = std::max(greek, run.max_book_greek);
            sf = std::max(sf, run.max_self_financing_error);
        }
    }
    return {greek < 1e-10 && sf < 1e-10,
            fmt("max neutralized book Greek %.2e (tol 1e-10), max self-financing error %.2e (tol 1e-10), BS and SV "
                "books",
                greek, sf)};
}

// --- 8 ---------------------------------------------------------------------
Outcome tail_reduction() {
    const auto t0 = Clock::now();
    constexpr int kSeeds = 20;
    constexpr std::size_t kPerSeed = 2000;
    const double s0 = 8000.0;
    const OptionSpec target{s0, 90.0 / 365.0, true};
    const ModelParams world{kSvcjCalm, 0.0, s0};
    const double premium = carr_madan_price(world, target);

    // Independent seeds, stacked so each hedge model builds its Greek tables once.
    PathMatrix all;
    all.n_paths = kPerSeed * kSeeds;
    all.n_steps = 90;
    all.dt = 1.0 / 365.0;
    all.generator = "svcj";
    for (int s = 0; s < kSeeds; ++s) {
        const PathMatrix p = simulate_svcj(kSvcjCalm, s0, 0.0, kPerSeed, 90, 1.0 / 365.0, 9000 + s);
        all.prices.insert(all.prices.end(), p.prices.begin(), p.prices.end());
        all.variances.insert(all.variances.end(), p.variances.begin(), p.variances.end());
        all.jump_counts.insert(all.jump_counts.end(), p.jump_counts.begin(), p.jump_counts.end());
    }
    HedgeContext ctx;
    ctx.premium = premium;   // both hedgers sell at the scenario model's price

    HedgeSpec sv;
    sv.strategy = Strategy::DeltaVega;
    sv.hedge_model = {kSvCalm, 0.0, s0};
    sv.target = target;
    sv.second = default_second_instrument(target);
    HedgeSpec bs;
    bs.hedge_model = {BsParams{implied_vol(premium, s0, 0.0, target)}, 0.0, s0};
    bs.target = target;
    const HedgeRun a = run_hedge_experiment(all, sv, ctx);
    const HedgeRun b = run_hedge_experiment(all, bs, ctx);

    int wins = 0;
    double worst_gap = 1e300;
    for (int s = 0; s < kSeeds; ++s) {
        const std::span<const double> x(a.rel_pnl.data() + s * kPerSeed, kPerSeed);
        const std::span<const double> y(b.rel_pnl.data() + s * kPerSeed, kPerSeed);
        const double gap = expected_shortfall(x, 0.05) - expected_shortfall(y, 0.05);
        wins += gap >= 0.0;
        worst_gap = std::min(worst_gap, gap);
    }
    return {wins >= 19,
            fmt("SV delta-vega ES5%% >= BS delta ES5%% in %d/%d seeds (need >= 19), smallest gap %.3f, %.0f s", wins,
                kSeeds, worst_gap, seconds_since(t0))};
}

// --- 9 ---------------------------------------------------------------------
Outcome metrics() {
    std::vector<double> hundred(100);
    std::iota(hundred.begin(), hundred.end(), 1.0);
    const double lo = expected_shortfall(hundred, 0.05), hi = expected_shortfall(hundred, 0.95);
    const std::vector<double> flat(7, 0.4);
    const double c = expected_shortfall(flat, 0.05);
    const bool hand = lo == 3.0 && hi == 97.5 && c == 0.4;

    std::mt19937_64 rng(2718);
    std::normal_distribution<double> z;
    std::vector<double> x(100000);
    for (double& v : x) v = z(rng);
    const boost::math::normal n01;
    const double exact = -boost::math::pdf(n01, boost::math::quantile(n01, 0.05)) / 0.05;
    const double es = expected_shortfall(x, 0.05);
    return {hand && std::abs(es - (-2.063)) <= 0.03,
            fmt("hand ES {1..100}: %.2f / %.2f (3 / 97.5), constant %.2f; N(0,1) ES5%% = %.4f (target -2.063 +- 0.03, "
                "closed form %.4f)",
                lo, hi, c, es, exact)};
}

// --- 10 --------------------------------------------------------------------
Outcome garch_kde() {
    // Returns from a known GARCH(1,1).
    const double omega = 1e-5, alpha = 0.1, beta = 0.85;
    std::mt19937_64 rng(31);
    std::normal_distribution<double> z;
    std::vector<double> ret(5000);
    double h = omega / (1.0 - alpha - beta);
    for (double& r : ret) {
        r = std::sqrt(h) * z(rng);
        h = omega + alpha * r * r + beta * h;
    }
    const GarchFit fit = fit_garch11(ret);
    auto within = [](double est, double truth) { return std::abs(est / truth - 1.0) <= 0.5; };
    const bool recovered = within(fit.omega, omega) && within(fit.alpha, alpha) && within(fit.beta, beta);

    const KdeSampler kde{fit.residuals, 0.2};
    double integral = 0.0;
    const double lo = -15.0, hi = 15.0, step = 1e-3;
    const int n = static_cast<int>(std::lround((hi - lo) / step));
    for (int i = 0; i <= n; ++i) {
        const double w = (i == 0 || i == n) ? 0.5 : 1.0;
        integral += w * kde_density(kde, lo + step * i);
    }
    integral *= step;

    const PathMatrix p1 = simulate_garch_kde(fit, kde, 8000.0, 5000, 90, 99);
    const PathMatrix p2 = simulate_garch_kde(fit, kde, 8000.0, 5000, 90, 99);
    const PathMatrix p3 = simulate_garch_kde_serial(fit, kde, 8000.0, 5000, 90, 99);
    const bool positive = std::all_of(p1.prices.begin(), p1.prices.end(), [](double s) { return s > 0.0; });
    const bool identical = p1.prices == p2.prices && p1.prices == p3.prices;
    return {std::abs(integral - 1.0) < 1e-6 && recovered && positive && identical,
            fmt("KDE integral - 1 = %.1e (tol 1e-6); GARCH (%.2e, %.3f, %.3f) vs (1e-5, 0.1, 0.85) within 50%%: %s; "
                "paths positive: %s; same seed bit-identical: %s",
                integral - 1.0, fit.omega, fit.alpha, fit.beta, recovered ? "yes" : "no", positive ? "yes" : "no",
                identical ? "yes" : "no")};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"pricing oracle", pricing_oracle},
        {"martingale checks", martingale},
        {"VG/CGM duality", vg_duality},
        {"SVI round trip", svi_round_trip},
        {"calibration self-consistency", calibration_consistency},
        {"complete-market hedging", complete_market},
        {"construction identities", construction_identities},
        {"tail reduction", tail_reduction},
        {"metrics", metrics},
        {"GARCH-KDE", garch_kde},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("[%s] %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                    o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed;
}
