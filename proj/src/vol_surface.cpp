#include "cchedge/vol_surface.hpp"

#include "cchedge/optimize.hpp"

#include <gsl/gsl_multifit.h>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <map>
#include <memory>

namespace cchedge {

namespace {

constexpr double kGFloor = 1e-8;

void require(bool ok, const char* what) {
    if (!ok) throw DomainError(what);
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    return x;
}

// Linear least squares for (a, b rho, b) at fixed (m, sigma).
struct InnerSolver {
    std::span<const SviQuote> quotes;
    gsl_matrix* X;
    gsl_vector* y;
    gsl_vector* c;
    gsl_matrix* cov;
    gsl_multifit_linear_workspace* ws;

    explicit InnerSolver(std::span<const SviQuote> q) : quotes(q) {
        const std::size_t n = q.size();
        X = gsl_matrix_alloc(n, 3);
        y = gsl_vector_alloc(n);
        c = gsl_vector_alloc(3);
        cov = gsl_matrix_alloc(3, 3);
        ws = gsl_multifit_linear_alloc(n, 3);
        for (std::size_t i = 0; i < n; ++i) gsl_vector_set(y, i, q[i].w);
    }
    ~InnerSolver() {
        gsl_matrix_free(X);
        gsl_vector_free(y);
        gsl_vector_free(c);
        gsl_matrix_free(cov);
        gsl_multifit_linear_free(ws);
    }
    InnerSolver(const InnerSolver&) = delete;
    InnerSolver& operator=(const InnerSolver&) = delete;

    SviSlice solve(double m, double sigma, double tau) {
        for (std::size_t i = 0; i < quotes.size(); ++i) {
            const double x = quotes[i].k - m;
            gsl_matrix_set(X, i, 0, 1.0);
            gsl_matrix_set(X, i, 1, x);
            gsl_matrix_set(X, i, 2, std::sqrt(x * x + sigma * sigma));
        }
        double chisq;
        gsl_multifit_linear(X, y, c, cov, &chisq, ws);
        SviSlice s{gsl_vector_get(c, 0), gsl_vector_get(c, 2), 0.0, m, sigma, tau};
        if (s.b > 0.0) s.rho = gsl_vector_get(c, 1) / s.b;
        return s;
    }
};

}  // namespace

void SviSlice::validate() const {
    require(b >= 0.0, "SVI: b must be >= 0");
    require(std::abs(rho) <= 1.0, "SVI: |rho| must be <= 1");
    require(sigma > 0.0, "SVI: sigma must be > 0");
    require(tau > 0.0, "SVI: tau must be > 0");
    require(a + b * sigma * std::sqrt(1.0 - rho * rho) >= -1e-14, "SVI: minimum total variance is negative");
}

double svi_total_variance(double k, const SviSlice& s) {
    const double x = k - s.m;
    return s.a + s.b * (s.rho * x + std::sqrt(x * x + s.sigma * s.sigma));
}

SviDerivatives svi_derivatives(double k, const SviSlice& s) {
    const double x = k - s.m;
    const double root = std::sqrt(x * x + s.sigma * s.sigma);
    return {s.a + s.b * (s.rho * x + root), s.b * (s.rho + x / root),
            s.b * s.sigma * s.sigma / (root * root * root)};
}

double svi_g(double k, const SviSlice& s) {
    const SviDerivatives d = svi_derivatives(k, s);
    if (!(d.w > 0.0)) return -1.0 - std::abs(d.w);
    const double t = 1.0 - k * d.dw / (2.0 * d.w);
    return t * t - 0.25 * d.dw * d.dw * (1.0 / d.w + 0.25) + 0.5 * d.d2w;
}

ButterflyResult butterfly_check(const SviSlice& s) {
    double min_g = std::numeric_limits<double>::infinity();
    for (double k : linspace(s.m - 5.0 * s.sigma, s.m + 5.0 * s.sigma, 401)) min_g = std::min(min_g, svi_g(k, s));
    return {min_g >= -1e-10, min_g};
}

SviFitResult fit_svi_slice(std::span<const SviQuote> quotes, double tau, const SviSlice* prev,
                           const SviFitOptions& opts) {
    if (quotes.size() < 5) throw DomainError("fit_svi_slice: under-determined, need at least 5 quotes");
    require(tau > 0.0, "fit_svi_slice: tau must be > 0");
    double k_lo = quotes[0].k, k_hi = quotes[0].k, w_max = 0.0;
    for (const SviQuote& q : quotes) {
        require(std::isfinite(q.k) && std::isfinite(q.w) && q.w >= 0.0, "fit_svi_slice: bad quote");
        k_lo = std::min(k_lo, q.k);
        k_hi = std::max(k_hi, q.k);
        w_max = std::max(w_max, q.w);
    }
    const std::vector<double> grid = linspace(k_lo - 1.0, k_hi + 1.0, 101);
    std::vector<double> prev_w;
    if (prev != nullptr) {
        for (double k : grid) prev_w.push_back(svi_total_variance(k, *prev));
    }

    auto rmse = [&](const SviSlice& s) {
        double sse = 0.0;
        for (const SviQuote& q : quotes) {
            const double e = svi_total_variance(q.k, s) - q.w;
            sse += e * e;
        }
        return std::sqrt(sse / static_cast<double>(quotes.size()));
    };
    // Exact (linear) penalties so the optimum sits on the constraint, not near it.
    auto penalty = [&](const SviSlice& s) {
        double p = 0.0;
        p += std::max(0.0, -s.b);
        p += std::max(0.0, std::abs(s.rho) - 1.0);
        if (!(s.sigma > 0.0)) return 1e6;
        const double rho = std::clamp(s.rho, -1.0, 1.0);
        p += std::max(0.0, -(s.a + s.b * s.sigma * std::sqrt(1.0 - rho * rho)));
        if (s.b > 0.0 && std::abs(s.rho) <= 1.0) {
            double g_pen = 0.0;
            for (double k : grid) g_pen += std::max(0.0, kGFloor - svi_g(k, s));
            for (double k : linspace(s.m - 5.0 * s.sigma, s.m + 5.0 * s.sigma, 101)) {
                g_pen += std::max(0.0, kGFloor - svi_g(k, s));
            }
            p += g_pen / 202.0;
        }
        for (std::size_t i = 0; i < prev_w.size(); ++i) {
            p += std::max(0.0, prev_w[i] - svi_total_variance(grid[i], s)) / static_cast<double>(grid.size());
        }
        return opts.penalty_weight * p;
    };
    auto objective = [&](const SviSlice& s) { return rmse(s) + penalty(s); };

    InnerSolver inner(quotes);
    auto reduced = [&](std::span<const double> z) {
        return objective(inner.solve(z[0], std::exp(z[1]), tau));
    };
    const double span = std::max(k_hi - k_lo, 0.1);
    const std::vector<double> lo{k_lo - 0.25 * span, std::log(1e-3)};
    const std::vector<double> hi{k_hi + 0.25 * span, std::log(2.0)};
    NelderMeadOptions nm;
    nm.size_tol = 1e-12;
    nm.max_iter = 4000;
    nm.step = {0.05 * span, 0.3};

    SviSlice best{};
    double best_f = std::numeric_limits<double>::infinity();
    for (const auto& start : sobol_points(lo, hi, std::max<std::size_t>(opts.n_starts, 1))) {
        const OptimResult r = nelder_mead(reduced, start, nm);
        if (r.f < best_f) {
            best_f = r.f;
            best = inner.solve(r.x[0], std::exp(r.x[1]), tau);
        }
    }

    // Full five-parameter polish: the linear solve above ignores the penalties.
    auto full = [&](std::span<const double> z) {
        return objective(SviSlice{z[0], z[1], z[2], z[3], z[4], tau});
    };
    NelderMeadOptions nm5;
    nm5.size_tol = 1e-13;
    nm5.max_iter = 20000;
    nm5.step = {0.05 * std::max(w_max, 1e-4), 0.05 * std::max(best.b, 1e-3), 0.05, 0.02 * span,
                0.05 * best.sigma};
    for (int round = 0; round < 3; ++round) {
        const OptimResult r = nelder_mead(full, {best.a, best.b, best.rho, best.m, best.sigma}, nm5);
        if (!(r.f < best_f)) break;
        best_f = r.f;
        best = SviSlice{r.x[0], r.x[1], r.x[2], r.x[3], r.x[4], tau};
    }

    SviFitResult out;
    out.slice = best;
    out.rmse = rmse(best);
    out.penalty = penalty(best);
    bool valid = true;
    try {
        best.validate();
    } catch (const DomainError&) {
        valid = false;
    }
    out.arbitrage_free = valid && butterfly_check(best).pass;
    if (!out.arbitrage_free) {
        throw SviInfeasibleError("fit_svi_slice: no arbitrage-free slice found", out);
    }
    return out;
}

void SviSurface::validate() const {
    require(f0 > 0.0, "SviSurface: f0 must be > 0");
    require(!slices.empty(), "SviSurface: no slices");
    for (std::size_t i = 0; i < slices.size(); ++i) {
        slices[i].validate();
        if (i == 0) continue;
        require(slices[i].tau > slices[i - 1].tau, "SviSurface: maturities must be strictly increasing");
        require(atm_total_variance(slices[i]) >= atm_total_variance(slices[i - 1]) - 1e-12,
                "SviSurface: ATM total variance decreases in maturity");
    }
}

double atm_total_variance(const SviSlice& s) { return svi_total_variance(0.0, s); }

double slice_implied_vol(const SviSlice& s, double f0, double r, double strike) {
    require(strike > 0.0, "slice_implied_vol: strike must be > 0");
    const double k = std::log(strike / f0) - r * s.tau;
    const double w = svi_total_variance(k, s);
    return std::sqrt(std::max(w, 0.0) / s.tau);
}

MaturityWeight maturity_weight(const SviSurface& surface, double tau) {
    const auto& sl = surface.slices;
    require(!sl.empty(), "interp_price: empty surface");
    if (!(tau >= sl.front().tau && tau <= sl.back().tau)) {
        throw DomainError("interp_price: maturity outside the slice range (no extrapolation)");
    }
    for (std::size_t i = 0; i < sl.size(); ++i) {
        if (tau == sl[i].tau) return {i, i, 1.0};
    }
    std::size_t hi = 1;
    while (sl[hi].tau < tau) ++hi;
    const std::size_t lo = hi - 1;
    const double th1 = atm_total_variance(sl[lo]);
    const double th2 = atm_total_variance(sl[hi]);
    const double th = th1 + (th2 - th1) * (tau - sl[lo].tau) / (sl[hi].tau - sl[lo].tau);
    const double denom = std::sqrt(th2) - std::sqrt(th1);
    double alpha = 1.0;
    if (std::abs(denom) > 1e-14) alpha = (std::sqrt(th2) - std::sqrt(th)) / denom;
    if (!(alpha >= -1e-12 && alpha <= 1.0 + 1e-12)) throw NumericError("interp_price: alpha_T outside [0, 1]");
    return {lo, hi, std::clamp(alpha, 0.0, 1.0)};
}

double interp_price(const SviSurface& surface, const OptionSpec& spec, double r) {
    spec.validate();
    const MaturityWeight mw = maturity_weight(surface, spec.expiry);
    auto slice_price = [&](const SviSlice& s) {
        const double vol = std::max(slice_implied_vol(s, surface.f0, r, spec.strike), 1e-8);
        return bs_price(vol, surface.f0, r, {spec.strike, s.tau, spec.is_call});
    };
    const double c1 = slice_price(surface.slices[mw.lo]);
    if (mw.lo == mw.hi) return c1;
    return mw.alpha * c1 + (1.0 - mw.alpha) * slice_price(surface.slices[mw.hi]);
}

void QuoteRow::validate() const {
    require(strike > 0.0, "quote: strike must be > 0");
    require(iv > 0.0, "quote: iv must be > 0");
    require(volume >= 0.0, "quote: volume must be >= 0");
    require(underlying > 0.0, "quote: underlying must be > 0");
    require(expiry > date, "quote: expiry must follow the quote date");
}

std::vector<QuoteRow> dedup_quotes(std::span<const QuoteRow> rows) {
    std::map<std::tuple<Date, Date, double, OptionType>, QuoteRow> best;
    for (const QuoteRow& q : rows) {
        const auto key = std::make_tuple(q.date, q.expiry, q.strike, q.type);
        auto it = best.find(key);
        if (it == best.end() || q.volume > it->second.volume) best[key] = q;
    }
    std::vector<QuoteRow> out;
    out.reserve(best.size());
    for (auto& [key, q] : best) out.push_back(q);
    return out;
}

SviSurface build_surface(std::span<const QuoteRow> quotes, const SurfaceBuildOptions& opts) {
    if (quotes.empty()) throw DomainError("build_surface: no quotes");
    SviSurface surface;
    surface.date = quotes.front().date;
    std::map<Date, std::vector<SviQuote>> by_expiry;
    double f_sum = 0.0;
    for (const QuoteRow& q : quotes) {
        q.validate();
        if (q.date != surface.date) throw DomainError("build_surface: quotes span several dates");
        f_sum += q.underlying;
        const double tau = q.tau();
        by_expiry[q.expiry].push_back({std::log(q.strike / q.underlying) - opts.r * tau, q.iv * q.iv * tau});
    }
    surface.f0 = f_sum / static_cast<double>(quotes.size());
    for (auto& [expiry, qs] : by_expiry) {
        const double tau = year_fraction(surface.date, expiry);
        if (tau < opts.min_tau || qs.size() < opts.min_quotes) continue;
        const SviSlice* prev = surface.slices.empty() ? nullptr : &surface.slices.back();
        try {
            const SviFitResult fit = fit_svi_slice(qs, tau, prev, opts.fit);
            if (prev != nullptr && atm_total_variance(fit.slice) < atm_total_variance(*prev)) {
                std::clog << "build_surface: " << format_iso_date(expiry)
                          << " skipped, ATM total variance below the shorter slice\n";
                continue;
            }
            surface.slices.push_back(fit.slice);
        } catch (const SviInfeasibleError& e) {
            std::clog << "build_surface: " << format_iso_date(expiry) << " skipped: " << e.what() << "\n";
        }
    }
    if (surface.slices.empty()) throw DomainError("build_surface: no maturity could be fitted");
    return surface;
}

}  // namespace cchedge
