#include "cchedge/pricing.hpp"

#include "cchedge/errors.hpp"
#include "cchedge/fft.hpp"

#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>

namespace cchedge {

namespace {

constexpr cplx kI{0.0, 1.0};

bool finite(cplx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

}  // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

void FftConfig::validate() const {
    if (!(alpha > 0.0)) throw ConfigError("FftConfig: alpha must be > 0");
    if (n_grid < 16 || !std::has_single_bit(n_grid)) {
        throw ConfigError("FftConfig: n_grid must be a power of two >= 16");
    }
    if (!(eta > 0.0)) throw ConfigError("FftConfig: eta must be > 0");
}

double FftConfig::log_strike_spacing() const {
    return 2.0 * std::numbers::pi / (static_cast<double>(n_grid) * eta);
}

void OptionSpec::validate() const {
    if (!(strike > 0.0)) throw DomainError("OptionSpec: strike must be > 0");
    if (!(expiry > 0.0)) throw DomainError("OptionSpec: expiry must be > 0");
}

Damping damping_for(const ModelParams& model, const FftConfig& cfg) {
    const MomentRange mr = moment_range(model);
    Damping d{cfg.alpha, -(cfg.alpha + 1.0)};
    // Need E[S^{alpha+1}] finite for the call side and E[S^{alpha_put+1}] for the put side.
    if (d.call + 1.0 >= mr.hi) d.call = 0.5 * (mr.hi - 1.0);
    if (d.put + 1.0 <= mr.lo) d.put = -1.0 + 0.5 * mr.lo;
    return d;
}

CarrMadanGrid::CarrMadanGrid(const FftConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    lambda_ = cfg_.log_strike_spacing();
    half_width_ = 0.5 * lambda_ * static_cast<double>(cfg_.n_grid);
    simpson_.resize(cfg_.n_grid);
    for (std::size_t n = 0; n < cfg_.n_grid; ++n) {
        simpson_[n] = (3.0 + ((n % 2 == 0) ? -1.0 : 1.0)) / 3.0;
    }
    simpson_[0] = 1.0 / 3.0;
}

std::vector<cplx> CarrMadanGrid::arguments(double alpha) const {
    std::vector<cplx> u(cfg_.n_grid);
    for (std::size_t n = 0; n < cfg_.n_grid; ++n) {
        u[n] = cplx{cfg_.eta * static_cast<double>(n), -(alpha + 1.0)};
    }
    return u;
}

std::vector<double> CarrMadanGrid::transform(std::span<const cplx> log_phi, double alpha, double r,
                                             double tau) const {
    const std::size_t n_grid = cfg_.n_grid;
    if (log_phi.size() != n_grid) throw ConfigError("CarrMadanGrid: exponent count mismatch");
    const double disc = std::exp(-r * tau);
    std::vector<cplx> x(n_grid);
    for (std::size_t n = 0; n < n_grid; ++n) {
        const double v = cfg_.eta * static_cast<double>(n);
        const cplx denom{alpha * alpha + alpha - v * v, (2.0 * alpha + 1.0) * v};
        // exp(i b v) undoes the grid offset k_0 = -b.
        const cplx psi = disc * std::exp(log_phi[n] + kI * half_width_ * v) / denom;
        if (!finite(psi)) throw NumericError("carr_madan: damped transform overflow");
        x[n] = psi * (cfg_.eta * simpson_[n]);
    }
    detail::fft_forward(x);
    std::vector<double> out(n_grid);
    for (std::size_t j = 0; j < n_grid; ++j) {
        out[j] = std::exp(-alpha * log_moneyness(j)) / std::numbers::pi * x[j].real();
    }
    return out;
}

std::vector<double> CarrMadanGrid::call_curve(std::span<const cplx> log_phi_call,
                                              std::span<const cplx> log_phi_put,
                                              const Damping& damping, double r, double tau) const {
    std::vector<double> calls = transform(log_phi_call, damping.call, r, tau);
    const std::vector<double> puts = transform(log_phi_put, damping.put, r, tau);
    const double disc = std::exp(-r * tau);
    for (std::size_t j = 0; j < calls.size(); ++j) {
        const double k = log_moneyness(j);
        if (k < 0.0) calls[j] = puts[j] + 1.0 - std::exp(k) * disc;
    }
    return calls;
}

CallCurve::CallCurve(double s0, double r, double tau, double k0, double dk,
                     std::vector<double> unit_prices)
    : s0_(s0), r_(r), tau_(tau), spline_(k0, dk, std::move(unit_prices)) {}

UniformCubicSpline::Eval CallCurve::unit_call(double x) const {
    if (x < spline_.x_min() || x > spline_.x_max()) {
        throw ConfigError("carr_madan: log-strike outside the FFT grid");
    }
    return spline_.eval(x);
}

double CallCurve::price_at_spot(double spot, double strike, bool is_call) const {
    if (!(strike > 0.0) || !(spot > 0.0)) throw DomainError("CallCurve: strike and spot must be > 0");
    const double call = spot * unit_call(std::log(strike / spot)).value;
    if (is_call) return call;
    return call - spot + strike * std::exp(-r_ * tau_);
}

double CallCurve::price(double strike, bool is_call) const { return price_at_spot(s0_, strike, is_call); }

CallCurve carr_madan_curve(const ModelParams& model, double tau, const FftConfig& cfg) {
    model.validate();
    if (!(tau > 0.0)) throw DomainError("carr_madan: expiry must be > 0");
    const CarrMadanGrid grid(cfg);
    const Damping damping = damping_for(model, cfg);
    ModelParams unit = model;
    unit.s0 = 1.0;
    const bool stateful = has_variance_state(model.family());
    const double state = stateful ? volatility_state(model) : 0.0;
    auto exponents = [&](double alpha) {
        std::vector<cplx> u = grid.arguments(alpha);
        for (cplx& z : u) {
            const ChfExponent e = chf_exponent(unit, z, tau);
            z = e.a + e.b * state;
        }
        return u;
    };
    std::vector<double> unit_prices =
        grid.call_curve(exponents(damping.call), exponents(damping.put), damping, model.r, tau);
    return CallCurve(model.s0, model.r, tau, grid.k_min(), grid.spacing(), std::move(unit_prices));
}

double carr_madan_price(const ModelParams& model, const OptionSpec& spec, const FftConfig& cfg) {
    spec.validate();
    return carr_madan_curve(model, spec.expiry, cfg).price(spec.strike, spec.is_call);
}

double bs_price(double sigma, double s0, double r, const OptionSpec& spec) {
    spec.validate();
    if (!(sigma > 0.0)) throw DomainError("bs_price: sigma must be > 0");
    const double sd = sigma * std::sqrt(spec.expiry);
    const double df = std::exp(-r * spec.expiry);
    const double d1 = (std::log(s0 / spec.strike) + r * spec.expiry) / sd + 0.5 * sd;
    const double d2 = d1 - sd;
    if (spec.is_call) return s0 * normal_cdf(d1) - spec.strike * df * normal_cdf(d2);
    return spec.strike * df * normal_cdf(-d2) - s0 * normal_cdf(-d1);
}

Greeks bs_greeks(double sigma, double s0, double r, const OptionSpec& spec) {
    spec.validate();
    if (!(sigma > 0.0)) throw DomainError("bs_greeks: sigma must be > 0");
    const double sqrt_t = std::sqrt(spec.expiry);
    const double sd = sigma * sqrt_t;
    const double d1 = (std::log(s0 / spec.strike) + r * spec.expiry) / sd + 0.5 * sd;
    Greeks g;
    g.delta = spec.is_call ? normal_cdf(d1) : normal_cdf(d1) - 1.0;
    g.gamma = normal_pdf(d1) / (s0 * sd);
    g.vega = s0 * normal_pdf(d1) * sqrt_t;
    return g;
}

double implied_vol(double price, double s0, double r, const OptionSpec& spec) {
    spec.validate();
    const double df = std::exp(-r * spec.expiry);
    // Work with the call price; puts map through parity.
    const double call = spec.is_call ? price : price + s0 - spec.strike * df;
    const double lower = std::max(s0 - spec.strike * df, 0.0);
    if (!(call > lower) || !(call < s0)) {
        throw DomainError("implied_vol: price outside the no-arbitrage band");
    }
    OptionSpec as_call = spec;
    as_call.is_call = true;
    auto f = [&](double sigma) { return bs_price(sigma, s0, r, as_call) - call; };
    constexpr double lo = 1e-6;
    constexpr double hi = 10.0;
    const double f_lo = f(lo);
    const double f_hi = f(hi);
    if (f_lo > 0.0 || f_hi < 0.0) {
        throw NumericError("implied_vol: root not bracketed by [1e-6, 10]");
    }
    if (f_lo == 0.0) return lo;
    std::uintmax_t max_iter = 200;
    const auto [a, b] = boost::math::tools::toms748_solve(
        f, lo, hi, f_lo, f_hi, boost::math::tools::eps_tolerance<double>(52), max_iter);
    if (max_iter >= 200) throw NumericError("implied_vol: iteration cap reached");
    const double fa = std::abs(f(a));
    const double fb = std::abs(f(b));
    return fa <= fb ? a : b;
}

Greeks fd_greeks(const ModelParams& model, const OptionSpec& spec, const FftConfig& cfg,
                 const BumpSizes& bumps) {
    spec.validate();
    if (!(bumps.spot > 0.0) || !(bumps.vol_state > 0.0)) {
        throw DomainError("fd_greeks: bump sizes must be > 0");
    }
    if (bumps.spot < 1e-8 || bumps.vol_state < 1e-8) {
        throw DomainError("fd_greeks: bump below 1e-8 of scale underflows");
    }
    const CallCurve curve = carr_madan_curve(model, spec.expiry, cfg);
    const double s = model.s0;
    const double h = bumps.spot * s;
    const double up = curve.price_at_spot(s + h, spec.strike, spec.is_call);
    const double mid = curve.price_at_spot(s, spec.strike, spec.is_call);
    const double down = curve.price_at_spot(s - h, spec.strike, spec.is_call);
    Greeks g;
    g.delta = (up - down) / (2.0 * h);
    g.gamma = (up - 2.0 * mid + down) / (h * h);
    if (model.family() != ModelFamily::CGMY) {
        const double state = volatility_state(model);
        const double hv = bumps.vol_state * state;
        const double v_up =
            carr_madan_curve(with_volatility_state(model, state + hv), spec.expiry, cfg)
                .price(spec.strike, spec.is_call);
        const double v_down =
            carr_madan_curve(with_volatility_state(model, state - hv), spec.expiry, cfg)
                .price(spec.strike, spec.is_call);
        g.vega = (v_up - v_down) / (2.0 * hv);
    }
    return g;
}

}  // namespace cchedge
