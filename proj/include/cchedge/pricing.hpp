#pragma once

// European option valuation: Carr-Madan FFT on any model's characteristic
// function, Black-Scholes closed forms, implied volatility and Greeks.

#include "cchedge/models.hpp"
#include "cchedge/spline.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace cchedge {

struct FftConfig {
    double alpha = 1.5;
    std::size_t n_grid = 4096;
    double eta = 0.25;

    void validate() const;
    /// 2 pi / (n_grid * eta)
    double log_strike_spacing() const;
};

struct OptionSpec {
    double strike = 0.0;
    double expiry = 0.0;
    bool is_call = true;

    void validate() const;
};

struct Greeks {
    double delta = 0.0;
    double gamma = 0.0;
    double vega = 0.0;
};

/// Damping exponents for one model: alpha_call > 0 prices calls, alpha_put < -1
/// prices puts. Both are pulled inside the model's moment range when needed.
struct Damping {
    double call;
    double put;
};
Damping damping_for(const ModelParams& model, const FftConfig& cfg);

/// Carr-Madan transform over the grid k_j = -b + j * lambda of log-moneyness
/// ln(K / S0), b = n_grid * lambda / 2. Works on unit-spot log characteristic
/// function values, so callers can reuse exponents across many states.
class CarrMadanGrid {
public:
    explicit CarrMadanGrid(const FftConfig& cfg);

    const FftConfig& config() const { return cfg_; }
    std::size_t size() const { return cfg_.n_grid; }
    double k_min() const { return -half_width_; }
    double spacing() const { return lambda_; }
    double log_moneyness(std::size_t j) const { return -half_width_ + lambda_ * static_cast<double>(j); }

    /// Complex arguments u_n = v_n - (alpha + 1) i at which ln phi must be supplied.
    std::vector<cplx> arguments(double alpha) const;

    /// Discounted unit-spot option prices on the grid from ln phi(u_n) of
    /// ln(S_T / S0). alpha > 0 yields calls, alpha < -1 puts.
    std::vector<double> transform(std::span<const cplx> log_phi, double alpha, double r,
                                  double tau) const;

    /// Unit-spot call curve: call transform for k >= 0, put transform plus parity below.
    std::vector<double> call_curve(std::span<const cplx> log_phi_call,
                                   std::span<const cplx> log_phi_put, const Damping& damping,
                                   double r, double tau) const;

private:
    FftConfig cfg_;
    double lambda_;
    double half_width_;
    std::vector<double> simpson_;
};

/// Call prices for one model and maturity, interpolated by a natural cubic
/// spline in log-moneyness.
class CallCurve {
public:
    CallCurve(double s0, double r, double tau, double k0, double dk, std::vector<double> unit_prices);

    double s0() const { return s0_; }
    double rate() const { return r_; }
    double tau() const { return tau_; }
    double k_min() const { return spline_.x_min(); }
    double k_max() const { return spline_.x_max(); }

    /// Price at the curve's own spot. Throws ConfigError outside the grid.
    double price(double strike, bool is_call) const;
    /// Price of the same option when the spot is moved to `spot` (all models
    /// here are homogeneous of degree one in (S, K)).
    double price_at_spot(double spot, double strike, bool is_call) const;
    /// Unit-spot call value and its first two derivatives in x = ln(K / S).
    UniformCubicSpline::Eval unit_call(double x) const;

private:
    double s0_;
    double r_;
    double tau_;
    UniformCubicSpline spline_;
};

CallCurve carr_madan_curve(const ModelParams& model, double tau, const FftConfig& cfg = {});

double carr_madan_price(const ModelParams& model, const OptionSpec& spec, const FftConfig& cfg = {});

/// Black-Scholes price for spot S0 and rate r.
double bs_price(double sigma, double s0, double r, const OptionSpec& spec);
Greeks bs_greeks(double sigma, double s0, double r, const OptionSpec& spec);

/// Black-Scholes implied volatility, bracketed on [1e-6, 10].
double implied_vol(double price, double s0, double r, const OptionSpec& spec);

struct BumpSizes {
    double spot = 1e-3;        // relative
    double vol_state = 1e-3;   // relative to the volatility state
};

/// Central finite differences on FFT prices. Vega is dC/dsigma for BS/JD/VG
/// and dC/dV0 for SV/SVJ/SVCJ.
Greeks fd_greeks(const ModelParams& model, const OptionSpec& spec, const FftConfig& cfg = {},
                 const BumpSizes& bumps = {});

double normal_cdf(double x);
double normal_pdf(double x);

}  // namespace cchedge
