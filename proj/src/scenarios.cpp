#include "cchedge/scenarios.hpp"

#include "cchedge/errors.hpp"
#include "cchedge/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace cchedge {

namespace {

void require(bool ok, const char* what) {
    if (!ok) throw DomainError(what);
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

template <class Kernel>
void for_each_block(std::size_t n_paths, bool parallel, const Kernel& kernel) {
    const std::size_t n_blocks = (n_paths + kPathBlock - 1) / kPathBlock;
    if (parallel) {
        const long long nb = static_cast<long long>(n_blocks);
#pragma omp parallel for schedule(dynamic)
        for (long long b = 0; b < nb; ++b) {
            const std::size_t first = static_cast<std::size_t>(b) * kPathBlock;
            kernel(static_cast<std::size_t>(b), first, std::min(first + kPathBlock, n_paths));
        }
    } else {
        for (std::size_t b = 0; b < n_blocks; ++b) {
            const std::size_t first = b * kPathBlock;
            kernel(b, first, std::min(first + kPathBlock, n_paths));
        }
    }
}

void check_shape(std::size_t n_paths, std::size_t n_steps, double dt) {
    require(n_paths >= 1 && n_steps >= 1, "simulate: n_paths and n_steps must be >= 1");
    require(dt > 0.0, "simulate: dt must be > 0");
}

PathMatrix svcj_paths(const SvcjParams& p, double s0, double r, std::size_t n_paths, std::size_t n_steps,
                      double dt, std::uint64_t seed, bool parallel) {
    validate_for_simulation(p);
    require(s0 > 0.0, "simulate_svcj: s0 must be > 0");
    require(r >= 0.0, "simulate_svcj: r must be >= 0");
    check_shape(n_paths, n_steps, dt);
    PathMatrix pm;
    pm.n_paths = n_paths;
    pm.n_steps = n_steps;
    pm.dt = dt;
    pm.seed = seed;
    pm.generator = "svcj";
    const std::size_t cols = n_steps + 1;
    pm.prices.resize(n_paths * cols);
    pm.variances.resize(n_paths * cols);
    pm.jump_counts.assign(n_paths, 0);

    const double mbar = p.lambda > 0.0 ? svcj_mean_jump(p) : 0.0;
    const double drift = (r - p.lambda * mbar) * dt;
    const double p_jump = p.lambda * dt;
    const double rho_c = std::sqrt(std::max(0.0, 1.0 - p.sv.rho * p.sv.rho));
    const double sqdt = std::sqrt(dt);
    const double log_s0 = std::log(s0);

    for_each_block(n_paths, parallel, [&](std::size_t block, std::size_t first, std::size_t last) {
        std::mt19937_64 rng(substream_seed(seed, block));
        std::normal_distribution<double> normal;
        std::uniform_real_distribution<double> unif;
        for (std::size_t i = first; i < last; ++i) {
            double* s = &pm.prices[i * cols];
            double* v = &pm.variances[i * cols];
            double x = log_s0;
            double var = p.sv.v0;
            s[0] = s0;
            v[0] = var;
            for (std::size_t t = 1; t < cols; ++t) {
                const double z1 = normal(rng);
                const double z2 = normal(rng);
                const double u = unif(rng);
                const double vp = std::max(var, 0.0);
                const double sd = std::sqrt(vp) * sqdt;
                x += drift - 0.5 * vp * dt + sd * z1;
                var += p.sv.kappa * (p.sv.theta - vp) * dt + p.sv.sigma_v * sd * (p.sv.rho * z1 + rho_c * z2);
                if (u < p_jump) {
                    const double zv = p.mu_v > 0.0 ? -p.mu_v * std::log1p(-unif(rng)) : 0.0;
                    const double zs = p.mu_s + p.rho_j * zv + p.sigma_s * normal(rng);
                    x += zs;
                    var += zv;
                    ++pm.jump_counts[i];
                }
                var = std::max(var, 0.0);
                s[t] = std::exp(x);
                v[t] = var;
            }
        }
    });
    return pm;
}

PathMatrix garch_kde_paths(const GarchFit& fit, const KdeSampler& sampler, double s0, std::size_t n_paths,
                           std::size_t n_steps, std::uint64_t seed, bool parallel) {
    require(fit.omega > 0.0 && fit.alpha >= 0.0 && fit.beta >= 0.0, "simulate_garch_kde: bad GARCH coefficients");
    require(fit.next_variance > 0.0, "simulate_garch_kde: next_variance must be > 0");
    sampler.validate();
    require(s0 > 0.0, "simulate_garch_kde: s0 must be > 0");
    check_shape(n_paths, n_steps, 1.0 / 365.0);
    PathMatrix pm;
    pm.n_paths = n_paths;
    pm.n_steps = n_steps;
    pm.dt = 1.0 / 365.0;
    pm.seed = seed;
    pm.generator = "garch_kde";
    const std::size_t cols = n_steps + 1;
    pm.prices.resize(n_paths * cols);
    pm.variances.resize(n_paths * cols);
    const std::size_t n_res = sampler.residuals.size();
    const double log_s0 = std::log(s0);

    for_each_block(n_paths, parallel, [&](std::size_t block, std::size_t first, std::size_t last) {
        std::mt19937_64 rng(substream_seed(seed, block));
        std::normal_distribution<double> normal;
        std::uniform_int_distribution<std::size_t> pick(0, n_res - 1);
        for (std::size_t i = first; i < last; ++i) {
            double* s = &pm.prices[i * cols];
            double* v = &pm.variances[i * cols];
            double x = log_s0;
            double var = fit.next_variance;
            s[0] = s0;
            v[0] = 365.0 * var;
            for (std::size_t t = 1; t < cols; ++t) {
                const double z = sampler.residuals[pick(rng)] + sampler.h * normal(rng);
                const double ret = std::sqrt(var) * z;
                x += ret;
                var = fit.omega + fit.alpha * ret * ret + fit.beta * var;
                s[t] = std::exp(x);
                v[t] = 365.0 * var;
            }
        }
    });
    return pm;
}

// Negative Gaussian log likelihood (without constants) and the filtered variances.
double garch_nll(std::span<const double> r, double omega, double alpha, double beta, double var0,
                 std::vector<double>* sig2) {
    double var = var0;
    double nll = 0.0;
    for (std::size_t t = 0; t < r.size(); ++t) {
        if (t > 0) var = omega + alpha * r[t - 1] * r[t - 1] + beta * var;
        if (!(var > 0.0)) return std::numeric_limits<double>::infinity();
        nll += 0.5 * (std::log(var) + r[t] * r[t] / var);
        if (sig2) (*sig2)[t] = var;
    }
    return nll;
}

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index) {
    return splitmix64(seed ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

void PathMatrix::validate() const {
    require(n_paths >= 1 && n_steps >= 1, "PathMatrix: empty shape");
    require(prices.size() == n_paths * cols(), "PathMatrix: price grid size mismatch");
    require(variances.empty() || variances.size() == prices.size(), "PathMatrix: variance grid size mismatch");
    require(dt > 0.0, "PathMatrix: dt must be > 0");
    for (double s : prices) require(s > 0.0 && std::isfinite(s), "PathMatrix: prices must be positive and finite");
    for (std::size_t i = 1; i < n_paths; ++i) {
        require(price(i, 0) == price(0, 0), "PathMatrix: column 0 must equal S0 on every path");
    }
}

void validate_for_simulation(const SvcjParams& p) {
    require(p.sv.kappa >= 0.0, "simulate_svcj: kappa must be >= 0");
    require(p.sv.theta >= 0.0, "simulate_svcj: theta must be >= 0");
    require(p.sv.sigma_v >= 0.0, "simulate_svcj: sigma_v must be >= 0");
    require(p.sv.rho >= -1.0 && p.sv.rho <= 1.0, "simulate_svcj: rho must lie in [-1, 1]");
    require(p.sv.v0 >= 0.0, "simulate_svcj: v0 must be >= 0");
    require(p.lambda >= 0.0, "simulate_svcj: lambda must be >= 0");
    require(p.sigma_s >= 0.0, "simulate_svcj: sigma_s must be >= 0");
    require(p.mu_v >= 0.0, "simulate_svcj: mu_v must be >= 0");
    require(p.rho_j * p.mu_v < 1.0, "simulate_svcj: rho_j * mu_v must be < 1");
}

PathMatrix simulate_svcj(const SvcjParams& p, double s0, double r, std::size_t n_paths, std::size_t n_steps,
                         double dt, std::uint64_t seed) {
    return svcj_paths(p, s0, r, n_paths, n_steps, dt, seed, true);
}

PathMatrix simulate_svcj_serial(const SvcjParams& p, double s0, double r, std::size_t n_paths,
                                std::size_t n_steps, double dt, std::uint64_t seed) {
    return svcj_paths(p, s0, r, n_paths, n_steps, dt, seed, false);
}

void GarchFit::validate() const {
    require(omega > 0.0, "GARCH: omega must be > 0");
    require(alpha >= 0.0 && beta >= 0.0, "GARCH: alpha and beta must be >= 0");
    require(alpha + beta < 1.0, "GARCH: alpha + beta must be < 1 (stationarity)");
}

GarchFit fit_garch11(std::span<const double> r) {
    require(r.size() >= 100, "fit_garch11: need at least 100 returns");
    double mean_sq = 0.0;
    for (double x : r) {
        require(std::isfinite(x), "fit_garch11: non-finite return");
        mean_sq += x * x;
    }
    mean_sq /= static_cast<double>(r.size());
    double mean = 0.0;
    for (double x : r) mean += x;
    mean /= static_cast<double>(r.size());
    double var = 0.0;
    for (double x : r) var += (x - mean) * (x - mean);
    if (!(var / static_cast<double>(r.size()) > 1e-14 * std::max(1.0, mean * mean)) || !(mean_sq > 0.0)) {
        throw NumericError("fit_garch11: degenerate likelihood (constant returns)");
    }

    // omega = mean_sq (1 - persistence) exp(z0), persistence = logistic(z1), alpha share = logistic(z2).
    auto coeffs = [&](std::span<const double> z) {
        const double pers = logistic(z[1]);
        const double alpha = pers * logistic(z[2]);
        return std::array<double, 3>{mean_sq * (1.0 - pers) * std::exp(z[0]), alpha, pers - alpha};
    };
    auto nll = [&](std::span<const double> z) {
        const auto c = coeffs(z);
        return garch_nll(r, c[0], c[1], c[2], mean_sq, nullptr) / static_cast<double>(r.size());
    };
    NelderMeadOptions nm;
    nm.size_tol = 1e-6;
    nm.max_iter = 5000;
    nm.step = {0.3, 0.5, 0.5};
    OptimResult best;
    best.f = std::numeric_limits<double>::infinity();
    for (const std::vector<double>& z0 :
         {std::vector<double>{0.0, 2.0, -1.5}, std::vector<double>{0.0, 0.0, 0.0}, std::vector<double>{0.0, 4.0, -2.5}}) {
        OptimResult res = nelder_mead(nll, z0, nm);
        if (res.f < best.f) best = std::move(res);
    }
    if (!best.converged || !std::isfinite(best.f)) throw NumericError("fit_garch11: optimizer did not converge");
    const auto c = coeffs(best.x);
    GarchFit fit;
    fit.omega = c[0];
    fit.alpha = c[1];
    fit.beta = c[2];
    if (fit.alpha + fit.beta >= 1.0 - 1e-6) {
        throw NumericError("fit_garch11: stationarity violated (alpha + beta >= 1)");
    }
    std::vector<double> sig2(r.size());
    fit.log_likelihood = -garch_nll(r, fit.omega, fit.alpha, fit.beta, mean_sq, &sig2) -
                         0.5 * std::log(2.0 * std::numbers::pi) * static_cast<double>(r.size());
    fit.sigma_series.resize(r.size());
    fit.residuals.resize(r.size());
    for (std::size_t t = 0; t < r.size(); ++t) {
        fit.sigma_series[t] = std::sqrt(sig2[t]);
        fit.residuals[t] = r[t] / fit.sigma_series[t];
    }
    fit.next_variance = fit.omega + fit.alpha * r.back() * r.back() + fit.beta * sig2.back();
    return fit;
}

void KdeSampler::validate() const {
    require(!residuals.empty(), "KdeSampler: no residuals");
    require(h > 0.0, "KdeSampler: bandwidth must be > 0");
}

double kde_density(const KdeSampler& sampler, double z) {
    sampler.validate();
    const double inv = 1.0 / sampler.h;
    double sum = 0.0;
    for (double zi : sampler.residuals) {
        const double u = (zi - z) * inv;
        sum += std::exp(-0.5 * u * u);
    }
    return sum * inv / (static_cast<double>(sampler.residuals.size()) * std::sqrt(2.0 * std::numbers::pi));
}

PathMatrix simulate_garch_kde(const GarchFit& fit, const KdeSampler& sampler, double s0, std::size_t n_paths,
                              std::size_t n_steps, std::uint64_t seed) {
    return garch_kde_paths(fit, sampler, s0, n_paths, n_steps, seed, true);
}

PathMatrix simulate_garch_kde_serial(const GarchFit& fit, const KdeSampler& sampler, double s0,
                                     std::size_t n_paths, std::size_t n_steps, std::uint64_t seed) {
    return garch_kde_paths(fit, sampler, s0, n_paths, n_steps, seed, false);
}

}  // namespace cchedge
