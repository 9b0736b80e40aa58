#pragma once

// Market scenario generators: SVCJ Monte Carlo and the GARCH(1,1)-filtered KDE bootstrap.

#include "cchedge/models.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace cchedge {

/// Row-major n_paths x (n_steps + 1) grids.
struct PathMatrix {
    std::size_t n_paths = 0;
    std::size_t n_steps = 0;
    double dt = 1.0 / 365.0;
    std::uint64_t seed = 0;
    std::string generator;
    std::vector<double> prices;
    std::vector<double> variances;   // annualized; empty when the generator has no variance state
    std::vector<std::uint32_t> jump_counts;   // per path; empty unless the generator jumps

    std::size_t cols() const { return n_steps + 1; }
    double price(std::size_t path, std::size_t step) const { return prices[path * cols() + step]; }
    double variance(std::size_t path, std::size_t step) const { return variances[path * cols() + step]; }
    bool has_variance() const { return !variances.empty(); }
    std::span<const double> price_path(std::size_t path) const {
        return std::span<const double>(prices).subspan(path * cols(), cols());
    }
    double horizon() const { return dt * static_cast<double>(n_steps); }

    /// Shape, positivity and equal first column.
    void validate() const;
};

/// Paths per independent random stream. Results depend on (seed, n_paths, block size) only.
inline constexpr std::size_t kPathBlock = 256;

/// Parameter check for simulation, which also admits the degenerate
/// kappa = 0, sigma_v = 0, v0 = 0, mu_v = 0 limits.
void validate_for_simulation(const SvcjParams& p);

/// Log-Euler scheme with full truncation and at most one jump per step.
PathMatrix simulate_svcj(const SvcjParams& p, double s0, double r, std::size_t n_paths, std::size_t n_steps,
                         double dt, std::uint64_t seed);
/// Single-threaded reference; bit-identical to simulate_svcj.
PathMatrix simulate_svcj_serial(const SvcjParams& p, double s0, double r, std::size_t n_paths,
                                std::size_t n_steps, double dt, std::uint64_t seed);

struct GarchFit {
    double omega = 0.0;
    double alpha = 0.0;
    double beta = 0.0;
    std::vector<double> sigma_series;   // conditional daily vol of each return
    std::vector<double> residuals;      // return / sigma
    double next_variance = 0.0;         // one-step-ahead daily variance after the sample
    double log_likelihood = 0.0;

    void validate() const;
};

/// Gaussian quasi-maximum likelihood, zero conditional mean. Needs >= 100 returns.
GarchFit fit_garch11(std::span<const double> log_returns);

struct KdeSampler {
    std::vector<double> residuals;
    double h = 0.2;

    void validate() const;
};

double kde_density(const KdeSampler& sampler, double z);

/// Paths S0 exp(sum sigma_k z_k) with z drawn from the KDE (smoothed bootstrap)
/// and sigma_k from the GARCH recursion started at fit.next_variance. The
/// variance grid holds the annualized conditional variance 365 sigma^2.
PathMatrix simulate_garch_kde(const GarchFit& fit, const KdeSampler& sampler, double s0, std::size_t n_paths,
                              std::size_t n_steps, std::uint64_t seed);
PathMatrix simulate_garch_kde_serial(const GarchFit& fit, const KdeSampler& sampler, double s0,
                                     std::size_t n_paths, std::size_t n_steps, std::uint64_t seed);

/// Seed for stream `index` derived from a master seed (splitmix64 mixing).
std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace cchedge
