#pragma once

// Raw-SVI smiles per maturity, arbitrage checks, and maturity interpolation of prices.

#include "cchedge/dates.hpp"
#include "cchedge/errors.hpp"
#include "cchedge/pricing.hpp"

#include <optional>
#include <span>
#include <vector>

namespace cchedge {

struct SviSlice {
    double a = 0.0;
    double b = 0.0;
    double rho = 0.0;
    double m = 0.0;
    double sigma = 0.0;
    double tau = 0.0;

    void validate() const;
};

/// w(k) = a + b (rho (k - m) + sqrt((k - m)^2 + sigma^2)), k = ln(K / F).
double svi_total_variance(double k, const SviSlice& s);

struct SviDerivatives {
    double w;
    double dw;
    double d2w;
};
SviDerivatives svi_derivatives(double k, const SviSlice& s);

/// g(k) from the durable-smile condition; g >= 0 means no butterfly arbitrage at k.
double svi_g(double k, const SviSlice& s);

struct ButterflyResult {
    bool pass;
    double min_g;
};
/// min g over 401 points on [m - 5 sigma, m + 5 sigma]; pass iff min >= -1e-10.
ButterflyResult butterfly_check(const SviSlice& s);

struct SviQuote {
    double k;   // log-moneyness ln(K / F)
    double w;   // market total variance iv^2 tau
};

struct SviFitOptions {
    std::size_t n_starts = 16;
    double penalty_weight = 1e4;
};

struct SviFitResult {
    SviSlice slice;
    double rmse = 0.0;      // total-variance RMSE
    double penalty = 0.0;   // weighted constraint violation at the optimum
    bool arbitrage_free = false;
};

/// Thrown when no arbitrage-free slice was found; carries the best penalized fit.
class SviInfeasibleError : public NumericError {
public:
    SviInfeasibleError(const std::string& what, SviFitResult best)
        : NumericError(what), best_(best) {}
    const SviFitResult& best() const { return best_; }

private:
    SviFitResult best_;
};

/// Least-squares fit in total variance with butterfly and (given prev) calendar
/// penalties. Needs at least 5 quotes (DomainError otherwise).
SviFitResult fit_svi_slice(std::span<const SviQuote> quotes, double tau, const SviSlice* prev = nullptr,
                           const SviFitOptions& opts = {});

struct SviSurface {
    Date date{};
    double f0 = 0.0;                 // spot reference the log-moneyness is measured against
    std::vector<SviSlice> slices;    // strictly increasing tau

    /// Throws DomainError when taus are not increasing or ATM total variance decreases.
    void validate() const;
};

double atm_total_variance(const SviSlice& s);

/// Implied vol of slice s at strike K with forward F0 e^{r tau}.
double slice_implied_vol(const SviSlice& s, double f0, double r, double strike);

/// Weight alpha_T on the shorter slice and the bracketing slice indices.
struct MaturityWeight {
    std::size_t lo;
    std::size_t hi;
    double alpha;
};
MaturityWeight maturity_weight(const SviSurface& surface, double tau);

/// alpha_T C(t1, K) + (1 - alpha_T) C(t2, K), with ATM total variance linear in T.
/// Throws DomainError outside the slice range.
double interp_price(const SviSurface& surface, const OptionSpec& spec, double r);

enum class OptionType { Call, Put };

struct QuoteRow {
    Date date{};
    Date expiry{};
    double strike = 0.0;
    OptionType type = OptionType::Call;
    double iv = 0.0;
    double volume = 0.0;
    double underlying = 0.0;

    void validate() const;
    double tau() const { return year_fraction(date, expiry); }
};

/// One row per (expiry, strike, type), keeping the highest volume.
std::vector<QuoteRow> dedup_quotes(std::span<const QuoteRow> rows);

struct SurfaceBuildOptions {
    double r = 0.0;   // forward = underlying * e^{r tau}
    double min_tau = 7.0 / 365.0;
    std::size_t min_quotes = 5;
    SviFitOptions fit;
};

/// Fits one surface from a single date's quotes, shortest maturity first, each
/// slice penalized against the previous one. Maturities below min_tau or with
/// too few quotes are skipped.
SviSurface build_surface(std::span<const QuoteRow> quotes, const SurfaceBuildOptions& opts = {});

}  // namespace cchedge
