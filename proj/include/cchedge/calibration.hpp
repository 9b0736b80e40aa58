#pragma once

// Model calibration to a day's implied vols: RMSE in vol plus a Tikhonov penalty.

#include "cchedge/pricing.hpp"
#include "cchedge/vol_surface.hpp"

#include <optional>
#include <span>
#include <vector>

namespace cchedge {

/// Keeps rows with volume > 0 and |BS delta| (from the row's own iv) in [0.25, 0.75].
std::vector<QuoteRow> filter_quotes(std::span<const QuoteRow> quotes, double r);

struct CalibQuote {
    double strike;
    double tau;
    bool is_call;
    double iv;
};

/// Quotes of one valuation date, rescaled to a common spot s0.
struct CalibData {
    double s0 = 0.0;
    double r = 0.0;
    std::vector<CalibQuote> quotes;
};

/// Strikes are rescaled by s0 / underlying so each row keeps its own moneyness.
CalibData make_calib_data(std::span<const QuoteRow> quotes, double r);

struct CalibConfig {
    std::vector<double> gamma_diag;
    std::vector<double> lo;
    std::vector<double> hi;
    std::vector<double> start;
    std::size_t max_iter = 1500;
    double tol = 1e-7;
    std::size_t n_starts = 8;          // quasi-random starts, in addition to `start`
    std::optional<double> fix_rho_j = 0.0;   // SVCJ only; nullopt calibrates rho_j
    FftConfig fft{1.5, 1024, 0.25};

    void validate(ModelFamily family) const;
};

/// Bounds, start and Gamma (1e-4 on parameters scaled by a reference magnitude).
CalibConfig default_calib_config(ModelFamily family);

struct CalibResult {
    ModelParams params;
    double rmse = 0.0;
    std::size_t n_quotes = 0;
    bool converged = false;
    double objective = 0.0;
};

/// Implied-vol RMSE of the model against the quotes. +inf when any price cannot
/// be produced or inverted.
double calib_rmse(const ModelParams& model, const CalibData& data, const FftConfig& fft = {1.5, 1024, 0.25});

/// RMSE + theta' diag(gamma) theta; +inf on invalid parameters or pricing failure.
double calib_objective(ModelFamily family, std::span<const double> theta, const CalibData& data,
                       std::span<const double> gamma_diag, const FftConfig& fft = {1.5, 1024, 0.25});

/// Multi-start bounded Nelder-Mead. Throws NumericError when every start fails.
CalibResult calibrate(ModelFamily family, const CalibData& data, const CalibConfig& cfg);

/// Start vector for `target` that reproduces `source` (SV into SVJ/SVCJ with no
/// jumps, VG into CGMY with Y = 0). Empty when the families do not nest.
std::vector<double> nested_start(ModelFamily target, const ModelParams& source, const CalibConfig& cfg);

}  // namespace cchedge
