#pragma once

// Self-financing dynamic hedges of a short European call along simulated or
// historical price paths.

#include "cchedge/pricing.hpp"
#include "cchedge/scenarios.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string_view>
#include <vector>

namespace cchedge {

enum class Strategy { Unhedged, Delta, DeltaGamma, DeltaVega, MinVariance };

std::string_view to_string(Strategy s);
/// Accepts "unhedged", "delta", "delta-gamma", "delta-vega", "min-variance".
Strategy parse_strategy(std::string_view name);
bool uses_second_instrument(Strategy s);

struct HedgeSpec {
    Strategy strategy = Strategy::Delta;
    ModelParams hedge_model;   // s0 is ignored; r is replaced by the context rate
    OptionSpec target;
    std::optional<OptionSpec> second;
    std::size_t rebalance_every = 1;   // in path steps

    /// Second instrument present iff the strategy needs one, with a strike other
    /// than the target's, and not expiring before it.
    void validate() const;
};

/// Call struck 5% above the target, expiring one month (30 days) after it. The
/// extra month keeps its Gamma and Vega away from zero near the target's expiry.
OptionSpec default_second_instrument(const OptionSpec& target);

struct InstrumentGreeks {
    double price = 0.0;
    double delta = 0.0;
    double gamma = 0.0;
    double vega = 0.0;
};

struct HedgeRatios {
    double xi1 = 0.0;       // units of the underlying
    double lambda2 = 0.0;   // units of the second option
};

/// Delta: (delta_C, 0). DeltaGamma / DeltaVega: lambda2 = G_C / G_C2 for the
/// matched Greek, xi1 = delta_C - lambda2 delta_C2. Unhedged: (0, 0).
/// NumericError when the second instrument's Greek is below 1e-12 in magnitude.
HedgeRatios hedge_ratios(Strategy s, const InstrumentGreeks& target, const InstrumentGreeks& second);

/// Range of the hedge model's volatility state covered by a GreekTable.
struct StateRange {
    double lo = 0.0;
    double hi = 0.0;
    std::size_t n_nodes = 24;
};

/// Price and Greeks of one option under one hedge model at a fixed time to
/// expiry, as a function of (spot, volatility state). Variance-state models are
/// tabulated on nodes uniform in sqrt(V) and interpolated by cubic Hermite with
/// the exact dC/dV; Black-Scholes is analytic; the other families use the frozen
/// state of the model. Puts go through parity.
class GreekTable {
public:
    GreekTable(const ModelParams& model, const OptionSpec& option, const FftConfig& fft = {},
               std::optional<StateRange> range = std::nullopt);

    InstrumentGreeks eval(double spot, double state) const;
    double price(double spot, double state) const;
    const ModelParams& model() const { return model_; }
    const OptionSpec& option() const { return option_; }
    /// Volatility state used when the caller has none (model's own state).
    double default_state() const { return default_state_; }
    bool has_vega() const { return has_vega_; }

private:
    struct Node {
        UniformCubicSpline value;   // unit-spot call in x = ln(K / S)
        UniformCubicSpline dstate;  // d/dstate of the same
    };
    struct UnitEval {
        double c, c1, c2, cv;
    };
    UnitEval unit(double x, double state) const;

    ModelParams model_;
    OptionSpec option_;
    double default_state_ = 0.0;
    bool analytic_ = false;
    bool has_vega_ = true;
    double s_lo_ = 0.0;   // sqrt-state grid, only when nodes_.size() > 1
    double s_step_ = 0.0;
    std::vector<Node> nodes_;
};

/// Local risk-minimizing single-instrument ratio.
///   diffusion + jumps: (V S^2 C_S + rho sigma_v V S C_V + lambda E[dS dC]) / (V S^2 + lambda E[dS^2])
///   pure-jump VG / CGMY: Cov(dC, dS) / Var(dS) in the small-step limit, i.e.
///   int dS dC nu(dx) / int dS^2 nu(dx) over the CGMY Levy density (quadrature).
/// Jump expectations of the jump-diffusions use fixed antithetic draws.
class MinVarianceKernel {
public:
    explicit MinVarianceKernel(const ModelParams& model, std::size_t n_jump_draws = 10000,
                               std::uint64_t seed = 0x6a756d70ULL);

    double ratio(const GreekTable& table, double spot, double state) const;

private:
    ModelParams model_;
    bool pure_jump_ = false;
    double lambda_ = 0.0;
    double rho_sigma_v_ = 0.0;
    std::vector<double> log_jump_;   // jump draws, or Levy quadrature nodes
    std::vector<double> var_jump_;
    std::vector<double> weight_;     // Levy-measure quadrature weights (pure-jump models)
};

/// Convenience wrapper building a frozen-state table.
double mv_ratio(const ModelParams& model, double spot, double state, const OptionSpec& option,
                std::size_t n_jump_draws = 10000);

/// Cash account plus holdings. Pi = xi1 S + lambda2 C2 + cash.
struct LedgerState {
    double cash = 0.0;
    double xi1 = 0.0;
    double lambda2 = 0.0;

    double value(double spot, double c2) const { return xi1 * spot + lambda2 * c2 + cash; }
};

struct StepResult {
    double value_before = 0.0;
    double value_after = 0.0;
};

/// Accrues interest over dt, marks the old holdings at the new prices and
/// rebalances to the new ratios, financing the difference through cash.
StepResult portfolio_step(LedgerState& state, double spot, double c2, const HedgeRatios& ratios, double r,
                          double dt);

struct LedgerEntry {
    double t = 0.0;
    double spot = 0.0;
    double state = 0.0;
    double c2 = 0.0;
    LedgerState holdings;
    double value = 0.0;
};

struct HedgeContext {
    double r = 0.0;
    std::optional<double> premium;    // target premium received; hedge-model price when absent
    std::optional<double> premium2;   // second instrument cost at inception
    FftConfig fft;
    std::size_t state_nodes = 24;
    double state_floor = 1e-4;        // variance states are clamped from below
    bool state_from_paths = true;     // use the path variance grid for SV-family hedge models
    std::size_t n_jump_draws = 10000;
    std::uint64_t jump_seed = 0x6a756d70ULL;
    std::optional<std::size_t> record_path;
};

struct HedgeRun {
    std::vector<double> pnl;       // Pi_T per path
    std::vector<double> rel_pnl;   // e^{-rT} Pi_T / premium
    double premium = 0.0;
    double premium2 = 0.0;
    double expiry = 0.0;
    double r = 0.0;
    std::size_t n_rebalances = 0;
    double max_self_financing_error = 0.0;   // |Pi_after - Pi_before| / max(|Pi_before|, premium)
    double max_book_greek = 0.0;             // relative residual of the neutralized Greek
    // Rebalances where the second instrument's Greek underflowed (far from the
    // money) and the book fell back to a plain delta hedge.
    std::size_t n_delta_fallbacks = 0;
    std::vector<LedgerEntry> ledger;         // for HedgeContext::record_path
};

/// Hedges a short call on every path. Parameters are frozen at inception.
HedgeRun run_hedge_experiment(const PathMatrix& paths, const HedgeSpec& spec, const HedgeContext& ctx);
/// Single-threaded reference; bit-identical to run_hedge_experiment.
HedgeRun run_hedge_experiment_serial(const PathMatrix& paths, const HedgeSpec& spec, const HedgeContext& ctx);

/// One realized path with a hedge model that may change at every step
/// (model_at(step)); its volatility state is the model's own.
HedgeRun hedge_single_path(std::span<const double> prices, double dt, const HedgeSpec& spec,
                           const HedgeContext& ctx, const std::function<ModelParams(std::size_t)>& model_at);

/// CSV with header path_id,pnl,rel_pnl.
void write_pnl_csv(std::ostream& out, const HedgeRun& run);

}  // namespace cchedge
