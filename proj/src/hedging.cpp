#include "cchedge/hedging.hpp"

#include "cchedge/analytics.hpp"
#include "cchedge/errors.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <iomanip>
#include <limits>
#include <random>
#include <string>

namespace cchedge {

namespace {

constexpr double kMonth = 30.0 / 365.0;
constexpr double kDegenerateGreek = 1e-12;

double intrinsic(const OptionSpec& o, double spot) {
    return o.is_call ? std::max(spot - o.strike, 0.0) : std::max(o.strike - spot, 0.0);
}

// Merges call-side and put-side transforms the way CarrMadanGrid::call_curve does,
// without the parity shift (the state derivative of a forward is zero).
std::vector<double> merge_sides(const CarrMadanGrid& grid, std::vector<double> calls, const std::vector<double>& puts) {
    for (std::size_t j = 0; j < calls.size(); ++j) {
        if (grid.log_moneyness(j) < 0.0) calls[j] = puts[j];
    }
    return calls;
}

std::vector<double> unit_call_curve(const ModelParams& model, double tau, const CarrMadanGrid& grid) {
    const CallCurve curve = carr_madan_curve(model, tau, grid.config());
    std::vector<double> out(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) out[j] = curve.unit_call(grid.log_moneyness(j)).value;
    return out;
}

// Rethrows an exception with the failing path index in its message, keeping its type.
[[noreturn]] void rethrow_with_path(std::exception_ptr ex, std::size_t path) {
    const std::string where = "path " + std::to_string(path) + ": ";
    try {
        std::rethrow_exception(ex);
    } catch (const DomainError& e) {
        throw DomainError(where + e.what());
    } catch (const NumericError& e) {
        throw NumericError(where + e.what());
    } catch (const ConfigError& e) {
        throw ConfigError(where + e.what());
    }
}

}  // namespace

std::string_view to_string(Strategy s) {
    switch (s) {
        case Strategy::Unhedged: return "unhedged";
        case Strategy::Delta: return "delta";
        case Strategy::DeltaGamma: return "delta-gamma";
        case Strategy::DeltaVega: return "delta-vega";
        case Strategy::MinVariance: return "min-variance";
    }
    return "?";
}

Strategy parse_strategy(std::string_view name) {
    for (Strategy s : {Strategy::Unhedged, Strategy::Delta, Strategy::DeltaGamma, Strategy::DeltaVega,
                       Strategy::MinVariance}) {
        if (to_string(s) == name) return s;
    }
    throw DomainError("unknown strategy: " + std::string(name));
}

bool uses_second_instrument(Strategy s) { return s == Strategy::DeltaGamma || s == Strategy::DeltaVega; }

void HedgeSpec::validate() const {
    hedge_model.validate();
    target.validate();
    if (rebalance_every < 1) throw DomainError("HedgeSpec: rebalance_every must be >= 1");
    if (uses_second_instrument(strategy) != second.has_value()) {
        throw DomainError("HedgeSpec: second instrument required exactly for delta-gamma and delta-vega");
    }
    if (second) {
        second->validate();
        if (second->strike == target.strike) {
            throw DomainError("HedgeSpec: second instrument needs a strike different from the target's");
        }
        if (second->expiry < target.expiry) {
            throw DomainError("HedgeSpec: second instrument expires before the target");
        }
    }
    if (strategy == Strategy::DeltaVega && hedge_model.family() == ModelFamily::CGMY) {
        throw DomainError("HedgeSpec: CGMY has no volatility state to vega-hedge");
    }
}

OptionSpec default_second_instrument(const OptionSpec& target) {
    return {1.05 * target.strike, target.expiry + kMonth, true};
}

HedgeRatios hedge_ratios(Strategy s, const InstrumentGreeks& target, const InstrumentGreeks& second) {
    switch (s) {
        case Strategy::Unhedged: return {};
        case Strategy::Delta: return {target.delta, 0.0};
        case Strategy::DeltaGamma:
        case Strategy::DeltaVega: {
            const bool gamma = s == Strategy::DeltaGamma;
            const double g2 = gamma ? second.gamma : second.vega;
            if (!(std::abs(g2) >= kDegenerateGreek)) {
                throw NumericError(gamma ? "hedge_ratios: degenerate second instrument (|gamma| < 1e-12)"
                                         : "hedge_ratios: degenerate second instrument (|vega| < 1e-12)");
            }
            const double lam = (gamma ? target.gamma : target.vega) / g2;
            return {target.delta - lam * second.delta, lam};
        }
        case Strategy::MinVariance: break;
    }
    throw DomainError("hedge_ratios: min-variance ratios come from MinVarianceKernel");
}

GreekTable::GreekTable(const ModelParams& model, const OptionSpec& option, const FftConfig& fft,
                       std::optional<StateRange> range)
    : model_(model), option_(option) {
    model_.validate();
    option_.validate();
    model_.s0 = 1.0;
    const ModelFamily fam = model_.family();
    if (fam == ModelFamily::BS) {
        analytic_ = true;
        default_state_ = std::get<BsParams>(model_.dynamics).sigma;
        return;
    }
    const CarrMadanGrid grid(fft);
    const double tau = option_.expiry;
    auto spline = [&](std::vector<double> y) { return UniformCubicSpline(grid.k_min(), grid.spacing(), std::move(y)); };

    if (!has_variance_state(fam)) {
        Node node{spline(unit_call_curve(model_, tau, grid)), {}};
        if (fam == ModelFamily::CGMY) {
            has_vega_ = false;
            node.dstate = spline(std::vector<double>(grid.size(), 0.0));
        } else {
            default_state_ = volatility_state(model_);
            const double h = 1e-3 * default_state_;
            const auto up = unit_call_curve(with_volatility_state(model_, default_state_ + h), tau, grid);
            const auto dn = unit_call_curve(with_volatility_state(model_, default_state_ - h), tau, grid);
            std::vector<double> d(grid.size());
            for (std::size_t j = 0; j < d.size(); ++j) d[j] = (up[j] - dn[j]) / (2.0 * h);
            node.dstate = spline(std::move(d));
        }
        nodes_.push_back(std::move(node));
        return;
    }

    default_state_ = volatility_state(model_);
    const Damping damping = damping_for(model_, fft);
    struct Side {
        double alpha;
        std::vector<cplx> a, b;
    };
    auto exponents = [&](double alpha) {
        Side s{alpha, grid.arguments(alpha), {}};
        s.b.resize(s.a.size());
        for (std::size_t n = 0; n < s.a.size(); ++n) {
            const ChfExponent e = chf_exponent(model_, s.a[n], tau);
            s.a[n] = e.a;
            s.b[n] = e.b;
        }
        return s;
    };
    const Side call = exponents(damping.call);
    const Side put = exponents(damping.put);

    std::vector<double> states;
    if (range && range->n_nodes >= 2 && range->hi > range->lo * (1.0 + 1e-9) && range->lo > 0.0) {
        s_lo_ = std::sqrt(range->lo);
        s_step_ = (std::sqrt(range->hi) - s_lo_) / static_cast<double>(range->n_nodes - 1);
        for (std::size_t i = 0; i < range->n_nodes; ++i) {
            const double s = s_lo_ + s_step_ * static_cast<double>(i);
            states.push_back(s * s);
        }
    } else {
        states.push_back(default_state_);
    }
    nodes_.resize(states.size());
    const long long n_nodes = static_cast<long long>(states.size());
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
    for (long long i = 0; i < n_nodes; ++i) {
        try {
            const double v = states[static_cast<std::size_t>(i)];
            auto log_phi = [&](const Side& s, bool weighted) {
                std::vector<cplx> out(s.a.size());
                for (std::size_t n = 0; n < out.size(); ++n) {
                    out[n] = s.a[n] + s.b[n] * v;
                    // d phi / dV = b phi
                    if (weighted) out[n] += std::log(s.b[n]);
                }
                return out;
            };
            Node node{spline(grid.call_curve(log_phi(call, false), log_phi(put, false), damping, model_.r, tau)),
                      spline(merge_sides(grid, grid.transform(log_phi(call, true), call.alpha, model_.r, tau),
                                         grid.transform(log_phi(put, true), put.alpha, model_.r, tau)))};
            nodes_[static_cast<std::size_t>(i)] = std::move(node);
        } catch (...) {
#pragma omp critical(greek_table_failure)
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
}

GreekTable::UnitEval GreekTable::unit(double x, double state) const {
    const Node& first = nodes_.front();
    if (x < first.value.x_min() || x > first.value.x_max()) {
        throw ConfigError("GreekTable: log-moneyness outside the FFT grid");
    }
    if (nodes_.size() == 1) {
        const auto e = first.value.eval(x);
        return {e.value, e.d1, e.d2, first.dstate.eval(x).value};
    }
    const double s_hi = s_lo_ + s_step_ * static_cast<double>(nodes_.size() - 1);
    const double s = std::clamp(std::sqrt(std::max(state, 0.0)), s_lo_, s_hi);
    const double pos = (s - s_lo_) / s_step_;
    const auto j = static_cast<std::size_t>(std::clamp(std::floor(pos), 0.0, static_cast<double>(nodes_.size() - 2)));
    const double t = pos - static_cast<double>(j);
    const double h = s_step_;
    const double s0 = s_lo_ + h * static_cast<double>(j);
    const double s1 = s0 + h;
    const auto v0 = nodes_[j].value.eval(x), v1 = nodes_[j + 1].value.eval(x);
    const auto d0 = nodes_[j].dstate.eval(x), d1 = nodes_[j + 1].dstate.eval(x);
    const double t2 = t * t, t3 = t2 * t;
    const double h00 = 2.0 * t3 - 3.0 * t2 + 1.0, h10 = t3 - 2.0 * t2 + t, h01 = -2.0 * t3 + 3.0 * t2,
                 h11 = t3 - t2;
    // dC/ds = 2 s dC/dV at the nodes
    auto herm = [&](double f0, double f1, double g0, double g1) {
        return h00 * f0 + h10 * h * 2.0 * s0 * g0 + h01 * f1 + h11 * h * 2.0 * s1 * g1;
    };
    const double dfds = (6.0 * t2 - 6.0 * t) * (v0.value - v1.value) / h +
                        (3.0 * t2 - 4.0 * t + 1.0) * 2.0 * s0 * d0.value + (3.0 * t2 - 2.0 * t) * 2.0 * s1 * d1.value;
    return {herm(v0.value, v1.value, d0.value, d1.value), herm(v0.d1, v1.d1, d0.d1, d1.d1),
            herm(v0.d2, v1.d2, d0.d2, d1.d2), dfds / (2.0 * s)};
}

InstrumentGreeks GreekTable::eval(double spot, double state) const {
    if (!(spot > 0.0)) throw DomainError("GreekTable: spot must be > 0");
    InstrumentGreeks g;
    const double k = option_.strike, tau = option_.expiry;
    if (analytic_) {
        OptionSpec call = option_;
        call.is_call = true;
        const Greeks bg = bs_greeks(state, spot, model_.r, call);
        g = {bs_price(state, spot, model_.r, call), bg.delta, bg.gamma, bg.vega};
    } else {
        const UnitEval u = unit(std::log(k / spot), state);
        g = {spot * u.c, u.c - u.c1, (u.c2 - u.c1) / spot, spot * u.cv};
    }
    if (!option_.is_call) {
        g.price += k * std::exp(-model_.r * tau) - spot;
        g.delta -= 1.0;
    }
    return g;
}

double GreekTable::price(double spot, double state) const { return eval(spot, state).price; }

MinVarianceKernel::MinVarianceKernel(const ModelParams& model, std::size_t n_jump_draws, std::uint64_t seed)
    : model_(model) {
    model_.validate();
    if (n_jump_draws < 2 || n_jump_draws % 2 != 0) {
        throw DomainError("MinVarianceKernel: jump draws must be a positive even number");
    }
    std::mt19937_64 rng(substream_seed(seed, 0));
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> unif;
    // Antithetic pairs (z, -z), (u, 1 - u).
    auto normal_jumps = [&](double mu, double sd) {
        for (std::size_t i = 0; i < n_jump_draws / 2; ++i) {
            const double z = normal(rng);
            log_jump_.push_back(mu + sd * z);
            log_jump_.push_back(mu - sd * z);
        }
        var_jump_.assign(log_jump_.size(), 0.0);
    };
    switch (model_.family()) {
        case ModelFamily::JD: {
            const auto& p = std::get<JdParams>(model_.dynamics);
            lambda_ = p.lambda;
            normal_jumps(p.mu_s, p.delta_s);
            break;
        }
        case ModelFamily::SV: {
            const auto& p = std::get<SvParams>(model_.dynamics);
            rho_sigma_v_ = p.rho * p.sigma_v;
            break;
        }
        case ModelFamily::SVJ: {
            const auto& p = std::get<SvjParams>(model_.dynamics);
            rho_sigma_v_ = p.sv.rho * p.sv.sigma_v;
            lambda_ = p.lambda;
            normal_jumps(p.mu_s, p.sigma_s);
            break;
        }
        case ModelFamily::SVCJ: {
            const auto& p = std::get<SvcjParams>(model_.dynamics);
            rho_sigma_v_ = p.sv.rho * p.sv.sigma_v;
            lambda_ = p.lambda;
            for (std::size_t i = 0; i < n_jump_draws / 2; ++i) {
                const double u = unif(rng), z = normal(rng);
                for (const auto& [uu, zz] : {std::pair{u, z}, std::pair{1.0 - u, -z}}) {
                    const double zv = -p.mu_v * std::log1p(-std::min(uu, 1.0 - 1e-16));
                    var_jump_.push_back(zv);
                    log_jump_.push_back(p.mu_s + p.rho_j * zv + p.sigma_s * zz);
                }
            }
            break;
        }
        case ModelFamily::VG:
        case ModelFamily::CGMY: {
            // Small-step limit: both moments scale with dt, so the ratio is taken against
            // the Levy density C e^{-G|x|} / |x|^{1+Y} (x < 0), C e^{-M x} / x^{1+Y} (x > 0).
            pure_jump_ = true;
            CgmyParams p;
            if (model_.family() == ModelFamily::VG) {
                const CgmTriple t = vg_to_cgm(std::get<VgParams>(model_.dynamics));
                p = {t.c, t.g, t.m, 0.0};
            } else {
                p = std::get<CgmyParams>(model_.dynamics);
            }
            if (!(p.m > 2.0)) throw DomainError("MinVarianceKernel: M <= 2 leaves Var(dS) infinite");
            // x = +-e^t on a trapezoid grid in t; nu(x) dx = C e^{-G|x|} |x|^{-Y} dt.
            constexpr int n_side = 600;
            const double t_lo = std::log(1e-9);
            for (int side : {-1, 1}) {
                const double decay = side < 0 ? p.g : p.m - 2.0;
                const double t_hi = std::log(std::min(8.0, 45.0 / decay));
                const double h = (t_hi - t_lo) / n_side;
                for (int i = 0; i <= n_side; ++i) {
                    const double ax = std::exp(t_lo + h * i);
                    const double w = (i == 0 || i == n_side ? 0.5 : 1.0) * h * p.c *
                                     std::exp(-(side < 0 ? p.g : p.m) * ax) * std::pow(ax, -p.y);
                    log_jump_.push_back(side * ax);
                    weight_.push_back(w);
                }
            }
            var_jump_.assign(log_jump_.size(), 0.0);
            break;
        }
        case ModelFamily::BS: break;
    }
}

double MinVarianceKernel::ratio(const GreekTable& table, double spot, double state) const {
    const InstrumentGreeks g = table.eval(spot, state);
    const ModelFamily fam = model_.family();
    if (fam == ModelFamily::BS) return g.delta;
    if (pure_jump_) {
        double esc = 0.0, ess = 0.0;
        for (std::size_t i = 0; i < log_jump_.size(); ++i) {
            const double s1 = spot * std::exp(log_jump_[i]);
            const double ds = s1 - spot;
            esc += weight_[i] * ds * (table.price(s1, state) - g.price);
            ess += weight_[i] * ds * ds;
        }
        if (!(ess > 1e-20 * spot * spot)) throw NumericError("mv_ratio: degenerate denominator");
        return esc / ess;
    }
    // Diffusive variance per unit time: V for the SV family, sigma^2 for JD.
    const double v = has_variance_state(fam) ? std::max(state, 0.0) : state * state;
    double num = v * spot * spot * g.delta + rho_sigma_v_ * v * spot * g.vega;
    double den = v * spot * spot;
    if (lambda_ > 0.0) {
        double esc = 0.0, ess = 0.0;
        for (std::size_t i = 0; i < log_jump_.size(); ++i) {
            const double s1 = spot * std::exp(log_jump_[i]);
            const double ds = s1 - spot;
            const double dc = table.price(s1, state + var_jump_[i]) - g.price;
            esc += ds * dc;
            ess += ds * ds;
        }
        const double n = static_cast<double>(log_jump_.size());
        num += lambda_ * esc / n;
        den += lambda_ * ess / n;
    }
    if (!(den > 1e-20 * spot * spot)) throw NumericError("mv_ratio: degenerate denominator");
    return num / den;
}

double mv_ratio(const ModelParams& model, double spot, double state, const OptionSpec& option,
                std::size_t n_jump_draws) {
    const GreekTable table(model, option);
    return MinVarianceKernel(model, n_jump_draws).ratio(table, spot, state);
}

StepResult portfolio_step(LedgerState& state, double spot, double c2, const HedgeRatios& ratios, double r,
                          double dt) {
    state.cash *= std::exp(r * dt);
    StepResult out;
    out.value_before = state.value(spot, c2);
    state.xi1 = ratios.xi1;
    state.lambda2 = ratios.lambda2;
    state.cash = out.value_before - state.xi1 * spot - state.lambda2 * c2;
    out.value_after = state.value(spot, c2);
    return out;
}

namespace {

struct StepTables {
    std::optional<GreekTable> target;
    std::optional<GreekTable> second;
    std::optional<MinVarianceKernel> mv;
};

// Time-outer engine: tables for a rebalance date are built once and shared by
// all paths, which then update independently.
template <class SpotFn, class StateFn, class TablesFn>
HedgeRun hedge_engine(std::size_t n_paths, std::size_t n_steps, double dt, const HedgeSpec& spec,
                      const HedgeContext& ctx, const SpotFn& spot_at, const StateFn& state_at,
                      const TablesFn& tables_at, bool parallel) {
    spec.validate();
    const double big_t = spec.target.expiry;
    const double steps_exact = big_t / dt;
    const auto n_t = static_cast<std::size_t>(std::llround(steps_exact));
    if (std::abs(steps_exact - static_cast<double>(n_t)) > 1e-6 || n_t == 0) {
        throw DomainError("hedge: expiry must be a whole number of path steps");
    }
    if (n_t > n_steps) throw DomainError("hedge: expiry beyond the path horizon");
    const Strategy strategy = spec.strategy;
    const bool two = uses_second_instrument(strategy);
    const bool second_expires = two && spec.second->expiry - big_t < 1e-12;

    HedgeRun run;
    run.expiry = big_t;
    run.r = ctx.r;
    std::vector<LedgerState> book(n_paths);
    std::vector<double> sf_err(n_paths, 0.0), greek_err(n_paths, 0.0);
    std::vector<std::size_t> fallbacks(n_paths, 0);
    std::size_t failed_path = std::numeric_limits<std::size_t>::max();
    std::exception_ptr failure;

    auto for_paths = [&](const auto& body) {
        const long long n = static_cast<long long>(n_paths);
#pragma omp parallel for schedule(static) if (parallel)
        for (long long p = 0; p < n; ++p) {
            const auto path = static_cast<std::size_t>(p);
            try {
                body(path);
            } catch (...) {
#pragma omp critical(hedge_failure)
                if (path < failed_path) {
                    failed_path = path;
                    failure = std::current_exception();
                }
            }
        }
        if (failure) rethrow_with_path(failure, failed_path);
    };

    std::size_t last = 0;
    for (std::size_t i = 0; i < n_t; i += spec.rebalance_every) {
        const StepTables tb = tables_at(i, false);
        if (i == 0) {
            const double s0 = spot_at(0, 0), v0 = state_at(0, 0);
            run.premium = ctx.premium ? *ctx.premium : tb.target->price(s0, v0);
            if (two) run.premium2 = ctx.premium2 ? *ctx.premium2 : tb.second->price(s0, v0);
            if (!(run.premium > 0.0)) throw DomainError("hedge: premium must be > 0");
            for (LedgerState& b : book) b.cash = run.premium;
        }
        const double elapsed = static_cast<double>(i - last) * dt;
        for_paths([&](std::size_t p) {
            const double s = spot_at(p, i), v = state_at(p, i);
            InstrumentGreeks g1, g2;
            if (strategy != Strategy::Unhedged) g1 = tb.target->eval(s, v);
            if (two) g2 = tb.second->eval(s, v);
            const double c2 = two ? (i == 0 ? run.premium2 : g2.price) : 0.0;
            const bool gamma = strategy == Strategy::DeltaGamma;
            const bool fallback = two && !(std::abs(gamma ? g2.gamma : g2.vega) >= kDegenerateGreek);
            if (fallback) ++fallbacks[p];
            const HedgeRatios ratios = strategy == Strategy::MinVariance
                                           ? HedgeRatios{tb.mv->ratio(*tb.target, s, v), 0.0}
                                           : hedge_ratios(fallback ? Strategy::Delta : strategy, g1, g2);
            const StepResult st = portfolio_step(book[p], s, c2, ratios, ctx.r, elapsed);
            const double scale = std::max(std::abs(st.value_before), run.premium);
            sf_err[p] = std::max(sf_err[p], std::abs(st.value_after - st.value_before) / scale);
            if (two && !fallback) {
                const double own = gamma ? g1.gamma : g1.vega;
                const double other = gamma ? g2.gamma : g2.vega;
                const double resid = std::abs(own - book[p].lambda2 * other);
                greek_err[p] = std::max(greek_err[p], resid / std::max(std::abs(own), 1e-300));
            }
            if (ctx.record_path && *ctx.record_path == p) {
#pragma omp critical(hedge_ledger)
                run.ledger.push_back({static_cast<double>(i) * dt, s, v, c2, book[p], st.value_after});
            }
        });
        last = i;
        ++run.n_rebalances;
    }

    // Settlement at the target expiry.
    StepTables fin;
    if (two && !second_expires) fin = tables_at(n_t, true);
    const double growth = std::exp(ctx.r * static_cast<double>(n_t - last) * dt);
    run.pnl.assign(n_paths, 0.0);
    for_paths([&](std::size_t p) {
        const double s = spot_at(p, n_t);
        double c2 = 0.0;
        if (two) c2 = second_expires ? intrinsic(*spec.second, s) : fin.second->price(s, state_at(p, n_t));
        LedgerState& b = book[p];
        b.cash *= growth;
        run.pnl[p] = b.value(s, c2) - intrinsic(spec.target, s);
        if (ctx.record_path && *ctx.record_path == p) {
            run.ledger.push_back({big_t, s, state_at(p, n_t), c2, b, b.value(s, c2)});
        }
    });
    for (std::size_t p = 0; p < n_paths; ++p) {
        run.max_self_financing_error = std::max(run.max_self_financing_error, sf_err[p]);
        run.max_book_greek = std::max(run.max_book_greek, greek_err[p]);
        run.n_delta_fallbacks += fallbacks[p];
    }
    run.rel_pnl = relative_pnl(run.pnl, run.premium, ctx.r, big_t);
    return run;
}

OptionSpec remaining(const OptionSpec& o, double elapsed) { return {o.strike, o.expiry - elapsed, o.is_call}; }

HedgeRun experiment(const PathMatrix& paths, const HedgeSpec& spec, const HedgeContext& ctx, bool parallel) {
    paths.validate();
    ModelParams model = spec.hedge_model;
    model.r = ctx.r;
    model.validate();
    const ModelFamily fam = model.family();
    const bool stateful = has_variance_state(fam);
    const bool from_paths = stateful && ctx.state_from_paths && paths.has_variance();
    const double frozen = fam == ModelFamily::CGMY ? 0.0
                          : stateful               ? std::max(volatility_state(model), ctx.state_floor)
                                                   : volatility_state(model);
    std::optional<StateRange> range;
    if (from_paths) {
        double hi = ctx.state_floor;
        for (double v : paths.variances) hi = std::max(hi, v);
        if (fam == ModelFamily::SVCJ && spec.strategy == Strategy::MinVariance) {
            hi += 8.0 * std::get<SvcjParams>(model.dynamics).mu_v;
        }
        range = StateRange{ctx.state_floor, hi * 1.01, ctx.state_nodes};
    }
    const double dt = paths.dt;
    auto spot_at = [&](std::size_t p, std::size_t i) { return paths.price(p, i); };
    auto state_at = [&](std::size_t p, std::size_t i) {
        return from_paths ? std::max(paths.variance(p, i), ctx.state_floor) : frozen;
    };
    auto tables_at = [&](std::size_t i, bool final) {
        const double t = static_cast<double>(i) * dt;
        StepTables tb;
        if (!final) tb.target.emplace(model, remaining(spec.target, t), ctx.fft, range);
        if (spec.second) tb.second.emplace(model, remaining(*spec.second, t), ctx.fft, range);
        if (!final && spec.strategy == Strategy::MinVariance) {
            tb.mv.emplace(model, ctx.n_jump_draws, ctx.jump_seed);
        }
        return tb;
    };
    return hedge_engine(paths.n_paths, paths.n_steps, dt, spec, ctx, spot_at, state_at, tables_at, parallel);
}

}  // namespace

HedgeRun run_hedge_experiment(const PathMatrix& paths, const HedgeSpec& spec, const HedgeContext& ctx) {
    return experiment(paths, spec, ctx, true);
}

HedgeRun run_hedge_experiment_serial(const PathMatrix& paths, const HedgeSpec& spec, const HedgeContext& ctx) {
    return experiment(paths, spec, ctx, false);
}

HedgeRun hedge_single_path(std::span<const double> prices, double dt, const HedgeSpec& spec,
                           const HedgeContext& ctx, const std::function<ModelParams(std::size_t)>& model_at) {
    if (prices.size() < 2) throw DomainError("hedge_single_path: need at least two prices");
    for (double s : prices) {
        if (!(s > 0.0) || !std::isfinite(s)) throw DomainError("hedge_single_path: prices must be positive");
    }
    auto model_for = [&](std::size_t i) {
        ModelParams m = model_at(i);
        m.r = ctx.r;
        return m;
    };
    auto state_of = [&](const ModelParams& m) {
        if (m.family() == ModelFamily::CGMY) return 0.0;
        const double v = volatility_state(m);
        return has_variance_state(m.family()) ? std::max(v, ctx.state_floor) : v;
    };
    auto spot_at = [&](std::size_t, std::size_t i) { return prices[i]; };
    // The model at the last rebalance marks the second instrument at expiry.
    auto state_at = [&](std::size_t, std::size_t i) { return state_of(model_for(i)); };
    auto tables_at = [&](std::size_t i, bool final) {
        const ModelParams model = model_for(i);
        const double t = static_cast<double>(i) * dt;
        StepTables tb;
        if (!final) tb.target.emplace(model, remaining(spec.target, t), ctx.fft);
        if (spec.second) tb.second.emplace(model, remaining(*spec.second, t), ctx.fft);
        if (!final && spec.strategy == Strategy::MinVariance) {
            tb.mv.emplace(model, ctx.n_jump_draws, ctx.jump_seed);
        }
        return tb;
    };
    HedgeSpec s = spec;
    s.hedge_model = model_for(0);
    return hedge_engine(1, prices.size() - 1, dt, s, ctx, spot_at, state_at, tables_at, false);
}

void write_pnl_csv(std::ostream& out, const HedgeRun& run) {
    out << "path_id,pnl,rel_pnl\n" << std::setprecision(17);
    for (std::size_t i = 0; i < run.pnl.size(); ++i) {
        out << i << ',' << run.pnl[i] << ',' << run.rel_pnl[i] << '\n';
    }
}

}  // namespace cchedge
