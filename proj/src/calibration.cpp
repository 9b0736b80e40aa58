#include "cchedge/calibration.hpp"

#include "cchedge/errors.hpp"
#include "cchedge/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace cchedge {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::size_t rho_j_index(ModelFamily family) {
    return family == ModelFamily::SVCJ ? parameter_names(family).size() - 1 : static_cast<std::size_t>(-1);
}

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

std::vector<QuoteRow> filter_quotes(std::span<const QuoteRow> quotes, double r) {
    std::vector<QuoteRow> out;
    for (const QuoteRow& q : quotes) {
        if (!(q.volume > 0.0)) continue;
        const double tau = q.tau();
        if (!(tau > 0.0) || !(q.iv > 0.0)) continue;
        const OptionSpec spec{q.strike, tau, q.type == OptionType::Call};
        const double delta = std::abs(bs_greeks(q.iv, q.underlying, r, spec).delta);
        if (delta >= 0.25 && delta <= 0.75) out.push_back(q);
    }
    return out;
}

CalibData make_calib_data(std::span<const QuoteRow> quotes, double r) {
    if (quotes.empty()) throw DomainError("make_calib_data: no quotes");
    CalibData d;
    d.r = r;
    double sum = 0.0;
    for (const QuoteRow& q : quotes) sum += q.underlying;
    d.s0 = sum / static_cast<double>(quotes.size());
    for (const QuoteRow& q : quotes) {
        q.validate();
        d.quotes.push_back({q.strike * d.s0 / q.underlying, q.tau(), q.type == OptionType::Call, q.iv});
    }
    return d;
}

void CalibConfig::validate(ModelFamily family) const {
    const std::size_t n = parameter_names(family).size();
    if (gamma_diag.size() != n || lo.size() != n || hi.size() != n || start.size() != n) {
        throw ConfigError("CalibConfig: vector sizes must match the parameter count");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!(gamma_diag[i] >= 0.0)) throw ConfigError("CalibConfig: gamma_diag must be >= 0");
        if (!(lo[i] < hi[i])) throw ConfigError("CalibConfig: lo must be < hi");
    }
    if (max_iter == 0) throw ConfigError("CalibConfig: max_iter must be >= 1");
    if (!(tol > 0.0)) throw ConfigError("CalibConfig: tol must be > 0");
    fft.validate();
}

CalibConfig default_calib_config(ModelFamily family) {
    CalibConfig c;
    const std::vector<double> sv_lo{0.01, 0.005, 0.01, -0.99, 0.005};
    const std::vector<double> sv_hi{10.0, 4.0, 5.0, 0.99, 4.0};
    const std::vector<double> sv_start{2.0, 0.5, 1.0, 0.0, 0.5};
    auto cat = [](std::vector<double> a, std::initializer_list<double> b) {
        a.insert(a.end(), b);
        return a;
    };
    switch (family) {
        case ModelFamily::BS:
            c.lo = {0.01};
            c.hi = {3.0};
            c.start = {0.7};
            break;
        case ModelFamily::JD:
            c.lo = {0.01, 0.0, -1.0, 0.0};
            c.hi = {3.0, 10.0, 1.0, 1.5};
            c.start = {0.5, 0.5, -0.05, 0.2};
            break;
        case ModelFamily::SV:
            c.lo = sv_lo;
            c.hi = sv_hi;
            c.start = sv_start;
            break;
        case ModelFamily::SVJ:
            c.lo = cat(sv_lo, {0.0, -1.0, 0.0});
            c.hi = cat(sv_hi, {5.0, 1.0, 1.5});
            c.start = cat(sv_start, {0.5, 0.0, 0.1});
            break;
        case ModelFamily::SVCJ:
            c.lo = cat(sv_lo, {0.0, -1.0, 0.0, 1e-4, -2.0});
            c.hi = cat(sv_hi, {5.0, 1.0, 1.5, 2.0, 2.0});
            c.start = cat(sv_start, {0.5, 0.0, 0.1, 0.2, 0.0});
            break;
        case ModelFamily::VG:
            c.lo = {0.01, 0.001, -2.0};
            c.hi = {3.0, 5.0, 2.0};
            c.start = {0.7, 0.3, 0.0};
            break;
        case ModelFamily::CGMY:
            c.lo = {1e-3, 0.1, 1.05, -1.0};
            c.hi = {20.0, 50.0, 50.0, 1.9};
            c.start = {1.0, 5.0, 5.0, 0.5};
            break;
    }
    for (double s : c.start) {
        const double ref = std::max(std::abs(s), 0.1);
        c.gamma_diag.push_back(1e-4 / (ref * ref));
    }
    return c;
}

double calib_rmse(const ModelParams& model, const CalibData& data, const FftConfig& fft) {
    if (data.quotes.empty()) throw DomainError("calib_rmse: no quotes");
    std::map<double, std::vector<std::size_t>> by_tau;
    for (std::size_t i = 0; i < data.quotes.size(); ++i) by_tau[data.quotes[i].tau].push_back(i);
    double sse = 0.0;
    try {
        for (const auto& [tau, idx] : by_tau) {
            const CallCurve curve = carr_madan_curve(model, tau, fft);
            for (std::size_t i : idx) {
                const CalibQuote& q = data.quotes[i];
                const OptionSpec spec{q.strike, tau, q.is_call};
                const double iv = implied_vol(curve.price(q.strike, q.is_call), data.s0, data.r, spec);
                sse += (iv - q.iv) * (iv - q.iv);
            }
        }
    } catch (const std::exception&) {
        return kInf;
    }
    return std::sqrt(sse / static_cast<double>(data.quotes.size()));
}

double calib_objective(ModelFamily family, std::span<const double> theta, const CalibData& data,
                       std::span<const double> gamma_diag, const FftConfig& fft) {
    if (data.quotes.empty()) throw DomainError("calib_objective: no quotes");
    if (gamma_diag.size() != theta.size()) throw ConfigError("calib_objective: gamma size mismatch");
    ModelParams model;
    try {
        model = ModelParams{unpack(family, theta), data.r, data.s0};
        model.validate();
    } catch (const DomainError&) {
        return kInf;
    }
    double pen = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) pen += gamma_diag[i] * theta[i] * theta[i];
    return calib_rmse(model, data, fft) + pen;
}

CalibResult calibrate(ModelFamily family, const CalibData& data, const CalibConfig& cfg) {
    cfg.validate(family);
    if (data.quotes.empty()) throw DomainError("calibrate: no quotes after filtering");
    const std::size_t n = cfg.start.size();

    // Free coordinates are optimized through a logistic map onto (lo, hi).
    std::vector<double> fixed(n, std::numeric_limits<double>::quiet_NaN());
    if (family == ModelFamily::SVCJ && cfg.fix_rho_j) fixed[rho_j_index(family)] = *cfg.fix_rho_j;
    std::vector<std::size_t> free;
    for (std::size_t i = 0; i < n; ++i) {
        if (std::isnan(fixed[i])) free.push_back(i);
    }
    auto to_theta = [&](std::span<const double> z) {
        std::vector<double> theta = fixed;
        for (std::size_t j = 0; j < free.size(); ++j) {
            const std::size_t i = free[j];
            theta[i] = cfg.lo[i] + (cfg.hi[i] - cfg.lo[i]) * logistic(z[j]);
        }
        return theta;
    };
    auto to_z = [&](std::span<const double> theta) {
        std::vector<double> z(free.size());
        for (std::size_t j = 0; j < free.size(); ++j) {
            const std::size_t i = free[j];
            const double w = cfg.hi[i] - cfg.lo[i];
            const double x = std::clamp(theta[i], cfg.lo[i] + 1e-9 * w, cfg.hi[i] - 1e-9 * w);
            z[j] = std::log((x - cfg.lo[i]) / (cfg.hi[i] - x));
        }
        return z;
    };
    auto objective = [&](std::span<const double> z) {
        return calib_objective(family, to_theta(z), data, cfg.gamma_diag, cfg.fft);
    };

    std::vector<std::vector<double>> starts{cfg.start};
    if (cfg.n_starts > 0) {
        for (auto& s : sobol_points(cfg.lo, cfg.hi, cfg.n_starts)) starts.push_back(std::move(s));
    }
    std::vector<OptimResult> runs(starts.size());
    NelderMeadOptions nm;
    nm.max_iter = cfg.max_iter;
    nm.size_tol = cfg.tol;
    nm.step.assign(free.size(), 0.5);
#pragma omp parallel for schedule(dynamic)
    for (std::size_t s = 0; s < starts.size(); ++s) {
        const std::vector<double> z0 = to_z(starts[s]);
        if (!std::isfinite(objective(z0))) {
            runs[s].f = kInf;
            continue;
        }
        runs[s] = nelder_mead(objective, z0, nm);
    }
    std::size_t best = 0;
    for (std::size_t s = 1; s < runs.size(); ++s) {
        if (runs[s].f < runs[best].f) best = s;
    }
    if (!(runs[best].f < 1e99)) throw NumericError("calibrate: every start failed");

    CalibResult out;
    const std::vector<double> theta = to_theta(runs[best].x);
    out.params = ModelParams{unpack(family, theta), data.r, data.s0};
    out.objective = runs[best].f;
    out.rmse = calib_rmse(out.params, data, cfg.fft);
    out.n_quotes = data.quotes.size();
    out.converged = runs[best].converged;
    return out;
}

std::vector<double> nested_start(ModelFamily target, const ModelParams& source, const CalibConfig& cfg) {
    const ModelFamily from = source.family();
    if (from == ModelFamily::SV && (target == ModelFamily::SVJ || target == ModelFamily::SVCJ)) {
        std::vector<double> v = pack(source.dynamics);
        if (target == ModelFamily::SVJ) {
            v.insert(v.end(), {0.0, 0.0, 0.0});
        } else {
            v.insert(v.end(), {0.0, 0.0, 0.0, cfg.lo.at(8), cfg.fix_rho_j.value_or(0.0)});
        }
        return v;
    }
    if (from == ModelFamily::VG && target == ModelFamily::CGMY) {
        const CgmTriple t = vg_to_cgm(std::get<VgParams>(source.dynamics));
        return {t.c, t.g, t.m, 0.0};
    }
    return {};
}

}  // namespace cchedge
