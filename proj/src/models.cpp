#include "cchedge/models.hpp"

#include "cchedge/errors.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <limits>
#include <string>

namespace cchedge {

namespace {

constexpr cplx kI{0.0, 1.0};

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require(bool ok, const char* what) {
    if (!ok) throw DomainError(what);
}

// Heston (little trap) pieces for ln S with log-drift excluded.
struct HestonTerms {
    cplx a;      // A(u, tau)
    cplx b;      // B(u, tau)
    cplx beta;   // (b - d) / sigma_v^2, the tau -> inf limit of B
    cplx d;
    cplx g;
};

HestonTerms heston_terms(const SvParams& p, cplx u, double tau) {
    const double sv2 = p.sigma_v * p.sigma_v;
    const cplx iu = kI * u;
    const cplx bb = p.kappa - p.rho * p.sigma_v * iu;
    cplx d = std::sqrt(bb * bb + sv2 * (iu + u * u));
    // b + d == 0 happens only at isolated points (e.g. u = -i with kappa < rho sigma_v);
    // the formulas are symmetric in d -> -d, so flip to the finite branch.
    if (std::abs(bb + d) < 1e-14 * (1.0 + std::abs(bb))) d = -d;
    const cplx g = (bb - d) / (bb + d);
    const cplx e = std::exp(-d * tau);
    const cplx beta = (bb - d) / sv2;
    HestonTerms t;
    t.beta = beta;
    t.d = d;
    t.g = g;
    t.b = beta * (1.0 - e) / (1.0 - g * e);
    t.a = p.kappa * p.theta / sv2 * ((bb - d) * tau - 2.0 * std::log((1.0 - g * e) / (1.0 - g)));
    return t;
}

// log(1 + z) / z, continuous through z = 0.
cplx log1p_over(cplx z) {
    if (std::abs(z) < 1e-3) {
        return 1.0 - z * (1.0 / 2.0 - z * (1.0 / 3.0 - z * (1.0 / 4.0 - z / 5.0)));
    }
    return std::log(1.0 + z) / z;
}

// Integral over s in [0, tau] of 1 / (c - mu_v B(u, s)) by composite Gauss-Legendre
// on geometrically shrinking panels toward s = 0, where B has its boundary layer.
cplx svcj_jump_integral_quadrature(const SvParams& sv, cplx u, double tau, cplx c, double mu_v) {
    using Rule = boost::math::quadrature::gauss<double, 10>;
    const auto& x = Rule::abscissa();
    const auto& w = Rule::weights();
    auto integrand = [&](double s) {
        const HestonTerms t = heston_terms(sv, u, s);
        return 1.0 / (c - mu_v * t.b);
    };
    auto panel = [&](double lo, double hi) {
        const double half = 0.5 * (hi - lo);
        const double mid = 0.5 * (hi + lo);
        cplx sum = w[0] * integrand(mid);
        for (std::size_t k = 1; k < x.size(); ++k) {
            sum += w[k] * (integrand(mid + half * x[k]) + integrand(mid - half * x[k]));
        }
        return sum * half;
    };
    constexpr int kPanels = 40;
    cplx total{0.0, 0.0};
    double hi = tau;
    for (int j = 0; j < kPanels; ++j) {
        const double lo = 0.5 * hi;
        total += panel(lo, hi);
        hi = lo;
    }
    total += panel(0.0, hi);
    return total;
}

// log(1 + w y(tau)) - log(1 + w) with y(s) = exp(-d s), continued along the path
// s in [0, tau] instead of taken on the principal branch.
cplx continuous_log_change(cplx w, cplx d, double tau) {
    auto f = [&](double s) { return 1.0 + w * std::exp(-d * s); };
    cplx total{0.0, 0.0};
    auto segment = [&](auto&& self, double lo, cplx f_lo, double hi, cplx f_hi, int depth) -> void {
        const double mid = 0.5 * (lo + hi);
        const cplx f_mid = f(mid);
        const cplx whole = std::log(f_hi / f_lo);
        const cplx split = std::log(f_mid / f_lo) + std::log(f_hi / f_mid);
        if (depth >= 40 || (std::abs(whole - split) < 1e-12 && std::abs(whole.imag()) < 1.0)) {
            total += split;
            return;
        }
        self(self, lo, f_lo, mid, f_mid, depth + 1);
        self(self, mid, f_mid, hi, f_hi, depth + 1);
    };
    const int pieces = 1 + static_cast<int>(std::abs(d.imag()) * tau / 0.5);
    double lo = 0.0;
    cplx f_lo = f(0.0);
    for (int k = 1; k <= pieces; ++k) {
        const double hi = tau * k / pieces;
        const cplx f_hi = f(hi);
        segment(segment, lo, f_lo, hi, f_hi, 0);
        lo = hi;
        f_lo = f_hi;
    }
    return total;
}

// Integral over s in [0, tau] of 1 / (c - mu_v B(u, s)) in closed form. With
// y = exp(-d s), B = beta (1 - y) / (1 - g y), the integrand is (1 - g y)/(P + Q y).
cplx svcj_jump_integral(const SvParams& sv, const HestonTerms& h, cplx u, double tau, cplx c,
                        double mu_v) {
    const cplx P = c - mu_v * h.beta;
    const cplx Q = mu_v * h.beta - c * h.g;
    const cplx w = Q / P;
    if (std::abs(h.d) < 1e-10 || std::abs(P) < 1e-300 || !std::isfinite(std::abs(w))) {
        return svcj_jump_integral_quadrature(sv, u, tau, c, mu_v);
    }
    if (!(std::abs(w) < 0.5)) {
        const cplx L = continuous_log_change(w, h.d, tau);
        return tau / P + L * (1.0 + h.g / w) / (h.d * P);
    }
    const cplx y = std::exp(-h.d * tau);
    // |w| < 1/2 and |y| <= 1 keep 1 + w y off the branch cut for every s in [0, tau].
    const cplx L = std::log(1.0 + w * y) - std::log(1.0 + w);
    const cplx gq_term = h.g * (y * log1p_over(w * y) - log1p_over(w));
    return tau / P + (L + gq_term) / (h.d * P);
}

cplx cgmy_levy_exponent(const CgmyParams& p, cplx u) {
    const cplx m_side = p.m - kI * u;
    const cplx g_side = p.g + kI * u;
    if (std::abs(p.y) < 1e-6) {
        return p.c * (std::log(p.m) - std::log(m_side) + std::log(p.g) - std::log(g_side));
    }
    if (std::abs(p.y - 1.0) < 1e-6) {
        return p.c * (m_side * std::log(m_side) - p.m * std::log(p.m) + g_side * std::log(g_side) -
                      p.g * std::log(p.g));
    }
    const double gam = boost::math::tgamma(-p.y);
    return p.c * gam *
           (std::pow(m_side, p.y) - std::pow(p.m, p.y) + std::pow(g_side, p.y) - std::pow(p.g, p.y));
}

cplx vg_log_factor(const VgParams& p, cplx u) {
    const cplx iu = kI * u;
    return -std::log(1.0 - iu * p.theta_vg * p.nu + 0.5 * p.sigma_vg * p.sigma_vg * p.nu * u * u) /
           p.nu;
}

ChfExponent exponent_without_spot(const ModelDynamics& dyn, double r, cplx u, double tau) {
    const cplx iu = kI * u;
    return std::visit(
        Overloaded{
            [&](const BsParams& p) -> ChfExponent {
                const double s2 = p.sigma * p.sigma;
                return {iu * (r - 0.5 * s2) * tau - 0.5 * s2 * u * u * tau, 0.0};
            },
            [&](const JdParams& p) -> ChfExponent {
                const double s2 = p.sigma * p.sigma;
                const double d2 = p.delta_s * p.delta_s;
                const double kbar = std::exp(p.mu_s + 0.5 * d2) - 1.0;
                const cplx jump = std::exp(iu * p.mu_s - 0.5 * d2 * u * u) - 1.0;
                return {iu * (r - 0.5 * s2 - p.lambda * kbar) * tau - 0.5 * s2 * u * u * tau +
                            p.lambda * tau * jump,
                        0.0};
            },
            [&](const SvParams& p) -> ChfExponent {
                const HestonTerms h = heston_terms(p, u, tau);
                return {iu * r * tau + h.a, h.b};
            },
            [&](const SvjParams& p) -> ChfExponent {
                const HestonTerms h = heston_terms(p.sv, u, tau);
                const double s2 = p.sigma_s * p.sigma_s;
                const double kbar = std::exp(p.mu_s + 0.5 * s2) - 1.0;
                const cplx jump = std::exp(iu * p.mu_s - 0.5 * s2 * u * u) - 1.0;
                return {iu * (r - p.lambda * kbar) * tau + h.a + p.lambda * tau * jump, h.b};
            },
            [&](const SvcjParams& p) -> ChfExponent {
                const HestonTerms h = heston_terms(p.sv, u, tau);
                const double mbar = svcj_mean_jump(p);
                const cplx c = 1.0 - iu * p.rho_j * p.mu_v;
                const cplx integral = svcj_jump_integral(p.sv, h, u, tau, c, p.mu_v);
                const cplx price_jump = std::exp(iu * p.mu_s - 0.5 * p.sigma_s * p.sigma_s * u * u);
                return {iu * (r - p.lambda * mbar) * tau + h.a +
                            p.lambda * (price_jump * integral - tau),
                        h.b};
            },
            [&](const VgParams& p) -> ChfExponent {
                const double omega = -vg_log_factor(p, cplx{0.0, -1.0}).real();
                return {iu * (r + omega) * tau + tau * vg_log_factor(p, u), 0.0};
            },
            [&](const CgmyParams& p) -> ChfExponent {
                const double omega = -cgmy_levy_exponent(p, cplx{0.0, -1.0}).real();
                return {iu * (r + omega) * tau + tau * cgmy_levy_exponent(p, u), 0.0};
            },
        },
        dyn);
}

}  // namespace

std::string_view to_string(ModelFamily family) {
    switch (family) {
        case ModelFamily::BS: return "BS";
        case ModelFamily::JD: return "JD";
        case ModelFamily::SV: return "SV";
        case ModelFamily::SVJ: return "SVJ";
        case ModelFamily::SVCJ: return "SVCJ";
        case ModelFamily::VG: return "VG";
        case ModelFamily::CGMY: return "CGMY";
    }
    return "?";
}

ModelFamily parse_model_family(std::string_view name) {
    for (ModelFamily f : kAllFamilies) {
        if (to_string(f) == name) return f;
    }
    throw DomainError("unknown model family '" + std::string(name) + "'");
}

ModelFamily ModelParams::family() const { return static_cast<ModelFamily>(dynamics.index()); }

void validate(const BsParams& p) { require(p.sigma > 0.0, "BS: sigma must be > 0"); }

void validate(const JdParams& p) {
    require(p.sigma > 0.0, "JD: sigma must be > 0");
    require(p.lambda >= 0.0, "JD: lambda must be >= 0");
    require(p.delta_s >= 0.0, "JD: delta_s must be >= 0");
}

void validate(const SvParams& p) {
    require(p.kappa > 0.0, "SV: kappa must be > 0");
    require(p.theta > 0.0, "SV: theta must be > 0");
    require(p.sigma_v > 0.0, "SV: sigma_v must be > 0");
    require(p.rho >= -1.0 && p.rho <= 1.0, "SV: rho must lie in [-1, 1]");
    require(p.v0 > 0.0, "SV: v0 must be > 0");
}

void validate(const SvjParams& p) {
    validate(p.sv);
    require(p.lambda >= 0.0, "SVJ: lambda must be >= 0");
    require(p.sigma_s >= 0.0, "SVJ: sigma_s must be >= 0");
}

void validate(const SvcjParams& p) {
    validate(p.sv);
    require(p.lambda >= 0.0, "SVCJ: lambda must be >= 0");
    require(p.sigma_s >= 0.0, "SVCJ: sigma_s must be >= 0");
    require(p.mu_v > 0.0, "SVCJ: mu_v must be > 0");
    require(p.rho_j * p.mu_v < 1.0, "SVCJ: rho_j * mu_v must be < 1");
}

void validate(const VgParams& p) {
    require(p.sigma_vg > 0.0, "VG: sigma_vg must be > 0");
    require(p.nu > 0.0, "VG: nu must be > 0");
    require(1.0 - p.theta_vg * p.nu - 0.5 * p.sigma_vg * p.sigma_vg * p.nu > 0.0,
            "VG: E[S_T] is infinite (1 - theta nu - sigma^2 nu / 2 <= 0)");
}

void validate(const CgmyParams& p) {
    require(p.c > 0.0, "CGMY: C must be > 0");
    require(p.g > 0.0, "CGMY: G must be > 0");
    require(p.m > 1.0, "CGMY: M must be > 1 for a finite forward");
    require(p.y < 2.0, "CGMY: Y must be < 2");
}

void ModelParams::validate() const {
    require(r >= 0.0, "risk-free rate must be >= 0");
    require(s0 > 0.0, "spot must be > 0");
    std::visit([](const auto& p) { cchedge::validate(p); }, dynamics);
}

CgmTriple vg_to_cgm(const VgParams& p) {
    validate(p);
    const double tn = p.theta_vg * p.nu;
    const double root = std::sqrt(0.25 * tn * tn + 0.5 * p.sigma_vg * p.sigma_vg * p.nu);
    return {1.0 / p.nu, 1.0 / (root - 0.5 * tn), 1.0 / (root + 0.5 * tn)};
}

double svcj_mean_jump(const SvcjParams& p) {
    const double denom = 1.0 - p.rho_j * p.mu_v;
    if (!(denom > 0.0)) throw DomainError("SVCJ: 1 - rho_j * mu_v must be > 0");
    return std::exp(p.mu_s + 0.5 * p.sigma_s * p.sigma_s) / denom - 1.0;
}

ChfExponent chf_exponent(const ModelParams& model, cplx u, double tau) {
    if (!(tau > 0.0)) throw DomainError("chf_eval: tau must be > 0");
    model.validate();
    ChfExponent e = exponent_without_spot(model.dynamics, model.r, u, tau);
    e.a += kI * u * std::log(model.s0);
    return e;
}

cplx chf_eval(const ModelParams& model, cplx u, double tau) {
    const ChfExponent e = chf_exponent(model, u, tau);
    double state = 0.0;
    if (has_variance_state(model.family())) state = volatility_state(model);
    const cplx log_phi = e.a + e.b * state;
    if (!std::isfinite(log_phi.real()) || !std::isfinite(log_phi.imag())) {
        throw NumericError("chf_eval: non-finite exponent");
    }
    const cplx phi = std::exp(log_phi);
    if (!std::isfinite(phi.real()) || !std::isfinite(phi.imag())) {
        throw NumericError("chf_eval: characteristic function overflow");
    }
    return phi;
}

bool has_variance_state(ModelFamily family) {
    return family == ModelFamily::SV || family == ModelFamily::SVJ || family == ModelFamily::SVCJ;
}

double volatility_state(const ModelParams& model) {
    return std::visit(Overloaded{
                          [](const BsParams& p) { return p.sigma; },
                          [](const JdParams& p) { return p.sigma; },
                          [](const SvParams& p) { return p.v0; },
                          [](const SvjParams& p) { return p.sv.v0; },
                          [](const SvcjParams& p) { return p.sv.v0; },
                          [](const VgParams& p) { return p.sigma_vg; },
                          [](const CgmyParams&) -> double {
                              throw DomainError("CGMY has no volatility state");
                          },
                      },
                      model.dynamics);
}

ModelParams with_volatility_state(const ModelParams& model, double value) {
    ModelParams out = model;
    std::visit(Overloaded{
                   [&](BsParams& p) { p.sigma = value; },
                   [&](JdParams& p) { p.sigma = value; },
                   [&](SvParams& p) { p.v0 = value; },
                   [&](SvjParams& p) { p.sv.v0 = value; },
                   [&](SvcjParams& p) { p.sv.v0 = value; },
                   [&](VgParams& p) { p.sigma_vg = value; },
                   [](CgmyParams&) { throw DomainError("CGMY has no volatility state"); },
               },
               out.dynamics);
    return out;
}

MomentRange moment_range(const ModelParams& model) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    return std::visit(Overloaded{
                          [&](const VgParams& p) -> MomentRange {
                              const CgmTriple t = vg_to_cgm(p);
                              return {-t.g, t.m};
                          },
                          [&](const CgmyParams& p) -> MomentRange { return {-p.g, p.m}; },
                          [&](const auto&) -> MomentRange { return {-inf, inf}; },
                      },
                      model.dynamics);
}

std::vector<std::string> parameter_names(ModelFamily family) {
    switch (family) {
        case ModelFamily::BS: return {"sigma"};
        case ModelFamily::JD: return {"sigma", "lambda", "mu_s", "delta_s"};
        case ModelFamily::SV: return {"kappa", "theta", "sigma_v", "rho", "v0"};
        case ModelFamily::SVJ:
            return {"kappa", "theta", "sigma_v", "rho", "v0", "lambda", "mu_s", "sigma_s"};
        case ModelFamily::SVCJ:
            return {"kappa",  "theta", "sigma_v", "rho",  "v0",
                    "lambda", "mu_s",  "sigma_s", "mu_v", "rho_j"};
        case ModelFamily::VG: return {"sigma_vg", "nu", "theta_vg"};
        case ModelFamily::CGMY: return {"c", "g", "m", "y"};
    }
    return {};
}

std::vector<double> pack(const ModelDynamics& dynamics) {
    return std::visit(
        Overloaded{
            [](const BsParams& p) { return std::vector<double>{p.sigma}; },
            [](const JdParams& p) { return std::vector<double>{p.sigma, p.lambda, p.mu_s, p.delta_s}; },
            [](const SvParams& p) {
                return std::vector<double>{p.kappa, p.theta, p.sigma_v, p.rho, p.v0};
            },
            [](const SvjParams& p) {
                return std::vector<double>{p.sv.kappa, p.sv.theta, p.sv.sigma_v, p.sv.rho,
                                           p.sv.v0,    p.lambda,   p.mu_s,      p.sigma_s};
            },
            [](const SvcjParams& p) {
                return std::vector<double>{p.sv.kappa, p.sv.theta, p.sv.sigma_v, p.sv.rho, p.sv.v0,
                                           p.lambda,   p.mu_s,     p.sigma_s,    p.mu_v,   p.rho_j};
            },
            [](const VgParams& p) { return std::vector<double>{p.sigma_vg, p.nu, p.theta_vg}; },
            [](const CgmyParams& p) { return std::vector<double>{p.c, p.g, p.m, p.y}; },
        },
        dynamics);
}

ModelDynamics unpack(ModelFamily family, std::span<const double> v) {
    if (v.size() != parameter_names(family).size()) {
        throw DomainError("unpack: wrong parameter count for " + std::string(to_string(family)));
    }
    switch (family) {
        case ModelFamily::BS: return BsParams{v[0]};
        case ModelFamily::JD: return JdParams{v[0], v[1], v[2], v[3]};
        case ModelFamily::SV: return SvParams{v[0], v[1], v[2], v[3], v[4]};
        case ModelFamily::SVJ: return SvjParams{{v[0], v[1], v[2], v[3], v[4]}, v[5], v[6], v[7]};
        case ModelFamily::SVCJ:
            return SvcjParams{{v[0], v[1], v[2], v[3], v[4]}, v[5], v[6], v[7], v[8], v[9]};
        case ModelFamily::VG: return VgParams{v[0], v[1], v[2]};
        case ModelFamily::CGMY: return CgmyParams{v[0], v[1], v[2], v[3]};
    }
    throw DomainError("unpack: unknown family");
}

}  // namespace cchedge
