#pragma once

// Model parameter records and risk-neutral characteristic functions of ln S_T.

#include <complex>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace cchedge {

using cplx = std::complex<double>;

/// Black-Scholes: constant volatility.
struct BsParams {
    double sigma = 0.0;
};

/// Merton jump diffusion with lognormal jumps, log jump ~ N(mu_s, delta_s^2).
struct JdParams {
    double sigma = 0.0;
    double lambda = 0.0;
    double mu_s = 0.0;
    double delta_s = 0.0;
};

/// Heston square-root variance with price/variance correlation rho.
struct SvParams {
    double kappa = 0.0;
    double theta = 0.0;
    double sigma_v = 0.0;
    double rho = 0.0;
    double v0 = 0.0;
};

/// SV plus Poisson jumps in log price, jump ~ N(mu_s, sigma_s^2).
struct SvjParams {
    SvParams sv;
    double lambda = 0.0;
    double mu_s = 0.0;
    double sigma_s = 0.0;
};

/// SV with simultaneous correlated jumps: variance jump Z^v ~ Exp(mean mu_v),
/// log-price jump Z^s | Z^v ~ N(mu_s + rho_j Z^v, sigma_s^2).
struct SvcjParams {
    SvParams sv;
    double lambda = 0.0;
    double mu_s = 0.0;
    double sigma_s = 0.0;
    double mu_v = 0.0;
    double rho_j = 0.0;
};

/// Variance Gamma, X = theta_vg G_t + sigma_vg W_{G_t}, Gamma clock variance rate nu.
struct VgParams {
    double sigma_vg = 0.0;
    double nu = 0.0;
    double theta_vg = 0.0;
};

/// CGMY Levy process. y == 0 is the variance-gamma process in (C, G, M) form.
struct CgmyParams {
    double c = 0.0;
    double g = 0.0;
    double m = 0.0;
    double y = 0.0;
};

enum class ModelFamily { BS, JD, SV, SVJ, SVCJ, VG, CGMY };

inline constexpr ModelFamily kAllFamilies[] = {ModelFamily::BS,  ModelFamily::JD, ModelFamily::SV,
                                               ModelFamily::SVJ, ModelFamily::SVCJ, ModelFamily::VG,
                                               ModelFamily::CGMY};

std::string_view to_string(ModelFamily family);
ModelFamily parse_model_family(std::string_view name);

using ModelDynamics =
    std::variant<BsParams, JdParams, SvParams, SvjParams, SvcjParams, VgParams, CgmyParams>;

/// Model dynamics plus the valuation context (rate and spot).
struct ModelParams {
    ModelDynamics dynamics;
    double r = 0.0;
    double s0 = 1.0;

    ModelFamily family() const;
    /// Throws DomainError when any type invariant is violated.
    void validate() const;
};

void validate(const BsParams& p);
void validate(const JdParams& p);
void validate(const SvParams& p);
void validate(const SvjParams& p);
void validate(const SvcjParams& p);
void validate(const VgParams& p);
void validate(const CgmyParams& p);

struct CgmTriple {
    double c = 0.0;
    double g = 0.0;
    double m = 0.0;
};

/// (sigma, nu, theta) -> (C, G, M) representation of the same VG law.
CgmTriple vg_to_cgm(const VgParams& p);

/// Conditional mean relative price jump E[e^{Z^s}] - 1 used in the SVCJ drift compensator.
double svcj_mean_jump(const SvcjParams& p);

/// phi(u) = E[exp(i u ln S_tau)] under the risk-neutral measure.
cplx chf_eval(const ModelParams& model, cplx u, double tau);

/// Split of ln phi(u) = i u ln S0 + a + b * state. The state is V0 for the
/// stochastic-volatility families and absent (b = 0) for the others, which
/// lets pricing tables reuse a and b across many variance levels.
struct ChfExponent {
    cplx a;
    cplx b;
};

ChfExponent chf_exponent(const ModelParams& model, cplx u, double tau);

/// True for SV, SVJ and SVCJ.
bool has_variance_state(ModelFamily family);

/// The quantity bumped for "Vega": V0 for SV/SVJ/SVCJ, the diffusion (or VG) sigma otherwise.
/// Throws DomainError for CGMY, which has no volatility parameter.
double volatility_state(const ModelParams& model);
ModelParams with_volatility_state(const ModelParams& model, double value);

/// Open interval (lo, hi) of exponents p with E[S_T^p] finite. Infinite bounds
/// are reported as +-inf.
struct MomentRange {
    double lo;
    double hi;
};
MomentRange moment_range(const ModelParams& model);

std::vector<std::string> parameter_names(ModelFamily family);
std::vector<double> pack(const ModelDynamics& dynamics);
ModelDynamics unpack(ModelFamily family, std::span<const double> values);

}  // namespace cchedge
