#include "cchedge/optimize.hpp"

#include "cchedge/errors.hpp"

#include <boost/math/tools/minima.hpp>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>
#include <gsl/gsl_qrng.h>

#include <cmath>
#include <memory>

namespace cchedge {

namespace {

constexpr double kHuge = 1e100;

struct Callback {
    const Objective* f;
    std::vector<double> buf;
};

double trampoline(const gsl_vector* v, void* params) {
    auto* cb = static_cast<Callback*>(params);
    for (std::size_t i = 0; i < cb->buf.size(); ++i) cb->buf[i] = gsl_vector_get(v, i);
    double y;
    try {
        y = (*cb->f)(cb->buf);
    } catch (const NumericError&) {
        y = kHuge;
    }
    return std::isfinite(y) ? std::min(y, kHuge) : kHuge;
}

struct VectorDeleter {
    void operator()(gsl_vector* v) const { gsl_vector_free(v); }
};
struct MinimizerDeleter {
    void operator()(gsl_multimin_fminimizer* m) const { gsl_multimin_fminimizer_free(m); }
};
struct QrngDeleter {
    void operator()(gsl_qrng* q) const { gsl_qrng_free(q); }
};

}  // namespace

OptimResult nelder_mead(const Objective& f, std::vector<double> x0, const NelderMeadOptions& opts) {
    const std::size_t n = x0.size();
    if (n == 0) throw ConfigError("nelder_mead: empty start vector");
    if (!opts.step.empty() && opts.step.size() != n) throw ConfigError("nelder_mead: step size mismatch");
    gsl_set_error_handler_off();

    if (n == 1) {
        // The simplex degenerates to a segment; Brent on a wide bracket is the better tool.
        const double step = opts.step.empty() ? (x0[0] != 0.0 ? 0.1 * std::abs(x0[0]) : 0.1) : opts.step[0];
        std::uintmax_t iters = opts.max_iter;
        auto g = [&](double x) {
            double y;
            try {
                y = f(std::span<const double>(&x, 1));
            } catch (const NumericError&) {
                y = kHuge;
            }
            return std::isfinite(y) ? std::min(y, kHuge) : kHuge;
        };
        // Walk downhill from x0 until the minimum is bracketed, then refine.
        double a = x0[0], b = x0[0] + step;
        double fa = g(a), fb = g(b);
        if (fb > fa) {
            std::swap(a, b);
            std::swap(fa, fb);
        }
        double c = b + 1.618 * (b - a);
        double fc = g(c);
        for (int k = 0; k < 60 && fc <= fb; ++k) {
            a = b;
            fa = fb;
            b = c;
            fb = fc;
            c = b + 1.618 * (b - a);
            fc = g(c);
        }
        const auto [xm, fm] = boost::math::tools::brent_find_minima(g, std::min(a, c), std::max(a, c), 40, iters);
        OptimResult r;
        r.x = {xm};
        r.f = fm;
        r.iterations = static_cast<std::size_t>(iters);
        r.converged = iters < opts.max_iter;
        if (g(x0[0]) < r.f) {
            r.x = {x0[0]};
            r.f = g(x0[0]);
        }
        return r;
    }

    Callback cb{&f, std::vector<double>(n)};
    gsl_multimin_function fn{&trampoline, n, &cb};
    std::unique_ptr<gsl_vector, VectorDeleter> x(gsl_vector_alloc(n));
    std::unique_ptr<gsl_vector, VectorDeleter> step(gsl_vector_alloc(n));
    for (std::size_t i = 0; i < n; ++i) {
        gsl_vector_set(x.get(), i, x0[i]);
        const double s = opts.step.empty() ? (x0[i] != 0.0 ? 0.1 * std::abs(x0[i]) : 0.1) : opts.step[i];
        gsl_vector_set(step.get(), i, s);
    }
    std::unique_ptr<gsl_multimin_fminimizer, MinimizerDeleter> m(
        gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n));
    if (gsl_multimin_fminimizer_set(m.get(), &fn, x.get(), step.get()) != GSL_SUCCESS) {
        throw NumericError("nelder_mead: could not initialise simplex");
    }
    OptimResult r;
    int status = GSL_CONTINUE;
    while (r.iterations < opts.max_iter && status == GSL_CONTINUE) {
        ++r.iterations;
        if (gsl_multimin_fminimizer_iterate(m.get()) != GSL_SUCCESS) break;
        status = gsl_multimin_test_size(gsl_multimin_fminimizer_size(m.get()), opts.size_tol);
    }
    r.converged = status == GSL_SUCCESS;
    r.f = gsl_multimin_fminimizer_minimum(m.get());
    const gsl_vector* best = gsl_multimin_fminimizer_x(m.get());
    r.x.resize(n);
    for (std::size_t i = 0; i < n; ++i) r.x[i] = gsl_vector_get(best, i);
    return r;
}

std::vector<std::vector<double>> sobol_points(std::span<const double> lo, std::span<const double> hi,
                                              std::size_t n) {
    const std::size_t dim = lo.size();
    if (dim == 0 || hi.size() != dim) throw ConfigError("sobol_points: bad bounds");
    if (dim > 40) throw ConfigError("sobol_points: at most 40 dimensions");
    std::unique_ptr<gsl_qrng, QrngDeleter> q(gsl_qrng_alloc(gsl_qrng_sobol, static_cast<unsigned>(dim)));
    std::vector<std::vector<double>> out(n, std::vector<double>(dim));
    std::vector<double> u(dim);
    for (auto& p : out) {
        gsl_qrng_get(q.get(), u.data());
        for (std::size_t i = 0; i < dim; ++i) p[i] = lo[i] + (hi[i] - lo[i]) * u[i];
    }
    return out;
}

}  // namespace cchedge
