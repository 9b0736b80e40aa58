#include "cchedge/analytics.hpp"

#include "cchedge/errors.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <optional>

namespace cchedge {

namespace {

std::size_t order_index(std::size_t n, double beta) {
    // ceil(beta n) with a guard against 0.95 * 100 = 94.999...
    const double pos = std::ceil(beta * static_cast<double>(n) - 1e-9);
    return static_cast<std::size_t>(std::clamp(pos, 1.0, static_cast<double>(n))) - 1;
}

void check_sample(std::span<const double> sample) {
    if (sample.empty()) throw DomainError("empty sample");
    for (double x : sample) {
        if (!std::isfinite(x)) throw DomainError("sample contains a non-finite value");
    }
}

}  // namespace

std::vector<double> relative_pnl(std::span<const double> pnl, double premium, double r, double expiry) {
    if (!(premium > 0.0)) throw DomainError("relative_pnl: premium must be > 0");
    const double scale = std::exp(-r * expiry) / premium;
    std::vector<double> out(pnl.size());
    for (std::size_t i = 0; i < pnl.size(); ++i) out[i] = scale * pnl[i];
    return out;
}

double hedge_error(std::span<const double> rel) {
    if (rel.size() < 2) throw DomainError("hedge_error: need at least two observations");
    // Shift by the first value so a constant sample gives exactly zero.
    const double n = static_cast<double>(rel.size());
    const double x0 = rel.front();
    double mean = 0.0;
    for (double x : rel) mean += x - x0;
    mean /= n;
    double ss = 0.0;
    for (double x : rel) ss += (x - x0 - mean) * (x - x0 - mean);
    return 100.0 * std::sqrt(ss / (n - 1.0));
}

double empirical_quantile(std::span<const double> sample, double beta) {
    check_sample(sample);
    if (!(beta > 0.0 && beta < 1.0)) throw DomainError("quantile: beta must lie in (0, 1)");
    std::vector<double> v(sample.begin(), sample.end());
    const std::size_t k = order_index(v.size(), beta);
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
    return v[k];
}

double expected_shortfall(std::span<const double> sample, double beta) {
    const double q = empirical_quantile(sample, beta);
    double sum = 0.0;
    std::size_t count = 0;
    for (double x : sample) {
        if (beta <= 0.5 ? x <= q : x >= q) {
            sum += x - q;   // deviations keep ties exact
            ++count;
        }
    }
    return q + sum / static_cast<double>(count);
}

void HedgeReport::validate() const {
    if (n == 0) throw DomainError("HedgeReport: empty");
    if (!(min <= es05 && es05 <= median && median <= es95 && es95 <= max)) {
        throw NumericError("HedgeReport: ordering min <= ES5 <= median <= ES95 <= max violated");
    }
}

HedgeReport build_report(std::span<const double> rel, const ReportMeta& meta) {
    check_sample(rel);
    HedgeReport r;
    r.meta = meta;
    r.n = rel.size();
    std::vector<double> sorted(rel.begin(), rel.end());
    std::sort(sorted.begin(), sorted.end());
    r.min = sorted.front();
    r.max = sorted.back();
    r.median = empirical_quantile(rel, 0.5);
    r.es05 = expected_shortfall(rel, 0.05);
    r.es95 = expected_shortfall(rel, 0.95);
    r.hedge_error = rel.size() >= 2 ? hedge_error(rel) : 0.0;
    const double q5 = sorted[order_index(r.n, 0.05)];
    const double q95 = sorted[order_index(r.n, 0.95)];
    for (double x : sorted) {
        if (x >= q5 && x <= q95) r.truncated.push_back(x);
    }
    r.model_consistent = !(meta.model == "BS" && meta.strategy == to_string(Strategy::DeltaVega));
    r.validate();
    return r;
}

BacktestResult run_backtest(const BacktestInput& input, Date start, Date end, const BacktestSpec& spec) {
    if (end < start) throw DomainError("run_backtest: end before start");
    if (spec.expiry_days < 1 || spec.second_extra_days < 1) throw DomainError("run_backtest: bad expiry days");
    const auto& px = input.prices;
    for (std::size_t i = 0; i < px.size(); ++i) {
        if (!(px[i].close > 0.0)) throw DomainError("run_backtest: closes must be > 0");
        if (i > 0 && px[i].date != px[i - 1].date + std::chrono::days{1}) {
            throw DomainError("run_backtest: price history must be on consecutive days (gap at " +
                              format_iso_date(px[i].date) + ")");
        }
    }
    auto model_on = [&](Date d) -> std::optional<ModelParams> {
        auto it = input.models.upper_bound(d);
        if (it == input.models.begin()) return std::nullopt;
        return std::prev(it)->second;
    };

    std::vector<Date> days;
    for (Date d = start; d <= end; d += std::chrono::days{1}) days.push_back(d);
    struct Outcome {
        std::optional<double> pnl, rel, premium;
        std::string skip;
    };
    std::vector<Outcome> out(days.size());
    const double dt = 1.0 / 365.0;
    const auto n_exp = static_cast<std::size_t>(spec.expiry_days);

    const long long n_days = static_cast<long long>(days.size());
#pragma omp parallel for schedule(dynamic)
    for (long long j = 0; j < n_days; ++j) {
        Outcome& o = out[static_cast<std::size_t>(j)];
        const Date d = days[static_cast<std::size_t>(j)];
        try {
            if (px.empty() || d < px.front().date || d > px.back().date) {
                o.skip = "no closing price";
                continue;
            }
            const auto idx = static_cast<std::size_t>((d - px.front().date).count());
            if (idx + n_exp >= px.size()) {
                o.skip = "price history ends before expiry";
                continue;
            }
            const auto surf = input.surfaces.find(d);
            if (surf == input.surfaces.end()) {
                o.skip = "missing surface";
                continue;
            }
            const auto model0 = model_on(d);
            if (!model0) {
                o.skip = "no hedge model";
                continue;
            }
            const double s0 = px[idx].close;
            HedgeSpec hs;
            hs.strategy = spec.strategy;
            hs.hedge_model = *model0;
            hs.target = {s0, spec.expiry_days / 365.0, true};
            if (uses_second_instrument(spec.strategy)) {
                hs.second = OptionSpec{1.05 * s0, (spec.expiry_days + spec.second_extra_days) / 365.0, true};
            }
            HedgeContext ctx = spec.ctx;
            ctx.record_path.reset();
            ctx.premium = interp_price(surf->second, hs.target, ctx.r);
            if (hs.second) ctx.premium2 = interp_price(surf->second, *hs.second, ctx.r);
            std::vector<double> path(n_exp + 1);
            for (std::size_t i = 0; i <= n_exp; ++i) path[i] = px[idx + i].close;
            const auto model_at = [&](std::size_t i) { return *model_on(d + std::chrono::days{static_cast<int>(i)}); };
            const HedgeRun run = hedge_single_path(path, dt, hs, ctx, model_at);
            o.pnl = run.pnl[0];
            o.rel = run.rel_pnl[0];
            o.premium = run.premium;
        } catch (const DomainError& e) {
            o.skip = e.what();
        } catch (const NumericError& e) {
            o.skip = e.what();
        } catch (const ConfigError& e) {
            o.skip = e.what();
        }
    }

    BacktestResult res;
    for (std::size_t j = 0; j < days.size(); ++j) {
        const Outcome& o = out[j];
        if (o.pnl) {
            res.inception.push_back(days[j]);
            res.pnl.push_back(*o.pnl);
            res.rel_pnl.push_back(*o.rel);
            res.premium.push_back(*o.premium);
        } else {
            res.skipped.push_back(format_iso_date(days[j]) + ": " + o.skip);
            std::clog << "backtest: skipped " << res.skipped.back() << '\n';
        }
    }
    return res;
}

}  // namespace cchedge
