#include "cchedge/cli.hpp"

#include "cchedge/analytics.hpp"
#include "cchedge/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

namespace cchedge {

namespace {

constexpr const char* kCommands[] = {"fit-surface", "calibrate", "simulate", "hedge", "backtest", "report"};

struct Run {
    const CliOptions& opts;
    ExperimentConfig cfg;
    std::uint64_t seed;
    std::ostream& log;
};

json read_json(const fs::path& path, const std::string& producer) {
    if (!fs::exists(path)) throw DependencyError("missing " + path.string(), producer);
    std::ifstream in(path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path);
    out << j.dump(2) << '\n';
    if (!out) throw ConfigError("cannot write " + path.string());
}

std::vector<const SegmentDef*> selected_segments(const Run& run) {
    std::vector<const SegmentDef*> out;
    if (run.opts.segment) {
        out.push_back(&run.cfg.segment(*run.opts.segment));
    } else {
        for (const SegmentDef& s : run.cfg.segments) out.push_back(&s);
    }
    return out;
}

std::vector<ModelFamily> selected_models(const Run& run) {
    if (!run.opts.model) return run.cfg.models;
    try {
        return {parse_model_family(*run.opts.model)};
    } catch (const DomainError& e) {
        throw ConfigError(std::string("--model: ") + e.what());
    }
}

std::vector<Strategy> selected_strategies(const Run& run) {
    if (!run.opts.strategy) return run.cfg.strategies;
    try {
        return {parse_strategy(*run.opts.strategy)};
    } catch (const DomainError& e) {
        throw ConfigError(std::string("--strategy: ") + e.what());
    }
}

fs::path segment_dir(const Run& run, const SegmentDef& seg) {
    const fs::path dir = run.opts.out / seg.name;
    fs::create_directories(dir);
    return dir;
}

bool in_segment(Date d, const SegmentDef& seg) { return !(d < seg.start) && !(seg.end < d); }

std::map<Date, std::vector<QuoteRow>> quotes_by_date(const std::vector<QuoteRow>& rows, const SegmentDef& seg) {
    std::map<Date, std::vector<QuoteRow>> out;
    for (const QuoteRow& q : rows) {
        if (in_segment(q.date, seg)) out[q.date].push_back(q);
    }
    return out;
}

// --- fit-surface -------------------------------------------------------------

void cmd_fit_surface(Run& run) {
    const auto rows = load_quotes(run.cfg.quotes_path);
    for (const SegmentDef* seg : selected_segments(run)) {
        const fs::path dir = segment_dir(run, *seg);
        json surfaces = json::array(), skipped = json::array();
        SurfaceBuildOptions opts;
        opts.r = run.cfg.r;
        for (const auto& [date, day] : quotes_by_date(rows, *seg)) {
            try {
                surfaces.push_back(to_json(build_surface(day, opts)));
            } catch (const std::exception& e) {
                skipped.push_back(format_iso_date(date) + ": " + e.what());
            }
        }
        if (surfaces.empty()) throw DomainError("fit-surface: no surface could be built in segment " + seg->name);
        write_json(dir / "surfaces.json", {{"segment", seg->name}, {"surfaces", surfaces}, {"skipped", skipped}});
        run.log << seg->name << ": " << surfaces.size() << " surfaces, " << skipped.size() << " days skipped\n";
        write_manifest(dir, "fit-surface", run.seed, {run.opts.config, run.cfg.quotes_path}, {dir / "surfaces.json"});
    }
}

// --- calibrate ---------------------------------------------------------------

fs::path params_path(const fs::path& dir, ModelFamily f) {
    return dir / ("params_" + std::string(to_string(f)) + ".json");
}

// Calibrated parameters per day, in date order.
std::map<Date, ModelParams> load_params(const fs::path& dir, ModelFamily f) {
    const json j = read_json(params_path(dir, f), "calibrate");
    std::map<Date, ModelParams> out;
    for (const json& d : j.at("days")) out.emplace(parse_iso_date(d.at("date").get<std::string>()), model_from_json(d.at("params")));
    if (out.empty()) throw DependencyError("no calibrated days in " + params_path(dir, f).string(), "calibrate");
    return out;
}

// SV feeds SVJ/SVCJ and VG feeds CGMY, so the smaller model goes first.
int nesting_rank(ModelFamily f) {
    switch (f) {
        case ModelFamily::SVJ:
        case ModelFamily::SVCJ:
        case ModelFamily::CGMY: return 1;
        default: return 0;
    }
}

std::optional<ModelFamily> nested_source(ModelFamily f) {
    if (f == ModelFamily::SVJ || f == ModelFamily::SVCJ) return ModelFamily::SV;
    if (f == ModelFamily::CGMY) return ModelFamily::VG;
    return std::nullopt;
}

void cmd_calibrate(Run& run) {
    const auto rows = load_quotes(run.cfg.quotes_path);
    std::vector<ModelFamily> models = selected_models(run);
    std::stable_sort(models.begin(), models.end(),
                     [](ModelFamily a, ModelFamily b) { return nesting_rank(a) < nesting_rank(b); });
    for (const SegmentDef* seg : selected_segments(run)) {
        const fs::path dir = segment_dir(run, *seg);
        const auto days = quotes_by_date(rows, *seg);
        if (days.empty()) throw DomainError("calibrate: no quotes in segment " + seg->name);
        std::map<ModelFamily, std::map<Date, ModelParams>> fitted;
        std::vector<fs::path> inputs{run.opts.config, run.cfg.quotes_path}, outputs;
        for (ModelFamily fam : models) {
            // Warm start from the nested model of the same day, from this run or an earlier one.
            const std::map<Date, ModelParams>* source = nullptr;
            if (const auto src = nested_source(fam)) {
                if (fitted.count(*src)) {
                    source = &fitted[*src];
                } else if (fs::exists(params_path(dir, *src))) {
                    fitted[*src] = load_params(dir, *src);
                    source = &fitted[*src];
                    inputs.push_back(params_path(dir, *src));
                }
            }
            json out_days = json::array(), skipped = json::array();
            std::size_t k = 0;
            for (const auto& [date, day] : days) {
                if (k++ % run.cfg.calibration_stride != 0) continue;
                try {
                    const CalibData data = make_calib_data(filter_quotes(day, run.cfg.r), run.cfg.r);
                    CalibConfig cc = default_calib_config(fam);
                    cc.n_starts = run.cfg.calibration_starts;
                    if (run.cfg.rho_j_mode == RhoJMode::Zero) cc.fix_rho_j = 0.0;
                    if (run.cfg.rho_j_mode == RhoJMode::Calibrated) cc.fix_rho_j = std::nullopt;
                    if (run.cfg.rho_j_mode == RhoJMode::Fixed) cc.fix_rho_j = run.cfg.rho_j_value;
                    if (source && source->count(date)) {
                        auto start = nested_start(fam, source->at(date), cc);
                        if (!start.empty()) cc.start = start;
                    }
                    const CalibResult res = calibrate(fam, data, cc);
                    fitted[fam].emplace(date, res.params);
                    out_days.push_back({{"date", format_iso_date(date)},
                                        {"rmse", res.rmse},
                                        {"n_quotes", res.n_quotes},
                                        {"converged", res.converged},
                                        {"params", to_json(res.params)}});
                } catch (const std::exception& e) {
                    skipped.push_back(format_iso_date(date) + ": " + e.what());
                }
            }
            if (out_days.empty()) {
                throw NumericError("calibrate: " + std::string(to_string(fam)) + " failed on every day of " + seg->name);
            }
            write_json(params_path(dir, fam), {{"segment", seg->name},
                                               {"model", std::string(to_string(fam))},
                                               {"days", out_days},
                                               {"skipped", skipped}});
            outputs.push_back(params_path(dir, fam));
            run.log << seg->name << ": " << to_string(fam) << " calibrated on " << out_days.size() << " days, "
                    << skipped.size() << " skipped\n";
        }
        write_manifest(dir, "calibrate", run.seed, inputs, outputs);
    }
}

// --- simulate ----------------------------------------------------------------

std::vector<PricePoint> prices_or_throw(const Run& run) { return load_prices(run.cfg.prices_path); }

// Close on the segment start (first available close on or after it).
double inception_spot(const std::vector<PricePoint>& px, const SegmentDef& seg) {
    for (const PricePoint& p : px) {
        if (!(p.date < seg.start)) {
            if (seg.end < p.date) break;
            return p.close;
        }
    }
    throw DomainError("no closing price in segment " + seg.name);
}

// Parameters in force at the segment start: the first calibrated day.
ModelParams inception_model(const fs::path& dir, ModelFamily f) { return load_params(dir, f).begin()->second; }

std::size_t path_steps(const ExperimentConfig& cfg) {
    const int longest = *std::max_element(cfg.maturities_days.begin(), cfg.maturities_days.end());
    const double steps = longest / 365.0 / cfg.dt;
    const auto n = static_cast<std::size_t>(std::llround(steps));
    if (std::abs(steps - static_cast<double>(n)) > 1e-6) {
        throw ConfigError("config: every maturity must be a whole number of dt steps");
    }
    return n;
}

std::uint64_t simulator_seed(std::uint64_t seed, const std::string& sim) {
    return substream_seed(seed, sim == "svcj" ? 1 : 2);
}

fs::path paths_file(const fs::path& dir, const std::string& sim) { return dir / ("paths_" + sim + ".bin"); }

void cmd_simulate(Run& run) {
    const auto px = prices_or_throw(run);
    const std::size_t n_steps = path_steps(run.cfg);
    for (const SegmentDef* seg : selected_segments(run)) {
        const fs::path dir = segment_dir(run, *seg);
        const double s0 = inception_spot(px, *seg);
        std::vector<fs::path> inputs{run.opts.config, run.cfg.prices_path}, outputs;
        for (const std::string& sim : run.cfg.simulators) {
            PathMatrix pm;
            if (sim == "svcj") {
                SvcjParams p;
                if (run.cfg.svcj_override) {
                    p = *run.cfg.svcj_override;
                } else {
                    p = std::get<SvcjParams>(inception_model(dir, ModelFamily::SVCJ).dynamics);
                    inputs.push_back(params_path(dir, ModelFamily::SVCJ));
                }
                pm = simulate_svcj(p, s0, run.cfg.r, run.cfg.n_paths, n_steps, run.cfg.dt,
                                   simulator_seed(run.seed, sim));
            } else {
                if (std::abs(run.cfg.dt * 365.0 - 1.0) > 1e-9) {
                    throw ConfigError("config: garch-kde paths are daily, dt must be 1/365");
                }
                std::vector<double> rets;
                for (std::size_t i = 1; i < px.size(); ++i) {
                    const bool use = run.cfg.garch_full_sample || (in_segment(px[i - 1].date, *seg) && in_segment(px[i].date, *seg));
                    if (use) rets.push_back(std::log(px[i].close / px[i - 1].close));
                }
                const GarchFit fit = fit_garch11(rets);
                const KdeSampler kde{fit.residuals, run.cfg.kde_bandwidth};
                pm = simulate_garch_kde(fit, kde, s0, run.cfg.n_paths, n_steps, simulator_seed(run.seed, sim));
                write_json(dir / "garch_fit.json", {{"omega", fit.omega},
                                                    {"alpha", fit.alpha},
                                                    {"beta", fit.beta},
                                                    {"n_returns", rets.size()},
                                                    {"next_variance", fit.next_variance},
                                                    {"log_likelihood", fit.log_likelihood}});
                // Density grid of the residual KDE for plotting.
                std::ofstream dens(dir / "kde_density.csv");
                dens << "z,density\n" << std::setprecision(17);
                for (int i = -240; i <= 240; ++i) dens << i / 40.0 << ',' << kde_density(kde, i / 40.0) << '\n';
                outputs.push_back(dir / "garch_fit.json");
                outputs.push_back(dir / "kde_density.csv");
            }
            write_paths(paths_file(dir, sim), pm);
            outputs.push_back(paths_file(dir, sim));
            double mean = 0.0;
            for (std::size_t i = 0; i < pm.n_paths; ++i) mean += pm.price(i, pm.n_steps);
            mean /= static_cast<double>(pm.n_paths);
            run.log << seg->name << ": " << sim << " " << pm.n_paths << " x " << pm.n_steps
                    << " paths, discounted terminal mean / S0 = "
                    << std::exp(-run.cfg.r * pm.horizon()) * mean / s0 << '\n';
        }
        write_manifest(dir, "simulate", run.seed, inputs, outputs);
    }
}

// --- hedge -------------------------------------------------------------------

HedgeContext base_context(const ExperimentConfig& cfg) {
    HedgeContext ctx;
    ctx.r = cfg.r;
    ctx.n_jump_draws = cfg.mv_jump_draws;
    return ctx;
}

void cmd_hedge(Run& run) {
    for (const SegmentDef* seg : selected_segments(run)) {
        const fs::path dir = segment_dir(run, *seg);
        std::vector<fs::path> inputs{run.opts.config}, outputs;
        for (const std::string& sim : run.cfg.simulators) {
            if (!fs::exists(paths_file(dir, sim))) {
                throw DependencyError("missing " + paths_file(dir, sim).string(), "simulate");
            }
        }
        for (ModelFamily fam : selected_models(run)) {
            if (!fs::exists(params_path(dir, fam))) {
                throw DependencyError("missing " + params_path(dir, fam).string(), "calibrate");
            }
        }
        for (const std::string& sim : run.cfg.simulators) {
            const PathMatrix pm = read_paths(paths_file(dir, sim));
            inputs.push_back(paths_file(dir, sim));
            const double s0 = pm.price(0, 0);
            for (ModelFamily fam : selected_models(run)) {
                ModelParams model = inception_model(dir, fam);
                model.s0 = s0;
                if (sim == run.cfg.simulators.front()) inputs.push_back(params_path(dir, fam));
                for (Strategy strat : selected_strategies(run)) {
                    for (int days : run.cfg.maturities_days) {
                        HedgeSpec spec;
                        spec.strategy = strat;
                        spec.hedge_model = model;
                        spec.target = OptionSpec{s0, days / 365.0, true};
                        if (uses_second_instrument(strat)) spec.second = default_second_instrument(spec.target);
                        const std::string tag = sim + "_" + std::string(to_string(fam)) + "_" +
                                                std::string(to_string(strat)) + "_" + std::to_string(days) + "d";
                        try {
                            spec.validate();
                        } catch (const DomainError& e) {
                            run.log << seg->name << ": " << tag << " skipped: " << e.what() << '\n';
                            continue;
                        }
                        const HedgeRun res = run_hedge_experiment(pm, spec, base_context(run.cfg));
                        const fs::path file = dir / ("pnl_" + tag + ".csv");
                        std::ofstream out(file);
                        write_pnl_csv(out, res);
                        if (!out) throw ConfigError("cannot write " + file.string());
                        outputs.push_back(file);
                        run.log << seg->name << ": " << tag << " premium " << res.premium << ", hedge error "
                                << hedge_error(res.rel_pnl);
                        if (res.n_delta_fallbacks > 0) {
                            run.log << " (" << res.n_delta_fallbacks << " delta-only rebalances)";
                        }
                        run.log << '\n';
                    }
                }
            }
        }
        if (outputs.empty()) throw DomainError("hedge: no valid model/strategy combination selected");
        write_manifest(dir, "hedge", run.seed, inputs, outputs);
    }
}

// --- backtest ----------------------------------------------------------------

void cmd_backtest(Run& run) {
    const auto px = prices_or_throw(run);
    for (const SegmentDef* seg : selected_segments(run)) {
        const fs::path dir = segment_dir(run, *seg);
        const json sj = read_json(dir / "surfaces.json", "fit-surface");
        BacktestInput input;
        input.prices = px;
        for (const json& s : sj.at("surfaces")) {
            SviSurface surf = surface_from_json(s);
            input.surfaces.emplace(surf.date, std::move(surf));
        }
        std::vector<fs::path> inputs{run.opts.config, run.cfg.prices_path, dir / "surfaces.json"}, outputs;
        const Date last = seg->end - std::chrono::days{run.cfg.backtest_expiry_days};
        if (last < seg->start) throw ConfigError("backtest: segment shorter than the backtest expiry");
        for (ModelFamily fam : selected_models(run)) {
            input.models = load_params(dir, fam);
            inputs.push_back(params_path(dir, fam));
            for (Strategy strat : selected_strategies(run)) {
                if (strat == Strategy::DeltaVega && fam == ModelFamily::CGMY) continue;
                BacktestSpec spec;
                spec.strategy = strat;
                spec.expiry_days = run.cfg.backtest_expiry_days;
                spec.ctx = base_context(run.cfg);
                const BacktestResult res = run_backtest(input, seg->start, last, spec);
                const std::string tag = std::string(to_string(fam)) + "_" + std::string(to_string(strat));
                const fs::path file = dir / ("backtest_" + tag + ".csv");
                std::ofstream out(file);
                out << "inception,pnl,rel_pnl,premium\n" << std::setprecision(17);
                for (std::size_t i = 0; i < res.pnl.size(); ++i) {
                    out << format_iso_date(res.inception[i]) << ',' << res.pnl[i] << ',' << res.rel_pnl[i] << ','
                        << res.premium[i] << '\n';
                }
                if (!out) throw ConfigError("cannot write " + file.string());
                outputs.push_back(file);
                run.log << seg->name << ": backtest " << tag << " " << res.pnl.size() << " inceptions, "
                        << res.skipped.size() << " skipped\n";
            }
        }
        write_manifest(dir, "backtest", run.seed, inputs, outputs);
    }
}

// --- report ------------------------------------------------------------------

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string part; std::getline(ss, part, sep);) out.push_back(part);
    return out;
}

// Third column of a P&L CSV is the relative P&L.
std::vector<double> read_rel_column(const fs::path& file) {
    std::ifstream in(file);
    std::string line;
    std::getline(in, line);
    std::vector<double> out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        const auto f = split(line, ',');
        if (f.size() < 3) throw ParseError(file.string() + ":" + std::to_string(line_no) + ": short row");
        out.push_back(std::stod(f[2]));
    }
    return out;
}

void cmd_report(Run& run) {
    const auto models = selected_models(run);
    const auto strategies = selected_strategies(run);
    auto wanted = [&](const std::string& model, const std::string& strat) {
        const bool m = std::any_of(models.begin(), models.end(), [&](ModelFamily f) { return to_string(f) == model; });
        const bool s = std::any_of(strategies.begin(), strategies.end(), [&](Strategy x) { return to_string(x) == strat; });
        return m && s;
    };
    for (const SegmentDef* seg : selected_segments(run)) {
        const fs::path dir = segment_dir(run, *seg);
        struct Source {
            fs::path file;
            std::string simulator, model, strategy;
            int maturity_days;
        };
        std::vector<Source> sources;
        for (const auto& entry : fs::directory_iterator(dir)) {
            const std::string name = entry.path().filename().string();
            if (entry.path().extension() != ".csv") continue;
            const auto parts = split(entry.path().stem().string(), '_');
            if (name.rfind("pnl_", 0) == 0 && parts.size() == 5) {
                sources.push_back({entry.path(), parts[1], parts[2], parts[3], std::stoi(parts[4])});
            } else if (name.rfind("backtest_", 0) == 0 && parts.size() == 3) {
                sources.push_back({entry.path(), "historical", parts[1], parts[2], run.cfg.backtest_expiry_days});
            }
        }
        std::sort(sources.begin(), sources.end(), [](const Source& a, const Source& b) { return a.file < b.file; });
        std::erase_if(sources, [&](const Source& s) { return !wanted(s.model, s.strategy); });
        if (sources.empty()) throw DependencyError("no P&L files in " + dir.string(), "hedge");

        json reports = json::array();
        std::vector<fs::path> inputs{run.opts.config};
        std::ofstream trunc(dir / "truncated.csv"), box(dir / "boxplot.csv");
        trunc << "simulator,model,strategy,maturity_days,rel_pnl\n" << std::setprecision(17);
        box << "simulator,model,strategy,maturity_days,q05,q25,q50,q75,q95\n" << std::setprecision(17);
        for (const Source& s : sources) {
            inputs.push_back(s.file);
            const auto rel = read_rel_column(s.file);
            if (rel.size() < 2) {
                run.log << seg->name << ": " << s.file.filename().string() << " has fewer than two samples, skipped\n";
                continue;
            }
            const HedgeReport rep = build_report(rel, {seg->name, s.simulator, s.model, s.strategy});
            json j = to_json(rep);
            j["maturity_days"] = s.maturity_days;
            j["model_consistent"] = rep.model_consistent;
            reports.push_back(j);
            const std::string key = s.simulator + ',' + s.model + ',' + s.strategy + ',' + std::to_string(s.maturity_days);
            for (double v : rep.truncated) trunc << key << ',' << v << '\n';
            box << key;
            for (double b : {0.05, 0.25, 0.5, 0.75, 0.95}) box << ',' << empirical_quantile(rel, b);
            box << '\n';
        }
        trunc.close();
        box.close();
        write_json(dir / "reports.json", reports);
        run.log << seg->name << ": " << reports.size() << " reports\n";
        write_manifest(dir, "report", run.seed, inputs, {dir / "reports.json", dir / "truncated.csv", dir / "boxplot.csv"});
    }
}

}  // namespace

void execute_command(const CliOptions& opts, std::ostream& log) {
    if (std::none_of(std::begin(kCommands), std::end(kCommands), [&](const char* c) { return opts.command == c; })) {
        throw ConfigError("unknown command '" + opts.command +
                          "' (expected fit-surface, calibrate, simulate, hedge, backtest or report)");
    }
    if (opts.out.empty()) throw ConfigError("--out is required");
    Run run{opts, load_config(opts.config), 0, log};
    run.seed = opts.seed.value_or(run.cfg.seed);
    fs::create_directories(opts.out);
    if (opts.command == "fit-surface") cmd_fit_surface(run);
    if (opts.command == "calibrate") cmd_calibrate(run);
    if (opts.command == "simulate") cmd_simulate(run);
    if (opts.command == "hedge") cmd_hedge(run);
    if (opts.command == "backtest") cmd_backtest(run);
    if (opts.command == "report") cmd_report(run);
}

int run_command(const CliOptions& opts, std::ostream& log, std::ostream& err) {
    try {
        execute_command(opts, log);
        return 0;
    } catch (const DependencyError& e) {
        err << "dependency error: " << e.what() << '\n';
        return 1;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return 1;
    } catch (const ParseError& e) {
        err << "parse error: " << e.what() << '\n';
        return 1;
    } catch (const DomainError& e) {
        err << "validation error: " << e.what() << '\n';
        return 1;
    } catch (const NumericError& e) {
        err << "numeric error: " << e.what() << '\n';
        return 2;
    } catch (const fs::filesystem_error& e) {
        err << "file error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
}

}  // namespace cchedge
