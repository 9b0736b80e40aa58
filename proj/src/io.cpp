#include "cchedge/io.hpp"

#include "cchedge/errors.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <memory>
#include <set>
#include <sstream>
#include <type_traits>

namespace cchedge {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (true) {
        const auto comma = line.find(',', pos);
        out.push_back(trim(std::string_view(line).substr(pos, comma - pos)));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

struct CsvReader {
    std::istream& in;
    std::string source;
    std::size_t line_no = 0;

    [[noreturn]] void fail(const std::string& what) const {
        throw ParseError(source + ":" + std::to_string(line_no) + ": " + what);
    }

    void expect_header(const std::vector<std::string>& cols) {
        std::string line;
        if (!std::getline(in, line)) {
            line_no = 1;
            fail("empty file");
        }
        ++line_no;
        const auto got = split_csv(line);
        for (std::size_t i = 0; i < cols.size(); ++i) {
            if (i >= got.size()) fail("missing column '" + cols[i] + "'");
            if (got[i] != cols[i]) fail("expected column '" + cols[i] + "', found '" + got[i] + "'");
        }
        if (got.size() > cols.size()) fail("unexpected column '" + got[cols.size()] + "'");
    }

    // Next non-blank row, split; false at end of input.
    bool next(std::vector<std::string>& fields, std::size_t n_cols) {
        std::string line;
        while (std::getline(in, line)) {
            ++line_no;
            if (trim(line).empty()) continue;
            fields = split_csv(line);
            if (fields.size() != n_cols) {
                fail("expected " + std::to_string(n_cols) + " fields, found " + std::to_string(fields.size()));
            }
            return true;
        }
        return false;
    }

    double number(const std::string& field, const char* column) const {
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
        if (ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(v)) {
            fail(std::string("column '") + column + "': not a number '" + field + "'");
        }
        return v;
    }

    Date date(const std::string& field, const char* column) const {
        try {
            return parse_iso_date(field);
        } catch (const ParseError& e) {
            fail(std::string("column '") + column + "': " + e.what());
        }
    }
};

std::ifstream open_input(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string());
    return in;
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    if constexpr (std::is_unsigned_v<T>) {
        if (!j.at(key).is_number_unsigned()) throw ConfigError(std::string("config: ") + key + " must be a non-negative integer");
    }
    return j.at(key).get<T>();
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& [key, _] : j.items()) {
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
            throw ConfigError(where + ": unknown key '" + key + "'");
        }
    }
}

SvcjParams svcj_from_json(const json& j) {
    const ModelDynamics d = unpack(ModelFamily::SVCJ, [&] {
        std::vector<double> v;
        for (const std::string& name : parameter_names(ModelFamily::SVCJ)) {
            if (!j.contains(name)) throw ConfigError("svcj_params: missing '" + name + "'");
            v.push_back(j.at(name).get<double>());
        }
        return v;
    }());
    return std::get<SvcjParams>(d);
}

}  // namespace

std::vector<QuoteRow> parse_quotes(std::istream& in, const std::string& source) {
    CsvReader csv{in, source};
    csv.expect_header({"date", "expiry", "strike", "type", "iv_mid", "volume", "underlying"});
    std::vector<QuoteRow> rows;
    std::vector<std::string> f;
    while (csv.next(f, 7)) {
        QuoteRow q;
        q.date = csv.date(f[0], "date");
        q.expiry = csv.date(f[1], "expiry");
        q.strike = csv.number(f[2], "strike");
        const std::string& t = f[3];
        if (t == "C" || t == "c" || t == "call") {
            q.type = OptionType::Call;
        } else if (t == "P" || t == "p" || t == "put") {
            q.type = OptionType::Put;
        } else {
            csv.fail("column 'type': expected C or P, found '" + t + "'");
        }
        q.iv = csv.number(f[4], "iv_mid");
        q.volume = csv.number(f[5], "volume");
        q.underlying = csv.number(f[6], "underlying");
        try {
            q.validate();
        } catch (const DomainError& e) {
            csv.fail(e.what());
        }
        rows.push_back(q);
    }
    if (rows.empty()) throw ParseError(source + ": no data rows");
    return dedup_quotes(rows);
}

std::vector<QuoteRow> load_quotes(const fs::path& path) {
    std::ifstream in = open_input(path);
    return parse_quotes(in, path.string());
}

std::vector<PricePoint> parse_prices(std::istream& in, const std::string& source) {
    CsvReader csv{in, source};
    csv.expect_header({"date", "close"});
    std::vector<PricePoint> out;
    std::vector<std::string> f;
    while (csv.next(f, 2)) {
        PricePoint p{csv.date(f[0], "date"), csv.number(f[1], "close")};
        if (!(p.close > 0.0)) csv.fail("column 'close': must be > 0");
        if (!out.empty() && !(out.back().date < p.date)) csv.fail("dates must be strictly increasing");
        out.push_back(p);
    }
    if (out.empty()) throw ParseError(source + ": no data rows");
    return out;
}

std::vector<PricePoint> load_prices(const fs::path& path) {
    std::ifstream in = open_input(path);
    return parse_prices(in, path.string());
}

void write_quotes_csv(std::ostream& out, const std::vector<QuoteRow>& rows) {
    out << "date,expiry,strike,type,iv_mid,volume,underlying\n" << std::setprecision(17);
    for (const QuoteRow& q : rows) {
        out << format_iso_date(q.date) << ',' << format_iso_date(q.expiry) << ',' << q.strike << ','
            << (q.type == OptionType::Call ? 'C' : 'P') << ',' << q.iv << ',' << q.volume << ',' << q.underlying
            << '\n';
    }
}

void write_prices_csv(std::ostream& out, const std::vector<PricePoint>& prices) {
    out << "date,close\n" << std::setprecision(17);
    for (const PricePoint& p : prices) out << format_iso_date(p.date) << ',' << p.close << '\n';
}

void ExperimentConfig::validate() const {
    if (segments.empty()) throw ConfigError("config: no segments");
    if (maturities_days.empty()) throw ConfigError("config: no maturities");
    const int longest = *std::max_element(maturities_days.begin(), maturities_days.end());
    std::set<std::string> names;
    for (const SegmentDef& s : segments) {
        if (s.name.empty()) throw ConfigError("config: segment without a name");
        if (!names.insert(s.name).second) throw ConfigError("config: duplicate segment '" + s.name + "'");
        if (!(s.start < s.end)) throw ConfigError("config: segment '" + s.name + "' ends before it starts");
        if ((s.end - s.start).count() <= longest) {
            throw ConfigError("config: segment '" + s.name + "' is not longer than the longest maturity");
        }
    }
    for (int m : maturities_days) {
        if (m < 1) throw ConfigError("config: maturities must be >= 1 day");
    }
    if (models.empty() || strategies.empty()) throw ConfigError("config: empty model or strategy list");
    for (const std::string& s : simulators) {
        if (s != "svcj" && s != "garch-kde") throw ConfigError("config: unknown simulator '" + s + "'");
    }
    if (n_paths < 1) throw ConfigError("config: n_paths must be >= 1");
    if (mv_jump_draws < 2) throw ConfigError("config: mv_jump_draws must be >= 2");
    if (!(dt > 0.0 && dt <= 1.0)) throw ConfigError("config: dt must lie in (0, 1]");
    if (!std::isfinite(r)) throw ConfigError("config: r must be finite");
    if (!(kde_bandwidth > 0.0)) throw ConfigError("config: kde_bandwidth must be > 0");
    if (backtest_expiry_days < 1) throw ConfigError("config: backtest_expiry_days must be >= 1");
    if (calibration_stride < 1) throw ConfigError("config: calibration_stride must be >= 1");
    if (rho_j_mode == RhoJMode::Fixed && !(std::abs(rho_j_value) <= 1.0)) {
        throw ConfigError("config: fixed rho_j must lie in [-1, 1]");
    }
    if (svcj_override) validate_for_simulation(*svcj_override);
}

const SegmentDef& ExperimentConfig::segment(const std::string& name) const {
    for (const SegmentDef& s : segments) {
        if (s.name == name) return s;
    }
    throw ConfigError("config: no segment named '" + name + "'");
}

ExperimentConfig parse_config(const json& j, const fs::path& base_dir) {
    ExperimentConfig c;
    try {
        check_keys(j,
                   {"data", "segments", "models", "strategies", "simulators", "maturities_days", "n_paths", "dt",
                    "seed", "r", "rho_j", "kde_bandwidth", "backtest_expiry_days", "calibration_stride",
                    "calibration_starts", "svcj_params", "mv_jump_draws", "garch_window"},
                   "config");
        const json& data = j.at("data");
        check_keys(data, {"quotes", "prices"}, "config.data");
        c.quotes_path = data.at("quotes").get<std::string>();
        c.prices_path = data.at("prices").get<std::string>();
        for (const json& s : j.at("segments")) {
            check_keys(s, {"name", "start", "end"}, "config.segments");
            c.segments.push_back({s.at("name").get<std::string>(), parse_iso_date(s.at("start").get<std::string>()),
                                  parse_iso_date(s.at("end").get<std::string>())});
        }
        if (j.contains("models")) {
            c.models.clear();
            for (const json& m : j.at("models")) c.models.push_back(parse_model_family(m.get<std::string>()));
        }
        if (j.contains("strategies")) {
            c.strategies.clear();
            for (const json& s : j.at("strategies")) c.strategies.push_back(parse_strategy(s.get<std::string>()));
        }
        if (j.contains("simulators")) c.simulators = j.at("simulators").get<std::vector<std::string>>();
        if (j.contains("maturities_days")) c.maturities_days = j.at("maturities_days").get<std::vector<int>>();
        c.n_paths = get_or<std::size_t>(j, "n_paths", c.n_paths);
        c.dt = get_or(j, "dt", c.dt);
        c.seed = get_or<std::uint64_t>(j, "seed", c.seed);
        c.r = get_or(j, "r", c.r);
        if (j.contains("rho_j")) {
            const json& rj = j.at("rho_j");
            check_keys(rj, {"mode", "value"}, "config.rho_j");
            const std::string mode = rj.at("mode").get<std::string>();
            if (mode == "zero") {
                c.rho_j_mode = RhoJMode::Zero;
            } else if (mode == "calibrated") {
                c.rho_j_mode = RhoJMode::Calibrated;
            } else if (mode == "fixed") {
                c.rho_j_mode = RhoJMode::Fixed;
                c.rho_j_value = rj.at("value").get<double>();
            } else {
                throw ConfigError("config.rho_j: mode must be zero, calibrated or fixed");
            }
        }
        c.kde_bandwidth = get_or(j, "kde_bandwidth", c.kde_bandwidth);
        c.backtest_expiry_days = get_or(j, "backtest_expiry_days", c.backtest_expiry_days);
        c.calibration_stride = get_or<std::size_t>(j, "calibration_stride", c.calibration_stride);
        c.calibration_starts = get_or<std::size_t>(j, "calibration_starts", c.calibration_starts);
        c.mv_jump_draws = get_or<std::size_t>(j, "mv_jump_draws", c.mv_jump_draws);
        if (j.contains("garch_window")) {
            const std::string w = j.at("garch_window").get<std::string>();
            if (w != "segment" && w != "full") throw ConfigError("config: garch_window must be segment or full");
            c.garch_full_sample = w == "full";
        }
        if (j.contains("svcj_params")) c.svcj_override = svcj_from_json(j.at("svcj_params"));
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    } catch (const DomainError& e) {
        throw ConfigError(std::string("config: ") + e.what());
    } catch (const ParseError& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    if (const char* q = std::getenv("CCHEDGE_QUOTES"); q && *q) c.quotes_path = q;
    if (const char* p = std::getenv("CCHEDGE_PRICES"); p && *p) c.prices_path = p;
    if (c.quotes_path.is_relative()) c.quotes_path = base_dir / c.quotes_path;
    if (c.prices_path.is_relative()) c.prices_path = base_dir / c.prices_path;
    c.validate();
    return c;
}

ExperimentConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("config " + path.string() + ": " + e.what());
    }
    return parse_config(j, path.parent_path());
}

json to_json(const ModelParams& m) {
    json params = json::object();
    const auto names = parameter_names(m.family());
    const auto values = pack(m.dynamics);
    for (std::size_t i = 0; i < names.size(); ++i) params[names[i]] = values[i];
    return {{"family", std::string(to_string(m.family()))}, {"r", m.r}, {"s0", m.s0}, {"params", params}};
}

ModelParams model_from_json(const json& j) {
    const ModelFamily fam = parse_model_family(j.at("family").get<std::string>());
    std::vector<double> v;
    for (const std::string& name : parameter_names(fam)) v.push_back(j.at("params").at(name).get<double>());
    ModelParams m{unpack(fam, v), j.at("r").get<double>(), j.at("s0").get<double>()};
    m.validate();
    return m;
}

json to_json(const SviSurface& s) {
    json slices = json::array();
    for (const SviSlice& x : s.slices) {
        slices.push_back({{"a", x.a}, {"b", x.b}, {"rho", x.rho}, {"m", x.m}, {"sigma", x.sigma}, {"tau", x.tau}});
    }
    return {{"date", format_iso_date(s.date)}, {"f0", s.f0}, {"slices", slices}};
}

SviSurface surface_from_json(const json& j) {
    SviSurface s;
    s.date = parse_iso_date(j.at("date").get<std::string>());
    s.f0 = j.at("f0").get<double>();
    for (const json& x : j.at("slices")) {
        s.slices.push_back({x.at("a").get<double>(), x.at("b").get<double>(), x.at("rho").get<double>(),
                            x.at("m").get<double>(), x.at("sigma").get<double>(), x.at("tau").get<double>()});
    }
    s.validate();
    return s;
}

json to_json(const HedgeReport& r) {
    return {{"segment", r.meta.segment},
            {"simulator", r.meta.simulator},
            {"model", r.meta.model},
            {"strategy", r.meta.strategy},
            {"n", r.n},
            {"min", r.min},
            {"es05", r.es05},
            {"es95", r.es95},
            {"max", r.max},
            {"hedge_error", r.hedge_error}};
}

namespace {

constexpr char kPathMagic[8] = {'C', 'C', 'H', 'P', 'A', 'T', 'H', '1'};

template <class T>
void put(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
void get(std::istream& in, T& v) {
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw ParseError("path file truncated");
}

template <class T>
void put_vec(std::ostream& out, const std::vector<T>& v) {
    put<std::uint64_t>(out, v.size());
    out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(T)));
}

template <class T>
void get_vec(std::istream& in, std::vector<T>& v, std::uint64_t max_size) {
    std::uint64_t n = 0;
    get(in, n);
    if (n > max_size) throw ParseError("path file: inconsistent array size");
    v.resize(n);
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(T)));
    if (!in) throw ParseError("path file truncated");
}

}  // namespace

void write_paths(const fs::path& path, const PathMatrix& pm) {
    pm.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path.string());
    out.write(kPathMagic, sizeof(kPathMagic));
    put<std::uint64_t>(out, pm.n_paths);
    put<std::uint64_t>(out, pm.n_steps);
    put(out, pm.dt);
    put(out, pm.seed);
    put<std::uint64_t>(out, pm.generator.size());
    out.write(pm.generator.data(), static_cast<std::streamsize>(pm.generator.size()));
    put_vec(out, pm.prices);
    put_vec(out, pm.variances);
    put_vec(out, pm.jump_counts);
    if (!out) throw ConfigError("failed writing " + path.string());
}

PathMatrix read_paths(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path.string());
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kPathMagic, sizeof(magic)) != 0) {
        throw ParseError(path.string() + ": not a path file");
    }
    PathMatrix pm;
    std::uint64_t n_paths = 0, n_steps = 0, glen = 0;
    get(in, n_paths);
    get(in, n_steps);
    get(in, pm.dt);
    get(in, pm.seed);
    get(in, glen);
    if (glen > 64) throw ParseError(path.string() + ": bad generator name");
    pm.generator.resize(glen);
    in.read(pm.generator.data(), static_cast<std::streamsize>(glen));
    pm.n_paths = n_paths;
    pm.n_steps = n_steps;
    const std::uint64_t cells = n_paths * (n_steps + 1);
    get_vec(in, pm.prices, cells);
    get_vec(in, pm.variances, cells);
    get_vec(in, pm.jump_counts, n_paths);
    pm.validate();
    return pm;
}

std::string sha256_hex(const std::string& data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
        throw NumericError("sha256 failed");
    }
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
    return os.str();
}

std::string sha256_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path.string());
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw NumericError("sha256 init failed");
    std::vector<char> buf(1 << 16);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), md, &len);
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
    return os.str();
}

void write_manifest(const fs::path& dir, const std::string& command, std::uint64_t seed,
                    const std::vector<fs::path>& inputs, const std::vector<fs::path>& outputs) {
    auto entries = [&](const std::vector<fs::path>& files) {
        json a = json::array();
        for (const fs::path& f : files) {
            a.push_back({{"path", fs::relative(f, dir).generic_string()}, {"sha256", sha256_file(f)}});
        }
        return a;
    };
    const json m{{"command", command},
                 {"seed", seed},
                 {"version", "cchedge 1.0.0"},
                 {"inputs", entries(inputs)},
                 {"outputs", entries(outputs)}};
    std::ofstream out(dir / ("manifest_" + command + ".json"));
    out << m.dump(2) << '\n';
    if (!out) throw ConfigError("cannot write manifest in " + dir.string());
}

}  // namespace cchedge
