#pragma once

// Files in and out: quote and price CSVs, experiment config, artifacts and manifests.

#include "cchedge/analytics.hpp"
#include "cchedge/calibration.hpp"
#include "cchedge/hedging.hpp"
#include "cchedge/scenarios.hpp"
#include "cchedge/vol_surface.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <vector>

namespace cchedge {

namespace fs = std::filesystem;
using json = nlohmann::json;

/// Header: date,expiry,strike,type,iv_mid,volume,underlying. type is C/P or call/put.
/// Rows are validated and deduplicated. ParseError names the source and line.
std::vector<QuoteRow> parse_quotes(std::istream& in, const std::string& source = "<quotes>");
std::vector<QuoteRow> load_quotes(const fs::path& path);

/// Header: date,close. Dates strictly increasing.
std::vector<PricePoint> parse_prices(std::istream& in, const std::string& source = "<prices>");
std::vector<PricePoint> load_prices(const fs::path& path);

void write_quotes_csv(std::ostream& out, const std::vector<QuoteRow>& rows);
void write_prices_csv(std::ostream& out, const std::vector<PricePoint>& prices);

struct SegmentDef {
    std::string name;
    Date start{};
    Date end{};
};

enum class RhoJMode { Zero, Calibrated, Fixed };

struct ExperimentConfig {
    std::vector<SegmentDef> segments;
    fs::path quotes_path;
    fs::path prices_path;
    std::vector<ModelFamily> models{ModelFamily::BS, ModelFamily::SV, ModelFamily::SVCJ};
    std::vector<Strategy> strategies{Strategy::Delta, Strategy::DeltaGamma, Strategy::DeltaVega,
                                     Strategy::MinVariance};
    std::vector<std::string> simulators{"svcj", "garch-kde"};
    std::vector<int> maturities_days{30, 90};
    std::size_t n_paths = 100000;
    double dt = 1.0 / 365.0;
    std::uint64_t seed = 1;
    double r = 0.0;
    RhoJMode rho_j_mode = RhoJMode::Zero;
    double rho_j_value = 0.0;
    double kde_bandwidth = 0.2;
    int backtest_expiry_days = 60;
    std::size_t calibration_stride = 1;   // calibrate every k-th quote date, carry forward between
    std::size_t calibration_starts = 8;
    std::optional<SvcjParams> svcj_override;   // simulate from these instead of the calibrated SVCJ
    std::size_t mv_jump_draws = 500;           // jump draws per min-variance ratio
    bool garch_full_sample = false;            // fit GARCH on all closes instead of the segment's

    /// Dates ordered, each segment longer than the longest maturity, known names.
    void validate() const;
    const SegmentDef& segment(const std::string& name) const;
};

/// Relative data paths resolve against base_dir. CCHEDGE_QUOTES and
/// CCHEDGE_PRICES override the two data paths (nothing else).
ExperimentConfig parse_config(const json& j, const fs::path& base_dir);
ExperimentConfig load_config(const fs::path& path);

json to_json(const ModelParams& m);
ModelParams model_from_json(const json& j);
json to_json(const SviSurface& s);
SviSurface surface_from_json(const json& j);
json to_json(const HedgeReport& r);

/// Binary path file: magic, shape, dt, seed, generator, prices, variances, jump counts.
void write_paths(const fs::path& path, const PathMatrix& pm);
PathMatrix read_paths(const fs::path& path);

/// Hex SHA-256 of a file's bytes or of a string.
std::string sha256_file(const fs::path& path);
std::string sha256_hex(const std::string& data);

/// Writes <dir>/manifest_<command>.json with hashes of inputs and outputs.
void write_manifest(const fs::path& dir, const std::string& command, std::uint64_t seed,
                    const std::vector<fs::path>& inputs, const std::vector<fs::path>& outputs);

}  // namespace cchedge
