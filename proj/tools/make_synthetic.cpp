// Writes a self-consistent toy data set: daily closes from an SVCJ path and,
// for every day, implied vols priced under SV at that day's close and variance.
//
//   make_synthetic <dir> [n_days] [seed]

#include "cchedge/io.hpp"
#include "cchedge/pricing.hpp"

#include <cmath>
#include <fstream>
#include <iostream>

using namespace cchedge;

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: make_synthetic <dir> [n_days] [seed]\n";
        return 1;
    }
    const fs::path dir = argv[1];
    const std::size_t n_days = argc > 2 ? std::stoul(argv[2]) : 200;
    const std::uint64_t seed = argc > 3 ? std::stoull(argv[3]) : 11;
    try {
        fs::create_directories(dir);
        const SvParams sv{2.0, 0.35, 0.6, -0.2, 0.35};
        const SvcjParams world{sv, 0.5, -0.03, 0.05, 0.1, 0.0};
        const PathMatrix pm = simulate_svcj(world, 8000.0, 0.0, 1, n_days, 1.0 / 365.0, seed);
        const Date d0 = parse_iso_date("2020-01-01");

        std::vector<PricePoint> prices;
        std::vector<QuoteRow> quotes;
        for (std::size_t i = 0; i <= n_days; ++i) {
            const Date d = d0 + std::chrono::days{static_cast<int>(i)};
            const double s = pm.price(0, i);
            prices.push_back({d, s});
            // Quotes every day but the last week, which only needs closes.
            if (i + 7 > n_days) continue;
            SvParams today = sv;
            today.v0 = std::max(pm.variance(0, i), 0.05);
            const ModelParams m{today, 0.0, s};
            for (int days : {14, 30, 60, 90, 120}) {
                const double tau = days / 365.0;
                const CallCurve curve = carr_madan_curve(m, tau);
                for (int j = -4; j <= 4; ++j) {
                    const double k = s * std::exp(0.08 * j * std::sqrt(tau / 0.25));
                    const OptionSpec spec{k, tau, k >= s};
                    const double iv = implied_vol(curve.price(k, spec.is_call), s, 0.0, spec);
                    quotes.push_back({d, d + std::chrono::days{days}, k, spec.is_call ? OptionType::Call : OptionType::Put,
                                      iv, 10.0, s});
                }
            }
        }
        std::ofstream q(dir / "quotes.csv"), p(dir / "prices.csv");
        write_quotes_csv(q, quotes);
        write_prices_csv(p, prices);
        std::cout << "wrote " << quotes.size() << " quotes and " << prices.size() << " closes to " << dir << '\n';
    } catch (const std::exception& e) {
        std::cerr << "make_synthetic: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
