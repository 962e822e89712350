#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mmhedge/date.hpp"
#include "mmhedge/models.hpp"
#include "mmhedge/surface.hpp"

namespace mmhedge {

struct TruthPoint {
    double S = 0.0;
    double v = 0.0;
};

struct MarketDataset {
    std::shared_ptr<const LiquidLattice> lattice;
    std::vector<SurfaceSnapshot> snapshots;
    // Present for synthetic markets: generating (S, v) path and the fixed
    // Heston parameters (theta, k, sigma, rho) used to price it.
    std::optional<std::vector<TruthPoint>> truth;
    std::optional<HestonParams> truth_params;
    std::vector<bool> arbitrage_flags;  // true where the snapshot violates a static-arbitrage row

    std::size_t size() const { return snapshots.size(); }
    // Pricing parameters on day t of a synthetic market.
    HestonParams truth_at(std::size_t t) const;
};

// Variance used to price a day whose simulated variance is at or near zero.
inline constexpr double kPricingVarianceFloor = 1e-4;

// Paper-style default grid: tenors {30,...,730} calendar days, m in [-0.2, 0.2] step 0.05.
std::shared_ptr<const LiquidLattice> default_lattice();
std::vector<double> default_tenor_days();

struct GenConfig {
    int substeps = 8;
    Date start = Date(2019, 1, 2);
    bool parallel = true;
};

// Simulates (S, v) by full-truncation Euler and prices the lattice every day.
MarketDataset gen_heston_market(const HestonParams& p0, std::size_t days, std::shared_ptr<const LiquidLattice> lattice,
                                std::uint64_t seed, const GenConfig& config = {});

MarketDataset ingest_csv(std::istream& is);
MarketDataset ingest_csv_file(const std::string& path);

void write_surface_csv(std::ostream& os, const MarketDataset& data);
void write_truth_csv(std::ostream& os, const MarketDataset& data);
std::vector<TruthPoint> read_truth_csv(std::istream& is, const MarketDataset& data);

}  // namespace mmhedge
