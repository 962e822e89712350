#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "mmhedge/hedging.hpp"
#include "mmhedge/surface.hpp"

namespace mmhedge {

enum class PortfolioCategory { Naive, Outright, DeltaSpread, DeltaButterfly, Strangle, CalendarSpread, Vix };

std::string_view to_string(PortfolioCategory c);
PortfolioCategory portfolio_category_from_string(std::string_view text);
const std::vector<PortfolioCategory>& all_portfolio_categories();

// A call quoted by calendar-day tenor and BS delta, resolved to the nearest
// lattice option on each date.
struct DeltaLeg {
    double tenor_days = 0.0;
    double delta = 0.5;
    double weight = 1.0;
};

struct Portfolio {
    std::string name;
    PortfolioCategory category = PortfolioCategory::Outright;
    std::vector<DeltaLeg> legs;  // empty for naive and VIX, which are lattice-wide
};

std::vector<double> default_deltas();

// Test portfolios for the requested categories. Butterflies and strangles pair
// delta D < 0.5 with 1 - D, both (and 0.5 for butterflies) drawn from `deltas`.
std::vector<Portfolio> make_portfolios(const std::vector<PortfolioCategory>& categories,
                                       const std::vector<double>& deltas, const std::vector<double>& tenor_days,
                                       double vix_tenor_days = 30.0);

struct LatticeLeg {
    std::size_t index = 0;
    double weight = 0.0;  // units of the call C = S c~
};

// Nearest-tenor slice, then the lattice moneyness whose BS delta (own implied
// vol) is nearest `delta`.
std::size_t resolve_delta(const SurfaceSnapshot& snapshot, std::size_t i_tau, double delta);

// Units per lattice call on this date; legs that land on the same option merge.
std::vector<LatticeLeg> resolve(const Portfolio& portfolio, const SurfaceSnapshot& snapshot,
                                double vix_tenor_days = 30.0);

// VIX-style strike weights for the calls of slice i_tau: (2/T) dK_i / K_i^2 in
// units of call prices, with centred strike gaps (one-sided at the ends). OTM
// puts are replaced by calls through parity, dropping underlying and cash.
std::vector<double> vix_weights(const LiquidLattice& lattice, std::size_t i_tau, double spot);

Target to_target(const std::vector<LatticeLeg>& legs, const LiquidLattice& lattice);

}  // namespace mmhedge
