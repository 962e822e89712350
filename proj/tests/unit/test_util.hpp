#pragma once

#include <cmath>
#include <memory>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "mmhedge/factors.hpp"
#include "mmhedge/models.hpp"
#include "mmhedge/surface.hpp"

namespace testutil {

inline std::shared_ptr<const mmhedge::LiquidLattice> grid(std::vector<double> taus, double m_lo, double m_hi,
                                                           double step) {
    std::vector<double> ms;
    const int n = static_cast<int>(std::lround((m_hi - m_lo) / step));
    for (int i = 0; i <= n; ++i) ms.push_back(m_lo + step * i);
    return std::make_shared<const mmhedge::LiquidLattice>(std::move(taus), std::move(ms));
}

// Flat Black-Scholes surface: every lattice price at one volatility.
inline Eigen::VectorXd bs_surface(const mmhedge::LiquidLattice& L, double sigma) {
    Eigen::VectorXd c(L.size());
    for (std::size_t i = 0; i < L.size(); ++i) {
        const auto p = L.point(i);
        c(i) = mmhedge::bs_price({sigma, p.tau, p.m});
    }
    return c;
}

inline mmhedge::SurfaceSnapshot bs_snapshot(std::shared_ptr<const mmhedge::LiquidLattice> L, double sigma,
                                            double spot = 100.0) {
    return {mmhedge::Date(2020, 1, 2), spot, bs_surface(*L, sigma), L};
}

inline Eigen::VectorXd uniform(std::mt19937_64& rng, Eigen::Index n, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = u(rng);
    return v;
}

// Smile sigma(m) = level + skew m + curv m^2, priced with Black-Scholes.
inline Eigen::VectorXd smile_surface(const mmhedge::LiquidLattice& L, double level, double skew, double curv = 0.5) {
    Eigen::VectorXd c(L.size());
    for (std::size_t i = 0; i < L.size(); ++i) {
        const auto p = L.point(i);
        c(i) = mmhedge::bs_price({level + skew * p.m + curv * p.m * p.m, p.tau, p.m});
    }
    return c;
}

// Two-factor model decoded from a history of smiles with random level and skew.
inline mmhedge::DecodeResult smile_factor_model(std::shared_ptr<const mmhedge::LiquidLattice> L, std::uint64_t seed,
                                                std::size_t T = 60) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> level(0.15, 0.3), skew(-0.4, -0.1);
    std::vector<mmhedge::SurfaceSnapshot> h;
    mmhedge::Date d(2020, 1, 2);
    for (std::size_t t = 0; t < T; ++t, d = d.next_business_day())
        h.emplace_back(d, 100.0, smile_surface(*L, level(rng), skew(rng)), L);
    return mmhedge::decode_factors(h, 2);
}

}  // namespace testutil
