#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mmhedge/models.hpp"
#include "mmhedge/surface.hpp"

namespace mmhedge {

struct HestonGreeks {
    double delta = 0.0;  // dC/dS0
    double vega = 0.0;   // dC/dv0 in currency per unit variance
};

// Heston prices for one expiry. The characteristic function of ln(S_T/S0) is
// exp(C(u) + D(u) v0), so C and D are tabulated once on the quadrature grid
// and every strike, spot bump (a shift in m) and v0 bump reuses them.
class HestonSlice {
public:
    // Chooses the truncation from the integrand decay and doubles the
    // Gauss-Legendre order from 128 until the probe prices move < 1e-8.
    HestonSlice(const HestonParams& p, double tau, std::span<const double> probe_ms = {});
    // Fixed grid, no convergence loop.
    HestonSlice(const HestonParams& p, double tau, std::size_t nodes, double upper);

    double price(double m) const { return price(m, params_.v0); }
    double price(double m, double v0) const;
    // Normalized value e^x c~(m - x; v0) of the same contract after ln S moves by x.
    double shifted(double m, double x, double v0) const;

    HestonGreeks greeks(double m, double step_scale = 1.0) const;
    double mv_delta(double m) const;

    std::size_t nodes() const { return u_.size(); }
    double upper() const { return upper_; }
    double tau() const { return tau_; }
    const HestonParams& params() const { return params_; }

private:
    void tabulate(std::size_t n, double upper);

    HestonParams params_;
    double tau_;
    double upper_ = 0.0;
    bool short_ = false;  // tau below 1e-6: Black-Scholes at sqrt(v0)
    std::vector<double> u_, w_;
    std::vector<std::complex<double>> C1_, D1_, C2_, D2_;  // at u - i and at u
};

// Terms (C, D) of the characteristic function E[exp(i z ln(S_T/S0))] = exp(C + D v0).
// Rotation-safe form; stable as sigma -> 0.
std::pair<std::complex<double>, std::complex<double>> heston_cf_terms(const HestonParams& p, double tau,
                                                                      std::complex<double> z);

double heston_price(const HestonParams& p, double tau, double m);
HestonGreeks heston_greeks(const HestonParams& p, double tau, double m, double step_scale = 1.0);
// Delta + vega * rho * sigma / S0.
double heston_mv_delta(const HestonParams& p, double tau, double m);

// Normalized prices on every lattice point, one adaptive slice per tenor.
Eigen::VectorXd heston_lattice_prices(const HestonParams& p, const LiquidLattice& lattice);

// Lattice pricer with the quadrature grid and strike phases frozen at a
// reference parameter set; repricing under nearby parameters only re-tabulates
// the characteristic function. Used inside calibration loops.
class HestonLatticePricer {
public:
    HestonLatticePricer(const LiquidLattice& lattice, const HestonParams& reference, std::size_t nodes = 0);
    Eigen::VectorXd prices(const HestonParams& p) const;

private:
    struct Slice {
        double tau;
        std::vector<double> u, w_over_u;
        std::vector<std::complex<double>> phase;  // n_m x nodes, row-major
    };
    std::vector<double> ms_;
    std::vector<double> em_;
    std::vector<Slice> slices_;
};

// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussLegendre {
    std::vector<double> x, w;
};
const GaussLegendre& gauss_legendre(std::size_t n);

}  // namespace mmhedge
