#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mmhedge/date.hpp"

namespace mmhedge {

// Time-to-expiry in years and log-moneyness ln(K/S).
struct LatticePoint {
    double tau = 0.0;
    double m = 0.0;
};

struct LiquidRange {
    double tau_min = 0.0;
    double tau_max = 0.0;
    double m_min = 0.0;
    double m_max = 0.0;

    bool contains(double tau, double m, double tol = 1e-12) const {
        return tau >= tau_min - tol && tau <= tau_max + tol && m >= m_min - tol && m <= m_max + tol;
    }
};

// Rectangular grid of option specifications. Points are stored tau-major:
// index(i_tau, i_m) = i_tau * n_m() + i_m. Every module addresses lattice
// prices through this index map.
class LiquidLattice {
public:
    LiquidLattice(std::vector<double> taus, std::vector<double> ms);

    std::size_t size() const { return taus_.size() * ms_.size(); }
    std::size_t n_tau() const { return taus_.size(); }
    std::size_t n_m() const { return ms_.size(); }
    std::size_t index(std::size_t i_tau, std::size_t i_m) const { return i_tau * ms_.size() + i_m; }
    std::size_t tau_index(std::size_t idx) const { return idx / ms_.size(); }
    std::size_t m_index(std::size_t idx) const { return idx % ms_.size(); }
    LatticePoint point(std::size_t idx) const { return {taus_[tau_index(idx)], ms_[m_index(idx)]}; }

    const std::vector<double>& taus() const { return taus_; }
    const std::vector<double>& ms() const { return ms_; }
    LiquidRange range() const { return {taus_.front(), taus_.back(), ms_.front(), ms_.back()}; }

    // Lattice index of (tau, m) if it is a grid point (within tol).
    std::optional<std::size_t> find(double tau, double m, double tol = 1e-12) const;
    std::size_t nearest_tau(double tau) const;
    std::size_t nearest_m(double m) const;

    // Hex FNV-1a digest of the grid; tags serialized artifacts to their lattice.
    std::string hash() const;

    bool operator==(const LiquidLattice& other) const { return taus_ == other.taus_ && ms_ == other.ms_; }

private:
    std::vector<double> taus_;
    std::vector<double> ms_;
};

// Natural cubic spline through (x_i, y_i). One knot degenerates to a constant.
class CubicSpline {
public:
    CubicSpline() = default;
    CubicSpline(std::vector<double> x, std::vector<double> y);

    struct Eval {
        double value;
        double d1;
        double d2;
    };
    Eval operator()(double at) const;

private:
    std::vector<double> x_;
    std::vector<double> y_;
    std::vector<double> second_;  // spline second derivatives at the knots
};

struct SurfaceValue {
    double value = 0.0;
    double d_dm = 0.0;
    double d2_dm2 = 0.0;
};

// Smooth surface over the liquid range: natural cubic spline in m per tau
// slice, linear blending between neighbouring slices. C2 in m, continuous in
// tau, reproduces knot values exactly.
class SurfaceInterpolator {
public:
    SurfaceInterpolator() = default;
    SurfaceInterpolator(std::shared_ptr<const LiquidLattice> lattice, const Eigen::VectorXd& values);

    // Throws OutOfRangeError outside the lattice range.
    SurfaceValue operator()(double tau, double m) const;
    const LiquidLattice& lattice() const { return *lattice_; }

private:
    std::shared_ptr<const LiquidLattice> lattice_;
    std::vector<CubicSpline> slices_;
};

// Normalized call prices c~ = C / S on the lattice at one date.
class SurfaceSnapshot {
public:
    // Validates 0 <= c~ <= 1 and c~ >= max(1 - e^m, 0) to within bound_tol.
    SurfaceSnapshot(Date date, double spot, Eigen::VectorXd prices,
                    std::shared_ptr<const LiquidLattice> lattice, double bound_tol = 1e-9);

    const Date& date() const { return date_; }
    double spot() const { return spot_; }
    const Eigen::VectorXd& prices() const { return prices_; }
    const LiquidLattice& lattice() const { return *lattice_; }
    const std::shared_ptr<const LiquidLattice>& lattice_ptr() const { return lattice_; }
    const SurfaceInterpolator& interpolator() const { return interp_; }

private:
    Date date_;
    double spot_;
    Eigen::VectorXd prices_;
    std::shared_ptr<const LiquidLattice> lattice_;
    SurfaceInterpolator interp_;
};

double normalize(double call_price, double spot);

SurfaceValue interp_surface(const SurfaceSnapshot& snapshot, double tau, double m);

// max(1 - e^m, 0): intrinsic value of a normalized call.
inline double intrinsic(double m) { return m < 0.0 ? -std::expm1(m) : 0.0; }

}  // namespace mmhedge
