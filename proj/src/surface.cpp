#include "mmhedge/surface.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <sstream>

#include "mmhedge/errors.hpp"

namespace mmhedge {

namespace {

void require_increasing(const std::vector<double>& v, const char* what) {
    if (v.empty()) throw ContractError(std::string("lattice needs at least one ") + what);
    for (std::size_t i = 1; i < v.size(); ++i)
        if (!(v[i] > v[i - 1]))
            throw ContractError(std::string("lattice ") + what + " values must be strictly increasing");
}

std::size_t nearest_in(const std::vector<double>& grid, double x) {
    auto it = std::lower_bound(grid.begin(), grid.end(), x);
    if (it == grid.begin()) return 0;
    if (it == grid.end()) return grid.size() - 1;
    auto hi = static_cast<std::size_t>(it - grid.begin());
    return (x - grid[hi - 1] <= grid[hi] - x) ? hi - 1 : hi;
}

}  // namespace

LiquidLattice::LiquidLattice(std::vector<double> taus, std::vector<double> ms)
    : taus_(std::move(taus)), ms_(std::move(ms)) {
    require_increasing(taus_, "tau");
    require_increasing(ms_, "m");
    if (!(taus_.front() > 0.0)) throw ContractError("lattice tau values must be positive");
    for (double v : taus_)
        if (!std::isfinite(v)) throw ContractError("lattice tau not finite");
    for (double v : ms_)
        if (!std::isfinite(v)) throw ContractError("lattice m not finite");
}

std::optional<std::size_t> LiquidLattice::find(double tau, double m, double tol) const {
    std::size_t it = nearest_tau(tau), im = nearest_m(m);
    if (std::abs(taus_[it] - tau) <= tol && std::abs(ms_[im] - m) <= tol) return index(it, im);
    return std::nullopt;
}

std::size_t LiquidLattice::nearest_tau(double tau) const { return nearest_in(taus_, tau); }
std::size_t LiquidLattice::nearest_m(double m) const { return nearest_in(ms_, m); }

std::string LiquidLattice::hash() const {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&](double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        for (int i = 0; i < 8; ++i) {
            h ^= (bits >> (8 * i)) & 0xffu;
            h *= 1099511628211ull;
        }
    };
    mix(static_cast<double>(taus_.size()));
    for (double t : taus_) mix(t);
    mix(static_cast<double>(ms_.size()));
    for (double m : ms_) mix(m);
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
}

CubicSpline::CubicSpline(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n == 0 || n != y_.size()) throw ContractError("spline needs matching non-empty knots");
    second_.assign(n, 0.0);
    if (n < 3) return;
    // Tridiagonal solve for interior second derivatives; natural ends M_0 = M_{n-1} = 0.
    std::vector<double> c(n, 0.0), d(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        double h0 = x_[i] - x_[i - 1], h1 = x_[i + 1] - x_[i];
        double a = h0 / 6.0, b = (h0 + h1) / 3.0, cc = h1 / 6.0;
        double r = (y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0;
        double denom = b - a * c[i - 1];
        c[i] = cc / denom;
        d[i] = (r - a * d[i - 1]) / denom;
    }
    for (std::size_t i = n - 2; i > 0; --i) second_[i] = d[i] - c[i] * second_[i + 1];
}

CubicSpline::Eval CubicSpline::operator()(double at) const {
    const std::size_t n = x_.size();
    if (n == 1) return {y_[0], 0.0, 0.0};
    std::size_t hi = static_cast<std::size_t>(std::upper_bound(x_.begin(), x_.end(), at) - x_.begin());
    hi = std::clamp<std::size_t>(hi, 1, n - 1);
    std::size_t lo = hi - 1;
    double h = x_[hi] - x_[lo];
    double a = (x_[hi] - at) / h, b = (at - x_[lo]) / h;
    double m0 = second_[lo], m1 = second_[hi];
    double value = a * y_[lo] + b * y_[hi] + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
    double d1 = (y_[hi] - y_[lo]) / h - (3.0 * a * a - 1.0) * h / 6.0 * m0 + (3.0 * b * b - 1.0) * h / 6.0 * m1;
    double d2 = a * m0 + b * m1;
    return {value, d1, d2};
}

SurfaceInterpolator::SurfaceInterpolator(std::shared_ptr<const LiquidLattice> lattice, const Eigen::VectorXd& values)
    : lattice_(std::move(lattice)) {
    if (!lattice_) throw ContractError("interpolator needs a lattice");
    if (static_cast<std::size_t>(values.size()) != lattice_->size())
        throw ContractError("interpolator values do not match the lattice size");
    const std::size_t nm = lattice_->n_m();
    slices_.reserve(lattice_->n_tau());
    for (std::size_t it = 0; it < lattice_->n_tau(); ++it) {
        std::vector<double> y(nm);
        for (std::size_t im = 0; im < nm; ++im) y[im] = values(static_cast<Eigen::Index>(lattice_->index(it, im)));
        slices_.emplace_back(lattice_->ms(), std::move(y));
    }
}

SurfaceValue SurfaceInterpolator::operator()(double tau, double m) const {
    const auto range = lattice_->range();
    if (!range.contains(tau, m)) {
        std::ostringstream os;
        os << "query (tau=" << tau << ", m=" << m << ") outside liquid range [" << range.tau_min << ", "
           << range.tau_max << "] x [" << range.m_min << ", " << range.m_max << "]";
        throw OutOfRangeError(os.str());
    }
    const auto& taus = lattice_->taus();
    m = std::clamp(m, range.m_min, range.m_max);
    if (taus.size() == 1) {
        auto e = slices_[0](m);
        return {e.value, e.d1, e.d2};
    }
    tau = std::clamp(tau, range.tau_min, range.tau_max);
    std::size_t hi = static_cast<std::size_t>(std::upper_bound(taus.begin(), taus.end(), tau) - taus.begin());
    hi = std::clamp<std::size_t>(hi, 1, taus.size() - 1);
    std::size_t lo = hi - 1;
    double w = (tau - taus[lo]) / (taus[hi] - taus[lo]);
    auto a = slices_[lo](m);
    if (w == 0.0) return {a.value, a.d1, a.d2};
    auto b = slices_[hi](m);
    if (w == 1.0) return {b.value, b.d1, b.d2};
    return {(1 - w) * a.value + w * b.value, (1 - w) * a.d1 + w * b.d1, (1 - w) * a.d2 + w * b.d2};
}

SurfaceSnapshot::SurfaceSnapshot(Date date, double spot, Eigen::VectorXd prices,
                                 std::shared_ptr<const LiquidLattice> lattice, double bound_tol)
    : date_(date), spot_(spot), prices_(std::move(prices)), lattice_(std::move(lattice)) {
    if (!lattice_) throw ContractError("snapshot needs a lattice");
    if (!(spot_ > 0.0) || !std::isfinite(spot_)) throw DomainError("snapshot " + date_.str() + ": spot must be positive");
    if (static_cast<std::size_t>(prices_.size()) != lattice_->size())
        throw ContractError("snapshot " + date_.str() + ": price vector does not match the lattice");
    for (std::size_t j = 0; j < lattice_->size(); ++j) {
        double c = prices_(static_cast<Eigen::Index>(j));
        double lower = intrinsic(lattice_->point(j).m);
        if (!std::isfinite(c) || c > 1.0 + bound_tol || c < lower - bound_tol) {
            std::ostringstream os;
            os << "snapshot " << date_.str() << ": normalized price " << c << " at lattice index " << j
               << " violates the outright bounds";
            throw DataError(os.str());
        }
    }
    interp_ = SurfaceInterpolator(lattice_, prices_);
}

double normalize(double call_price, double spot) {
    if (!(spot > 0.0)) throw DomainError("normalize: spot must be positive");
    if (call_price < 0.0) throw DomainError("normalize: call price must be non-negative");
    return call_price / spot;
}

SurfaceValue interp_surface(const SurfaceSnapshot& snapshot, double tau, double m) {
    return snapshot.interpolator()(tau, m);
}

}  // namespace mmhedge
