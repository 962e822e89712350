#include "mmhedge/models.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "mmhedge/errors.hpp"
#include "mmhedge/surface.hpp"

namespace mmhedge {

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }
double norm_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

double bs_d1(const BsQuote& q) {
    const double s = q.sigma * std::sqrt(q.tau);
    return -q.m / s + 0.5 * s;
}

double bs_price(const BsQuote& q) {
    const double s = q.sigma * std::sqrt(q.tau);
    if (!(s > 1e-300)) return intrinsic(q.m);
    const double d1 = -q.m / s + 0.5 * s;
    return norm_cdf(d1) - std::exp(q.m) * norm_cdf(d1 - s);
}

double bs_delta(const BsQuote& q) {
    const double s = q.sigma * std::sqrt(q.tau);
    if (!(s > 1e-300)) return q.m < 0 ? 1.0 : 0.0;
    return norm_cdf(bs_d1(q));
}

double bs_vega_normalized(const BsQuote& q) {
    const double s = q.sigma * std::sqrt(q.tau);
    if (!(s > 1e-300)) return 0.0;
    return std::sqrt(q.tau) * norm_pdf(bs_d1(q));
}

double bs_vega(const BsQuote& q, double spot) { return spot * bs_vega_normalized(q); }

double bs_digital_price(const BsQuote& q) {
    const double s = q.sigma * std::sqrt(q.tau);
    return norm_cdf(bs_d1(q) - s);
}

double bs_digital_delta(const BsQuote& q, double spot) {
    const double s = q.sigma * std::sqrt(q.tau);
    return norm_pdf(bs_d1(q) - s) / (spot * s);
}

double implied_vol(double c_tilde, double tau, double m) {
    if (!(tau > 0)) throw DomainError("implied_vol: tau must be positive");
    const double lo_bound = intrinsic(m);
    if (!std::isfinite(c_tilde) || c_tilde <= lo_bound || c_tilde >= 1.0) {
        std::ostringstream os;
        os.precision(17);
        os << "implied_vol: price " << c_tilde << " outside (" << lo_bound << ", 1) at tau=" << tau << " m=" << m;
        throw DomainError(os.str());
    }
    auto f = [&](double s) { return bs_price({s, tau, m}) - c_tilde; };
    double a = 1e-8, b = 1.0;
    while (f(b) < 0) {
        a = b;
        b *= 2.0;
        if (b > 1e4) throw NumericalError("implied_vol: cannot bracket volatility");
    }
    double x = 0.5 * (a + b);
    for (int it = 0; it < 200; ++it) {
        const double fx = f(x);
        if (fx == 0.0) return x;
        (fx < 0 ? a : b) = x;
        const double v = bs_vega_normalized({x, tau, m});
        double next = v > 0 ? x - fx / v : 0.5 * (a + b);
        if (!(next > a && next < b)) next = 0.5 * (a + b);
        if (std::abs(next - x) < 1e-15 * std::max(1.0, x) || b - a < 1e-15) return next;
        x = next;
    }
    if (std::abs(f(x)) < 1e-12) return x;
    throw NumericalError("implied_vol: no convergence");
}

void HestonParams::validate() const {
    auto bad = [&](const char* what) { throw DomainError(std::string("Heston parameters: ") + what + " (" + str() + ")"); };
    if (!(S0 > 0) || !std::isfinite(S0)) bad("S0 must be positive");
    if (!(v0 > 0) || !std::isfinite(v0)) bad("v0 must be positive");
    if (!(theta > 0) || !std::isfinite(theta)) bad("theta must be positive");
    if (!(k > 0) || !std::isfinite(k)) bad("k must be positive");
    if (!(sigma > 0) || !std::isfinite(sigma)) bad("sigma must be positive");
    if (!(rho >= -1.0 && rho <= 1.0)) bad("rho must lie in [-1, 1]");
}

std::string HestonParams::str() const {
    std::ostringstream os;
    os << "S0=" << S0 << " v0=" << v0 << " theta=" << theta << " k=" << k << " sigma=" << sigma << " rho=" << rho;
    return os.str();
}

}  // namespace mmhedge
