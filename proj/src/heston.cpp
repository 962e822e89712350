#include "mmhedge/heston.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <sstream>

#include "mmhedge/errors.hpp"

namespace mmhedge {

using cd = std::complex<double>;

namespace {

constexpr double kShortTau = 1e-6;
constexpr double kQuadTol = 1e-8;
constexpr std::size_t kMinNodes = 128;
constexpr std::size_t kMaxNodes = 4096;

cd clog1p(cd z) {
    const double x = z.real(), y = z.imag();
    return {0.5 * std::log1p(x * (2.0 + x) + y * y), std::atan2(y, 1.0 + x)};
}

}  // namespace

const GaussLegendre& gauss_legendre(std::size_t n) {
    static std::mutex mu;
    static std::map<std::size_t, std::unique_ptr<GaussLegendre>> cache;
    std::lock_guard lock(mu);
    auto& slot = cache[n];
    if (slot) return *slot;
    auto gl = std::make_unique<GaussLegendre>();
    gl->x.resize(n);
    gl->w.resize(n);
    for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (std::size_t k = 2; k <= n; ++k) {
                const double kk = static_cast<double>(k);
                const double p2 = ((2.0 * kk - 1.0) * x * p1 - (kk - 1.0) * p0) / kk;
                p0 = p1;
                p1 = p2;
            }
            dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        gl->x[i] = -x;
        gl->x[n - 1 - i] = x;
        gl->w[i] = gl->w[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    slot = std::move(gl);
    return *slot;
}

std::pair<cd, cd> heston_cf_terms(const HestonParams& p, double tau, cd z) {
    const cd i(0.0, 1.0);
    const double s2 = p.sigma * p.sigma;
    const cd q = z * z + i * z;
    const cd beta = p.k - p.rho * p.sigma * i * z;
    const cd d = std::sqrt(beta * beta + s2 * q);
    const cd bpd = beta + d;
    const cd a_over_s2 = -q / bpd;  // (beta - d) / sigma^2 without the cancellation
    const cd g = a_over_s2 * s2 / bpd;
    const cd e = std::exp(-d * tau);
    const cd D = a_over_s2 * (1.0 - e) / (1.0 - g * e);
    const cd C = p.k * p.theta * (a_over_s2 * tau - 2.0 / s2 * (clog1p(-g * e) - clog1p(-g)));
    return {C, D};
}

HestonSlice::HestonSlice(const HestonParams& p, double tau, std::size_t nodes, double upper) : params_(p), tau_(tau) {
    p.validate();
    if (!(tau > 0)) throw DomainError("Heston pricing: tau must be positive");
    short_ = tau < kShortTau;
    if (!short_) tabulate(nodes, upper);
}

HestonSlice::HestonSlice(const HestonParams& p, double tau, std::span<const double> probe_ms) : params_(p), tau_(tau) {
    p.validate();
    if (!(tau > 0)) throw DomainError("Heston pricing: tau must be positive");
    short_ = tau < kShortTau;
    if (short_) return;

    std::vector<double> probes(probe_ms.begin(), probe_ms.end());
    if (probes.empty()) probes = {-0.2, 0.0, 0.2};
    double em_max = 0.0;
    for (double m : probes) em_max = std::max(em_max, std::exp(m));

    // Truncate where the integrand envelope drops below 1e-14.
    const cd i(0.0, 1.0);
    auto envelope = [&](double u) {
        auto [C1, D1] = heston_cf_terms(p, tau, u - i);
        auto [C2, D2] = heston_cf_terms(p, tau, cd(u, 0.0));
        return (std::abs(std::exp(C1 + D1 * p.v0)) + em_max * std::abs(std::exp(C2 + D2 * p.v0))) / u;
    };
    double U = 10.0;
    while (envelope(U) > 1e-14 && U < 1e5) U *= 1.25;

    tabulate(kMinNodes, U);
    std::vector<double> prev(probes.size());
    for (std::size_t j = 0; j < probes.size(); ++j) prev[j] = price(probes[j]);
    for (std::size_t n = 2 * kMinNodes;; n *= 2) {
        if (n > kMaxNodes) {
            std::ostringstream os;
            os << "Heston quadrature did not converge with " << n / 2 << " nodes at tau=" << tau << " (" << p.str() << ")";
            throw NumericalError(os.str());
        }
        tabulate(n, U);
        double change = 0.0;
        for (std::size_t j = 0; j < probes.size(); ++j) {
            const double v = price(probes[j]);
            change = std::max(change, std::abs(v - prev[j]));
            prev[j] = v;
        }
        if (change < kQuadTol) break;
    }
}

void HestonSlice::tabulate(std::size_t n, double upper) {
    const auto& gl = gauss_legendre(n);
    upper_ = upper;
    u_.resize(n);
    w_.resize(n);
    C1_.resize(n);
    D1_.resize(n);
    C2_.resize(n);
    D2_.resize(n);
    const cd i(0.0, 1.0);
    for (std::size_t k = 0; k < n; ++k) {
        u_[k] = 0.5 * upper * (gl.x[k] + 1.0);
        w_[k] = 0.5 * upper * gl.w[k];
        std::tie(C1_[k], D1_[k]) = heston_cf_terms(params_, tau_, u_[k] - i);
        std::tie(C2_[k], D2_[k]) = heston_cf_terms(params_, tau_, cd(u_[k], 0.0));
    }
}

double HestonSlice::price(double m, double v0) const {
    if (short_) return bs_price({std::sqrt(v0), tau_, m});
    const double em = std::exp(m);
    double acc = 0.0;
    for (std::size_t k = 0; k < u_.size(); ++k) {
        const cd ium(0.0, u_[k] * m);
        // Re[e^{-ium} num / (i u)] = Im[e^{-ium} num] / u
        const cd t = std::exp(C1_[k] + D1_[k] * v0 - ium) - em * std::exp(C2_[k] + D2_[k] * v0 - ium);
        acc += w_[k] * t.imag() / u_[k];
    }
    return 0.5 * (1.0 - em) + acc / std::numbers::pi;
}

double HestonSlice::shifted(double m, double x, double v0) const { return std::exp(x) * price(m - x, v0); }

HestonGreeks HestonSlice::greeks(double m, double step_scale) const {
    const double v0 = params_.v0;
    const double sd = std::sqrt(std::max(v0, params_.theta) * tau_);
    const double hx = step_scale * 2e-2 * std::max(sd, 1e-4);
    const double hv = step_scale * 1e-2 * v0;
    auto dx = [&](double h) { return (shifted(m, h, v0) - shifted(m, -h, v0)) / (2.0 * h); };
    auto dv = [&](double h) { return (price(m, v0 + h) - price(m, v0 - h)) / (2.0 * h); };
    HestonGreeks g;
    g.delta = (4.0 * dx(0.5 * hx) - dx(hx)) / 3.0;
    g.vega = params_.S0 * (4.0 * dv(0.5 * hv) - dv(hv)) / 3.0;
    return g;
}

double HestonSlice::mv_delta(double m) const {
    const auto g = greeks(m);
    return g.delta + g.vega * params_.rho * params_.sigma / params_.S0;
}

double heston_price(const HestonParams& p, double tau, double m) {
    const double probe[] = {m};
    return HestonSlice(p, tau, probe).price(m);
}

HestonGreeks heston_greeks(const HestonParams& p, double tau, double m, double step_scale) {
    const double probe[] = {m};
    return HestonSlice(p, tau, probe).greeks(m, step_scale);
}

double heston_mv_delta(const HestonParams& p, double tau, double m) {
    const double probe[] = {m};
    return HestonSlice(p, tau, probe).mv_delta(m);
}

Eigen::VectorXd heston_lattice_prices(const HestonParams& p, const LiquidLattice& lattice) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(lattice.size()));
    for (std::size_t it = 0; it < lattice.n_tau(); ++it) {
        HestonSlice slice(p, lattice.taus()[it], lattice.ms());
        for (std::size_t im = 0; im < lattice.n_m(); ++im)
            out(static_cast<Eigen::Index>(lattice.index(it, im))) = slice.price(lattice.ms()[im]);
    }
    return out;
}

HestonLatticePricer::HestonLatticePricer(const LiquidLattice& lattice, const HestonParams& reference,
                                         std::size_t nodes)
    : ms_(lattice.ms()) {
    for (double m : ms_) em_.push_back(std::exp(m));
    for (double tau : lattice.taus()) {
        HestonSlice ref(reference, tau, lattice.ms());
        Slice s{tau, {}, {}, {}};
        if (ref.nodes() > 0) {
            // Re-tabulate on a grid with some headroom past the reference truncation.
            const double upper = 1.25 * ref.upper();
            const auto& gl = gauss_legendre(nodes > 0 ? nodes : ref.nodes());
            for (std::size_t k = 0; k < gl.x.size(); ++k) {
                s.u.push_back(0.5 * upper * (gl.x[k] + 1.0));
                s.w_over_u.push_back(0.5 * upper * gl.w[k] / s.u.back());
            }
            for (double m : ms_)
                for (double u : s.u) s.phase.push_back(std::polar(1.0, -u * m));
        }
        slices_.push_back(std::move(s));
    }
}

Eigen::VectorXd HestonLatticePricer::prices(const HestonParams& p) const {
    p.validate();
    const std::size_t nm = ms_.size();
    Eigen::VectorXd out(static_cast<Eigen::Index>(slices_.size() * nm));
    const cd i(0.0, 1.0);
    std::vector<cd> e1, e2;
    for (std::size_t it = 0; it < slices_.size(); ++it) {
        const auto& s = slices_[it];
        if (s.u.empty()) {
            for (std::size_t im = 0; im < nm; ++im)
                out(static_cast<Eigen::Index>(it * nm + im)) = bs_price({std::sqrt(p.v0), s.tau, ms_[im]});
            continue;
        }
        const std::size_t n = s.u.size();
        e1.resize(n);
        e2.resize(n);
        for (std::size_t k = 0; k < n; ++k) {
            auto [C1, D1] = heston_cf_terms(p, s.tau, s.u[k] - i);
            auto [C2, D2] = heston_cf_terms(p, s.tau, cd(s.u[k], 0.0));
            e1[k] = std::exp(C1 + D1 * p.v0) * s.w_over_u[k];
            e2[k] = std::exp(C2 + D2 * p.v0) * s.w_over_u[k];
        }
        for (std::size_t im = 0; im < nm; ++im) {
            const cd* ph = &s.phase[im * n];
            double acc = 0.0;
            for (std::size_t k = 0; k < n; ++k) acc += (ph[k] * (e1[k] - em_[im] * e2[k])).imag();
            out(static_cast<Eigen::Index>(it * nm + im)) = 0.5 * (1.0 - em_[im]) + acc / std::numbers::pi;
        }
    }
    return out;
}

}  // namespace mmhedge
