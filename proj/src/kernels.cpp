#include "mmhedge/kernels.hpp"

#include <cmath>
#include <random>

#include "mmhedge/errors.hpp"
#include "mmhedge/heston.hpp"

namespace mmhedge::kernels {

namespace {

struct Moments {
    double n = 0.0, mx = 0.0, my = 0.0, sxx = 0.0, sxy = 0.0, syy = 0.0;

    void add(double x, double y) {
        n += 1.0;
        const double dx = x - mx;
        mx += dx / n;
        const double dy = y - my;
        my += dy / n;
        sxx += dx * (x - mx);
        sxy += dx * (y - my);
        syy += dy * (y - my);
    }
    void merge(const Moments& o) {
        if (o.n == 0.0) return;
        const double N = n + o.n, dx = o.mx - mx, dy = o.my - my;
        sxx += o.sxx + dx * dx * n * o.n / N;
        sxy += o.sxy + dx * dy * n * o.n / N;
        syy += o.syy + dy * dy * n * o.n / N;
        mx += dx * o.n / N;
        my += dy * o.n / N;
        n = N;
    }
};

constexpr std::size_t kBlock = std::size_t{1} << 14;

}  // namespace

std::vector<Eigen::VectorXd> price_lattice_days(const std::vector<HestonParams>& params, const LiquidLattice& lattice,
                                                Exec exec) {
    std::vector<Eigen::VectorXd> out(params.size());
    parallel_for(params.size(), exec, [&](std::size_t t) { out[t] = heston_lattice_prices(params[t], lattice); });
    return out;
}

std::vector<Eigen::MatrixXd> simulate_paths(const DiffusionModel& model, const Eigen::VectorXd& x0, std::size_t steps,
                                            std::size_t n_paths, std::uint64_t seed, const SimulationOptions& options,
                                            Exec exec) {
    std::vector<Eigen::MatrixXd> out(n_paths);
    parallel_for(n_paths, exec,
                   [&](std::size_t i) { out[i] = simulate(model, x0, steps, splitmix64(seed + i), options); });
    return out;
}

CovarianceRatio heston_covariance_ratio(const HestonParams& p, double tau, double m, std::size_t samples, double h,
                                        std::uint64_t seed, Exec exec) {
    p.validate();
    if (samples < 3) throw ConfigError("heston_covariance_ratio: need at least 3 samples");
    if (!(h > 0.0 && h < tau)) throw ConfigError("heston_covariance_ratio: step must lie in (0, tau)");

    const double probes[] = {m - 0.1, m, m + 0.1};
    const HestonSlice now(p, tau, probes);
    const HestonSlice ref(p, tau - h, probes);
    const HestonSlice later(p, tau - h, 128, ref.upper());
    const double c0 = now.price(m);
    const double sq = std::sqrt(p.v0 * h), rc = std::sqrt(std::max(0.0, 1.0 - p.rho * p.rho));

    const std::size_t nb = (samples + kBlock - 1) / kBlock;
    std::vector<Moments> blocks(nb);
    parallel_for(nb, exec, [&](std::size_t b) {
        std::mt19937_64 rng(splitmix64(seed + b));
        std::normal_distribution<double> normal;
        const std::size_t n = std::min(kBlock, samples - b * kBlock);
        Moments mo;
        for (std::size_t i = 0; i < n; ++i) {
            const double z1 = normal(rng), z2 = normal(rng);
            const double x = -0.5 * p.v0 * h + sq * z1;
            const double v = std::max(0.0, p.v0 + p.k * (p.theta - p.v0) * h + p.sigma * sq * (p.rho * z1 + rc * z2));
            const double dS = p.S0 * std::expm1(x);
            const double dC = p.S0 * (later.shifted(m, x, v) - c0);
            mo.add(dS, dC);
        }
        blocks[b] = mo;
    });
    Moments all;
    for (const auto& b : blocks) all.merge(b);

    CovarianceRatio r;
    r.samples = samples;
    r.estimate = all.sxy / all.sxx;
    const double resid = std::max(0.0, all.syy - r.estimate * all.sxy) / (all.n - 2.0);
    r.std_error = std::sqrt(resid / all.sxx);
    return r;
}

}  // namespace mmhedge::kernels
