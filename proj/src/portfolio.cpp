#include "mmhedge/portfolio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>

#include "mmhedge/errors.hpp"
#include "mmhedge/models.hpp"

namespace mmhedge {

namespace {

constexpr std::pair<PortfolioCategory, std::string_view> kNames[] = {
    {PortfolioCategory::Naive, "naive"},
    {PortfolioCategory::Outright, "outright"},
    {PortfolioCategory::DeltaSpread, "delta-spread"},
    {PortfolioCategory::DeltaButterfly, "delta-butterfly"},
    {PortfolioCategory::Strangle, "strangle"},
    {PortfolioCategory::CalendarSpread, "calendar-spread"},
    {PortfolioCategory::Vix, "vix"},
};

std::string tag(double tenor_days, double delta) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%gd_%.2f", tenor_days, delta);
    return buf;
}

bool has(const std::vector<double>& v, double x) {
    return std::any_of(v.begin(), v.end(), [&](double y) { return std::abs(x - y) < 1e-9; });
}

}  // namespace

std::string_view to_string(PortfolioCategory c) {
    for (const auto& [k, n] : kNames)
        if (k == c) return n;
    return "?";
}

PortfolioCategory portfolio_category_from_string(std::string_view text) {
    for (const auto& [k, n] : kNames)
        if (n == text) return k;
    throw ConfigError("unknown portfolio category '" + std::string(text) + "'");
}

const std::vector<PortfolioCategory>& all_portfolio_categories() {
    static const std::vector<PortfolioCategory> all = [] {
        std::vector<PortfolioCategory> v;
        for (const auto& kn : kNames) v.push_back(kn.first);
        return v;
    }();
    return all;
}

std::vector<double> default_deltas() { return {0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8}; }

std::vector<Portfolio> make_portfolios(const std::vector<PortfolioCategory>& categories,
                                       const std::vector<double>& deltas, const std::vector<double>& tenors,
                                       double vix_tenor_days) {
    if (categories.empty()) throw ConfigError("make_portfolios: empty category set");
    if (deltas.empty() || tenors.empty()) throw ConfigError("make_portfolios: empty delta or tenor set");
    for (double d : deltas)
        if (!(d > 0.0 && d < 1.0)) throw ConfigError("make_portfolios: delta outside (0, 1)");
    for (double t : tenors)
        if (!(t > 0.0)) throw ConfigError("make_portfolios: non-positive tenor");

    std::vector<double> D = deltas;
    std::sort(D.begin(), D.end());
    std::vector<Portfolio> out;
    for (auto cat : categories) {
        const std::string cname(to_string(cat));
        switch (cat) {
        case PortfolioCategory::Naive: out.push_back({cname, cat, {}}); break;
        case PortfolioCategory::Vix: {
            char buf[32];
            std::snprintf(buf, sizeof buf, "vix_%gd", vix_tenor_days);
            out.push_back({buf, cat, {}});
            break;
        }
        case PortfolioCategory::Outright:
            for (double t : tenors)
                for (double d : D) out.push_back({cname + "_" + tag(t, d), cat, {{t, d, 1.0}}});
            break;
        case PortfolioCategory::DeltaSpread:
            for (double t : tenors)
                for (std::size_t i = 0; i < D.size(); ++i)
                    for (std::size_t j = 0; j < i; ++j)
                        out.push_back({cname + "_" + tag(t, D[i]) + "_" + tag(t, D[j]).substr(tag(t, D[j]).find('_') + 1),
                                       cat,
                                       {{t, D[i], 1.0}, {t, D[j], -1.0}}});
            break;
        case PortfolioCategory::DeltaButterfly:
        case PortfolioCategory::Strangle:
            for (double t : tenors)
                for (double d : D) {
                    if (!(d < 0.5 - 1e-12) || !has(D, 1.0 - d)) continue;
                    if (cat == PortfolioCategory::DeltaButterfly) {
                        if (!has(D, 0.5)) continue;
                        out.push_back({cname + "_" + tag(t, d), cat, {{t, d, 1.0}, {t, 1.0 - d, 1.0}, {t, 0.5, -2.0}}});
                    } else {
                        out.push_back({cname + "_" + tag(t, d), cat, {{t, d, 1.0}, {t, 1.0 - d, 1.0}}});
                    }
                }
            break;
        case PortfolioCategory::CalendarSpread: {
            std::vector<double> T = tenors;
            std::sort(T.begin(), T.end());
            for (std::size_t i = 0; i < T.size(); ++i)
                for (std::size_t j = 0; j < i; ++j) {
                    char buf[64];
                    std::snprintf(buf, sizeof buf, "%s_%gd_%gd", cname.c_str(), T[i], T[j]);
                    out.push_back({buf, cat, {{T[i], 0.5, 1.0}, {T[j], 0.5, -1.0}}});
                }
            break;
        }
        }
    }
    return out;
}

std::size_t resolve_delta(const SurfaceSnapshot& snap, std::size_t i_tau, double delta) {
    const auto& L = snap.lattice();
    const double tau = L.taus()[i_tau];
    std::size_t best = 0;
    double best_err = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < L.n_m(); ++j) {
        const double m = L.ms()[j];
        double dl;
        try {
            dl = bs_delta({implied_vol(snap.prices()(L.index(i_tau, j)), tau, m), tau, m});
        } catch (const DomainError&) {
            dl = m < 0.0 ? 1.0 : 0.0;  // price on its bound: zero-vol delta
        }
        const double err = std::abs(dl - delta);
        if (err < best_err - 1e-15) {
            best_err = err;
            best = j;
        }
    }
    return L.index(i_tau, best);
}

std::vector<double> vix_weights(const LiquidLattice& L, std::size_t i_tau, double spot) {
    if (!(spot > 0.0)) throw DomainError("vix_weights: non-positive spot");
    const auto& ms = L.ms();
    const std::size_t n = ms.size();
    const double T = L.taus()[i_tau];
    std::vector<double> k(n), w(n);
    for (std::size_t i = 0; i < n; ++i) k[i] = std::exp(ms[i]);
    for (std::size_t i = 0; i < n; ++i) {
        double dk;
        if (n == 1) dk = 0.0;
        else if (i == 0) dk = k[1] - k[0];
        else if (i + 1 == n) dk = k[n - 1] - k[n - 2];
        else dk = 0.5 * (k[i + 1] - k[i - 1]);
        w[i] = 2.0 / T * dk / (k[i] * k[i]) / spot;
    }
    return w;
}

std::vector<LatticeLeg> resolve(const Portfolio& pf, const SurfaceSnapshot& snap, double vix_tenor_days) {
    const auto& L = snap.lattice();
    std::map<std::size_t, double> acc;
    switch (pf.category) {
    case PortfolioCategory::Naive:
        for (std::size_t i = 0; i < L.size(); ++i) acc[i] = 1.0;
        break;
    case PortfolioCategory::Vix: {
        const std::size_t it = L.nearest_tau(vix_tenor_days / 365.0);
        const auto w = vix_weights(L, it, snap.spot());
        for (std::size_t j = 0; j < w.size(); ++j) acc[L.index(it, j)] += w[j];
        break;
    }
    default:
        for (const auto& leg : pf.legs) {
            const std::size_t it = L.nearest_tau(leg.tenor_days / 365.0);
            acc[resolve_delta(snap, it, leg.delta)] += leg.weight;
        }
    }
    std::vector<LatticeLeg> out;
    for (const auto& [i, w] : acc)
        if (w != 0.0) out.push_back({i, w});
    return out;
}

Target to_target(const std::vector<LatticeLeg>& legs, const LiquidLattice& L) {
    Target t;
    for (const auto& l : legs) {
        const auto p = L.point(l.index);
        t.push_back({OptionSpec::call(p.tau, p.m), l.weight});
    }
    return t;
}

}  // namespace mmhedge
