#include "mmhedge/backtest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>

#include "mmhedge/errors.hpp"
#include "mmhedge/heston.hpp"
#include "mmhedge/models.hpp"

namespace mmhedge {

double overall_error(const std::vector<double>& h, const std::vector<double>& u) {
    if (h.size() != u.size()) throw ContractError("overall_error: series lengths differ");
    if (h.size() < 2) throw InsufficientDataError("overall_error: need at least 2 PnL observations");
    double sh = 0.0, su = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        sh += h[i] * h[i];
        su += u[i] * u[i];
    }
    if (su == 0.0) return sh == 0.0 ? std::numeric_limits<double>::quiet_NaN() : std::numeric_limits<double>::infinity();
    return 100.0 * std::sqrt(sh / su);
}

std::vector<double> ewma_variance(const std::vector<double>& x, double lambda) {
    if (!(lambda > 0.0 && lambda < 1.0)) throw ConfigError("ewma: lambda must lie in (0, 1)");
    std::vector<double> e(x.size());
    for (std::size_t t = 0; t < x.size(); ++t)
        e[t] = t == 0 ? x[0] * x[0] : lambda * e[t - 1] + (1.0 - lambda) * x[t] * x[t];
    return e;
}

std::vector<double> ewma_error(const std::vector<double>& h, const std::vector<double>& u, double lambda) {
    if (h.size() != u.size()) throw ContractError("ewma_error: series lengths differ");
    const auto eh = ewma_variance(h, lambda), eu = ewma_variance(u, lambda);
    std::vector<double> out(h.size());
    for (std::size_t t = 0; t < h.size(); ++t)
        out[t] = eu[t] == 0.0 ? (eh[t] == 0.0 ? std::numeric_limits<double>::quiet_NaN()
                                              : std::numeric_limits<double>::infinity())
                              : 100.0 * std::sqrt(eh[t] / eu[t]);
    return out;
}

CalibrationConfig BacktestConfig::fast_calibration() {
    CalibrationConfig c;
    c.inner_nodes = 128;
    c.max_evals = 1500;
    c.f_rel_tol = 1e-10;
    c.f_abs_tol = 1e-16;
    c.x_tol = 1e-6;
    return c;
}

namespace {

bool needs_sde(HedgeMethod m) {
    return m == HedgeMethod::DeltaNsdeMv || m == HedgeMethod::DxiMv || m == HedgeMethod::MvDirect;
}
bool needs_heston(HedgeMethod m) { return m == HedgeMethod::DeltaHestonMv || m == HedgeMethod::DvHeston; }

// Everything a hedge needs on one opening date, per lattice point.
struct Day {
    bool ok = false;
    std::string reason;
    double S = 0.0, S_next = 0.0;
    std::vector<Exposures> exp;
    std::vector<ModelGreeks> bs, hes;
    Eigen::VectorXd V, V_next;  // currency values now and after dt
    Eigen::MatrixXd sigma;
    double heston_adj = 0.0;  // rho sigma / S0 of the day's Heston fit
};

ModelGreeks bs_point_greeks(const SurfaceSnapshot& snap, std::size_t i) {
    const auto p = snap.lattice().point(i);
    try {
        return bs_greeks(OptionSpec::call(p.tau, p.m), snap);
    } catch (const DomainError&) {
        return {p.m < 0.0 ? 1.0 : 0.0, 0.0};  // price on its bound
    }
}

double flat_vol_value(const SurfaceSnapshot& snap, std::size_t i_tau, double m) {
    const auto& L = snap.lattice();
    const double tau = L.taus()[i_tau];
    if (m >= L.ms().front() && m <= L.ms().back()) return interp_surface(snap, tau, m).value;
    const std::size_t j = m < L.ms().front() ? 0 : L.n_m() - 1;
    try {
        return bs_price({implied_vol(snap.prices()(L.index(i_tau, j)), tau, L.ms()[j]), tau, m});
    } catch (const DomainError&) {
        return intrinsic(m);
    }
}

Eigen::VectorXd truth_values(const MarketDataset& data, std::size_t l, std::size_t next, int dt) {
    const auto& L = *data.lattice;
    const HestonParams p = data.truth_at(next);
    const double S = data.snapshots[l].spot(), x = std::log(p.S0 / S);
    const double elapsed = dt * kTradingDt;
    Eigen::VectorXd V(L.size());
    for (std::size_t it = 0; it < L.n_tau(); ++it) {
        const double tau = L.taus()[it] - elapsed;
        if (!(tau > 0.0)) throw DataError("backtest: option expires inside the hedge period");
        std::vector<double> probes;
        for (double m : {L.ms().front(), 0.0, L.ms().back()}) probes.push_back(m - x);
        const HestonSlice slice(p, tau, probes);
        for (std::size_t j = 0; j < L.n_m(); ++j) {
            const double mn = L.ms()[j] - x;
            const double c = std::clamp(slice.price(mn), intrinsic(mn), 1.0);
            V(L.index(it, j)) = p.S0 * c;
        }
    }
    return V;
}

Eigen::VectorXd snapshot_values(const MarketDataset& data, std::size_t l, std::size_t next) {
    const auto& L = *data.lattice;
    const auto& sn = data.snapshots[next];
    const double x = std::log(sn.spot() / data.snapshots[l].spot());
    Eigen::VectorXd V(L.size());
    for (std::size_t i = 0; i < L.size(); ++i)
        V(i) = sn.spot() * flat_vol_value(sn, L.tau_index(i), L.point(i).m - x);
    return V;
}

}  // namespace

BacktestResult run_backtest(const MarketDataset& data, std::size_t begin, std::size_t end,
                            const std::vector<Portfolio>& portfolios, const FactorModel& factors,
                            const DiffusionModel* sde, const BacktestConfig& cfg) {
    if (cfg.methods.empty()) throw ConfigError("backtest: no hedge methods");
    if (cfg.dt < 1) throw ConfigError("backtest: dt must be >= 1");
    if (portfolios.empty()) throw ConfigError("backtest: no portfolios");
    if (end > data.size() || begin >= end) throw ConfigError("backtest: test window outside the dataset");
    if (end - begin < static_cast<std::size_t>(cfg.dt) + 2)
        throw InsufficientDataError("backtest: test window too short for the hedge period");
    if (!(factors.lattice() == *data.lattice)) throw ContractError("backtest: factor model lattice differs");
    const bool any_sde = std::any_of(cfg.methods.begin(), cfg.methods.end(), needs_sde);
    const bool any_heston = std::any_of(cfg.methods.begin(), cfg.methods.end(), needs_heston);
    if (any_sde && !sde) throw ConfigError("backtest: market-model MV methods need a fitted SDE");
    if (sde && sde->d() != factors.d()) throw ContractError("backtest: SDE and factor dimensions differ");

    Revaluation reval = cfg.revaluation;
    if (reval == Revaluation::Auto) reval = data.truth ? Revaluation::Truth : Revaluation::Snapshot;
    if (reval == Revaluation::Truth && !data.truth) throw ConfigError("backtest: truth revaluation needs a truth path");

    const auto& L = *data.lattice;
    const std::size_t n_open = end - begin - static_cast<std::size_t>(cfg.dt);
    const std::size_t hedge = L.index(L.nearest_tau(cfg.hedge_tenor_days / 365.0), L.nearest_m(cfg.hedge_m));

    BacktestResult res;
    res.hedge_index = hedge;
    res.warmup = cfg.warmup;

    // Heston parameters per opening date.
    std::vector<HestonParams> hp;
    if (any_heston) {
        if (cfg.heston) {
            std::map<Date, HestonParams> by_date;
            for (const auto& d : *cfg.heston) by_date[d.date] = d.result.params;
            for (std::size_t k = 0; k < n_open; ++k) {
                const auto& snap = data.snapshots[begin + k];
                const auto it = by_date.find(snap.date());
                if (it == by_date.end()) throw DataError("backtest: no Heston parameters for " + snap.date().str());
                hp.push_back(it->second);
                res.heston.push_back({snap.date(), {it->second, 0.0, 0.0, 0, true}});
            }
        } else {
            CalibrationConfig cc = cfg.calibration;
            for (std::size_t k = 0; k < n_open; ++k) {
                const auto& snap = data.snapshots[begin + k];
                if (!hp.empty()) {
                    cc.warm_start = hp.back();
                    cc.warm_start->S0 = snap.spot();
                }
                auto r = calibrate_heston(snap, cc);
                if (r.mape > cfg.recalibrate_mape) {
                    // Low-variance days need the reference quadrature: the reduced
                    // node count cannot resolve the slowly decaying integrand.
                    // Warm from the fast fit first; cold multi-start only if that stalls.
                    CalibrationConfig ref;
                    ref.warm_start = r.params;
                    auto c = calibrate_heston(snap, ref);
                    if (c.objective < r.objective) r = c;
                    if (r.mape > cfg.recalibrate_mape) {
                        c = calibrate_heston(snap, CalibrationConfig{});
                        if (c.objective < r.objective) r = c;
                    }
                }
                hp.push_back(r.params);
                res.heston.push_back({snap.date(), r});
            }
        }
    }

    std::vector<Day> days(n_open);
    kernels::parallel_for(n_open, cfg.exec, [&](std::size_t k) {
        const std::size_t l = begin + k, next = l + static_cast<std::size_t>(cfg.dt);
        const auto& snap = data.snapshots[l];
        Day& d = days[k];
        try {
            d.S = snap.spot();
            d.S_next = data.snapshots[next].spot();
            d.exp.resize(L.size());
            d.bs.resize(L.size());
            d.V = d.S * snap.prices();
            for (std::size_t i = 0; i < L.size(); ++i) {
                const auto p = L.point(i);
                d.exp[i] = exposures(OptionSpec::call(p.tau, p.m), snap, factors, d.S);
                d.bs[i] = bs_point_greeks(snap, i);
            }
            if (any_heston) {
                HestonParams p = hp[k];
                p.S0 = d.S;
                HestonGreekEngine eng(p);
                d.hes.resize(L.size());
                for (std::size_t i = 0; i < L.size(); ++i) {
                    const auto pt = L.point(i);
                    d.hes[i] = eng.greeks(OptionSpec::call(pt.tau, pt.m));
                }
                d.heston_adj = p.rho * p.sigma / p.S0;
            }
            if (sde) {
                Eigen::VectorXd mu;
                sde->drift_diffusion(factors.project(snap.prices()), mu, d.sigma);
            }
            d.V_next = reval == Revaluation::Truth ? truth_values(data, l, next, cfg.dt) : snapshot_values(data, l, next);
            d.ok = true;
        } catch (const DataError& e) {
            d.ok = false;
            d.reason = e.what();
        }
    });
    std::size_t n_skip = 0;
    for (std::size_t k = 0; k < n_open; ++k)
        if (!days[k].ok) {
            ++n_skip;
            res.skipped.push_back({data.snapshots[begin + k].date(), days[k].reason});
        }
    if (static_cast<double>(n_skip) > cfg.max_skip_fraction * static_cast<double>(n_open))
        throw DataError("backtest: " + std::to_string(n_skip) + " of " + std::to_string(n_open) +
                        " dates skipped (first: " + res.skipped.front().date.str() + ": " + res.skipped.front().reason +
                        ")");

    // Portfolio legs resolved once per date, shared by all methods.
    std::vector<std::vector<std::vector<LatticeLeg>>> legs(portfolios.size(), std::vector<std::vector<LatticeLeg>>(n_open));
    kernels::parallel_for(portfolios.size() * n_open, cfg.exec, [&](std::size_t q) {
        const std::size_t pf = q / n_open, k = q % n_open;
        if (days[k].ok) legs[pf][k] = resolve(portfolios[pf], data.snapshots[begin + k]);
    });

    const std::size_t n_m = cfg.methods.size();
    res.reports.resize(portfolios.size() * n_m);
    kernels::parallel_for(res.reports.size(), cfg.exec, [&](std::size_t q) {
        const std::size_t pf = q / n_m;
        const HedgeMethod method = cfg.methods[q % n_m];
        HedgingErrorReport& rep = res.reports[q];
        rep.portfolio = portfolios[pf].name;
        rep.category = portfolios[pf].category;
        rep.method = method;
        rep.dt = cfg.dt;
        const std::size_t d = factors.d();
        for (std::size_t k = 0; k < n_open; ++k) {
            const Day& day = days[k];
            if (!day.ok) continue;
            Exposures E{0.0, 0.0, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d))};
            ModelGreeks bs, hs;
            double u = 0.0;
            for (const auto& lg : legs[pf][k]) {
                const auto& e = day.exp[lg.index];
                E.value += lg.weight * e.value;
                E.dS += lg.weight * e.dS;
                E.dXi += lg.weight * e.dXi;
                bs.delta += lg.weight * day.bs[lg.index].delta;
                bs.vega += lg.weight * day.bs[lg.index].vega;
                if (!day.hes.empty()) {
                    hs.delta += lg.weight * day.hes[lg.index].delta;
                    hs.vega += lg.weight * day.hes[lg.index].vega;
                }
                u += lg.weight * (day.V_next(lg.index) - day.V(lg.index));
            }
            double xs = 0.0, xc = 0.0;
            auto vega_ratio = [&](const ModelGreeks& t, const ModelGreeks& c) {
                if (!(std::abs(c.vega) > 1e-12))
                    throw SingularSystemError("backtest: hedging option has no vega on " +
                                                  data.snapshots[begin + k].date().str(),
                                              {0});
                xc = t.vega / c.vega;
                xs = t.delta - xc * c.delta;
            };
            const std::vector<Exposures> inst{day.exp[hedge]};
            switch (method) {
            case HedgeMethod::None: break;
            case HedgeMethod::DeltaBs: xs = bs.delta; break;
            case HedgeMethod::DeltaHestonMv: xs = hs.delta + hs.vega * day.heston_adj; break;
            case HedgeMethod::DeltaMm: xs = E.dS; break;
            case HedgeMethod::DeltaNsdeMv: xs = mv_delta(E, day.S, day.sigma); break;
            case HedgeMethod::DvBs: vega_ratio(bs, day.bs[hedge]); break;
            case HedgeMethod::DvHeston: vega_ratio(hs, day.hes[hedge]); break;
            case HedgeMethod::DxiSens: {
                const auto r = solve_sensitivity(E, inst, 1);
                xs = r.x_s;
                xc = r.x_c(0);
                break;
            }
            case HedgeMethod::DxiMv: {
                const auto r = solve_mv(E, inst, 1, day.S, day.sigma);
                xs = r.x_s;
                xc = r.x_c(0);
                break;
            }
            case HedgeMethod::MvDirect: {
                const auto r = solve_direct_mv(E, inst, day.S, day.sigma);
                xs = r.x_s;
                xc = r.x_c(0);
                break;
            }
            }
            const double h = u - xs * (day.S_next - day.S) - xc * (day.V_next(hedge) - day.V(hedge));
            rep.dates.push_back(data.snapshots[begin + k].date());
            rep.pnl_unhedged.push_back(u);
            rep.pnl_hedged.push_back(h);
        }
        rep.overall_pct = overall_error(rep.pnl_hedged, rep.pnl_unhedged);
        rep.ewma_pct = ewma_error(rep.pnl_hedged, rep.pnl_unhedged, cfg.lambda);
    });
    return res;
}

const HedgingErrorReport& find_report(const BacktestResult& r, const std::string& portfolio, HedgeMethod method) {
    for (const auto& rep : r.reports)
        if (rep.portfolio == portfolio && rep.method == method) return rep;
    throw ConfigError("no report for " + portfolio + " / " + std::string(to_string(method)));
}

namespace {
std::string num(double x) {
    if (std::isnan(x)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}
}  // namespace

void write_ewma_csv(std::ostream& os, const BacktestResult& r) {
    os << "date,portfolio,category,method,dt,ewma_pct\n";
    for (const auto& rep : r.reports)
        for (std::size_t t = static_cast<std::size_t>(std::max(r.warmup, 0)); t < rep.dates.size(); ++t)
            os << rep.dates[t].str() << ',' << rep.portfolio << ',' << to_string(rep.category) << ','
               << to_string(rep.method) << ',' << rep.dt << ',' << num(rep.ewma_pct[t]) << '\n';
}

void write_summary_csv(std::ostream& os, const BacktestResult& r) {
    os << "portfolio,method,dt,overall_pct\n";
    for (const auto& rep : r.reports)
        os << rep.portfolio << ',' << to_string(rep.method) << ',' << rep.dt << ',' << num(rep.overall_pct) << '\n';
}

nlohmann::json plot_data(const BacktestResult& r, const std::vector<std::string>& portfolios) {
    nlohmann::json series = nlohmann::json::array();
    for (const auto& rep : r.reports) {
        if (!portfolios.empty() && std::find(portfolios.begin(), portfolios.end(), rep.portfolio) == portfolios.end())
            continue;
        nlohmann::json dates = nlohmann::json::array();
        for (const auto& d : rep.dates) dates.push_back(d.str());
        auto clean = [](const std::vector<double>& v) {
            nlohmann::json a = nlohmann::json::array();
            for (double x : v) a.push_back(std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr));
            return a;
        };
        series.push_back({{"portfolio", rep.portfolio},
                          {"category", to_string(rep.category)},
                          {"method", to_string(rep.method)},
                          {"dt", rep.dt},
                          {"overall_pct", std::isfinite(rep.overall_pct) ? nlohmann::json(rep.overall_pct)
                                                                          : nlohmann::json(nullptr)},
                          {"dates", dates},
                          {"ewma_pct", clean(rep.ewma_pct)},
                          {"pnl_unhedged", clean(rep.pnl_unhedged)},
                          {"pnl_hedged", clean(rep.pnl_hedged)}});
    }
    return {{"version", 1}, {"warmup", r.warmup}, {"series", series}};
}

}  // namespace mmhedge
