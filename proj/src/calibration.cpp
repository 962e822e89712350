#include "mmhedge/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "mmhedge/errors.hpp"
#include "mmhedge/heston.hpp"

namespace mmhedge {

NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f, Eigen::VectorXd x0, double step,
                             int max_evals, const NelderMeadTolerances& tol, int restarts) {
    const double ftol = tol.f_rel, fatol = tol.f_abs, xtol = tol.x;
    const auto n = x0.size();
    NelderMeadResult best{x0, f(x0), 1, false};
    for (int round = 0; round <= restarts && best.evaluations < max_evals; ++round) {
        std::vector<Eigen::VectorXd> pts{best.x};
        std::vector<double> vals{best.value};
        for (Eigen::Index i = 0; i < n; ++i) {
            Eigen::VectorXd p = best.x;
            p(i) += step;
            pts.push_back(p);
            vals.push_back(f(p));
            ++best.evaluations;
        }
        std::vector<std::size_t> order(pts.size());
        bool round_converged = false;
        while (best.evaluations < max_evals) {
            std::iota(order.begin(), order.end(), 0);
            std::sort(order.begin(), order.end(), [&](auto a, auto b) { return vals[a] < vals[b]; });
            const std::size_t lo = order.front(), hi = order.back(), nh = order[order.size() - 2];
            if (vals[hi] - vals[lo] <= ftol * std::abs(vals[lo]) + fatol) {
                double size = 0.0;
                for (const auto& p : pts) size = std::max(size, (p - pts[lo]).cwiseAbs().maxCoeff());
                if (size < xtol || vals[hi] - vals[lo] == 0.0) {
                    round_converged = true;
                    break;
                }
            }
            Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
            for (std::size_t i = 0; i < pts.size(); ++i)
                if (i != hi) c += pts[i];
            c /= static_cast<double>(n);
            auto eval = [&](const Eigen::VectorXd& p) {
                ++best.evaluations;
                return f(p);
            };
            Eigen::VectorXd xr = c + (c - pts[hi]);
            const double fr = eval(xr);
            if (fr < vals[lo]) {
                Eigen::VectorXd xe = c + 2.0 * (c - pts[hi]);
                const double fe = eval(xe);
                if (fe < fr) pts[hi] = xe, vals[hi] = fe;
                else pts[hi] = xr, vals[hi] = fr;
            } else if (fr < vals[nh]) {
                pts[hi] = xr, vals[hi] = fr;
            } else {
                const bool outside = fr < vals[hi];
                Eigen::VectorXd xc = outside ? Eigen::VectorXd(c + 0.5 * (xr - c)) : Eigen::VectorXd(c + 0.5 * (pts[hi] - c));
                const double fc = eval(xc);
                if (fc < std::min(fr, vals[hi])) {
                    pts[hi] = xc, vals[hi] = fc;
                } else {
                    for (std::size_t i = 0; i < pts.size(); ++i) {
                        if (i == lo) continue;
                        pts[i] = pts[lo] + 0.5 * (pts[i] - pts[lo]);
                        vals[i] = eval(pts[i]);
                    }
                }
            }
        }
        const auto it = std::min_element(vals.begin(), vals.end());
        const auto idx = static_cast<std::size_t>(it - vals.begin());
        const bool improved = vals[idx] < best.value * (1.0 - 1e-12);
        if (vals[idx] <= best.value) best.x = pts[idx], best.value = vals[idx];
        best.converged = round_converged;
        // A restart that finds nothing new confirms the optimum.
        if (round > 0 && !improved && round_converged) break;
        step *= 0.5;
    }
    return best;
}

namespace {

Eigen::VectorXd to_unconstrained(const HestonParams& p) {
    Eigen::VectorXd x(5);
    x << std::log(p.v0), std::log(p.theta), std::log(p.k), std::log(p.sigma),
        std::atanh(std::clamp(p.rho, -0.999999, 0.999999));
    return x;
}

HestonParams from_unconstrained(const Eigen::VectorXd& x, double S0) {
    HestonParams p;
    p.S0 = S0;
    p.v0 = std::exp(x(0));
    p.theta = std::exp(x(1));
    p.k = std::exp(x(2));
    p.sigma = std::exp(x(3));
    p.rho = std::tanh(x(4));
    return p;
}

bool sane(const HestonParams& p) {
    return p.v0 > 1e-8 && p.v0 < 4.0 && p.theta > 1e-8 && p.theta < 4.0 && p.k > 1e-4 && p.k < 50.0 &&
           p.sigma > 1e-6 && p.sigma < 10.0;
}

}  // namespace

double price_mape(const Eigen::VectorXd& model, const Eigen::VectorXd& market, double floor) {
    if (model.size() != market.size()) throw ContractError("price_mape: size mismatch");
    double acc = 0.0;
    int n = 0;
    for (Eigen::Index i = 0; i < market.size(); ++i)
        if (market(i) >= floor) {
            acc += std::abs(model(i) - market(i)) / market(i);
            ++n;
        }
    if (n == 0) throw DataError("price_mape: no quotes above the floor");
    return acc / n;
}

CalibrationResult calibrate_heston(const SurfaceSnapshot& snapshot, const CalibrationConfig& config) {
    const auto& L = snapshot.lattice();
    const Eigen::VectorXd& market = snapshot.prices();
    const auto N = market.size();

    Eigen::VectorXd weight(N);
    double atm_var = 0.0;
    for (Eigen::Index i = 0; i < N; ++i) {
        const auto pt = L.point(static_cast<std::size_t>(i));
        double vega = config.vega_floor;
        try {
            const double iv = implied_vol(market(i), pt.tau, pt.m);
            vega = std::max(bs_vega_normalized({iv, pt.tau, pt.m}), config.vega_floor);
            if (L.tau_index(static_cast<std::size_t>(i)) == 0 && L.m_index(static_cast<std::size_t>(i)) == L.nearest_m(0.0))
                atm_var = iv * iv;
        } catch (const DomainError&) {
            // quote sits on its bound; keep the floored weight
        }
        weight(i) = 1.0 / vega;
    }
    if (!(atm_var > 0)) atm_var = 0.04;

    std::vector<HestonParams> starts;
    const double S0 = snapshot.spot();
    if (config.warm_start) {
        starts.push_back(*config.warm_start);
        starts.back().S0 = S0;
    } else {
        starts.push_back({S0, atm_var, atm_var, 2.0, 0.5, -0.5});
        starts.push_back({S0, atm_var, 1.5 * atm_var, 1.0, 0.3, -0.8});
        starts.push_back({S0, atm_var, 0.7 * atm_var, 4.0, 0.9, -0.2});
    }

    CalibrationResult best;
    best.objective = std::numeric_limits<double>::infinity();
    for (const auto& start : starts) {
        HestonLatticePricer pricer(L, start, config.inner_nodes);
        auto objective = [&](const Eigen::VectorXd& x) {
            const auto p = from_unconstrained(x, S0);
            if (!sane(p)) return 1e300;
            try {
                const Eigen::VectorXd c = pricer.prices(p);
                return (c - market).array().square().matrix().dot(weight);
            } catch (const Error&) {
                return 1e300;
            }
        };
        auto nm = nelder_mead(objective, to_unconstrained(start), config.warm_start ? 0.05 : 0.2, config.max_evals,
                              {config.f_rel_tol, config.f_abs_tol, config.x_tol});
        best.evaluations += nm.evaluations;
        if (nm.value < best.objective) {
            best.params = from_unconstrained(nm.x, S0);
            best.objective = nm.value;
            best.converged = nm.converged;
        }
    }
    best.mape = price_mape(heston_lattice_prices(best.params, L), market, config.mape_floor);
    return best;
}

void write_heston_csv(std::ostream& os, const std::vector<DatedHeston>& series) {
    os << "date,S0,v0,theta,k,sigma,rho,mape\n";
    os.precision(17);
    for (const auto& row : series) {
        const auto& p = row.result.params;
        os << row.date.str() << ',' << p.S0 << ',' << p.v0 << ',' << p.theta << ',' << p.k << ',' << p.sigma << ','
           << p.rho << ',' << row.result.mape << '\n';
    }
}

std::vector<DatedHeston> read_heston_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != "date,S0,v0,theta,k,sigma,rho,mape")
        throw DataError("Heston CSV: unexpected header");
    std::vector<DatedHeston> out;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != 8) throw DataError("Heston CSV line " + std::to_string(lineno) + ": expected 8 columns");
        DatedHeston d;
        d.date = Date::parse(cells[0]);
        try {
            d.result.params = {std::stod(cells[1]), std::stod(cells[2]), std::stod(cells[3]),
                               std::stod(cells[4]), std::stod(cells[5]), std::stod(cells[6])};
            d.result.mape = std::stod(cells[7]);
        } catch (const std::exception&) {
            throw DataError("Heston CSV line " + std::to_string(lineno) + ": bad number");
        }
        out.push_back(d);
    }
    return out;
}

}  // namespace mmhedge
