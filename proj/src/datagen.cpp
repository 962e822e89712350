#include "mmhedge/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "mmhedge/arbitrage.hpp"
#include "mmhedge/errors.hpp"
#include "mmhedge/kernels.hpp"

namespace mmhedge {

HestonParams MarketDataset::truth_at(std::size_t t) const {
    if (!truth || !truth_params) throw ContractError("truth_at: dataset has no generating path");
    if (t >= truth->size()) throw ContractError("truth_at: day out of range");
    HestonParams p = *truth_params;
    p.S0 = (*truth)[t].S;
    p.v0 = std::max((*truth)[t].v, kPricingVarianceFloor);
    return p;
}

std::vector<double> default_tenor_days() { return {30, 60, 91, 122, 152, 182, 273, 365, 547, 730}; }

std::shared_ptr<const LiquidLattice> default_lattice() {
    std::vector<double> taus;
    for (double d : default_tenor_days()) taus.push_back(d / 365.0);
    std::vector<double> ms;
    for (int i = -4; i <= 4; ++i) ms.push_back(0.05 * i);
    return std::make_shared<const LiquidLattice>(std::move(taus), std::move(ms));
}

namespace {

struct Row {
    Date date;
    double spot, tau, m, c;
    std::size_t line;
};

double parse_double(const std::string& s, std::size_t line, const char* field) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw DataError("line " + std::to_string(line) + ": bad " + field + " '" + s + "'");
    }
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) out.push_back(f);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::string chomp(std::string s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
    return s;
}

// Sorted distinct values, merged within a relative tolerance.
std::vector<double> distinct(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::vector<double> out;
    for (double x : v)
        if (out.empty() || std::abs(x - out.back()) > 1e-10 * std::max(1.0, std::abs(x))) out.push_back(x);
    return out;
}

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

}  // namespace

MarketDataset gen_heston_market(const HestonParams& p0, std::size_t days, std::shared_ptr<const LiquidLattice> lattice,
                                std::uint64_t seed, const GenConfig& config) {
    p0.validate();
    if (days < 2) throw ConfigError("gen_heston_market: need at least 2 days");
    if (config.substeps < 1) throw ConfigError("gen_heston_market: substeps must be >= 1");
    if (!lattice) lattice = default_lattice();

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    const double h = kTradingDt / config.substeps, sq = std::sqrt(h);
    const double rc = std::sqrt(std::max(0.0, 1.0 - p0.rho * p0.rho));

    std::vector<TruthPoint> path(days);
    double x = std::log(p0.S0), v = p0.v0;
    path[0] = {p0.S0, v};
    for (std::size_t t = 1; t < days; ++t) {
        for (int s = 0; s < config.substeps; ++s) {
            const double z1 = normal(rng), z2 = normal(rng);
            const double vp = std::max(v, 0.0), sv = std::sqrt(vp);
            x += -0.5 * vp * h + sv * sq * z1;
            v += p0.k * (p0.theta - vp) * h + p0.sigma * sv * sq * (p0.rho * z1 + rc * z2);
        }
        path[t] = {std::exp(x), v};
    }

    MarketDataset out;
    out.lattice = lattice;
    out.truth = path;
    out.truth_params = p0;

    std::vector<HestonParams> params(days);
    for (std::size_t t = 0; t < days; ++t) params[t] = out.truth_at(t);
    const auto prices = kernels::price_lattice_days(
        params, *lattice, config.parallel ? kernels::Exec::Parallel : kernels::Exec::Serial);

    const auto cs = build_constraints(*lattice);
    Date date = config.start;
    out.snapshots.reserve(days);
    for (std::size_t t = 0; t < days; ++t) {
        Eigen::VectorXd c = prices[t];
        for (std::size_t i = 0; i < lattice->size(); ++i)
            c(i) = std::clamp(c(i), intrinsic(lattice->point(i).m), 1.0);
        const auto viol = check_prices(cs, c);
        if (!viol.empty())
            throw NumericalError("gen_heston_market: day " + std::to_string(t) + " (" + date.str() +
                                 ") violates static-arbitrage row " + std::to_string(viol.front().row) + " [" +
                                 std::string(to_string(cs.labels[viol.front().row])) + "] by " + fmt(viol.front().magnitude));
        out.snapshots.emplace_back(date, path[t].S, std::move(c), lattice);
        out.arbitrage_flags.push_back(false);
        date = date.next_business_day();
    }
    return out;
}

MarketDataset ingest_csv(std::istream& is) {
    std::string line;
    std::size_t ln = 0;
    if (!std::getline(is, line)) throw DataError("ingest_csv: empty input");
    ++ln;
    if (chomp(line) != "date,spot,tau,m,c_tilde")
        throw DataError("line 1: expected header 'date,spot,tau,m,c_tilde'");

    std::vector<Row> rows;
    while (std::getline(is, line)) {
        ++ln;
        line = chomp(line);
        if (line.empty()) continue;
        const auto f = split(line);
        if (f.size() != 5)
            throw DataError("line " + std::to_string(ln) + ": expected 5 fields, got " + std::to_string(f.size()));
        Row r;
        try {
            r.date = Date::parse(f[0]);
        } catch (const Error&) {
            throw DataError("line " + std::to_string(ln) + ": bad date '" + f[0] + "'");
        }
        r.spot = parse_double(f[1], ln, "spot");
        r.tau = parse_double(f[2], ln, "tau");
        r.m = parse_double(f[3], ln, "m");
        r.c = parse_double(f[4], ln, "c_tilde");
        r.line = ln;
        if (!rows.empty() && r.date < rows.back().date)
            throw DataError("line " + std::to_string(ln) + ": date " + r.date.str() + " precedes " +
                            rows.back().date.str());
        rows.push_back(r);
    }
    if (rows.empty()) throw DataError("ingest_csv: no data rows");

    std::vector<double> taus, ms;
    for (const auto& r : rows) {
        taus.push_back(r.tau);
        ms.push_back(r.m);
    }
    std::shared_ptr<const LiquidLattice> lattice;
    try {
        lattice = std::make_shared<const LiquidLattice>(distinct(taus), distinct(ms));
    } catch (const Error& e) {
        throw DataError(std::string("ingest_csv: lattice: ") + e.what());
    }
    const auto cs = build_constraints(*lattice);

    MarketDataset out;
    out.lattice = lattice;
    std::vector<std::string> incomplete;
    for (std::size_t b = 0; b < rows.size();) {
        std::size_t e = b;
        while (e < rows.size() && rows[e].date == rows[b].date) ++e;
        Eigen::VectorXd c = Eigen::VectorXd::Constant(lattice->size(), std::nan(""));
        bool ok = true;
        for (std::size_t i = b; i < e; ++i) {
            const auto& r = rows[i];
            if (std::abs(r.spot - rows[b].spot) > 1e-12 * std::abs(rows[b].spot))
                throw DataError("line " + std::to_string(r.line) + ": spot differs within date " + r.date.str());
            const auto idx = lattice->find(r.tau, r.m, 1e-10);
            if (!idx || !std::isnan(c(*idx))) {
                if (idx) throw DataError("line " + std::to_string(r.line) + ": duplicate lattice point");
                ok = false;
                continue;
            }
            c(*idx) = r.c;
        }
        if (!ok || c.hasNaN()) {
            incomplete.push_back(rows[b].date.str());
        } else {
            try {
                out.snapshots.emplace_back(rows[b].date, rows[b].spot, c, lattice);
            } catch (const Error& err) {
                throw DataError("line " + std::to_string(rows[b].line) + ": date " + rows[b].date.str() + ": " +
                                err.what());
            }
            out.arbitrage_flags.push_back(!check_prices(cs, c).empty());
        }
        b = e;
    }
    if (!incomplete.empty()) {
        std::string msg = "ingest_csv: incomplete lattice on date(s)";
        for (const auto& d : incomplete) msg += " " + d;
        throw DataError(msg);
    }
    return out;
}

MarketDataset ingest_csv_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open " + path);
    return ingest_csv(f);
}

void write_surface_csv(std::ostream& os, const MarketDataset& data) {
    os << "date,spot,tau,m,c_tilde\n";
    for (const auto& s : data.snapshots) {
        const auto d = s.date().str();
        const auto sp = fmt(s.spot());
        for (std::size_t i = 0; i < s.lattice().size(); ++i) {
            const auto p = s.lattice().point(i);
            os << d << ',' << sp << ',' << fmt(p.tau) << ',' << fmt(p.m) << ',' << fmt(s.prices()(i)) << '\n';
        }
    }
}

void write_truth_csv(std::ostream& os, const MarketDataset& data) {
    if (!data.truth) throw ContractError("write_truth_csv: dataset has no truth path");
    os << "date,S,v\n";
    for (std::size_t t = 0; t < data.size(); ++t)
        os << data.snapshots[t].date().str() << ',' << fmt((*data.truth)[t].S) << ',' << fmt((*data.truth)[t].v)
           << '\n';
}

std::vector<TruthPoint> read_truth_csv(std::istream& is, const MarketDataset& data) {
    std::string line;
    std::size_t ln = 1;
    if (!std::getline(is, line) || chomp(line) != "date,S,v") throw DataError("line 1: expected header 'date,S,v'");
    std::vector<TruthPoint> out;
    while (std::getline(is, line)) {
        ++ln;
        line = chomp(line);
        if (line.empty()) continue;
        const auto f = split(line);
        if (f.size() != 3) throw DataError("line " + std::to_string(ln) + ": expected 3 fields");
        const std::size_t t = out.size();
        if (t >= data.size() || f[0] != data.snapshots[t].date().str())
            throw DataError("line " + std::to_string(ln) + ": truth date does not match the surface history");
        out.push_back({parse_double(f[1], ln, "S"), parse_double(f[2], ln, "v")});
    }
    if (out.size() != data.size()) throw DataError("truth path length does not match the surface history");
    return out;
}

}  // namespace mmhedge
