#include "mmhedge/arbitrage.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <sstream>

#include "mmhedge/errors.hpp"
#include "mmhedge/lp.hpp"

namespace mmhedge {

std::string_view to_string(ConstraintKind kind) {
    switch (kind) {
    case ConstraintKind::OutrightLower: return "outright-lower";
    case ConstraintKind::OutrightUpper: return "outright-upper";
    case ConstraintKind::Vertical: return "vertical";
    case ConstraintKind::Butterfly: return "butterfly";
    case ConstraintKind::Calendar: return "calendar";
    }
    return "unknown";
}

ConstraintKind constraint_kind_from_string(std::string_view text) {
    for (auto k : {ConstraintKind::OutrightLower, ConstraintKind::OutrightUpper, ConstraintKind::Vertical,
                   ConstraintKind::Butterfly, ConstraintKind::Calendar})
        if (to_string(k) == text) return k;
    throw DataError("unknown constraint label '" + std::string(text) + "'");
}

namespace {

struct RowBuilder {
    std::size_t n;
    std::vector<Eigen::VectorXd> rows;
    std::vector<double> rhs;
    std::vector<ConstraintKind> labels;

    Eigen::VectorXd& add(ConstraintKind kind, double b) {
        rows.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n)));
        rhs.push_back(b);
        labels.push_back(kind);
        return rows.back();
    }
};

}  // namespace

ConstraintSystem build_constraints(const LiquidLattice& lattice) {
    const std::size_t nt = lattice.n_tau(), nm = lattice.n_m();
    RowBuilder rb{lattice.size(), {}, {}, {}};
    auto at = [&](std::size_t it, std::size_t im) { return static_cast<Eigen::Index>(lattice.index(it, im)); };
    const auto& ms = lattice.ms();
    std::vector<double> k(nm);  // strikes in units of spot
    for (std::size_t i = 0; i < nm; ++i) k[i] = std::exp(ms[i]);

    for (std::size_t it = 0; it < nt; ++it)
        for (std::size_t im = 0; im < nm; ++im) {
            rb.add(ConstraintKind::OutrightLower, intrinsic(ms[im]))(at(it, im)) = 1.0;
            rb.add(ConstraintKind::OutrightUpper, -1.0)(at(it, im)) = -1.0;
        }

    ConstraintSystem cs;
    if (nm >= 2) {
        // c(k_i) >= c(k_{i+1})  and  c(k_{i+1}) - c(k_i) >= -(k_{i+1} - k_i)
        for (std::size_t it = 0; it < nt; ++it)
            for (std::size_t im = 0; im + 1 < nm; ++im) {
                auto& r1 = rb.add(ConstraintKind::Vertical, 0.0);
                r1(at(it, im)) = 1.0;
                r1(at(it, im + 1)) = -1.0;
                auto& r2 = rb.add(ConstraintKind::Vertical, -(k[im + 1] - k[im]));
                r2(at(it, im)) = -1.0;
                r2(at(it, im + 1)) = 1.0;
            }
    } else {
        cs.omitted.push_back(ConstraintKind::Vertical);
    }
    if (nm >= 3) {
        // Convexity in strike: slope to the right >= slope to the left.
        for (std::size_t it = 0; it < nt; ++it)
            for (std::size_t im = 1; im + 1 < nm; ++im) {
                double wl = 1.0 / (k[im] - k[im - 1]), wr = 1.0 / (k[im + 1] - k[im]);
                auto& r = rb.add(ConstraintKind::Butterfly, 0.0);
                r(at(it, im - 1)) = wl;
                r(at(it, im)) = -(wl + wr);
                r(at(it, im + 1)) = wr;
            }
    } else {
        cs.omitted.push_back(ConstraintKind::Butterfly);
    }
    if (nt >= 2) {
        // Zero rates: at fixed K/S the call value cannot decrease with expiry.
        for (std::size_t it = 0; it + 1 < nt; ++it)
            for (std::size_t im = 0; im < nm; ++im) {
                auto& r = rb.add(ConstraintKind::Calendar, 0.0);
                r(at(it + 1, im)) = 1.0;
                r(at(it, im)) = -1.0;
            }
    } else {
        cs.omitted.push_back(ConstraintKind::Calendar);
    }

    const auto R = static_cast<Eigen::Index>(rb.rows.size());
    cs.A.resize(R, static_cast<Eigen::Index>(lattice.size()));
    cs.b_hat.resize(R);
    for (Eigen::Index r = 0; r < R; ++r) {
        cs.A.row(r) = rb.rows[static_cast<std::size_t>(r)].transpose();
        cs.b_hat(r) = rb.rhs[static_cast<std::size_t>(r)];
    }
    cs.labels = std::move(rb.labels);
    cs.lattice_hash = lattice.hash();
    return cs;
}

FactorConstraintSystem project_constraints(const ConstraintSystem& cs, const Eigen::VectorXd& G0,
                                           const Eigen::MatrixXd& G) {
    if (G.cols() != cs.A.cols() || G0.size() != cs.A.cols())
        throw ContractError("project_constraints: basis has " + std::to_string(G.cols()) + " columns, system has " +
                            std::to_string(cs.A.cols()));
    FactorConstraintSystem out;
    out.M = cs.A * G.transpose();
    out.b = cs.b_hat - cs.A * G0;
    out.provenance.resize(cs.rows());
    for (std::size_t i = 0; i < cs.rows(); ++i) out.provenance[i] = i;
    out.labels = cs.labels;
    out.lattice_hash = cs.lattice_hash;
    return out;
}

namespace {

FactorConstraintSystem select_rows(const FactorConstraintSystem& fcs, const std::vector<std::size_t>& keep) {
    FactorConstraintSystem out;
    const auto k = static_cast<Eigen::Index>(keep.size());
    out.M.resize(k, fcs.M.cols());
    out.b.resize(k);
    for (Eigen::Index r = 0; r < k; ++r) {
        auto src = static_cast<Eigen::Index>(keep[static_cast<std::size_t>(r)]);
        out.M.row(r) = fcs.M.row(src);
        out.b(r) = fcs.b(src);
        out.provenance.push_back(fcs.provenance[keep[static_cast<std::size_t>(r)]]);
        out.labels.push_back(fcs.labels[keep[static_cast<std::size_t>(r)]]);
        if (!fcs.slack.empty()) out.slack.push_back(fcs.slack[keep[static_cast<std::size_t>(r)]]);
    }
    out.lattice_hash = fcs.lattice_hash;
    return out;
}

}  // namespace

FactorConstraintSystem relax_to_cover(const FactorConstraintSystem& fcs, const Eigen::MatrixXd& xi) {
    if (static_cast<std::size_t>(xi.cols()) != fcs.dim())
        throw ContractError("relax_to_cover: points have dimension " + std::to_string(xi.cols()) + ", expected " +
                            std::to_string(fcs.dim()));
    FactorConstraintSystem out = fcs;
    if (out.slack.empty()) out.slack.assign(fcs.rows(), 0.0);
    if (xi.rows() == 0 || fcs.rows() == 0) return out;
    const Eigen::MatrixXd gap = (fcs.M * xi.transpose()).colwise() - fcs.b;  // R x T
    for (std::size_t r = 0; r < fcs.rows(); ++r) {
        const double worst = -gap.row(static_cast<Eigen::Index>(r)).minCoeff();
        if (worst > 0.0) {
            out.b(static_cast<Eigen::Index>(r)) -= worst;
            out.slack[r] += worst;
        }
    }
    return out;
}

FactorConstraintSystem eliminate_redundant(const FactorConstraintSystem& fcs) {
    const std::size_t R = fcs.rows();
    auto feas = lp::find_feasible(fcs.M, fcs.b);
    if (!feas.feasible) {
        std::vector<std::size_t> cert;
        for (auto i : feas.certificate) cert.push_back(fcs.provenance[i]);
        std::ostringstream os;
        os << "factor constraint system is infeasible; certificate rows:";
        for (auto i : cert) os << ' ' << i;
        throw InfeasibleError(os.str(), std::move(cert));
    }

    std::vector<bool> active(R, true);
    for (std::size_t k = 0; k < R; ++k) {
        std::vector<std::size_t> others;
        for (std::size_t i = 0; i < R; ++i)
            if (active[i] && i != k) others.push_back(i);
        auto rest = select_rows(fcs, others);
        const auto kk = static_cast<Eigen::Index>(k);
        // min M_k xi over the remaining rows; >= b_k means row k never binds.
        auto res = lp::minimize(fcs.M.row(kk).transpose(), rest.M, rest.b);
        if (res.status == lp::Status::Optimal &&
            res.value >= fcs.b(kk) - 1e-9 * (1.0 + std::abs(fcs.b(kk))))
            active[k] = false;
    }
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < R; ++i)
        if (active[i]) keep.push_back(i);
    return select_rows(fcs, keep);
}

std::vector<Violation> check_arbitrage_free(const FactorConstraintSystem& fcs, const Eigen::VectorXd& xi, double tol) {
    if (static_cast<std::size_t>(xi.size()) != fcs.dim())
        throw ContractError("check_arbitrage_free: factor vector has dimension " + std::to_string(xi.size()) +
                            ", expected " + std::to_string(fcs.dim()));
    std::vector<Violation> out;
    if (fcs.rows() == 0) return out;
    Eigen::VectorXd slack = fcs.M * xi - fcs.b;
    for (Eigen::Index r = 0; r < slack.size(); ++r)
        if (slack(r) < -tol) out.push_back({static_cast<std::size_t>(r), -slack(r)});
    return out;
}

std::vector<Violation> check_prices(const ConstraintSystem& cs, const Eigen::VectorXd& prices, double tol) {
    if (prices.size() != cs.A.cols()) throw ContractError("check_prices: price vector does not match the system");
    std::vector<Violation> out;
    Eigen::VectorXd slack = cs.A * prices - cs.b_hat;
    for (Eigen::Index r = 0; r < slack.size(); ++r)
        if (slack(r) < -tol) out.push_back({static_cast<std::size_t>(r), -slack(r)});
    return out;
}

std::string FactorConstraintSystem::hash() const {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&](double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        for (int i = 0; i < 8; ++i) {
            h ^= (bits >> (8 * i)) & 0xffu;
            h *= 1099511628211ull;
        }
    };
    for (Eigen::Index r = 0; r < M.rows(); ++r) {
        for (Eigen::Index c = 0; c < M.cols(); ++c) mix(M(r, c));
        mix(b(r));
    }
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
}

nlohmann::json to_json(const ConstraintSystem& cs) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t r = 0; r < cs.rows(); ++r) {
        const auto rr = static_cast<Eigen::Index>(r);
        std::vector<double> coeffs(static_cast<std::size_t>(cs.A.cols()));
        for (Eigen::Index c = 0; c < cs.A.cols(); ++c) coeffs[static_cast<std::size_t>(c)] = cs.A(rr, c);
        rows.push_back({{"label", to_string(cs.labels[r])}, {"coeffs", coeffs}, {"rhs", cs.b_hat(rr)}});
    }
    nlohmann::json omitted = nlohmann::json::array();
    for (auto k : cs.omitted) omitted.push_back(to_string(k));
    return {{"rows", rows}, {"lattice_hash", cs.lattice_hash}, {"omitted", omitted}};
}

nlohmann::json to_json(const FactorConstraintSystem& fcs) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t r = 0; r < fcs.rows(); ++r) {
        const auto rr = static_cast<Eigen::Index>(r);
        std::vector<double> coeffs(static_cast<std::size_t>(fcs.M.cols()));
        for (Eigen::Index c = 0; c < fcs.M.cols(); ++c) coeffs[static_cast<std::size_t>(c)] = fcs.M(rr, c);
        rows.push_back({{"label", to_string(fcs.labels[r])},
                        {"coeffs", coeffs},
                        {"rhs", fcs.b(rr)},
                        {"source_row", fcs.provenance[r]},
                        {"slack", fcs.slack.empty() ? 0.0 : fcs.slack[r]}});
    }
    return {{"rows", rows}, {"lattice_hash", fcs.lattice_hash}, {"dim", fcs.M.cols()}};
}

ConstraintSystem constraint_system_from_json(const nlohmann::json& j) {
    ConstraintSystem cs;
    const auto& rows = j.at("rows");
    const auto R = static_cast<Eigen::Index>(rows.size());
    const auto N = R > 0 ? static_cast<Eigen::Index>(rows[0].at("coeffs").size()) : 0;
    cs.A.resize(R, N);
    cs.b_hat.resize(R);
    for (Eigen::Index r = 0; r < R; ++r) {
        const auto& row = rows[static_cast<std::size_t>(r)];
        auto coeffs = row.at("coeffs").get<std::vector<double>>();
        if (static_cast<Eigen::Index>(coeffs.size()) != N) throw DataError("constraint rows have ragged coefficients");
        for (Eigen::Index c = 0; c < N; ++c) cs.A(r, c) = coeffs[static_cast<std::size_t>(c)];
        cs.b_hat(r) = row.at("rhs").get<double>();
        cs.labels.push_back(constraint_kind_from_string(row.at("label").get<std::string>()));
    }
    cs.lattice_hash = j.at("lattice_hash").get<std::string>();
    if (j.contains("omitted"))
        for (const auto& o : j["omitted"]) cs.omitted.push_back(constraint_kind_from_string(o.get<std::string>()));
    return cs;
}

FactorConstraintSystem factor_constraints_from_json(const nlohmann::json& j) {
    FactorConstraintSystem f;
    const auto& rows = j.at("rows");
    const auto R = static_cast<Eigen::Index>(rows.size());
    const auto d = j.at("dim").get<Eigen::Index>();
    f.M.resize(R, d);
    f.b.resize(R);
    for (Eigen::Index r = 0; r < R; ++r) {
        const auto& row = rows[static_cast<std::size_t>(r)];
        auto coeffs = row.at("coeffs").get<std::vector<double>>();
        if (static_cast<Eigen::Index>(coeffs.size()) != d) throw DataError("factor constraint row has wrong width");
        for (Eigen::Index c = 0; c < d; ++c) f.M(r, c) = coeffs[static_cast<std::size_t>(c)];
        f.b(r) = row.at("rhs").get<double>();
        f.labels.push_back(constraint_kind_from_string(row.at("label").get<std::string>()));
        f.provenance.push_back(row.at("source_row").get<std::size_t>());
        f.slack.push_back(row.value("slack", 0.0));
    }
    f.lattice_hash = j.at("lattice_hash").get<std::string>();
    return f;
}

}  // namespace mmhedge
