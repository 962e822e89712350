#include "mmhedge/factors.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "mmhedge/errors.hpp"

namespace mmhedge {

FactorModel::FactorModel(std::shared_ptr<const LiquidLattice> lattice, Eigen::VectorXd G0, Eigen::MatrixXd G)
    : lattice_(std::move(lattice)), G0_(std::move(G0)), G_(std::move(G)) {
    const auto n = static_cast<Eigen::Index>(lattice_->size());
    if (G0_.size() != n || G_.cols() != n)
        throw ContractError("FactorModel: basis width does not match the lattice size " + std::to_string(n));
    interp_.emplace_back(lattice_, G0_);
    for (Eigen::Index j = 0; j < G_.rows(); ++j) interp_.emplace_back(lattice_, Eigen::VectorXd(G_.row(j).transpose()));
}

Eigen::VectorXd FactorModel::reconstruct(const Eigen::VectorXd& xi) const {
    if (static_cast<std::size_t>(xi.size()) != d())
        throw ContractError("reconstruct: expected " + std::to_string(d()) + " factors, got " + std::to_string(xi.size()));
    return G0_ + G_.transpose() * xi;
}

Eigen::VectorXd FactorModel::project(const Eigen::VectorXd& prices) const {
    if (prices.size() != G0_.size()) throw ContractError("project: price vector does not match the lattice");
    return G_ * (prices - G0_);
}

SurfaceValue FactorModel::basis(std::size_t j, double tau, double m) const {
    if (j > d()) throw ContractError("basis index " + std::to_string(j) + " exceeds d = " + std::to_string(d()));
    return interp_[j](tau, m);
}

Eigen::VectorXd reconstruct(const FactorModel& model, const Eigen::VectorXd& xi) { return model.reconstruct(xi); }

double xi_exposure(const FactorModel& model, double spot, double tau, double m, std::size_t j) {
    if (j < 1 || j > model.d()) throw ContractError("xi_exposure: factor index must lie in 1.." + std::to_string(model.d()));
    return spot * model.basis(j, tau, m).value;
}

namespace {

// G1 positive at the shortest-tenor, nearest-the-money node, so xi1 moves with
// the price level there; higher bases positive at their first nonzero entry.
void fix_signs(Eigen::MatrixXd& G, const LiquidLattice& lattice) {
    if (G.rows() == 0) return;
    const auto atm = static_cast<Eigen::Index>(lattice.index(0, lattice.nearest_m(0.0)));
    double s = G(0, atm);
    if (std::abs(s) < 1e-14) s = G.row(0).sum();
    if (s < 0) G.row(0) *= -1.0;
    for (Eigen::Index j = 1; j < G.rows(); ++j)
        for (Eigen::Index c = 0; c < G.cols(); ++c)
            if (std::abs(G(j, c)) > 1e-14) {
                if (G(j, c) < 0) G.row(j) *= -1.0;
                break;
            }
}

}  // namespace

DecodeResult decode_factors(const std::vector<SurfaceSnapshot>& history, std::size_t d) {
    if (d == 0) throw ConfigError("decode_factors: factor count must be positive");
    if (history.size() < d + 1)
        throw InsufficientDataError("decode_factors: need at least " + std::to_string(d + 1) + " dates, got " +
                                    std::to_string(history.size()));
    const auto& lattice = history.front().lattice_ptr();
    const auto T = static_cast<Eigen::Index>(history.size());
    const auto N = static_cast<Eigen::Index>(lattice->size());
    if (static_cast<Eigen::Index>(d) > N) throw ConfigError("decode_factors: d exceeds the lattice size");

    Eigen::MatrixXd C(T, N);
    for (Eigen::Index t = 0; t < T; ++t) {
        const auto& snap = history[static_cast<std::size_t>(t)];
        if (!(snap.lattice() == *lattice)) throw DataError("decode_factors: snapshot " + snap.date().str() + " uses a different lattice");
        if (t > 0 && !(history[static_cast<std::size_t>(t - 1)].date() < snap.date()))
            throw DataError("decode_factors: dates not strictly increasing at " + snap.date().str());
        C.row(t) = snap.prices().transpose();
    }
    Eigen::VectorXd G0 = C.colwise().mean().transpose();
    Eigen::MatrixXd X = C.rowwise() - G0.transpose();

    Eigen::BDCSVD<Eigen::MatrixXd> svd(X, Eigen::ComputeThinV);
    const auto di = static_cast<Eigen::Index>(d);
    Eigen::MatrixXd G = svd.matrixV().leftCols(di).transpose();
    fix_signs(G, *lattice);

    const Eigen::VectorXd& sv = svd.singularValues();
    const double total = sv.squaredNorm();
    const double kept = sv.head(std::min(di, sv.size())).squaredNorm();

    Eigen::MatrixXd xi = X * G.transpose();
    Eigen::MatrixXd recon = (xi * G).rowwise() + G0.transpose();

    DecodeResult out{FactorModel(lattice, G0, G), {}, {}, total > 0 ? kept / total : 1.0};
    out.path.xi = xi;
    for (const auto& s : history) out.path.dates.push_back(s.date());
    for (Eigen::Index t = 0; t < T; ++t) out.residuals.push_back((C.row(t) - recon.row(t)).cwiseAbs().maxCoeff());
    return out;
}

nlohmann::json to_json(const FactorModel& model) {
    const auto& L = model.lattice();
    std::vector<double> g0(model.G0().data(), model.G0().data() + model.G0().size());
    nlohmann::json bases = nlohmann::json::array();
    for (Eigen::Index j = 0; j < model.G().rows(); ++j) {
        std::vector<double> row(static_cast<std::size_t>(model.G().cols()));
        for (Eigen::Index c = 0; c < model.G().cols(); ++c) row[static_cast<std::size_t>(c)] = model.G()(j, c);
        bases.push_back(row);
    }
    return {{"version", 1}, {"taus", L.taus()}, {"ms", L.ms()}, {"lattice_hash", L.hash()},
            {"d", model.d()}, {"G0", g0}, {"G", bases}};
}

FactorModel factor_model_from_json(const nlohmann::json& j) {
    if (j.at("version").get<int>() != 1) throw DataError("factor model: unsupported version");
    auto lattice = std::make_shared<const LiquidLattice>(j.at("taus").get<std::vector<double>>(),
                                                         j.at("ms").get<std::vector<double>>());
    if (j.contains("lattice_hash") && j["lattice_hash"].get<std::string>() != lattice->hash())
        throw DataError("factor model: lattice hash mismatch");
    auto g0 = j.at("G0").get<std::vector<double>>();
    const auto& bases = j.at("G");
    const auto N = static_cast<Eigen::Index>(g0.size());
    Eigen::MatrixXd G(static_cast<Eigen::Index>(bases.size()), N);
    for (Eigen::Index r = 0; r < G.rows(); ++r) {
        auto row = bases[static_cast<std::size_t>(r)].get<std::vector<double>>();
        if (static_cast<Eigen::Index>(row.size()) != N) throw DataError("factor model: ragged basis rows");
        for (Eigen::Index c = 0; c < N; ++c) G(r, c) = row[static_cast<std::size_t>(c)];
    }
    return FactorModel(lattice, Eigen::Map<Eigen::VectorXd>(g0.data(), N), G);
}

void write_factor_path_csv(std::ostream& os, const FactorPath& path) {
    os << "date";
    for (Eigen::Index j = 0; j < path.xi.cols(); ++j) os << ",xi" << (j + 1);
    os << '\n';
    os.precision(17);
    for (std::size_t t = 0; t < path.dates.size(); ++t) {
        os << path.dates[t].str();
        for (Eigen::Index j = 0; j < path.xi.cols(); ++j) os << ',' << path.xi(static_cast<Eigen::Index>(t), j);
        os << '\n';
    }
}

FactorPath read_factor_path_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("date", 0) != 0) throw DataError("factor path CSV: missing header");
    std::size_t d = 0;
    for (char ch : line) d += ch == ',';
    FactorPath p;
    std::vector<std::vector<double>> rows;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::getline(ss, cell, ',');
        p.dates.push_back(Date::parse(cell));
        std::vector<double> row;
        while (std::getline(ss, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw DataError("factor path CSV line " + std::to_string(lineno) + ": bad number '" + cell + "'");
            }
        }
        if (row.size() != d) throw DataError("factor path CSV line " + std::to_string(lineno) + ": wrong column count");
        rows.push_back(std::move(row));
    }
    p.xi.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d));
    for (std::size_t t = 0; t < rows.size(); ++t)
        for (std::size_t j = 0; j < d; ++j) p.xi(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) = rows[t][j];
    return p;
}

}  // namespace mmhedge
