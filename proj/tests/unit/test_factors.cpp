#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "mmhedge/errors.hpp"
#include "mmhedge/factors.hpp"
#include "test_util.hpp"

using namespace mmhedge;

namespace {

Date day(std::size_t t) {
    Date d(2020, 1, 2);
    for (std::size_t i = 0; i < t; ++i) d = d.next_business_day();
    return d;
}

struct Rank2 {
    std::shared_ptr<const LiquidLattice> L;
    Eigen::VectorXd G0;
    Eigen::MatrixXd G;  // 2 x N orthonormal
    std::vector<SurfaceSnapshot> history;
};

// Prices exactly G0 + G^T xi_t with a smooth rank-2 basis.
Rank2 rank2_history(std::size_t T, std::uint64_t seed) {
    Rank2 r;
    r.L = testutil::grid({0.25, 0.5, 1.0}, -0.2, 0.2, 0.05);
    const auto N = static_cast<Eigen::Index>(r.L->size());
    r.G0 = testutil::bs_surface(*r.L, 0.3);
    Eigen::MatrixXd B(N, 2);
    for (Eigen::Index i = 0; i < N; ++i) {
        const auto p = r.L->point(static_cast<std::size_t>(i));
        B(i, 0) = std::sqrt(p.tau) * std::exp(-p.m * p.m / (0.1 * p.tau));
        B(i, 1) = p.m * std::sqrt(p.tau);
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(B);
    r.G = (qr.householderQ() * Eigen::MatrixXd::Identity(N, 2)).transpose();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z;
    for (std::size_t t = 0; t < T; ++t) {
        Eigen::Vector2d xi(0.001 * z(rng), 0.0005 * z(rng));
        r.history.emplace_back(day(t), 100.0, r.G0 + r.G.transpose() * xi,
                               r.L);
    }
    return r;
}

}  // namespace

TEST(Decode, ExactRankTwoRecovered) {
    auto r = rank2_history(60, 1);
    auto dec = decode_factors(r.history, 2);
    for (double res : dec.residuals) EXPECT_LT(res, 1e-12);
    // Sines of the principal angles: singular values of the part of span(G)
    // outside span(G_hat). The cosine form bottoms out near 1.5e-8.
    const Eigen::MatrixXd& Gh = dec.model.G();
    const Eigen::MatrixXd outside = r.G.transpose() - Gh.transpose() * (Gh * r.G.transpose());
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(outside);
    for (Eigen::Index i = 0; i < 2; ++i) EXPECT_LT(std::asin(std::min(1.0, svd.singularValues()(i))), 1e-8);
    EXPECT_NEAR(dec.explained_variance, 1.0, 1e-12);
}

TEST(Decode, Orthonormality) {
    auto r = rank2_history(40, 2);
    auto dec = decode_factors(r.history, 2);
    EXPECT_LT((dec.model.G() * dec.model.G().transpose() - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Decode, ConstantHistory) {
    auto L = testutil::grid({0.25, 0.5}, -0.1, 0.1, 0.05);
    std::vector<SurfaceSnapshot> h;
    for (std::size_t t = 0; t < 5; ++t) h.emplace_back(day(t), 100.0, testutil::bs_surface(*L, 0.2), L);
    auto dec = decode_factors(h, 2);
    EXPECT_LT((dec.model.G0() - h[0].prices()).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_LT(dec.path.xi.cwiseAbs().maxCoeff(), 1e-15);
    for (double res : dec.residuals) EXPECT_LT(res, 1e-15);
}

TEST(Decode, RankOneHistoryHasZeroSecondFactor) {
    auto r = rank2_history(30, 3);
    std::vector<SurfaceSnapshot> h;
    for (std::size_t t = 0; t < 30; ++t)
        h.emplace_back(day(t), 100.0,
                       r.G0 + r.G.row(0).transpose() * (0.001 * (static_cast<double>(t) - 15.0)), r.L);
    auto dec = decode_factors(h, 2);
    EXPECT_LT(dec.path.xi.col(1).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Decode, InsufficientData) {
    auto r = rank2_history(2, 4);
    EXPECT_THROW(decode_factors(r.history, 2), InsufficientDataError);
}

TEST(Decode, SignConventionFirstFactorRaisesAtmShortPrice) {
    auto r = rank2_history(50, 5);
    auto dec = decode_factors(r.history, 2);
    const auto& L = dec.model.lattice();
    EXPECT_GT(dec.model.G()(0, static_cast<Eigen::Index>(L.index(0, L.nearest_m(0.0)))), 0.0);
}

TEST(Reconstruct, LinearityAndRoundTrip) {
    auto r = rank2_history(50, 6);
    auto dec = decode_factors(r.history, 2);
    const auto& m = dec.model;
    EXPECT_EQ(reconstruct(m, Eigen::Vector2d::Zero()), m.G0());
    EXPECT_LT((reconstruct(m, Eigen::Vector2d(1, 0)) - (m.G0() + m.G().row(0).transpose())).cwiseAbs().maxCoeff(),
              1e-15);
    for (std::size_t t = 0; t < r.history.size(); ++t) {
        const Eigen::VectorXd c = reconstruct(m, dec.path.xi.row(static_cast<Eigen::Index>(t)).transpose());
        EXPECT_LE((c - r.history[t].prices()).cwiseAbs().maxCoeff(), dec.residuals[t] + 1e-15);
    }
}

TEST(Exposure, SpotTimesBasis) {
    auto r = rank2_history(20, 7);
    auto dec = decode_factors(r.history, 2);
    const auto& L = dec.model.lattice();
    const std::size_t i = L.index(1, 3);
    const auto p = L.point(i);
    EXPECT_NEAR(xi_exposure(dec.model, 100.0, p.tau, p.m, 1), 100.0 * dec.model.G()(0, static_cast<Eigen::Index>(i)),
                1e-12);
    EXPECT_EQ(xi_exposure(dec.model, 0.0, p.tau, p.m, 2), 0.0);
    EXPECT_THROW(xi_exposure(dec.model, 100.0, 5.0, 0.0, 1), OutOfRangeError);
    EXPECT_THROW(xi_exposure(dec.model, 100.0, p.tau, p.m, 3), ContractError);
}

TEST(Exposure, ScalesWithBasisEntry) {
    auto L = testutil::grid({0.25, 0.5}, -0.1, 0.1, 0.05);
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(1, static_cast<Eigen::Index>(L->size()));
    G.setConstant(0.12);
    FactorModel fm(L, testutil::bs_surface(*L, 0.2), G);
    EXPECT_NEAR(xi_exposure(fm, 100.0, 0.3, 0.02, 1), 12.0, 1e-12);
}

TEST(Serialization, ModelJsonAndPathCsv) {
    auto r = rank2_history(20, 8);
    auto dec = decode_factors(r.history, 2);
    auto back = factor_model_from_json(to_json(dec.model));
    EXPECT_EQ(back.G(), dec.model.G());
    EXPECT_EQ(back.G0(), dec.model.G0());
    EXPECT_EQ(back.lattice().hash(), dec.model.lattice().hash());

    std::stringstream ss;
    write_factor_path_csv(ss, dec.path);
    EXPECT_EQ(ss.str().substr(0, 13), "date,xi1,xi2\n");
    auto p = read_factor_path_csv(ss);
    EXPECT_EQ(p.xi, dec.path.xi);
    EXPECT_EQ(p.dates, dec.path.dates);
}
