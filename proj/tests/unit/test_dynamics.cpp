#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>
#include <set>

#include "mmhedge/arbitrage.hpp"
#include "mmhedge/dynamics.hpp"
#include "mmhedge/errors.hpp"

using namespace mmhedge;

namespace {

// ln S plus a 2-D Ornstein-Uhlenbeck factor with constant lower-triangular sigma.
Eigen::MatrixXd ou_path(const Eigen::Matrix3d& S, std::size_t T, std::uint64_t seed) {
    Eigen::MatrixXd X(static_cast<Eigen::Index>(T), 3);
    X.row(0).setZero();
    std::mt19937_64 g(seed);
    std::normal_distribution<double> n;
    for (Eigen::Index t = 1; t < X.rows(); ++t) {
        const Eigen::Vector3d x = X.row(t - 1).transpose();
        const Eigen::Vector3d e(n(g), n(g), n(g));
        const Eigen::Vector3d mu(0.05, -3 * x(1), -3 * x(2));
        X.row(t) = (x + mu * kTradingDt + S * e * std::sqrt(kTradingDt)).transpose();
    }
    return X;
}

Eigen::Matrix3d full_sigma() {
    Eigen::Matrix3d S;
    S << 0.2, 0, 0, -0.3, 0.5, 0, 0.1, 0.2, 0.4;
    return S;
}

const SdeFit& ou_fit() {
    static const SdeFit fit = fit_sde(ou_path(full_sigma(), 2000, 1), std::nullopt);
    return fit;
}

// Box |xi_i| <= r as a factor constraint system.
FactorConstraintSystem box(double r) {
    FactorConstraintSystem f;
    f.M = Eigen::MatrixXd(4, 2);
    f.M << 1, 0, -1, 0, 0, 1, 0, -1;
    f.b = Eigen::VectorXd::Constant(4, -r);
    f.provenance = {0, 1, 2, 3};
    f.labels.assign(4, ConstraintKind::OutrightLower);
    return f;
}

// Fourth-order central difference; the loss is ~10 in magnitude and some
// gradients ~1e-5, so the second-order stencil's error sits near the tolerance.
double fd4(const std::function<double(double)>& f, double h) {
    return (-f(2 * h) + 8 * f(h) - 8 * f(-h) + f(-2 * h)) / (12 * h);
}

}  // namespace

TEST(NeuralSde, UntrainedIsZeroDriftUnitDiagonal) {
    NeuralSde m(2, {32, 32}, 5);
    Eigen::VectorXd mu;
    Eigen::MatrixXd sg;
    m.drift_diffusion(Eigen::Vector2d(0.3, -0.1), mu, sg);
    EXPECT_EQ(mu, Eigen::VectorXd::Zero(3));
    EXPECT_LT((sg - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(NeuralSde, DeterministicAndWrongDimensionRejected) {
    NeuralSde m(2, {32, 32}, 5);
    Eigen::VectorXd theta = m.params();
    std::mt19937_64 g(2);
    std::normal_distribution<double> n;
    for (Eigen::Index i = 0; i < theta.size(); ++i) theta(i) += 0.1 * n(g);
    m.set_params(theta);
    Eigen::VectorXd mu1, mu2;
    Eigen::MatrixXd s1, s2;
    m.drift_diffusion(Eigen::Vector2d(0.1, 0.2), mu1, s1);
    m.drift_diffusion(Eigen::Vector2d(0.1, 0.2), mu2, s2);
    EXPECT_EQ(mu1, mu2);
    EXPECT_EQ(s1, s2);
    EXPECT_THROW(m.drift_diffusion(Eigen::Vector3d::Zero(), mu1, s1), ContractError);
}

TEST(NeuralSde, DiffusionLowerTriangularPositiveDefinite) {
    NeuralSde m(2, {32, 32}, 7);
    Eigen::VectorXd theta = m.params();
    std::mt19937_64 g(3);
    std::normal_distribution<double> n;
    for (Eigen::Index i = 0; i < theta.size(); ++i) theta(i) += 0.3 * n(g);
    m.set_params(theta);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int k = 0; k < 1000; ++k) {
        Eigen::VectorXd mu;
        Eigen::MatrixXd sg;
        m.drift_diffusion(Eigen::Vector2d(u(g), u(g)), mu, sg);
        EXPECT_EQ(sg.triangularView<Eigen::StrictlyUpper>().toDenseMatrix().cwiseAbs().maxCoeff(), 0.0);
        for (Eigen::Index i = 0; i < 3; ++i) EXPECT_GT(sg(i, i), 0.0);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sg * sg.transpose());
        EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
    }
}

TEST(NeuralSde, LossGradientMatchesFiniteDifferences) {
    const auto X = ou_path(full_sigma(), 600, 4);
    NeuralSde m(2, {32, 32}, 9);
    Eigen::VectorXd theta = m.params();
    std::mt19937_64 g(11);
    std::normal_distribution<double> n;
    for (Eigen::Index i = 0; i < theta.size(); ++i) theta(i) += 0.2 * n(g);
    m.set_params(theta);
    m.set_constraints(box(0.05));
    Eigen::VectorXd grad;
    m.loss(X, 0, 500, kTradingDt, 100.0, &grad);
    std::uniform_int_distribution<Eigen::Index> pick(0, theta.size() - 1);
    for (int k = 0; k < 20; ++k) {
        const Eigen::Index i = pick(g);
        NeuralSde probe = m;
        auto f = [&](double h) {
            Eigen::VectorXd t = theta;
            t(i) += h;
            probe.set_params(t);
            return probe.loss(X, 0, 500, kTradingDt, 100.0);
        };
        const double fd = fd4(f, 1e-4);
        EXPECT_LT(std::abs(fd - grad(i)), 1e-4 * std::abs(fd)) << "param " << i << " fd " << fd << " grad " << grad(i);
    }
}

TEST(FitSde, RecoversOuDiffusionAtCentroid) {
    const auto X = ou_path(full_sigma(), 2000, 1);
    const auto& fit = ou_fit();
    Eigen::VectorXd c = X.rightCols(2).colwise().mean().transpose(), mu;
    Eigen::MatrixXd sg;
    fit.model.drift_diffusion(c, mu, sg);
    const Eigen::Matrix3d truth = full_sigma() * full_sigma().transpose();
    EXPECT_LT((sg * sg.transpose() - truth).norm() / truth.norm(), 0.10);
}

TEST(FitSde, DiagonalProcessGivesSmallOffDiagonal) {
    Eigen::Matrix3d S = Eigen::Vector3d(0.2, 0.5, 0.4).asDiagonal();
    const auto X = ou_path(S, 2000, 2);
    auto fit = fit_sde(X, std::nullopt);
    Eigen::VectorXd c = X.rightCols(2).colwise().mean().transpose(), mu;
    Eigen::MatrixXd sg;
    fit.model.drift_diffusion(c, mu, sg);
    const double diag = sg.diagonal().norm();
    EXPECT_LT(sg.triangularView<Eigen::StrictlyLower>().toDenseMatrix().norm(), 0.10 * diag);
}

TEST(FitSde, LossHistoryDeclinesOnMovingAverage) {
    const auto& h = ou_fit().history;
    ASSERT_GE(h.train.size(), 100u);
    const std::size_t w = 50;
    auto avg = [&](std::size_t from) {
        double s = 0;
        for (std::size_t i = from; i < from + w; ++i) s += h.train[i];
        return s / static_cast<double>(w);
    };
    for (std::size_t b = 0; b + 2 * w <= h.train.size(); b += w) EXPECT_LE(avg(b + w), avg(b) + 1e-9) << "block " << b;
    EXPECT_EQ(h.train.size(), h.validation.size());
}

TEST(FitSde, SeededBitDeterminism) {
    const auto X = ou_path(full_sigma(), 300, 6);
    SdeTrainingConfig cfg;
    cfg.max_epochs = 40;
    cfg.seed = 17;
    auto a = fit_sde(X, std::nullopt, cfg);
    auto b = fit_sde(X, std::nullopt, cfg);
    EXPECT_EQ(a.model.params(), b.model.params());
    EXPECT_EQ(a.history.train, b.history.train);
    EXPECT_EQ(simulate(a.model, X.row(0).transpose(), 200, 3), simulate(b.model, X.row(0).transpose(), 200, 3));
}

TEST(FitSde, DegenerateAndShortInputsRejected) {
    Eigen::MatrixXd flat = Eigen::MatrixXd::Constant(100, 3, 0.5);
    EXPECT_THROW(fit_sde(flat, std::nullopt), DataError);
    EXPECT_THROW(fit_sde(ou_path(full_sigma(), 30, 1), std::nullopt), InsufficientDataError);
    Eigen::MatrixXd bad = ou_path(full_sigma(), 100, 1);
    bad(10, 1) = std::nan("");
    EXPECT_THROW(fit_sde(bad, std::nullopt), DataError);
}

TEST(Residuals, PureUnitSteps) {
    ConstantSde m(Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Identity(3, 3));
    Eigen::MatrixXd X(10, 3);
    for (Eigen::Index t = 0; t < 10; ++t) X.row(t).setConstant(static_cast<double>(t) * std::sqrt(kTradingDt));
    EXPECT_LT((residuals(m, X).array() - 1.0).abs().maxCoeff(), 1e-12);
}

TEST(Residuals, SelfSimulatedAreStandardNormal) {
    const auto& model = ou_fit().model;
    const auto P = simulate(model, Eigen::Vector3d::Zero(), 2000, 21);
    const auto E = residuals(model, P);
    ASSERT_EQ(E.rows(), 2000);
    const Eigen::RowVectorXd mean = E.colwise().mean();
    const Eigen::MatrixXd C = E.rowwise() - mean;
    const Eigen::MatrixXd cov = C.transpose() * C / static_cast<double>(E.rows() - 1);
    for (Eigen::Index i = 0; i < 3; ++i) {
        EXPECT_LT(std::abs(mean(i)), 0.1);
        EXPECT_GT(cov(i, i), 0.8);
        EXPECT_LT(cov(i, i), 1.2);
        for (Eigen::Index j = 0; j < i; ++j) EXPECT_LT(std::abs(cov(i, j) / std::sqrt(cov(i, i) * cov(j, j))), 0.1);
    }
}

TEST(Residuals, SingularDiffusionRejected) {
    Eigen::Matrix3d S = Eigen::Matrix3d::Identity();
    S(2, 2) = 0.0;
    ConstantSde m(Eigen::VectorXd::Zero(3), S);
    EXPECT_THROW(residuals(m, Eigen::MatrixXd::Zero(5, 3)), NumericalError);
}

TEST(Simulate, BoundaryCases) {
    ConstantSde m(Eigen::Vector3d(0.1, 0.2, 0.3), Eigen::Matrix3d::Identity());
    const Eigen::Vector3d x0(4.6, 0.01, -0.02);
    const auto P0 = simulate(m, x0, 0, 1);
    ASSERT_EQ(P0.rows(), 1);
    EXPECT_EQ(P0.row(0).transpose(), x0);

    ConstantSde still(Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Zero(3, 3));
    const auto P = simulate(still, x0, 50, 1);
    for (Eigen::Index t = 0; t < P.rows(); ++t) EXPECT_EQ(P.row(t).transpose(), x0);
}

TEST(Simulate, TamedIncrement) {
    // Zero noise: each step is mu dt / (1 + |mu| dt).
    const Eigen::Vector3d mu(30.0, -40.0, 0.0);
    ConstantSde m(mu, Eigen::MatrixXd::Zero(3, 3));
    const auto P = simulate(m, Eigen::Vector3d::Zero(), 1, 1);
    const double damp = 1.0 + mu.norm() * kTradingDt;
    EXPECT_LT((P.row(1).transpose() - mu * kTradingDt / damp).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Simulate, StaysInsidePolytope) {
    // Diffusion far larger than the box, so nearly every step would leave it.
    Eigen::Matrix3d S = Eigen::Matrix3d::Identity() * 2.0;
    ConstantSde m(Eigen::Vector3d(0, 5, -5), S, box(0.05));
    const auto P = simulate(m, Eigen::Vector3d::Zero(), 10000, 8);
    const auto fcs = box(0.05);
    std::size_t bad = 0;
    for (Eigen::Index t = 0; t < P.rows(); ++t)
        bad += !check_arbitrage_free(fcs, P.row(t).tail(2).transpose()).empty();
    EXPECT_EQ(bad, 0u);
    EXPECT_THROW(simulate(m, Eigen::Vector3d(0, 0.2, 0), 5, 1), DataError);
}

TEST(Simulate, BootstrapInnovationsComeFromResiduals) {
    ConstantSde m(Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Identity(3, 3));
    Eigen::MatrixXd R(7, 3);
    std::mt19937_64 g(4);
    std::normal_distribution<double> n;
    for (Eigen::Index i = 0; i < R.size(); ++i) R(i) = n(g);
    SimulationOptions opt;
    opt.mode = InnovationMode::Bootstrap;
    opt.residuals = &R;
    const auto P = simulate(m, Eigen::Vector3d::Zero(), 500, 5, opt);
    std::set<Eigen::Index> used;
    for (Eigen::Index t = 1; t < P.rows(); ++t) {
        const Eigen::RowVectorXd eps = (P.row(t) - P.row(t - 1)) / std::sqrt(kTradingDt);
        Eigen::Index hit = -1;
        for (Eigen::Index r = 0; r < R.rows(); ++r)
            if ((R.row(r) - eps).cwiseAbs().maxCoeff() < 1e-12) hit = r;
        ASSERT_GE(hit, 0) << "step " << t;
        used.insert(hit);
    }
    EXPECT_EQ(used.size(), 7u);
}

TEST(Simulate, SeedReproducible) {
    const auto& model = ou_fit().model;
    EXPECT_EQ(simulate(model, Eigen::Vector3d::Zero(), 300, 9), simulate(model, Eigen::Vector3d::Zero(), 300, 9));
    EXPECT_NE(simulate(model, Eigen::Vector3d::Zero(), 300, 9), simulate(model, Eigen::Vector3d::Zero(), 300, 10));
}

TEST(NeuralSde, JsonRoundTrip) {
    const auto& model = ou_fit().model;
    auto back = NeuralSde::from_json(model.to_json());
    EXPECT_EQ(back.params(), model.params());
    EXPECT_EQ(simulate(back, Eigen::Vector3d::Zero(), 100, 2), simulate(model, Eigen::Vector3d::Zero(), 100, 2));
}
