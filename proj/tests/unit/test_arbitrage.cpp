#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "mmhedge/arbitrage.hpp"
#include "mmhedge/errors.hpp"
#include "test_util.hpp"

using namespace mmhedge;

namespace {

std::size_t count(const ConstraintSystem& cs, ConstraintKind k) {
    return static_cast<std::size_t>(std::count(cs.labels.begin(), cs.labels.end(), k));
}

FactorConstraintSystem plain(Eigen::MatrixXd M, Eigen::VectorXd b) {
    FactorConstraintSystem f;
    f.M = std::move(M);
    f.b = std::move(b);
    for (Eigen::Index i = 0; i < f.M.rows(); ++i) {
        f.provenance.push_back(static_cast<std::size_t>(i));
        f.labels.push_back(ConstraintKind::Vertical);
    }
    return f;
}

bool inside(const FactorConstraintSystem& f, const Eigen::VectorXd& x) { return check_arbitrage_free(f, x).empty(); }

// Random orthonormal basis of d rows scaled by `s`.
Eigen::MatrixXd random_basis(std::mt19937_64& rng, Eigen::Index d, Eigen::Index n) {
    std::normal_distribution<double> z;
    Eigen::MatrixXd X(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d; ++j) X(i, j) = z(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(X);
    return (qr.householderQ() * Eigen::MatrixXd::Identity(n, d)).transpose();
}

}  // namespace

TEST(BuildConstraints, SmallLatticeCounts) {
    LiquidLattice L({0.25, 0.5}, {-0.1, 0.0, 0.1});
    auto cs = build_constraints(L);
    EXPECT_EQ(count(cs, ConstraintKind::OutrightLower), 6u);
    EXPECT_EQ(count(cs, ConstraintKind::OutrightUpper), 6u);
    EXPECT_EQ(count(cs, ConstraintKind::Vertical), 8u);  // 2 per adjacent strike pair, per tenor
    EXPECT_EQ(count(cs, ConstraintKind::Butterfly), 2u);
    EXPECT_EQ(count(cs, ConstraintKind::Calendar), 3u);
    EXPECT_TRUE(cs.omitted.empty());
    for (Eigen::Index r = 0; r < cs.A.rows(); ++r) EXPECT_GT(cs.A.row(r).cwiseAbs().maxCoeff(), 0.0);
}

TEST(BuildConstraints, SparseFamiliesOmitted) {
    LiquidLattice L({0.25}, {-0.1, 0.0});
    auto cs = build_constraints(L);
    EXPECT_EQ(count(cs, ConstraintKind::Butterfly), 0u);
    EXPECT_EQ(count(cs, ConstraintKind::Calendar), 0u);
    EXPECT_EQ(cs.omitted, (std::vector<ConstraintKind>{ConstraintKind::Butterfly, ConstraintKind::Calendar}));
}

TEST(BuildConstraints, IntrinsicSurfaceIsBoundaryCase) {
    auto L = testutil::grid({0.25, 0.5, 1.0}, -0.2, 0.2, 0.05);
    auto cs = build_constraints(*L);
    Eigen::VectorXd c(L->size());
    for (std::size_t i = 0; i < L->size(); ++i) c(i) = intrinsic(L->point(i).m);
    EXPECT_TRUE(check_prices(cs, c).empty());
    EXPECT_LT((cs.A * c - cs.b_hat).minCoeff(), 1e-12);  // some rows hold with equality
}

TEST(BuildConstraints, BlackScholesSurfaceIsFree) {
    auto L = testutil::grid({0.1, 0.25, 0.5, 1.0, 2.0}, -0.3, 0.3, 0.05);
    auto cs = build_constraints(*L);
    for (double s : {0.05, 0.2, 0.6}) EXPECT_TRUE(check_prices(cs, testutil::bs_surface(*L, s)).empty());
}

TEST(BuildConstraints, InjectedButterflyViolationAttributed) {
    // Tenors far enough apart that the raised mid price stays below the long slice.
    LiquidLattice L({0.25, 1.0}, {-0.1, 0.0, 0.1});
    auto cs = build_constraints(L);
    Eigen::VectorXd c = testutil::bs_surface(L, 0.2);
    const double k0 = std::exp(-0.1), k1 = 1.0, k2 = std::exp(0.1);
    const double wl = 1 / (k1 - k0), wr = 1 / (k2 - k1);
    // Mid strike of the short slice lifted just above the chord of its neighbours.
    c(1) = (wl * c(0) + wr * c(2)) / (wl + wr) + 1e-6;

    // Brute-force oracle: the butterfly payoff is nonnegative for every terminal
    // spot, yet its price is negative, so it is an arbitrage.
    double min_payoff = 1e9;
    for (double ST = 0.5; ST < 1.5; ST += 1e-4) {
        auto call = [&](double k) { return std::max(ST - k, 0.0); };
        min_payoff = std::min(min_payoff, wl * call(k0) - (wl + wr) * call(k1) + wr * call(k2));
    }
    EXPECT_GE(min_payoff, -1e-12);
    EXPECT_LT(wl * c(0) - (wl + wr) * c(1) + wr * c(2), 0.0);

    auto v = check_prices(cs, c);
    ASSERT_EQ(v.size(), 1u);
    EXPECT_EQ(cs.labels[v[0].row], ConstraintKind::Butterfly);
    EXPECT_EQ(cs.A(static_cast<Eigen::Index>(v[0].row), 1), -(wl + wr));
}

TEST(BuildConstraints, InjectedCalendarViolationAttributed) {
    LiquidLattice L({0.25, 0.5}, {-0.1, 0.0, 0.1});
    auto cs = build_constraints(L);
    Eigen::VectorXd c = testutil::bs_surface(L, 0.2);
    c(4) = c(1) - 1e-4;  // longer expiry cheaper at m = 0
    auto v = check_prices(cs, c);
    ASSERT_FALSE(v.empty());
    bool found = false;
    for (auto& x : v)
        if (cs.labels[x.row] == ConstraintKind::Calendar) {
            EXPECT_EQ(cs.A(static_cast<Eigen::Index>(x.row), 4), 1.0);
            EXPECT_EQ(cs.A(static_cast<Eigen::Index>(x.row), 1), -1.0);
            EXPECT_NEAR(x.magnitude, 1e-4, 1e-12);
            found = true;
        }
    EXPECT_TRUE(found);
}

TEST(Project, ZeroFactorsGiveMeanSurface) {
    auto L = testutil::grid({0.25, 0.5}, -0.1, 0.1, 0.05);
    auto cs = build_constraints(*L);
    std::mt19937_64 rng(1);
    Eigen::VectorXd G0 = testutil::bs_surface(*L, 0.2);
    Eigen::MatrixXd G = random_basis(rng, 2, static_cast<Eigen::Index>(L->size()));
    auto f = project_constraints(cs, G0, G);
    EXPECT_EQ(inside(f, Eigen::VectorXd::Zero(2)), check_prices(cs, G0).empty());
}

TEST(Project, MatrixIdentityOnRandomSystems) {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> z;
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::Index R = 7, N = 11, d = 3;
        ConstraintSystem cs;
        cs.A = Eigen::MatrixXd::NullaryExpr(R, N, [&] { return z(rng); });
        cs.b_hat = Eigen::VectorXd::NullaryExpr(R, [&] { return z(rng); });
        cs.labels.assign(R, ConstraintKind::Butterfly);
        Eigen::VectorXd G0 = Eigen::VectorXd::NullaryExpr(N, [&] { return z(rng); });
        Eigen::MatrixXd G = Eigen::MatrixXd::NullaryExpr(d, N, [&] { return z(rng); });
        auto f = project_constraints(cs, G0, G);
        Eigen::VectorXd xi = Eigen::VectorXd::NullaryExpr(d, [&] { return z(rng); });
        Eigen::VectorXd lhs = cs.A * (G0 + G.transpose() * xi) - cs.b_hat;
        EXPECT_LT((lhs - (f.M * xi - f.b)).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(Project, SingleRowDefinition) {
    ConstraintSystem cs;
    cs.A = Eigen::MatrixXd(1, 3);
    cs.A << 1, -2, 1;
    cs.b_hat = Eigen::VectorXd::Constant(1, 0.5);
    cs.labels = {ConstraintKind::Butterfly};
    Eigen::MatrixXd G(2, 3);
    G << 1, 0, 0, 0, 1, 1;
    auto f = project_constraints(cs, Eigen::VectorXd::Zero(3), G);
    ASSERT_EQ(f.M.rows(), 1);
    EXPECT_DOUBLE_EQ(f.M(0, 0), 1.0);
    EXPECT_DOUBLE_EQ(f.M(0, 1), -1.0);
    EXPECT_THROW(project_constraints(cs, Eigen::VectorXd::Zero(4), G), ContractError);
}

TEST(Project, SignEquivalenceOnRandomPoints) {
    auto L = testutil::grid({0.25, 0.5, 1.0}, -0.2, 0.2, 0.05);
    auto cs = build_constraints(*L);
    std::mt19937_64 rng(3);
    Eigen::VectorXd G0 = testutil::bs_surface(*L, 0.2);
    Eigen::MatrixXd G = random_basis(rng, 2, static_cast<Eigen::Index>(L->size()));
    auto f = project_constraints(cs, G0, G);
    int agree = 0, feasible = 0;
    for (int i = 0; i < 1000; ++i) {
        Eigen::VectorXd xi = testutil::uniform(rng, 2, -0.01, 0.01);
        const double price_side = (cs.A * (G0 + G.transpose() * xi) - cs.b_hat).minCoeff();
        const double factor_side = (f.M * xi - f.b).minCoeff();
        agree += (price_side >= 0) == (factor_side >= 0);
        feasible += factor_side >= 0;
    }
    EXPECT_EQ(agree, 1000);
    EXPECT_GT(feasible, 0);
    EXPECT_LT(feasible, 1000);
}

TEST(Eliminate, DuplicateRowRemoved) {
    Eigen::MatrixXd M(3, 1);
    M << 1, 1, -1;
    Eigen::VectorXd b(3);
    b << 0, 0, -1;
    auto e = eliminate_redundant(plain(M, b));
    EXPECT_EQ(e.rows(), 2u);
}

TEST(Eliminate, BoxWithSlackDiagonal) {
    Eigen::MatrixXd M(5, 2);
    M << 1, 0, -1, 0, 0, 1, 0, -1, -1, -1;
    Eigen::VectorXd b(5);
    b << 0, -1, 0, -1, -3;  // x + y <= 3 never binds on the unit box
    auto e = eliminate_redundant(plain(M, b));
    EXPECT_EQ(e.rows(), 4u);
    EXPECT_EQ(std::count(e.provenance.begin(), e.provenance.end(), 4u), 0);
}

TEST(Eliminate, PreservesFeasibleSetOnRandomPoints) {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> z;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int R = 40;
    Eigen::MatrixXd M(R, 2);
    Eigen::VectorXd b(R);
    for (int r = 0; r < R; ++r) {
        const double a = 2 * M_PI * u(rng);
        M(r, 0) = std::cos(a);
        M(r, 1) = std::sin(a);
        b(r) = -1.0 - 0.5 * u(rng);  // tangent-ish to circles of radius 1..1.5
    }
    auto full = plain(M, b);
    auto red = eliminate_redundant(full);
    EXPECT_LT(red.rows(), full.rows());
    for (int i = 0; i < 1000; ++i) {
        Eigen::VectorXd x = testutil::uniform(rng, 2, -2.0, 2.0);
        EXPECT_EQ(inside(full, x), inside(red, x));
    }
}

TEST(Eliminate, UnboundedRegionSupported) {
    Eigen::MatrixXd M(3, 2);
    M << 1, 0, 1, 0, 0, 1;
    Eigen::VectorXd b(3);
    b << 0, -1, 0;  // x >= 0 implies x >= -1
    auto e = eliminate_redundant(plain(M, b));
    EXPECT_EQ(e.rows(), 2u);
}

TEST(Eliminate, InfeasibleCarriesCertificate) {
    Eigen::MatrixXd M(3, 2);
    M << 1, 0, -1, 0, 0, 1;
    Eigen::VectorXd b(3);
    b << 1, 0, 0;
    auto f = plain(M, b);
    f.provenance = {10, 11, 12};
    try {
        eliminate_redundant(f);
        FAIL() << "expected InfeasibleError";
    } catch (const InfeasibleError& e) {
        EXPECT_EQ(e.certificate(), (std::vector<std::size_t>{10, 11}));
    }
}

TEST(Check, InteriorBoundaryAndViolation) {
    Eigen::MatrixXd M(2, 2);
    M << 1, 0, 0, 1;
    Eigen::VectorXd b = Eigen::VectorXd::Zero(2);
    auto f = plain(M, b);
    EXPECT_TRUE(check_arbitrage_free(f, Eigen::Vector2d(0.5, 0.5)).empty());
    EXPECT_TRUE(check_arbitrage_free(f, Eigen::Vector2d(0.0, 0.5)).empty());
    auto v = check_arbitrage_free(f, Eigen::Vector2d(0.5, -0.1));
    ASSERT_EQ(v.size(), 1u);
    EXPECT_EQ(v[0].row, 1u);
    EXPECT_NEAR(v[0].magnitude, 0.1, 1e-15);
    EXPECT_THROW(check_arbitrage_free(f, Eigen::VectorXd::Zero(3)), ContractError);
}

TEST(Relax, CoversPointsWithMinimalSlack) {
    Eigen::MatrixXd M(2, 2);
    M << 1, 0, 0, 1;
    auto f = plain(M, Eigen::VectorXd::Zero(2));
    Eigen::MatrixXd pts(3, 2);
    pts << 0.2, -0.05, -0.01, 0.3, 0.5, 0.5;
    auto r = relax_to_cover(f, pts);
    EXPECT_NEAR(r.slack[0], 0.01, 1e-15);
    EXPECT_NEAR(r.slack[1], 0.05, 1e-15);
    for (Eigen::Index i = 0; i < pts.rows(); ++i) EXPECT_TRUE(inside(r, pts.row(i).transpose()));
    EXPECT_FALSE(inside(r, Eigen::Vector2d(-0.02, 0.0)));
}

TEST(Json, RoundTrip) {
    LiquidLattice L({0.25, 0.5}, {-0.1, 0.0, 0.1});
    auto cs = build_constraints(L);
    auto back = constraint_system_from_json(to_json(cs));
    EXPECT_EQ(back.A, cs.A);
    EXPECT_EQ(back.b_hat, cs.b_hat);
    EXPECT_EQ(back.labels, cs.labels);
    EXPECT_EQ(back.lattice_hash, L.hash());

    std::mt19937_64 rng(5);
    auto f = project_constraints(cs, testutil::bs_surface(L, 0.2), random_basis(rng, 2, 6));
    auto fb = factor_constraints_from_json(to_json(f));
    EXPECT_EQ(fb.M, f.M);
    EXPECT_EQ(fb.b, f.b);
    EXPECT_EQ(fb.provenance, f.provenance);
    EXPECT_EQ(fb.hash(), f.hash());
}
