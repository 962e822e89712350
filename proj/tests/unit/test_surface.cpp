#include <gtest/gtest.h>

#include "mmhedge/date.hpp"
#include "mmhedge/errors.hpp"
#include "mmhedge/surface.hpp"
#include "test_util.hpp"

using namespace mmhedge;

TEST(Normalize, DirectRatio) {
    EXPECT_DOUBLE_EQ(normalize(5.0, 100.0), 0.05);
    EXPECT_DOUBLE_EQ(normalize(0.0, 100.0), 0.0);
    EXPECT_DOUBLE_EQ(normalize(100.0, 100.0), 1.0);
}

TEST(Normalize, RejectsNonPositiveSpot) {
    EXPECT_THROW(normalize(1.0, 0.0), DomainError);
    EXPECT_THROW(normalize(1.0, -3.0), DomainError);
    EXPECT_THROW(normalize(-1.0, 100.0), DomainError);
}

TEST(Lattice, IndexMapIsTauMajor) {
    LiquidLattice L({0.1, 0.5}, {-0.1, 0.0, 0.1});
    EXPECT_EQ(L.size(), 6u);
    EXPECT_EQ(L.index(1, 2), 5u);
    EXPECT_EQ(L.tau_index(4), 1u);
    EXPECT_EQ(L.m_index(4), 1u);
    EXPECT_DOUBLE_EQ(L.point(3).tau, 0.5);
    EXPECT_DOUBLE_EQ(L.point(3).m, -0.1);
    ASSERT_TRUE(L.find(0.5, 0.1).has_value());
    EXPECT_EQ(*L.find(0.5, 0.1), 5u);
    EXPECT_FALSE(L.find(0.3, 0.1).has_value());
}

TEST(Lattice, RejectsBadGrids) {
    EXPECT_THROW(LiquidLattice({0.0, 0.5}, {0.0}), ContractError);
    EXPECT_THROW(LiquidLattice({0.5, 0.1}, {0.0}), ContractError);
    EXPECT_THROW(LiquidLattice({0.5}, {0.1, 0.1}), ContractError);
    EXPECT_THROW(LiquidLattice({}, {0.1}), ContractError);
}

TEST(Lattice, HashDependsOnGrid) {
    LiquidLattice a({0.1, 0.5}, {-0.1, 0.0, 0.1}), b({0.1, 0.5}, {-0.1, 0.0, 0.2});
    EXPECT_EQ(a.hash(), LiquidLattice({0.1, 0.5}, {-0.1, 0.0, 0.1}).hash());
    EXPECT_NE(a.hash(), b.hash());
}

TEST(Snapshot, ValidatesOutrightBounds) {
    auto L = std::make_shared<const LiquidLattice>(std::vector<double>{0.5}, std::vector<double>{-0.1, 0.0, 0.1});
    Eigen::VectorXd ok(3), low(3), high(3);
    ok << 0.12, 0.05, 0.01;
    low << 0.05, 0.05, 0.01;  // below 1 - e^-0.1
    high << 0.12, 1.2, 0.01;
    EXPECT_NO_THROW(SurfaceSnapshot(Date(2020, 1, 2), 100.0, ok, L));
    EXPECT_THROW(SurfaceSnapshot(Date(2020, 1, 2), 100.0, low, L), DataError);
    EXPECT_THROW(SurfaceSnapshot(Date(2020, 1, 2), 100.0, high, L), DataError);
    EXPECT_THROW(SurfaceSnapshot(Date(2020, 1, 2), 0.0, ok, L), DomainError);
}

TEST(Interp, ReproducesKnots) {
    auto L = testutil::grid({0.1, 0.25, 0.5, 1.0}, -0.3, 0.3, 0.05);
    auto s = testutil::bs_snapshot(L, 0.25);
    for (std::size_t i = 0; i < L->size(); ++i) {
        const auto p = L->point(i);
        EXPECT_NEAR(interp_surface(s, p.tau, p.m).value, s.prices()(i), 1e-12);
    }
}

TEST(Interp, ConstantSurfaceIsFlat) {
    auto L = testutil::grid({0.5, 1.0}, 0.0, 0.3, 0.1);
    SurfaceSnapshot s(Date(2020, 1, 2), 1.0, Eigen::VectorXd::Constant(static_cast<Eigen::Index>(L->size()), 0.1), L);
    for (double tau : {0.5, 0.7, 1.0})
        for (double m : {0.0, 0.05, 0.17, 0.3}) {
            const auto v = interp_surface(s, tau, m);
            EXPECT_NEAR(v.value, 0.1, 1e-15);
            EXPECT_NEAR(v.d_dm, 0.0, 1e-14);
            EXPECT_NEAR(v.d2_dm2, 0.0, 1e-12);
        }
}

TEST(Interp, DerivativesMatchAnalyticSurface) {
    // c~(tau, m) from Black-Scholes; dc~/dm = -e^m Phi(d2).
    const double sigma = 0.2;
    auto L = testutil::grid({0.25, 1.0}, -0.4, 0.4, 0.025);
    auto s = testutil::bs_snapshot(L, sigma);
    for (double tau : {0.25, 1.0})
        for (double m = -0.2; m <= 0.2 + 1e-12; m += 0.0125) {
            const double d1 = bs_d1({sigma, tau, m});
            const double exact = -std::exp(m) * norm_cdf(d1 - sigma * std::sqrt(tau));
            EXPECT_NEAR(interp_surface(s, tau, m).d_dm, exact, 1e-3) << tau << " " << m;
        }
}

TEST(Interp, DerivativeMatchesFiniteDifference) {
    auto L = testutil::grid({0.25, 0.5, 1.0}, -0.3, 0.3, 0.05);
    auto s = testutil::bs_snapshot(L, 0.2);
    const double h = 1e-6;
    for (double tau : {0.25, 0.4, 1.0})
        for (double m = -0.27; m < 0.27; m += 0.045) {
            const auto v = interp_surface(s, tau, m);
            const double fd = (interp_surface(s, tau, m + h).value - interp_surface(s, tau, m - h).value) / (2 * h);
            EXPECT_NEAR(v.d_dm, fd, 1e-4 * std::abs(fd)) << tau << " " << m;
            const double fd2 = (interp_surface(s, tau, m + h).d_dm - interp_surface(s, tau, m - h).d_dm) / (2 * h);
            EXPECT_NEAR(v.d2_dm2, fd2, 1e-4 * std::max(1.0, std::abs(fd2)));
        }
}

TEST(Interp, MonotoneDataGivesSignedSlope) {
    // Surfaces whose total vol sigma*sqrt(tau) spans at least one m-step; below
    // that the knots do not resolve the curvature and a natural spline rings.
    auto L = testutil::grid({0.1, 0.5, 2.0}, -0.3, 0.3, 0.05);
    for (double sigma : {0.2, 0.4}) {
        auto s = testutil::bs_snapshot(L, sigma);
        for (double tau : {0.1, 0.3, 2.0})
            for (double m = -0.29; m < 0.29; m += 0.01) EXPECT_LT(interp_surface(s, tau, m).d_dm, 0.0);
    }
}

TEST(Interp, ContinuousAcrossTau) {
    auto L = testutil::grid({0.25, 0.5, 1.0}, -0.2, 0.2, 0.05);
    auto s = testutil::bs_snapshot(L, 0.2);
    const double eps = 1e-9;
    for (double m : {-0.13, 0.0, 0.07})
        EXPECT_NEAR(interp_surface(s, 0.5 - eps, m).value, interp_surface(s, 0.5 + eps, m).value, 1e-8);
}

TEST(Interp, NoExtrapolation) {
    auto L = testutil::grid({0.25, 1.0}, -0.2, 0.2, 0.05);
    auto s = testutil::bs_snapshot(L, 0.2);
    EXPECT_THROW(interp_surface(s, 0.1, 0.0), OutOfRangeError);
    EXPECT_THROW(interp_surface(s, 0.5, 0.25), OutOfRangeError);
    EXPECT_THROW(interp_surface(s, 1.5, -0.3), OutOfRangeError);
}

TEST(Dates, ParseFormatAndBusinessDays) {
    const Date d = Date::parse("2019-01-04");
    EXPECT_EQ(d.str(), "2019-01-04");
    EXPECT_EQ(d.next_business_day().str(), "2019-01-07");
    EXPECT_TRUE(Date(2019, 1, 5).is_weekend());
    EXPECT_THROW(Date::parse("2019-13-01"), DataError);
    EXPECT_THROW(Date::parse("not a date"), DataError);
}
