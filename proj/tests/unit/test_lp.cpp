#include <gtest/gtest.h>

#include "mmhedge/lp.hpp"

using namespace mmhedge;

TEST(Lp, StandardFormOptimum) {
    // max 3y0 + 2y1  s.t.  y0 + y1 + s0 = 4,  y0 + 3y1 + s1 = 6
    Eigen::MatrixXd A(2, 4);
    A << 1, 1, 1, 0, 1, 3, 0, 1;
    Eigen::VectorXd b(2), c(4);
    b << 4, 6;
    c << 3, 2, 0, 0;
    auto r = lp::maximize_standard(A, b, c);
    ASSERT_EQ(r.status, lp::Status::Optimal);
    EXPECT_NEAR(r.value, 12.0, 1e-12);
    EXPECT_NEAR(r.y(0), 4.0, 1e-12);
}

TEST(Lp, InequalityMinimizeBox) {
    Eigen::MatrixXd G(4, 2);
    G << 1, 0, -1, 0, 0, 1, 0, -1;
    Eigen::VectorXd h(4), c(2);
    h << 0, -1, 0, -1;
    c << -1, -1;  // maximize x + y on the unit box
    auto r = lp::minimize(c, G, h);
    ASSERT_EQ(r.status, lp::Status::Optimal);
    EXPECT_NEAR(r.value, -2.0, 1e-12);
    EXPECT_NEAR(r.x(0), 1.0, 1e-12);
    EXPECT_NEAR(r.x(1), 1.0, 1e-12);
}

TEST(Lp, DetectsUnboundedAndInfeasible) {
    Eigen::MatrixXd G(1, 2);
    G << 1, 0;
    Eigen::VectorXd h(1), c(2);
    h << 0;
    c << 0, 1;
    EXPECT_EQ(lp::minimize(c, G, h).status, lp::Status::Unbounded);

    Eigen::MatrixXd G2(2, 1);
    G2 << 1, -1;
    Eigen::VectorXd h2(2), c2(1);
    h2 << 1, 0;  // x >= 1 and x <= 0
    c2 << 1;
    EXPECT_EQ(lp::minimize(c2, G2, h2).status, lp::Status::Infeasible);
    auto f = lp::find_feasible(G2, h2);
    EXPECT_FALSE(f.feasible);
    EXPECT_EQ(f.certificate, (std::vector<std::size_t>{0, 1}));
}

TEST(Lp, FeasiblePointSatisfiesSystem) {
    Eigen::MatrixXd G(3, 2);
    G << 1, 0, 0, 1, -1, -1;
    Eigen::VectorXd h(3);
    h << 0, 0, -1;
    auto f = lp::find_feasible(G, h);
    ASSERT_TRUE(f.feasible);
    EXPECT_GE(((G * f.point - h).minCoeff()), -1e-12);
    EXPECT_GT(f.depth, 0.0);
}
