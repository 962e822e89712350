#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

// Dense two-phase simplex for the small linear programs behind constraint
// redundancy elimination. Factor spaces have d = 2 or 3 dimensions, so every
// inequality-form problem is solved through its dual, which has only d
// equality rows regardless of how many constraints there are.
namespace mmhedge::lp {

enum class Status { Optimal, Infeasible, Unbounded };

struct StandardResult {
    Status status = Status::Infeasible;
    Eigen::VectorXd y;            // primal solution of the standard-form problem
    double value = 0.0;           // c^T y at the optimum
    Eigen::VectorXd multipliers;  // simplex multipliers pi with B^T pi = c_B
};

// maximize c^T y  subject to  A y = b, y >= 0.  Bland's rule throughout.
StandardResult maximize_standard(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Eigen::VectorXd& c);

struct Feasibility {
    bool feasible = false;
    Eigen::VectorXd point;             // satisfies G x >= h + depth when feasible
    double depth = 0.0;                // min_i (G x - h)_i achieved at `point`, capped at 1
    std::vector<std::size_t> certificate;  // rows of a Farkas certificate when infeasible
};

// Decide whether {x : G x >= h} is empty. Solves  min t  s.t.  G x + t >= h,
// t >= -1  via its dual; a positive optimum yields y >= 0 with G^T y = 0 and
// h^T y > 0, whose support is returned as the certificate.
Feasibility find_feasible(const Eigen::MatrixXd& G, const Eigen::VectorXd& h, double tol = 1e-10);

struct InequalityResult {
    Status status = Status::Infeasible;
    Eigen::VectorXd x;
    double value = 0.0;
};

// minimize c^T x  subject to  G x >= h,  x free.
InequalityResult minimize(const Eigen::VectorXd& c, const Eigen::MatrixXd& G, const Eigen::VectorXd& h);

}  // namespace mmhedge::lp
