#include "mmhedge/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mmhedge/errors.hpp"

namespace mmhedge::lp {

namespace {

constexpr double kPivotTol = 1e-11;

// Row-major dense tableau: rows 0..p-1 are constraints, last column is rhs.
struct Tableau {
    Eigen::MatrixXd t;
    std::vector<Eigen::Index> basis;

    void pivot(Eigen::Index row, Eigen::Index col) {
        t.row(row) /= t(row, col);
        for (Eigen::Index r = 0; r < t.rows(); ++r) {
            if (r == row) continue;
            double f = t(r, col);
            if (f != 0.0) t.row(r) -= f * t.row(row);
        }
        basis[static_cast<std::size_t>(row)] = col;
    }
};

enum class Outcome { Optimal, Unbounded };

// Maximize sum_j cost_j * y_j over columns [0, ncols) with the current basis
// feasible. `allowed(j)` filters entering candidates.
template <class Allowed>
Outcome run_simplex(Tableau& tab, const Eigen::VectorXd& cost, Eigen::Index ncols, Allowed allowed) {
    const Eigen::Index p = tab.t.rows();
    const Eigen::Index rhs = tab.t.cols() - 1;
    const std::size_t max_iter = 50000;
    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        // reduced cost r_j = c_j - c_B^T column_j
        Eigen::Index enter = -1;
        for (Eigen::Index j = 0; j < ncols; ++j) {
            if (!allowed(j)) continue;
            double r = cost(j);
            for (Eigen::Index i = 0; i < p; ++i) r -= cost(tab.basis[static_cast<std::size_t>(i)]) * tab.t(i, j);
            if (r > 1e-12 * (1.0 + std::abs(cost(j)))) {
                enter = j;
                break;
            }
        }
        if (enter < 0) return Outcome::Optimal;
        Eigen::Index leave = -1;
        double best = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < p; ++i) {
            double a = tab.t(i, enter);
            if (a > kPivotTol) {
                double ratio = tab.t(i, rhs) / a;
                if (ratio < best - 1e-14 ||
                    (std::abs(ratio - best) <= 1e-14 && leave >= 0 &&
                     tab.basis[static_cast<std::size_t>(i)] < tab.basis[static_cast<std::size_t>(leave)])) {
                    best = ratio;
                    leave = i;
                }
            }
        }
        if (leave < 0) return Outcome::Unbounded;
        tab.pivot(leave, enter);
    }
    throw NumericalError("simplex: iteration limit reached");
}

}  // namespace

StandardResult maximize_standard(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Eigen::VectorXd& c) {
    const Eigen::Index p = A.rows(), q = A.cols();
    if (b.size() != p || c.size() != q) throw ContractError("simplex: dimension mismatch");
    StandardResult out;

    Tableau tab;
    tab.t = Eigen::MatrixXd::Zero(p, q + p + 1);
    tab.basis.resize(static_cast<std::size_t>(p));
    std::vector<double> sign(static_cast<std::size_t>(p), 1.0);
    for (Eigen::Index i = 0; i < p; ++i) {
        sign[static_cast<std::size_t>(i)] = b(i) < 0.0 ? -1.0 : 1.0;
        tab.t.row(i).head(q) = sign[static_cast<std::size_t>(i)] * A.row(i);
        tab.t(i, q + i) = 1.0;
        tab.t(i, q + p) = sign[static_cast<std::size_t>(i)] * b(i);
        tab.basis[static_cast<std::size_t>(i)] = q + i;
    }

    // Phase 1: maximize -sum(artificials).
    Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(q + p);
    phase1.tail(p).setConstant(-1.0);
    run_simplex(tab, phase1, q + p, [](Eigen::Index) { return true; });
    double infeas = 0.0;
    for (Eigen::Index i = 0; i < p; ++i)
        if (tab.basis[static_cast<std::size_t>(i)] >= q) infeas += tab.t(i, q + p);
    double scale = 1.0 + b.cwiseAbs().maxCoeff();
    if (infeas > 1e-9 * scale) {
        out.status = Status::Infeasible;
        return out;
    }

    // Drive zero-level artificials out of the basis; rows where that fails are redundant.
    std::vector<bool> dropped(static_cast<std::size_t>(p), false);
    for (Eigen::Index i = 0; i < p; ++i) {
        if (tab.basis[static_cast<std::size_t>(i)] < q) continue;
        Eigen::Index col = -1;
        for (Eigen::Index j = 0; j < q; ++j)
            if (std::abs(tab.t(i, j)) > 1e-9) {
                col = j;
                break;
            }
        if (col >= 0)
            tab.pivot(i, col);
        else
            dropped[static_cast<std::size_t>(i)] = true;
    }
    if (std::find(dropped.begin(), dropped.end(), true) != dropped.end()) {
        Tableau reduced;
        Eigen::Index kept = 0;
        for (bool d : dropped) kept += d ? 0 : 1;
        reduced.t.resize(kept, tab.t.cols());
        for (Eigen::Index i = 0, r = 0; i < p; ++i) {
            if (dropped[static_cast<std::size_t>(i)]) continue;
            reduced.t.row(r++) = tab.t.row(i);
            reduced.basis.push_back(tab.basis[static_cast<std::size_t>(i)]);
        }
        tab = std::move(reduced);
    }

    Eigen::VectorXd phase2 = Eigen::VectorXd::Zero(q + p);
    phase2.head(q) = c;
    auto outcome = run_simplex(tab, phase2, q + p, [q](Eigen::Index j) { return j < q; });
    if (outcome == Outcome::Unbounded) {
        out.status = Status::Unbounded;
        return out;
    }

    out.status = Status::Optimal;
    out.y = Eigen::VectorXd::Zero(q);
    const Eigen::Index rhs = tab.t.cols() - 1;
    for (Eigen::Index i = 0; i < tab.t.rows(); ++i) {
        Eigen::Index col = tab.basis[static_cast<std::size_t>(i)];
        if (col < q) out.y(col) = std::max(0.0, tab.t(i, rhs));
    }
    out.value = c.dot(out.y);

    // Multipliers from the original rows that survived: B^T pi = c_B.
    std::vector<Eigen::Index> rows;
    for (Eigen::Index i = 0; i < p; ++i)
        if (!dropped[static_cast<std::size_t>(i)]) rows.push_back(i);
    const auto k = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXd B(k, k);
    Eigen::VectorXd cb(k);
    for (Eigen::Index j = 0; j < k; ++j) {
        Eigen::Index col = tab.basis[static_cast<std::size_t>(j)];
        for (Eigen::Index r = 0; r < k; ++r) B(r, j) = col < q ? A(rows[static_cast<std::size_t>(r)], col) : 0.0;
        cb(j) = col < q ? c(col) : 0.0;
    }
    Eigen::VectorXd pi_rows = B.transpose().fullPivLu().solve(cb);
    out.multipliers = Eigen::VectorXd::Zero(p);
    for (Eigen::Index r = 0; r < k; ++r) out.multipliers(rows[static_cast<std::size_t>(r)]) = pi_rows(r);
    return out;
}

Feasibility find_feasible(const Eigen::MatrixXd& G, const Eigen::VectorXd& h, double tol) {
    const Eigen::Index R = G.rows(), n = G.cols();
    if (h.size() != R) throw ContractError("find_feasible: dimension mismatch");
    Feasibility out;
    if (R == 0) {
        out.feasible = true;
        out.point = Eigen::VectorXd::Zero(n);
        out.depth = 1.0;
        return out;
    }
    // Dual: max h^T y - z  s.t.  G^T y = 0,  1^T y + z = 1,  y, z >= 0.
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n + 1, R + 1);
    A.topLeftCorner(n, R) = G.transpose();
    A.row(n).setOnes();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n + 1);
    b(n) = 1.0;
    Eigen::VectorXd c(R + 1);
    c.head(R) = h;
    c(R) = -1.0;
    auto res = maximize_standard(A, b, c);
    if (res.status != Status::Optimal) throw NumericalError("find_feasible: auxiliary problem did not solve");
    double t = res.value;  // optimal t of the primal
    if (t > tol * (1.0 + h.cwiseAbs().maxCoeff())) {
        out.feasible = false;
        for (Eigen::Index i = 0; i < R; ++i)
            if (res.y(i) > 1e-12) out.certificate.push_back(static_cast<std::size_t>(i));
        return out;
    }
    out.feasible = true;
    out.point = res.multipliers.head(n);
    out.depth = (G * out.point - h).minCoeff();
    return out;
}

InequalityResult minimize(const Eigen::VectorXd& c, const Eigen::MatrixXd& G, const Eigen::VectorXd& h) {
    if (c.size() != G.cols() || h.size() != G.rows()) throw ContractError("lp::minimize: dimension mismatch");
    InequalityResult out;
    auto feas = find_feasible(G, h);
    if (!feas.feasible) {
        out.status = Status::Infeasible;
        return out;
    }
    // Dual: max h^T y  s.t.  G^T y = c, y >= 0. Dual infeasible <=> primal unbounded here.
    auto res = maximize_standard(G.transpose(), c, h);
    if (res.status == Status::Infeasible) {
        out.status = Status::Unbounded;
        return out;
    }
    if (res.status == Status::Unbounded) throw NumericalError("lp::minimize: inconsistent feasibility verdict");
    out.status = Status::Optimal;
    out.value = res.value;
    out.x = res.multipliers;
    return out;
}

}  // namespace mmhedge::lp
