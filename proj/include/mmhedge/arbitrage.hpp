#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "mmhedge/surface.hpp"

namespace mmhedge {

enum class ConstraintKind { OutrightLower, OutrightUpper, Vertical, Butterfly, Calendar };

std::string_view to_string(ConstraintKind kind);
ConstraintKind constraint_kind_from_string(std::string_view text);

// Static-arbitrage system A c >= b_hat over normalized lattice prices.
struct ConstraintSystem {
    Eigen::MatrixXd A;  // R x N
    Eigen::VectorXd b_hat;
    std::vector<ConstraintKind> labels;
    std::vector<ConstraintKind> omitted;  // families skipped because the lattice is too sparse
    std::string lattice_hash;

    std::size_t rows() const { return labels.size(); }
};

// Same system expressed on factors: M xi >= b.
struct FactorConstraintSystem {
    Eigen::MatrixXd M;  // R' x d
    Eigen::VectorXd b;
    std::vector<std::size_t> provenance;  // row index into the source ConstraintSystem
    std::vector<ConstraintKind> labels;
    std::vector<double> slack;  // per-row loosening applied by relax_to_cover; empty when exact
    std::string lattice_hash;

    std::size_t rows() const { return provenance.size(); }
    std::size_t dim() const { return static_cast<std::size_t>(M.cols()); }
    // Hex digest over M and b; pins models to the polytope they were trained on.
    std::string hash() const;
};

struct Violation {
    std::size_t row;
    double magnitude;  // b - M xi  (> tol)
};

inline constexpr double kFeasibilityTol = 1e-10;

ConstraintSystem build_constraints(const LiquidLattice& lattice);

FactorConstraintSystem project_constraints(const ConstraintSystem& cs, const Eigen::VectorXd& G0,
                                           const Eigen::MatrixXd& G);

// Removes rows whose removal leaves the feasible region unchanged, each one
// certified by an LP. Throws InfeasibleError for an empty region.
FactorConstraintSystem eliminate_redundant(const FactorConstraintSystem& fcs);

// Loosens each row by the largest violation among the points (rows of xi),
// so every decoded training factor lies in the region. A low-rank surface
// model cannot match the intrinsic-value boundary exactly; the slack is of the
// order of the reconstruction error and is kept per row.
FactorConstraintSystem relax_to_cover(const FactorConstraintSystem& fcs, const Eigen::MatrixXd& xi);

std::vector<Violation> check_arbitrage_free(const FactorConstraintSystem& fcs, const Eigen::VectorXd& xi,
                                            double tol = kFeasibilityTol);

// Price-space check of A c >= b_hat.
std::vector<Violation> check_prices(const ConstraintSystem& cs, const Eigen::VectorXd& prices,
                                    double tol = kFeasibilityTol);

nlohmann::json to_json(const ConstraintSystem& cs);
nlohmann::json to_json(const FactorConstraintSystem& fcs);
ConstraintSystem constraint_system_from_json(const nlohmann::json& j);
FactorConstraintSystem factor_constraints_from_json(const nlohmann::json& j);

}  // namespace mmhedge
