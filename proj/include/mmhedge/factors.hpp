#pragma once

#include <cstddef>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "mmhedge/date.hpp"
#include "mmhedge/surface.hpp"

namespace mmhedge {

// c~(tau, m) = G0(tau, m) + sum_j G_j(tau, m) xi_j with orthonormal rows G_j.
class FactorModel {
public:
    FactorModel(std::shared_ptr<const LiquidLattice> lattice, Eigen::VectorXd G0, Eigen::MatrixXd G);

    std::size_t d() const { return static_cast<std::size_t>(G_.rows()); }
    const Eigen::VectorXd& G0() const { return G0_; }
    const Eigen::MatrixXd& G() const { return G_; }
    const LiquidLattice& lattice() const { return *lattice_; }
    const std::shared_ptr<const LiquidLattice>& lattice_ptr() const { return lattice_; }

    Eigen::VectorXd reconstruct(const Eigen::VectorXd& xi) const;
    // Least-squares factor coordinates of a price vector (G has orthonormal rows).
    Eigen::VectorXd project(const Eigen::VectorXd& prices) const;

    // Interpolated basis surfaces; j = 0 is G0, j = 1..d the factor bases.
    SurfaceValue basis(std::size_t j, double tau, double m) const;

private:
    std::shared_ptr<const LiquidLattice> lattice_;
    Eigen::VectorXd G0_;
    Eigen::MatrixXd G_;
    std::vector<SurfaceInterpolator> interp_;
};

struct FactorPath {
    std::vector<Date> dates;
    Eigen::MatrixXd xi;  // T x d
};

struct DecodeResult {
    FactorModel model;
    FactorPath path;
    std::vector<double> residuals;  // max-abs reconstruction error per date
    double explained_variance = 0.0;  // share of centered variance captured by the d factors
};

DecodeResult decode_factors(const std::vector<SurfaceSnapshot>& history, std::size_t d);

Eigen::VectorXd reconstruct(const FactorModel& model, const Eigen::VectorXd& xi);

// dV/dxi_j = S * G_j(tau, m) for a vanilla call, j in 1..d.
double xi_exposure(const FactorModel& model, double spot, double tau, double m, std::size_t j);

nlohmann::json to_json(const FactorModel& model);
FactorModel factor_model_from_json(const nlohmann::json& j);

void write_factor_path_csv(std::ostream& os, const FactorPath& path);
FactorPath read_factor_path_csv(std::istream& is);

}  // namespace mmhedge
