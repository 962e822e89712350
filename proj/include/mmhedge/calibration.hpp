#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "mmhedge/date.hpp"
#include "mmhedge/models.hpp"
#include "mmhedge/surface.hpp"

namespace mmhedge {

struct NelderMeadResult {
    Eigen::VectorXd x;
    double value = 0.0;
    int evaluations = 0;
    bool converged = false;
};

struct NelderMeadTolerances {
    double f_rel = 1e-12;
    double f_abs = 1e-20;
    double x = 1e-8;  // simplex diameter
};

// Unconstrained Nelder-Mead with restarts from the incumbent.
NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f, Eigen::VectorXd x0,
                             double step, int max_evals, const NelderMeadTolerances& tol = {}, int restarts = 2);

struct CalibrationConfig {
    std::optional<HestonParams> warm_start;  // replaces the fixed multi-start points
    int max_evals = 4000;                    // per start
    double vega_floor = 1e-4;                // on normalized vega
    double mape_floor = 1e-6;                // quotes below this normalized price are left out of the MAPE
    std::size_t inner_nodes = 0;             // fixed quadrature order in the loop; 0 = reference order
    double f_rel_tol = 1e-12;
    double f_abs_tol = 1e-20;
    double x_tol = 1e-8;
};

struct CalibrationResult {
    HestonParams params;
    double mape = 0.0;  // fraction, not percent
    double objective = 0.0;
    int evaluations = 0;
    bool converged = false;  // false: best-so-far returned after max_evals
};

// Vega-weighted least squares sum (c_model - c_market)^2 / vega_bs over the
// lattice. Positivity and |rho| <= 1 hold through the parameter transforms.
CalibrationResult calibrate_heston(const SurfaceSnapshot& snapshot, const CalibrationConfig& config = {});

// Mean absolute percentage error as a fraction over quotes >= floor.
double price_mape(const Eigen::VectorXd& model, const Eigen::VectorXd& market, double floor = 1e-6);

struct DatedHeston {
    Date date;
    CalibrationResult result;
};
void write_heston_csv(std::ostream& os, const std::vector<DatedHeston>& series);
std::vector<DatedHeston> read_heston_csv(std::istream& is);

}  // namespace mmhedge
