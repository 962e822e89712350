#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "mmhedge/dynamics.hpp"
#include "mmhedge/factors.hpp"
#include "mmhedge/heston.hpp"
#include "mmhedge/models.hpp"
#include "mmhedge/surface.hpp"

namespace mmhedge {

enum class OptionKind { VanillaCall, VanillaPut, BinaryCall, BinaryPut, DownAndOutCall };

std::string_view to_string(OptionKind kind);
OptionKind option_kind_from_string(std::string_view text);

struct OptionSpec {
    OptionKind kind = OptionKind::VanillaCall;
    double tau = 0.0;
    double m = 0.0;
    std::optional<double> barrier_m;  // down-and-out only, below m

    static OptionSpec call(double tau, double m) { return {OptionKind::VanillaCall, tau, m, std::nullopt}; }
    static OptionSpec put(double tau, double m) { return {OptionKind::VanillaPut, tau, m, std::nullopt}; }
    void validate() const;
    std::string str() const;
};

struct Position {
    OptionSpec spec;
    double weight = 1.0;
};
using Target = std::vector<Position>;

// value is V / S; dS = dV/dS; dXi_j = dV/dxi_j in currency.
struct Exposures {
    double value = 0.0;
    double dS = 0.0;
    Eigen::VectorXd dXi;
};

Exposures exposures(const OptionSpec& spec, const SurfaceSnapshot& snapshot, const FactorModel& model, double spot);
Exposures exposures(const Target& target, const SurfaceSnapshot& snapshot, const FactorModel& model, double spot);

enum class HedgeMethod {
    None,
    DeltaBs,
    DeltaHestonMv,
    DeltaMm,     // market-model sensitivity delta
    DeltaNsdeMv,
    DvBs,
    DvHeston,
    DxiSens,
    DxiMv,
    MvDirect,
};

std::string_view to_string(HedgeMethod method);
HedgeMethod hedge_method_from_string(std::string_view text);
// Methods that need a hedging option besides the underlying.
bool uses_option(HedgeMethod method);

struct HedgePlan {
    HedgeMethod method = HedgeMethod::None;
    double x_s = 0.0;
    Eigen::VectorXd x_c;
    std::vector<OptionSpec> instruments;
};

nlohmann::json to_json(const HedgePlan& plan);

// ---- linear systems on precomputed exposures ----------------------------

struct HedgeRatios {
    double x_s = 0.0;
    Eigen::VectorXd x_c;
};

inline constexpr double kConditionLimit = 1e10;

// Zero dPi/dS and dPi/dxi_j, j <= d_prime, with the underlying and d_prime options.
HedgeRatios solve_sensitivity(const Exposures& target, const std::vector<Exposures>& instruments, std::size_t d_prime);

// Zero <dPi, dS> and <dPi, dxi_j>, j <= d_prime, under diffusion sigma of (ln S, xi).
HedgeRatios solve_mv(const Exposures& target, const std::vector<Exposures>& instruments, std::size_t d_prime,
                     double spot, const Eigen::MatrixXd& sigma);

// Zero <dPi, dS> and <dPi, dC_i> for every hedging option.
HedgeRatios solve_direct_mv(const Exposures& target, const std::vector<Exposures>& instruments, double spot,
                            const Eigen::MatrixXd& sigma);

// Row vector l(U) with dU = l(U) dW.
Eigen::RowVectorXd loading(const Exposures& e, double spot, const Eigen::MatrixXd& sigma);

// Minimum-variance exposures: dS-part of the covariance with S, and the
// covariance with xi_j.
double mv_delta(const Exposures& e, double spot, const Eigen::MatrixXd& sigma);

// Two-factor closed form for the option ratio of the d' = 1 MV hedge; needs
// sigma_1 . sigma_2 away from zero.
double g_functional(const Exposures& e, double spot, const Eigen::MatrixXd& sigma);

// Throws SingularSystemError when the row-equilibrated system is too
// ill-conditioned; column 0 belongs to the underlying, column i to option i-1.
Eigen::VectorXd guarded_solve(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const std::string& what);

// ---- benchmark model Greeks ---------------------------------------------

struct ModelGreeks {
    double delta = 0.0;  // dV/dS
    double vega = 0.0;   // BS: dV/dsigma; Heston: dV/dv0
};

// Black-Scholes Greeks with each leg's own implied vol from the snapshot.
ModelGreeks bs_greeks(const OptionSpec& spec, const SurfaceSnapshot& snapshot);
ModelGreeks bs_greeks(const Target& target, const SurfaceSnapshot& snapshot);

// Heston Greeks, slices shared per expiry.
class HestonGreekEngine {
public:
    explicit HestonGreekEngine(HestonParams params);
    ModelGreeks greeks(const OptionSpec& spec, double step_scale = 1.0);
    ModelGreeks greeks(const Target& target);
    double mv_delta(const OptionSpec& spec);
    double mv_delta(const Target& target);
    const HestonParams& params() const { return params_; }

private:
    const HestonSlice& slice(double tau);
    HestonParams params_;
    std::map<double, std::unique_ptr<HestonSlice>> slices_;
};

// ---- spec-level operations ----------------------------------------------

double mm_delta(const OptionSpec& spec, const SurfaceSnapshot& snapshot, const FactorModel& model, double spot);
double mm_mv_delta(const OptionSpec& spec, const SurfaceSnapshot& snapshot, const FactorModel& model,
                   const DiffusionModel& sde, const Eigen::VectorXd& xi, double spot);

struct MarketState {
    const SurfaceSnapshot* snapshot = nullptr;
    const FactorModel* factors = nullptr;
    Eigen::VectorXd xi;  // decoded factors on this date
    const DiffusionModel* sde = nullptr;
    std::optional<HestonParams> heston;

    double spot() const { return snapshot->spot(); }
    Eigen::MatrixXd sigma() const;  // diffusion at xi; throws without an SDE
};

HedgePlan solve_sensitivity_hedge(const Target& target, const std::vector<OptionSpec>& instruments,
                                  std::size_t d_prime, const MarketState& state);
HedgePlan solve_mv_hedge(const Target& target, const std::vector<OptionSpec>& instruments, std::size_t d_prime,
                         const MarketState& state);
HedgePlan solve_direct_mv_hedge(const Target& target, const std::vector<OptionSpec>& instruments,
                                const MarketState& state);
HedgePlan bs_delta_vega_hedge(const Target& target, const OptionSpec& instrument, const SurfaceSnapshot& snapshot);
HedgePlan heston_delta_vega_hedge(const Target& target, const OptionSpec& instrument, const HestonParams& params);

// Dispatch on method; option-based methods use instruments.front().
HedgePlan make_plan(HedgeMethod method, const Target& target, const std::vector<OptionSpec>& instruments,
                    const MarketState& state);

}  // namespace mmhedge
