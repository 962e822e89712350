#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "mmhedge/arbitrage.hpp"
#include "mmhedge/mlp.hpp"

namespace mmhedge {

inline constexpr double kTradingDt = 1.0 / 252.0;

// Drift and lower-triangular diffusion of the state (ln S, xi_1..xi_d); both
// depend on xi only.
class DiffusionModel {
public:
    virtual ~DiffusionModel() = default;
    virtual std::size_t d() const = 0;
    std::size_t dim() const { return d() + 1; }
    virtual void drift_diffusion(const Eigen::VectorXd& xi, Eigen::VectorXd& mu, Eigen::MatrixXd& sigma) const = 0;
    // Polytope the factors must stay in; null when unconstrained.
    virtual const FactorConstraintSystem* constraints() const { return nullptr; }
};

class ConstantSde : public DiffusionModel {
public:
    ConstantSde(Eigen::VectorXd mu, Eigen::MatrixXd sigma, std::optional<FactorConstraintSystem> constraints = {});
    std::size_t d() const override { return static_cast<std::size_t>(mu_.size()) - 1; }
    void drift_diffusion(const Eigen::VectorXd& xi, Eigen::VectorXd& mu, Eigen::MatrixXd& sigma) const override;
    const FactorConstraintSystem* constraints() const override { return fcs_ ? &*fcs_ : nullptr; }

private:
    Eigen::VectorXd mu_;
    Eigen::MatrixXd sigma_;
    std::optional<FactorConstraintSystem> fcs_;
};

class NeuralSde : public DiffusionModel {
public:
    // Untrained: hidden layers from `seed`, zero output layers, so mu = 0 and
    // sigma = diag(scale) with unit softplus diagonal.
    NeuralSde(std::size_t d, std::vector<std::size_t> hidden = {32, 32}, std::uint64_t seed = 0);

    std::size_t d() const override { return d_; }
    void drift_diffusion(const Eigen::VectorXd& xi, Eigen::VectorXd& mu, Eigen::MatrixXd& sigma) const override;
    const FactorConstraintSystem* constraints() const override { return fcs_ ? &*fcs_ : nullptr; }

    void set_constraints(std::optional<FactorConstraintSystem> fcs) { fcs_ = std::move(fcs); }
    // Input standardization and per-coordinate output scales.
    void set_normalization(Eigen::VectorXd in_mean, Eigen::VectorXd in_std, Eigen::VectorXd scale);

    // All trainable parameters: drift net then diffusion net.
    Eigen::VectorXd params() const;
    void set_params(const Eigen::VectorXd& theta);
    std::size_t num_params() const { return drift_.num_params() + diff_.num_params(); }

    Mlp& drift_net() { return drift_; }
    Mlp& diffusion_net() { return diff_; }
    const Eigen::VectorXd& scale() const { return scale_; }
    const Eigen::VectorXd& input_mean() const { return in_mean_; }
    const Eigen::VectorXd& input_std() const { return in_std_; }
    std::uint64_t seed() const { return seed_; }

    // Mean quasi-negative-log-likelihood plus hinge penalty over the
    // transitions states[t] -> states[t+1], t in [begin, end); gradient optional.
    double loss(const Eigen::MatrixXd& states, std::size_t begin, std::size_t end, double dt, double penalty,
                Eigen::VectorXd* grad = nullptr) const;

    nlohmann::json to_json() const;
    static NeuralSde from_json(const nlohmann::json& j);

private:
    Eigen::MatrixXd standardize(const Eigen::MatrixXd& xi_cols) const;

    std::size_t d_;
    std::vector<std::size_t> hidden_;
    std::uint64_t seed_;
    Mlp drift_, diff_;
    Eigen::VectorXd in_mean_, in_std_, scale_;
    std::optional<FactorConstraintSystem> fcs_;
};

struct SdeTrainingConfig {
    std::vector<std::size_t> hidden{32, 32};
    double learning_rate = 0.01;
    double momentum = 0.9;
    double clip_norm = 1.0;  // gradient rescaled to at most this norm; <= 0 disables
    int max_epochs = 3000;
    int patience = 300;
    double validation_fraction = 0.2;
    double penalty = 100.0;
    std::size_t min_length = 64;
    double dt = kTradingDt;
    std::uint64_t seed = 0;
};

struct TrainingHistory {
    std::vector<double> train, validation;
    int best_epoch = 0;
};

struct SdeFit {
    NeuralSde model;
    TrainingHistory history;
};

// states: T x (d+1) rows (ln S_t, xi_t). Full-batch momentum gradient descent
// with early stopping on the chronologically last validation_fraction.
SdeFit fit_sde(const Eigen::MatrixXd& states, std::optional<FactorConstraintSystem> constraints,
               const SdeTrainingConfig& config = {});

// (T-1) x (d+1) standardized one-step innovations.
Eigen::MatrixXd residuals(const DiffusionModel& model, const Eigen::MatrixXd& states, double dt = kTradingDt);

enum class InnovationMode { Gaussian, Bootstrap };

struct SimulationOptions {
    InnovationMode mode = InnovationMode::Gaussian;
    const Eigen::MatrixXd* residuals = nullptr;  // rows resampled in bootstrap mode
    double dt = kTradingDt;
    int max_reflections = 10;
};

// Tamed Euler path of (steps + 1) x (d+1) rows starting at x0. Factor points
// remain inside the model's polytope: violating proposals are reflected across
// the violated faces, with halving back toward the previous point as a fallback.
Eigen::MatrixXd simulate(const DiffusionModel& model, const Eigen::VectorXd& x0, std::size_t steps,
                         std::uint64_t seed, const SimulationOptions& options = {});

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace mmhedge
