#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace mmhedge {

// Fully connected network with tanh hidden layers and a linear output layer.
// Parameters live in one flat vector: per layer, W row-major then b.
class Mlp {
public:
    Mlp() = default;
    explicit Mlp(std::vector<std::size_t> sizes);

    const std::vector<std::size_t>& sizes() const { return sizes_; }
    std::size_t num_params() const { return static_cast<std::size_t>(params_.size()); }
    std::size_t inputs() const { return sizes_.front(); }
    std::size_t outputs() const { return sizes_.back(); }

    Eigen::VectorXd& params() { return params_; }
    const Eigen::VectorXd& params() const { return params_; }

    // Glorot-uniform hidden weights from `seed`; output layer zeroed.
    void init(std::uint64_t seed);
    void set_output_bias(const Eigen::VectorXd& b);

    struct Cache {
        std::vector<Eigen::MatrixXd> act;  // act[0] = input, act[l] = output of layer l
    };
    // Columns of X are samples.
    Eigen::MatrixXd forward(const Eigen::MatrixXd& X, Cache* cache = nullptr) const;
    // Gradient of sum_samples <dOut, out> with respect to the parameters.
    Eigen::VectorXd backward(const Cache& cache, const Eigen::MatrixXd& dOut) const;

private:
    std::size_t offset_W(std::size_t layer) const { return offsets_[layer]; }
    std::size_t offset_b(std::size_t layer) const { return offsets_[layer] + sizes_[layer + 1] * sizes_[layer]; }

    std::vector<std::size_t> sizes_;
    std::vector<std::size_t> offsets_;
    Eigen::VectorXd params_;
};

}  // namespace mmhedge
