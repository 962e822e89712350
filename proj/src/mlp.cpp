#include "mmhedge/mlp.hpp"

#include <cmath>
#include <random>

#include "mmhedge/errors.hpp"

namespace mmhedge {

namespace {
using RowMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using RowMapMut = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
}  // namespace

Mlp::Mlp(std::vector<std::size_t> sizes) : sizes_(std::move(sizes)) {
    if (sizes_.size() < 2) throw ConfigError("Mlp: need at least input and output sizes");
    std::size_t total = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
        if (sizes_[l] == 0 || sizes_[l + 1] == 0) throw ConfigError("Mlp: zero-width layer");
        offsets_.push_back(total);
        total += sizes_[l + 1] * sizes_[l] + sizes_[l + 1];
    }
    params_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(total));
}

void Mlp::init(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    params_.setZero();
    const std::size_t L = sizes_.size() - 1;
    for (std::size_t l = 0; l + 1 < L; ++l) {
        const double a = std::sqrt(6.0 / static_cast<double>(sizes_[l] + sizes_[l + 1]));
        std::uniform_real_distribution<double> U(-a, a);
        const std::size_t n = sizes_[l + 1] * sizes_[l];
        for (std::size_t i = 0; i < n; ++i) params_(static_cast<Eigen::Index>(offset_W(l) + i)) = U(rng);
    }
}

void Mlp::set_output_bias(const Eigen::VectorXd& b) {
    if (static_cast<std::size_t>(b.size()) != outputs()) throw ContractError("Mlp: output bias has the wrong size");
    params_.segment(static_cast<Eigen::Index>(offset_b(sizes_.size() - 2)), b.size()) = b;
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& X, Cache* cache) const {
    if (static_cast<std::size_t>(X.rows()) != inputs()) throw ContractError("Mlp: input has the wrong dimension");
    const std::size_t L = sizes_.size() - 1;
    if (cache) cache->act.assign(1, X);
    Eigen::MatrixXd h = X;
    for (std::size_t l = 0; l < L; ++l) {
        const auto rows = static_cast<Eigen::Index>(sizes_[l + 1]), cols = static_cast<Eigen::Index>(sizes_[l]);
        RowMap W(params_.data() + offset_W(l), rows, cols);
        Eigen::Map<const Eigen::VectorXd> b(params_.data() + offset_b(l), rows);
        Eigen::MatrixXd z = W * h;
        z.colwise() += b;
        if (l + 1 < L) z = z.array().tanh().matrix();
        h = std::move(z);
        if (cache) cache->act.push_back(h);
    }
    return h;
}

Eigen::VectorXd Mlp::backward(const Cache& cache, const Eigen::MatrixXd& dOut) const {
    const std::size_t L = sizes_.size() - 1;
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(params_.size());
    Eigen::MatrixXd delta = dOut;  // gradient w.r.t. pre-activation of layer l
    for (std::size_t l = L; l-- > 0;) {
        const auto rows = static_cast<Eigen::Index>(sizes_[l + 1]), cols = static_cast<Eigen::Index>(sizes_[l]);
        const Eigen::MatrixXd& in = cache.act[l];
        RowMapMut gW(grad.data() + offset_W(l), rows, cols);
        gW = delta * in.transpose();
        grad.segment(static_cast<Eigen::Index>(offset_b(l)), rows) = delta.rowwise().sum();
        if (l == 0) break;
        RowMap W(params_.data() + offset_W(l), rows, cols);
        Eigen::MatrixXd back = W.transpose() * delta;
        delta = back.array() * (1.0 - in.array().square());
    }
    return grad;
}

}  // namespace mmhedge
