#include "mmhedge/dynamics.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "mmhedge/errors.hpp"

namespace mmhedge {

namespace {

double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
const double kUnitSoftplusBias = std::log(std::exp(1.0) - 1.0);

std::size_t tri(std::size_t i, std::size_t j) { return i * (i + 1) / 2 + j; }

std::vector<std::size_t> layer_sizes(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out) {
    std::vector<std::size_t> s{in};
    s.insert(s.end(), hidden.begin(), hidden.end());
    s.push_back(out);
    return s;
}

// Solve A z = r for lower-triangular A.
void forward_subst(const Eigen::MatrixXd& A, const Eigen::VectorXd& r, Eigen::VectorXd& z) {
    const auto n = r.size();
    z.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double s = r(i);
        for (Eigen::Index j = 0; j < i; ++j) s -= A(i, j) * z(j);
        z(i) = s / A(i, i);
    }
}

// Solve A^T w = z for lower-triangular A.
void backward_subst_t(const Eigen::MatrixXd& A, const Eigen::VectorXd& z, Eigen::VectorXd& w) {
    const auto n = z.size();
    w.resize(n);
    for (Eigen::Index i = n; i-- > 0;) {
        double s = z(i);
        for (Eigen::Index j = i + 1; j < n; ++j) s -= A(j, i) * w(j);
        w(i) = s / A(i, i);
    }
}

}  // namespace

ConstantSde::ConstantSde(Eigen::VectorXd mu, Eigen::MatrixXd sigma, std::optional<FactorConstraintSystem> constraints)
    : mu_(std::move(mu)), sigma_(std::move(sigma)), fcs_(std::move(constraints)) {
    if (mu_.size() < 2 || sigma_.rows() != mu_.size() || sigma_.cols() != mu_.size())
        throw ContractError("ConstantSde: drift and diffusion dimensions disagree");
    if (fcs_ && fcs_->dim() != d()) throw ContractError("ConstantSde: constraint dimension differs from d");
}

void ConstantSde::drift_diffusion(const Eigen::VectorXd&, Eigen::VectorXd& mu, Eigen::MatrixXd& sigma) const {
    mu = mu_;
    sigma = sigma_;
}

NeuralSde::NeuralSde(std::size_t d, std::vector<std::size_t> hidden, std::uint64_t seed)
    : d_(d),
      hidden_(std::move(hidden)),
      seed_(seed),
      drift_(layer_sizes(d, hidden_, d + 1)),
      diff_(layer_sizes(d, hidden_, (d + 1) * (d + 2) / 2)),
      in_mean_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d))),
      in_std_(Eigen::VectorXd::Ones(static_cast<Eigen::Index>(d))),
      scale_(Eigen::VectorXd::Ones(static_cast<Eigen::Index>(d + 1))) {
    if (d == 0) throw ConfigError("NeuralSde: need at least one factor");
    drift_.init(splitmix64(seed));
    diff_.init(splitmix64(seed + 1));
    Eigen::VectorXd bias = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(diff_.outputs()));
    for (std::size_t i = 0; i <= d; ++i) bias(static_cast<Eigen::Index>(tri(i, i))) = kUnitSoftplusBias;
    diff_.set_output_bias(bias);
}

void NeuralSde::set_normalization(Eigen::VectorXd in_mean, Eigen::VectorXd in_std, Eigen::VectorXd scale) {
    if (static_cast<std::size_t>(in_mean.size()) != d_ || static_cast<std::size_t>(in_std.size()) != d_ ||
        static_cast<std::size_t>(scale.size()) != d_ + 1)
        throw ContractError("NeuralSde: normalization vectors have the wrong size");
    in_mean_ = std::move(in_mean);
    in_std_ = std::move(in_std);
    scale_ = std::move(scale);
}

Eigen::VectorXd NeuralSde::params() const {
    Eigen::VectorXd theta(static_cast<Eigen::Index>(num_params()));
    theta << drift_.params(), diff_.params();
    return theta;
}

void NeuralSde::set_params(const Eigen::VectorXd& theta) {
    if (static_cast<std::size_t>(theta.size()) != num_params()) throw ContractError("NeuralSde: parameter vector size");
    const auto nd = static_cast<Eigen::Index>(drift_.num_params());
    drift_.params() = theta.head(nd);
    diff_.params() = theta.tail(theta.size() - nd);
}

Eigen::MatrixXd NeuralSde::standardize(const Eigen::MatrixXd& xi_cols) const {
    return (xi_cols.colwise() - in_mean_).array().colwise() / in_std_.array();
}

void NeuralSde::drift_diffusion(const Eigen::VectorXd& xi, Eigen::VectorXd& mu, Eigen::MatrixXd& sigma) const {
    if (static_cast<std::size_t>(xi.size()) != d_)
        throw ContractError("drift_diffusion: expected " + std::to_string(d_) + " factors");
    const Eigen::MatrixXd x = standardize(xi);
    const Eigen::VectorXd m = drift_.forward(x).col(0);
    const Eigen::VectorXd raw = diff_.forward(x).col(0);
    const std::size_t D = d_ + 1;
    mu = scale_.cwiseProduct(m);
    sigma = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(D), static_cast<Eigen::Index>(D));
    for (std::size_t i = 0; i < D; ++i)
        for (std::size_t j = 0; j <= i; ++j) {
            const double v = raw(static_cast<Eigen::Index>(tri(i, j)));
            sigma(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                scale_(static_cast<Eigen::Index>(i)) * (i == j ? softplus(v) : v);
        }
}

double NeuralSde::loss(const Eigen::MatrixXd& states, std::size_t begin, std::size_t end, double dt, double penalty,
                       Eigen::VectorXd* grad) const {
    const std::size_t D = d_ + 1;
    if (static_cast<std::size_t>(states.cols()) != D) throw ContractError("loss: state width differs from d + 1");
    if (end <= begin || end + 1 > static_cast<std::size_t>(states.rows()))
        throw ContractError("loss: transition range out of bounds");
    const auto n = static_cast<Eigen::Index>(end - begin);
    const auto b0 = static_cast<Eigen::Index>(begin);
    const auto Di = static_cast<Eigen::Index>(D);
    Eigen::MatrixXd xi = states.block(b0, 1, n, Di - 1).transpose();
    Eigen::MatrixXd X = standardize(xi);

    Mlp::Cache cd, cs;
    const Eigen::MatrixXd M = drift_.forward(X, grad ? &cd : nullptr);
    const Eigen::MatrixXd Raw = diff_.forward(X, grad ? &cs : nullptr);
    Eigen::MatrixXd gM, gRaw;
    if (grad) {
        gM.resize(M.rows(), n);
        gRaw.resize(Raw.rows(), n);
    }

    const double sq = std::sqrt(dt);
    const FactorConstraintSystem* fcs = constraints();
    double total = 0.0;
    Eigen::MatrixXd A(Di, Di);
    Eigen::VectorXd mu(Di), r(Di), z, w, gmu(Di);
    for (Eigen::Index t = 0; t < n; ++t) {
        A.setZero();
        for (std::size_t i = 0; i < D; ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            mu(ii) = scale_(ii) * M(ii, t);
            for (std::size_t j = 0; j <= i; ++j) {
                const double v = Raw(static_cast<Eigen::Index>(tri(i, j)), t);
                A(ii, static_cast<Eigen::Index>(j)) = sq * scale_(ii) * (i == j ? softplus(v) : v);
            }
        }
        r = (states.row(b0 + t + 1) - states.row(b0 + t)).transpose() - mu * dt;
        forward_subst(A, r, z);
        double lt = 0.5 * z.squaredNorm();
        for (Eigen::Index i = 0; i < Di; ++i) lt += std::log(A(i, i));

        if (grad) {
            backward_subst_t(A, z, w);
            gmu = -dt * w;
        }
        if (fcs && fcs->rows() > 0 && penalty > 0) {
            const Eigen::VectorXd q = xi.col(t) + mu.tail(Di - 1) * dt;
            const Eigen::VectorXd slack = fcs->b - fcs->M * q;
            for (Eigen::Index k = 0; k < slack.size(); ++k)
                if (slack(k) > 0) {
                    lt += penalty * slack(k) * slack(k);
                    if (grad) gmu.tail(Di - 1) -= 2.0 * penalty * dt * slack(k) * fcs->M.row(k).transpose();
                }
        }
        total += lt;
        if (grad) {
            for (std::size_t i = 0; i < D; ++i) {
                const auto ii = static_cast<Eigen::Index>(i);
                gM(ii, t) = scale_(ii) * gmu(ii);
                for (std::size_t j = 0; j <= i; ++j) {
                    const auto jj = static_cast<Eigen::Index>(j);
                    double gA = -w(ii) * z(jj);
                    if (i == j) gA += 1.0 / A(ii, ii);
                    const auto k = static_cast<Eigen::Index>(tri(i, j));
                    double g = sq * scale_(ii) * gA;
                    if (i == j) g *= sigmoid(Raw(k, t));
                    gRaw(k, t) = g;
                }
            }
        }
    }
    const double inv = 1.0 / static_cast<double>(n);
    if (grad) {
        grad->resize(static_cast<Eigen::Index>(num_params()));
        *grad << drift_.backward(cd, gM * inv), diff_.backward(cs, gRaw * inv);
    }
    return total * inv;
}

nlohmann::json NeuralSde::to_json() const {
    auto vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
    nlohmann::json j{{"version", 1},
                     {"kind", "neural-sde"},
                     {"d", d_},
                     {"hidden", hidden_},
                     {"seed", seed_},
                     {"drift_sizes", drift_.sizes()},
                     {"diffusion_sizes", diff_.sizes()},
                     {"drift_params", vec(drift_.params())},
                     {"diffusion_params", vec(diff_.params())},
                     {"input_mean", vec(in_mean_)},
                     {"input_std", vec(in_std_)},
                     {"scale", vec(scale_)}};
    if (fcs_) {
        j["constraint_hash"] = fcs_->hash();
        j["constraints"] = mmhedge::to_json(*fcs_);
    }
    return j;
}

NeuralSde NeuralSde::from_json(const nlohmann::json& j) {
    if (j.at("version").get<int>() != 1 || j.at("kind").get<std::string>() != "neural-sde")
        throw DataError("neural SDE document: unsupported version or kind");
    NeuralSde m(j.at("d").get<std::size_t>(), j.at("hidden").get<std::vector<std::size_t>>(),
                j.at("seed").get<std::uint64_t>());
    auto load = [](const nlohmann::json& a) {
        auto v = a.get<std::vector<double>>();
        return Eigen::VectorXd(Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
    };
    const auto dp = load(j.at("drift_params")), sp = load(j.at("diffusion_params"));
    if (static_cast<std::size_t>(dp.size()) != m.drift_.num_params() ||
        static_cast<std::size_t>(sp.size()) != m.diff_.num_params())
        throw DataError("neural SDE document: parameter count does not match the layer sizes");
    m.drift_.params() = dp;
    m.diff_.params() = sp;
    m.set_normalization(load(j.at("input_mean")), load(j.at("input_std")), load(j.at("scale")));
    if (j.contains("constraints")) {
        auto fcs = factor_constraints_from_json(j["constraints"]);
        if (j.contains("constraint_hash") && j["constraint_hash"].get<std::string>() != fcs.hash())
            throw DataError("neural SDE document: constraint hash mismatch");
        m.fcs_ = std::move(fcs);
    }
    return m;
}

SdeFit fit_sde(const Eigen::MatrixXd& states, std::optional<FactorConstraintSystem> constraints,
               const SdeTrainingConfig& cfg) {
    const auto T = static_cast<std::size_t>(states.rows());
    const auto D = static_cast<std::size_t>(states.cols());
    if (D < 2) throw ContractError("fit_sde: states need ln S plus at least one factor");
    if (T < cfg.min_length)
        throw InsufficientDataError("fit_sde: path has " + std::to_string(T) + " points, need " +
                                    std::to_string(cfg.min_length));
    if (!states.allFinite()) throw DataError("fit_sde: non-finite state values");
    if (constraints && constraints->dim() != D - 1) throw ContractError("fit_sde: constraint dimension differs from d");
    if (!(cfg.validation_fraction > 0 && cfg.validation_fraction < 1))
        throw ConfigError("fit_sde: validation_fraction must lie in (0, 1)");

    const std::size_t n = T - 1;
    const std::size_t n_train = static_cast<std::size_t>(std::floor(static_cast<double>(n) * (1.0 - cfg.validation_fraction)));
    if (n_train < 2 || n_train >= n) throw InsufficientDataError("fit_sde: too few transitions for the split");

    const auto nt = static_cast<Eigen::Index>(n_train);
    Eigen::MatrixXd inc = states.middleRows(1, nt) - states.topRows(nt);
    Eigen::VectorXd inc_mean = inc.colwise().mean().transpose();
    Eigen::VectorXd inc_std = ((inc.rowwise() - inc_mean.transpose()).array().square().colwise().sum() /
                               static_cast<double>(n_train - 1)).sqrt().transpose();
    for (Eigen::Index i = 0; i < inc_std.size(); ++i)
        if (!(inc_std(i) > 1e-14))
            throw DataError("fit_sde: coordinate " + std::to_string(i) + " has zero increment variance; likelihood is degenerate");
    Eigen::MatrixXd xi = states.topRows(nt + 1).rightCols(static_cast<Eigen::Index>(D - 1));
    Eigen::VectorXd xmean = xi.colwise().mean().transpose();
    Eigen::VectorXd xstd = ((xi.rowwise() - xmean.transpose()).array().square().colwise().sum() /
                            static_cast<double>(n_train)).sqrt().transpose();
    for (Eigen::Index i = 0; i < xstd.size(); ++i) xstd(i) = std::max(xstd(i), 1e-12);

    NeuralSde model(D - 1, cfg.hidden, cfg.seed);
    const Eigen::VectorXd scale = inc_std / std::sqrt(cfg.dt);
    model.set_normalization(xmean, xstd, scale);
    model.set_constraints(std::move(constraints));
    model.drift_net().set_output_bias((inc_mean / cfg.dt).cwiseQuotient(scale));

    SdeFit fit{model, {}};
    Eigen::VectorXd theta = model.params(), vel = Eigen::VectorXd::Zero(theta.size()), g;
    Eigen::VectorXd best = theta;
    double best_val = std::numeric_limits<double>::infinity();
    int since_best = 0;
    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        fit.model.set_params(theta);
        const double tl = fit.model.loss(states, 0, n_train, cfg.dt, cfg.penalty, &g);
        const double vl = fit.model.loss(states, n_train, n, cfg.dt, cfg.penalty);
        if (!std::isfinite(tl) || !g.allFinite()) {
            std::ostringstream os;
            os << "fit_sde: non-finite training loss at epoch " << epoch << " (loss " << tl << ", last finite "
               << (fit.history.train.empty() ? 0.0 : fit.history.train.back()) << ")";
            throw NumericalError(os.str());
        }
        fit.history.train.push_back(tl);
        fit.history.validation.push_back(vl);
        if (vl < best_val) {
            best_val = vl;
            best = theta;
            fit.history.best_epoch = epoch;
            since_best = 0;
        } else if (++since_best > cfg.patience) {
            break;
        }
        if (cfg.clip_norm > 0.0) {
            const double gn = g.norm();
            if (gn > cfg.clip_norm) g *= cfg.clip_norm / gn;
        }
        vel = cfg.momentum * vel - cfg.learning_rate * g;
        theta += vel;
    }
    fit.model.set_params(best);
    return fit;
}

Eigen::MatrixXd residuals(const DiffusionModel& model, const Eigen::MatrixXd& states, double dt) {
    const auto D = static_cast<Eigen::Index>(model.dim());
    if (states.cols() != D) throw ContractError("residuals: state width differs from d + 1");
    if (states.rows() < 2) throw InsufficientDataError("residuals: need at least two states");
    Eigen::MatrixXd eps(states.rows() - 1, D);
    Eigen::VectorXd mu, z;
    Eigen::MatrixXd sigma;
    const double sq = std::sqrt(dt);
    for (Eigen::Index t = 0; t + 1 < states.rows(); ++t) {
        model.drift_diffusion(states.row(t).tail(D - 1).transpose(), mu, sigma);
        Eigen::MatrixXd A = sigma * sq;
        for (Eigen::Index i = 0; i < D; ++i)
            if (!(A(i, i) > 1e-12))
                throw NumericalError("residuals: diffusion diagonal " + std::to_string(i) + " vanishes at step " +
                                     std::to_string(t));
        forward_subst(A, (states.row(t + 1) - states.row(t)).transpose() - mu * dt, z);
        eps.row(t) = z.transpose();
    }
    return eps;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

Eigen::MatrixXd simulate(const DiffusionModel& model, const Eigen::VectorXd& x0, std::size_t steps, std::uint64_t seed,
                         const SimulationOptions& opt) {
    const auto D = static_cast<Eigen::Index>(model.dim());
    if (x0.size() != D) throw ContractError("simulate: initial state must have d + 1 entries");
    const FactorConstraintSystem* fcs = model.constraints();
    if (fcs && !check_arbitrage_free(*fcs, x0.tail(D - 1)).empty())
        throw DataError("simulate: initial factor point violates the no-arbitrage constraints");
    if (opt.mode == InnovationMode::Bootstrap &&
        (!opt.residuals || opt.residuals->rows() == 0 || opt.residuals->cols() != D))
        throw ContractError("simulate: bootstrap mode needs a residual matrix with d + 1 columns");

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    std::uniform_int_distribution<Eigen::Index> pick(0, opt.residuals ? opt.residuals->rows() - 1 : 0);

    Eigen::MatrixXd path(static_cast<Eigen::Index>(steps) + 1, D);
    path.row(0) = x0.transpose();
    Eigen::VectorXd x = x0, mu, eps(D);
    Eigen::MatrixXd sigma;
    const double sq = std::sqrt(opt.dt);
    for (std::size_t s = 1; s <= steps; ++s) {
        model.drift_diffusion(x.tail(D - 1), mu, sigma);
        if (opt.mode == InnovationMode::Gaussian)
            for (Eigen::Index i = 0; i < D; ++i) eps(i) = normal(rng);
        else
            eps = opt.residuals->row(pick(rng)).transpose();
        Eigen::VectorXd prop = x + (mu * opt.dt + sigma * eps * sq) / (1.0 + mu.norm() * opt.dt);

        if (fcs && fcs->rows() > 0) {
            Eigen::VectorXd q = prop.tail(D - 1);
            for (int it = 0; it < opt.max_reflections; ++it) {
                const Eigen::VectorXd slack = fcs->M * q - fcs->b;
                Eigen::Index worst;
                if (slack.minCoeff(&worst) >= 0) break;
                const Eigen::VectorXd nrm = fcs->M.row(worst).transpose();
                q -= 2.0 * slack(worst) / nrm.squaredNorm() * nrm;
            }
            if ((fcs->M * q - fcs->b).minCoeff() < 0) {
                // Pull back toward the last (feasible) point.
                const Eigen::VectorXd from = x.tail(D - 1), to = prop.tail(D - 1);
                double a = 0.5;
                q = from + a * (to - from);
                while ((fcs->M * q - fcs->b).minCoeff() < 0 && a > 1e-12) {
                    a *= 0.5;
                    q = from + a * (to - from);
                }
                if ((fcs->M * q - fcs->b).minCoeff() < 0) q = from;
            }
            prop.tail(D - 1) = q;
        }
        x = prop;
        path.row(static_cast<Eigen::Index>(s)) = x.transpose();
    }
    return path;
}

}  // namespace mmhedge
