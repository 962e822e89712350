#include "mmhedge/hedging.hpp"

#include <cmath>
#include <sstream>

#include "mmhedge/errors.hpp"

namespace mmhedge {

std::string_view to_string(OptionKind kind) {
    switch (kind) {
    case OptionKind::VanillaCall: return "vanilla-call";
    case OptionKind::VanillaPut: return "vanilla-put";
    case OptionKind::BinaryCall: return "binary-call";
    case OptionKind::BinaryPut: return "binary-put";
    case OptionKind::DownAndOutCall: return "down-and-out-call";
    }
    return "unknown";
}

OptionKind option_kind_from_string(std::string_view text) {
    for (auto k : {OptionKind::VanillaCall, OptionKind::VanillaPut, OptionKind::BinaryCall, OptionKind::BinaryPut,
                   OptionKind::DownAndOutCall})
        if (to_string(k) == text) return k;
    throw ConfigError("unknown option kind '" + std::string(text) + "'");
}

void OptionSpec::validate() const {
    if (!(tau > 0)) throw DomainError("option " + str() + ": tau must be positive");
    if (kind == OptionKind::DownAndOutCall) {
        if (!barrier_m) throw DomainError("option " + str() + ": down-and-out call needs a barrier");
        if (!(*barrier_m < m)) throw DomainError("option " + str() + ": barrier must lie below the strike");
    }
}

std::string OptionSpec::str() const {
    std::ostringstream os;
    os << to_string(kind) << "(tau=" << tau << ", m=" << m;
    if (barrier_m) os << ", barrier_m=" << *barrier_m;
    os << ')';
    return os.str();
}

namespace {

struct SurfacePoint {
    SurfaceValue c;
    Eigen::VectorXd G, Gm;  // basis values and m-derivatives, j = 1..d
};

SurfacePoint sample(const SurfaceSnapshot& snap, const FactorModel& model, double tau, double m, const char* leg,
                    const OptionSpec& spec) {
    try {
        SurfacePoint p{interp_surface(snap, tau, m), Eigen::VectorXd(static_cast<Eigen::Index>(model.d())),
                       Eigen::VectorXd(static_cast<Eigen::Index>(model.d()))};
        for (std::size_t j = 1; j <= model.d(); ++j) {
            const auto b = model.basis(j, tau, m);
            p.G(static_cast<Eigen::Index>(j - 1)) = b.value;
            p.Gm(static_cast<Eigen::Index>(j - 1)) = b.d_dm;
        }
        return p;
    } catch (const OutOfRangeError& e) {
        throw OutOfRangeError(std::string(leg) + " leg of " + spec.str() + " is outside the liquid range: " + e.what());
    }
}

Exposures call_exposure(const SurfacePoint& p, double spot) {
    return {p.c.value, p.c.value - p.c.d_dm, spot * p.G};
}

Exposures put_exposure(const SurfacePoint& p, double m, double spot) {
    auto e = call_exposure(p, spot);
    e.value += std::expm1(m);  // c - 1 + e^m
    e.dS -= 1.0;
    return e;
}

Exposures scaled(Exposures e, double w) {
    e.value *= w;
    e.dS *= w;
    e.dXi *= w;
    return e;
}

void accumulate(Exposures& acc, const Exposures& e) {
    acc.value += e.value;
    acc.dS += e.dS;
    acc.dXi += e.dXi;
}

}  // namespace

Exposures exposures(const OptionSpec& spec, const SurfaceSnapshot& snapshot, const FactorModel& model, double spot) {
    spec.validate();
    if (!(spot > 0)) throw DomainError("exposures: spot must be positive");
    switch (spec.kind) {
    case OptionKind::VanillaCall: return call_exposure(sample(snapshot, model, spec.tau, spec.m, "call", spec), spot);
    case OptionKind::VanillaPut: return put_exposure(sample(snapshot, model, spec.tau, spec.m, "put", spec), spec.m, spot);
    case OptionKind::BinaryCall:
    case OptionKind::BinaryPut: {
        // Pays 1{S_T > K}; price -dC/dK = -e^{-m} c_m with K = S e^m.
        const auto p = sample(snapshot, model, spec.tau, spec.m, "binary", spec);
        const double K = spot * std::exp(spec.m);
        Exposures e{-std::exp(-spec.m) * p.c.d_dm / spot, (p.c.d2_dm2 - p.c.d_dm) / K, -(spot / K) * p.Gm};
        if (spec.kind == OptionKind::BinaryPut) {
            e.value = 1.0 / spot - e.value;
            e.dS = -e.dS;
            e.dXi = -e.dXi;
        }
        return e;
    }
    case OptionKind::DownAndOutCall: {
        // C(K) - (K/B) P(B^2/K)
        const double mb = *spec.barrier_m;
        const double reflected = 2.0 * mb - spec.m;
        auto e = call_exposure(sample(snapshot, model, spec.tau, spec.m, "call", spec), spot);
        const auto p = put_exposure(sample(snapshot, model, spec.tau, reflected, "reflected put", spec), reflected, spot);
        accumulate(e, scaled(p, -std::exp(spec.m - mb)));
        return e;
    }
    }
    throw ContractError("exposures: unknown option kind");
}

Exposures exposures(const Target& target, const SurfaceSnapshot& snapshot, const FactorModel& model, double spot) {
    Exposures acc{0.0, 0.0, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(model.d()))};
    for (const auto& pos : target) accumulate(acc, scaled(exposures(pos.spec, snapshot, model, spot), pos.weight));
    return acc;
}

std::string_view to_string(HedgeMethod method) {
    switch (method) {
    case HedgeMethod::None: return "none";
    case HedgeMethod::DeltaBs: return "delta_bs";
    case HedgeMethod::DeltaHestonMv: return "delta_heston_mv";
    case HedgeMethod::DeltaMm: return "delta_mm";
    case HedgeMethod::DeltaNsdeMv: return "delta_nsde_mv";
    case HedgeMethod::DvBs: return "dv_bs";
    case HedgeMethod::DvHeston: return "dv_heston";
    case HedgeMethod::DxiSens: return "dxi_sens";
    case HedgeMethod::DxiMv: return "dxi_mv";
    case HedgeMethod::MvDirect: return "mv_direct";
    }
    return "unknown";
}

HedgeMethod hedge_method_from_string(std::string_view text) {
    for (auto m : {HedgeMethod::None, HedgeMethod::DeltaBs, HedgeMethod::DeltaHestonMv, HedgeMethod::DeltaMm,
                   HedgeMethod::DeltaNsdeMv, HedgeMethod::DvBs, HedgeMethod::DvHeston, HedgeMethod::DxiSens,
                   HedgeMethod::DxiMv, HedgeMethod::MvDirect})
        if (to_string(m) == text) return m;
    throw ConfigError("unknown hedge method '" + std::string(text) + "'");
}

bool uses_option(HedgeMethod m) {
    return m == HedgeMethod::DvBs || m == HedgeMethod::DvHeston || m == HedgeMethod::DxiSens || m == HedgeMethod::DxiMv ||
           m == HedgeMethod::MvDirect;
}

nlohmann::json to_json(const HedgePlan& plan) {
    nlohmann::json inst = nlohmann::json::array();
    for (const auto& s : plan.instruments) {
        nlohmann::json o{{"kind", to_string(s.kind)}, {"tau", s.tau}, {"m", s.m}};
        if (s.barrier_m) o["barrier_m"] = *s.barrier_m;
        inst.push_back(o);
    }
    return {{"method", to_string(plan.method)},
            {"x_s", plan.x_s},
            {"x_c", std::vector<double>(plan.x_c.data(), plan.x_c.data() + plan.x_c.size())},
            {"instruments", inst}};
}

Eigen::VectorXd guarded_solve(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const std::string& what) {
    Eigen::MatrixXd E = A;
    Eigen::VectorXd r = b;
    for (Eigen::Index i = 0; i < E.rows(); ++i) {
        const double s = E.row(i).cwiseAbs().maxCoeff();
        if (!(s > 0)) throw SingularSystemError(what + ": hedge system has an all-zero row " + std::to_string(i));
        E.row(i) /= s;
        r(i) /= s;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(E, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const double cond = sv(0) / sv(sv.size() - 1);
    if (!(cond <= kConditionLimit)) {
        const Eigen::VectorXd v = svd.matrixV().col(sv.size() - 1);
        std::vector<std::size_t> suspects;
        std::ostringstream os;
        os << what << ": hedge system condition number " << cond << " exceeds " << kConditionLimit
           << "; near-dependent hedging options:";
        for (Eigen::Index i = 1; i < v.size(); ++i)
            if (std::abs(v(i)) > 0.1) {
                suspects.push_back(static_cast<std::size_t>(i - 1));
                os << ' ' << (i - 1);
            }
        throw SingularSystemError(os.str(), std::move(suspects));
    }
    return E.fullPivLu().solve(r);
}

namespace {

void check_instruments(const std::vector<Exposures>& instruments, std::size_t d_prime, std::size_t d) {
    if (instruments.size() != d_prime)
        throw ContractError("hedge: need exactly d' = " + std::to_string(d_prime) + " hedging options, got " +
                            std::to_string(instruments.size()));
    if (d_prime > d) throw ContractError("hedge: d' exceeds the number of factors");
}

HedgeRatios split(const Eigen::VectorXd& x) { return {x(0), x.tail(x.size() - 1)}; }

}  // namespace

HedgeRatios solve_sensitivity(const Exposures& target, const std::vector<Exposures>& inst, std::size_t dp) {
    check_instruments(inst, dp, static_cast<std::size_t>(target.dXi.size()));
    const auto n = static_cast<Eigen::Index>(dp + 1);
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd b(n);
    A(0, 0) = 1.0;
    b(0) = target.dS;
    for (Eigen::Index i = 1; i < n; ++i) {
        A(0, i) = inst[static_cast<std::size_t>(i - 1)].dS;
        b(i) = target.dXi(i - 1);
        for (Eigen::Index c = 1; c < n; ++c) A(i, c) = inst[static_cast<std::size_t>(c - 1)].dXi(i - 1);
    }
    return split(guarded_solve(A, b, "sensitivity hedge"));
}

Eigen::RowVectorXd loading(const Exposures& e, double spot, const Eigen::MatrixXd& sigma) {
    const auto D = sigma.rows();
    if (e.dXi.size() != D - 1) throw ContractError("loading: diffusion is not (d+1) x (d+1)");
    Eigen::RowVectorXd a(D);
    a(0) = spot * e.dS;
    a.tail(D - 1) = e.dXi.transpose();
    return a * sigma;
}

double mv_delta(const Exposures& e, double spot, const Eigen::MatrixXd& sigma) {
    const Eigen::RowVectorXd s1 = sigma.row(0);
    const double v = s1.squaredNorm();
    if (!(v > 1e-24)) throw SingularSystemError("mv_delta: spot diffusion sigma_11 vanishes");
    return loading(e, spot, sigma).dot(s1) / (spot * v);
}

HedgeRatios solve_mv(const Exposures& target, const std::vector<Exposures>& inst, std::size_t dp, double spot,
                     const Eigen::MatrixXd& sigma) {
    check_instruments(inst, dp, static_cast<std::size_t>(target.dXi.size()));
    if (!(sigma(0, 0) > 1e-12)) throw SingularSystemError("MV hedge: sigma_11 vanishes");
    const auto n = static_cast<Eigen::Index>(dp + 1);
    const Eigen::RowVectorXd lS = spot * sigma.row(0), lV = loading(target, spot, sigma);
    std::vector<Eigen::RowVectorXd> lC;
    for (const auto& c : inst) lC.push_back(loading(c, spot, sigma));
    Eigen::MatrixXd A(n, n);
    Eigen::VectorXd b(n);
    // Row k: covariation with ln S (k = 0) or xi_k.
    for (Eigen::Index k = 0; k < n; ++k) {
        const Eigen::RowVectorXd s = sigma.row(k);
        A(k, 0) = lS.dot(s);
        for (Eigen::Index i = 1; i < n; ++i) A(k, i) = lC[static_cast<std::size_t>(i - 1)].dot(s);
        b(k) = lV.dot(s);
    }
    return split(guarded_solve(A, b, "MV hedge"));
}

HedgeRatios solve_direct_mv(const Exposures& target, const std::vector<Exposures>& inst, double spot,
                            const Eigen::MatrixXd& sigma) {
    if (!(sigma(0, 0) > 1e-12)) throw SingularSystemError("direct MV hedge: sigma_11 vanishes");
    const auto n = static_cast<Eigen::Index>(inst.size() + 1);
    std::vector<Eigen::RowVectorXd> l{spot * sigma.row(0)};
    for (const auto& c : inst) l.push_back(loading(c, spot, sigma));
    const Eigen::RowVectorXd lV = loading(target, spot, sigma);
    const double ss = l[0].squaredNorm();
    Eigen::MatrixXd A(n, n);
    Eigen::VectorXd b(n);
    for (Eigen::Index w = 0; w < n; ++w) {
        for (Eigen::Index i = 0; i < n; ++i) A(w, i) = l[static_cast<std::size_t>(i)].dot(l[static_cast<std::size_t>(w)]) / ss;
        b(w) = lV.dot(l[static_cast<std::size_t>(w)]) / ss;
    }
    guarded_solve(A, b, "direct MV hedge");
    // Same solution as the Gram system, but as least squares on the loadings:
    // the Gram matrix squares their condition number.
    Eigen::MatrixXd Lm(sigma.cols(), n);
    for (Eigen::Index i = 0; i < n; ++i) Lm.col(i) = l[static_cast<std::size_t>(i)].transpose();
    return split(Lm.colPivHouseholderQr().solve(lV.transpose()));
}

double g_functional(const Exposures& e, double spot, const Eigen::MatrixXd& sigma) {
    if (sigma.rows() < 3) throw ContractError("g_functional: needs at least two factors");
    const Eigen::RowVectorXd s1 = sigma.row(0), s2 = sigma.row(1);
    const double c12 = s1.dot(s2), c11 = s1.squaredNorm();
    const Eigen::RowVectorXd dir = s2 / c12 - s1 / c11;
    double g = 0.0;
    for (Eigen::Index i = 0; i < e.dXi.size(); ++i) g += e.dXi(i) / spot * sigma.row(i + 1).dot(dir);
    return g;
}

// ---- benchmark Greeks ---------------------------------------------------

namespace {

double own_iv(const SurfaceSnapshot& snap, double tau, double m, const OptionSpec& spec) {
    double c;
    try {
        c = interp_surface(snap, tau, m).value;
    } catch (const OutOfRangeError& e) {
        throw OutOfRangeError("implied vol for " + spec.str() + ": " + e.what());
    }
    return implied_vol(c, tau, m);
}

ModelGreeks bs_call_greeks(double sigma, double tau, double m, double spot) {
    const BsQuote q{sigma, tau, m};
    return {bs_delta(q), bs_vega(q, spot)};
}

}  // namespace

ModelGreeks bs_greeks(const OptionSpec& spec, const SurfaceSnapshot& snap) {
    spec.validate();
    const double S = snap.spot();
    switch (spec.kind) {
    case OptionKind::VanillaCall: return bs_call_greeks(own_iv(snap, spec.tau, spec.m, spec), spec.tau, spec.m, S);
    case OptionKind::VanillaPut: {
        auto g = bs_call_greeks(own_iv(snap, spec.tau, spec.m, spec), spec.tau, spec.m, S);
        g.delta -= 1.0;
        return g;
    }
    case OptionKind::BinaryCall:
    case OptionKind::BinaryPut: {
        const double s = own_iv(snap, spec.tau, spec.m, spec);
        const BsQuote q{s, spec.tau, spec.m};
        const double d1 = bs_d1(q), d2 = d1 - s * std::sqrt(spec.tau);
        ModelGreeks g{bs_digital_delta(q, S), -norm_pdf(d2) * d1 / s};
        if (spec.kind == OptionKind::BinaryPut) g = {-g.delta, -g.vega};
        return g;
    }
    case OptionKind::DownAndOutCall: {
        const double mb = *spec.barrier_m, mr = 2.0 * mb - spec.m, w = std::exp(spec.m - mb);
        auto c = bs_call_greeks(own_iv(snap, spec.tau, spec.m, spec), spec.tau, spec.m, S);
        auto p = bs_call_greeks(own_iv(snap, spec.tau, mr, spec), spec.tau, mr, S);
        p.delta -= 1.0;
        return {c.delta - w * p.delta, c.vega - w * p.vega};
    }
    }
    throw ContractError("bs_greeks: unknown option kind");
}

ModelGreeks bs_greeks(const Target& target, const SurfaceSnapshot& snap) {
    ModelGreeks acc;
    for (const auto& p : target) {
        const auto g = bs_greeks(p.spec, snap);
        acc.delta += p.weight * g.delta;
        acc.vega += p.weight * g.vega;
    }
    return acc;
}

HestonGreekEngine::HestonGreekEngine(HestonParams params) : params_(params) { params_.validate(); }

const HestonSlice& HestonGreekEngine::slice(double tau) {
    auto& s = slices_[tau];
    if (!s) {
        const double probes[] = {-0.3, 0.0, 0.3};
        s = std::make_unique<HestonSlice>(params_, tau, probes);
    }
    return *s;
}

ModelGreeks HestonGreekEngine::greeks(const OptionSpec& spec, double step_scale) {
    spec.validate();
    const HestonSlice& sl = slice(spec.tau);
    const double m = spec.m, S0 = params_.S0;
    if (spec.kind == OptionKind::VanillaCall || spec.kind == OptionKind::VanillaPut) {
        auto g = sl.greeks(m, step_scale);
        if (spec.kind == OptionKind::VanillaPut) g.delta -= 1.0;
        return {g.delta, g.vega};
    }
    if (spec.kind == OptionKind::DownAndOutCall) {
        const double mb = *spec.barrier_m, mr = 2.0 * mb - m, w = std::exp(m - mb);
        auto c = sl.greeks(m, step_scale), p = sl.greeks(mr, step_scale);
        p.delta -= 1.0;
        return {c.delta - w * p.delta, c.vega - w * p.vega};
    }
    // Binary: V(x, v) / S0 = -e^{-(m - x)} c_m(m - x; v) / S0, with c_m by central differences.
    const double hm = 1e-4;
    auto f = [&](double x, double v) {
        const double mm = m - x;
        const double cm = (sl.price(mm + hm, v) - sl.price(mm - hm, v)) / (2.0 * hm);
        const double bc = -std::exp(-mm) * cm / S0;
        return spec.kind == OptionKind::BinaryCall ? bc : 1.0 / S0 - bc;
    };
    const double v0 = params_.v0;
    const double hx = step_scale * 2e-2 * std::max(std::sqrt(std::max(v0, params_.theta) * spec.tau), 1e-4);
    const double hv = step_scale * 1e-2 * v0;
    auto dx = [&](double h) { return (f(h, v0) - f(-h, v0)) / (2.0 * h); };
    auto dv = [&](double h) { return (f(0.0, v0 + h) - f(0.0, v0 - h)) / (2.0 * h); };
    return {(4.0 * dx(0.5 * hx) - dx(hx)) / 3.0, S0 * (4.0 * dv(0.5 * hv) - dv(hv)) / 3.0};
}

ModelGreeks HestonGreekEngine::greeks(const Target& target) {
    ModelGreeks acc;
    for (const auto& p : target) {
        const auto g = greeks(p.spec);
        acc.delta += p.weight * g.delta;
        acc.vega += p.weight * g.vega;
    }
    return acc;
}

double HestonGreekEngine::mv_delta(const OptionSpec& spec) {
    const auto g = greeks(spec);
    return g.delta + g.vega * params_.rho * params_.sigma / params_.S0;
}

double HestonGreekEngine::mv_delta(const Target& target) {
    const auto g = greeks(target);
    return g.delta + g.vega * params_.rho * params_.sigma / params_.S0;
}

// ---- spec-level ---------------------------------------------------------

double mm_delta(const OptionSpec& spec, const SurfaceSnapshot& snapshot, const FactorModel& model, double spot) {
    return exposures(spec, snapshot, model, spot).dS;
}

double mm_mv_delta(const OptionSpec& spec, const SurfaceSnapshot& snapshot, const FactorModel& model,
                   const DiffusionModel& sde, const Eigen::VectorXd& xi, double spot) {
    Eigen::VectorXd mu;
    Eigen::MatrixXd sigma;
    sde.drift_diffusion(xi, mu, sigma);
    if (!(sigma(0, 0) > 1e-12)) throw SingularSystemError("mm_mv_delta: sigma_11 vanishes at the current factors");
    return mv_delta(exposures(spec, snapshot, model, spot), spot, sigma);
}

Eigen::MatrixXd MarketState::sigma() const {
    if (!sde) throw ConfigError("market state has no diffusion model");
    Eigen::VectorXd mu;
    Eigen::MatrixXd s;
    sde->drift_diffusion(xi, mu, s);
    return s;
}

namespace {

std::vector<Exposures> instrument_exposures(const std::vector<OptionSpec>& inst, const MarketState& st) {
    std::vector<Exposures> out;
    for (const auto& s : inst) out.push_back(exposures(s, *st.snapshot, *st.factors, st.spot()));
    return out;
}

HedgePlan to_plan(HedgeMethod m, const HedgeRatios& r, std::vector<OptionSpec> inst) {
    return {m, r.x_s, r.x_c, std::move(inst)};
}

HedgePlan vega_ratio_plan(HedgeMethod method, const ModelGreeks& v, const ModelGreeks& c, const OptionSpec& inst) {
    if (!(std::abs(c.vega) > 1e-12))
        throw SingularSystemError("delta-vega hedge: hedging option " + inst.str() + " has no vega", {0});
    const double xc = v.vega / c.vega;
    return {method, v.delta - xc * c.delta, Eigen::VectorXd::Constant(1, xc), {inst}};
}

}  // namespace

HedgePlan solve_sensitivity_hedge(const Target& target, const std::vector<OptionSpec>& inst, std::size_t dp,
                                  const MarketState& st) {
    const auto v = exposures(target, *st.snapshot, *st.factors, st.spot());
    return to_plan(dp == 0 ? HedgeMethod::DeltaMm : HedgeMethod::DxiSens,
                   solve_sensitivity(v, instrument_exposures(inst, st), dp), inst);
}

HedgePlan solve_mv_hedge(const Target& target, const std::vector<OptionSpec>& inst, std::size_t dp,
                         const MarketState& st) {
    const auto v = exposures(target, *st.snapshot, *st.factors, st.spot());
    return to_plan(dp == 0 ? HedgeMethod::DeltaNsdeMv : HedgeMethod::DxiMv,
                   solve_mv(v, instrument_exposures(inst, st), dp, st.spot(), st.sigma()), inst);
}

HedgePlan solve_direct_mv_hedge(const Target& target, const std::vector<OptionSpec>& inst, const MarketState& st) {
    const auto v = exposures(target, *st.snapshot, *st.factors, st.spot());
    return to_plan(HedgeMethod::MvDirect, solve_direct_mv(v, instrument_exposures(inst, st), st.spot(), st.sigma()), inst);
}

HedgePlan bs_delta_vega_hedge(const Target& target, const OptionSpec& instrument, const SurfaceSnapshot& snapshot) {
    return vega_ratio_plan(HedgeMethod::DvBs, bs_greeks(target, snapshot), bs_greeks(instrument, snapshot), instrument);
}

HedgePlan heston_delta_vega_hedge(const Target& target, const OptionSpec& instrument, const HestonParams& params) {
    HestonGreekEngine eng(params);
    return vega_ratio_plan(HedgeMethod::DvHeston, eng.greeks(target), eng.greeks(instrument), instrument);
}

HedgePlan make_plan(HedgeMethod method, const Target& target, const std::vector<OptionSpec>& inst,
                    const MarketState& st) {
    if (uses_option(method) && inst.empty())
        throw ConfigError(std::string(to_string(method)) + " needs a hedging option");
    switch (method) {
    case HedgeMethod::None: return {method, 0.0, Eigen::VectorXd(), {}};
    case HedgeMethod::DeltaBs: return {method, bs_greeks(target, *st.snapshot).delta, Eigen::VectorXd(), {}};
    case HedgeMethod::DeltaHestonMv: {
        if (!st.heston) throw ConfigError("delta_heston_mv needs calibrated Heston parameters");
        HestonGreekEngine eng(*st.heston);
        return {method, eng.mv_delta(target), Eigen::VectorXd(), {}};
    }
    case HedgeMethod::DeltaMm: return solve_sensitivity_hedge(target, {}, 0, st);
    case HedgeMethod::DeltaNsdeMv: return solve_mv_hedge(target, {}, 0, st);
    case HedgeMethod::DvBs: return bs_delta_vega_hedge(target, inst.front(), *st.snapshot);
    case HedgeMethod::DvHeston:
        if (!st.heston) throw ConfigError("dv_heston needs calibrated Heston parameters");
        return heston_delta_vega_hedge(target, inst.front(), *st.heston);
    case HedgeMethod::DxiSens: return solve_sensitivity_hedge(target, {inst.front()}, 1, st);
    case HedgeMethod::DxiMv: return solve_mv_hedge(target, {inst.front()}, 1, st);
    case HedgeMethod::MvDirect: return solve_direct_mv_hedge(target, {inst.front()}, st);
    }
    throw ContractError("make_plan: unknown method");
}

}  // namespace mmhedge
