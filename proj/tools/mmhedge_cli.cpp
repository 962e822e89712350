// mmhedge: command-line driver for the market-model hedging pipeline.
//
// Every command reads artifacts from --in and writes to --out (either one
// defaults to the other) and records itself in <out>/manifest.json.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mmhedge/arbitrage.hpp"
#include "mmhedge/backtest.hpp"
#include "mmhedge/calibration.hpp"
#include "mmhedge/datagen.hpp"
#include "mmhedge/dynamics.hpp"
#include "mmhedge/errors.hpp"
#include "mmhedge/factors.hpp"
#include "mmhedge/hedging.hpp"
#include "mmhedge/portfolio.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace mmhedge;

namespace {

constexpr const char* kManifestSchema = "mmhedge-manifest";
constexpr int kManifestVersion = 1;

std::string fnv1a(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    if (!is) throw DataError("cannot read " + p.string());
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

// JSON config files. Accepted shapes:
//   {"days": 500, ...}                 keys of the selected command
//   {"gen": {...}, "decode": {...}}    one section per command
//   a manifest.json                    replays the recorded run of the command
class JsonConfig : public CLI::Config {
public:
    explicit JsonConfig(const CLI::App* root) : root_(root) {}

    std::string to_config(const CLI::App*, bool, bool, std::string) const override { return "{}"; }

    std::vector<CLI::ConfigItem> from_config(std::istream& is) const override {
        json j;
        try {
            j = json::parse(is);
        } catch (const json::exception& e) {
            throw CLI::ConversionError(std::string("config file is not valid JSON: ") + e.what());
        }
        if (!j.is_object()) throw CLI::ConversionError("config file must hold a JSON object");
        const auto subs = root_->get_subcommands();
        if (subs.empty()) return {};
        const std::string cmd = subs.front()->get_name();
        if (j.contains("schema") && j.contains("runs")) {
            if (!j["runs"].contains(cmd)) throw CLI::ConversionError("manifest records no '" + cmd + "' run");
            j = j["runs"][cmd]["config"];
        }
        std::vector<CLI::ConfigItem> items;
        for (const auto& [k, v] : j.items()) {
            if (v.is_object()) {
                if (k != cmd) continue;  // another command's section
                for (const auto& [k2, v2] : v.items()) items.push_back(item(cmd, k2, v2));
            } else {
                items.push_back(item(cmd, k, v));
            }
        }
        return items;
    }

private:
    static std::string scalar(const json& v) {
        if (v.is_string()) return v.get<std::string>();
        if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
        return v.dump();
    }
    static CLI::ConfigItem item(const std::string& cmd, const std::string& key, const json& v) {
        CLI::ConfigItem it;
        it.parents = {cmd};
        it.name = key;
        if (v.is_array())
            for (const auto& e : v) it.inputs.push_back(scalar(e));
        else if (!v.is_null())
            it.inputs.push_back(scalar(v));
        return it;
    }
    const CLI::App* root_;
};

// Options bound to typed variables; the resolved values form the run's config.
class Params {
public:
    explicit Params(CLI::App* app) : app_(app) {}

    template <class T>
    CLI::Option* add(const std::string& name, T& var, const std::string& help) {
        auto* o = app_->add_option("--" + name, var, help);
        if constexpr (requires { var.begin(); } && !std::is_same_v<T, std::string>) o->delimiter(',');
        dump_.push_back([name, &var](json& j) {
            if constexpr (requires { var.has_value(); }) {
                j[name] = var ? json(*var) : json(nullptr);
            } else {
                j[name] = var;
            }
        });
        if constexpr (!requires { var.has_value(); }) o->capture_default_str();
        return o;
    }
    CLI::Option* flag(const std::string& name, bool& var, const std::string& help) {
        dump_.push_back([name, &var](json& j) { j[name] = var; });
        return app_->add_flag("--" + name, var, help);
    }
    json resolved() const {
        json j = json::object();
        for (const auto& f : dump_) f(j);
        return j;
    }

private:
    CLI::App* app_;
    std::vector<std::function<void(json&)>> dump_;
};

// One command run: directories, manifest bookkeeping.
class Run {
public:
    Run(std::string command, std::string in, std::string out, json config)
        : command_(std::move(command)), config_(std::move(config)) {
        if (in.empty() && out.empty()) throw ConfigError(command_ + ": give --in or --out");
        in_ = in.empty() ? fs::path(out) : fs::path(in);
        out_ = out.empty() ? fs::path(in) : fs::path(out);
        fs::create_directories(out_);
    }

    fs::path input(const std::string& name) {
        fs::path p = in_ / name;
        if (!fs::exists(p)) throw ConfigError(command_ + ": missing input " + p.string());
        inputs_.push_back(p);
        return p;
    }
    fs::path input_path(const std::string& path) {
        fs::path p(path);
        if (!fs::exists(p)) throw ConfigError(command_ + ": missing input " + p.string());
        inputs_.push_back(p);
        return p;
    }
    bool has_input(const std::string& name) const { return fs::exists(in_ / name); }

    void write(const std::string& name, const std::function<void(std::ostream&)>& body) {
        fs::path p = out_ / name;
        std::ofstream os(p, std::ios::binary);
        if (!os) throw DataError(command_ + ": cannot write " + p.string());
        body(os);
        os.close();
        if (!os) throw DataError(command_ + ": write failed for " + p.string());
        outputs_.push_back(p);
    }
    void write_json(const std::string& name, const json& j) {
        write(name, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
    }

    void finish(std::optional<std::uint64_t> seed) {
        json run;
        run["command"] = command_;
        run["config"] = json{{command_, config_}};
        run["config_hash"] = fnv1a(config_.dump());
        run["seed"] = seed ? json(*seed) : json(nullptr);
        auto files = [](const std::vector<fs::path>& ps) {
            json a = json::array();
            for (const auto& p : ps) a.push_back({{"path", p.string()}, {"fnv1a", fnv1a(slurp(p))}});
            return a;
        };
        run["inputs"] = files(inputs_);
        run["outputs"] = files(outputs_);

        const fs::path mp = out_ / "manifest.json";
        json m;
        if (fs::exists(mp)) {
            try {
                m = json::parse(slurp(mp));
            } catch (const json::exception&) {
                m = json();
            }
        }
        if (!m.is_object() || m.value("schema", "") != kManifestSchema) m = json::object();
        m["schema"] = kManifestSchema;
        m["version"] = kManifestVersion;
        m["runs"][command_] = run;
        std::ofstream os(mp, std::ios::binary);
        os << m.dump(2) << '\n';
        if (!os) throw DataError(command_ + ": cannot write " + mp.string());
    }

private:
    std::string command_;
    json config_;
    fs::path in_, out_;
    std::vector<fs::path> inputs_, outputs_;
};

std::uint64_t require_seed(const std::optional<std::uint64_t>& seed, const std::string& command) {
    if (!seed) throw ConfigError(command + ": --seed is required (no entropy defaults)");
    return *seed;
}

json heston_json(const HestonParams& p) {
    return {{"S0", p.S0}, {"v0", p.v0}, {"theta", p.theta}, {"k", p.k}, {"sigma", p.sigma}, {"rho", p.rho}};
}
HestonParams heston_from_json(const json& j) {
    try {
        HestonParams p;
        p.S0 = j.at("S0").get<double>();
        p.v0 = j.at("v0").get<double>();
        p.theta = j.at("theta").get<double>();
        p.k = j.at("k").get<double>();
        p.sigma = j.at("sigma").get<double>();
        p.rho = j.at("rho").get<double>();
        p.validate();
        return p;
    } catch (const json::exception& e) {
        throw DataError(std::string("Heston parameter document: ") + e.what());
    }
}

json read_json(const fs::path& p) {
    try {
        return json::parse(slurp(p));
    } catch (const json::exception& e) {
        throw DataError(p.string() + ": " + e.what());
    }
}

MarketDataset load_market(Run& run) {
    auto data = ingest_csv_file(run.input("surfaces.csv").string());
    if (run.has_input("truth.csv") && run.has_input("truth_params.json")) {
        std::ifstream ts(run.input("truth.csv"));
        data.truth = read_truth_csv(ts, data);
        data.truth_params = heston_from_json(read_json(run.input("truth_params.json")));
    }
    return data;
}

FactorModel load_factor_model(Run& run) { return factor_model_from_json(read_json(run.input("factor_model.json"))); }

FactorPath load_factor_path(Run& run) {
    std::ifstream is(run.input("factors.csv"));
    return read_factor_path_csv(is);
}

// Snapshot index of each factor date.
std::vector<std::size_t> align(const MarketDataset& data, const FactorPath& path) {
    std::map<Date, std::size_t> at;
    for (std::size_t t = 0; t < data.size(); ++t) at[data.snapshots[t].date()] = t;
    std::vector<std::size_t> idx;
    for (const auto& d : path.dates) {
        auto it = at.find(d);
        if (it == at.end()) throw DataError("factor date " + d.str() + " has no surface snapshot");
        idx.push_back(it->second);
    }
    return idx;
}

Eigen::MatrixXd state_matrix(const MarketDataset& data, const FactorPath& path) {
    const auto idx = align(data, path);
    Eigen::MatrixXd states(idx.size(), path.xi.cols() + 1);
    for (std::size_t t = 0; t < idx.size(); ++t) {
        states(t, 0) = std::log(data.snapshots[idx[t]].spot());
        states.row(t).tail(path.xi.cols()) = path.xi.row(t);
    }
    return states;
}

template <class E, class F>
std::vector<E> parse_list(const std::vector<std::string>& names, F from_string) {
    std::vector<E> out;
    for (const auto& n : names) {
        try {
            out.push_back(from_string(n));
        } catch (const Error&) {
            throw;
        } catch (const std::exception& e) {
            throw ConfigError("unknown name '" + n + "': " + e.what());
        }
    }
    return out;
}

std::string fmt(double x, int prec = 6) {
    std::ostringstream os;
    os << std::setprecision(prec) << x;
    return os.str();
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(s);
    while (std::getline(ss, cell, sep)) out.push_back(cell);
    return out;
}

// ---- commands -------------------------------------------------------------

struct GenArgs {
    std::size_t days = 0;
    std::optional<std::uint64_t> seed;
    std::vector<double> tenor_days = default_tenor_days();
    std::vector<double> ms{-0.2, -0.15, -0.1, -0.05, 0.0, 0.05, 0.1, 0.15, 0.2};
    HestonParams p;
    int substeps = 8;
    std::string start = "2019-01-02";
};

void cmd_gen(const GenArgs& a, Run& run) {
    const auto seed = require_seed(a.seed, "gen");
    if (a.days < 2) throw ConfigError("gen: --days must be at least 2");
    std::vector<double> taus;
    for (double d : a.tenor_days) taus.push_back(d / 365.0);
    auto lattice = std::make_shared<const LiquidLattice>(taus, a.ms);
    GenConfig gc;
    gc.substeps = a.substeps;
    gc.start = Date::parse(a.start);
    const auto data = gen_heston_market(a.p, a.days, lattice, seed, gc);
    run.write("surfaces.csv", [&](std::ostream& os) { write_surface_csv(os, data); });
    run.write("truth.csv", [&](std::ostream& os) { write_truth_csv(os, data); });
    run.write_json("truth_params.json", heston_json(a.p));
    const auto flagged = std::count(data.arbitrage_flags.begin(), data.arbitrage_flags.end(), true);
    std::cout << "gen: " << data.size() << " days on a " << lattice->n_tau() << "x" << lattice->n_m()
              << " lattice, " << flagged << " flagged snapshots\n";
}

struct DecodeArgs {
    std::size_t d = 2;
    std::size_t train_days = 0;  // 0: all snapshots
};

void cmd_decode(const DecodeArgs& a, Run& run) {
    const auto data = load_market(run);
    const std::size_t n = a.train_days == 0 ? data.size() : a.train_days;
    if (n > data.size()) throw ConfigError("decode: --train-days exceeds the " + std::to_string(data.size()) + " snapshots");
    std::vector<SurfaceSnapshot> train(data.snapshots.begin(), data.snapshots.begin() + n);
    const auto dec = decode_factors(train, a.d);
    run.write_json("factor_model.json", to_json(dec.model));
    run.write("factors.csv", [&](std::ostream& os) { write_factor_path_csv(os, dec.path); });
    run.write("residuals.csv", [&](std::ostream& os) {
        os << "date,max_abs_residual\n";
        os.precision(17);
        for (std::size_t t = 0; t < dec.residuals.size(); ++t) os << dec.path.dates[t].str() << ',' << dec.residuals[t] << '\n';
    });
    const double mx = *std::max_element(dec.residuals.begin(), dec.residuals.end());
    double mean = 0.0;
    for (double r : dec.residuals) mean += r;
    mean /= static_cast<double>(dec.residuals.size());
    std::cout << "decode: d=" << a.d << " over " << n << " days, explained variance " << fmt(dec.explained_variance, 8)
              << "\n  residual max " << fmt(mx, 4) << ", mean " << fmt(mean, 4) << "\n";
}

struct ConstraintArgs {
    bool exact = false;  // skip relax_to_cover
};

void cmd_constraints(const ConstraintArgs& a, Run& run) {
    const auto model = load_factor_model(run);
    const auto path = load_factor_path(run);
    const auto cs = build_constraints(model.lattice());
    auto fcs = project_constraints(cs, model.G0(), model.G());
    if (!a.exact) fcs = relax_to_cover(fcs, path.xi);
    const auto reduced = eliminate_redundant(fcs);
    std::size_t outside = 0;
    for (Eigen::Index t = 0; t < path.xi.rows(); ++t)
        outside += !check_arbitrage_free(reduced, path.xi.row(t).transpose()).empty();
    run.write_json("constraints.json", to_json(cs));
    run.write_json("factor_constraints.json", to_json(reduced));
    std::cout << "constraints: " << cs.rows() << " lattice rows -> " << reduced.rows() << " factor rows ("
              << (a.exact ? "exact" : "relaxed to cover training factors") << "), " << outside << " of "
              << path.xi.rows() << " training factors outside\n";
}

struct FitArgs {
    std::optional<std::uint64_t> seed;
    std::vector<std::size_t> hidden{32, 32};
    double lr = 0.01;
    double momentum = 0.9;
    int epochs = 3000;
    int patience = 300;
    double penalty = 100.0;
    double validation = 0.2;
    bool unconstrained = false;
};

void cmd_fit(const FitArgs& a, Run& run) {
    const auto seed = require_seed(a.seed, "fit-sde");
    const auto data = load_market(run);
    const auto path = load_factor_path(run);
    std::optional<FactorConstraintSystem> fcs;
    if (!a.unconstrained) fcs = factor_constraints_from_json(read_json(run.input("factor_constraints.json")));
    SdeTrainingConfig sc;
    sc.hidden = a.hidden;
    sc.learning_rate = a.lr;
    sc.momentum = a.momentum;
    sc.max_epochs = a.epochs;
    sc.patience = a.patience;
    sc.penalty = a.penalty;
    sc.validation_fraction = a.validation;
    sc.seed = seed;
    const auto fit = fit_sde(state_matrix(data, path), fcs, sc);
    run.write_json("sde.json", fit.model.to_json());
    run.write("loss.csv", [&](std::ostream& os) {
        os << "epoch,train,validation\n";
        os.precision(17);
        for (std::size_t e = 0; e < fit.history.train.size(); ++e)
            os << e << ',' << fit.history.train[e] << ',' << fit.history.validation[e] << '\n';
    });
    std::cout << "fit-sde: " << fit.history.train.size() << " epochs, best " << fit.history.best_epoch
              << " (validation loss " << fmt(fit.history.validation[fit.history.best_epoch]) << ")\n";
}

struct SimArgs {
    std::optional<std::uint64_t> seed;
    std::size_t steps = 252;
    std::size_t paths = 1;
    std::string mode = "gaussian";
};

void cmd_simulate(const SimArgs& a, Run& run) {
    const auto seed = require_seed(a.seed, "simulate");
    if (a.mode != "gaussian" && a.mode != "bootstrap") throw ConfigError("simulate: --mode is gaussian or bootstrap");
    if (a.paths == 0) throw ConfigError("simulate: --paths must be positive");
    const auto sde = NeuralSde::from_json(read_json(run.input("sde.json")));
    const auto data = load_market(run);
    const auto path = load_factor_path(run);
    const auto states = state_matrix(data, path);
    Eigen::MatrixXd res;
    SimulationOptions so;
    if (a.mode == "bootstrap") {
        res = residuals(sde, states);
        so.mode = InnovationMode::Bootstrap;
        so.residuals = &res;
    }
    const Eigen::VectorXd x0 = states.row(states.rows() - 1).transpose();
    run.write("simulated.csv", [&](std::ostream& os) {
        os << "path,step,log_spot";
        for (std::size_t j = 1; j <= sde.d(); ++j) os << ",xi" << j;
        os << '\n';
        os.precision(17);
        for (std::size_t p = 0; p < a.paths; ++p) {
            const auto X = simulate(sde, x0, a.steps, splitmix64(seed + p), so);
            for (Eigen::Index t = 0; t < X.rows(); ++t) {
                os << p << ',' << t;
                for (Eigen::Index c = 0; c < X.cols(); ++c) os << ',' << X(t, c);
                os << '\n';
            }
        }
    });
    std::cout << "simulate: " << a.paths << " path(s) of " << a.steps << " steps from " << path.dates.back().str()
              << " (" << a.mode << " innovations)\n";
}

struct CalArgs {
    std::size_t begin = 0;
    std::size_t end = 0;  // 0: through the last snapshot
    bool fast = false;
    bool warm = false;
};

void cmd_calibrate(const CalArgs& a, Run& run) {
    const auto data = load_market(run);
    const std::size_t end = a.end == 0 ? data.size() : a.end;
    if (a.begin >= end || end > data.size()) throw ConfigError("calibrate-heston: empty or out-of-range date window");
    const CalibrationConfig base = a.fast ? BacktestConfig::fast_calibration() : CalibrationConfig{};
    std::vector<DatedHeston> out;
    double worst = 0.0;
    for (std::size_t t = a.begin; t < end; ++t) {
        auto cc = base;
        if (a.warm && !out.empty()) cc.warm_start = out.back().result.params;
        auto r = calibrate_heston(data.snapshots[t], cc);
        if (r.mape > 1e-4 && (cc.warm_start || a.fast)) {
            auto cold = calibrate_heston(data.snapshots[t], CalibrationConfig{});
            if (cold.objective < r.objective) r = cold;
        }
        worst = std::max(worst, r.mape);
        out.push_back({data.snapshots[t].date(), r});
    }
    run.write("heston.csv", [&](std::ostream& os) { write_heston_csv(os, out); });
    std::cout << "calibrate-heston: " << out.size() << " snapshots, max MAPE " << fmt(100.0 * worst, 4) << "%\n";
}

struct BacktestArgs {
    std::vector<std::string> methods{"delta_bs", "delta_nsde_mv", "dv_bs", "dxi_sens", "dxi_mv", "dv_heston", "mv_direct"};
    std::vector<int> dt{1};
    std::vector<std::string> portfolios{"naive"};
    std::vector<double> deltas = default_deltas();
    std::vector<double> tenor_days = default_tenor_days();
    std::size_t test_begin = 0;  // 0: the day after the last decoded date
    std::size_t test_end = 0;    // 0: through the last snapshot
    std::string heston;          // calibrated parameters CSV; empty: calibrate in-run
    std::string revaluation = "auto";
    double lambda = 0.99;
    int warmup = 252;
    double hedge_tenor_days = 213.0;
};

void cmd_backtest(const BacktestArgs& a, Run& run) {
    const auto data = load_market(run);
    const auto model = load_factor_model(run);
    const auto path = load_factor_path(run);
    const auto methods = parse_list<HedgeMethod>(a.methods, hedge_method_from_string);
    const auto cats = parse_list<PortfolioCategory>(a.portfolios, portfolio_category_from_string);
    const auto portfolios = make_portfolios(cats, a.deltas, a.tenor_days);

    std::optional<NeuralSde> sde;
    const bool needs_sde = std::any_of(methods.begin(), methods.end(), [](HedgeMethod m) {
        return m == HedgeMethod::DeltaNsdeMv || m == HedgeMethod::DxiMv || m == HedgeMethod::MvDirect;
    });
    if (needs_sde) sde = NeuralSde::from_json(read_json(run.input("sde.json")));

    std::size_t begin = a.test_begin;
    if (begin == 0) begin = align(data, path).back() + 1;
    const std::size_t end = a.test_end == 0 ? data.size() : a.test_end;
    if (begin >= end || end > data.size()) throw ConfigError("backtest: no test dates in [" + std::to_string(begin) + ", " + std::to_string(end) + ")");

    BacktestConfig bc;
    bc.methods = methods;
    bc.lambda = a.lambda;
    bc.warmup = a.warmup;
    bc.hedge_tenor_days = a.hedge_tenor_days;
    if (a.revaluation == "auto") bc.revaluation = Revaluation::Auto;
    else if (a.revaluation == "truth") bc.revaluation = Revaluation::Truth;
    else if (a.revaluation == "snapshot") bc.revaluation = Revaluation::Snapshot;
    else throw ConfigError("backtest: --revaluation is auto, truth or snapshot");
    if (!a.heston.empty()) {
        std::ifstream hs(run.input_path(a.heston));
        bc.heston = read_heston_csv(hs);
    }
    if (a.dt.empty()) throw ConfigError("backtest: --dt needs at least one horizon");

    BacktestResult all;
    for (int dt : a.dt) {
        bc.dt = dt;
        auto r = run_backtest(data, begin, end, portfolios, model, sde ? &*sde : nullptr, bc);
        if (!bc.heston && !r.heston.empty()) bc.heston = r.heston;  // calibrate once for all horizons
        all.reports.insert(all.reports.end(), r.reports.begin(), r.reports.end());
        all.skipped.insert(all.skipped.end(), r.skipped.begin(), r.skipped.end());
        if (all.heston.empty()) all.heston = r.heston;
        all.hedge_index = r.hedge_index;
        all.warmup = r.warmup;
    }
    run.write("summary.csv", [&](std::ostream& os) { write_summary_csv(os, all); });
    run.write("ewma.csv", [&](std::ostream& os) { write_ewma_csv(os, all); });
    run.write("skipped.csv", [&](std::ostream& os) {
        os << "date,reason\n";
        for (const auto& s : all.skipped) os << s.date.str() << ",\"" << s.reason << "\"\n";
    });
    if (!all.heston.empty()) run.write("heston_used.csv", [&](std::ostream& os) { write_heston_csv(os, all.heston); });
    run.write_json("plot.json", plot_data(all));

    const auto pt = data.lattice->point(all.hedge_index);
    std::cout << "backtest: " << portfolios.size() << " portfolio(s), dates [" << begin << ", " << end << "), hedge option tau "
              << fmt(pt.tau * 365.0, 4) << "d m " << fmt(pt.m) << ", " << all.skipped.size() << " skipped\n";
    if (!portfolios.empty()) {
        const auto& name = portfolios.front().name;
        for (const auto& rep : all.reports)
            if (rep.portfolio == name)
                std::cout << "  " << std::left << std::setw(16) << to_string(rep.method) << " dt=" << rep.dt << "  "
                          << std::right << std::setw(9) << std::fixed << std::setprecision(3) << rep.overall_pct
                          << std::defaultfloat << "%  (" << name << ")\n";
    }
}

struct ReportArgs {
    std::string date;  // delta comparison date; empty: last snapshot
};

// Figure data: error tables, factor scatter with constraint lines and a
// cross-method delta comparison.
void cmd_report(const ReportArgs& a, Run& run) {
    json out;
    // summary table: method x dt -> statistics over portfolios
    {
        std::ifstream is(run.input("summary.csv"));
        std::string line;
        std::getline(is, line);
        if (line != "portfolio,method,dt,overall_pct") throw DataError("summary.csv: unexpected header");
        std::map<std::pair<std::string, int>, std::vector<double>> by;
        json rows = json::array();
        while (std::getline(is, line)) {
            if (line.empty()) continue;
            const auto c = split(line, ',');
            if (c.size() != 4) throw DataError("summary.csv: malformed row '" + line + "'");
            const double v = c[3] == "nan" ? std::nan("") : std::stod(c[3]);
            if (std::isfinite(v)) by[{c[1], std::stoi(c[2])}].push_back(v);
            rows.push_back({{"portfolio", c[0]}, {"method", c[1]}, {"dt", std::stoi(c[2])},
                            {"overall_pct", std::isfinite(v) ? json(v) : json(nullptr)}});
        }
        json table = json::array();
        std::cout << "report: overall hedging error across portfolios\n  method           dt   portfolios     mean   median\n";
        for (auto& [key, v] : by) {
            std::sort(v.begin(), v.end());
            double mean = 0.0;
            for (double x : v) mean += x;
            mean /= static_cast<double>(v.size());
            const double med = v.size() % 2 ? v[v.size() / 2] : 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
            table.push_back({{"method", key.first}, {"dt", key.second}, {"portfolios", v.size()}, {"mean_pct", mean}, {"median_pct", med}});
            std::cout << "  " << std::left << std::setw(16) << key.first << std::right << std::setw(3) << key.second
                      << std::setw(13) << v.size() << std::fixed << std::setprecision(3) << std::setw(9) << mean
                      << std::setw(9) << med << std::defaultfloat << '\n';
        }
        out["summary"] = rows;
        out["table"] = table;
    }
    if (run.has_input("factors.csv")) {
        const auto path = load_factor_path(run);
        json xi = json::array();
        for (Eigen::Index t = 0; t < path.xi.rows(); ++t) {
            json row = json::array();
            for (Eigen::Index j = 0; j < path.xi.cols(); ++j) row.push_back(path.xi(t, j));
            xi.push_back(row);
        }
        out["factor_scatter"]["dates"] = json::array();
        for (const auto& d : path.dates) out["factor_scatter"]["dates"].push_back(d.str());
        out["factor_scatter"]["xi"] = xi;
        if (run.has_input("factor_constraints.json")) {
            const auto fcs = factor_constraints_from_json(read_json(run.input("factor_constraints.json")));
            json lines = json::array();  // each row reads M_r . xi >= b_r
            for (std::size_t r = 0; r < fcs.rows(); ++r) {
                json m = json::array();
                for (Eigen::Index j = 0; j < fcs.M.cols(); ++j) m.push_back(fcs.M(r, j));
                lines.push_back({{"M", m}, {"b", fcs.b(r)}, {"kind", to_string(fcs.labels[r])}});
            }
            out["factor_scatter"]["constraints"] = lines;
        }
    }
    if (run.has_input("sde.json") && run.has_input("factor_model.json") && run.has_input("surfaces.csv")) {
        const auto data = load_market(run);
        const auto model = load_factor_model(run);
        const auto sde = NeuralSde::from_json(read_json(run.input("sde.json")));
        std::size_t t = data.size() - 1;
        if (!a.date.empty()) {
            const Date want = Date::parse(a.date);
            auto it = std::find_if(data.snapshots.begin(), data.snapshots.end(), [&](const SurfaceSnapshot& s) { return s.date() == want; });
            if (it == data.snapshots.end()) throw ConfigError("report: no snapshot on " + a.date);
            t = static_cast<std::size_t>(it - data.snapshots.begin());
        }
        const auto& snap = data.snapshots[t];
        const Eigen::VectorXd xi = model.project(snap.prices());
        const auto& L = *data.lattice;
        run.write("deltas.csv", [&](std::ostream& os) {
            os << "tau_days,m,delta_bs,delta_mm,delta_nsde_mv\n";
            os.precision(12);
            for (std::size_t i = 0; i < L.size(); ++i) {
                const auto p = L.point(i);
                const auto spec = OptionSpec::call(p.tau, p.m);
                os << p.tau * 365.0 << ',' << p.m << ',' << bs_greeks(spec, snap).delta << ','
                   << mm_delta(spec, snap, model, snap.spot()) << ',' << mm_mv_delta(spec, snap, model, sde, xi, snap.spot()) << '\n';
            }
        });
        out["delta_comparison_date"] = snap.date().str();
    }
    run.write_json("report.json", out);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mmhedge: factor market-model option hedging"};
    app.require_subcommand(1, 1);
    app.set_config("--config", "", "JSON config file (flags override it); a manifest.json replays its recorded run");
    app.config_formatter(std::make_shared<JsonConfig>(&app));
    app.allow_config_extras(CLI::config_extras_mode::error);

    std::map<std::string, std::pair<CLI::App*, Params>> cmds;
    std::map<std::string, std::pair<std::string, std::string>> dirs;
    auto add = [&](const std::string& name, const std::string& help) -> Params& {
        auto* sub = app.add_subcommand(name, help);
        sub->fallthrough();
        auto& entry = cmds.emplace(name, std::make_pair(sub, Params(sub))).first->second;
        auto& d = dirs[name];
        entry.second.add("in", d.first, "input directory");
        entry.second.add("out", d.second, "output directory");
        return entry.second;
    };

    GenArgs gen;
    {
        auto& p = add("gen", "simulate a Heston market and price the lattice daily");
        p.add("days", gen.days, "number of trading days");
        p.add("seed", gen.seed, "random seed (required)");
        p.add("tenor-days", gen.tenor_days, "lattice tenors in calendar days");
        p.add("ms", gen.ms, "lattice log-moneyness knots");
        p.add("s0", gen.p.S0, "initial spot");
        p.add("v0", gen.p.v0, "initial variance");
        p.add("theta", gen.p.theta, "long-run variance");
        p.add("kappa", gen.p.k, "mean reversion speed");
        p.add("sigma-v", gen.p.sigma, "vol of vol");
        p.add("rho", gen.p.rho, "spot-variance correlation");
        p.add("substeps", gen.substeps, "Euler substeps per day");
        p.add("start", gen.start, "first trading date (YYYY-MM-DD)");
    }
    DecodeArgs dec;
    {
        auto& p = add("decode", "extract factors from the surface history");
        p.add("d", dec.d, "number of factors");
        p.add("train-days", dec.train_days, "leading snapshots to decode (0 = all)");
    }
    ConstraintArgs con;
    {
        auto& p = add("constraints", "static-arbitrage polytope in factor space");
        p.flag("exact", con.exact, "do not loosen rows to cover the decoded factors");
    }
    FitArgs fit;
    {
        auto& p = add("fit-sde", "train the neural SDE on (log spot, factors)");
        p.add("seed", fit.seed, "initialization seed (required)");
        p.add("hidden", fit.hidden, "hidden layer widths");
        p.add("lr", fit.lr, "learning rate");
        p.add("momentum", fit.momentum, "momentum");
        p.add("epochs", fit.epochs, "maximum epochs");
        p.add("patience", fit.patience, "early-stopping patience");
        p.add("penalty", fit.penalty, "constraint penalty weight");
        p.add("validation-fraction", fit.validation, "trailing share held out");
        p.flag("unconstrained", fit.unconstrained, "train without the arbitrage polytope");
    }
    SimArgs sim;
    {
        auto& p = add("simulate", "simulate paths from the fitted SDE");
        p.add("seed", sim.seed, "random seed (required)");
        p.add("steps", sim.steps, "steps per path");
        p.add("paths", sim.paths, "number of paths");
        p.add("mode", sim.mode, "gaussian or bootstrap innovations");
    }
    CalArgs cal;
    {
        auto& p = add("calibrate-heston", "calibrate Heston per snapshot");
        p.add("begin", cal.begin, "first snapshot index");
        p.add("end", cal.end, "one past the last snapshot index (0 = all)");
        p.flag("fast", cal.fast, "reduced quadrature and evaluation budget");
        p.flag("warm-start", cal.warm, "start from the previous day's fit");
    }
    BacktestArgs bt;
    {
        auto& p = add("backtest", "hedge test portfolios and report errors");
        p.add("methods", bt.methods, "hedging methods");
        p.add("dt", bt.dt, "hedging horizons in trading days");
        p.add("portfolios", bt.portfolios, "portfolio categories");
        p.add("deltas", bt.deltas, "portfolio deltas");
        p.add("tenor-days", bt.tenor_days, "portfolio tenors in calendar days");
        p.add("test-begin", bt.test_begin, "first test snapshot index (0 = after the decoded window)");
        p.add("test-end", bt.test_end, "one past the last test snapshot (0 = all)");
        p.add("heston", bt.heston, "calibrated Heston CSV (default: calibrate in-run)");
        p.add("revaluation", bt.revaluation, "auto, truth or snapshot");
        p.add("lambda", bt.lambda, "EWMA decay");
        p.add("warmup", bt.warmup, "EWMA seed period left out of ewma.csv");
        p.add("hedge-tenor-days", bt.hedge_tenor_days, "hedging option tenor");
    }
    ReportArgs rep;
    {
        auto& p = add("report", "tables and plot data from earlier runs");
        p.add("date", rep.date, "delta comparison date (default: last snapshot)");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::cerr << "mmhedge: " << e.what() << "\n\n";
        const auto subs = app.get_subcommands();
        std::cerr << (subs.empty() ? app.help() : subs.front()->help());
        return 2;
    }

    const std::string name = app.get_subcommands().front()->get_name();
    try {
        auto& [sub, params] = cmds.at(name);
        Run run(name, dirs[name].first, dirs[name].second, params.resolved());
        std::optional<std::uint64_t> seed;
        if (name == "gen") seed = gen.seed, cmd_gen(gen, run);
        else if (name == "decode") cmd_decode(dec, run);
        else if (name == "constraints") cmd_constraints(con, run);
        else if (name == "fit-sde") seed = fit.seed, cmd_fit(fit, run);
        else if (name == "simulate") seed = sim.seed, cmd_simulate(sim, run);
        else if (name == "calibrate-heston") cmd_calibrate(cal, run);
        else if (name == "backtest") cmd_backtest(bt, run);
        else if (name == "report") cmd_report(rep, run);
        run.finish(seed);
    } catch (const Error& e) {
        static const char* family[] = {"config", "data", "numerical"};
        std::cerr << "mmhedge " << name << ": " << family[static_cast<int>(e.family())] << " error: " << e.what() << '\n';
        return exit_code(e.family());
    } catch (const fs::filesystem_error& e) {
        std::cerr << "mmhedge " << name << ": data error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "mmhedge " << name << ": internal error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
