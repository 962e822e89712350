#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "mmhedge/calibration.hpp"
#include "mmhedge/datagen.hpp"
#include "mmhedge/dynamics.hpp"
#include "mmhedge/factors.hpp"
#include "mmhedge/hedging.hpp"
#include "mmhedge/kernels.hpp"
#include "mmhedge/portfolio.hpp"

namespace mmhedge {

// 100 * sqrt(sum h^2 / sum u^2). NaN when both series are identically zero.
double overall_error(const std::vector<double>& pnl_hedged, const std::vector<double>& pnl_unhedged);

// EWMA of squared PnLs seeded with the first observation:
// E_1 = x_1^2, E_t = lambda E_{t-1} + (1 - lambda) x_t^2.
std::vector<double> ewma_variance(const std::vector<double>& pnl, double lambda);
// 100 * sqrt(E_hedged / E_unhedged) per date.
std::vector<double> ewma_error(const std::vector<double>& pnl_hedged, const std::vector<double>& pnl_unhedged,
                               double lambda);

enum class Revaluation {
    Auto,      // Truth when the dataset carries its generating path
    Truth,     // reprice each contract (fixed strike and expiry) under the generating model
    Snapshot,  // constant-maturity: same tau on the next snapshot, moneyness shifted by the spot move
};

struct BacktestConfig {
    std::vector<HedgeMethod> methods;
    int dt = 1;  // trading days per hedge period
    double lambda = 0.99;
    int warmup = 252;  // leading EWMA points flagged as seed period in reports
    double hedge_tenor_days = 213.0;
    double hedge_m = 0.0;
    double max_skip_fraction = 0.05;
    Revaluation revaluation = Revaluation::Auto;
    // Calibrated Heston parameters for the Heston methods; when absent
    // they are calibrated in-run with warm starts.
    std::optional<std::vector<DatedHeston>> heston;  // matched by date
    CalibrationConfig calibration = fast_calibration();
    double recalibrate_mape = 1e-4;  // fits above this MAPE are redone cold at the reference order
    kernels::Exec exec = kernels::Exec::Parallel;

    static CalibrationConfig fast_calibration();
};

struct HedgingErrorReport {
    std::string portfolio;
    PortfolioCategory category = PortfolioCategory::Outright;
    HedgeMethod method = HedgeMethod::None;
    int dt = 1;
    std::vector<Date> dates;  // opening dates
    std::vector<double> pnl_unhedged, pnl_hedged;
    std::vector<double> ewma_pct;
    double overall_pct = 0.0;
};

struct SkippedDate {
    Date date;
    std::string reason;
};

struct BacktestResult {
    std::vector<HedgingErrorReport> reports;  // portfolio-major, methods in config order
    std::vector<SkippedDate> skipped;
    std::vector<DatedHeston> heston;  // parameters used on each test date, if any
    std::size_t hedge_index = 0;      // lattice index of the hedging option
    int warmup = 0;
};

// Hedges every portfolio with every method on the dates [begin, end - dt) of
// `data` and records the one-period PnL of unhedged and hedged positions.
// `sde` may be null when no market-model MV method is requested.
BacktestResult run_backtest(const MarketDataset& data, std::size_t begin, std::size_t end,
                            const std::vector<Portfolio>& portfolios, const FactorModel& factors,
                            const DiffusionModel* sde, const BacktestConfig& config);

const HedgingErrorReport& find_report(const BacktestResult& r, const std::string& portfolio, HedgeMethod method);

// date,portfolio,category,method,dt,ewma_pct
void write_ewma_csv(std::ostream& os, const BacktestResult& r);
// portfolio,method,dt,overall_pct
void write_summary_csv(std::ostream& os, const BacktestResult& r);
// Error and PnL series per (portfolio, method) for plotting.
nlohmann::json plot_data(const BacktestResult& r, const std::vector<std::string>& portfolios = {});

}  // namespace mmhedge
