#pragma once

#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <vector>

#include <Eigen/Dense>

#include "mmhedge/dynamics.hpp"
#include "mmhedge/models.hpp"
#include "mmhedge/surface.hpp"

// Compute kernels with an OpenMP path and a serial reference. Both paths give
// bit-identical results: work is split into fixed units whose random streams
// depend only on the unit index, and partial results are combined in order.
namespace mmhedge::kernels {

enum class Exec { Serial, Parallel };

// Runs body(i) for i in [0, n), serially or as an OpenMP loop. The first
// exception thrown by any worker is rethrown on the calling thread.
template <class F>
void parallel_for(std::size_t n, Exec exec, F&& body) {
    if (exec == Exec::Serial) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::exception_ptr err;
    std::mutex mu;
    const long long count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic)
    for (long long i = 0; i < count; ++i) {
        try {
            body(static_cast<std::size_t>(i));
        } catch (...) {
            std::lock_guard lock(mu);
            if (!err) err = std::current_exception();
        }
    }
    if (err) std::rethrow_exception(err);
}

// Normalized Heston prices of the lattice under each day's parameters.
std::vector<Eigen::VectorXd> price_lattice_days(const std::vector<HestonParams>& params, const LiquidLattice& lattice,
                                                Exec exec);

// Independent tamed-Euler paths; path i uses seed splitmix64(seed + i).
std::vector<Eigen::MatrixXd> simulate_paths(const DiffusionModel& model, const Eigen::VectorXd& x0, std::size_t steps,
                                            std::size_t n_paths, std::uint64_t seed, const SimulationOptions& options,
                                            Exec exec);

struct CovarianceRatio {
    double estimate = 0.0;
    double std_error = 0.0;
    std::size_t samples = 0;
};

// Monte Carlo <dC, dS> / <dS, dS> for a call under Heston: one step of length h
// from (S0, v0), full revaluation of the call at tau - h.
CovarianceRatio heston_covariance_ratio(const HestonParams& p, double tau, double m, std::size_t samples, double h,
                                        std::uint64_t seed, Exec exec);

}  // namespace mmhedge::kernels
