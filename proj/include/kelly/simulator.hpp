#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "kelly/distributions.hpp"
#include "kelly/execution.hpp"

namespace kelly {

// Monte Carlo of repeated rebalanced play: each round draws fresh prices
// (renormalised to x0) and wealth is multiplied by 1 + sum_l f_l k_l.
//
// Replication r draws from its own streams keyed by (seed, r), so results do
// not depend on scheduling, and every fraction vector evaluated under the
// same (seed, rounds, replications) sees the same draws (common random
// numbers).

struct SimConfig {
    std::size_t rounds = 1000;
    std::size_t replications = 200;
    std::uint64_t seed = 0;
    Eigen::VectorXd f;
};

struct GrowthEstimate {
    double g_mean = 0.0;
    // Sample standard deviation of per-replication growth over
    // sqrt(replications); 0 for a single replication.
    double g_stderr = 0.0;
};

// Paired (common random number) estimate of g(a) - g(b).
struct GrowthDifference {
    double mean = 0.0;
    double std_error = 0.0;
};

struct GridSearchResult {
    Eigen::VectorXd f;
    std::size_t index = 0;
    std::vector<GrowthEstimate> estimates;
};

// V_0 = 1, ..., V_rounds along replication 0 of `seed`.
std::vector<double> wealth_path(const PortfolioModel& portfolio, const Eigen::VectorXd& f, std::size_t rounds,
                                std::uint64_t seed);

// Per-replication growth (1/N) sum ln(1 + f.k) for each fraction vector:
// rows are replications, columns follow `fractions`. This is the kernel the
// estimators below reduce.
Eigen::MatrixXd replication_growth(const PortfolioModel& portfolio, const std::vector<Eigen::VectorXd>& fractions,
                                   std::size_t rounds, std::size_t replications, std::uint64_t seed,
                                   Execution exec = Execution::Parallel);

GrowthEstimate growth_rate_mc(const PortfolioModel& portfolio, const SimConfig& config,
                              Execution exec = Execution::Parallel);

GrowthDifference growth_difference_mc(const PortfolioModel& portfolio, const Eigen::VectorXd& a,
                                      const Eigen::VectorXd& b, const SimConfig& config,
                                      Execution exec = Execution::Parallel);

// Grid point with the largest estimated growth; config.f is ignored.
GridSearchResult argmax_growth_grid(const PortfolioModel& portfolio, const std::vector<Eigen::VectorXd>& grid,
                                    const SimConfig& config, Execution exec = Execution::Parallel);

// Mean and standard error of a column of replication values.
GrowthEstimate summarize(const Eigen::Ref<const Eigen::VectorXd>& per_replication);

}  // namespace kelly
