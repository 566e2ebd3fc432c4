#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "kelly/distributions.hpp"
#include "kelly/simulator.hpp"

// Straightforward single-threaded versions of the parallel kernels. They
// exist to pin the optimised code down in tests and to give the benchmarks
// a baseline; nothing in the library calls them.
namespace kelly::reference {

// One replication at a time, one fraction vector at a time, accumulating
// ln(1 + f.k) round by round.
GrowthEstimate growth_rate_mc(const PortfolioModel& portfolio, const SimConfig& config);

// Row-by-row accumulation with no blocking.
MomentSet sample_moments(const PriceMatrix& samples, const Eigen::VectorXd& x0);

}  // namespace kelly::reference
