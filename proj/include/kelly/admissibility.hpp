#pragma once

#include <Eigen/Dense>

#include "kelly/distributions.hpp"

namespace kelly {

// Smallest per-round wealth factor 1 + sum f_l k_l the model can produce.
// Log-normal assets are bounded by the corners of the truncated log-space
// box (+-10 sigma per asset), which is the domain quadrature integrates
// over; empirical samples are bounded by their rows. A nonzero fraction in
// a Gaussian asset gives -infinity.
double min_wealth_factor(const Eigen::VectorXd& f, const PortfolioModel& portfolio);

bool is_admissible(const Eigen::VectorXd& f, const PortfolioModel& portfolio);

// Return bounds of one log-normal asset on the truncated box.
struct ReturnBounds {
    double lo = 0.0;
    double hi = 0.0;
};
ReturnBounds truncated_return_bounds(const AssetModel& asset);

}  // namespace kelly
