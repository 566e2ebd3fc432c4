#include "kelly/admissibility.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "kelly/errors.hpp"
#include "kelly/exact_solver.hpp"

namespace kelly {

ReturnBounds truncated_return_bounds(const AssetModel& asset) {
    const double m = log_mean(asset);
    return {std::expm1(m - truncation_sigmas * asset.sigma), std::expm1(m + truncation_sigmas * asset.sigma)};
}

double min_wealth_factor(const Eigen::VectorXd& f, const PortfolioModel& portfolio) {
    if (static_cast<std::size_t>(f.size()) != portfolio.size())
        throw ValidationError(fmt::format("fraction vector has {} entries for {} assets", f.size(), portfolio.size()));
    if (!f.allFinite()) throw ValidationError("fraction vector is not finite");
    if (const auto* es = std::get_if<EmpiricalSamples>(&portfolio.dependence)) {
        const Eigen::VectorXd k = (es->samples.array().rowwise() / portfolio.initial_prices().transpose().array())
                                      .matrix() * f;
        return 1.0 + (k.array() - f.sum()).minCoeff();
    }
    double w = 1.0;
    for (std::size_t l = 0; l < portfolio.size(); ++l) {
        const auto& a = portfolio.assets[l];
        const double fl = f[static_cast<Eigen::Index>(l)];
        if (fl == 0.0) continue;
        // Gaussian prices are unbounded in both directions.
        if (a.family != Family::LogNormal) return -std::numeric_limits<double>::infinity();
        const auto [lo, hi] = truncated_return_bounds(a);
        w += std::min(fl * lo, fl * hi);
    }
    return w;
}

bool is_admissible(const Eigen::VectorXd& f, const PortfolioModel& portfolio) {
    return min_wealth_factor(f, portfolio) > 0.0;
}

}  // namespace kelly
