#pragma once

#include <Eigen/Dense>

#include "kelly/distributions.hpp"
#include "kelly/flags.hpp"

namespace kelly {

// Linear Kelly equations M f = b from the Taylor-expanded criterion:
// M(l, l') = E[k_l k_l'], b(l) = E[k_l].
struct KellySystem {
    Eigen::MatrixXd M;
    Eigen::VectorXd b;

    std::size_t size() const { return static_cast<std::size_t>(b.size()); }
};

// Symmetric within 1e-12 relative and positive semidefinite
// (smallest eigenvalue >= -1e-10 * largest).
void validate(const KellySystem& system);

enum class AllocationFlag {
    SingularSystem,
    FractionExceedsOne,
    TotalExceedsOne,
    NegativeFraction,
    TaylorRegimeWarning,
};

const char* to_string(AllocationFlag flag);

struct AllocationResult {
    Eigen::VectorXd f;
    double total = 0.0;
    FlagSet<AllocationFlag> flags;
};

// Thresholds used by solve() and allocate().
inline constexpr double direct_solve_max_condition = 1e12;
inline constexpr double rank_tolerance = 1e-10;
inline constexpr double residual_tolerance = 1e-10;
inline constexpr double taylor_mu_limit = 0.2;
inline constexpr double taylor_sigma_limit = 1.0;

KellySystem build_system(const MomentSet& moments);

// Independent assets: diagonal A_l, off-diagonal B_l B_l', b = B.
KellySystem build_system_independent(const Eigen::VectorXd& B, const Eigen::VectorXd& A);

// B = E[k], A = E[k^2] for one asset.
struct MomentIntegrals {
    double B = 0.0;
    double A = 0.0;
};

MomentIntegrals moment_integrals_lognormal(double mu, double sigma);
MomentIntegrals moment_integrals_gaussian(double mu, double sigma);
// Dispatches on the family.
MomentIntegrals moment_integrals(const AssetModel& asset);

// Direct solve when M is well conditioned; otherwise the minimum-norm
// least-squares solution with SingularSystem set. Throws NoSolutionError if
// b has a component outside the range of a singular M. Never clamps.
AllocationResult solve(const KellySystem& system);

// Moments (analytic or sampled) -> system -> solve, plus the Taylor-regime
// warning from the model parameters.
AllocationResult allocate(const PortfolioModel& portfolio);

// Single-asset closed forms.
double kelly_single_lognormal(double mu, double sigma);
double kelly_single_conventional(double mu, double sigma);
double kelly_single_gaussian(double mu, double sigma);
double kelly_single_moments(double m1, double m2, double x0);

}  // namespace kelly
