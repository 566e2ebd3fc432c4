#pragma once

#include <Eigen/Dense>

#include "kelly/admissibility.hpp"
#include "kelly/distributions.hpp"
#include "kelly/execution.hpp"
#include "kelly/flags.hpp"

namespace kelly {

// Solves the un-expanded criterion  E[k_l / (1 + sum f k)] = 0  by
// quadrature and root finding (continuous log-normal models) or by direct
// summation (finite outcome games).

// Left-hand side of the criterion at a given f, one entry per asset.
struct CriterionResidual {
    Eigen::VectorXd value;
    Eigen::VectorXd quadrature_error;

    double norm() const { return value.lpNorm<Eigen::Infinity>(); }
};

enum class ExactFlag { NoEdge, AtBoundary };

const char* to_string(ExactFlag flag);

struct ExactSingleResult {
    double f = 0.0;
    double residual = 0.0;
    int iterations = 0;
    FlagSet<ExactFlag> flags;
};

struct ExactMultiResult {
    Eigen::VectorXd f;
    double residual_norm = 0.0;
    int iterations = 0;
    FlagSet<ExactFlag> flags;
};

// Log-space truncation half-width, in standard deviations.
inline constexpr double truncation_sigmas = 10.0;
// Upper end of the single-asset search interval is 1 - boundary_epsilon.
inline constexpr double boundary_epsilon = 1e-9;
inline constexpr double single_residual_tolerance = 1e-10;
inline constexpr double multi_residual_tolerance = 1e-8;
inline constexpr double discrete_residual_tolerance = 1e-10;
inline constexpr int newton_max_iterations = 100;
inline constexpr int newton_max_halvings = 30;
inline constexpr double jacobian_step = 1e-6;
inline constexpr int max_exact_dimension = 3;

// ---- continuous, single asset ---------------------------------------------

// Needs a log-normal model and 0 <= f < 1.
CriterionResidual residual_single(double f, const AssetModel& model);

// E[ln(1 + f k)], same preconditions as residual_single.
double log_growth_single(double f, const AssetModel& model);

// Root of residual_single on [0, 1 - boundary_epsilon]. Returns 0 with NoEdge
// when E[k] <= 0, and 1 - boundary_epsilon with AtBoundary when the residual
// is still positive there.
ExactSingleResult solve_exact_single(const AssetModel& model);

// ---- continuous, up to three assets ---------------------------------------

CriterionResidual residual_multi(const Eigen::VectorXd& f, const PortfolioModel& portfolio,
                                 Execution exec = Execution::Parallel);

double log_growth_multi(const Eigen::VectorXd& f, const PortfolioModel& portfolio,
                        Execution exec = Execution::Parallel);

// Damped Newton on residual_multi with a forward-difference Jacobian. f0
// defaults to the linear solve's answer pulled into the admissible region.
ExactMultiResult solve_exact_multi(const PortfolioModel& portfolio);
ExactMultiResult solve_exact_multi(const PortfolioModel& portfolio, const Eigen::VectorXd& f0);

// Scales f toward 0 until the smallest wealth factor is at least `margin`.
Eigen::VectorXd project_admissible(const Eigen::VectorXd& f, const PortfolioModel& portfolio,
                                   double margin = 0.1);

// ---- discrete outcome games -----------------------------------------------

Eigen::VectorXd residual_discrete(const Eigen::VectorXd& f, const DiscreteOutcomeModel& model);
double log_growth_discrete(const Eigen::VectorXd& f, const DiscreteOutcomeModel& model);

// 0 with NoEdge when E[k] <= 0; 1 with AtBoundary when the criterion stays
// positive up to f = 1.
ExactSingleResult solve_discrete_single(const DiscreteOutcomeModel& model);

ExactMultiResult solve_discrete_multi(const DiscreteOutcomeModel& model);

}  // namespace kelly
