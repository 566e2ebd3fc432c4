#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace kelly {

enum class Family { LogNormal, Gaussian };

// Per-round price model of a single asset. mu and sigma are dimensionless:
// mu is the expected price shift over x0 and sigma the volatility over x0.
struct AssetModel {
    Family family = Family::LogNormal;
    double x0 = 1.0;
    double mu = 0.0;
    double sigma = 0.1;
};

void validate(const AssetModel& model);

// Rows are joint draws, columns are assets.
using PriceMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Independent {};

struct BivariateLogNormal {
    double rho = 0.0;
};

struct EmpiricalSamples {
    PriceMatrix samples;
};

using Dependence = std::variant<Independent, BivariateLogNormal, EmpiricalSamples>;

struct PortfolioModel {
    std::vector<AssetModel> assets;
    Dependence dependence = Independent{};

    std::size_t size() const { return assets.size(); }
    Eigen::VectorXd initial_prices() const;
};

void validate(const PortfolioModel& portfolio);

// Finite outcome game. returns(i, l) is the return of asset l in outcome i;
// a single-asset game has one column.
struct DiscreteOutcomeModel {
    std::vector<double> probabilities;
    Eigen::MatrixXd returns;

    std::size_t outcomes() const { return probabilities.size(); }
    std::size_t assets() const { return static_cast<std::size_t>(returns.cols()); }
};

void validate(const DiscreteOutcomeModel& model);

// Joint table of independent games: one outcome per combination, with
// product probabilities.
DiscreteOutcomeModel independent_product(const std::vector<DiscreteOutcomeModel>& games);

// First and second raw moments of the price vector, plus the initial prices
// the returns are measured against.
struct MomentSet {
    Eigen::VectorXd x0;
    Eigen::VectorXd m1;
    Eigen::MatrixXd m2;

    std::size_t size() const { return static_cast<std::size_t>(x0.size()); }
};

// Symmetry within 1e-12 relative, nonnegative variance within 1e-10 relative.
void validate(const MomentSet& moments);

double pdf_lognormal(double x, const AssetModel& model);
double pdf_gaussian(double x, const AssetModel& model);
// Dispatches on model.family.
double pdf(double x, const AssetModel& model);

double pdf_bivariate_lognormal(double x1, double x2, const PortfolioModel& portfolio);

MomentSet analytic_moments(const PortfolioModel& portfolio);

// 1/N normalised raw moments (not the unbiased covariance).
MomentSet sample_moments(const PriceMatrix& samples, const Eigen::VectorXd& x0);

// n joint draws, deterministic in seed. Each asset owns a normal stream
// keyed by (seed, asset), so asset l's column does not depend on how many
// other assets are drawn alongside it.
PriceMatrix sample(const PortfolioModel& portfolio, std::uint64_t seed, std::size_t n);

// Gaussian with the same (x0, mu, sigma): centred at x0(1 + mu), standard
// deviation x0 sigma.
AssetModel gaussian_limit(const AssetModel& model);

// Mean and standard deviation of ln(x / x0) under a log-normal model.
inline double log_mean(const AssetModel& m) { return m.mu - 0.5 * m.sigma * m.sigma; }

}  // namespace kelly
