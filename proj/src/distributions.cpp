#include "kelly/distributions.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include <fmt/format.h>

#include "kelly/errors.hpp"
#include "kelly/random.hpp"

namespace kelly {

namespace {

constexpr double inv_sqrt_2pi = 0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2;

const BivariateLogNormal& require_bivariate(const PortfolioModel& portfolio) {
    const auto* bv = std::get_if<BivariateLogNormal>(&portfolio.dependence);
    if (bv == nullptr) throw DomainError("portfolio is not bivariate log-normal");
    return *bv;
}

double relative_gap(double a, double b) {
    const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
    return std::abs(a - b) / scale;
}

}  // namespace

void validate(const AssetModel& model) {
    if (!(model.x0 > 0.0) || !std::isfinite(model.x0))
        throw ValidationError(fmt::format("x0 must be positive and finite, got {}", model.x0));
    if (!(model.sigma > 0.0) || !std::isfinite(model.sigma))
        throw ValidationError(fmt::format("sigma must be positive and finite, got {}", model.sigma));
    if (!std::isfinite(model.mu))
        throw ValidationError(fmt::format("mu must be finite, got {}", model.mu));
}

Eigen::VectorXd PortfolioModel::initial_prices() const {
    Eigen::VectorXd x0(static_cast<Eigen::Index>(assets.size()));
    for (std::size_t l = 0; l < assets.size(); ++l) x0[static_cast<Eigen::Index>(l)] = assets[l].x0;
    return x0;
}

void validate(const PortfolioModel& portfolio) {
    if (portfolio.assets.empty()) throw ValidationError("portfolio has no assets");
    for (std::size_t l = 0; l < portfolio.assets.size(); ++l) {
        try {
            validate(portfolio.assets[l]);
        } catch (const ValidationError& e) {
            throw ValidationError(fmt::format("asset {}: {}", l, e.what()));
        }
    }
    if (const auto* bv = std::get_if<BivariateLogNormal>(&portfolio.dependence)) {
        if (portfolio.size() != 2)
            throw ValidationError(fmt::format("bivariate dependence needs 2 assets, got {}", portfolio.size()));
        for (const auto& a : portfolio.assets)
            if (a.family != Family::LogNormal)
                throw ValidationError("bivariate dependence needs log-normal assets");
        if (!(bv->rho >= -1.0 && bv->rho <= 1.0))
            throw ValidationError(fmt::format("rho must lie in [-1, 1], got {}", bv->rho));
    } else if (const auto* es = std::get_if<EmpiricalSamples>(&portfolio.dependence)) {
        if (es->samples.rows() < 2)
            throw InsufficientDataError(fmt::format("need at least 2 samples, got {}", es->samples.rows()));
        if (es->samples.cols() != static_cast<Eigen::Index>(portfolio.size()))
            throw ValidationError(fmt::format("samples have {} columns for {} assets",
                                              es->samples.cols(), portfolio.size()));
        if (!es->samples.allFinite()) throw ValidationError("samples contain non-finite prices");
    }
}

void validate(const DiscreteOutcomeModel& model) {
    if (model.probabilities.empty()) throw ValidationError("outcome model has no outcomes");
    if (static_cast<std::size_t>(model.returns.rows()) != model.outcomes())
        throw ValidationError(fmt::format("{} probabilities but {} return rows", model.outcomes(),
                                          model.returns.rows()));
    if (model.returns.cols() < 1) throw ValidationError("outcome model has no assets");
    double total = 0.0;
    for (double p : model.probabilities) {
        if (!(p >= 0.0) || !std::isfinite(p))
            throw ValidationError(fmt::format("probability {} is not a nonnegative number", p));
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw ValidationError(fmt::format("probabilities sum to {:.17g}, not 1", total));
    if (!model.returns.allFinite()) throw ValidationError("outcome returns must be finite");
}

DiscreteOutcomeModel independent_product(const std::vector<DiscreteOutcomeModel>& games) {
    if (games.empty()) throw ValidationError("no games to combine");
    DiscreteOutcomeModel out;
    out.probabilities = {1.0};
    out.returns = Eigen::MatrixXd(1, 0);
    for (const auto& g : games) {
        validate(g);
        if (g.assets() != 1) throw ValidationError("independent_product combines single-asset games");
        DiscreteOutcomeModel next;
        const Eigen::Index cols = out.returns.cols() + 1;
        next.returns.resize(static_cast<Eigen::Index>(out.outcomes() * g.outcomes()), cols);
        Eigen::Index row = 0;
        for (std::size_t i = 0; i < out.outcomes(); ++i) {
            for (std::size_t j = 0; j < g.outcomes(); ++j, ++row) {
                next.probabilities.push_back(out.probabilities[i] * g.probabilities[j]);
                next.returns.row(row).head(cols - 1) = out.returns.row(static_cast<Eigen::Index>(i));
                next.returns(row, cols - 1) = g.returns(static_cast<Eigen::Index>(j), 0);
            }
        }
        out = std::move(next);
    }
    return out;
}

void validate(const MomentSet& moments) {
    const auto n = moments.x0.size();
    if (n == 0) throw ValidationError("empty moment set");
    if (moments.m1.size() != n || moments.m2.rows() != n || moments.m2.cols() != n)
        throw ValidationError("moment set dimensions disagree");
    if ((moments.x0.array() <= 0.0).any()) throw ValidationError("initial prices must be positive");
    if (!moments.m1.allFinite() || !moments.m2.allFinite())
        throw ValidationError("moments must be finite");
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j)
            if (relative_gap(moments.m2(i, j), moments.m2(j, i)) > 1e-12)
                throw ValidationError(fmt::format("second-moment matrix not symmetric at ({}, {})", i, j));
        const double mean_sq = moments.m1[i] * moments.m1[i];
        if (moments.m2(i, i) < mean_sq && relative_gap(moments.m2(i, i), mean_sq) > 1e-10)
            throw ValidationError(fmt::format("negative variance for asset {}", i));
    }
}

double pdf_lognormal(double x, const AssetModel& model) {
    if (model.family != Family::LogNormal) throw DomainError("pdf_lognormal needs a log-normal model");
    if (!(x > 0.0)) throw DomainError(fmt::format("log-normal density needs x > 0, got {}", x));
    const double s = model.sigma;
    const double z = (std::log(x) - std::log(model.x0) - model.mu + 0.5 * s * s) / s;
    return inv_sqrt_2pi / (s * x) * std::exp(-0.5 * z * z);
}

double pdf_gaussian(double x, const AssetModel& model) {
    if (model.family != Family::Gaussian) throw DomainError("pdf_gaussian needs a Gaussian model");
    const double sd = model.x0 * model.sigma;
    const double z = (x - model.x0 - model.x0 * model.mu) / sd;
    return inv_sqrt_2pi / sd * std::exp(-0.5 * z * z);
}

double pdf(double x, const AssetModel& model) {
    return model.family == Family::LogNormal ? pdf_lognormal(x, model) : pdf_gaussian(x, model);
}

double pdf_bivariate_lognormal(double x1, double x2, const PortfolioModel& portfolio) {
    const double rho = require_bivariate(portfolio).rho;
    if (std::abs(rho) >= 1.0)
        throw DegenerateDensityError("bivariate log-normal density is degenerate at |rho| = 1");
    if (!(x1 > 0.0) || !(x2 > 0.0))
        throw DomainError(fmt::format("bivariate density needs positive prices, got ({}, {})", x1, x2));
    const auto& a = portfolio.assets[0];
    const auto& b = portfolio.assets[1];
    const double d1 = std::log(x1) - std::log(a.x0) - a.mu + 0.5 * a.sigma * a.sigma;
    const double d2 = std::log(x2) - std::log(b.x0) - b.mu + 0.5 * b.sigma * b.sigma;
    const double one_m_rho2 = 1.0 - rho * rho;
    const double q = d1 * d1 / (2.0 * one_m_rho2 * a.sigma * a.sigma)
                     - rho * d1 * d2 / (one_m_rho2 * a.sigma * b.sigma)
                     + d2 * d2 / (2.0 * one_m_rho2 * b.sigma * b.sigma);
    const double norm = 1.0 / (2.0 * std::numbers::pi * a.sigma * b.sigma * std::sqrt(one_m_rho2));
    return norm / (x1 * x2) * std::exp(-q);
}

MomentSet analytic_moments(const PortfolioModel& portfolio) {
    validate(portfolio);
    if (std::holds_alternative<EmpiricalSamples>(portfolio.dependence))
        throw UnsupportedError("analytic moments are unavailable for empirical samples; use sample_moments");

    const auto n = static_cast<Eigen::Index>(portfolio.size());
    MomentSet m;
    m.x0 = portfolio.initial_prices();
    m.m1.resize(n);
    m.m2.resize(n, n);
    for (Eigen::Index l = 0; l < n; ++l) {
        const auto& a = portfolio.assets[static_cast<std::size_t>(l)];
        if (a.family == Family::LogNormal) {
            m.m1[l] = a.x0 * std::exp(a.mu);
            m.m2(l, l) = a.x0 * a.x0 * std::exp(2.0 * a.mu + a.sigma * a.sigma);
        } else {
            m.m1[l] = a.x0 * (1.0 + a.mu);
            m.m2(l, l) = a.x0 * a.x0 * ((1.0 + a.mu) * (1.0 + a.mu) + a.sigma * a.sigma);
        }
    }
    const auto* bv = std::get_if<BivariateLogNormal>(&portfolio.dependence);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            double cross = m.m1[i] * m.m1[j];
            if (bv != nullptr) {
                const auto& a = portfolio.assets[0];
                const auto& b = portfolio.assets[1];
                cross = a.x0 * b.x0 * std::exp(a.mu + b.mu + bv->rho * a.sigma * b.sigma);
            }
            m.m2(i, j) = m.m2(j, i) = cross;
        }
    }
    return m;
}

MomentSet sample_moments(const PriceMatrix& samples, const Eigen::VectorXd& x0) {
    if (samples.rows() < 2)
        throw InsufficientDataError(fmt::format("need at least 2 samples, got {}", samples.rows()));
    if (samples.cols() != x0.size())
        throw ValidationError(fmt::format("samples have {} columns but {} initial prices", samples.cols(),
                                          x0.size()));
    if (!samples.allFinite()) throw ValidationError("samples contain non-finite prices");

    // Fixed-size row blocks summed in block order: the result does not
    // depend on the thread count.
    constexpr Eigen::Index block = 4096;
    const Eigen::Index n = samples.rows();
    const Eigen::Index d = samples.cols();
    const Eigen::Index blocks = (n + block - 1) / block;
    std::vector<Eigen::VectorXd> s1(static_cast<std::size_t>(blocks), Eigen::VectorXd::Zero(d));
    std::vector<Eigen::MatrixXd> s2(static_cast<std::size_t>(blocks), Eigen::MatrixXd::Zero(d, d));

#pragma omp parallel for schedule(static)
    for (Eigen::Index b = 0; b < blocks; ++b) {
        auto& v1 = s1[static_cast<std::size_t>(b)];
        auto& v2 = s2[static_cast<std::size_t>(b)];
        const Eigen::Index end = std::min(n, (b + 1) * block);
        for (Eigen::Index r = b * block; r < end; ++r) {
            for (Eigen::Index i = 0; i < d; ++i) {
                const double xi = samples(r, i);
                v1[i] += xi;
                for (Eigen::Index j = i; j < d; ++j) v2(i, j) += xi * samples(r, j);
            }
        }
    }

    MomentSet m;
    m.x0 = x0;
    m.m1 = Eigen::VectorXd::Zero(d);
    m.m2 = Eigen::MatrixXd::Zero(d, d);
    for (Eigen::Index b = 0; b < blocks; ++b) {
        m.m1 += s1[static_cast<std::size_t>(b)];
        m.m2 += s2[static_cast<std::size_t>(b)];
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    m.m1 *= inv_n;
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = i; j < d; ++j) m.m2(j, i) = (m.m2(i, j) *= inv_n);
    return m;
}

PriceMatrix sample(const PortfolioModel& portfolio, std::uint64_t seed, std::size_t n) {
    validate(portfolio);
    if (n < 1) throw ValidationError("sample count must be at least 1");
    PriceSampler sampler(portfolio, seed, 0);
    PriceMatrix out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(portfolio.size()));
    for (Eigen::Index r = 0; r < out.rows(); ++r)
        sampler.draw_prices(std::span<double>(out.row(r).data(), portfolio.size()));
    return out;
}

AssetModel gaussian_limit(const AssetModel& model) {
    if (model.family != Family::LogNormal) throw DomainError("gaussian_limit needs a log-normal model");
    AssetModel g = model;
    g.family = Family::Gaussian;
    return g;
}

}  // namespace kelly
