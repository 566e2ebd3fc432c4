#include "kelly/kelly_solver.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "kelly/errors.hpp"

namespace kelly {

const char* to_string(AllocationFlag flag) {
    switch (flag) {
        case AllocationFlag::SingularSystem: return "SingularSystem";
        case AllocationFlag::FractionExceedsOne: return "FractionExceedsOne";
        case AllocationFlag::TotalExceedsOne: return "TotalExceedsOne";
        case AllocationFlag::NegativeFraction: return "NegativeFraction";
        case AllocationFlag::TaylorRegimeWarning: return "TaylorRegimeWarning";
    }
    return "?";
}

void validate(const KellySystem& system) {
    const auto n = system.b.size();
    if (n == 0 || system.M.rows() != n || system.M.cols() != n)
        throw ValidationError("Kelly system must be square and match b");
    if (!system.M.allFinite() || !system.b.allFinite()) throw ValidationError("Kelly system is not finite");
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double a = system.M(i, j);
            const double c = system.M(j, i);
            if (std::abs(a - c) > 1e-12 * std::max({std::abs(a), std::abs(c), 1e-300}))
                throw ValidationError(fmt::format("M not symmetric at ({}, {})", i, j));
        }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(system.M, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (lo < -1e-10 * std::max(hi, 0.0))
        throw ValidationError(fmt::format("M is not positive semidefinite (eigenvalue {})", lo));
}

KellySystem build_system(const MomentSet& moments) {
    validate(moments);
    const auto n = moments.x0.size();
    KellySystem s;
    s.M.resize(n, n);
    s.b.resize(n);
    for (Eigen::Index l = 0; l < n; ++l) {
        const double r_l = moments.m1[l] / moments.x0[l];
        s.b[l] = r_l - 1.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            const double r_j = moments.m1[j] / moments.x0[j];
            s.M(l, j) = moments.m2(l, j) / (moments.x0[l] * moments.x0[j]) - r_l - r_j + 1.0;
        }
    }
    // m2 is only symmetric to tolerance; make M exactly so.
    s.M = 0.5 * (s.M + s.M.transpose()).eval();
    return s;
}

KellySystem build_system_independent(const Eigen::VectorXd& B, const Eigen::VectorXd& A) {
    if (B.size() != A.size() || B.size() == 0)
        throw ValidationError(fmt::format("B and A lengths differ ({} vs {})", B.size(), A.size()));
    KellySystem s;
    s.M = B * B.transpose();
    s.M.diagonal() = A;
    s.b = B;
    return s;
}

MomentIntegrals moment_integrals_lognormal(double mu, double sigma) {
    if (!(sigma > 0.0)) throw DomainError(fmt::format("sigma must be positive, got {}", sigma));
    const double B = std::expm1(mu);
    // 1 - 2e^mu + e^(2mu + sigma^2), written without the cancellation.
    const double A = B * B + std::exp(2.0 * mu) * std::expm1(sigma * sigma);
    return {B, A};
}

MomentIntegrals moment_integrals_gaussian(double mu, double sigma) {
    if (!(sigma > 0.0)) throw DomainError(fmt::format("sigma must be positive, got {}", sigma));
    return {mu, mu * mu + sigma * sigma};
}

MomentIntegrals moment_integrals(const AssetModel& asset) {
    return asset.family == Family::LogNormal ? moment_integrals_lognormal(asset.mu, asset.sigma)
                                             : moment_integrals_gaussian(asset.mu, asset.sigma);
}

namespace {

void set_fraction_flags(AllocationResult& r) {
    r.total = r.f.sum();
    if ((r.f.array() > 1.0).any()) r.flags.set(AllocationFlag::FractionExceedsOne);
    if (r.total > 1.0) r.flags.set(AllocationFlag::TotalExceedsOne);
    if ((r.f.array() < 0.0).any()) r.flags.set(AllocationFlag::NegativeFraction);
}

}  // namespace

AllocationResult solve(const KellySystem& system) {
    const auto n = system.b.size();
    if (n == 0 || system.M.rows() != n || system.M.cols() != n)
        throw ValidationError("Kelly system must be square and match b");
    if (!system.M.allFinite() || !system.b.allFinite()) throw ValidationError("Kelly system is not finite");

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(system.M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double smax = sv[0];
    const double smin = sv[n - 1];
    const bool direct = smin > 0.0 && smax / smin < direct_solve_max_condition;

    AllocationResult r;
    if (direct) {
        r.f = system.M.partialPivLu().solve(system.b);
    } else {
        svd.setThreshold(rank_tolerance);
        r.f = smax > 0.0 ? Eigen::VectorXd(svd.solve(system.b)) : Eigen::VectorXd::Zero(n);
        r.flags.set(AllocationFlag::SingularSystem);
    }

    const double residual = (system.M * r.f - system.b).norm();
    const double tol = residual_tolerance * (smax * r.f.norm() + system.b.norm());
    if (!(residual <= tol)) {
        if (!direct)
            throw NoSolutionError(
                fmt::format("b lies outside the range of the singular Kelly matrix (residual {:.3e})", residual),
                residual);
        throw InternalError(fmt::format("direct solve left residual {:.3e}", residual));
    }
    set_fraction_flags(r);
    return r;
}

AllocationResult allocate(const PortfolioModel& portfolio) {
    validate(portfolio);
    MomentSet moments;
    bool outside_taylor = false;
    if (const auto* es = std::get_if<EmpiricalSamples>(&portfolio.dependence)) {
        moments = sample_moments(es->samples, portfolio.initial_prices());
        for (Eigen::Index l = 0; l < moments.x0.size(); ++l) {
            const double mean_return = moments.m1[l] / moments.x0[l] - 1.0;
            const double var = std::max(0.0, moments.m2(l, l) - moments.m1[l] * moments.m1[l]);
            const double vol = std::sqrt(var) / moments.x0[l];
            outside_taylor |= std::abs(mean_return) > taylor_mu_limit || vol > taylor_sigma_limit;
        }
    } else {
        moments = analytic_moments(portfolio);
        for (const auto& a : portfolio.assets)
            outside_taylor |= std::abs(a.mu) > taylor_mu_limit || a.sigma > taylor_sigma_limit;
    }
    auto r = solve(build_system(moments));
    if (outside_taylor) r.flags.set(AllocationFlag::TaylorRegimeWarning);
    return r;
}

double kelly_single_lognormal(double mu, double sigma) {
    const auto [B, A] = moment_integrals_lognormal(mu, sigma);
    if (!(A > 0.0)) throw InternalError(fmt::format("non-positive log-normal denominator {}", A));
    return B / A;
}

double kelly_single_conventional(double mu, double sigma) {
    if (!(sigma > 0.0)) throw DomainError(fmt::format("sigma must be positive, got {}", sigma));
    return mu / (sigma * sigma);
}

double kelly_single_gaussian(double mu, double sigma) {
    const auto [B, A] = moment_integrals_gaussian(mu, sigma);
    return B / A;
}

double kelly_single_moments(double m1, double m2, double x0) {
    if (!(x0 > 0.0)) throw DomainError(fmt::format("x0 must be positive, got {}", x0));
    if (m2 < m1 * m1 && std::abs(m2 - m1 * m1) > 1e-10 * m1 * m1)
        throw ValidationError(fmt::format("invalid moments: <x^2> = {} < <x>^2 = {}", m2, m1 * m1));
    const double r1 = m1 / x0;
    const double r2 = m2 / (x0 * x0);
    const double num = r1 - 1.0;
    const double den = 1.0 + r2 - 2.0 * r1;
    if (num == 0.0) return 0.0;
    if (den <= 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + r2))
        throw UnboundedFractionError("degenerate moments: the expanded criterion has no finite optimum");
    return num / den;
}

}  // namespace kelly
