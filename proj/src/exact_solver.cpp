#include "kelly/exact_solver.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>

#include <boost/math/tools/roots.hpp>
#include <fmt/format.h>

#include "kelly/errors.hpp"
#include "kelly/kelly_solver.hpp"
#include "kelly/quadrature.hpp"

namespace kelly {

const char* to_string(ExactFlag flag) {
    switch (flag) {
        case ExactFlag::NoEdge: return "NoEdge";
        case ExactFlag::AtBoundary: return "AtBoundary";
    }
    return "?";
}

namespace {

constexpr double inv_sqrt_2pi = 0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2;

// Log-space description of a continuous portfolio: v_l = ln(x_l / x0_l).
// Level 0 is marginal; for the bivariate model level 1 is conditional on
// level 0.
struct LogSpaceModel {
    std::size_t dim = 0;
    std::array<double, 3> mean{};
    std::array<double, 3> sd{};
    std::array<double, 3> lo{};
    std::array<double, 3> hi{};
    bool bivariate = false;
    double rho = 0.0;

    double k_lo(std::size_t l) const { return std::expm1(lo[l]); }
    double k_hi(std::size_t l) const { return std::expm1(hi[l]); }
};

LogSpaceModel log_space_model(const PortfolioModel& portfolio) {
    validate(portfolio);
    if (std::holds_alternative<EmpiricalSamples>(portfolio.dependence))
        throw UnsupportedError("exact continuous solving is not available for empirical samples");
    if (portfolio.size() > static_cast<std::size_t>(max_exact_dimension))
        throw UnsupportedError(fmt::format("exact solving supports at most {} assets, got {}",
                                           max_exact_dimension, portfolio.size()));
    LogSpaceModel s;
    s.dim = portfolio.size();
    for (std::size_t l = 0; l < s.dim; ++l) {
        const auto& a = portfolio.assets[l];
        if (a.family != Family::LogNormal)
            throw UnsupportedError(
                "exact solving needs log-normal assets: a Gaussian price reaches k <= -1 with positive "
                "probability and the criterion integral diverges");
        s.mean[l] = log_mean(a);
        s.sd[l] = a.sigma;
        s.lo[l] = s.mean[l] - truncation_sigmas * a.sigma;
        s.hi[l] = s.mean[l] + truncation_sigmas * a.sigma;
    }
    if (const auto* bv = std::get_if<BivariateLogNormal>(&portfolio.dependence)) {
        s.bivariate = true;
        s.rho = bv->rho;
    }
    return s;
}

// leaf(k, wealth_factor, out) writes m values.
using Leaf = std::function<void(const std::array<double, 3>&, double, double*)>;

class NestedIntegral {
public:
    NestedIntegral(const LogSpaceModel& model, const Eigen::VectorXd& f, Leaf leaf, std::size_t m,
                   double tol)
        : model_(model), f_(f), leaf_(std::move(leaf)), m_(m), tol_(tol) {}

    quad::Result run(Execution exec) const {
        std::array<double, 3> k{};
        return level(0, k, 1.0, 0.0, tol_ / 2.0, exec);
    }

private:
    // Integrates levels d.. given k for levels < d. Components [0, m) are
    // values, [m, 2m) carry the accumulated inner quadrature error.
    //
    // Each level gets tol of the remaining budget; the inner levels share the
    // rest, scaled by the outer density so that tail nodes, whose weight is
    // negligible, are integrated coarsely.
    quad::Result level(std::size_t d, std::array<double, 3> k, double partial, double z0, double tol,
                       Execution exec) const {
        double mean = model_.mean[d];
        double sd = model_.sd[d];
        if (model_.bivariate && d == 1) {
            mean += model_.rho * model_.sd[1] * z0;
            sd = model_.sd[1] * std::sqrt(std::max(0.0, 1.0 - model_.rho * model_.rho));
        }
        const bool last = d + 1 == model_.dim;
        const std::size_t width = 2 * m_;

        if (sd == 0.0) {
            // |rho| = 1: the conditional law is a point mass.
            quad::Result r;
            r.value.assign(width, 0.0);
            r.error.assign(width, 0.0);
            r.converged = true;
            std::vector<double> out(width, 0.0);
            eval_node(d, k, partial, mean, 1.0, z0, last, tol, out.data());
            for (std::size_t c = 0; c < width; ++c) r.value[c] = out[c];
            return r;
        }

        const double lo = std::max(model_.lo[d], mean - truncation_sigmas * sd);
        const double hi = std::min(model_.hi[d], mean + truncation_sigmas * sd);
        if (!(lo < hi)) {
            quad::Result r;
            r.value.assign(width, 0.0);
            r.error.assign(width, 0.0);
            r.converged = true;
            return r;
        }

        quad::Options opt;
        opt.abs_tol = tol;
        opt.initial_panels = d == 0 ? 8 : 4;
        opt.checked = m_;
        const double width_span = hi - lo;

        auto batch = [&](std::span<const double> nodes, std::span<double> out) {
            const auto count = static_cast<std::int64_t>(nodes.size());
            auto body = [&](std::int64_t i) {
                const double v = nodes[static_cast<std::size_t>(i)];
                const double z = (v - mean) / sd;
                const double weight = inv_sqrt_2pi / sd * std::exp(-0.5 * z * z);
                const double inner_tol = tol / std::max(weight * width_span, 1e-300);
                eval_node(d, k, partial, v, weight, d == 0 ? z : z0, last, inner_tol,
                          out.data() + static_cast<std::size_t>(i) * width);
            };
            if (exec == Execution::Parallel) {
#pragma omp parallel for schedule(static)
                for (std::int64_t i = 0; i < count; ++i) body(i);
            } else {
                for (std::int64_t i = 0; i < count; ++i) body(i);
            }
        };
        auto r = quad::integrate_batch(batch, width, lo, hi, opt);
        for (std::size_t c = 0; c < m_; ++c) {
            r.error[c] += r.value[m_ + c];
        }
        return r;
    }

    void eval_node(std::size_t d, std::array<double, 3> k, double partial, double v, double weight, double z0,
                   bool last, double inner_tol, double* out) const {
        k[d] = std::expm1(v);
        const double next = partial + f_[static_cast<Eigen::Index>(d)] * k[d];
        if (last) {
            leaf_(k, next, out);
            for (std::size_t c = 0; c < m_; ++c) out[c] *= weight;
            for (std::size_t c = m_; c < 2 * m_; ++c) out[c] = 0.0;
            return;
        }
        const auto inner = level(d + 1, k, next, z0, inner_tol, Execution::Serial);
        for (std::size_t c = 0; c < m_; ++c) {
            out[c] = weight * inner.value[c];
            out[m_ + c] = weight * inner.error[c];
        }
    }

    const LogSpaceModel& model_;
    const Eigen::VectorXd& f_;
    Leaf leaf_;
    std::size_t m_;
    double tol_;
};

double min_factor(const Eigen::VectorXd& f, const LogSpaceModel& s) {
    double w = 1.0;
    for (std::size_t l = 0; l < s.dim; ++l) {
        const double fl = f[static_cast<Eigen::Index>(l)];
        w += std::min(fl * s.k_lo(l), fl * s.k_hi(l));
    }
    return w;
}

void require_dimension(const Eigen::VectorXd& f, std::size_t n) {
    if (static_cast<std::size_t>(f.size()) != n)
        throw ValidationError(fmt::format("fraction vector has {} entries for {} assets", f.size(), n));
    if (!f.allFinite()) throw ValidationError("fraction vector is not finite");
}

void require_admissible(const Eigen::VectorXd& f, const LogSpaceModel& s) {
    const double w = min_factor(f, s);
    if (!(w > 0.0))
        throw AdmissibilityError(
            fmt::format("fractions are not admissible: wealth factor reaches {:.6g} on the quadrature domain", w));
}

CriterionResidual residual_on(const Eigen::VectorXd& f, const LogSpaceModel& s, double tol, Execution exec) {
    const std::size_t n = s.dim;
    NestedIntegral integral(
        s, f,
        [n](const std::array<double, 3>& k, double w, double* out) {
            for (std::size_t l = 0; l < n; ++l) out[l] = k[l] / w;
        },
        n, tol);
    const auto r = integral.run(exec);
    CriterionResidual out;
    out.value.resize(static_cast<Eigen::Index>(n));
    out.quadrature_error.resize(static_cast<Eigen::Index>(n));
    for (std::size_t l = 0; l < n; ++l) {
        out.value[static_cast<Eigen::Index>(l)] = r.value[l];
        out.quadrature_error[static_cast<Eigen::Index>(l)] = r.error[l];
    }
    return out;
}

double log_growth_on(const Eigen::VectorXd& f, const LogSpaceModel& s, double tol, Execution exec) {
    NestedIntegral integral(
        s, f, [](const std::array<double, 3>&, double w, double* out) { out[0] = std::log(w); }, 1, tol);
    return integral.run(exec).value[0];
}

constexpr double single_quadrature_tolerance = 1e-13;
constexpr double multi_quadrature_tolerance = 1e-9;

PortfolioModel single_portfolio(const AssetModel& model) {
    if (model.family != Family::LogNormal)
        throw UnsupportedError(
            "exact solving needs a log-normal model: the Gaussian criterion integral diverges");
    return PortfolioModel{{model}, Independent{}};
}

void require_single_fraction(double f) {
    if (!(f >= 0.0 && f < 1.0))
        throw AdmissibilityError(fmt::format("single-asset fraction must lie in [0, 1), got {}", f));
}

template <class F>
double bracketed_root(F&& fn, double lo, double hi, double f_lo, double f_hi, int& iterations) {
    std::uintmax_t iters = 200;
    auto tol = [](double a, double b) { return std::abs(b - a) <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(a)); };
    const auto [a, b] = boost::math::tools::toms748_solve(fn, lo, hi, f_lo, f_hi, tol, iters);
    iterations = static_cast<int>(iters);
    const double fa = fn(a);
    const double fb = fn(b);
    return std::abs(fa) <= std::abs(fb) ? a : b;
}

}  // namespace

CriterionResidual residual_single(double f, const AssetModel& model) {
    const auto s = log_space_model(single_portfolio(model));
    require_single_fraction(f);
    return residual_on(Eigen::VectorXd::Constant(1, f), s, single_quadrature_tolerance, Execution::Serial);
}

double log_growth_single(double f, const AssetModel& model) {
    const auto s = log_space_model(single_portfolio(model));
    require_single_fraction(f);
    return log_growth_on(Eigen::VectorXd::Constant(1, f), s, single_quadrature_tolerance, Execution::Serial);
}

ExactSingleResult solve_exact_single(const AssetModel& model) {
    const auto s = log_space_model(single_portfolio(model));
    auto r = [&](double f) {
        return residual_on(Eigen::VectorXd::Constant(1, f), s, single_quadrature_tolerance, Execution::Serial)
            .value[0];
    };
    ExactSingleResult out;
    if (std::expm1(model.mu) <= 0.0) {
        out.f = 0.0;
        out.residual = r(0.0);
        out.flags.set(ExactFlag::NoEdge);
        return out;
    }
    const double top = 1.0 - boundary_epsilon;
    const double r_top = r(top);
    if (r_top > 0.0) {
        out.f = top;
        out.residual = r_top;
        out.flags.set(ExactFlag::AtBoundary);
        return out;
    }
    const double r0 = r(0.0);
    out.f = bracketed_root(r, 0.0, top, r0, r_top, out.iterations);
    out.residual = r(out.f);
    return out;
}

CriterionResidual residual_multi(const Eigen::VectorXd& f, const PortfolioModel& portfolio, Execution exec) {
    const auto s = log_space_model(portfolio);
    require_dimension(f, s.dim);
    require_admissible(f, s);
    return residual_on(f, s, multi_quadrature_tolerance, exec);
}

double log_growth_multi(const Eigen::VectorXd& f, const PortfolioModel& portfolio, Execution exec) {
    const auto s = log_space_model(portfolio);
    require_dimension(f, s.dim);
    require_admissible(f, s);
    return log_growth_on(f, s, multi_quadrature_tolerance, exec);
}

Eigen::VectorXd project_admissible(const Eigen::VectorXd& f, const PortfolioModel& portfolio, double margin) {
    const auto s = log_space_model(portfolio);
    require_dimension(f, s.dim);
    // The wealth factor at t f is 1 + t (w(f) - 1); pick the largest t <= 1
    // keeping it at least `margin`.
    const double drop = 1.0 - min_factor(f, s);
    if (drop <= 1.0 - margin) return f;
    return f * ((1.0 - margin) / drop);
}

ExactMultiResult solve_exact_multi(const PortfolioModel& portfolio) {
    const auto linear = allocate(portfolio);
    return solve_exact_multi(portfolio, project_admissible(linear.f, portfolio));
}

ExactMultiResult solve_exact_multi(const PortfolioModel& portfolio, const Eigen::VectorXd& f0) {
    const auto s = log_space_model(portfolio);
    require_dimension(f0, s.dim);
    const auto n = static_cast<Eigen::Index>(s.dim);

    ExactMultiResult out;
    bool any_edge = false;
    for (const auto& a : portfolio.assets) any_edge |= std::expm1(a.mu) > 0.0;
    if (!any_edge) {
        out.f = Eigen::VectorXd::Zero(n);
        out.residual_norm = residual_on(out.f, s, multi_quadrature_tolerance, Execution::Parallel).norm();
        out.flags.set(ExactFlag::NoEdge);
        return out;
    }

    require_admissible(f0, s);
    auto residual = [&](const Eigen::VectorXd& f) {
        return residual_on(f, s, multi_quadrature_tolerance, Execution::Parallel).value;
    };

    Eigen::VectorXd f = f0;
    Eigen::VectorXd r = residual(f);
    for (int it = 0; it < newton_max_iterations; ++it) {
        out.iterations = it;
        if (r.lpNorm<Eigen::Infinity>() <= multi_residual_tolerance) {
            out.f = f;
            out.residual_norm = r.lpNorm<Eigen::Infinity>();
            return out;
        }
        Eigen::MatrixXd J(n, n);
        for (Eigen::Index l = 0; l < n; ++l) {
            double h = jacobian_step * std::max(1.0, std::abs(f[l]));
            Eigen::VectorXd fp = f;
            fp[l] += h;
            if (!(min_factor(fp, s) > 0.0)) {
                h = -h;
                fp[l] = f[l] + h;
            }
            J.col(l) = (residual(fp) - r) / h;
        }
        const Eigen::VectorXd step = -J.completeOrthogonalDecomposition().solve(r);
        double t = 1.0;
        bool accepted = false;
        for (int k = 0; k <= newton_max_halvings; ++k, t *= 0.5) {
            const Eigen::VectorXd trial = f + t * step;
            if (!(min_factor(trial, s) > 0.0)) continue;
            const Eigen::VectorXd rt = residual(trial);
            if (rt.norm() < r.norm()) {
                f = trial;
                r = rt;
                accepted = true;
                break;
            }
        }
        if (!accepted)
            throw ConvergenceError(
                fmt::format("damped Newton stalled at residual {:.3e}", r.lpNorm<Eigen::Infinity>()),
                r.lpNorm<Eigen::Infinity>());
    }
    if (r.lpNorm<Eigen::Infinity>() <= multi_residual_tolerance) {
        out.f = f;
        out.residual_norm = r.lpNorm<Eigen::Infinity>();
        out.iterations = newton_max_iterations;
        return out;
    }
    throw ConvergenceError(fmt::format("no convergence in {} iterations (residual {:.3e})", newton_max_iterations,
                                       r.lpNorm<Eigen::Infinity>()),
                           r.lpNorm<Eigen::Infinity>());
}

// ---- discrete ---------------------------------------------------------------

namespace {

Eigen::VectorXd wealth_factors(const Eigen::VectorXd& f, const DiscreteOutcomeModel& model) {
    if (f.size() != model.returns.cols())
        throw ValidationError(
            fmt::format("fraction vector has {} entries for {} assets", f.size(), model.returns.cols()));
    Eigen::VectorXd w = (model.returns * f).array() + 1.0;
    if (!((w.array() > 0.0).all()))
        throw AdmissibilityError(
            fmt::format("fractions are not admissible: wealth factor reaches {:.6g}", w.minCoeff()));
    return w;
}

Eigen::VectorXd probabilities(const DiscreteOutcomeModel& model) {
    return Eigen::Map<const Eigen::VectorXd>(model.probabilities.data(),
                                             static_cast<Eigen::Index>(model.probabilities.size()));
}

}  // namespace

Eigen::VectorXd residual_discrete(const Eigen::VectorXd& f, const DiscreteOutcomeModel& model) {
    validate(model);
    const Eigen::VectorXd w = wealth_factors(f, model);
    const Eigen::VectorXd weights = probabilities(model).cwiseQuotient(w);
    return model.returns.transpose() * weights;
}

double log_growth_discrete(const Eigen::VectorXd& f, const DiscreteOutcomeModel& model) {
    validate(model);
    const Eigen::VectorXd w = wealth_factors(f, model);
    return probabilities(model).dot(w.array().log().matrix());
}

ExactSingleResult solve_discrete_single(const DiscreteOutcomeModel& model) {
    validate(model);
    if (model.assets() != 1) throw ValidationError("solve_discrete_single needs a single-asset game");
    const Eigen::VectorXd k = model.returns.col(0);
    auto r = [&](double f) { return residual_discrete(Eigen::VectorXd::Constant(1, f), model)[0]; };

    ExactSingleResult out;
    if (probabilities(model).dot(k) <= 0.0) {
        out.f = 0.0;
        out.residual = r(0.0);
        out.flags.set(ExactFlag::NoEdge);
        return out;
    }
    // 1 + f k > 0 for every outcome bounds f above by -1/k over losing outcomes.
    double upper = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < k.size(); ++i)
        if (k[i] < 0.0) upper = std::min(upper, -1.0 / k[i]);
    const double top = upper > 1.0 ? 1.0 : std::nextafter(upper, 0.0);
    const double r_top = r(top);
    if (r_top > 0.0) {
        out.f = top;
        out.residual = r_top;
        out.flags.set(ExactFlag::AtBoundary);
        return out;
    }
    out.f = bracketed_root(r, 0.0, top, r(0.0), r_top, out.iterations);
    out.residual = r(out.f);
    return out;
}

ExactMultiResult solve_discrete_multi(const DiscreteOutcomeModel& model) {
    validate(model);
    const auto n = static_cast<Eigen::Index>(model.assets());
    const Eigen::VectorXd p = probabilities(model);
    ExactMultiResult out;

    const Eigen::VectorXd edge = model.returns.transpose() * p;
    if ((edge.array() <= 0.0).all()) {
        out.f = Eigen::VectorXd::Zero(n);
        out.residual_norm = edge.lpNorm<Eigen::Infinity>();
        out.flags.set(ExactFlag::NoEdge);
        return out;
    }

    Eigen::VectorXd f = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd r = edge;
    for (int it = 0; it < newton_max_iterations; ++it) {
        out.iterations = it;
        if (r.lpNorm<Eigen::Infinity>() <= discrete_residual_tolerance) break;
        const Eigen::VectorXd w = wealth_factors(f, model);
        const Eigen::VectorXd weights = p.cwiseQuotient(w.cwiseProduct(w));
        const Eigen::MatrixXd J = -(model.returns.transpose() * weights.asDiagonal() * model.returns);
        const Eigen::VectorXd step = -J.completeOrthogonalDecomposition().solve(r);
        double t = 1.0;
        bool accepted = false;
        for (int k = 0; k <= newton_max_halvings; ++k, t *= 0.5) {
            const Eigen::VectorXd trial = f + t * step;
            const Eigen::VectorXd wt = (model.returns * trial).array() + 1.0;
            if (!((wt.array() > 0.0).all())) continue;
            const Eigen::VectorXd rt = residual_discrete(trial, model);
            if (rt.norm() < r.norm()) {
                f = trial;
                r = rt;
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
    }
    if (r.lpNorm<Eigen::Infinity>() > discrete_residual_tolerance)
        throw ConvergenceError(fmt::format("discrete Newton did not converge (residual {:.3e})",
                                           r.lpNorm<Eigen::Infinity>()),
                               r.lpNorm<Eigen::Infinity>());
    out.f = f;
    out.residual_norm = r.lpNorm<Eigen::Infinity>();
    return out;
}

}  // namespace kelly
