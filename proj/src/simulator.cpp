#include "kelly/simulator.hpp"

#include <cmath>

#include <fmt/format.h>

#include "kelly/admissibility.hpp"
#include "kelly/errors.hpp"
#include "kelly/random.hpp"

namespace kelly {

namespace {

void check_inputs(const PortfolioModel& portfolio, const std::vector<Eigen::VectorXd>& fractions,
                  std::size_t rounds, std::size_t replications) {
    validate(portfolio);
    if (rounds < 1) throw ValidationError("rounds must be at least 1");
    if (replications < 1) throw ValidationError("replications must be at least 1");
    for (std::size_t j = 0; j < fractions.size(); ++j) {
        const double w = min_wealth_factor(fractions[j], portfolio);
        if (!(w > 0.0))
            throw AdmissibilityError(fmt::format(
                "fraction vector {} is not admissible: wealth factor reaches {:.6g}", j, w));
    }
}

double wealth_factor(const Eigen::VectorXd& f, std::span<const double> k) {
    double w = 1.0;
    for (std::size_t l = 0; l < k.size(); ++l) w += f[static_cast<Eigen::Index>(l)] * k[l];
    if (!(w > 0.0)) throw InternalError(fmt::format("wealth factor {} is not positive", w));
    return w;
}

}  // namespace

std::vector<double> wealth_path(const PortfolioModel& portfolio, const Eigen::VectorXd& f, std::size_t rounds,
                                std::uint64_t seed) {
    check_inputs(portfolio, {f}, rounds, 1);
    PriceSampler sampler(portfolio, seed, 0);
    std::vector<double> k(portfolio.size());
    std::vector<double> path;
    path.reserve(rounds + 1);
    path.push_back(1.0);
    for (std::size_t n = 0; n < rounds; ++n) {
        sampler.draw_returns(k);
        path.push_back(path.back() * wealth_factor(f, k));
    }
    return path;
}

Eigen::MatrixXd replication_growth(const PortfolioModel& portfolio, const std::vector<Eigen::VectorXd>& fractions,
                                   std::size_t rounds, std::size_t replications, std::uint64_t seed,
                                   Execution exec) {
    check_inputs(portfolio, fractions, rounds, replications);
    const auto reps = static_cast<std::int64_t>(replications);
    const std::size_t points = fractions.size();
    Eigen::MatrixXd out(static_cast<Eigen::Index>(replications), static_cast<Eigen::Index>(points));
    const double inv_rounds = 1.0 / static_cast<double>(rounds);

    auto replicate = [&](std::int64_t r) {
        PriceSampler sampler(portfolio, seed, static_cast<std::uint64_t>(r));
        std::vector<double> k(portfolio.size());
        std::vector<double> acc(points, 0.0);
        for (std::size_t n = 0; n < rounds; ++n) {
            sampler.draw_returns(k);
            for (std::size_t j = 0; j < points; ++j) acc[j] += std::log(wealth_factor(fractions[j], k));
        }
        for (std::size_t j = 0; j < points; ++j)
            out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = acc[j] * inv_rounds;
    };

    if (exec == Execution::Parallel) {
        // Exceptions may not cross the parallel region; rethrow afterwards.
        std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 4)
        for (std::int64_t r = 0; r < reps; ++r) {
            try {
                replicate(r);
            } catch (...) {
#pragma omp critical
                if (!failure) failure = std::current_exception();
            }
        }
        if (failure) std::rethrow_exception(failure);
    } else {
        for (std::int64_t r = 0; r < reps; ++r) replicate(r);
    }
    return out;
}

GrowthEstimate summarize(const Eigen::Ref<const Eigen::VectorXd>& per_replication) {
    const auto n = per_replication.size();
    if (n == 0) throw ValidationError("no replications to summarize");
    GrowthEstimate e;
    e.g_mean = per_replication.mean();
    if (n > 1) {
        const double ss = (per_replication.array() - e.g_mean).square().sum();
        e.g_stderr = std::sqrt(ss / static_cast<double>(n - 1)) / std::sqrt(static_cast<double>(n));
    }
    return e;
}

GrowthEstimate growth_rate_mc(const PortfolioModel& portfolio, const SimConfig& config, Execution exec) {
    const auto g = replication_growth(portfolio, {config.f}, config.rounds, config.replications, config.seed, exec);
    return summarize(g.col(0));
}

GrowthDifference growth_difference_mc(const PortfolioModel& portfolio, const Eigen::VectorXd& a,
                                      const Eigen::VectorXd& b, const SimConfig& config, Execution exec) {
    const auto g = replication_growth(portfolio, {a, b}, config.rounds, config.replications, config.seed, exec);
    const auto s = summarize(g.col(0) - g.col(1));
    return {s.g_mean, s.g_stderr};
}

GridSearchResult argmax_growth_grid(const PortfolioModel& portfolio, const std::vector<Eigen::VectorXd>& grid,
                                    const SimConfig& config, Execution exec) {
    if (grid.empty()) throw ValidationError("fraction grid is empty");
    const auto g = replication_growth(portfolio, grid, config.rounds, config.replications, config.seed, exec);
    GridSearchResult out;
    for (std::size_t j = 0; j < grid.size(); ++j) {
        out.estimates.push_back(summarize(g.col(static_cast<Eigen::Index>(j))));
        if (out.estimates[j].g_mean > out.estimates[out.index].g_mean) out.index = j;
    }
    out.f = grid[out.index];
    return out;
}

}  // namespace kelly
