#include "kelly/reference.hpp"

#include <cmath>

#include "kelly/random.hpp"

namespace kelly::reference {

GrowthEstimate growth_rate_mc(const PortfolioModel& portfolio, const SimConfig& config) {
    Eigen::VectorXd g(static_cast<Eigen::Index>(config.replications));
    std::vector<double> k(portfolio.size());
    for (std::size_t r = 0; r < config.replications; ++r) {
        PriceSampler sampler(portfolio, config.seed, r);
        double acc = 0.0;
        for (std::size_t n = 0; n < config.rounds; ++n) {
            sampler.draw_returns(k);
            double w = 1.0;
            for (std::size_t l = 0; l < k.size(); ++l) w += config.f[static_cast<Eigen::Index>(l)] * k[l];
            acc += std::log(w);
        }
        g[static_cast<Eigen::Index>(r)] = acc * (1.0 / static_cast<double>(config.rounds));
    }
    return summarize(g);
}

MomentSet sample_moments(const PriceMatrix& samples, const Eigen::VectorXd& x0) {
    const Eigen::Index n = samples.rows();
    const Eigen::Index d = samples.cols();
    MomentSet m;
    m.x0 = x0;
    m.m1 = Eigen::VectorXd::Zero(d);
    m.m2 = Eigen::MatrixXd::Zero(d, d);
    for (Eigen::Index r = 0; r < n; ++r) {
        for (Eigen::Index i = 0; i < d; ++i) {
            m.m1[i] += samples(r, i);
            for (Eigen::Index j = 0; j < d; ++j) m.m2(i, j) += samples(r, i) * samples(r, j);
        }
    }
    m.m1 /= static_cast<double>(n);
    m.m2 /= static_cast<double>(n);
    return m;
}

}  // namespace kelly::reference
