#include "kelly/random.hpp"

#include <cmath>

#include "kelly/errors.hpp"

namespace kelly {

std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream, std::uint64_t lane) {
    auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xffffffffu); };
    auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
    std::seed_seq seq{lo(seed), hi(seed), lo(stream), hi(stream), lo(lane), hi(lane), 0x6b656c6cu};
    return std::mt19937_64(seq);
}

PriceSampler::PriceSampler(const PortfolioModel& portfolio, std::uint64_t seed, std::uint64_t stream)
    : models_(portfolio.assets) {
    if (const auto* bv = std::get_if<BivariateLogNormal>(&portfolio.dependence)) {
        kind_ = Kind::Bivariate;
        rho_ = bv->rho;
        rho_complement_ = std::sqrt(std::max(0.0, 1.0 - rho_ * rho_));
    } else if (const auto* es = std::get_if<EmpiricalSamples>(&portfolio.dependence)) {
        kind_ = Kind::Empirical;
        samples_ = &es->samples;
        row_pick_ = std::uniform_int_distribution<Eigen::Index>(0, es->samples.rows() - 1);
    }
    const std::size_t lanes = kind_ == Kind::Empirical ? 1 : models_.size();
    for (std::size_t l = 0; l < lanes; ++l) {
        lanes_.push_back(make_stream(seed, stream, l));
        normals_.emplace_back(0.0, 1.0);
    }
}

// For analytic families, out[l] receives the standardised innovation z_l
// (after correlation is applied).
void PriceSampler::draw_log_moves(std::span<double> out) {
    for (std::size_t l = 0; l < models_.size(); ++l) out[l] = normals_[l](lanes_[l]);
    if (kind_ == Kind::Bivariate) out[1] = rho_ * out[0] + rho_complement_ * out[1];
}

void PriceSampler::draw_prices(std::span<double> out) {
    if (kind_ == Kind::Empirical) {
        const Eigen::Index r = row_pick_(lanes_[0]);
        for (std::size_t l = 0; l < models_.size(); ++l) out[l] = (*samples_)(r, static_cast<Eigen::Index>(l));
        return;
    }
    draw_log_moves(out);
    for (std::size_t l = 0; l < models_.size(); ++l) {
        const auto& m = models_[l];
        if (m.family == Family::LogNormal)
            out[l] = m.x0 * std::exp(log_mean(m) + m.sigma * out[l]);
        else
            out[l] = m.x0 + m.x0 * m.mu + m.x0 * m.sigma * out[l];
    }
}

void PriceSampler::draw_returns(std::span<double> out) {
    if (kind_ == Kind::Empirical) {
        draw_prices(out);
        for (std::size_t l = 0; l < models_.size(); ++l) out[l] = out[l] / models_[l].x0 - 1.0;
        return;
    }
    draw_log_moves(out);
    for (std::size_t l = 0; l < models_.size(); ++l) {
        const auto& m = models_[l];
        if (m.family == Family::LogNormal)
            out[l] = std::expm1(log_mean(m) + m.sigma * out[l]);
        else
            out[l] = m.mu + m.sigma * out[l];
    }
}

}  // namespace kelly
