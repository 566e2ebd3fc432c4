#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "kelly/distributions.hpp"

namespace kelly {

// Independent generator for (seed, stream, lane). Streams index Monte Carlo
// replications; lanes index assets inside one replication.
std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream, std::uint64_t lane);

// Draws per-round joint prices for a portfolio. One instance per stream;
// not thread safe, but instances for different streams are independent.
class PriceSampler {
public:
    PriceSampler(const PortfolioModel& portfolio, std::uint64_t seed, std::uint64_t stream);

    std::size_t size() const { return models_.size(); }

    // Writes one joint draw of prices into out (size() entries).
    void draw_prices(std::span<double> out);
    // Writes one joint draw of returns (x - x0) / x0 into out.
    void draw_returns(std::span<double> out);

private:
    void draw_log_moves(std::span<double> out);

    enum class Kind { Independent, Bivariate, Empirical };

    std::vector<AssetModel> models_;
    Kind kind_ = Kind::Independent;
    double rho_ = 0.0;
    double rho_complement_ = 1.0;
    const PriceMatrix* samples_ = nullptr;
    std::vector<std::mt19937_64> lanes_;
    std::vector<std::normal_distribution<double>> normals_;
    std::uniform_int_distribution<Eigen::Index> row_pick_;
};

}  // namespace kelly
