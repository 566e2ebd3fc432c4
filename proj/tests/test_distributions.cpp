#include <doctest.h>

#include <cmath>
#include <numbers>

#include "kelly/distributions.hpp"
#include "kelly/errors.hpp"
#include "kelly/random.hpp"
#include "test_support.hpp"

using namespace kelly;
using kelly::testing::gk_integral;
using kelly::testing::rel_close;

namespace {

double price_lo(const AssetModel& m) {
    return m.family == Family::LogNormal ? m.x0 * std::exp(log_mean(m) - 12.0 * m.sigma)
                                         : m.x0 * (1.0 + m.mu - 12.0 * m.sigma);
}
double price_hi(const AssetModel& m) {
    return m.family == Family::LogNormal ? m.x0 * std::exp(log_mean(m) + 12.0 * m.sigma)
                                         : m.x0 * (1.0 + m.mu + 12.0 * m.sigma);
}
double price_mid(const AssetModel& m) {
    return m.family == Family::LogNormal ? m.x0 * std::exp(log_mean(m)) : m.x0 * (1.0 + m.mu);
}

// integral of x^power * pdf over the (effectively full) support
double raw_moment(const AssetModel& m, int power) {
    auto f = [&](double x) { return std::pow(x, power) * pdf(x, m); };
    return gk_integral(f, price_lo(m), price_mid(m)) + gk_integral(f, price_mid(m), price_hi(m));
}

}  // namespace

TEST_CASE("lognormal density peak at x0 when mu = sigma^2 / 2") {
    const double sigma = 0.3;
    const AssetModel m{Family::LogNormal, 2.5, 0.5 * sigma * sigma, sigma};
    const double expected = 1.0 / (std::sqrt(2.0 * std::numbers::pi) * sigma * 2.5);
    CHECK(rel_close(pdf_lognormal(2.5, m), expected, 1e-14));
}

TEST_CASE("lognormal density rejects non-positive prices") {
    const AssetModel m{Family::LogNormal, 1.0, 0.1, 0.3};
    CHECK_THROWS_AS(pdf_lognormal(0.0, m), DomainError);
    CHECK_THROWS_AS(pdf_lognormal(-1.0, m), DomainError);
}

TEST_CASE("lognormal normalization and mean") {
    const AssetModel m{Family::LogNormal, 1.0, 0.1, 0.3};
    CHECK(std::abs(raw_moment(m, 0) - 1.0) <= 1e-8);

    const AssetModel m2{Family::LogNormal, 2.0, 0.05, 0.2};
    CHECK(std::abs(raw_moment(m2, 1) - 2.0 * std::exp(0.05)) <= 1e-6);
    CHECK(std::abs(raw_moment(m2, 1) - 2.10254) <= 1e-5);
}

TEST_CASE("every density normalizes and matches its analytic moments on the parameter grid") {
    for (auto family : {Family::LogNormal, Family::Gaussian}) {
        for (double mu : {0.0, 0.05, 0.2}) {
            for (double sigma : {0.1, 0.3, 0.8}) {
                CAPTURE(mu);
                CAPTURE(sigma);
                const AssetModel m{family, 1.7, mu, sigma};
                CHECK(std::abs(raw_moment(m, 0) - 1.0) <= 1e-6);
                PortfolioModel p;
                p.assets = {m};
                const auto mom = analytic_moments(p);
                CHECK(rel_close(raw_moment(m, 1), mom.m1[0], 1e-5));
                CHECK(rel_close(raw_moment(m, 2), mom.m2(0, 0), 1e-5));
            }
        }
    }
}

TEST_CASE("gaussian moments follow the shifted-centre convention") {
    PortfolioModel p;
    p.assets = {{Family::Gaussian, 3.0, 0.1, 0.5}};
    const auto m = analytic_moments(p);
    CHECK(rel_close(m.m1[0], 3.0 * 1.1, 1e-15));
    CHECK(rel_close(m.m2(0, 0), 9.0 * (1.21 + 0.25), 1e-15));
}

TEST_CASE("bivariate density factorizes at rho = 0") {
    auto p = kelly::testing::pair(0.1, 0.3, 0.05, 0.2, BivariateLogNormal{0.0});
    CHECK(rel_close(pdf_bivariate_lognormal(1.1, 0.9, p),
                    pdf_lognormal(1.1, p.assets[0]) * pdf_lognormal(0.9, p.assets[1]), 1e-12));
    for (int i = 0; i < 10; ++i) {
        for (int j = 0; j < 10; ++j) {
            const double x1 = 0.4 + 0.15 * i;
            const double x2 = 0.5 + 0.12 * j;
            CHECK(rel_close(pdf_bivariate_lognormal(x1, x2, p),
                            pdf_lognormal(x1, p.assets[0]) * pdf_lognormal(x2, p.assets[1]), 1e-12));
        }
    }
}

TEST_CASE("bivariate density normalization and cross moment at rho = 0.5") {
    auto p = kelly::testing::pair(0.1, 0.3, 0.05, 0.2, BivariateLogNormal{0.5});
    const auto& a = p.assets[0];
    const auto& b = p.assets[1];
    auto nested = [&](int power) {
        auto outer = [&](double x1) {
            auto inner = [&](double x2) { return std::pow(x1 * x2, power) * pdf_bivariate_lognormal(x1, x2, p); };
            return gk_integral(inner, price_lo(b), price_mid(b), 1e-10) +
                   gk_integral(inner, price_mid(b), price_hi(b), 1e-10);
        };
        return gk_integral(outer, price_lo(a), price_mid(a), 1e-10) +
               gk_integral(outer, price_mid(a), price_hi(a), 1e-10);
    };
    CHECK(std::abs(nested(0) - 1.0) <= 1e-6);
    const double cross = std::exp(0.1 + 0.05 + 0.5 * 0.3 * 0.2);
    CHECK(rel_close(nested(1), cross, 1e-5));
    CHECK(rel_close(analytic_moments(p).m2(0, 1), cross, 1e-14));
}

TEST_CASE("bivariate density errors") {
    auto p = kelly::testing::pair(0.1, 0.3, 0.05, 0.2, BivariateLogNormal{1.0});
    CHECK_THROWS_AS(pdf_bivariate_lognormal(1.0, 1.0, p), DegenerateDensityError);
    p.dependence = BivariateLogNormal{-1.0};
    CHECK_THROWS_AS(pdf_bivariate_lognormal(1.0, 1.0, p), DegenerateDensityError);
    p.dependence = BivariateLogNormal{0.3};
    CHECK_THROWS_AS(pdf_bivariate_lognormal(0.0, 1.0, p), DomainError);
    CHECK_THROWS_AS(pdf_bivariate_lognormal(1.0, -2.0, p), DomainError);
}

TEST_CASE("analytic moments") {
    SUBCASE("zero growth keeps the mean at x0") {
        auto p = kelly::testing::single(0.0, 0.4, 7.0);
        CHECK(analytic_moments(p).m1[0] == doctest::Approx(7.0).epsilon(1e-15));
    }
    SUBCASE("uncorrelated pair has zero covariance") {
        auto p = kelly::testing::pair(0.1, 0.3, 0.05, 0.2, BivariateLogNormal{0.0});
        const auto m = analytic_moments(p);
        CHECK(std::abs(m.m2(0, 1) - m.m1[0] * m.m1[1]) <= 1e-15);
    }
    SUBCASE("variance matches the extended-precision formula") {
        auto p = kelly::testing::single(0.1, 0.5);
        const auto m = analytic_moments(p);
        const long double var = std::exp(0.45L) - std::exp(0.2L);
        CHECK(rel_close(m.m2(0, 0) - m.m1[0] * m.m1[0], static_cast<double>(var), 1e-13));
    }
    SUBCASE("empirical samples are rejected") {
        PortfolioModel p = kelly::testing::single(0.1, 0.3);
        PriceMatrix s(2, 1);
        s << 1.0, 2.0;
        p.dependence = EmpiricalSamples{s};
        CHECK_THROWS_AS(analytic_moments(p), UnsupportedError);
    }
    SUBCASE("covariance sign follows rho") {
        auto p = kelly::testing::pair(0.1, 1.0, 0.05, 0.5, BivariateLogNormal{-0.8});
        const auto m = analytic_moments(p);
        CHECK(m.m2(0, 1) < m.m1[0] * m.m1[1]);
    }
}

TEST_CASE("sample moments on hand-computed data") {
    Eigen::VectorXd x0 = Eigen::VectorXd::Ones(2);
    PriceMatrix ones(2, 2);
    ones << 1, 1, 1, 1;
    auto a = sample_moments(ones, x0);
    CHECK(a.m1.isApprox(Eigen::VectorXd::Ones(2)));
    CHECK(a.m2.isApprox(Eigen::MatrixXd::Ones(2, 2)));

    PriceMatrix cross(2, 2);
    cross << 2, 0, 0, 2;
    auto b = sample_moments(cross, x0);
    CHECK(b.m1.isApprox(Eigen::VectorXd::Ones(2)));
    CHECK(b.m2(0, 1) == 0.0);
    CHECK(b.m2(0, 0) == 2.0);

    PriceMatrix one(1, 2);
    one << 1, 1;
    CHECK_THROWS_AS(sample_moments(one, x0), InsufficientDataError);
}

TEST_CASE("sample mean of a million lognormal draws is within 3 standard errors") {
    auto p = kelly::testing::single(0.1, 0.3);
    const auto draws = sample(p, 12345, 1'000'000);
    const auto m = sample_moments(draws, p.initial_prices());
    const auto exact = analytic_moments(p);
    const double var = exact.m2(0, 0) - exact.m1[0] * exact.m1[0];
    const double se = std::sqrt(var / 1e6);
    CHECK(std::abs(m.m1[0] - std::exp(0.1)) <= 3.0 * se);
}

TEST_CASE("sampler limits and construction") {
    SUBCASE("vanishing sigma gives a deterministic price") {
        auto p = kelly::testing::single(0.03, 1e-12, 4.0);
        const auto draws = sample(p, 3, 1000);
        for (Eigen::Index i = 0; i < draws.rows(); ++i) CHECK(rel_close(draws(i, 0), 4.0 * std::exp(0.03), 1e-9));
    }
    SUBCASE("rho = 1 identical assets give identical columns") {
        auto p = kelly::testing::pair(0.05, 0.3, 0.05, 0.3, BivariateLogNormal{1.0});
        const auto draws = sample(p, 8, 5000);
        for (Eigen::Index i = 0; i < draws.rows(); ++i) CHECK(rel_close(draws(i, 0), draws(i, 1), 1e-12));
    }
    SUBCASE("rho = -1 mirrors the log moves") {
        auto p = kelly::testing::pair(0.0, 0.3, 0.0, 0.3, BivariateLogNormal{-1.0});
        const auto draws = sample(p, 8, 1000);
        const double m = log_mean(p.assets[0]);
        for (Eigen::Index i = 0; i < draws.rows(); ++i)
            CHECK(std::abs((std::log(draws(i, 0)) - m) + (std::log(draws(i, 1)) - m)) <= 1e-12);
    }
    SUBCASE("deterministic in seed") {
        auto p = kelly::testing::pair(0.05, 0.3, 0.01, 0.2);
        CHECK(sample(p, 5, 100) == sample(p, 5, 100));
        CHECK(sample(p, 5, 100) != sample(p, 6, 100));
    }
    SUBCASE("an asset's column does not depend on the other assets") {
        auto one = kelly::testing::single(0.05, 0.3);
        auto two = kelly::testing::pair(0.05, 0.3, 0.01, 0.2);
        CHECK(sample(one, 21, 200).col(0) == sample(two, 21, 200).col(0));
    }
    SUBCASE("empirical samples are resampled from their rows") {
        PortfolioModel p = kelly::testing::pair(0.0, 0.1, 0.0, 0.1);
        PriceMatrix s(3, 2);
        s << 1.0, 2.0, 3.0, 4.0, 5.0, 6.0;
        p.dependence = EmpiricalSamples{s};
        const auto draws = sample(p, 2, 300);
        for (Eigen::Index i = 0; i < draws.rows(); ++i) CHECK(draws(i, 1) == draws(i, 0) + 1.0);
    }
}

TEST_CASE("mean of a million draws within 3 standard errors, gaussian family") {
    PortfolioModel p;
    p.assets = {{Family::Gaussian, 10.0, 0.02, 0.1}};
    const auto draws = sample(p, 77, 1'000'000);
    const double se = 10.0 * 0.1 / 1e3;
    CHECK(std::abs(draws.col(0).mean() - 10.2) <= 3.0 * se);
}

TEST_CASE("gaussian limit") {
    const AssetModel m{Family::LogNormal, 3.0, 0.05, 0.2};
    const auto g = gaussian_limit(m);
    CHECK(g.family == Family::Gaussian);
    CHECK(g.x0 == m.x0);
    CHECK(g.mu == m.mu);
    CHECK(g.sigma == m.sigma);
    CHECK_THROWS_AS(gaussian_limit(g), DomainError);
}

TEST_CASE("density of the gaussian limit within 2% of peak at small sigma, not at large sigma") {
    auto gap = [](double sigma, double mu) {
        const AssetModel m{Family::LogNormal, 1.0, mu, sigma};
        const auto g = gaussian_limit(m);
        double sup = 0.0;
        double peak = 0.0;
        for (int i = 0; i <= 2000; ++i) {
            const double x = (1.0 - 4.0 * sigma) + 8.0 * sigma * i / 2000.0;
            if (x <= 0.0) continue;
            const double p = pdf_lognormal(x, m);
            peak = std::max(peak, p);
            sup = std::max(sup, std::abs(p - pdf_gaussian(x, g)));
        }
        return sup / peak;
    };
    CHECK(gap(0.01, 0.005) <= 0.02);
    CHECK(gap(0.5, 0.005) > 0.02);
}

TEST_CASE("model validation") {
    CHECK_THROWS_AS(validate(AssetModel{Family::LogNormal, 0.0, 0.1, 0.2}), ValidationError);
    CHECK_THROWS_AS(validate(AssetModel{Family::LogNormal, 1.0, 0.1, 0.0}), ValidationError);
    CHECK_THROWS_AS(validate(AssetModel{Family::LogNormal, 1.0, NAN, 0.2}), ValidationError);
    CHECK_NOTHROW(validate(AssetModel{Family::Gaussian, 1.0, -0.1, 0.2}));

    auto p = kelly::testing::pair(0.1, 0.3, 0.05, 0.2, BivariateLogNormal{1.5});
    CHECK_THROWS_AS(validate(p), ValidationError);
    p.dependence = BivariateLogNormal{0.5};
    p.assets[1].family = Family::Gaussian;
    CHECK_THROWS_AS(validate(p), ValidationError);
    auto three = p;
    three.assets[1].family = Family::LogNormal;
    three.assets.push_back(three.assets[0]);
    CHECK_THROWS_AS(validate(three), ValidationError);

    PortfolioModel e = kelly::testing::single(0.0, 0.1);
    PriceMatrix one(1, 1);
    one << 1.0;
    e.dependence = EmpiricalSamples{one};
    CHECK_THROWS_AS(validate(e), ValidationError);
    PriceMatrix bad(2, 1);
    bad << 1.0, INFINITY;
    e.dependence = EmpiricalSamples{bad};
    CHECK_THROWS_AS(validate(e), ValidationError);
    PriceMatrix wide(3, 2);
    wide.setOnes();
    e.dependence = EmpiricalSamples{wide};
    CHECK_THROWS_AS(validate(e), ValidationError);

    PortfolioModel empty;
    CHECK_THROWS_AS(validate(empty), ValidationError);
}

TEST_CASE("moment set validation") {
    MomentSet m;
    m.x0 = Eigen::VectorXd::Ones(2);
    m.m1 = Eigen::VectorXd::Ones(2);
    m.m2 = Eigen::MatrixXd::Ones(2, 2);
    CHECK_NOTHROW(validate(m));
    m.m2(0, 1) = 1.1;
    CHECK_THROWS_AS(validate(m), ValidationError);
    m.m2(0, 1) = 1.0;
    m.m2(1, 1) = 0.9;
    CHECK_THROWS_AS(validate(m), ValidationError);
}

TEST_CASE("constructed moment sets are symmetric with nonnegative variance") {
    kelly::testing::Gen gen(99);
    for (int trial = 0; trial < 30; ++trial) {
        auto p = gen.independent(5);
        CHECK_NOTHROW(validate(analytic_moments(p)));
        CHECK_NOTHROW(validate(sample_moments(sample(p, static_cast<std::uint64_t>(trial), 50), p.initial_prices())));
    }
    for (double rho : {-1.0, -0.8, 0.0, 0.8, 1.0}) {
        auto p = kelly::testing::pair(0.1, 1.0, 0.05, 0.5, BivariateLogNormal{rho});
        CHECK_NOTHROW(validate(analytic_moments(p)));
    }
}

TEST_CASE("discrete outcome validation and products") {
    DiscreteOutcomeModel coin{{0.6, 0.4}, Eigen::MatrixXd(2, 1)};
    coin.returns << 1.0, -1.0;
    CHECK_NOTHROW(validate(coin));
    auto bad = coin;
    bad.probabilities = {0.6, 0.5};
    CHECK_THROWS_AS(validate(bad), ValidationError);
    bad.probabilities = {1.2, -0.2};
    CHECK_THROWS_AS(validate(bad), ValidationError);
    bad = coin;
    bad.returns = Eigen::MatrixXd(3, 1);
    CHECK_THROWS_AS(validate(bad), ValidationError);

    const auto both = independent_product({coin, coin});
    CHECK(both.outcomes() == 4);
    CHECK(both.assets() == 2);
    double total = 0.0;
    for (double q : both.probabilities) total += q;
    CHECK(std::abs(total - 1.0) <= 1e-15);
    CHECK(both.probabilities[0] == doctest::Approx(0.36));
}
