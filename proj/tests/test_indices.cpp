#include "paneldml/errors.hpp"
#include "paneldml/indices.hpp"
#include "paneldml/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace paneldml;

namespace {

AssetClassParams bond_stock_params() {
    Eigen::MatrixXd corr(2, 2);
    corr << 1.0, 0.1, 0.1, 1.0;
    return AssetClassParams::from_moments(0.02, {"bond", "stock"}, {0.04, 0.10}, {0.03, 0.25},
                                          corr);
}

/// Independent direct-arithmetic Sharpe: scalar loops, no shared code with
/// the library path.
double sharpe_by_hand(double w_rf, const std::vector<double>& w, const std::vector<double>& r,
                      double rf, const std::vector<std::vector<double>>& cov) {
    double expected = w_rf * rf;
    for (std::size_t j = 0; j < w.size(); ++j) expected += w[j] * r[j];
    double variance = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) {
        for (std::size_t k = 0; k < w.size(); ++k) variance += w[j] * w[k] * cov[j][k];
    }
    return (expected - rf) / std::sqrt(variance);
}

} // namespace

TEST_SUITE_BEGIN("indices");

TEST_CASE("fmp_flag is strict positivity") {
    CHECK(fmp_flag(0.0) == 0);
    CHECK(fmp_flag(0.01) == 1);
    CHECK_THROWS_AS(fmp_flag(-1.0), DataError);
}

TEST_CASE("risky_ratio divides risky by total") {
    CHECK(risky_ratio(0.0, 100.0) == doctest::Approx(0.0));
    CHECK(risky_ratio(25.0, 100.0) == doctest::Approx(0.25));
    CHECK_THROWS_AS(risky_ratio(100.0, 0.0), DataError);
    CHECK_THROWS_AS(risky_ratio(-5.0, 100.0), DataError);
    CHECK_THROWS_AS(risky_ratio(150.0, 100.0), DataError);
}

TEST_CASE("sharpe_ratio matches the hand computation on the reference portfolio") {
    const auto params = bond_stock_params();
    PortfolioWeights w;
    w.risk_free = 0.5;
    w.risky = {0.3, 0.2};

    const auto sharpe = sharpe_ratio(w, params);
    REQUIRE(sharpe.has_value());

    // E(R_p) = 0.5*0.02 + 0.3*0.04 + 0.2*0.10 = 0.042
    // var    = 0.3^2 0.03^2 + 0.2^2 0.25^2 + 2*0.3*0.2*0.1*0.03*0.25
    const double variance = 0.09 * 0.0009 + 0.04 * 0.0625 + 2.0 * 0.3 * 0.2 * 0.1 * 0.03 * 0.25;
    CHECK(*sharpe == doctest::Approx(0.022 / std::sqrt(variance)).epsilon(1e-12));
    CHECK(variance == doctest::Approx(0.002671).epsilon(1e-12));
}

TEST_CASE("sharpe_ratio degenerate cases") {
    const auto params = bond_stock_params();

    SUBCASE("all risk-free is undefined") {
        PortfolioWeights w;
        w.risk_free = 1.0;
        w.risky = {0.0, 0.0};
        CHECK_FALSE(sharpe_ratio(w, params).has_value());
    }
    SUBCASE("single risky class at the risk-free rate scores zero") {
        Eigen::MatrixXd corr(1, 1);
        corr << 1.0;
        const auto p =
            AssetClassParams::from_moments(0.02, {"bond"}, {0.02}, {0.03}, corr);
        PortfolioWeights w;
        w.risk_free = 0.0;
        w.risky = {1.0};
        CHECK(*sharpe_ratio(w, p) == doctest::Approx(0.0));
    }
    SUBCASE("single risky class reduces to (R - Rf)/sd exactly") {
        Eigen::MatrixXd corr(1, 1);
        corr << 1.0;
        const auto p = AssetClassParams::from_moments(0.02, {"stock"}, {0.10}, {0.25}, corr);
        PortfolioWeights w;
        w.risk_free = 0.0;
        w.risky = {1.0};
        CHECK(*sharpe_ratio(w, p) == doctest::Approx((0.10 - 0.02) / 0.25).epsilon(1e-15));
    }
    SUBCASE("class mismatch") {
        PortfolioWeights w;
        w.risk_free = 0.5;
        w.risky = {0.5};
        CHECK_THROWS_AS(sharpe_ratio(w, params), DataError);
    }
    SUBCASE("weights must sum to one") {
        PortfolioWeights w;
        w.risk_free = 0.5;
        w.risky = {0.3, 0.3};
        CHECK_THROWS_AS(sharpe_ratio(w, params), DataError);
    }
}

TEST_CASE("sharpe_ratio is invariant to scaling all asset amounts") {
    const auto params = bond_stock_params();
    Rng rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        const double rf_amt = rng.uniform01() * 100.0;
        const std::vector<double> risky{rng.uniform01() * 50.0, rng.uniform01() * 80.0 + 1.0};
        const double scale = 1.0 + rng.uniform01() * 9.0;

        const auto w1 = weights_from_amounts(rf_amt, risky);
        const auto w2 = weights_from_amounts(rf_amt * scale, {risky[0] * scale, risky[1] * scale});
        const auto s1 = sharpe_ratio(w1, params);
        const auto s2 = sharpe_ratio(w2, params);
        REQUIRE(s1.has_value());
        REQUIRE(s2.has_value());
        CHECK(*s1 == doctest::Approx(*s2).epsilon(1e-9));
    }
}

TEST_CASE("fa_index averages the four flags") {
    CHECK(fa_index({0, 0, 0, 0}) == doctest::Approx(0.0));
    CHECK(fa_index({1, 1, 1, 1}) == doctest::Approx(1.0));
    CHECK(fa_index({1, 0, 1, 0}) == doctest::Approx(0.5));
    CHECK_THROWS_AS(fa_index({2, 0, 0, 0}), DataError);
}

TEST_CASE("entropy_weights on the hand-computed 4x2 binary fixture") {
    Eigen::MatrixXd m(4, 2);
    m << 1, 1,
         0, 1,
         0, 0,
         0, 0;
    // Column A: p = (1,0,0,0), entropy 0, d = 1.
    // Column B: p = (.5,.5,0,0), entropy ln2/ln4 = 0.5, d = 0.5.
    // Weights: (2/3, 1/3).
    const auto w = entropy_weights(m);
    REQUIRE(w.size() == 2);
    CHECK(w[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(w[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("entropy_weights symmetry and degenerate columns") {
    SUBCASE("identical columns split evenly") {
        Eigen::MatrixXd m(3, 2);
        m << 1, 1, 0, 0, 1, 1;
        const auto w = entropy_weights(m);
        CHECK(w[0] == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(w[1] == doctest::Approx(0.5).epsilon(1e-12));
    }
    SUBCASE("a constant positive column gets zero weight") {
        Eigen::MatrixXd m(4, 2);
        m << 1, 1, 1, 0, 1, 1, 1, 0;
        const auto w = entropy_weights(m);
        CHECK(w[0] == doctest::Approx(0.0));
        CHECK(w[1] == doctest::Approx(1.0));
    }
    SUBCASE("all-constant indicators are an error") {
        Eigen::MatrixXd m(3, 2);
        m << 1, 2, 1, 2, 1, 2;
        CHECK_THROWS_WITH_AS(entropy_weights(m), doctest::Contains("entropy weights undefined"),
                             EstimationError);
    }
    SUBCASE("negative values are rejected") {
        Eigen::MatrixXd m(2, 1);
        m << 1, -1;
        CHECK_THROWS_AS(entropy_weights(m), DataError);
    }
    SUBCASE("needs two rows") {
        Eigen::MatrixXd m(1, 1);
        m << 1;
        CHECK_THROWS_AS(entropy_weights(m), DataError);
    }
}

TEST_CASE("entropy_weights: permutation invariance and unit sum on random binary matrices") {
    Rng rng(23);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 4 + static_cast<int>(rng.uniform_below(30));
        Eigen::MatrixXd m(n, 4);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < 4; ++j) m(i, j) = rng.uniform01() < 0.4 ? 1.0 : 0.0;
        }
        // Guarantee variation in every column.
        for (int j = 0; j < 4; ++j) {
            m(0, j) = 1.0;
            m(1, j) = 0.0;
        }

        const auto w = entropy_weights(m);
        double sum = 0.0;
        for (const double x : w) {
            CHECK(x >= 0.0);
            sum += x;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));

        // Reverse the rows: same multiset of cell values per column.
        Eigen::MatrixXd rev = m.colwise().reverse();
        const auto w_rev = entropy_weights(rev);
        for (std::size_t j = 0; j < w.size(); ++j) CHECK(w[j] == w_rev[j]);
    }
}

TEST_CASE("fa_score combines flags with weights") {
    CHECK(fa_score({1, 1, 1, 1}, {0.1, 0.2, 0.3, 0.4}) == doctest::Approx(1.0));
    CHECK(fa_score({0, 0, 0, 0}, {0.1, 0.2, 0.3, 0.4}) == doctest::Approx(0.0));
    CHECK(fa_score({1, 0, 0, 0}, {0.4, 0.3, 0.2, 0.1}) == doctest::Approx(0.4));
    CHECK_THROWS_AS(fa_score({1, 0, 0, 0}, {0.5, 0.5}), DataError);
}

TEST_CASE("fa_index equals fa_score under uniform weights, exactly") {
    const std::vector<double> uniform{0.25, 0.25, 0.25, 0.25};
    for (int bits = 0; bits < 16; ++bits) {
        const InclusionFlags flags{(bits >> 0) & 1, (bits >> 1) & 1, (bits >> 2) & 1,
                                   (bits >> 3) & 1};
        CHECK(fa_index(flags) == fa_score(flags, uniform));
    }
}

TEST_CASE("sharpe_ratio agrees with an independent oracle on random portfolios") {
    Rng rng(99);
    for (int trial = 0; trial < 100; ++trial) {
        const double rf = rng.uniform01() * 0.05;
        const std::vector<double> returns{rf + rng.uniform01() * 0.05,
                                          rf + rng.uniform01() * 0.15};
        const std::vector<double> sds{0.01 + rng.uniform01() * 0.05,
                                      0.05 + rng.uniform01() * 0.3};
        const double corr = rng.uniform01() * 0.8 - 0.4;
        Eigen::MatrixXd corr_m(2, 2);
        corr_m << 1.0, corr, corr, 1.0;
        const auto params =
            AssetClassParams::from_moments(rf, {"bond", "stock"}, returns, sds, corr_m);

        const double a = rng.uniform01(), b = rng.uniform01(), c = rng.uniform01() + 0.05;
        const auto w = weights_from_amounts(a, {b, c});

        const std::vector<std::vector<double>> cov{
            {sds[0] * sds[0], corr * sds[0] * sds[1]},
            {corr * sds[0] * sds[1], sds[1] * sds[1]}};
        const double expected = sharpe_by_hand(w.risk_free, w.risky, returns, rf, cov);
        const auto actual = sharpe_ratio(w, params);
        REQUIRE(actual.has_value());
        CHECK(*actual == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_SUITE_END();
