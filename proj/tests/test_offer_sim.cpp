#include <cmath>
#include <map>
#include <set>

#include <gtest/gtest.h>

#include "offerlab/offer_sim.hpp"

using namespace offerlab;

namespace {

GroundTruthConfig small_config(long n = 200) {
    auto c = GroundTruthConfig::reference_population();
    c.n_customers = n;
    c.seed = 11;
    return c;
}

}  // namespace

TEST(Profiles, CenteredCovariatesHaveZeroMean) {
    const auto p = draw_customer_profiles(small_config());
    double l = 0, d = 0;
    for (const auto& c : p) {
        EXPECT_GE(c.loyalty, 0.0);
        EXPECT_LE(c.loyalty, 1.0);
        l += c.loyalty_centered;
        d += c.demographic_centered;
    }
    EXPECT_NEAR(l, 0.0, 1e-10);
    EXPECT_NEAR(d, 0.0, 1e-10);
    EXPECT_EQ(p.front().customer_id, 1);
    EXPECT_EQ(p.back().customer_id, 200);
}

TEST(Simulate, DeterministicForSeed) {
    const auto a = simulate(small_config());
    const auto b = simulate(small_config());
    EXPECT_EQ(a.train, b.train);
    EXPECT_EQ(a.test, b.test);
    EXPECT_EQ(a.truth, b.truth);
    auto other = small_config();
    other.seed = 12;
    EXPECT_NE(simulate(other).train, a.train);
}

TEST(Simulate, ShapeInvariants) {
    const auto ds = simulate(small_config());
    EXPECT_EQ(ds.test.size(), 200u);
    std::map<long, long> counts;
    for (const auto& r : ds.train) {
        EXPECT_NO_THROW(r.attributes.validate());
        EXPECT_NE(r.outcome, Outcome::unlabeled);
        EXPECT_EQ(r.occasion, ++counts[r.customer_id]);
    }
    EXPECT_EQ(counts.size(), 200u);
    std::set<long> test_ids;
    for (const auto& r : ds.test) test_ids.insert(r.customer_id);
    EXPECT_EQ(test_ids.size(), 200u);
}

TEST(Simulate, ZeroCovarianceIsAPointMass) {
    auto c = small_config(50);
    c.mixture = {{1.0, {0.7, -0.2, -4.0}, Eigen::Matrix3d::Zero()}};
    c.loyalty_loadings.setZero();
    for (const auto& [id, b] : draw_true_coefficients(c)) {
        EXPECT_EQ(b.k, 0.7);
        EXPECT_EQ(b.beta_contract, -0.2);
        EXPECT_EQ(b.beta_discount, -4.0);
    }
}

TEST(Simulate, LoyaltyLoadingShiftsCoefficients) {
    auto c = small_config(50);
    c.mixture = {{1.0, {0.0, 0.0, 0.0}, Eigen::Matrix3d::Zero()}};
    c.loyalty_loadings = {2.0, 0.0, -1.0};
    const auto profiles = draw_customer_profiles(c);
    const auto truth = draw_true_coefficients(c, profiles);
    for (const auto& p : profiles) {
        EXPECT_DOUBLE_EQ(truth.at(p.customer_id).k, 2.0 * p.loyalty_centered);
        EXPECT_DOUBLE_EQ(truth.at(p.customer_id).beta_discount, -p.loyalty_centered);
    }
}

TEST(Simulate, AcceptanceFrequencyTracksTrueProbability) {
    auto c = small_config(2000);
    c.mixture = {{1.0, {0.4, 0.0, 0.0}, Eigen::Matrix3d::Zero()}};
    c.loyalty_loadings.setZero();
    c.offer_count_distribution = {{5, 1.0}};
    const auto ds = simulate(c);
    double acc = 0;
    for (const auto& r : ds.train) acc += r.outcome == Outcome::accepted;
    EXPECT_NEAR(acc / ds.train.size(), logistic(0.4), 0.01);
}

TEST(Simulate, OfferCountSharesFollowDistribution) {
    auto c = small_config(5000);
    c.offer_count_distribution = {{1, 0.7}, {3, 0.3}};
    const auto ds = generate_offers(c);
    std::map<long, int> counts;
    for (const auto& r : ds.train) ++counts[r.customer_id];
    int ones = 0;
    for (const auto& [id, n] : counts) {
        EXPECT_TRUE(n == 1 || n == 3);
        ones += n == 1;
    }
    EXPECT_NEAR(ones / 5000.0, 0.7, 0.02);
}

TEST(GroundTruthConfig, Validation) {
    auto c = small_config();
    c.mixture[0].weight = 0.9;
    EXPECT_THROW(c.validate(), ConfigError);
    c = small_config();
    c.mixture[0].covariance(0, 0) = -1;
    EXPECT_THROW(c.validate(), ConfigError);
    c = small_config();
    c.discount_max = 0.6;
    EXPECT_THROW(c.validate(), ConfigError);
    c = small_config();
    c.offer_count_distribution = {{0, 1.0}};
    EXPECT_THROW(c.validate(), ConfigError);
    EXPECT_NO_THROW(small_config().validate());
}

TEST(Summary, QuantilesAreTypeSeven) {
    std::vector<double> v{1, 2, 3, 4};
    EXPECT_DOUBLE_EQ(quantile_sorted(v, 0.25), 1.75);
    EXPECT_DOUBLE_EQ(quantile_sorted(v, 0.5), 2.5);
    EXPECT_DOUBLE_EQ(quantile_sorted(v, 1.0), 4.0);
    EXPECT_THROW(quantile_sorted({}, 0.5), InvalidArgument);
}

TEST(Summary, EmptyDatasetHasMarker) {
    const auto s = summarize_dataset({}, {});
    EXPECT_TRUE(s.empty);
    EXPECT_NE(s.to_text("t").find("(empty: no observations)"), std::string::npos);
}

TEST(Summary, CountsOutcomesAndColumns) {
    const auto ds = simulate(small_config());
    const auto s = summarize_dataset(ds.train, ds.customers);
    EXPECT_EQ(s.accepted + s.rejected, ds.train.size());
    ASSERT_EQ(s.columns.size(), 7u);
    EXPECT_EQ(s.columns[2].min, 1.0);
    EXPECT_EQ(s.columns[2].max, 1.0);
    EXPECT_GE(s.columns[4].min, -0.5);
    EXPECT_LE(s.columns[4].max, 0.5);
}
