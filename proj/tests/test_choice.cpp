#include <cmath>
#include <limits>
#include <vector>

#include <gtest/gtest.h>

#include "offerlab/choice.hpp"

using namespace offerlab;

TEST(Utility, LinearInAttributes) {
    CoefficientVector b{0.5, -0.2, -3.0};
    OfferAttributes a{2.0, 0.1};
    EXPECT_DOUBLE_EQ(utility(b, a), 0.5 - 0.4 - 0.3);
    EXPECT_DOUBLE_EQ(utility({0, 0, 0}, a), 0.0);
}

TEST(Utility, RejectsNonFinite) {
    EXPECT_THROW(utility({std::nan(""), 0, 0}, {1, 0}), InvalidArgument);
    EXPECT_THROW(utility({0, 0, 0}, {std::numeric_limits<double>::infinity(), 0}), InvalidArgument);
}

TEST(Logistic, ZeroUtilityIsHalf) {
    EXPECT_DOUBLE_EQ(logistic(0.0), 0.5);
    EXPECT_DOUBLE_EQ(accept_probability({0, 0, 0}, {3, 0.2}), 0.5);
}

TEST(Logistic, SaturatesWithoutOverflow) {
    EXPECT_EQ(logistic(1e6), 1.0);
    EXPECT_GE(logistic(-1e6), 0.0);
    EXPECT_LT(logistic(-1e6), 1e-300);
    EXPECT_TRUE(std::isfinite(log_logistic(-1e4)));
    EXPECT_NEAR(log_logistic(-1e4), -1e4, 1e-9);
}

TEST(Logistic, SymmetryAndMonotone) {
    for (double u = -30; u <= 30; u += 0.75) {
        EXPECT_NEAR(logistic(u) + logistic(-u), 1.0, 1e-15);
        EXPECT_LT(logistic(u), logistic(u + 0.75) + 1e-300);
        EXPECT_NEAR(log_logistic(u), std::log(logistic(u)), 1e-12);
    }
}

TEST(ChoiceProbabilities, SingleAlternativeAgainstOutsideMatchesLogistic) {
    for (double u : {-5.0, -0.3, 0.0, 1.7, 12.0}) {
        std::vector<double> v{u};
        auto p = choice_probabilities(v, true);
        ASSERT_EQ(p.size(), 2u);
        EXPECT_NEAR(p[0], logistic(u), 1e-15);
        EXPECT_NEAR(p[0] + p[1], 1.0, 1e-15);
    }
}

TEST(ChoiceProbabilities, EqualUtilitiesGiveUniformShares) {
    std::vector<double> v{2.0, 2.0, 2.0};
    for (double p : choice_probabilities(v, false)) EXPECT_NEAR(p, 1.0 / 3.0, 1e-15);
}

TEST(ChoiceProbabilities, HugeUtilitiesStayFinite) {
    std::vector<double> v{1e5, 1e5 - 1.0, -1e5};
    auto p = choice_probabilities(v, true);
    double s = 0;
    for (double x : p) {
        EXPECT_TRUE(std::isfinite(x));
        s += x;
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
}

TEST(ChoiceProbabilities, EmptyIsAnError) {
    std::vector<double> v;
    EXPECT_THROW(choice_probabilities(v, true), InvalidArgument);
}

TEST(ChoiceProbabilities, ShiftInvariantWithoutOutside) {
    std::vector<double> a{0.3, -1.2, 2.5}, b{10.3, 8.8, 12.5};
    auto pa = choice_probabilities(a, false), pb = choice_probabilities(b, false);
    for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_NEAR(pa[i], pb[i], 1e-14);
}

TEST(WillingnessToPay, Literal) {
    EXPECT_DOUBLE_EQ(willingness_to_pay({1.0, 0.5, -2.0}, {2.0, 0.0}), (1.0 + 1.0) / -2.0);
    EXPECT_DOUBLE_EQ(willingness_to_pay({1.0, 0.0, 4.0}, {0.0, 0.3}), 0.25);
    EXPECT_THROW(willingness_to_pay({1.0, 0.0, 0.0}, {1.0, 0.0}), DegenerateError);
}

TEST(OfferAttributes, Validation) {
    EXPECT_NO_THROW((OfferAttributes{0, -0.5}.validate()));
    EXPECT_NO_THROW((OfferAttributes{5, 0.5}.validate()));
    EXPECT_THROW((OfferAttributes{6, 0}.validate()), InvalidArgument);
    EXPECT_THROW((OfferAttributes{1.5, 0}.validate()), InvalidArgument);
    EXPECT_THROW((OfferAttributes{1, 0.51}.validate()), InvalidArgument);
}

TEST(CoefficientVector, RoundTripsThroughEigen) {
    CoefficientVector b{1.0, -0.5, -7.0};
    auto c = CoefficientVector::from(b.vector());
    EXPECT_EQ(c.k, b.k);
    EXPECT_EQ(c.beta_contract, b.beta_contract);
    EXPECT_EQ(c.beta_discount, b.beta_discount);
}
