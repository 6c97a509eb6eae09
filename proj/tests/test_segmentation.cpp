#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "offerlab/segmentation.hpp"

using namespace offerlab;
using Eigen::MatrixXd;

namespace {

// one customer per coefficient row, single draw
PosteriorDraws point_draws(const std::vector<CoefficientVector>& betas) {
    PosteriorDraws d;
    d.dims = 3;
    MatrixXd b(static_cast<Eigen::Index>(betas.size()), 3);
    for (std::size_t i = 0; i < betas.size(); ++i) {
        d.customer_ids.push_back(static_cast<long>(i) + 1);
        b.row(static_cast<Eigen::Index>(i)) = betas[i].vector().transpose();
    }
    d.betas = {b};
    return d;
}

}  // namespace

TEST(ArcElasticity, HandComputed) {
    // probability 0.2 -> 0.3 as price 1.0 -> 0.9
    const double e = arc_elasticity(0.2, 0.3, 1.0, 0.9);
    EXPECT_NEAR(e, (0.1 / 0.25) / (-0.1 / 0.95), 1e-12);
    EXPECT_LT(e, -1.0);
    EXPECT_THROW(arc_elasticity(0.2, 0.3, 1.0, 1.0), DegenerateError);
    EXPECT_THROW(arc_elasticity(0.0, 0.0, 1.0, 0.9), DegenerateError);
}

TEST(CustomerElasticity, MatchesDirectComputation) {
    const CoefficientVector b{0.3, -0.1, -6.0};
    const auto d = point_draws({b});
    OfferObservation o{1, 1, {2, 0.15}, Outcome::unlabeled};
    const double p0 = accept_probability(b, {2, 0.15});
    const double p1 = accept_probability(b, {2, 0.05});
    EXPECT_NEAR(customer_elasticity(d, o), arc_elasticity(p0, p1, 1.15, 1.05), 1e-12);
}

TEST(CustomerElasticity, ZeroDiscountCoefficientIsZero) {
    const auto d = point_draws({{0.5, 0.0, 0.0}});
    OfferObservation o{1, 1, {1, 0.0}, Outcome::unlabeled};
    EXPECT_EQ(customer_elasticity(d, o), 0.0);
}

TEST(CustomerElasticity, BandCheck) {
    const auto d = point_draws({{0.5, 0.0, -1.0}});
    EXPECT_THROW(customer_elasticity(d, {1, 1, {1, -0.55}, Outcome::unlabeled}), OutOfRange);
    EXPECT_NO_THROW(customer_elasticity(d, {1, 1, {1, -0.5}, Outcome::unlabeled}));
}

TEST(AssignSegment, Thresholds) {
    EXPECT_EQ(assign_segment(-1.0, 0.5), Segment::inelastic_not_loyal);
    EXPECT_EQ(assign_segment(-1.0001, 0.5), Segment::elastic_not_loyal);
    EXPECT_EQ(assign_segment(-0.2, 0.51), Segment::inelastic_loyal);
    EXPECT_EQ(assign_segment(-3.0, 0.9), Segment::elastic_loyal);
    EXPECT_THROW(assign_segment(-1.0, 1.2), InvalidArgument);
    EXPECT_THROW(assign_segment(std::nan(""), 0.2), InvalidArgument);
}

TEST(SegmentNames, RoundTrip) {
    for (auto s : kAllSegments) EXPECT_EQ(segment_from_string(to_string(s)), s);
    EXPECT_THROW(segment_from_string("loyal"), InvalidArgument);
}

TEST(Segmentation, EndToEndOnPointDraws) {
    const auto d = point_draws({{0.5, 0.0, -0.1}, {0.5, 0.0, -0.1}, {0.0, 0.0, -15.0}, {0.0, 0.0, -15.0}});
    std::vector<OfferObservation> offers;
    std::vector<CustomerProfile> customers;
    for (long id = 1; id <= 4; ++id) {
        offers.push_back({id, 1, {1, 0.2}, Outcome::unlabeled});
        customers.push_back({id, id % 2 == 0 ? 0.9 : 0.1, 0, 0});
    }
    const auto seg = segment_customers(d, offers, customers);
    ASSERT_EQ(seg.size(), 4u);
    EXPECT_EQ(seg[0].segment, Segment::inelastic_not_loyal);
    EXPECT_EQ(seg[1].segment, Segment::inelastic_loyal);
    EXPECT_EQ(seg[2].segment, Segment::elastic_not_loyal);
    EXPECT_EQ(seg[3].segment, Segment::elastic_loyal);
    const auto shares = segment_distribution(seg);
    double total = 0;
    for (const auto& s : shares) {
        EXPECT_DOUBLE_EQ(s.percent, 25.0);
        total += s.percent;
    }
    EXPECT_NEAR(total, 100.0, 1e-12);
    customers.pop_back();
    EXPECT_THROW(segment_customers(d, offers, customers), DataIntegrityError);
}

TEST(Segmentation, SharesSumToHundred) {
    std::vector<SegmentAssignment> a;
    for (int i = 0; i < 7; ++i) a.push_back({i, 0, 0, kAllSegments[static_cast<std::size_t>(i % 3)]});
    double total = 0;
    for (const auto& s : segment_distribution(a)) total += s.percent;
    EXPECT_NEAR(total, 100.0, 1e-9);
    EXPECT_THROW(segment_distribution({}), InvalidArgument);
}
