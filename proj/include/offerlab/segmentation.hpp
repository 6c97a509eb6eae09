#pragma once

// Discount elasticity per customer and the 2 x 2 loyalty-by-elasticity
// segmentation.

#include <array>
#include <cmath>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "choice.hpp"
#include "errors.hpp"
#include "hb_mcmc.hpp"

namespace offerlab {

enum class Segment { inelastic_not_loyal = 0, inelastic_loyal = 1, elastic_not_loyal = 2, elastic_loyal = 3 };

inline constexpr std::array<Segment, 4> kAllSegments{Segment::inelastic_not_loyal, Segment::inelastic_loyal,
                                                     Segment::elastic_not_loyal, Segment::elastic_loyal};

inline std::string_view to_string(Segment s) {
    switch (s) {
        case Segment::inelastic_not_loyal: return "inelastic-not-loyal";
        case Segment::inelastic_loyal: return "inelastic-loyal";
        case Segment::elastic_not_loyal: return "elastic-not-loyal";
        case Segment::elastic_loyal: return "elastic-loyal";
    }
    return "";
}

inline Segment segment_from_string(std::string_view s) {
    for (auto seg : kAllSegments)
        if (to_string(seg) == s) return seg;
    throw InvalidArgument("unknown segment '" + std::string(s) + "'");
}

inline bool is_elastic(Segment s) { return s == Segment::elastic_not_loyal || s == Segment::elastic_loyal; }
inline bool is_loyal(Segment s) { return s == Segment::inelastic_loyal || s == Segment::elastic_loyal; }

struct SegmentAssignment {
    long customer_id = 0;
    double elasticity = 0.0;
    double loyalty = 0.0;
    Segment segment = Segment::inelastic_not_loyal;
};

/// Midpoint (arc) elasticity of probability with respect to price.
inline double arc_elasticity(double p0, double p1, double price0, double price1) {
    for (double v : {p0, p1, price0, price1}) detail::require_finite(v, "arc elasticity input");
    if (price0 == price1) throw DegenerateError("arc elasticity: prices are equal");
    if (!(p0 + p1 > 0.0)) throw DegenerateError("arc elasticity: probabilities sum to zero");
    if (!(price0 + price1 > 0.0)) throw DegenerateError("arc elasticity: prices sum to zero or less");
    const double dp = (p1 - p0) / ((p0 + p1) / 2.0);
    const double dprice = (price1 - price0) / ((price0 + price1) / 2.0);
    return dp / dprice;
}

/// Elasticity of the draw-averaged acceptance probability when the offered
/// discount attribute moves down by `delta` (a deeper discount). Prices are
/// relative to the undiscounted recurring price: 1 + discount.
inline double customer_elasticity(const PosteriorDraws& draws, const OfferObservation& offer,
                                  double delta = 0.10) {
    const double d0 = offer.attributes.discount;
    const double d1 = d0 - delta;
    if (d1 < -0.6 || d1 > 0.6 || d0 < -0.6 || d0 > 0.6)
        throw OutOfRange("shifted discount leaves the [-0.6, 0.6] band");
    OfferObservation shifted = offer;
    shifted.attributes.discount = d1;
    const double p0 = predict_probability(draws, offer, PredictionMode::draw_averaged);
    const double p1 = predict_probability(draws, shifted, PredictionMode::draw_averaged);
    return arc_elasticity(p0, p1, 1.0 + d0, 1.0 + d1);
}

/// Inelastic when elasticity >= -1; loyal when loyalty > 0.5.
inline Segment assign_segment(double elasticity, double loyalty) {
    detail::require_finite(elasticity, "elasticity");
    if (!(loyalty >= 0.0 && loyalty <= 1.0)) throw InvalidArgument("loyalty must lie in [0, 1]");
    const bool elastic = elasticity < -1.0;
    const bool loyal = loyalty > 0.5;
    if (elastic) return loyal ? Segment::elastic_loyal : Segment::elastic_not_loyal;
    return loyal ? Segment::inelastic_loyal : Segment::inelastic_not_loyal;
}

/// One assignment per test offer, using the customer's raw loyalty score.
inline std::vector<SegmentAssignment> segment_customers(const PosteriorDraws& draws,
                                                        const std::vector<OfferObservation>& test_offers,
                                                        const std::vector<CustomerProfile>& customers,
                                                        double delta = 0.10) {
    std::map<long, double> loyalty;
    for (const auto& c : customers) loyalty[c.customer_id] = c.loyalty;
    std::vector<SegmentAssignment> out;
    for (const auto& offer : test_offers) {
        auto l = loyalty.find(offer.customer_id);
        if (l == loyalty.end()) throw DataIntegrityError("no loyalty for customer " + std::to_string(offer.customer_id));
        SegmentAssignment a;
        a.customer_id = offer.customer_id;
        a.elasticity = customer_elasticity(draws, offer, delta);
        a.loyalty = l->second;
        a.segment = assign_segment(a.elasticity, a.loyalty);
        out.push_back(a);
    }
    return out;
}

struct SegmentShare {
    Segment segment;
    std::size_t customers = 0;
    double percent = 0.0;
};

/// Percent of customers in each of the four segments, in table order.
inline std::array<SegmentShare, 4> segment_distribution(const std::vector<SegmentAssignment>& assignments) {
    if (assignments.empty()) throw InvalidArgument("segment_distribution: no assignments");
    std::array<SegmentShare, 4> out{};
    for (std::size_t i = 0; i < 4; ++i) out[i].segment = kAllSegments[i];
    for (const auto& a : assignments) ++out[static_cast<std::size_t>(a.segment)].customers;
    for (auto& s : out)
        s.percent = 100.0 * static_cast<double>(s.customers) / static_cast<double>(assignments.size());
    return out;
}

}  // namespace offerlab
