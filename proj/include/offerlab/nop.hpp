#pragma once

// Next-offer profit and its per-segment maximization over the discount
// rate r (continuous, bounded) and the contract length M (a small set of
// month options).

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <utility>
#include <vector>

#include "choice.hpp"
#include "errors.hpp"
#include "hb_mcmc.hpp"
#include "segmentation.hpp"

namespace offerlab {

struct RateBounds {
    double lower = -0.5;
    double upper = 0.5;
};

struct NopConfig {
    /// Annual rate of return used to discount monthly cash flows.
    double annual_rate = 0.12;
    /// Monthly recurring cost per customer offer.
    double mrc = 5.0;
    double initial_cost = 0.0;
    /// Monthly recurring price for customers without an explicit value.
    double default_mrp = 100.0;
    std::map<Segment, RateBounds> r_bounds{{Segment::inelastic_not_loyal, {}},
                                           {Segment::inelastic_loyal, {}},
                                           {Segment::elastic_not_loyal, {}},
                                           {Segment::elastic_loyal, {}}};
    std::vector<int> contract_options{1, 12, 24, 36, 60};
    PredictionMode probability_mode = PredictionMode::draw_averaged;

    RateBounds bounds(Segment s) const {
        auto it = r_bounds.find(s);
        return it == r_bounds.end() ? RateBounds{} : it->second;
    }

    void validate() const {
        if (!(annual_rate >= 0.0)) throw ConfigError("annual rate of return must be >= 0");
        if (!std::isfinite(mrc) || !std::isfinite(initial_cost) || !std::isfinite(default_mrp))
            throw ConfigError("costs and prices must be finite");
        if (contract_options.empty()) throw ConfigError("contract options are empty");
        for (int m : contract_options)
            if (m < 1) throw ConfigError("contract options must be at least 1 month");
        for (const auto& [seg, b] : r_bounds)
            if (!(b.lower <= b.upper)) throw ConfigError("rate bounds need lower <= upper");
        if (probability_mode == PredictionMode::population_mean)
            throw ConfigError("the objective needs customer-level probabilities");
    }
};

struct SegmentCustomer {
    long customer_id = 0;
    double mrp = 100.0;
    double loyalty = 0.0;
};

struct OfferPolicy {
    Segment segment = Segment::inelastic_not_loyal;
    double r = 0.0;
    int months = 1;
    double nop = 0.0;
    std::size_t n_customers = 0;
    /// Set when the objective is identically zero and the policy is a default.
    bool degenerate = false;
};

/// Sum over months 1..M of (mrp (1 + r) - mrc) / (1 + d/12)^m.
inline double present_value(double mrp, double mrc, double r, int months, double annual_rate) {
    if (months < 1) throw InvalidArgument("present_value: contract must last at least 1 month");
    if (!(annual_rate >= 0.0)) throw InvalidArgument("present_value: rate of return must be >= 0");
    const double margin = mrp * (1.0 + r) - mrc;
    if (annual_rate == 0.0) return static_cast<double>(months) * margin;
    const double i = annual_rate / 12.0;
    // annuity factor (1 - (1+i)^-M) / i
    return margin * (-std::expm1(-static_cast<double>(months) * std::log1p(i))) / i;
}

inline double nop(double prob, double loyalty, double pv, double initial_cost) {
    for (double v : {prob, loyalty, pv, initial_cost}) detail::require_finite(v, "NOP input");
    return prob * loyalty * (pv - initial_cost);
}

/// Contract months as the model's contract-year attribute.
inline double contract_years(int months) { return static_cast<double>(months) / 12.0; }

/// Segment objective with the per-customer draws unpacked once, for
/// repeated evaluation at many (r, M).
class SegmentObjective {
public:
    SegmentObjective(std::vector<SegmentCustomer> customers, const PosteriorDraws& draws,
                     const NopConfig& config)
        : customers_(std::move(customers)), config_(config) {
        config_.validate();
        if (draws.dims != kOfferDims) throw InvalidArgument("NOP needs offer-model draws (K = 3)");
        if (draws.size() == 0 && !customers_.empty()) throw InvalidArgument("posterior has no retained draws");
        for (const auto& c : customers_) {
            const auto idx = draws.index_of(c.customer_id);
            MatrixXd d = draws.customer_draws(idx);
            if (config_.probability_mode == PredictionMode::posterior_mean)
                d = d.colwise().mean().eval();
            draws_.push_back(std::move(d));
        }
    }

    double operator()(double r, int months) const {
        if (!(r >= -0.5 && r <= 0.5))
            throw OutOfRange("discount rate outside the trained band [-0.5, 0.5]");
        if (months < 1) throw InvalidArgument("contract must last at least 1 month");
        const double years = contract_years(months);
        double total = 0.0;
        for (std::size_t c = 0; c < customers_.size(); ++c) {
            const auto& d = draws_[c];
            double p = 0.0;
            for (Eigen::Index s = 0; s < d.rows(); ++s) p += logistic(d(s, 0) + d(s, 1) * years + d(s, 2) * r);
            p /= static_cast<double>(d.rows());
            const double pv = present_value(customers_[c].mrp, config_.mrc, r, months, config_.annual_rate);
            total += nop(p, customers_[c].loyalty, pv, config_.initial_cost);
        }
        return total;
    }

    std::size_t size() const { return customers_.size(); }
    const NopConfig& config() const { return config_; }

private:
    std::vector<SegmentCustomer> customers_;
    NopConfig config_;
    std::vector<MatrixXd> draws_;
};

/// Sum of NOP over a segment's customers at one (r, M).
inline double segment_objective(double r, int months, const std::vector<SegmentCustomer>& customers,
                                const PosteriorDraws& draws, const NopConfig& config) {
    return SegmentObjective(customers, draws, config)(r, months);
}

namespace detail {

inline std::vector<int> sorted_options(std::vector<int> m) {
    std::sort(m.begin(), m.end());
    m.erase(std::unique(m.begin(), m.end()), m.end());
    return m;
}

/// Picks the best (r, M) among per-M maxima; smaller M wins ties. Flags a
/// degenerate policy at (upper bound, longest contract) when every
/// evaluation was exactly zero.
inline OfferPolicy pick_policy(Segment segment, const std::vector<std::pair<double, double>>& per_m,
                               const std::vector<int>& months, bool all_zero, RateBounds b,
                               std::size_t n) {
    OfferPolicy p;
    p.segment = segment;
    p.n_customers = n;
    if (all_zero) {
        p.r = b.upper;
        p.months = months.back();
        p.nop = 0.0;
        p.degenerate = true;
        return p;
    }
    bool have = false;
    for (std::size_t i = 0; i < months.size(); ++i) {
        if (!have || per_m[i].second > p.nop) {
            p.r = per_m[i].first;
            p.months = months[i];
            p.nop = per_m[i].second;
            have = true;
        }
    }
    return p;
}

}  // namespace detail

/// Coarse grid of 101 rates per contract option, then golden-section
/// refinement inside the bracket around the best grid point.
inline OfferPolicy optimize_policy(Segment segment, const SegmentObjective& objective) {
    if (objective.size() == 0) throw InvalidArgument("optimize_policy: segment has no customers");
    const RateBounds b = objective.config().bounds(segment);
    if (!(b.lower <= b.upper)) throw InvalidArgument("optimize_policy: invalid rate bounds");
    const auto months = detail::sorted_options(objective.config().contract_options);
    constexpr int grid = 101;
    constexpr double tol = 1e-5;
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    bool all_zero = true;
    std::vector<std::pair<double, double>> per_m;
    for (int m : months) {
        auto f = [&](double r) {
            const double v = objective(r, m);
            if (v != 0.0) all_zero = false;
            return v;
        };
        if (b.lower == b.upper) {
            per_m.emplace_back(b.lower, f(b.lower));
            continue;
        }
        const double step = (b.upper - b.lower) / (grid - 1);
        auto rate = [&](int i) { return i == grid - 1 ? b.upper : b.lower + step * i; };
        int best_i = 0;
        double best_v = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < grid; ++i) {
            const double v = f(rate(i));
            if (v > best_v) {
                best_v = v;
                best_i = i;
            }
        }
        double lo = rate(std::max(0, best_i - 1));
        double hi = rate(std::min(grid - 1, best_i + 1));
        double x1 = hi - invphi * (hi - lo);
        double x2 = lo + invphi * (hi - lo);
        double f1 = f(x1), f2 = f(x2);
        while (hi - lo > tol) {
            if (f1 < f2) {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + invphi * (hi - lo);
                f2 = f(x2);
            } else {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - invphi * (hi - lo);
                f1 = f(x1);
            }
        }
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        double r_best = rate(best_i), v_best = best_v;
        for (auto [r, v] : {std::pair{x1, f1}, std::pair{x2, f2}, std::pair{mid, fm}})
            if (v > v_best) {
                r_best = r;
                v_best = v;
            }
        per_m.emplace_back(r_best, v_best);
    }
    return detail::pick_policy(segment, per_m, months, all_zero, b, objective.size());
}

inline OfferPolicy optimize_policy(Segment segment, const std::vector<SegmentCustomer>& customers,
                                   const PosteriorDraws& draws, const NopConfig& config) {
    return optimize_policy(segment, SegmentObjective(customers, draws, config));
}

/// Exhaustive evaluation on the rate grid lower, lower + step, ..., upper
/// for every contract option.
inline OfferPolicy grid_oracle(Segment segment, const SegmentObjective& objective, double step = 0.001) {
    if (!(step > 0.0)) throw InvalidArgument("grid_oracle: step must be positive");
    const RateBounds b = objective.config().bounds(segment);
    const auto months = detail::sorted_options(objective.config().contract_options);
    const auto points = static_cast<long>(std::floor((b.upper - b.lower) / step + 1e-9));
    std::vector<double> rates;
    for (long i = 0; i <= points; ++i) rates.push_back(std::min(b.upper, b.lower + step * static_cast<double>(i)));
    if (rates.back() < b.upper) rates.push_back(b.upper);
    bool all_zero = true;
    std::vector<std::pair<double, double>> per_m;
    for (int m : months) {
        double r_best = b.lower;
        double v_best = -std::numeric_limits<double>::infinity();
        for (double r : rates) {
            const double v = objective(r, m);
            if (v != 0.0) all_zero = false;
            if (v > v_best) {
                v_best = v;
                r_best = r;
            }
        }
        per_m.emplace_back(r_best, v_best);
    }
    return detail::pick_policy(segment, per_m, months, all_zero, b, objective.size());
}

inline OfferPolicy grid_oracle(Segment segment, const std::vector<SegmentCustomer>& customers,
                               const PosteriorDraws& draws, const NopConfig& config, double step = 0.001) {
    return grid_oracle(segment, SegmentObjective(customers, draws, config), step);
}

/// Policies for every non-empty segment, in table order.
inline std::vector<OfferPolicy> optimize_segments(const std::vector<SegmentAssignment>& assignments,
                                                  const std::map<long, double>& mrp,
                                                  const PosteriorDraws& draws, const NopConfig& config) {
    std::vector<OfferPolicy> out;
    for (auto seg : kAllSegments) {
        std::vector<SegmentCustomer> members;
        for (const auto& a : assignments) {
            if (a.segment != seg) continue;
            auto it = mrp.find(a.customer_id);
            members.push_back({a.customer_id, it == mrp.end() ? config.default_mrp : it->second, a.loyalty});
        }
        if (members.empty()) continue;
        out.push_back(optimize_policy(seg, members, draws, config));
    }
    return out;
}

}  // namespace offerlab
