#pragma once

// Random-utility data model and the deterministic logit computations every
// other module builds on. Utilities are deterministic parts only; the
// extreme-value error is integrated out by the logit form.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"

namespace offerlab {

/// Number of coefficients in the offer model: intercept, contract, discount.
inline constexpr int kOfferDims = 3;

/// Exponent arguments are clamped to this magnitude before exp().
inline constexpr double kUtilityClamp = 700.0;

namespace detail {

inline void require_finite(double v, const char* what) {
    if (!std::isfinite(v)) throw InvalidArgument(std::string("non-finite ") + what);
}

}  // namespace detail

/// Attributes of one offer. The intercept is always 1 and is not stored.
/// contract_length is in years; discount is a fraction where negative means
/// a discount and positive a premium.
struct OfferAttributes {
    double contract_length = 0.0;
    double discount = 0.0;

    static constexpr double intercept = 1.0;

    Eigen::Vector3d vector() const { return {intercept, contract_length, discount}; }

    /// Checks the invariants of attributes recorded in an offer dataset
    /// (integer years 0..5, discount in [-0.5, 0.5]).
    void validate() const {
        detail::require_finite(contract_length, "contract length");
        detail::require_finite(discount, "discount");
        if (contract_length < 0.0 || contract_length > 5.0 ||
            contract_length != std::floor(contract_length))
            throw InvalidArgument("contract length must be an integer number of years in 0..5");
        if (discount < -0.5 || discount > 0.5)
            throw InvalidArgument("discount must lie in [-0.5, 0.5]");
    }

    friend bool operator==(const OfferAttributes&, const OfferAttributes&) = default;
};

/// Customer-level utility coefficients (k, beta_contract, beta_discount).
struct CoefficientVector {
    double k = 0.0;
    double beta_contract = 0.0;
    double beta_discount = 0.0;

    Eigen::Vector3d vector() const { return {k, beta_contract, beta_discount}; }

    static CoefficientVector from(const Eigen::Ref<const Eigen::VectorXd>& v) {
        if (v.size() != kOfferDims)
            throw InvalidArgument("offer coefficient vector must have 3 entries");
        return {v[0], v[1], v[2]};
    }

    friend bool operator==(const CoefficientVector&, const CoefficientVector&) = default;
};

enum class Outcome { rejected = 0, accepted = 1, unlabeled = 2 };

struct OfferObservation {
    long customer_id = 1;
    long occasion = 1;
    OfferAttributes attributes;
    Outcome outcome = Outcome::unlabeled;

    friend bool operator==(const OfferObservation&, const OfferObservation&) = default;
};

/// Loyalty is the raw score in [0,1]; the centered covariates are what the
/// hierarchical model sees.
struct CustomerProfile {
    long customer_id = 1;
    double loyalty = 0.0;
    double loyalty_centered = 0.0;
    double demographic_centered = 0.0;

    /// Covariate vector used on the mixture means.
    Eigen::VectorXd covariates(bool with_demographic = false) const {
        Eigen::VectorXd z(with_demographic ? 2 : 1);
        z[0] = loyalty_centered;
        if (with_demographic) z[1] = demographic_centered;
        return z;
    }

    friend bool operator==(const CustomerProfile&, const CustomerProfile&) = default;
};

/// Deterministic utility k + beta_contract * contract + beta_discount * discount.
inline double utility(const CoefficientVector& beta, const OfferAttributes& attrs) {
    detail::require_finite(beta.k, "intercept coefficient");
    detail::require_finite(beta.beta_contract, "contract coefficient");
    detail::require_finite(beta.beta_discount, "discount coefficient");
    detail::require_finite(attrs.contract_length, "contract length");
    detail::require_finite(attrs.discount, "discount");
    return beta.k * OfferAttributes::intercept + beta.beta_contract * attrs.contract_length +
           beta.beta_discount * attrs.discount;
}

/// Logistic function on a clamped utility; probability of choosing an
/// alternative with utility u over an outside option of utility 0.
inline double logistic(double u) {
    u = std::clamp(u, -kUtilityClamp, kUtilityClamp);
    if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
    const double e = std::exp(u);
    return e / (1.0 + e);
}

/// log(logistic(u)) without cancellation for large |u|.
inline double log_logistic(double u) {
    if (u >= 0.0) return -std::log1p(std::exp(-u));
    return u - std::log1p(std::exp(u));
}

/// Multinomial logit probabilities. With include_outside_option an extra
/// alternative of utility 0 is appended as the last entry.
inline std::vector<double> choice_probabilities(std::span<const double> utilities,
                                                bool include_outside_option) {
    if (utilities.empty()) throw InvalidArgument("choice_probabilities: empty utility vector");
    std::vector<double> u(utilities.begin(), utilities.end());
    for (double& v : u) {
        detail::require_finite(v, "utility");
        v = std::clamp(v, -kUtilityClamp, kUtilityClamp);
    }
    if (include_outside_option) u.push_back(0.0);
    const double top = *std::max_element(u.begin(), u.end());
    double total = 0.0;
    for (double& v : u) {
        v = std::exp(v - top);
        total += v;
    }
    for (double& v : u) v /= total;
    return u;
}

inline double accept_probability(const CoefficientVector& beta, const OfferAttributes& attrs) {
    return logistic(utility(beta, attrs));
}

/// (k + beta_contract * contract) / beta_discount, sign left as is: with a
/// negative discount coefficient the result is negative.
inline double willingness_to_pay(const CoefficientVector& beta, const OfferAttributes& attrs) {
    if (beta.beta_discount == 0.0)
        throw DegenerateError("willingness_to_pay: discount coefficient is zero");
    const CoefficientVector non_price{beta.k, beta.beta_contract, 0.0};
    return utility(non_price, attrs) / beta.beta_discount;
}

inline const char* to_string(Outcome o) {
    switch (o) {
        case Outcome::accepted: return "1";
        case Outcome::rejected: return "0";
        case Outcome::unlabeled: return "";
    }
    return "";
}

}  // namespace offerlab
