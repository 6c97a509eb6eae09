#pragma once

// Synthetic offer data: ground-truth customer coefficients drawn from a
// mixture of normals shifted by centered loyalty, offers with random
// contract length and discount, and Bernoulli responses from the binary
// logit of the true coefficients.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "choice.hpp"
#include "errors.hpp"
#include "linalg.hpp"
#include "rng.hpp"

namespace offerlab {

struct MixtureComponentSpec {
    double weight = 1.0;
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    Eigen::Matrix3d covariance = Eigen::Matrix3d::Identity();
};

struct OfferCountBucket {
    int offers = 1;
    double probability = 1.0;
};

struct GroundTruthConfig {
    long n_customers = 1000;
    std::vector<MixtureComponentSpec> mixture;
    Eigen::Vector3d loyalty_loadings = Eigen::Vector3d::Zero();
    std::vector<OfferCountBucket> offer_count_distribution;
    double discount_min = -0.5;
    double discount_max = 0.5;
    std::vector<int> contract_values{0, 1, 2, 3, 4, 5};
    std::uint64_t seed = 20220101;

    /// Offer counts per customer observed in the B2B offer data (1 to 48).
    static std::vector<OfferCountBucket> observed_offer_counts() {
        return {{1, 0.690}, {2, 0.181}, {3, 0.055}, {4, 0.027}, {5, 0.017}, {6, 0.013},
                {7, 0.006}, {8, 0.001}, {9, 0.003}, {10, 0.001}, {12, 0.001}, {14, 0.001},
                {15, 0.001}, {17, 0.001}, {24, 0.001}, {48, 0.001}};
    }

    /// Three-component truth whose simulated datasets resemble the
    /// descriptive statistics of the B2B offer data: a large high-intercept
    /// group and a smaller low-intercept group (bimodal intercept), every
    /// component with a negative mean discount coefficient, and loyalty
    /// raising the intercept and damping price sensitivity.
    static GroundTruthConfig reference_population() {
        GroundTruthConfig c;
        c.n_customers = 1000;
        auto diag = [](double a, double b, double d) {
            Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
            m.diagonal() << a, b, d;
            return m;
        };
        c.mixture = {
            {0.55, {1.5, 0.1, -8.0}, diag(0.3, 0.01, 0.5)},
            {0.25, {-1.0, 0.0, -6.5}, diag(0.3, 0.01, 0.5)},
            {0.20, {0.8, -0.1, -10.0}, diag(0.3, 0.01, 0.8)},
        };
        c.loyalty_loadings = {2.5, 0.1, 8.0};
        c.offer_count_distribution = observed_offer_counts();
        return c;
    }

    void validate() const {
        if (n_customers < 1) throw ConfigError("n_customers must be at least 1");
        if (mixture.empty()) throw ConfigError("mixture needs at least one component");
        double wsum = 0.0;
        for (const auto& comp : mixture) {
            if (!(comp.weight >= 0.0)) throw ConfigError("mixture weights must be non-negative");
            wsum += comp.weight;
            if (!comp.mean.allFinite()) throw ConfigError("mixture mean is not finite");
            // an all-zero covariance is a point mass and is accepted
            if (!comp.covariance.isZero(0.0) && !is_spd(comp.covariance))
                throw ConfigError("mixture covariance is not symmetric positive definite");
        }
        if (std::abs(wsum - 1.0) > 1e-9) throw ConfigError("mixture weights must sum to 1");
        if (!loyalty_loadings.allFinite()) throw ConfigError("loyalty loadings are not finite");
        if (offer_count_distribution.empty())
            throw ConfigError("offer count distribution is empty");
        double psum = 0.0;
        for (const auto& b : offer_count_distribution) {
            if (b.offers < 1) throw ConfigError("offer counts must be at least 1");
            if (!(b.probability >= 0.0)) throw ConfigError("offer count probabilities must be >= 0");
            psum += b.probability;
        }
        if (std::abs(psum - 1.0) > 1e-9)
            throw ConfigError("offer count probabilities must sum to 1");
        if (!(discount_min <= discount_max) || discount_min < -0.5 || discount_max > 0.5)
            throw ConfigError("discount bounds must satisfy -0.5 <= min <= max <= 0.5");
        if (contract_values.empty()) throw ConfigError("contract value set is empty");
        for (int v : contract_values)
            if (v < 0 || v > 5) throw ConfigError("contract values must lie in 0..5 years");
    }
};

using CoefficientMap = std::map<long, CoefficientVector>;

struct SimulatedDataset {
    std::vector<OfferObservation> train;
    std::vector<OfferObservation> test;
    std::vector<CustomerProfile> customers;
    CoefficientMap truth;
};

/// Raw loyalty and demographic scores, uniform on [0,1], then mean-centered
/// over the customer population. Customer ids run 1..n.
inline std::vector<CustomerProfile> draw_customer_profiles(const GroundTruthConfig& config) {
    config.validate();
    const auto n = static_cast<std::size_t>(config.n_customers);
    std::vector<CustomerProfile> out(n);
    std::vector<double> demo(n);
    for (std::size_t i = 0; i < n; ++i) {
        Rng rng(config.seed, "profiles", i);
        out[i].customer_id = static_cast<long>(i) + 1;
        out[i].loyalty = rng.uniform();
        demo[i] = rng.uniform();
    }
    const double loyalty_mean =
        std::accumulate(out.begin(), out.end(), 0.0,
                        [](double s, const CustomerProfile& p) { return s + p.loyalty; }) /
        static_cast<double>(n);
    const double demo_mean = std::accumulate(demo.begin(), demo.end(), 0.0) / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i].loyalty_centered = out[i].loyalty - loyalty_mean;
        out[i].demographic_centered = demo[i] - demo_mean;
    }
    return out;
}

inline CoefficientMap draw_true_coefficients(const GroundTruthConfig& config,
                                             const std::vector<CustomerProfile>& profiles) {
    config.validate();
    std::vector<double> weights;
    std::vector<Eigen::Matrix3d> roots;
    for (const auto& comp : config.mixture) {
        weights.push_back(comp.weight);
        if (comp.covariance.isZero(0.0)) {
            roots.push_back(Eigen::Matrix3d::Zero());
        } else {
            auto l = try_cholesky(comp.covariance);
            if (!l) throw ConfigError("mixture covariance is not positive definite");
            roots.push_back(*l);
        }
    }
    CoefficientMap out;
    for (const auto& p : profiles) {
        Rng rng(config.seed, "coefficients", static_cast<std::uint64_t>(p.customer_id));
        const std::size_t k = rng.categorical(weights);
        Eigen::Vector3d z;
        for (int j = 0; j < 3; ++j) z[j] = rng.normal();
        const Eigen::Vector3d beta = config.mixture[k].mean + roots[k] * z +
                                     config.loyalty_loadings * p.loyalty_centered;
        out[p.customer_id] = CoefficientVector::from(beta);
    }
    return out;
}

/// Convenience overload drawing the profiles from the same config.
inline CoefficientMap draw_true_coefficients(const GroundTruthConfig& config) {
    return draw_true_coefficients(config, draw_customer_profiles(config));
}

/// Unlabeled training offers (count per customer from the configured
/// distribution, occasions 1..n) plus one test offer per customer.
inline SimulatedDataset generate_offers(const GroundTruthConfig& config) {
    config.validate();
    SimulatedDataset ds;
    ds.customers = draw_customer_profiles(config);
    std::vector<double> probs;
    for (const auto& b : config.offer_count_distribution) probs.push_back(b.probability);
    const long ncontract = static_cast<long>(config.contract_values.size());
    for (const auto& p : ds.customers) {
        Rng rng(config.seed, "offers", static_cast<std::uint64_t>(p.customer_id));
        auto draw_attrs = [&] {
            OfferAttributes a;
            a.contract_length = config.contract_values[static_cast<std::size_t>(
                rng.uniform_int(0, ncontract - 1))];
            a.discount = rng.uniform(config.discount_min, config.discount_max);
            return a;
        };
        const int count = config.offer_count_distribution[rng.categorical(probs)].offers;
        for (int o = 1; o <= count; ++o)
            ds.train.push_back({p.customer_id, o, draw_attrs(), Outcome::unlabeled});
        ds.test.push_back({p.customer_id, 1, draw_attrs(), Outcome::unlabeled});
    }
    return ds;
}

/// Labels every observation with an independent Bernoulli draw at the
/// true acceptance probability.
inline SimulatedDataset simulate_responses(const CoefficientMap& truth, SimulatedDataset dataset,
                                           std::uint64_t seed) {
    auto label = [&](std::vector<OfferObservation>& rows, std::string_view purpose) {
        std::map<long, Rng> streams;
        for (auto& row : rows) {
            auto it = truth.find(row.customer_id);
            if (it == truth.end())
                throw DataIntegrityError("no true coefficients for customer " +
                                         std::to_string(row.customer_id));
            auto s = streams.find(row.customer_id);
            if (s == streams.end())
                s = streams.emplace(row.customer_id,
                                    Rng(seed, purpose, static_cast<std::uint64_t>(row.customer_id)))
                        .first;
            const double p = accept_probability(it->second, row.attributes);
            row.outcome = s->second.bernoulli(p) ? Outcome::accepted : Outcome::rejected;
        }
    };
    label(dataset.train, "responses-train");
    label(dataset.test, "responses-test");
    dataset.truth = truth;
    return dataset;
}

/// Profiles, truth, offers and responses in one call.
inline SimulatedDataset simulate(const GroundTruthConfig& config) {
    SimulatedDataset ds = generate_offers(config);
    CoefficientMap truth = draw_true_coefficients(config, ds.customers);
    return simulate_responses(truth, std::move(ds), config.seed);
}

// ---------------------------------------------------------------------------
// descriptive statistics

struct ColumnSummary {
    std::string name;
    double min = 0, q1 = 0, median = 0, mean = 0, q3 = 0, max = 0;
    std::size_t count = 0;
};

struct DatasetSummary {
    bool empty = true;
    std::vector<ColumnSummary> columns;
    std::size_t rejected = 0;
    std::size_t accepted = 0;
    std::size_t unlabeled = 0;

    std::string to_text(const std::string& title) const;
};

/// Quantile with linear interpolation between order statistics
/// (position 1 + p (n - 1), the default of R's summary()).
inline double quantile_sorted(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) throw InvalidArgument("quantile of an empty sample");
    const double h = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline ColumnSummary summarize_column(std::string name, std::vector<double> values) {
    ColumnSummary s;
    s.name = std::move(name);
    s.count = values.size();
    if (values.empty()) return s;
    std::sort(values.begin(), values.end());
    s.min = values.front();
    s.max = values.back();
    s.q1 = quantile_sorted(values, 0.25);
    s.median = quantile_sorted(values, 0.5);
    s.q3 = quantile_sorted(values, 0.75);
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    return s;
}

/// Per-column min / quartiles / mean / max / count for the offer rows, with
/// the customer-level covariates summarized once per customer that appears.
inline DatasetSummary summarize_dataset(const std::vector<OfferObservation>& rows,
                                        const std::vector<CustomerProfile>& customers) {
    DatasetSummary out;
    if (rows.empty()) return out;
    out.empty = false;
    std::vector<double> id, setnum, x1, contract, discount;
    std::map<long, bool> seen;
    for (const auto& r : rows) {
        id.push_back(static_cast<double>(r.customer_id));
        setnum.push_back(static_cast<double>(r.occasion));
        x1.push_back(OfferAttributes::intercept);
        contract.push_back(r.attributes.contract_length);
        discount.push_back(r.attributes.discount);
        seen[r.customer_id] = true;
        switch (r.outcome) {
            case Outcome::accepted: ++out.accepted; break;
            case Outcome::rejected: ++out.rejected; break;
            case Outcome::unlabeled: ++out.unlabeled; break;
        }
    }
    std::vector<double> demo, loyal;
    for (const auto& c : customers) {
        if (!seen.count(c.customer_id)) continue;
        demo.push_back(c.demographic_centered);
        loyal.push_back(c.loyalty_centered);
    }
    out.columns.push_back(summarize_column("id", std::move(id)));
    out.columns.push_back(summarize_column("setnum", std::move(setnum)));
    out.columns.push_back(summarize_column("X1", std::move(x1)));
    out.columns.push_back(summarize_column("contract length (years)", std::move(contract)));
    out.columns.push_back(summarize_column("offer discount", std::move(discount)));
    out.columns.push_back(summarize_column("demographic variable (mean centered)", std::move(demo)));
    out.columns.push_back(summarize_column("loyalty variable (mean centered)", std::move(loyal)));
    return out;
}

inline std::string DatasetSummary::to_text(const std::string& title) const {
    std::ostringstream os;
    os << title << '\n';
    if (empty) {
        os << "(empty: no observations)\n";
        return os.str();
    }
    os.precision(6);
    os << "statistic";
    for (const auto& c : columns) os << '\t' << c.name;
    os << '\n';
    auto row = [&](const char* label, auto get) {
        os << label;
        for (const auto& c : columns) {
            os << '\t';
            if (c.count) os << get(c);
        }
        os << '\n';
    };
    row("Min.", [](const ColumnSummary& c) { return c.min; });
    row("1st Qu.", [](const ColumnSummary& c) { return c.q1; });
    row("Median", [](const ColumnSummary& c) { return c.median; });
    row("Mean", [](const ColumnSummary& c) { return c.mean; });
    row("3rd Qu.", [](const ColumnSummary& c) { return c.q3; });
    row("Max.", [](const ColumnSummary& c) { return c.max; });
    os << "Number of Observations";
    for (const auto& c : columns) os << '\t' << c.count;
    os << "\n\nDependent Variable Counts\nNo\tYes\n" << rejected << '\t' << accepted << '\n';
    if (unlabeled) os << "unlabeled\t" << unlabeled << '\n';
    return os.str();
}

/// Fraction of customers per training offer count.
inline std::map<int, double> offer_count_shares(const std::vector<OfferObservation>& train) {
    std::map<long, int> per_customer;
    for (const auto& r : train) ++per_customer[r.customer_id];
    std::map<int, double> shares;
    for (const auto& [id, n] : per_customer) shares[n] += 1.0;
    for (auto& [n, s] : shares) s /= static_cast<double>(per_customer.size());
    return shares;
}

}  // namespace offerlab
