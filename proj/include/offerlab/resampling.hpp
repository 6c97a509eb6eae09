#pragma once

// Train/validation splitting with the choice occasion as the resampling
// unit. Works on any row type exposing `customer_id` and `occasion`.

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "rng.hpp"

namespace offerlab {

enum class SplitKind {
    /// Per customer with >= 2 occasions, one uniformly chosen non-first
    /// occasion is held out.
    per_customer_random_occasion,
    /// All (customer, occasion) pairs are dealt into k folds.
    kfold_by_occasion,
};

struct SplitSpec {
    SplitKind kind = SplitKind::kfold_by_occasion;
    int folds = 10;
    /// Fold used as validation data (k-fold only).
    int fold_index = 0;
};

using OccasionKey = std::pair<long, long>;

template <class Row>
std::vector<OccasionKey> distinct_occasions(const std::vector<Row>& rows) {
    std::set<OccasionKey> keys;
    for (const auto& r : rows) keys.emplace(r.customer_id, r.occasion);
    return {keys.begin(), keys.end()};
}

/// Fold of every (customer, occasion) pair: a seeded shuffle dealt round-robin.
template <class Row>
std::map<OccasionKey, int> assign_folds(const std::vector<Row>& rows, int folds,
                                        std::uint64_t seed) {
    auto keys = distinct_occasions(rows);
    if (folds < 2) throw InvalidArgument("k-fold splitting needs at least 2 folds");
    if (static_cast<std::size_t>(folds) > keys.size())
        throw InvalidArgument("more folds (" + std::to_string(folds) + ") than occasions (" +
                              std::to_string(keys.size()) + ")");
    Rng rng(seed, "kfold");
    std::shuffle(keys.begin(), keys.end(), rng.engine());
    std::map<OccasionKey, int> out;
    for (std::size_t i = 0; i < keys.size(); ++i)
        out[keys[i]] = static_cast<int>(i % static_cast<std::size_t>(folds));
    return out;
}

/// Occasions chosen for validation under the per-customer holdout rule.
template <class Row>
std::set<OccasionKey> holdout_occasions(const std::vector<Row>& rows, std::uint64_t seed) {
    std::map<long, std::vector<long>> per_customer;
    for (const auto& key : distinct_occasions(rows)) per_customer[key.first].push_back(key.second);
    std::set<OccasionKey> out;
    for (const auto& [id, occasions] : per_customer) {
        if (occasions.size() < 2) continue;
        // occasions are sorted; the first one never leaves training
        Rng rng(seed, "holdout", static_cast<std::uint64_t>(id));
        const auto pick = rng.uniform_int(1, static_cast<long>(occasions.size()) - 1);
        out.emplace(id, occasions[static_cast<std::size_t>(pick)]);
    }
    return out;
}

template <class Row>
std::pair<std::vector<Row>, std::vector<Row>> split_train_validation(const std::vector<Row>& rows,
                                                                     const SplitSpec& spec,
                                                                     std::uint64_t seed) {
    std::pair<std::vector<Row>, std::vector<Row>> out;
    if (spec.kind == SplitKind::per_customer_random_occasion) {
        const auto held = holdout_occasions(rows, seed);
        for (const auto& r : rows)
            (held.count({r.customer_id, r.occasion}) ? out.second : out.first).push_back(r);
        return out;
    }
    if (spec.fold_index < 0 || spec.fold_index >= spec.folds)
        throw InvalidArgument("fold index out of range");
    const auto folds = assign_folds(rows, spec.folds, seed);
    for (const auto& r : rows)
        (folds.at({r.customer_id, r.occasion}) == spec.fold_index ? out.second : out.first)
            .push_back(r);
    return out;
}

}  // namespace offerlab
