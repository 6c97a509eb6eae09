#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <future>
#include <numeric>
#include <thread>
#include <vector>

#include "errors.hpp"
#include "hb_mcmc.hpp"
#include "resampling.hpp"

namespace offerlab {

struct ScoredLabels {
    std::vector<double> scores;
    std::vector<int> labels;

    std::size_t positives() const {
        return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
    }

    void validate() const {
        if (scores.size() != labels.size())
            throw InvalidArgument("scores and labels differ in length");
        if (scores.empty()) throw InvalidArgument("no scored observations");
        for (int l : labels)
            if (l != 0 && l != 1) throw InvalidArgument("labels must be 0 or 1");
        for (double s : scores)
            if (!std::isfinite(s)) throw InvalidArgument("non-finite score");
    }

    void require_both_classes() const {
        const auto pos = positives();
        if (pos == 0 || pos == labels.size())
            throw DegenerateError("AUC is undefined when only one class is present");
    }
};

namespace detail {

/// 1-based midranks of x (ties share the average rank).
inline std::vector<double> midranks(const std::vector<double>& x) {
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return x[a] < x[b]; });
    std::vector<double> rank(x.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t t = i; t <= j; ++t) rank[order[t]] = r;
        i = j + 1;
    }
    return rank;
}

}  // namespace detail

/// Mann-Whitney AUC: share of (positive, negative) pairs ranked correctly,
/// ties counted one half.
inline double auc(const ScoredLabels& data) {
    data.validate();
    data.require_both_classes();
    const auto rank = detail::midranks(data.scores);
    double rank_sum = 0.0;
    for (std::size_t i = 0; i < rank.size(); ++i)
        if (data.labels[i] == 1) rank_sum += rank[i];
    const auto n1 = static_cast<double>(data.positives());
    const auto n0 = static_cast<double>(data.labels.size()) - n1;
    return (rank_sum - n1 * (n1 + 1.0) / 2.0) / (n1 * n0);
}

/// Share of rows where (score > base_rate) agrees with the label.
inline double accuracy_at_base_rate(const ScoredLabels& data, double base_rate) {
    data.validate();
    if (!(base_rate > 0.0 && base_rate < 1.0))
        throw InvalidArgument("base rate must lie strictly between 0 and 1");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < data.scores.size(); ++i)
        if ((data.scores[i] > base_rate) == (data.labels[i] == 1)) ++hits;
    return static_cast<double>(hits) / static_cast<double>(data.scores.size());
}

struct LiftPoint {
    double fraction = 0.0;
    double capture = 0.0;
};

/// Cumulative capture of positives in the top-scored fraction of rows, at
/// fractions 0, 1/g, ..., 1. Sort is descending by score, ties by index.
inline std::vector<LiftPoint> lift_curve(const ScoredLabels& data, int granularity) {
    data.validate();
    if (granularity < 1) throw InvalidArgument("lift curve granularity must be at least 1");
    const auto total = data.positives();
    if (total == 0) throw DegenerateError("lift curve needs at least one positive label");
    const std::size_t n = data.scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](auto a, auto b) { return data.scores[a] > data.scores[b]; });
    std::vector<std::size_t> cum(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) cum[i + 1] = cum[i] + (data.labels[order[i]] == 1 ? 1 : 0);
    std::vector<LiftPoint> out;
    for (int g = 0; g <= granularity; ++g) {
        const double f = static_cast<double>(g) / granularity;
        const auto top = g == granularity ? n
                                          : static_cast<std::size_t>(std::llround(f * static_cast<double>(n)));
        out.push_back({f, static_cast<double>(cum[top]) / static_cast<double>(total)});
    }
    return out;
}

struct DelongResult {
    double auc_a = 0.0;
    double auc_b = 0.0;
    double variance = 0.0;  // of auc_a - auc_b
    double z = 0.0;
    double p_value = 1.0;
};

/// Placement values of one score vector: for each positive, the share of
/// negatives it outranks; for each negative, the share of positives that
/// outrank it (ties one half). Computed from midranks.
struct Placements {
    std::vector<double> positive;  // V10
    std::vector<double> negative;  // V01
    double auc = 0.0;
};

inline Placements placement_values(const std::vector<double>& scores, const std::vector<int>& labels) {
    std::vector<double> pos, neg;
    for (std::size_t i = 0; i < scores.size(); ++i) (labels[i] == 1 ? pos : neg).push_back(scores[i]);
    const auto m = static_cast<double>(pos.size());
    const auto n = static_cast<double>(neg.size());
    const auto all = detail::midranks(scores);
    const auto rpos = detail::midranks(pos);
    const auto rneg = detail::midranks(neg);
    Placements p;
    std::size_t ip = 0, in = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] == 1) {
            p.positive.push_back((all[i] - rpos[ip++]) / n);
        } else {
            p.negative.push_back(1.0 - (all[i] - rneg[in++]) / m);
        }
    }
    p.auc = std::accumulate(p.positive.begin(), p.positive.end(), 0.0) / m;
    return p;
}

/// Paired comparison of two correlated ROC curves on the same labels.
inline DelongResult delong_test(const std::vector<double>& scores_a, const std::vector<double>& scores_b,
                                const std::vector<int>& labels) {
    ScoredLabels a{scores_a, labels}, b{scores_b, labels};
    a.validate();
    b.validate();
    a.require_both_classes();
    const auto pa = placement_values(scores_a, labels);
    const auto pb = placement_values(scores_b, labels);
    auto cov = [](const std::vector<double>& x, const std::vector<double>& y) {
        const double n = static_cast<double>(x.size());
        if (x.size() < 2) return 0.0;
        const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
        const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - mx) * (y[i] - my);
        return s / (n - 1.0);
    };
    const double m = static_cast<double>(pa.positive.size());
    const double n = static_cast<double>(pa.negative.size());
    const double s10 = cov(pa.positive, pa.positive) + cov(pb.positive, pb.positive) -
                       2.0 * cov(pa.positive, pb.positive);
    const double s01 = cov(pa.negative, pa.negative) + cov(pb.negative, pb.negative) -
                       2.0 * cov(pa.negative, pb.negative);
    DelongResult r;
    r.auc_a = pa.auc;
    r.auc_b = pb.auc;
    r.variance = s10 / m + s01 / n;
    const double diff = r.auc_a - r.auc_b;
    if (!(r.variance > 0.0)) {
        if (diff != 0.0)
            throw DegenerateError("DeLong variance is zero while the AUCs differ");
        r.z = 0.0;
        r.p_value = 1.0;
        return r;
    }
    r.z = diff / std::sqrt(r.variance);
    r.p_value = std::erfc(std::abs(r.z) / std::sqrt(2.0));
    return r;
}

// ---------------------------------------------------------------------------
// cross-validated choice of the number of mixture components

struct ResamplingScheme {
    SplitKind kind = SplitKind::kfold_by_occasion;
    int folds = 10;
    int repeats = 10;
};

struct TuningRow {
    int ncomp = 1;
    double mean_auc = 0.0;
    double mean_accuracy = 0.0;
    std::vector<double> aucs;  // one per resample
};

struct TuningReport {
    std::vector<TuningRow> rows;
    int selected_ncomp = 1;
};

/// Scores for held-out rows: draw-averaged for customers in the posterior,
/// population-mean for customers the fit never saw.
inline std::vector<double> score_rows(const PosteriorDraws& draws, const std::vector<LabeledRow>& rows) {
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) {
        const auto mode = draws.find(r.customer_id) ? PredictionMode::draw_averaged
                                                    : PredictionMode::population_mean;
        out.push_back(predict_probability(draws, r.customer_id, r.x, mode));
    }
    return out;
}

inline ScoredLabels scored_labels(const std::vector<double>& scores, const std::vector<LabeledRow>& rows) {
    ScoredLabels s;
    s.scores = scores;
    for (const auto& r : rows) s.labels.push_back(r.y > 0.5 ? 1 : 0);
    return s;
}

/// Fits every candidate on the training part of every resample, scores the
/// validation part and picks the candidate with the largest mean AUC (ties
/// go to the smaller ncomp). Resamples and MCMC seeds are shared by all
/// candidates. Cells run on up to `threads` worker threads; results do not
/// depend on the thread count.
inline TuningReport tune_ncomp(const std::vector<LabeledRow>& rows, const CovariateMap& covariates,
                               Eigen::Index covariate_dims, const std::vector<int>& candidates,
                               const ResamplingScheme& scheme, const McmcConfig& config,
                               unsigned threads = 0) {
    if (candidates.empty()) throw InvalidArgument("no ncomp candidates to tune");
    if (scheme.repeats < 1) throw InvalidArgument("resampling needs at least one repeat");
    struct Cell {
        std::size_t candidate;
        int repeat;
        int fold;
        double auc = 0.0;
        double accuracy = 0.0;
    };
    const int folds = scheme.kind == SplitKind::kfold_by_occasion ? scheme.folds : 1;
    if (scheme.kind == SplitKind::kfold_by_occasion) assign_folds(rows, folds, config.seed);  // validates k
    std::vector<Cell> cells;
    for (std::size_t c = 0; c < candidates.size(); ++c)
        for (int r = 0; r < scheme.repeats; ++r)
            for (int f = 0; f < folds; ++f) cells.push_back({c, r, f});

    auto run = [&](Cell& cell) {
        const std::uint64_t split_seed = derive_seed(config.seed, "resample", static_cast<std::uint64_t>(cell.repeat));
        SplitSpec spec{scheme.kind, folds, cell.fold};
        auto [train, valid] = split_train_validation(rows, spec, split_seed);
        McmcConfig mc = config;
        mc.seed = derive_seed(config.seed, "tune-chain",
                              static_cast<std::uint64_t>(cell.repeat * 1000 + cell.fold));
        auto draws = fit_hb_mixed_logit(make_choice_data(train, covariates, covariate_dims),
                                        candidates[cell.candidate], mc);
        const auto labeled = scored_labels(score_rows(draws, valid), valid);
        double pos = 0.0;
        for (const auto& r : train) pos += r.y;
        const double base = pos / static_cast<double>(train.size());
        const auto npos = labeled.positives();
        if (npos == 0 || npos == labeled.labels.size()) {
            // single-class validation part: no AUC, left out of the means
            cell.auc = std::numeric_limits<double>::quiet_NaN();
            cell.accuracy = cell.auc;
            return;
        }
        cell.auc = auc(labeled);
        cell.accuracy = base > 0.0 && base < 1.0 ? accuracy_at_base_rate(labeled, base) : 0.0;
    };

    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(cells.size()));
    if (threads <= 1) {
        for (auto& cell : cells) run(cell);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::future<void>> workers;
        for (unsigned t = 0; t < threads; ++t)
            workers.push_back(std::async(std::launch::async, [&] {
                for (std::size_t i = next++; i < cells.size(); i = next++) run(cells[i]);
            }));
        for (auto& w : workers) w.get();
    }

    TuningReport report;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
        TuningRow row;
        row.ncomp = candidates[c];
        double auc_sum = 0.0, acc_sum = 0.0;
        std::size_t used = 0;
        for (const auto& cell : cells) {
            if (cell.candidate != c) continue;
            row.aucs.push_back(cell.auc);
            if (std::isnan(cell.auc)) continue;
            auc_sum += cell.auc;
            acc_sum += cell.accuracy;
            ++used;
        }
        if (used == 0) throw DegenerateError("no resample had both classes in its validation part");
        row.mean_auc = auc_sum / static_cast<double>(used);
        row.mean_accuracy = acc_sum / static_cast<double>(used);
        report.rows.push_back(std::move(row));
    }
    const TuningRow* best = nullptr;
    for (const auto& row : report.rows)
        if (!best || row.mean_auc > best->mean_auc ||
            (row.mean_auc == best->mean_auc && row.ncomp < best->ncomp))
            best = &row;
    report.selected_ncomp = best->ncomp;
    return report;
}

}  // namespace offerlab
