#pragma once

// Pipeline configuration: one JSON document shared by every subcommand.
// Missing keys keep their defaults; unknown keys are rejected so typos do
// not silently fall back to defaults.

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "csv.hpp"
#include "errors.hpp"
#include "hb_mcmc.hpp"
#include "model_eval.hpp"
#include "nop.hpp"
#include "offer_sim.hpp"

namespace offerlab {

using json = nlohmann::json;

struct TuningConfig {
    std::vector<int> candidates{1, 2, 3};
    ResamplingScheme scheme;
    unsigned threads = 0;
};

struct RetailConfig {
    std::string input;  // Online Retail II CSV; empty when not supplied
    std::string description_contains = "CUP";
    int top_products = 18;
    /// Explicit StockCodes; overrides the description filter when non-empty.
    std::vector<std::string> products;
};

struct PipelineConfig {
    std::uint64_t seed = 20220101;
    std::string out_dir = "out";
    GroundTruthConfig simulation = GroundTruthConfig::reference_population();
    McmcConfig mcmc;
    int ncomp = 1;
    bool with_demographic = false;
    TuningConfig tuning;
    int lift_granularity = 10;
    double elasticity_delta = 0.10;
    NopConfig nop;
    /// Optional CSV of (customer_id, mrp); customers not listed use nop.default_mrp.
    std::string mrp_csv;
    RetailConfig retail;

    /// Pushes the top-level seed into the sub-configs.
    void apply_seed(std::uint64_t s) {
        seed = s;
        simulation.seed = s;
        mcmc.seed = s;
    }

    void validate() const {
        simulation.validate();
        mcmc.validate(kOfferDims);
        nop.validate();
        if (ncomp < 1) throw ConfigError("ncomp must be at least 1");
        if (tuning.candidates.empty()) throw ConfigError("tuning needs at least one candidate");
        for (int c : tuning.candidates)
            if (c < 1) throw ConfigError("ncomp candidates must be at least 1");
        if (tuning.scheme.repeats < 1) throw ConfigError("tuning repeats must be at least 1");
        if (tuning.scheme.kind == SplitKind::kfold_by_occasion && tuning.scheme.folds < 2)
            throw ConfigError("k-fold tuning needs at least 2 folds");
        if (lift_granularity < 1) throw ConfigError("lift granularity must be at least 1");
        if (!(elasticity_delta > 0.0 && elasticity_delta <= 0.1 + 1e-12))
            throw ConfigError("elasticity delta must lie in (0, 0.1]");
        if (retail.top_products < 1) throw ConfigError("retail top_products must be at least 1");
        if (out_dir.empty()) throw ConfigError("out_dir is empty");
    }
};

namespace detail {

inline void check_keys(const json& j, std::string_view where, std::initializer_list<std::string_view> keys) {
    if (!j.is_object()) throw ConfigError(std::string(where) + " must be a JSON object");
    for (const auto& [k, v] : j.items()) {
        bool known = false;
        for (auto key : keys) known = known || key == k;
        if (!known) throw ConfigError("unknown key '" + k + "' in " + std::string(where));
    }
}

template <class T>
void read_opt(const json& j, const char* key, T& out) {
    auto it = j.find(key);
    if (it == j.end()) return;
    try {
        out = it->get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
    }
}

inline Eigen::Vector3d vec3(const json& j, const char* what) {
    if (!j.is_array() || j.size() != 3) throw ConfigError(std::string(what) + " must have 3 entries");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline Eigen::Matrix3d mat3(const json& j, const char* what) {
    if (!j.is_array() || j.size() != 3) throw ConfigError(std::string(what) + " must be 3 x 3");
    Eigen::Matrix3d m;
    for (int r = 0; r < 3; ++r) m.row(r) = vec3(j[static_cast<std::size_t>(r)], what).transpose();
    return m;
}

inline json to_json(const Eigen::Vector3d& v) { return json::array({v[0], v[1], v[2]}); }

inline json to_json(const Eigen::Matrix3d& m) {
    json out = json::array();
    for (int r = 0; r < 3; ++r) out.push_back(json::array({m(r, 0), m(r, 1), m(r, 2)}));
    return out;
}

inline const char* scheme_name(SplitKind k) {
    return k == SplitKind::kfold_by_occasion ? "kfold" : "holdout";
}

inline const char* mode_name(PredictionMode m) {
    switch (m) {
        case PredictionMode::draw_averaged: return "draw-averaged";
        case PredictionMode::posterior_mean: return "posterior-mean";
        case PredictionMode::population_mean: return "population-mean";
    }
    return "";
}

}  // namespace detail

inline json to_json(const McmcConfig& c) {
    return {{"draws", c.draws},
            {"burn_in", c.burn_in},
            {"keep", c.keep},
            {"rw_scale", c.rw_scale},
            {"mean_prior_location", c.mean_prior_location},
            {"mean_prior_precision", c.mean_prior_precision},
            {"iw_df", c.iw_df},
            {"iw_scale", c.iw_scale},
            {"dirichlet_a", c.dirichlet_a},
            {"delta_prior_precision", c.delta_prior_precision},
            {"fractional_weight", c.fractional_weight},
            {"seed", c.seed}};
}

inline McmcConfig mcmc_from_json(const json& j, McmcConfig c = {}) {
    detail::check_keys(j, "mcmc",
                       {"draws", "burn_in", "keep", "rw_scale", "mean_prior_location", "mean_prior_precision",
                        "iw_df", "iw_scale", "dirichlet_a", "delta_prior_precision", "fractional_weight", "seed"});
    detail::read_opt(j, "draws", c.draws);
    detail::read_opt(j, "burn_in", c.burn_in);
    detail::read_opt(j, "keep", c.keep);
    detail::read_opt(j, "rw_scale", c.rw_scale);
    detail::read_opt(j, "mean_prior_location", c.mean_prior_location);
    detail::read_opt(j, "mean_prior_precision", c.mean_prior_precision);
    detail::read_opt(j, "iw_df", c.iw_df);
    detail::read_opt(j, "iw_scale", c.iw_scale);
    detail::read_opt(j, "dirichlet_a", c.dirichlet_a);
    detail::read_opt(j, "delta_prior_precision", c.delta_prior_precision);
    detail::read_opt(j, "fractional_weight", c.fractional_weight);
    detail::read_opt(j, "seed", c.seed);
    return c;
}

inline json to_json(const GroundTruthConfig& c) {
    json mix = json::array();
    for (const auto& m : c.mixture)
        mix.push_back({{"weight", m.weight}, {"mean", detail::to_json(m.mean)},
                       {"covariance", detail::to_json(m.covariance)}});
    json counts = json::array();
    for (const auto& b : c.offer_count_distribution)
        counts.push_back({{"offers", b.offers}, {"probability", b.probability}});
    return {{"n_customers", c.n_customers},
            {"mixture", mix},
            {"loyalty_loadings", detail::to_json(c.loyalty_loadings)},
            {"offer_count_distribution", counts},
            {"discount_min", c.discount_min},
            {"discount_max", c.discount_max},
            {"contract_values", c.contract_values}};
}

inline GroundTruthConfig simulation_from_json(const json& j, GroundTruthConfig c = GroundTruthConfig::reference_population()) {
    detail::check_keys(j, "simulation",
                       {"n_customers", "mixture", "loyalty_loadings", "offer_count_distribution", "discount_min",
                        "discount_max", "contract_values"});
    detail::read_opt(j, "n_customers", c.n_customers);
    if (auto it = j.find("mixture"); it != j.end()) {
        if (!it->is_array()) throw ConfigError("simulation.mixture must be an array");
        c.mixture.clear();
        for (const auto& m : *it) {
            detail::check_keys(m, "simulation.mixture[]", {"weight", "mean", "covariance"});
            MixtureComponentSpec s;
            detail::read_opt(m, "weight", s.weight);
            if (m.contains("mean")) s.mean = detail::vec3(m["mean"], "mixture mean");
            if (m.contains("covariance")) s.covariance = detail::mat3(m["covariance"], "mixture covariance");
            c.mixture.push_back(s);
        }
    }
    if (auto it = j.find("loyalty_loadings"); it != j.end()) c.loyalty_loadings = detail::vec3(*it, "loyalty_loadings");
    if (auto it = j.find("offer_count_distribution"); it != j.end()) {
        if (!it->is_array()) throw ConfigError("offer_count_distribution must be an array");
        c.offer_count_distribution.clear();
        for (const auto& b : *it) {
            detail::check_keys(b, "offer_count_distribution[]", {"offers", "probability"});
            OfferCountBucket bucket;
            detail::read_opt(b, "offers", bucket.offers);
            detail::read_opt(b, "probability", bucket.probability);
            c.offer_count_distribution.push_back(bucket);
        }
    }
    detail::read_opt(j, "discount_min", c.discount_min);
    detail::read_opt(j, "discount_max", c.discount_max);
    detail::read_opt(j, "contract_values", c.contract_values);
    return c;
}

inline json to_json(const NopConfig& c) {
    json bounds = json::object();
    for (const auto& [seg, b] : c.r_bounds) bounds[std::string(to_string(seg))] = json::array({b.lower, b.upper});
    return {{"annual_rate", c.annual_rate},
            {"mrc", c.mrc},
            {"initial_cost", c.initial_cost},
            {"default_mrp", c.default_mrp},
            {"r_bounds", bounds},
            {"contract_options", c.contract_options},
            {"probability_mode", detail::mode_name(c.probability_mode)}};
}

inline NopConfig nop_from_json(const json& j, NopConfig c = {}) {
    detail::check_keys(j, "nop",
                       {"annual_rate", "mrc", "initial_cost", "default_mrp", "r_bounds", "contract_options",
                        "probability_mode"});
    detail::read_opt(j, "annual_rate", c.annual_rate);
    detail::read_opt(j, "mrc", c.mrc);
    detail::read_opt(j, "initial_cost", c.initial_cost);
    detail::read_opt(j, "default_mrp", c.default_mrp);
    detail::read_opt(j, "contract_options", c.contract_options);
    if (auto it = j.find("r_bounds"); it != j.end()) {
        if (!it->is_object()) throw ConfigError("nop.r_bounds must be an object keyed by segment");
        for (const auto& [name, v] : it->items()) {
            Segment seg;
            try {
                seg = segment_from_string(name);
            } catch (const InvalidArgument& e) {
                throw ConfigError(e.what());
            }
            if (!v.is_array() || v.size() != 2) throw ConfigError("r_bounds entries are [lower, upper]");
            c.r_bounds[seg] = {v[0].get<double>(), v[1].get<double>()};
        }
    }
    if (auto it = j.find("probability_mode"); it != j.end()) {
        const auto m = it->get<std::string>();
        if (m == "draw-averaged") c.probability_mode = PredictionMode::draw_averaged;
        else if (m == "posterior-mean") c.probability_mode = PredictionMode::posterior_mean;
        else throw ConfigError("probability_mode must be 'draw-averaged' or 'posterior-mean'");
    }
    return c;
}

inline json to_json(const PipelineConfig& c) {
    return {{"seed", c.seed},
            {"out_dir", c.out_dir},
            {"simulation", to_json(c.simulation)},
            {"mcmc", to_json(c.mcmc)},
            {"model", {{"ncomp", c.ncomp}, {"with_demographic", c.with_demographic}}},
            {"tuning",
             {{"candidates", c.tuning.candidates},
              {"scheme", detail::scheme_name(c.tuning.scheme.kind)},
              {"folds", c.tuning.scheme.folds},
              {"repeats", c.tuning.scheme.repeats},
              {"threads", c.tuning.threads}}},
            {"evaluation", {{"lift_granularity", c.lift_granularity}}},
            {"segmentation", {{"delta", c.elasticity_delta}}},
            {"nop", to_json(c.nop)},
            {"mrp_csv", c.mrp_csv},
            {"retail",
             {{"input", c.retail.input},
              {"description_contains", c.retail.description_contains},
              {"top_products", c.retail.top_products},
              {"products", c.retail.products}}}};
}

/// Parses a config document. The top-level seed becomes the simulation and
/// MCMC seed unless "mcmc" sets its own.
inline PipelineConfig pipeline_config_from_json(const json& j) {
    detail::check_keys(j, "config",
                       {"seed", "out_dir", "simulation", "mcmc", "model", "tuning", "evaluation", "segmentation",
                        "nop", "mrp_csv", "retail"});
    PipelineConfig c;
    std::uint64_t seed = c.seed;
    detail::read_opt(j, "seed", seed);
    c.apply_seed(seed);
    detail::read_opt(j, "out_dir", c.out_dir);
    if (j.contains("simulation")) c.simulation = simulation_from_json(j["simulation"], c.simulation);
    c.simulation.seed = seed;
    if (j.contains("mcmc")) c.mcmc = mcmc_from_json(j["mcmc"], c.mcmc);
    if (auto it = j.find("model"); it != j.end()) {
        detail::check_keys(*it, "model", {"ncomp", "with_demographic"});
        detail::read_opt(*it, "ncomp", c.ncomp);
        detail::read_opt(*it, "with_demographic", c.with_demographic);
    }
    if (auto it = j.find("tuning"); it != j.end()) {
        detail::check_keys(*it, "tuning", {"candidates", "scheme", "folds", "repeats", "threads"});
        detail::read_opt(*it, "candidates", c.tuning.candidates);
        detail::read_opt(*it, "folds", c.tuning.scheme.folds);
        detail::read_opt(*it, "repeats", c.tuning.scheme.repeats);
        detail::read_opt(*it, "threads", c.tuning.threads);
        if (it->contains("scheme")) {
            const auto s = (*it)["scheme"].get<std::string>();
            if (s == "kfold") c.tuning.scheme.kind = SplitKind::kfold_by_occasion;
            else if (s == "holdout") c.tuning.scheme.kind = SplitKind::per_customer_random_occasion;
            else throw ConfigError("tuning.scheme must be 'kfold' or 'holdout'");
        }
    }
    if (auto it = j.find("evaluation"); it != j.end()) {
        detail::check_keys(*it, "evaluation", {"lift_granularity"});
        detail::read_opt(*it, "lift_granularity", c.lift_granularity);
    }
    if (auto it = j.find("segmentation"); it != j.end()) {
        detail::check_keys(*it, "segmentation", {"delta"});
        detail::read_opt(*it, "delta", c.elasticity_delta);
    }
    if (j.contains("nop")) c.nop = nop_from_json(j["nop"], c.nop);
    detail::read_opt(j, "mrp_csv", c.mrp_csv);
    if (auto it = j.find("retail"); it != j.end()) {
        detail::check_keys(*it, "retail", {"input", "description_contains", "top_products", "products"});
        detail::read_opt(*it, "input", c.retail.input);
        detail::read_opt(*it, "description_contains", c.retail.description_contains);
        detail::read_opt(*it, "top_products", c.retail.top_products);
        detail::read_opt(*it, "products", c.retail.products);
    }
    c.validate();
    return c;
}

inline PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
    const std::string text = read_file(path);
    try {
        return pipeline_config_from_json(json::parse(text));
    } catch (const json::exception& e) {
        throw ConfigError("config '" + path.string() + "': " + e.what());
    }
}

}  // namespace offerlab
