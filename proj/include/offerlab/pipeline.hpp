#pragma once

// Subcommand orchestration. Every stage reads its inputs from the output
// directory, writes its artifacts atomically, and records a manifest.

#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "config.hpp"
#include "csv.hpp"
#include "errors.hpp"
#include "hb_mcmc.hpp"
#include "io.hpp"
#include "model_eval.hpp"
#include "nop.hpp"
#include "offer_sim.hpp"
#include "resampling.hpp"
#include "retail.hpp"
#include "segmentation.hpp"

namespace offerlab {

inline const std::vector<std::string>& pipeline_commands() {
    static const std::vector<std::string> c{"simulate", "fit",      "tune",          "predict", "evaluate",
                                            "segment",  "optimize", "ingest-retail", "report"};
    return c;
}

struct PipelineResult {
    std::vector<fs::path> artifacts;
    std::string summary;
};

namespace detail {

class Stage {
public:
    Stage(std::string command, const PipelineConfig& config) : command_(std::move(command)), config_(config) {}

    fs::path path(const std::string& name) const { return fs::path(config_.out_dir) / name; }

    /// Path of an artifact produced by an earlier stage.
    fs::path require(const std::string& name, const std::string& producer) const {
        auto p = path(name);
        if (!fs::exists(p))
            throw DependencyError("missing '" + p.string() + "'; run '" + producer + "' first");
        return p;
    }

    void write(const std::string& name, std::string content) {
        write_file_atomic(path(name), content);
        artifacts_[name] = std::move(content);
    }

    PipelineResult finish(std::string summary) {
        const std::string manifest = "manifest-" + command_ + ".json";
        write_file_atomic(path(manifest), make_manifest(command_, config_, artifacts_));
        PipelineResult r;
        for (const auto& [name, content] : artifacts_) r.artifacts.push_back(path(name));
        r.artifacts.push_back(path(manifest));
        r.summary = std::move(summary);
        return r;
    }

private:
    std::string command_;
    const PipelineConfig& config_;
    std::map<std::string, std::string> artifacts_;
};

inline double acceptance_share(const std::vector<OfferObservation>& rows) {
    std::size_t n = 0, acc = 0;
    for (const auto& r : rows) {
        if (r.outcome == Outcome::unlabeled) continue;
        ++n;
        if (r.outcome == Outcome::accepted) ++acc;
    }
    if (n == 0) throw DegenerateError("no labeled training rows");
    return static_cast<double>(acc) / static_cast<double>(n);
}

inline std::string metrics_json(double auc_value, double accuracy, double base_rate, std::size_t n) {
    json j{{"auc", auc_value}, {"accuracy_at_base_rate", accuracy}, {"base_rate", base_rate}, {"n_scored", n}};
    return j.dump(2) + '\n';
}

inline std::string pad(std::string s, std::size_t width) {
    if (s.size() < width) s.append(width - s.size(), ' ');
    return s;
}

inline std::string policy_table(const std::vector<OfferPolicy>& policies) {
    auto cell = [&](Segment s) -> std::string {
        for (const auto& p : policies)
            if (p.segment == s)
                return "r = " + format_fixed(100.0 * p.r, 1) + "% m = " + std::to_string(p.months) + " months" +
                       (p.degenerate ? " (degenerate)" : "");
        return "(no customers)";
    };
    std::ostringstream out;
    out << "Optimal discount rate (r) and contract length (m)\n";
    out << pad("", 10) << " | " << pad("inelastic", 34) << " | elastic\n";
    out << pad("not loyal", 10) << " | " << pad(cell(Segment::inelastic_not_loyal), 34) << " | "
        << cell(Segment::elastic_not_loyal) << "\n";
    out << pad("loyal", 10) << " | " << pad(cell(Segment::inelastic_loyal), 34) << " | "
        << cell(Segment::elastic_loyal) << "\n";
    return out.str();
}

inline std::string distribution_table(const std::array<SegmentShare, 4>& shares) {
    auto pct = [](double v) { return pad(format_fixed(v, 1), 9); };
    std::ostringstream out;
    out << "Segment distribution (% of customers)\n";
    out << pad("", 10) << " | inelastic | elastic\n";
    out << pad("not loyal", 10) << " | " << pct(shares[0].percent) << " | " << format_fixed(shares[2].percent, 1)
        << "\n";
    out << pad("loyal", 10) << " | " << pct(shares[1].percent) << " | " << format_fixed(shares[3].percent, 1)
        << "\n";
    return out.str();
}

// ---------------------------------------------------------------------------
// stages

inline PipelineResult run_simulate(const PipelineConfig& c) {
    Stage st("simulate", c);
    const auto ds = simulate(c.simulation);
    st.write("train.csv", offers_to_csv(ds.train, ds.customers));
    st.write("test.csv", offers_to_csv(ds.test, ds.customers));
    st.write("customers.csv", customers_to_csv(ds.customers));
    st.write("truth.csv", truth_to_csv(ds.truth));
    auto summary = summarize_dataset(ds.train, ds.customers).to_text("Training offers");
    st.write("train_summary.txt", summary);
    return st.finish("simulated " + std::to_string(ds.customers.size()) + " customers, " +
                     std::to_string(ds.train.size()) + " training offers, " + std::to_string(ds.test.size()) +
                     " test offers\n" + summary);
}

inline PipelineResult run_fit(const PipelineConfig& c) {
    Stage st("fit", c);
    const auto train = read_offers(st.require("train.csv", "simulate"));
    const auto customers = read_customers(st.require("customers.csv", "simulate"));
    const auto data = make_offer_choice_data(train, customers, c.with_demographic);
    const auto draws = fit_hb_mixed_logit(data, c.ncomp, c.mcmc);
    st.write("posterior.bin", posterior_to_bytes(draws));
    std::ostringstream s;
    const auto pop = draws.population_mean();
    s << "fit ncomp=" << c.ncomp << " on " << data.units.size() << " customers, " << data.observation_count()
      << " observations; " << draws.size() << " retained draws\n";
    s << "population mean: k=" << format_fixed(pop[0], 4) << " beta_contract=" << format_fixed(pop[1], 4)
      << " beta_discount=" << format_fixed(pop[2], 4) << "\n";
    s << "mean Metropolis acceptance: " << format_fixed(draws.acceptance_rate.mean(), 3) << "\n";
    st.write("fit_summary.txt", s.str());
    return st.finish(s.str());
}

inline PipelineResult run_tune(const PipelineConfig& c) {
    Stage st("tune", c);
    const auto train = read_offers(st.require("train.csv", "simulate"));
    const auto customers = read_customers(st.require("customers.csv", "simulate"));
    const auto rows = offer_rows(train);
    const auto cov = offer_covariates(customers, c.with_demographic);
    const auto report = tune_ncomp(rows, cov, c.with_demographic ? 2 : 1, c.tuning.candidates, c.tuning.scheme,
                                   c.mcmc, c.tuning.threads);
    std::vector<std::vector<std::string>> out;
    std::ostringstream s;
    s << "ncomp | mean AUC | mean accuracy\n";
    for (const auto& r : report.rows) {
        out.push_back({std::to_string(r.ncomp), format_double(r.mean_auc), format_double(r.mean_accuracy),
                       r.ncomp == report.selected_ncomp ? "1" : "0"});
        s << r.ncomp << " | " << format_fixed(r.mean_auc, 4) << " | " << format_fixed(r.mean_accuracy, 4) << "\n";
    }
    s << "selected ncomp = " << report.selected_ncomp << "\n";
    std::string csv = csv_line({"ncomp", "mean_auc", "mean_accuracy", "selected"});
    for (const auto& r : out) csv += csv_line(r);
    st.write("tuning.csv", csv);
    return st.finish(s.str());
}

inline PipelineResult run_predict(const PipelineConfig& c) {
    Stage st("predict", c);
    const auto draws = read_posterior(st.require("posterior.bin", "fit"));
    const auto test = read_offers(st.require("test.csv", "simulate"));
    std::vector<ScoreRow> scores;
    for (const auto& o : test) {
        const auto mode = draws.find(o.customer_id) ? PredictionMode::draw_averaged : PredictionMode::population_mean;
        ScoreRow r;
        r.customer_id = o.customer_id;
        r.occasion = o.occasion;
        r.score = predict_probability(draws, o, mode);
        r.label = o.outcome == Outcome::unlabeled ? -1 : o.outcome == Outcome::accepted ? 1 : 0;
        scores.push_back(r);
    }
    st.write("scores.csv", scores_to_csv(scores));
    return st.finish("scored " + std::to_string(scores.size()) + " test offers\n");
}

inline PipelineResult run_evaluate(const PipelineConfig& c) {
    Stage st("evaluate", c);
    const auto scores = read_scores(st.require("scores.csv", "predict"));
    const double base = acceptance_share(read_offers(st.require("train.csv", "simulate")));
    ScoredLabels sl;
    for (const auto& r : scores) {
        if (r.label < 0) continue;
        sl.scores.push_back(r.score);
        sl.labels.push_back(r.label);
    }
    const double a = auc(sl);
    const double acc = accuracy_at_base_rate(sl, base);
    st.write("metrics.json", metrics_json(a, acc, base, sl.scores.size()));
    st.write("lift.csv", lift_to_csv(lift_curve(sl, c.lift_granularity)));
    return st.finish("test AUC " + format_fixed(a, 4) + ", accuracy at base rate " + format_fixed(base, 4) + ": " +
                     format_fixed(acc, 4) + "\n");
}

inline PipelineResult run_segment(const PipelineConfig& c) {
    Stage st("segment", c);
    const auto draws = read_posterior(st.require("posterior.bin", "fit"));
    const auto test = read_offers(st.require("test.csv", "simulate"));
    const auto customers = read_customers(st.require("customers.csv", "simulate"));
    const auto seg = segment_customers(draws, test, customers, c.elasticity_delta);
    const auto shares = segment_distribution(seg);
    st.write("segments.csv", segments_to_csv(seg));
    std::string csv = csv_line({"segment", "customers", "percent"});
    for (const auto& s : shares)
        csv += csv_line({std::string(to_string(s.segment)), std::to_string(s.customers), format_double(s.percent)});
    st.write("segment_shares.csv", csv);
    const auto table = distribution_table(shares);
    st.write("segment_distribution.txt", table);
    return st.finish(table);
}

inline PipelineResult run_optimize(const PipelineConfig& c) {
    Stage st("optimize", c);
    const auto draws = read_posterior(st.require("posterior.bin", "fit"));
    const auto seg = read_segments(st.require("segments.csv", "segment"));
    std::map<long, double> mrp;
    if (!c.mrp_csv.empty()) {
        if (!fs::exists(c.mrp_csv)) throw DependencyError("missing mrp CSV '" + c.mrp_csv + "'");
        mrp = read_mrp(c.mrp_csv);
    }
    const auto policies = optimize_segments(seg, mrp, draws, c.nop);
    st.write("policies.csv", policies_to_csv(policies));
    std::ostringstream s;
    s << policy_table(policies);
    std::size_t zero_loyalty = 0;
    for (const auto& a : seg) zero_loyalty += a.loyalty == 0.0 ? 1 : 0;
    if (zero_loyalty > 0) s << zero_loyalty << " customer(s) with loyalty 0 contribute nothing to the objective\n";
    return st.finish(s.str());
}

inline PipelineResult run_ingest_retail(const PipelineConfig& c) {
    Stage st("ingest-retail", c);
    if (c.retail.input.empty()) throw ConfigError("retail.input is not set");
    if (!fs::exists(c.retail.input)) throw DependencyError("missing retail CSV '" + c.retail.input + "'");
    ProductFilter f;
    f.products = c.retail.products;
    f.description_contains = c.retail.description_contains;
    f.top_products = c.retail.top_products;
    const auto ds = ingest_retail_csv(c.retail.input, f);
    st.write("retail_rows.csv", labeled_rows_to_csv(ds.rows, ds.columns));
    std::string prod = csv_line({"alternative", "stock_code", "description", "volume"});
    for (std::size_t j = 0; j < ds.products.size(); ++j)
        prod += csv_line({std::to_string(j + 1), ds.products[j].stock_code, ds.products[j].description,
                          format_double(ds.products[j].volume)});
    st.write("retail_products.csv", prod);
    return st.finish("ingested " + std::to_string(ds.purchase_occasions.size()) + " customers, " +
                     std::to_string(ds.products.size()) + " products, " + std::to_string(ds.rows.size()) +
                     " rows\n");
}

inline PipelineResult run_report(const PipelineConfig& c) {
    Stage st("report", c);
    const auto metrics = json::parse(read_file(st.require("metrics.json", "evaluate")));
    const auto seg = read_segments(st.require("segments.csv", "segment"));
    const auto policies = read_policies(st.require("policies.csv", "optimize"));
    std::ostringstream s;
    s << distribution_table(segment_distribution(seg)) << "\n";
    if (fs::exists(st.path("tuning.csv"))) {
        const auto t = read_csv(st.path("tuning.csv"));
        s << "Model selection by number of mixture components\n";
        for (const auto& r : t.rows)
            s << "ncomp=" << r[0] << " mean AUC " << format_fixed(parse_double(r[1], 0, "mean_auc"), 4)
              << (r[3] == "1" ? " (selected)" : "") << "\n";
        s << "\n";
    }
    s << "Test-set fit: AUC " << format_fixed(metrics["auc"].get<double>(), 4) << ", accuracy "
      << format_fixed(metrics["accuracy_at_base_rate"].get<double>(), 4) << " (threshold "
      << format_fixed(metrics["base_rate"].get<double>(), 4) << ")\n\n";
    s << policy_table(policies);
    st.write("report.txt", s.str());
    std::string csv = csv_line({"segment", "elastic", "loyal", "r", "M_months", "nop", "n_customers"});
    for (const auto& p : policies)
        csv += csv_line({std::string(to_string(p.segment)), is_elastic(p.segment) ? "1" : "0",
                         is_loyal(p.segment) ? "1" : "0", format_double(p.r), std::to_string(p.months),
                         format_double(p.nop), std::to_string(p.n_customers)});
    st.write("policy_grid.csv", csv);
    return st.finish(s.str());
}

}  // namespace detail

/// Runs one subcommand against the config's output directory.
inline PipelineResult run_pipeline(const std::string& command, const PipelineConfig& config) {
    config.validate();
    if (command == "simulate") return detail::run_simulate(config);
    if (command == "fit") return detail::run_fit(config);
    if (command == "tune") return detail::run_tune(config);
    if (command == "predict") return detail::run_predict(config);
    if (command == "evaluate") return detail::run_evaluate(config);
    if (command == "segment") return detail::run_segment(config);
    if (command == "optimize") return detail::run_optimize(config);
    if (command == "ingest-retail") return detail::run_ingest_retail(config);
    if (command == "report") return detail::run_report(config);
    throw InvalidArgument("unknown subcommand '" + command + "'");
}

}  // namespace offerlab
