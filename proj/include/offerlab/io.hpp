#pragma once

// Artifact files: offer datasets, customers, true coefficients, posterior
// draws, scores, lift, segments, policies, and run manifests.

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include "choice.hpp"
#include "config.hpp"
#include "csv.hpp"
#include "errors.hpp"
#include "hb_mcmc.hpp"
#include "model_eval.hpp"
#include "nop.hpp"
#include "offer_sim.hpp"
#include "segmentation.hpp"

namespace offerlab {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// offer datasets

inline const std::vector<std::string>& offer_csv_header() {
    static const std::vector<std::string> h{"id", "setnum", "X1", "contract_length_years", "offer_discount",
                                            "demographic_centered", "loyalty_centered", "outcome"};
    return h;
}

/// Offer rows with the customer covariates repeated on every row.
inline std::string offers_to_csv(const std::vector<OfferObservation>& rows,
                                 const std::vector<CustomerProfile>& customers) {
    std::map<long, const CustomerProfile*> by_id;
    for (const auto& c : customers) by_id[c.customer_id] = &c;
    std::string out = csv_line(offer_csv_header());
    for (const auto& r : rows) {
        auto it = by_id.find(r.customer_id);
        if (it == by_id.end()) throw DataIntegrityError("no profile for customer " + std::to_string(r.customer_id));
        out += csv_line({std::to_string(r.customer_id), std::to_string(r.occasion),
                         format_double(OfferAttributes::intercept), format_double(r.attributes.contract_length),
                         format_double(r.attributes.discount), format_double(it->second->demographic_centered),
                         format_double(it->second->loyalty_centered), to_string(r.outcome)});
    }
    return out;
}

inline Outcome parse_outcome(const std::string& s, std::size_t line) {
    if (s == "1") return Outcome::accepted;
    if (s == "0") return Outcome::rejected;
    if (s.empty() || s == "NA") return Outcome::unlabeled;
    throw ParseError("outcome must be 0, 1 or empty, found '" + s + "'", line);
}

inline std::vector<OfferObservation> offers_from_table(const CsvTable& t) {
    const auto id = t.column("id"), set = t.column("setnum"), x1 = t.column("X1"),
               cl = t.column("contract_length_years"), disc = t.column("offer_discount"),
               out = t.column("outcome");
    std::vector<OfferObservation> rows;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& f = t.rows[i];
        const auto line = t.row_lines[i];
        OfferObservation o;
        o.customer_id = parse_long(f[id], line, "id");
        o.occasion = parse_long(f[set], line, "setnum");
        if (parse_double(f[x1], line, "X1") != 1.0) throw ParseError("X1 (intercept) must be 1", line);
        o.attributes.contract_length = parse_double(f[cl], line, "contract_length_years");
        o.attributes.discount = parse_double(f[disc], line, "offer_discount");
        o.outcome = parse_outcome(f[out], line);
        try {
            o.attributes.validate();
        } catch (const InvalidArgument& e) {
            throw ParseError(e.what(), line);
        }
        rows.push_back(o);
    }
    return rows;
}

inline std::vector<OfferObservation> read_offers(const fs::path& path) { return offers_from_table(read_csv(path)); }

inline std::string customers_to_csv(const std::vector<CustomerProfile>& customers) {
    std::string out = csv_line({"customer_id", "loyalty", "loyalty_centered", "demographic_centered"});
    for (const auto& c : customers)
        out += csv_line({std::to_string(c.customer_id), format_double(c.loyalty), format_double(c.loyalty_centered),
                         format_double(c.demographic_centered)});
    return out;
}

inline std::vector<CustomerProfile> read_customers(const fs::path& path) {
    const auto t = read_csv(path);
    const auto id = t.column("customer_id"), l = t.column("loyalty"), lc = t.column("loyalty_centered"),
               dc = t.column("demographic_centered");
    std::vector<CustomerProfile> out;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& f = t.rows[i];
        const auto line = t.row_lines[i];
        CustomerProfile c;
        c.customer_id = parse_long(f[id], line, "customer_id");
        c.loyalty = parse_double(f[l], line, "loyalty");
        c.loyalty_centered = parse_double(f[lc], line, "loyalty_centered");
        c.demographic_centered = parse_double(f[dc], line, "demographic_centered");
        if (!(c.loyalty >= 0.0 && c.loyalty <= 1.0)) throw ParseError("loyalty must lie in [0, 1]", line);
        out.push_back(c);
    }
    return out;
}

inline std::string truth_to_csv(const CoefficientMap& truth) {
    std::string out = csv_line({"customer_id", "k", "beta_contract", "beta_discount"});
    for (const auto& [id, b] : truth)
        out += csv_line({std::to_string(id), format_double(b.k), format_double(b.beta_contract),
                         format_double(b.beta_discount)});
    return out;
}

inline CoefficientMap read_truth(const fs::path& path) {
    const auto t = read_csv(path);
    const auto id = t.column("customer_id"), k = t.column("k"), bc = t.column("beta_contract"),
               bd = t.column("beta_discount");
    CoefficientMap out;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& f = t.rows[i];
        const auto line = t.row_lines[i];
        out[parse_long(f[id], line, "customer_id")] = {parse_double(f[k], line, "k"),
                                                       parse_double(f[bc], line, "beta_contract"),
                                                       parse_double(f[bd], line, "beta_discount")};
    }
    return out;
}

/// Optional per-customer monthly recurring price.
inline std::map<long, double> read_mrp(const fs::path& path) {
    const auto t = read_csv(path);
    const auto id = t.column("customer_id"), m = t.column("mrp");
    std::map<long, double> out;
    for (std::size_t i = 0; i < t.rows.size(); ++i)
        out[parse_long(t.rows[i][id], t.row_lines[i], "customer_id")] =
            parse_double(t.rows[i][m], t.row_lines[i], "mrp");
    return out;
}

// ---------------------------------------------------------------------------
// generic labeled rows (used for ingested retail data)

inline std::string labeled_rows_to_csv(const std::vector<LabeledRow>& rows, const std::vector<std::string>& names) {
    std::vector<std::string> header{"customer_id", "occasion", "alternative"};
    header.insert(header.end(), names.begin(), names.end());
    header.push_back("outcome");
    std::string out = csv_line(header);
    for (const auto& r : rows) {
        if (static_cast<std::size_t>(r.x.size()) != names.size())
            throw InvalidArgument("design row width does not match the column names");
        std::vector<std::string> f{std::to_string(r.customer_id), std::to_string(r.occasion),
                                   std::to_string(r.alternative)};
        for (Eigen::Index j = 0; j < r.x.size(); ++j) f.push_back(format_double(r.x[j]));
        f.push_back(r.y > 0.5 ? "1" : "0");
        out += csv_line(f);
    }
    return out;
}

inline std::vector<LabeledRow> read_labeled_rows(const fs::path& path) {
    const auto t = read_csv(path);
    if (t.header.size() < 5) throw ParseError("labeled rows need at least one design column", 1);
    const auto id = t.column("customer_id"), occ = t.column("occasion"), alt = t.column("alternative"),
               out_col = t.column("outcome");
    std::vector<LabeledRow> rows;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& f = t.rows[i];
        const auto line = t.row_lines[i];
        LabeledRow r;
        r.customer_id = parse_long(f[id], line, "customer_id");
        r.occasion = parse_long(f[occ], line, "occasion");
        r.alternative = parse_long(f[alt], line, "alternative");
        r.x.resize(static_cast<Eigen::Index>(t.header.size() - 4));
        Eigen::Index j = 0;
        for (std::size_t c = 0; c < t.header.size(); ++c)
            if (c != id && c != occ && c != alt && c != out_col) r.x[j++] = parse_double(f[c], line, t.header[c]);
        const auto o = parse_outcome(f[out_col], line);
        if (o == Outcome::unlabeled) throw ParseError("labeled rows need an outcome", line);
        r.y = o == Outcome::accepted ? 1.0 : 0.0;
        rows.push_back(std::move(r));
    }
    return rows;
}

// ---------------------------------------------------------------------------
// posterior store: one JSON header line, then little-endian float64 blocks
// (betas per draw, then per-draw mixture parameters, log likelihoods and
// per-customer acceptance rates)

namespace detail {

inline void put(std::string& out, double v) {
    char b[sizeof(double)];
    std::memcpy(b, &v, sizeof v);
    out.append(b, sizeof b);
}

inline void put(std::string& out, const MatrixXd& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) put(out, m(r, c));
}

struct Reader {
    std::string_view data;
    std::size_t pos = 0;

    double get() {
        if (pos + sizeof(double) > data.size()) throw DataIntegrityError("posterior store is truncated");
        double v;
        std::memcpy(&v, data.data() + pos, sizeof v);
        pos += sizeof v;
        return v;
    }

    MatrixXd get(Eigen::Index rows, Eigen::Index cols) {
        MatrixXd m(rows, cols);
        for (Eigen::Index r = 0; r < rows; ++r)
            for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = get();
        return m;
    }
};

}  // namespace detail

inline std::string posterior_to_bytes(const PosteriorDraws& d) {
    const auto ncomp = d.mixtures.empty() ? 0 : d.mixtures.front().ncomp();
    json header{{"format", "offerlab-posterior-1"},
                {"customer_ids", d.customer_ids},
                {"dims", d.dims},
                {"covariate_dims", d.covariate_dims},
                {"draws", d.size()},
                {"ncomp", ncomp},
                {"config", to_json(d.config)}};
    std::string out = header.dump() + '\n';
    const auto n = static_cast<Eigen::Index>(d.customer_ids.size());
    for (const auto& b : d.betas) {
        if (b.rows() != n || b.cols() != d.dims) throw InvalidArgument("posterior draw has the wrong shape");
        detail::put(out, b);
    }
    for (const auto& m : d.mixtures) {
        if (m.ncomp() != ncomp) throw InvalidArgument("mixture component count varies across draws");
        detail::put(out, MatrixXd(m.weights));
        detail::put(out, m.means);
        for (const auto& s : m.covariances) detail::put(out, s);
        detail::put(out, m.delta);
    }
    for (double ll : d.log_likelihood) detail::put(out, ll);
    detail::put(out, MatrixXd(d.acceptance_rate));
    return out;
}

inline PosteriorDraws posterior_from_bytes(std::string_view bytes) {
    const auto nl = bytes.find('\n');
    if (nl == std::string_view::npos) throw DataIntegrityError("posterior store has no header line");
    json h;
    try {
        h = json::parse(bytes.substr(0, nl));
    } catch (const json::exception& e) {
        throw DataIntegrityError(std::string("posterior header is not valid JSON: ") + e.what());
    }
    if (h.value("format", "") != "offerlab-posterior-1") throw DataIntegrityError("unknown posterior store format");
    PosteriorDraws d;
    d.customer_ids = h["customer_ids"].get<std::vector<long>>();
    d.dims = h["dims"].get<Eigen::Index>();
    d.covariate_dims = h["covariate_dims"].get<Eigen::Index>();
    d.config = mcmc_from_json(h["config"]);
    const auto draws = h["draws"].get<std::size_t>();
    const auto ncomp = h["ncomp"].get<Eigen::Index>();
    const auto n = static_cast<Eigen::Index>(d.customer_ids.size());
    detail::Reader in{bytes.substr(nl + 1)};
    for (std::size_t r = 0; r < draws; ++r) d.betas.push_back(in.get(n, d.dims));
    for (std::size_t r = 0; r < draws; ++r) {
        MixtureModel m;
        m.weights = in.get(ncomp, 1);
        m.means = in.get(ncomp, d.dims);
        for (Eigen::Index k = 0; k < ncomp; ++k) m.covariances.push_back(in.get(d.dims, d.dims));
        m.delta = in.get(d.dims, d.covariate_dims);
        d.mixtures.push_back(std::move(m));
    }
    for (std::size_t r = 0; r < draws; ++r) d.log_likelihood.push_back(in.get());
    d.acceptance_rate = in.get(n, 1);
    if (in.pos != in.data.size()) throw DataIntegrityError("posterior store has trailing bytes");
    return d;
}

inline void write_posterior(const fs::path& path, const PosteriorDraws& d) {
    write_file_atomic(path, posterior_to_bytes(d));
}

inline PosteriorDraws read_posterior(const fs::path& path) { return posterior_from_bytes(read_file(path)); }

// ---------------------------------------------------------------------------
// report artifacts

struct ScoreRow {
    long customer_id = 0;
    long occasion = 0;
    long alternative = 1;
    double score = 0.0;
    int label = -1;  // -1 when unlabeled
};

inline std::string scores_to_csv(const std::vector<ScoreRow>& rows) {
    std::string out = csv_line({"customer_id", "occasion", "alternative", "score", "outcome"});
    for (const auto& r : rows)
        out += csv_line({std::to_string(r.customer_id), std::to_string(r.occasion), std::to_string(r.alternative),
                         format_double(r.score), r.label < 0 ? "" : std::to_string(r.label)});
    return out;
}

inline std::vector<ScoreRow> read_scores(const fs::path& path) {
    const auto t = read_csv(path);
    const auto id = t.column("customer_id"), occ = t.column("occasion"), alt = t.column("alternative"),
               sc = t.column("score"), out_col = t.column("outcome");
    std::vector<ScoreRow> rows;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& f = t.rows[i];
        const auto line = t.row_lines[i];
        ScoreRow r;
        r.customer_id = parse_long(f[id], line, "customer_id");
        r.occasion = parse_long(f[occ], line, "occasion");
        r.alternative = parse_long(f[alt], line, "alternative");
        r.score = parse_double(f[sc], line, "score");
        const auto o = parse_outcome(f[out_col], line);
        r.label = o == Outcome::unlabeled ? -1 : o == Outcome::accepted ? 1 : 0;
        rows.push_back(r);
    }
    return rows;
}

inline std::string lift_to_csv(const std::vector<LiftPoint>& points) {
    std::string out = csv_line({"fraction", "capture"});
    for (const auto& p : points) out += csv_line({format_double(p.fraction), format_double(p.capture)});
    return out;
}

inline std::string segments_to_csv(const std::vector<SegmentAssignment>& rows) {
    std::string out = csv_line({"customer_id", "elasticity", "loyalty", "segment"});
    for (const auto& a : rows)
        out += csv_line({std::to_string(a.customer_id), format_double(a.elasticity), format_double(a.loyalty),
                         std::string(to_string(a.segment))});
    return out;
}

inline std::vector<SegmentAssignment> read_segments(const fs::path& path) {
    const auto t = read_csv(path);
    const auto id = t.column("customer_id"), e = t.column("elasticity"), l = t.column("loyalty"),
               s = t.column("segment");
    std::vector<SegmentAssignment> out;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& f = t.rows[i];
        const auto line = t.row_lines[i];
        SegmentAssignment a;
        a.customer_id = parse_long(f[id], line, "customer_id");
        a.elasticity = parse_double(f[e], line, "elasticity");
        a.loyalty = parse_double(f[l], line, "loyalty");
        try {
            a.segment = segment_from_string(f[s]);
        } catch (const InvalidArgument& err) {
            throw ParseError(err.what(), line);
        }
        out.push_back(a);
    }
    return out;
}

inline std::string policies_to_csv(const std::vector<OfferPolicy>& rows) {
    std::string out = csv_line({"segment", "r", "M_months", "nop", "n_customers", "degenerate"});
    for (const auto& p : rows)
        out += csv_line({std::string(to_string(p.segment)), format_double(p.r), std::to_string(p.months),
                         format_double(p.nop), std::to_string(p.n_customers), p.degenerate ? "1" : "0"});
    return out;
}

inline std::vector<OfferPolicy> read_policies(const fs::path& path) {
    const auto t = read_csv(path);
    const auto s = t.column("segment"), r = t.column("r"), m = t.column("M_months"), n = t.column("nop"),
               c = t.column("n_customers"), d = t.column("degenerate");
    std::vector<OfferPolicy> out;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& f = t.rows[i];
        const auto line = t.row_lines[i];
        OfferPolicy p;
        p.segment = segment_from_string(f[s]);
        p.r = parse_double(f[r], line, "r");
        p.months = static_cast<int>(parse_long(f[m], line, "M_months"));
        p.nop = parse_double(f[n], line, "nop");
        p.n_customers = static_cast<std::size_t>(parse_long(f[c], line, "n_customers"));
        p.degenerate = f[d] == "1";
        out.push_back(p);
    }
    return out;
}

// ---------------------------------------------------------------------------
// manifests

inline std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw Error("SHA-256 computation failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xF];
    }
    return out;
}

/// Manifest for one subcommand run: the full resolved config (enough to
/// regenerate every artifact), its hash, the seed, the version and the
/// artifact digests. No timestamps, so reruns are byte-identical.
inline std::string make_manifest(std::string_view command, const PipelineConfig& config,
                                 const std::map<std::string, std::string>& artifacts) {
    const json cfg = to_json(config);
    json files = json::object();
    for (const auto& [name, content] : artifacts) files[name] = sha256_hex(content);
#ifdef OFFERLAB_VERSION
    const char* version = OFFERLAB_VERSION;
#else
    const char* version = "unknown";
#endif
    json m{{"command", command},
           {"version", version},
           {"seed", config.seed},
           {"config_sha256", sha256_hex(cfg.dump())},
           {"config", cfg},
           {"artifacts", files}};
    return m.dump(2) + '\n';
}

}  // namespace offerlab
