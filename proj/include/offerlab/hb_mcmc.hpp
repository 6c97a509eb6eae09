#pragma once

// Hierarchical Bayes binary logit with a mixture-of-normals population
// distribution whose means shift with customer covariates:
//
//   y_ij ~ Bernoulli(logistic(x_ij' beta_i))           outside option at 0
//   beta_i = mu_{c_i} + Delta z_i + e_i,  e_i ~ N(0, Sigma_{c_i})
//   c_i ~ Categorical(pi),  pi ~ Dirichlet(a)
//   mu_k | Sigma_k ~ N(mubar, Sigma_k / A_mu),  Sigma_k ~ IW(nu, V)
//   vec(Delta) ~ N(0, A_d^{-1})
//
// Each sweep draws labels, weights and components given the betas, then
// Delta, then every beta_i with one random-walk Metropolis step whose
// increment covariance is s^2 (H_i + Sigma_{c_i}^{-1})^{-1}, H_i being the
// negative Hessian of a fractional likelihood mixing the customer's own
// data with a share of the pooled likelihood.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "choice.hpp"
#include "errors.hpp"
#include "linalg.hpp"
#include "rng.hpp"

namespace offerlab {

/// One customer's labeled observations: design rows and 0/1 outcomes, plus
/// the covariates entering the mixture means.
struct ChoiceUnit {
    long customer_id = 0;
    MatrixXd X;
    VectorXd y;
    VectorXd z;
};

struct ChoiceData {
    std::vector<ChoiceUnit> units;

    Eigen::Index dims() const { return units.empty() ? 0 : units.front().X.cols(); }
    Eigen::Index covariate_dims() const { return units.empty() ? 0 : units.front().z.size(); }
    std::size_t observation_count() const {
        std::size_t n = 0;
        for (const auto& u : units) n += static_cast<std::size_t>(u.X.rows());
        return n;
    }

    void validate() const {
        if (units.empty()) throw InvalidArgument("choice data has no customers");
        const auto k = dims();
        const auto nz = covariate_dims();
        if (k < 1) throw InvalidArgument("choice data has no attributes");
        for (const auto& u : units) {
            if (u.X.rows() == 0)
                throw InvalidArgument("customer " + std::to_string(u.customer_id) +
                                      " has no labeled observations");
            if (u.X.cols() != k || u.z.size() != nz || u.y.size() != u.X.rows())
                throw InvalidArgument("customer " + std::to_string(u.customer_id) +
                                      " has inconsistent dimensions");
            if (!u.X.allFinite() || !u.z.allFinite())
                throw InvalidArgument("non-finite design entry for customer " +
                                      std::to_string(u.customer_id));
            for (Eigen::Index j = 0; j < u.y.size(); ++j)
                if (u.y[j] != 0.0 && u.y[j] != 1.0)
                    throw InvalidArgument("outcomes must be 0 or 1");
        }
    }
};

/// A single labeled alternative: customer, occasion, design row, 0/1 outcome.
struct LabeledRow {
    long customer_id = 0;
    long occasion = 1;
    long alternative = 1;
    VectorXd x;
    double y = 0.0;
};

using CovariateMap = std::map<long, VectorXd>;

/// Groups rows by customer (ascending id) into per-customer design
/// matrices. Every customer with rows must have an entry in `covariates`
/// unless `covariate_dims` is 0.
inline ChoiceData make_choice_data(const std::vector<LabeledRow>& rows,
                                   const CovariateMap& covariates, Eigen::Index covariate_dims) {
    std::map<long, std::vector<const LabeledRow*>> grouped;
    for (const auto& r : rows) grouped[r.customer_id].push_back(&r);
    ChoiceData data;
    for (const auto& [id, obs] : grouped) {
        ChoiceUnit u;
        u.customer_id = id;
        const auto k = obs.front()->x.size();
        u.X.resize(static_cast<Eigen::Index>(obs.size()), k);
        u.y.resize(static_cast<Eigen::Index>(obs.size()));
        for (std::size_t j = 0; j < obs.size(); ++j) {
            if (obs[j]->x.size() != k)
                throw InvalidArgument("design rows have inconsistent dimensions");
            u.X.row(static_cast<Eigen::Index>(j)) = obs[j]->x.transpose();
            u.y[static_cast<Eigen::Index>(j)] = obs[j]->y;
        }
        if (covariate_dims > 0) {
            auto c = covariates.find(id);
            if (c == covariates.end())
                throw DataIntegrityError("no covariates for customer " + std::to_string(id));
            if (c->second.size() != covariate_dims)
                throw DataIntegrityError("covariate vector of customer " + std::to_string(id) +
                                         " has the wrong length");
            u.z = c->second;
        } else {
            u.z.resize(0);
        }
        data.units.push_back(std::move(u));
    }
    return data;
}

/// Labeled offer rows as design rows (1, contract years, discount); unlabeled
/// rows are dropped.
inline std::vector<LabeledRow> offer_rows(const std::vector<OfferObservation>& rows) {
    std::vector<LabeledRow> out;
    out.reserve(rows.size());
    for (const auto& r : rows) {
        if (r.outcome == Outcome::unlabeled) continue;
        out.push_back({r.customer_id, r.occasion, 1, r.attributes.vector(),
                       r.outcome == Outcome::accepted ? 1.0 : 0.0});
    }
    return out;
}

inline CovariateMap offer_covariates(const std::vector<CustomerProfile>& customers,
                                     bool with_demographic = false) {
    CovariateMap out;
    for (const auto& c : customers) out[c.customer_id] = c.covariates(with_demographic);
    return out;
}

/// Offer rows grouped into choice data with loyalty (and optionally the
/// demographic column) as covariates.
inline ChoiceData make_offer_choice_data(const std::vector<OfferObservation>& rows,
                                         const std::vector<CustomerProfile>& customers,
                                         bool with_demographic = false) {
    return make_choice_data(offer_rows(rows), offer_covariates(customers, with_demographic),
                            with_demographic ? 2 : 1);
}

// ---------------------------------------------------------------------------

struct MixtureModel {
    VectorXd weights;
    MatrixXd means;                     // ncomp x K
    std::vector<MatrixXd> covariances;  // ncomp of K x K
    MatrixXd delta;                     // K x n_covariates

    Eigen::Index ncomp() const { return weights.size(); }

    /// Sum_k pi_k mu_k: the population mean at zero covariates.
    VectorXd population_mean() const { return means.transpose() * weights; }

    void validate() const {
        if (weights.size() < 1) throw InvalidArgument("mixture has no components");
        if (std::abs(weights.sum() - 1.0) > 1e-12 || (weights.array() < 0.0).any())
            throw InvalidArgument("mixture weights are not on the simplex");
        if (means.rows() != weights.size() ||
            covariances.size() != static_cast<std::size_t>(weights.size()))
            throw InvalidArgument("mixture component counts disagree");
        for (const auto& s : covariances)
            if (!is_spd(s)) throw InvalidArgument("mixture covariance is not positive definite");
    }
};

struct McmcConfig {
    long draws = 5000;
    long burn_in = 500;
    long keep = 1;
    /// Proposal step multiplier; 0 selects 2.93 / sqrt(K).
    double rw_scale = 0.0;
    double mean_prior_location = 0.0;
    double mean_prior_precision = 0.01;
    /// Inverse-Wishart degrees of freedom; 0 selects K + 3.
    double iw_df = 0.0;
    /// Inverse-Wishart scale V = iw_scale * I; 0 selects iw_df.
    double iw_scale = 0.0;
    double dirichlet_a = 5.0;
    double delta_prior_precision = 0.01;
    /// Share of the pooled likelihood in each customer's fractional likelihood.
    double fractional_weight = 0.1;
    std::uint64_t seed = 1;

    double step_scale(Eigen::Index k) const {
        return rw_scale > 0.0 ? rw_scale : 2.93 / std::sqrt(static_cast<double>(k));
    }
    double nu(Eigen::Index k) const {
        return iw_df > 0.0 ? iw_df : static_cast<double>(k) + 3.0;
    }
    double v_scale(Eigen::Index k) const { return iw_scale > 0.0 ? iw_scale : nu(k); }
    long retained() const { return (draws - burn_in) / keep; }

    void validate(Eigen::Index k) const {
        if (!(burn_in > 0 && burn_in < draws))
            throw ConfigError("MCMC burn-in must satisfy 0 < burn_in < draws");
        if (keep < 1) throw ConfigError("MCMC keep must be at least 1");
        if (!(nu(k) > static_cast<double>(k) + 1.0))
            throw ConfigError("inverse-Wishart degrees of freedom must exceed K + 1");
        if (!(dirichlet_a > 0.0)) throw ConfigError("Dirichlet concentration must be positive");
        if (!(mean_prior_precision > 0.0) || !(delta_prior_precision > 0.0))
            throw ConfigError("prior precisions must be positive");
        if (rw_scale < 0.0) throw ConfigError("rw_scale must be non-negative");
        if (!(fractional_weight > 0.0 && fractional_weight < 1.0))
            throw ConfigError("fractional_weight must lie in (0, 1)");
        if (retained() < 1) throw ConfigError("MCMC settings retain no draws");
    }
};

struct PosteriorDraws {
    std::vector<long> customer_ids;
    Eigen::Index dims = 0;
    Eigen::Index covariate_dims = 0;
    std::vector<MatrixXd> betas;  // per retained draw: customers x K
    std::vector<MixtureModel> mixtures;
    std::vector<double> log_likelihood;
    VectorXd acceptance_rate;  // per customer, over all sweeps
    McmcConfig config;

    std::size_t size() const { return betas.size(); }

    std::optional<std::size_t> find(long customer_id) const {
        auto it = std::lower_bound(customer_ids.begin(), customer_ids.end(), customer_id);
        if (it == customer_ids.end() || *it != customer_id) return std::nullopt;
        return static_cast<std::size_t>(it - customer_ids.begin());
    }

    std::size_t index_of(long customer_id) const {
        auto i = find(customer_id);
        if (!i) throw UnknownCustomer(customer_id);
        return *i;
    }

    /// Retained draws of one customer, draws x K.
    MatrixXd customer_draws(std::size_t index) const {
        MatrixXd out(static_cast<Eigen::Index>(betas.size()), dims);
        for (std::size_t r = 0; r < betas.size(); ++r)
            out.row(static_cast<Eigen::Index>(r)) = betas[r].row(static_cast<Eigen::Index>(index));
        return out;
    }

    /// Posterior mean of Sum_k pi_k mu_k over retained draws.
    VectorXd population_mean() const {
        if (mixtures.empty()) throw InvalidArgument("posterior has no retained draws");
        VectorXd m = VectorXd::Zero(dims);
        for (const auto& mix : mixtures) m += mix.population_mean();
        return m / static_cast<double>(mixtures.size());
    }
};

// ---------------------------------------------------------------------------
// binary logit likelihood pieces

inline double logit_log_likelihood(const MatrixXd& X, const VectorXd& y, const VectorXd& beta) {
    const VectorXd u = X * beta;
    double ll = 0.0;
    for (Eigen::Index j = 0; j < u.size(); ++j)
        ll += y[j] > 0.5 ? log_logistic(u[j]) : log_logistic(-u[j]);
    return ll;
}

struct LogitDerivatives {
    double value = 0.0;
    VectorXd gradient;
    MatrixXd neg_hessian;
};

inline LogitDerivatives logit_derivatives(const MatrixXd& X, const VectorXd& y,
                                          const VectorXd& beta) {
    LogitDerivatives d;
    d.gradient = VectorXd::Zero(X.cols());
    d.neg_hessian = MatrixXd::Zero(X.cols(), X.cols());
    const VectorXd u = X * beta;
    for (Eigen::Index j = 0; j < u.size(); ++j) {
        const double p = logistic(u[j]);
        d.value += y[j] > 0.5 ? log_logistic(u[j]) : log_logistic(-u[j]);
        d.gradient += (y[j] - p) * X.row(j).transpose();
        d.neg_hessian += p * (1.0 - p) * X.row(j).transpose() * X.row(j);
    }
    return d;
}

namespace detail {

/// Damped Newton ascent on a concave objective given by `eval`.
template <class Eval>
std::optional<VectorXd> newton_maximize(VectorXd beta, Eval eval, int max_iter = 50) {
    auto cur = eval(beta);
    for (int it = 0; it < max_iter; ++it) {
        Eigen::LDLT<MatrixXd> ldlt(cur.neg_hessian);
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) return std::nullopt;
        const VectorXd step = ldlt.solve(cur.gradient);
        if (!step.allFinite()) return std::nullopt;
        double t = 1.0;
        bool improved = false;
        for (int h = 0; h < 30; ++h, t *= 0.5) {
            VectorXd trial = beta + t * step;
            auto next = eval(trial);
            if (std::isfinite(next.value) && next.value >= cur.value - 1e-12) {
                beta = std::move(trial);
                cur = std::move(next);
                improved = true;
                break;
            }
        }
        if (!improved || (t * step).norm() < 1e-8) break;
    }
    return beta;
}

}  // namespace detail

struct PooledFit {
    VectorXd beta;
    MatrixXd neg_hessian;
};

/// Pooled binary-logit MLE over all customers. A ridge of 1e-3 keeps the
/// maximizer finite on separable data.
inline PooledFit pooled_logit_fit(const ChoiceData& data) {
    const auto k = data.dims();
    constexpr double ridge = 1e-3;
    auto eval = [&](const VectorXd& b) {
        LogitDerivatives total;
        total.gradient = -ridge * b;
        total.neg_hessian = ridge * MatrixXd::Identity(k, k);
        total.value = -0.5 * ridge * b.squaredNorm();
        for (const auto& u : data.units) {
            auto d = logit_derivatives(u.X, u.y, b);
            total.value += d.value;
            total.gradient += d.gradient;
            total.neg_hessian += d.neg_hessian;
        }
        return total;
    };
    auto beta = detail::newton_maximize(VectorXd::Zero(k), eval);
    PooledFit fit;
    fit.beta = beta ? *beta : VectorXd::Zero(k);
    fit.neg_hessian = eval(fit.beta).neg_hessian;
    return fit;
}

/// Negative Hessian of the customer's fractional likelihood
/// (1 - w) ll_i + w (n_i / N) ll_pooled at its maximizer, with the pooled
/// part replaced by its quadratic expansion at the pooled MLE. Falls back to
/// the pooled share alone when the maximization fails.
inline MatrixXd fractional_hessian(const ChoiceUnit& unit, const PooledFit& pooled,
                                   double weight, double pooled_count) {
    const double share = weight * static_cast<double>(unit.X.rows()) / pooled_count;
    const MatrixXd pooled_part = share * pooled.neg_hessian;
    auto eval = [&](const VectorXd& b) {
        auto d = logit_derivatives(unit.X, unit.y, b);
        const VectorXd diff = b - pooled.beta;
        LogitDerivatives f;
        f.value = (1.0 - weight) * d.value - 0.5 * diff.dot(pooled_part * diff);
        f.gradient = (1.0 - weight) * d.gradient - pooled_part * diff;
        f.neg_hessian = (1.0 - weight) * d.neg_hessian + pooled_part;
        return f;
    };
    auto mode = detail::newton_maximize(pooled.beta, eval);
    if (!mode) return pooled_part;
    MatrixXd h = eval(*mode).neg_hessian;
    if (!h.allFinite() || !is_spd(0.5 * (h + h.transpose()))) return pooled_part;
    return 0.5 * (h + h.transpose());
}

/// One random-walk Metropolis step for a single customer under a normal
/// prior given in precision form (a zero precision is a flat prior).
/// Returns true when the proposal is accepted; beta and log_lik are updated.
inline bool metropolis_step(const MatrixXd& X, const VectorXd& y, VectorXd& beta,
                            double& log_lik, const VectorXd& prior_mean,
                            const MatrixXd& prior_precision, const MatrixXd& increment_root,
                            double scale, Rng& rng) {
    const VectorXd cand = beta + scale * (increment_root * rng.normal_vector(beta.size()));
    const double cand_ll = logit_log_likelihood(X, y, cand);
    const VectorXd dc = cand - prior_mean;
    const VectorXd d0 = beta - prior_mean;
    const double ldiff = cand_ll - 0.5 * dc.dot(prior_precision * dc) - log_lik +
                         0.5 * d0.dot(prior_precision * d0);
    const double u = rng.uniform();
    if (std::isfinite(cand_ll) && (ldiff >= 0.0 || std::log(u) < ldiff)) {
        beta = cand;
        log_lik = cand_ll;
        return true;
    }
    return false;
}

// ---------------------------------------------------------------------------

namespace detail {

/// Draw vec(Delta) (column-major, K x nz) given residuals r_i = beta_i - mu_{c_i}
/// and component precisions.
inline MatrixXd draw_delta(const std::vector<VectorXd>& resid, const std::vector<VectorXd>& z,
                           const std::vector<int>& labels,
                           const std::vector<MatrixXd>& precisions, double prior_precision,
                           Eigen::Index k, Rng& rng) {
    const Eigen::Index nz = z.front().size();
    const Eigen::Index p = k * nz;
    MatrixXd prec = prior_precision * MatrixXd::Identity(p, p);
    VectorXd lin = VectorXd::Zero(p);
    for (std::size_t i = 0; i < resid.size(); ++i) {
        const MatrixXd& sinv = precisions[static_cast<std::size_t>(labels[i])];
        const VectorXd sr = sinv * resid[i];
        for (Eigen::Index a = 0; a < nz; ++a) {
            lin.segment(a * k, k) += z[i][a] * sr;
            for (Eigen::Index b = 0; b < nz; ++b)
                prec.block(a * k, b * k, k, k) += z[i][a] * z[i][b] * sinv;
        }
    }
    auto root = try_cholesky(0.5 * (prec + prec.transpose()));
    if (!root) throw DegenerateError("Delta posterior precision is not positive definite");
    const VectorXd mean = root->transpose().triangularView<Eigen::Upper>().solve(
        root->triangularView<Eigen::Lower>().solve(lin));
    // x = mean + L^{-T} e has covariance (L L^T)^{-1}
    const VectorXd e = rng.normal_vector(p);
    const VectorXd draw = mean + root->transpose().triangularView<Eigen::Upper>().solve(e);
    return Eigen::Map<const MatrixXd>(draw.data(), k, nz);
}

}  // namespace detail

/// Runs the hybrid Gibbs / Metropolis chain and returns the retained draws.
inline PosteriorDraws fit_hb_mixed_logit(const ChoiceData& data, int ncomp,
                                         const McmcConfig& config) {
    data.validate();
    if (ncomp < 1) throw InvalidArgument("ncomp must be at least 1");
    const Eigen::Index k = data.dims();
    const Eigen::Index nz = data.covariate_dims();
    config.validate(k);
    const std::size_t n = data.units.size();
    for (std::size_t i = 1; i < n; ++i)
        if (data.units[i].customer_id <= data.units[i - 1].customer_id)
            throw InvalidArgument("choice units must be sorted by unique customer id");

    const double nu = config.nu(k);
    const MatrixXd v_prior = config.v_scale(k) * MatrixXd::Identity(k, k);
    const VectorXd mubar = VectorXd::Constant(k, config.mean_prior_location);
    const double scale = config.step_scale(k);

    const PooledFit pooled = pooled_logit_fit(data);
    const double pooled_count = static_cast<double>(data.observation_count());
    std::vector<MatrixXd> hess(n);
    for (std::size_t i = 0; i < n; ++i)
        hess[i] = fractional_hessian(data.units[i], pooled, config.fractional_weight, pooled_count);

    Rng gibbs_rng(config.seed, "gibbs");
    std::vector<Rng> unit_rng;
    unit_rng.reserve(n);
    for (std::size_t i = 0; i < n; ++i) unit_rng.emplace_back(config.seed, "metropolis", i);

    // state
    std::vector<VectorXd> beta(n, pooled.beta);
    std::vector<double> ll(n);
    for (std::size_t i = 0; i < n; ++i)
        ll[i] = logit_log_likelihood(data.units[i].X, data.units[i].y, beta[i]);
    MixtureModel mix;
    mix.weights = VectorXd::Constant(ncomp, 1.0 / ncomp);
    mix.means = pooled.beta.transpose().replicate(ncomp, 1);
    mix.covariances.assign(static_cast<std::size_t>(ncomp), MatrixXd::Identity(k, k));
    mix.delta = MatrixXd::Zero(k, nz);
    std::vector<int> labels(n, 0);
    std::vector<long> accepted(n, 0);

    PosteriorDraws out;
    for (const auto& u : data.units) out.customer_ids.push_back(u.customer_id);
    out.dims = k;
    out.covariate_dims = nz;
    out.config = config;
    out.betas.reserve(static_cast<std::size_t>(config.retained()));
    out.mixtures.reserve(static_cast<std::size_t>(config.retained()));

    std::vector<VectorXd> y(n);
    std::vector<VectorXd> zs(n);
    for (std::size_t i = 0; i < n; ++i) zs[i] = data.units[i].z;
    std::vector<MatrixXd> roots(static_cast<std::size_t>(ncomp));
    std::vector<MatrixXd> precisions(static_cast<std::size_t>(ncomp));
    std::vector<double> logw(static_cast<std::size_t>(ncomp));

    for (long draw = 1; draw <= config.draws; ++draw) {
        // (a) mixture given beta_i - Delta z_i
        for (std::size_t i = 0; i < n; ++i)
            y[i] = nz > 0 ? VectorXd(beta[i] - mix.delta * zs[i]) : beta[i];
        for (Eigen::Index c = 0; c < ncomp; ++c) {
            auto root = try_cholesky(mix.covariances[static_cast<std::size_t>(c)]);
            if (!root) throw SamplerError("component covariance lost positive definiteness", draw);
            roots[static_cast<std::size_t>(c)] = *root;
        }
        if (ncomp > 1) {
            for (std::size_t i = 0; i < n; ++i) {
                for (Eigen::Index c = 0; c < ncomp; ++c)
                    logw[static_cast<std::size_t>(c)] =
                        std::log(mix.weights[c]) +
                        log_mvn_density(y[i], mix.means.row(c).transpose(),
                                        roots[static_cast<std::size_t>(c)]);
                const double top = *std::max_element(logw.begin(), logw.end());
                for (double& w : logw) w = std::exp(w - top);
                labels[i] = static_cast<int>(gibbs_rng.categorical(logw));
            }
        }
        VectorXd counts = VectorXd::Zero(ncomp);
        for (int c : labels) counts[c] += 1.0;
        mix.weights = gibbs_rng.dirichlet((counts.array() + config.dirichlet_a).matrix());
        for (Eigen::Index c = 0; c < ncomp; ++c) {
            MatrixXd rows(static_cast<Eigen::Index>(counts[c]), k);
            Eigen::Index r = 0;
            for (std::size_t i = 0; i < n; ++i)
                if (labels[i] == c) rows.row(r++) = y[i].transpose();
            try {
                auto niw = draw_normal_inverse_wishart(rows, mubar, config.mean_prior_precision, nu,
                                                       v_prior, gibbs_rng);
                mix.means.row(c) = niw.mean.transpose();
                mix.covariances[static_cast<std::size_t>(c)] = niw.covariance;
            } catch (const DegenerateError& e) {
                throw SamplerError(e.what(), draw);
            }
        }
        for (Eigen::Index c = 0; c < ncomp; ++c) {
            auto root = try_cholesky(mix.covariances[static_cast<std::size_t>(c)]);
            if (!root) throw SamplerError("component covariance draw is not positive definite", draw);
            roots[static_cast<std::size_t>(c)] = *root;
            precisions[static_cast<std::size_t>(c)] = spd_inverse(mix.covariances[static_cast<std::size_t>(c)]);
        }

        // (b) Delta given beta_i - mu_{c_i}
        if (nz > 0) {
            std::vector<VectorXd> resid(n);
            for (std::size_t i = 0; i < n; ++i)
                resid[i] = beta[i] - mix.means.row(labels[i]).transpose();
            try {
                mix.delta = detail::draw_delta(resid, zs, labels, precisions,
                                               config.delta_prior_precision, k, gibbs_rng);
            } catch (const DegenerateError& e) {
                throw SamplerError(e.what(), draw);
            }
        }

        // (c) one Metropolis step per customer
        double total_ll = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto c = static_cast<std::size_t>(labels[i]);
            VectorXd prior_mean = mix.means.row(labels[i]).transpose();
            if (nz > 0) prior_mean += mix.delta * zs[i];
            const MatrixXd prop_prec = hess[i] + precisions[c];
            auto prop_root = try_cholesky(spd_inverse(0.5 * (prop_prec + prop_prec.transpose())));
            if (!prop_root) throw SamplerError("proposal covariance is not positive definite", draw);
            if (metropolis_step(data.units[i].X, data.units[i].y, beta[i], ll[i], prior_mean,
                                precisions[c], *prop_root, scale, unit_rng[i]))
                ++accepted[i];
            total_ll += ll[i];
        }

        if (draw > config.burn_in && (draw - config.burn_in) % config.keep == 0) {
            MatrixXd b(static_cast<Eigen::Index>(n), k);
            for (std::size_t i = 0; i < n; ++i) b.row(static_cast<Eigen::Index>(i)) = beta[i].transpose();
            out.betas.push_back(std::move(b));
            out.mixtures.push_back(mix);
            out.log_likelihood.push_back(total_ll);
        }
    }
    out.acceptance_rate.resize(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i)
        out.acceptance_rate[static_cast<Eigen::Index>(i)] =
            static_cast<double>(accepted[i]) / static_cast<double>(config.draws);
    return out;
}

// ---------------------------------------------------------------------------
// posterior summaries and prediction

/// Arithmetic mean of each customer's retained draws.
inline std::map<long, VectorXd> posterior_mean_vectors(const PosteriorDraws& draws) {
    if (draws.size() == 0) throw InvalidArgument("posterior has no retained draws");
    MatrixXd sum = MatrixXd::Zero(static_cast<Eigen::Index>(draws.customer_ids.size()), draws.dims);
    for (const auto& b : draws.betas) sum += b;
    sum /= static_cast<double>(draws.size());
    std::map<long, VectorXd> out;
    for (std::size_t i = 0; i < draws.customer_ids.size(); ++i)
        out[draws.customer_ids[i]] = sum.row(static_cast<Eigen::Index>(i)).transpose();
    return out;
}

inline std::map<long, CoefficientVector> posterior_mean_betas(const PosteriorDraws& draws) {
    std::map<long, CoefficientVector> out;
    for (const auto& [id, v] : posterior_mean_vectors(draws)) out[id] = CoefficientVector::from(v);
    return out;
}

enum class PredictionMode { draw_averaged, posterior_mean, population_mean };

/// Acceptance probability of a design row x for one customer.
inline double predict_probability(const PosteriorDraws& draws, long customer_id,
                                  const VectorXd& x, PredictionMode mode) {
    if (draws.size() == 0) throw InvalidArgument("posterior has no retained draws");
    if (x.size() != draws.dims) throw InvalidArgument("design row has the wrong dimension");
    if (mode == PredictionMode::population_mean) return logistic(draws.population_mean().dot(x));
    const auto i = static_cast<Eigen::Index>(draws.index_of(customer_id));
    if (mode == PredictionMode::posterior_mean) {
        VectorXd mean = VectorXd::Zero(draws.dims);
        for (const auto& b : draws.betas) mean += b.row(i).transpose();
        mean /= static_cast<double>(draws.size());
        return logistic(mean.dot(x));
    }
    double total = 0.0;
    for (const auto& b : draws.betas) total += logistic(b.row(i).dot(x));
    return total / static_cast<double>(draws.size());
}

inline double predict_probability(const PosteriorDraws& draws, const OfferObservation& offer,
                                  PredictionMode mode) {
    return predict_probability(draws, offer.customer_id, offer.attributes.vector(), mode);
}

}  // namespace offerlab
