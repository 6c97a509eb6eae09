#pragma once

#include <cmath>
#include <numbers>
#include <optional>

#include <Eigen/Dense>

#include "errors.hpp"
#include "rng.hpp"

namespace offerlab {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Lower Cholesky factor, or nullopt when the matrix is not symmetric
/// positive definite.
inline std::optional<MatrixXd> try_cholesky(const MatrixXd& m) {
    if (m.rows() != m.cols() || m.rows() == 0) return std::nullopt;
    if (!m.allFinite()) return std::nullopt;
    if (!m.isApprox(m.transpose(), 1e-8)) return std::nullopt;
    Eigen::LLT<MatrixXd> llt(m);
    if (llt.info() != Eigen::Success) return std::nullopt;
    MatrixXd l = llt.matrixL();
    for (Eigen::Index i = 0; i < l.rows(); ++i)
        if (!(l(i, i) > 0.0) || !std::isfinite(l(i, i))) return std::nullopt;
    return l;
}

inline bool is_spd(const MatrixXd& m) { return try_cholesky(m).has_value(); }

inline MatrixXd spd_inverse(const MatrixXd& m) {
    Eigen::LLT<MatrixXd> llt(m);
    if (llt.info() != Eigen::Success) throw DegenerateError("matrix is not positive definite");
    return llt.solve(MatrixXd::Identity(m.rows(), m.cols()));
}

/// Log density of N(mean, Sigma) at x, given the lower Cholesky factor of Sigma.
inline double log_mvn_density(const VectorXd& x, const VectorXd& mean, const MatrixXd& chol_lower) {
    const VectorXd z = chol_lower.triangularView<Eigen::Lower>().solve(x - mean);
    const double log_det = 2.0 * chol_lower.diagonal().array().log().sum();
    return -0.5 * (static_cast<double>(x.size()) * std::log(2.0 * std::numbers::pi) + log_det +
                   z.squaredNorm());
}

inline VectorXd draw_mvn(const VectorXd& mean, const MatrixXd& chol_lower, Rng& rng) {
    return mean + chol_lower * rng.normal_vector(mean.size());
}

/// Wishart(df, scale) draw by the Bartlett decomposition.
inline MatrixXd draw_wishart(double df, const MatrixXd& scale, Rng& rng) {
    const Eigen::Index k = scale.rows();
    auto chol = try_cholesky(scale);
    if (!chol) throw DegenerateError("Wishart scale is not positive definite");
    MatrixXd a = MatrixXd::Zero(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
        a(i, i) = std::sqrt(rng.chi_squared(df - static_cast<double>(i)));
        for (Eigen::Index j = 0; j < i; ++j) a(i, j) = rng.normal();
    }
    const MatrixXd la = *chol * a;
    return la * la.transpose();
}

/// Sigma ~ InverseWishart(df, scale), i.e. Sigma^{-1} ~ Wishart(df, scale^{-1}).
inline MatrixXd draw_inverse_wishart(double df, const MatrixXd& scale, Rng& rng) {
    const MatrixXd w = draw_wishart(df, spd_inverse(scale), rng);
    MatrixXd sigma = spd_inverse(w);
    return 0.5 * (sigma + sigma.transpose());
}

struct NormalInverseWishartDraw {
    VectorXd mean;
    MatrixXd covariance;
};

/// Conjugate draw of (mu, Sigma) for rows of `data` ~ N(mu, Sigma) under
/// mu | Sigma ~ N(prior_mean, Sigma / prior_precision), Sigma ~ IW(nu, scale).
/// An empty `data` draws from the prior.
inline NormalInverseWishartDraw draw_normal_inverse_wishart(const MatrixXd& data,
                                                            const VectorXd& prior_mean,
                                                            double prior_precision, double nu,
                                                            const MatrixXd& scale, Rng& rng) {
    const double n = static_cast<double>(data.rows());
    VectorXd post_mean = prior_mean;
    MatrixXd post_scale = scale;
    if (data.rows() > 0) {
        const VectorXd sum = data.colwise().sum().transpose();
        post_mean = (sum + prior_precision * prior_mean) / (n + prior_precision);
        const MatrixXd resid = data.rowwise() - post_mean.transpose();
        const VectorXd shift = post_mean - prior_mean;
        post_scale += resid.transpose() * resid + prior_precision * shift * shift.transpose();
    }
    NormalInverseWishartDraw out;
    out.covariance = draw_inverse_wishart(nu + n, post_scale, rng);
    auto chol = try_cholesky(out.covariance / (n + prior_precision));
    if (!chol) throw DegenerateError("component covariance draw is not positive definite");
    out.mean = draw_mvn(post_mean, *chol, rng);
    return out;
}

}  // namespace offerlab
