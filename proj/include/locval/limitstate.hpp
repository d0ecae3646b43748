#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "locval/gp.hpp"
#include "locval/normal.hpp"

namespace locval {

/// Belief over g(x) = xi - |Y| with Y ~ N(mu_star, sigma_star^2): a folded
/// Gaussian flipped and shifted by xi.
struct LimitStatePosterior {
    double mu_star;
    double sigma_star;
    double xi;

    LimitStatePosterior(double mu, double sigma, double xi_) : mu_star(mu), sigma_star(sigma), xi(xi_) {
        LOCVAL_REQUIRE(xi > 0.0 && std::isfinite(xi), ParameterError, "tolerance xi must be positive");
        LOCVAL_REQUIRE(std::isfinite(mu), ParameterError, "posterior mean must be finite");
        LOCVAL_REQUIRE(sigma >= 0.0 && std::isfinite(sigma), ParameterError, "posterior sd must be nonnegative");
        sigma_star = std::max(sigma, 1e-9 * xi);
    }

    /// From a GP prediction in label units (latent variance).
    static LimitStatePosterior from(const Prediction& p, double xi) {
        return LimitStatePosterior(p.mean, std::sqrt(std::max(p.variance, 0.0)), xi);
    }
};

struct FoldedMoments {
    double mean;
    double variance;
};

inline FoldedMoments folded_moments(const LimitStatePosterior& p) {
    const double mu = p.mu_star, s = p.sigma_star;
    const double zeta = std::exp(-mu * mu / (2.0 * s * s));
    const double abs_mean = s * std::sqrt(2.0 / std::numbers::pi) * zeta + std::erf(mu / (std::numbers::sqrt2 * s)) * mu;
    const double var = mu * mu + s * s - abs_mean * abs_mean;
    return {p.xi - abs_mean, std::max(var, 0.0)};
}

/// P(G <= omega). Uses upper tails so that probabilities near 0 and 1 keep
/// their relative accuracy.
inline double folded_cdf(const LimitStatePosterior& p, double omega) {
    if (omega >= p.xi) return 1.0;
    const double a = (p.xi - omega + p.mu_star) / p.sigma_star;
    const double b = (p.xi - omega - p.mu_star) / p.sigma_star;
    return std::clamp(normal::sf(a) + normal::sf(b), 0.0, 1.0);
}

/// P(G > omega), accurate when it is tiny.
inline double folded_sf(const LimitStatePosterior& p, double omega) {
    if (omega >= p.xi) return 0.0;
    const double t = p.xi - omega;  // G > omega  <=>  |Y| < t
    return std::clamp(normal::interval((-t - p.mu_star) / p.sigma_star, (t - p.mu_star) / p.sigma_star), 0.0, 1.0);
}

/// Smallest q with P(G <= q) >= alpha, by bisection.
inline double folded_quantile(const LimitStatePosterior& p, double alpha) {
    LOCVAL_REQUIRE(alpha > 0.0 && alpha < 1.0, ParameterError, "quantile level must lie in (0,1)");
    double lo = p.xi - (std::abs(p.mu_star) + 10.0 * p.sigma_star);
    double hi = p.xi;
    while (folded_cdf(p, lo) > alpha) lo -= 10.0 * p.sigma_star;  // only for extreme alpha
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double c = folded_cdf(p, mid);
        if (std::abs(c - alpha) <= 1e-12) return mid;
        if (c < alpha) lo = mid;
        else hi = mid;
        if (hi - lo <= 1e-15 * std::max(1.0, std::abs(mid))) break;
    }
    return 0.5 * (lo + hi);
}

/// Valid where the predicted residual magnitude is within tolerance (boundary included).
inline std::vector<bool> predict_valid(const Vector& mean, double xi) {
    std::vector<bool> out(static_cast<std::size_t>(mean.size()));
    for (Eigen::Index i = 0; i < mean.size(); ++i) out[static_cast<std::size_t>(i)] = xi - std::abs(mean[i]) >= 0.0;
    return out;
}

inline std::vector<bool> predict_valid(const GpModel& model, double xi, const Matrix& points) {
    LOCVAL_REQUIRE(xi > 0.0, ParameterError, "tolerance xi must be positive");
    Vector mean;
    model.predict(points, mean, nullptr);
    return predict_valid(mean, xi);
}

/// Valid where the alpha-quantile of G is nonnegative. Since the CDF is
/// nondecreasing, q_alpha >= 0 exactly when P(G < 0) <= alpha; the CDF is
/// continuous, so P(G <= 0) is used.
inline std::vector<bool> predict_valid_conf(const Vector& mean, const Vector& variance, double xi, double alpha) {
    LOCVAL_REQUIRE(alpha > 0.0 && alpha < 1.0, ParameterError, "confidence level must lie in (0,1)");
    std::vector<bool> out(static_cast<std::size_t>(mean.size()));
    for (Eigen::Index i = 0; i < mean.size(); ++i) {
        const LimitStatePosterior p(mean[i], std::sqrt(std::max(variance[i], 0.0)), xi);
        out[static_cast<std::size_t>(i)] = folded_cdf(p, 0.0) <= alpha;
    }
    return out;
}

inline std::vector<bool> predict_valid_conf(const GpModel& model, double xi, double alpha, const Matrix& points) {
    Vector mean, var;
    model.predict(points, mean, &var);
    return predict_valid_conf(mean, var, xi, alpha);
}

}  // namespace locval
