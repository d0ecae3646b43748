#pragma once

#include <cmath>
#include <optional>

#include "locval/gp.hpp"

namespace locval {

/// Upper bound (sqrt(d) / (2 tau))^d on the number of radius-tau balls
/// needed to cover [0,1]^d, floored at 1.
inline double covering_number(double tau, int d) {
    LOCVAL_REQUIRE(tau > 0.0, ParameterError, "cover radius must be positive");
    LOCVAL_REQUIRE(d >= 1, ParameterError, "dimension must be positive");
    return std::max(1.0, std::pow(std::sqrt(static_cast<double>(d)) / (2.0 * tau), d));
}

/// Largest singular value of a symmetric matrix by power iteration.
inline double spectral_norm(const Matrix& a, int iterations = 50, double tolerance = 1e-8) {
    if (a.size() == 0) return 0.0;
    Vector v = Vector::Constant(a.cols(), 1.0 / std::sqrt(static_cast<double>(a.cols())));
    double lambda = 0.0;
    for (int it = 0; it < iterations; ++it) {
        Vector w = a * v;
        const double norm = w.norm();
        if (norm == 0.0) return 0.0;
        v = w / norm;
        if (std::abs(norm - lambda) <= tolerance * norm) return norm;
        lambda = norm;
    }
    return lambda;
}

struct LipschitzConstants {
    double mu;      // of the posterior mean
    double sigma2;  // of the posterior variance
};

/// L_mu <= L_k sqrt(n) |A^{-1} y| and L_sigma2 <= 2 L_k (1 + n |A^{-1}| k*)
/// with A = K + noise I.
inline LipschitzConstants lipschitz_bounds(const Matrix& noisy_gram, const Vector& y, double kernel_lipschitz,
                                           double k_star) {
    LOCVAL_REQUIRE(noisy_gram.rows() == y.size() && noisy_gram.cols() == y.size(), ParameterError,
                   "Gram matrix and label vector sizes differ");
    LOCVAL_REQUIRE(kernel_lipschitz >= 0.0 && k_star >= 0.0, ParameterError, "constants must be nonnegative");
    const double n = static_cast<double>(y.size());
    Eigen::LLT<Matrix> llt(noisy_gram);
    if (llt.info() != Eigen::Success) throw IllConditionedError("Gram matrix is not positive definite");
    const Vector w = llt.solve(y);
    const Matrix inv = llt.solve(Matrix::Identity(y.size(), y.size()));
    return {kernel_lipschitz * std::sqrt(n) * w.norm(),
            2.0 * kernel_lipschitz * (1.0 + n * spectral_norm(inv) * k_star)};
}

/// The bounds above for a fitted model, evaluated in standardized label space
/// and rescaled to label units. `kernel_lipschitz` refers to the model's
/// (standardized) kernel; kernel_lipschitz(model.hyper().kernel) is a valid choice.
inline LipschitzConstants lipschitz_estimates(const GpModel& model, double kernel_lipschitz) {
    const Matrix& l = model.cholesky();
    const Eigen::Index n = l.rows();
    LOCVAL_REQUIRE(n > 0, ParameterError, "model has no data");
    Matrix inv = Matrix::Identity(n, n);
    l.triangularView<Eigen::Lower>().solveInPlace(inv);
    l.transpose().triangularView<Eigen::Upper>().solveInPlace(inv);
    const double sd = model.standardization().sd;
    const double nn = static_cast<double>(n);
    const double k_star = model.hyper().kernel.prior_variance();
    return {sd * kernel_lipschitz * std::sqrt(nn) * model.weights().norm(),
            sd * sd * 2.0 * kernel_lipschitz * (1.0 + nn * spectral_norm(inv) * k_star)};
}

/// max |f(x_{i+1}) - f(x_i)| / |x_{i+1} - x_i| over a sorted 1-d grid.
inline double lipschitz_on_grid(const Vector& x, const Vector& f) {
    LOCVAL_REQUIRE(x.size() == f.size() && x.size() >= 2, ParameterError, "grid needs at least two points");
    double l = 0.0;
    for (Eigen::Index i = 1; i < x.size(); ++i) {
        const double h = x[i] - x[i - 1];
        LOCVAL_REQUIRE(h > 0.0, ParameterError, "grid must be strictly increasing");
        l = std::max(l, std::abs(f[i] - f[i - 1]) / h);
    }
    return l;
}

/// Lipschitz constants of the posterior mean and variance of a 1-d model,
/// by finite differences on an `n_grid`-point grid of [0,1].
inline LipschitzConstants model_lipschitz_1d(const GpModel& model, int n_grid = 20001) {
    LOCVAL_REQUIRE(model.dim() == 1, ParameterError, "grid Lipschitz constants are only provided in 1-d");
    const Vector x = Vector::LinSpaced(n_grid, 0.0, 1.0);
    Vector mean, var;
    model.predict(Matrix(x), mean, &var);
    return {lipschitz_on_grid(x, mean), lipschitz_on_grid(x, var)};
}

struct BoundInputs {
    double kernel_lipschitz;  // L_k of the standardized kernel
    double delta_lipschitz;   // L_delta, label units per unit-cube distance
    double tau;
    double alpha;
    /// Known L_mu and L_sigma2 in label units; estimated from the model if absent.
    std::optional<LipschitzConstants> exact;

    void validate() const {
        LOCVAL_REQUIRE(kernel_lipschitz > 0.0 && delta_lipschitz >= 0.0, ParameterError,
                       "Lipschitz constants must be positive");
        LOCVAL_REQUIRE(tau > 0.0, ParameterError, "cover radius must be positive");
        LOCVAL_REQUIRE(alpha > 0.0 && alpha < 1.0, ParameterError, "alpha must lie in (0,1)");
    }
};

/// beta(tau) = 2 log(M(tau) / alpha); must be positive.
inline double bound_beta(double tau, double alpha, int d) {
    const double m = covering_number(tau, d);
    const double beta = 2.0 * std::log(m / alpha);
    if (!(beta > 0.0))
        throw ParameterError("covering number over alpha must exceed 1; choose tau below " +
                             std::to_string(std::sqrt(static_cast<double>(d)) / 2.0 * std::pow(alpha, 1.0 / d)));
    return beta;
}

/// eta(x) = sqrt(beta) sigma(x) + (L_mu + L_delta) tau + sqrt(beta L_sigma2 tau),
/// label units, at every row of `points`.
inline Vector eta_bound(const GpModel& model, const BoundInputs& in, const Matrix& points) {
    in.validate();
    const double beta = bound_beta(in.tau, in.alpha, model.dim());
    const LipschitzConstants lc = in.exact ? *in.exact : lipschitz_estimates(model, in.kernel_lipschitz);
    const double gamma = (lc.mu + in.delta_lipschitz) * in.tau + std::sqrt(beta * lc.sigma2 * in.tau);
    Vector mean, var;
    model.predict(points, mean, &var);
    return (std::sqrt(beta) * var.array().sqrt() + gamma).matrix();
}

/// Posterior sd that maximizes the misclassification probability at omega = 0
/// for a predicted-invalid mean |mu| > xi.
inline double sigma_opt(double mu, double xi) {
    LOCVAL_REQUIRE(xi > 0.0, ParameterError, "tolerance xi must be positive");
    const double a = std::abs(mu);
    if (!(a > xi)) throw DomainError("sigma_opt needs |mu| > xi");
    return std::sqrt(-2.0 * xi * a / std::log((a - xi) / (a + xi)));
}

}  // namespace locval
