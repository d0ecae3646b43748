#pragma once

#include <array>
#include <span>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "locval/core.hpp"

namespace locval {

enum class KernelFamily { SquaredExponential, Matern12, Matern32, Matern52, RationalQuadratic };

inline constexpr std::array<KernelFamily, 5> kAllFamilies{
    KernelFamily::SquaredExponential, KernelFamily::Matern12, KernelFamily::Matern32,
    KernelFamily::Matern52, KernelFamily::RationalQuadratic};

inline std::string_view to_string(KernelFamily f) {
    switch (f) {
        case KernelFamily::SquaredExponential: return "squared-exponential";
        case KernelFamily::Matern12: return "matern-1/2";
        case KernelFamily::Matern32: return "matern-3/2";
        case KernelFamily::Matern52: return "matern-5/2";
        case KernelFamily::RationalQuadratic: return "rational-quadratic";
    }
    return "unknown";
}

inline KernelFamily family_from_string(std::string_view s) {
    for (auto f : kAllFamilies)
        if (to_string(f) == s) return f;
    throw ParameterError("unknown kernel family '" + std::string(s) + "'");
}

/// One stationary ARD term: scale * profile(r^2), r^2 = sum_j ((x_j - x'_j) / l_j)^2.
struct KernelTerm {
    KernelFamily family = KernelFamily::Matern52;
    Vector lengthscales;
    double scale = 1.0;
    double shape = 1.0;  // rational-quadratic alpha; ignored otherwise

    bool has_shape() const { return family == KernelFamily::RationalQuadratic; }
};

namespace detail {

inline constexpr double kSqrt3 = 1.7320508075688772;
inline constexpr double kSqrt5 = 2.23606797749979;

/// Unit-scale kernel value as a function of the scaled squared distance.
inline double profile(KernelFamily f, double r2, double shape) {
    switch (f) {
        case KernelFamily::SquaredExponential: return std::exp(-0.5 * r2);
        case KernelFamily::Matern12: return std::exp(-std::sqrt(r2));
        case KernelFamily::Matern32: {
            const double s = kSqrt3 * std::sqrt(r2);
            return (1.0 + s) * std::exp(-s);
        }
        case KernelFamily::Matern52: {
            const double r = std::sqrt(r2);
            const double s = kSqrt5 * r;
            return (1.0 + s + 5.0 * r2 / 3.0) * std::exp(-s);
        }
        case KernelFamily::RationalQuadratic: return std::pow(1.0 + r2 / (2.0 * shape), -shape);
    }
    return 0.0;
}

/// d profile / d r^2. Zero at r = 0 for Matern-1/2, where every caller multiplies
/// by a squared coordinate difference that vanishes there too.
inline double profile_dr2(KernelFamily f, double r2, double shape) {
    switch (f) {
        case KernelFamily::SquaredExponential: return -0.5 * std::exp(-0.5 * r2);
        case KernelFamily::Matern12: {
            if (r2 <= 0.0) return 0.0;
            const double r = std::sqrt(r2);
            return -std::exp(-r) / (2.0 * r);
        }
        case KernelFamily::Matern32: return -1.5 * std::exp(-kSqrt3 * std::sqrt(r2));
        case KernelFamily::Matern52: {
            const double s = kSqrt5 * std::sqrt(r2);
            return -(5.0 / 6.0) * (1.0 + s) * std::exp(-s);
        }
        case KernelFamily::RationalQuadratic: return -0.5 * std::pow(1.0 + r2 / (2.0 * shape), -shape - 1.0);
    }
    return 0.0;
}

/// d log profile / d log alpha for the rational-quadratic term.
inline double rq_dlog_shape(double r2, double shape) {
    const double t = r2 / (2.0 * shape);
    return shape * (-std::log1p(t) + t / (1.0 + t));
}

/// max_r |d profile / d r| for unit lengthscale and scale.
inline double profile_lipschitz(KernelFamily f, double shape) {
    switch (f) {
        case KernelFamily::SquaredExponential: return std::exp(-0.5);
        case KernelFamily::Matern12: return 1.0;
        case KernelFamily::Matern32: return kSqrt3 * std::exp(-1.0);
        case KernelFamily::Matern52: {
            const double phi = 0.5 * (1.0 + kSqrt5);
            return kSqrt5 * (phi + phi * phi) * std::exp(-phi) / 3.0;
        }
        case KernelFamily::RationalQuadratic: {
            const double u = std::sqrt(2.0 * shape / (2.0 * shape + 1.0));
            return u * std::pow(1.0 + u * u / (2.0 * shape), -shape - 1.0);
        }
    }
    return 0.0;
}

}  // namespace detail

/// Sum of stationary ARD terms.
struct KernelSpec {
    std::vector<KernelTerm> terms;

    int dim() const { return terms.empty() ? 0 : static_cast<int>(terms.front().lengthscales.size()); }

    void validate() const {
        LOCVAL_REQUIRE(!terms.empty(), ParameterError, "kernel needs at least one term");
        const auto d = terms.front().lengthscales.size();
        LOCVAL_REQUIRE(d >= 1, ParameterError, "kernel lengthscales must not be empty");
        for (const auto& t : terms) {
            LOCVAL_REQUIRE(t.lengthscales.size() == d, ParameterError, "kernel terms disagree on dimension");
            LOCVAL_REQUIRE((t.lengthscales.array() > 0.0).all(), ParameterError, "lengthscales must be positive");
            LOCVAL_REQUIRE(t.scale > 0.0, ParameterError, "output scales must be positive");
            LOCVAL_REQUIRE(!t.has_shape() || t.shape > 0.0, ParameterError, "rational-quadratic shape must be positive");
        }
    }

    /// k(x, x) for any x.
    double prior_variance() const {
        double s = 0.0;
        for (const auto& t : terms) s += t.scale;
        return s;
    }

    /// Terms of the given families, every one with the same initial parameters.
    static KernelSpec of(std::span<const KernelFamily> families, int d, double lengthscale = 0.2,
                         double scale = 1.0) {
        KernelSpec k;
        for (auto f : families) k.terms.push_back({f, Vector::Constant(d, lengthscale), scale, 1.0});
        return k;
    }
    static KernelSpec default_sum(int d) {
        return of(kAllFamilies, d, 0.2, 1.0 / static_cast<double>(kAllFamilies.size()));
    }
    static KernelSpec matern52(int d) {
        const KernelFamily f = KernelFamily::Matern52;
        return of(std::span<const KernelFamily>(&f, 1), d);
    }
};

inline double scaled_sqdist(const Vector& lengthscales, const double* a, const double* b) {
    double r2 = 0.0;
    for (Eigen::Index j = 0; j < lengthscales.size(); ++j) {
        const double z = (a[j] - b[j]) / lengthscales[j];
        r2 += z * z;
    }
    return r2;
}

inline double kernel_eval(const KernelSpec& spec, const Vector& x, const Vector& xp) {
    const auto d = spec.dim();
    if (x.size() != d || xp.size() != d)
        throw ParameterError("kernel_eval: point dimension does not match kernel dimension");
    double k = 0.0;
    for (const auto& t : spec.terms)
        k += t.scale * detail::profile(t.family, scaled_sqdist(t.lengthscales, x.data(), xp.data()), t.shape);
    return k;
}

namespace detail {

/// profile() applied elementwise, vectorized.
inline Eigen::ArrayXXd profile_array(KernelFamily f, const Eigen::ArrayXXd& r2, double shape) {
    switch (f) {
        case KernelFamily::SquaredExponential: return (-0.5 * r2).exp();
        case KernelFamily::Matern12: return (-r2.sqrt()).exp();
        case KernelFamily::Matern32: {
            const Eigen::ArrayXXd s = kSqrt3 * r2.sqrt();
            return (1.0 + s) * (-s).exp();
        }
        case KernelFamily::Matern52: {
            const Eigen::ArrayXXd s = kSqrt5 * r2.sqrt();
            return (1.0 + s + (5.0 / 3.0) * r2) * (-s).exp();
        }
        case KernelFamily::RationalQuadratic: return (-shape * (r2 / (2.0 * shape)).log1p()).exp();
    }
    return Eigen::ArrayXXd::Zero(r2.rows(), r2.cols());
}

}  // namespace detail

/// K(A, B) with rows of A and B as points.
inline Matrix cross_covariance(const KernelSpec& spec, const Matrix& a, const Matrix& b) {
    if (a.cols() != spec.dim() || b.cols() != spec.dim())
        throw ParameterError("cross_covariance: point dimension does not match kernel dimension");
    const Eigen::Index d = a.cols();
    Matrix k = Matrix::Zero(a.rows(), b.rows());
    Eigen::ArrayXXd r2(a.rows(), b.rows());
    for (const auto& t : spec.terms) {
        r2.setZero();
        for (Eigen::Index j = 0; j < d; ++j) {
            const double inv = 1.0 / t.lengthscales[j];
            const Eigen::ArrayXd aj = a.col(j).array() * inv;
            for (Eigen::Index c = 0; c < b.rows(); ++c) r2.col(c) += (aj - b(c, j) * inv).square();
        }
        k.array() += t.scale * detail::profile_array(t.family, r2, t.shape);
    }
    return k;
}

/// Lipschitz constant of x -> k(x, x') in the Euclidean norm: sum over terms of
/// scale * max|profile'(r)| / min lengthscale.
inline double kernel_lipschitz(const KernelSpec& spec) {
    double l = 0.0;
    for (const auto& t : spec.terms)
        l += t.scale * detail::profile_lipschitz(t.family, t.shape) / t.lengthscales.minCoeff();
    return l;
}

}  // namespace locval
