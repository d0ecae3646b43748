#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "locval/core.hpp"
#include "locval/doe.hpp"

namespace locval::bench {

enum class Function { StyblinskiTang, Michalewicz, ModRastrigin, SeriesSystem, Rosenbrock, Appendix1d };

inline std::string_view to_string(Function f) {
    switch (f) {
        case Function::StyblinskiTang: return "styblinski-tang";
        case Function::Michalewicz: return "michalewicz";
        case Function::ModRastrigin: return "mod-rastrigin";
        case Function::SeriesSystem: return "series-system";
        case Function::Rosenbrock: return "rosenbrock";
        case Function::Appendix1d: return "appendix-1d";
    }
    return "unknown";
}

inline double styblinski_tang(const Vector& x) {
    double s = 0.0;
    for (double v : x) s += v * v * v * v - 16.0 * v * v + 5.0 * v;
    return 0.5 * s;
}

inline double michalewicz(const Vector& x) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double v = x[i];
        s += std::sin(v) * std::pow(std::sin(static_cast<double>(i + 1) * v * v / std::numbers::pi), 20);
    }
    return -s;
}

inline double mod_rastrigin(const Vector& x) {
    double s = 10.0;
    for (double v : x) s += v * v - 5.0 * std::cos(2.0 * std::numbers::pi * v);
    return s;
}

inline double series_system(const Vector& x) {
    const double a = x[0], b = x[1];
    const double c = 0.1 * (a - b) * (a - b);
    const double r = 7.0 / std::numbers::sqrt2;
    return std::min({3.0 + c - (a + b) / std::numbers::sqrt2, 3.0 + c + (a + b) / std::numbers::sqrt2, (a - b) + r,
                     (b - a) + r});
}

/// Standard Rosenbrock valley, sum of 100 (x_{i+1} - x_i^2)^2 + (x_i - 1)^2.
inline double rosenbrock(const Vector& x) {
    double s = 0.0;
    for (Eigen::Index i = 0; i + 1 < x.size(); ++i) {
        const double a = x[i + 1] - x[i] * x[i];
        s += 100.0 * a * a + (x[i] - 1.0) * (x[i] - 1.0);
    }
    return s;
}

inline double appendix_1d(const Vector& x) { return 0.5 * std::exp(x[0]) * std::sin(8.0 * x[0] - 2.0); }

/// d/dx of appendix_1d.
inline double appendix_1d_derivative(double x) {
    return 0.5 * std::exp(x) * (std::sin(8.0 * x - 2.0) + 8.0 * std::cos(8.0 * x - 2.0));
}

inline Domain default_domain(Function f, int d) {
    switch (f) {
        case Function::StyblinskiTang:
        case Function::ModRastrigin: return Domain::cube(d, -5.0, 5.0);
        case Function::Michalewicz: return Domain::cube(d, 0.0, std::numbers::pi);
        case Function::SeriesSystem: return Domain::cube(d, -8.0, 8.0);
        case Function::Rosenbrock: return Domain::cube(d, -2.0, 2.0);
        case Function::Appendix1d: return Domain::unit(d);
    }
    throw ParameterError("unknown benchmark function");
}

inline void check_dimension(Function f, int d) {
    LOCVAL_REQUIRE(d >= 1, ParameterError, "benchmark dimension must be positive");
    if ((f == Function::ModRastrigin || f == Function::SeriesSystem) && d != 2)
        throw ParameterError(std::string(to_string(f)) + " is only defined in 2-d");
    if (f == Function::Appendix1d && d != 1) throw ParameterError("appendix-1d is only defined in 1-d");
    if (f == Function::Rosenbrock && d < 2) throw ParameterError("rosenbrock needs d >= 2");
}

/// Value of `f` at `x` (original coordinates); DomainError outside its domain.
inline double eval_benchmark(Function f, const Vector& x) {
    check_dimension(f, static_cast<int>(x.size()));
    if (!default_domain(f, static_cast<int>(x.size())).contains(x))
        throw DomainError("point outside the " + std::string(to_string(f)) + " domain");
    switch (f) {
        case Function::StyblinskiTang: return styblinski_tang(x);
        case Function::Michalewicz: return michalewicz(x);
        case Function::ModRastrigin: return mod_rastrigin(x);
        case Function::SeriesSystem: return series_system(x);
        case Function::Rosenbrock: return rosenbrock(x);
        case Function::Appendix1d: return appendix_1d(x);
    }
    return 0.0;
}

/// Confusion counts with "valid" as the positive class.
struct ConfusionCounts {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

    std::size_t total() const { return tp + fp + tn + fn; }
};

inline ConfusionCounts confusion(const std::vector<bool>& predicted, const std::vector<bool>& truth) {
    LOCVAL_REQUIRE(predicted.size() == truth.size(), ParameterError, "label vectors differ in length");
    ConfusionCounts c;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (predicted[i]) (truth[i] ? c.tp : c.fp)++;
        else (truth[i] ? c.fn : c.tn)++;
    }
    return c;
}

struct Scores {
    double precision;
    double recall;
    double f1;
};

/// Precision, recall and F1. With no positives anywhere all three are 1; an
/// empty denominator otherwise scores 0.
inline Scores metrics(const ConfusionCounts& c) {
    if (c.tp + c.fp + c.fn == 0) return {1.0, 1.0, 1.0};
    const double p = c.tp + c.fp > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
    const double r = c.tp + c.fn > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
    const double f = p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
    return {p, r, f};
}

/// Noise-free validity xi - |delta| >= 0 at every row of `unit_points`.
inline std::vector<bool> ground_truth_labels(const ResidualOracle& oracle, double xi, const Matrix& unit_points) {
    std::vector<bool> out(static_cast<std::size_t>(unit_points.rows()));
    for (Eigen::Index i = 0; i < unit_points.rows(); ++i)
        out[static_cast<std::size_t>(i)] = xi - std::abs(oracle.residual(unit_points.row(i).transpose())) >= 0.0;
    return out;
}

/// Polynomial ridge regression on z-scored inputs and labels. Features are all
/// monomials of total degree 1..degree; the intercept is not penalized.
class RidgeModel {
public:
    static RidgeModel fit(const Matrix& x, const Vector& y, int degree, double l2) {
        LOCVAL_REQUIRE(degree >= 1, ParameterError, "ridge degree must be at least 1");
        LOCVAL_REQUIRE(l2 >= 0.0, ParameterError, "ridge penalty must be nonnegative");
        LOCVAL_REQUIRE(x.rows() == y.size() && x.rows() >= 2, ParameterError, "ridge needs matching data, n >= 2");
        RidgeModel m;
        m.degree_ = degree;
        m.x_mean_ = x.colwise().mean().transpose();
        m.x_sd_ = ((x.rowwise() - m.x_mean_.transpose()).array().square().colwise().mean().sqrt()).transpose();
        for (Eigen::Index j = 0; j < m.x_sd_.size(); ++j)
            if (!(m.x_sd_[j] > 0.0)) m.x_sd_[j] = 1.0;
        m.y_mean_ = y.mean();
        const double ysd = std::sqrt((y.array() - m.y_mean_).square().mean());
        m.y_sd_ = ysd > 0.0 ? ysd : 1.0;
        m.exponents_ = monomials(static_cast<int>(x.cols()), degree);

        const Matrix phi = m.features(x);
        m.phi_mean_ = phi.colwise().mean().transpose();
        const Matrix pc = phi.rowwise() - m.phi_mean_.transpose();
        const Vector yc = (y.array() - m.y_mean_) / m.y_sd_;
        Matrix a = pc.transpose() * pc;
        a.diagonal().array() += l2;
        m.w_ = a.ldlt().solve(pc.transpose() * yc);
        return m;
    }

    double predict(const Vector& x) const {
        const Matrix phi = features(x.transpose());
        return m_predict(phi.row(0).transpose());
    }

    Vector predict(const Matrix& x) const {
        const Matrix phi = features(x);
        Vector out(x.rows());
        for (Eigen::Index i = 0; i < x.rows(); ++i) out[i] = m_predict(phi.row(i).transpose());
        return out;
    }

    int degree() const { return degree_; }
    Eigen::Index feature_count() const { return static_cast<Eigen::Index>(exponents_.size()); }

private:
    static std::vector<std::vector<int>> monomials(int d, int degree) {
        std::vector<std::vector<int>> out;
        std::vector<int> e(static_cast<std::size_t>(d), 0);
        // enumerate exponent vectors with 1 <= total <= degree
        const std::function<void(int, int)> rec = [&](int dim, int left) {
            if (dim == d) {
                int total = 0;
                for (int v : e) total += v;
                if (total >= 1) out.push_back(e);
                return;
            }
            for (int k = 0; k <= left; ++k) {
                e[static_cast<std::size_t>(dim)] = k;
                rec(dim + 1, left - k);
            }
            e[static_cast<std::size_t>(dim)] = 0;
        };
        rec(0, degree);
        return out;
    }

    Matrix features(const Matrix& x) const {
        LOCVAL_REQUIRE(x.cols() == x_mean_.size(), ParameterError, "ridge input has wrong dimension");
        Matrix phi(x.rows(), static_cast<Eigen::Index>(exponents_.size()));
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            const Vector z = (x.row(i).transpose() - x_mean_).cwiseQuotient(x_sd_);
            for (std::size_t k = 0; k < exponents_.size(); ++k) {
                double v = 1.0;
                for (Eigen::Index j = 0; j < z.size(); ++j) v *= std::pow(z[j], exponents_[k][static_cast<std::size_t>(j)]);
                phi(i, static_cast<Eigen::Index>(k)) = v;
            }
        }
        return phi;
    }

    double m_predict(const Vector& phi) const { return y_mean_ + y_sd_ * (phi - phi_mean_).dot(w_); }

    int degree_ = 1;
    Vector x_mean_, x_sd_;
    double y_mean_ = 0.0, y_sd_ = 1.0;
    std::vector<std::vector<int>> exponents_;
    Vector phi_mean_;
    Vector w_;
};

/// A registered benchmark: error surface, domain and default settings.
struct BenchmarkCase {
    std::string id;
    Function function;
    int dim;
    Domain domain;
    double xi;
    double noise_sd;
    int n_init;
    int n_adapt;
    /// Error surface delta over original coordinates.
    ScalarField residual;

    ResidualOracle oracle(std::uint64_t seed, std::optional<double> noise_override = std::nullopt) const {
        return ResidualOracle(domain, residual, noise_override.value_or(noise_sd), seed);
    }
};

namespace detail {

inline BenchmarkCase analytic(Function f, int d, double xi, double noise_sd) {
    check_dimension(f, d);
    BenchmarkCase c{f == Function::Appendix1d ? std::string("appendix-1d")
                                              : std::string(to_string(f)) + "-" + std::to_string(d) + "d",
                    f,
                    d,
                    default_domain(f, d),
                    xi,
                    noise_sd,
                    10 * d,
                    50 * d,
                    [f](const Vector& x) { return eval_benchmark(f, x); }};
    return c;
}

/// delta = f_M - f_E for a cubic ridge model f_M trained once on noisy samples
/// of f_E (fixed seed, so every campaign validates the same model).
inline BenchmarkCase ridge_case(Function f, int d, double xi, double noise_sd, int n_train) {
    BenchmarkCase base = analytic(f, d, xi, noise_sd);
    Rng rng = Rng::stream(20240501, "ridge-training");
    Matrix x(n_train, d);
    Vector y(n_train);
    for (int i = 0; i < n_train; ++i) {
        for (int j = 0; j < d; ++j) x(i, j) = rng.uniform(base.domain.lower()[j], base.domain.upper()[j]);
        y[i] = eval_benchmark(f, x.row(i).transpose()) + noise_sd * rng.normal();
    }
    auto model = std::make_shared<RidgeModel>(RidgeModel::fit(x, y, 3, 0.3));
    base.id = "ridge-" + base.id;
    base.n_init = 10 * d;
    base.n_adapt = 50 * d;
    base.residual = [f, model](const Vector& p) { return model->predict(p) - eval_benchmark(f, p); };
    return base;
}

/// Parses "<name>-<d>d".
inline std::optional<std::pair<std::string, int>> split_id(const std::string& id) {
    const auto dash = id.rfind('-');
    if (dash == std::string::npos || id.size() < dash + 3 || id.back() != 'd') return std::nullopt;
    const std::string num = id.substr(dash + 1, id.size() - dash - 2);
    if (num.empty() || !std::all_of(num.begin(), num.end(), [](char c) { return c >= '0' && c <= '9'; }))
        return std::nullopt;
    return std::make_pair(id.substr(0, dash), std::stoi(num));
}

}  // namespace detail

/// Benchmark by id, e.g. "styblinski-tang-2d", "appendix-1d", "ridge-rosenbrock-2d".
inline BenchmarkCase find_case(const std::string& id) {
    const auto parts = detail::split_id(id);
    if (!parts) throw ParameterError("unknown benchmark id '" + id + "'");
    const auto& [name, d] = *parts;
    if (name == "styblinski-tang" && d >= 1) return detail::analytic(Function::StyblinskiTang, d, 30.0, 5.0);
    if (name == "michalewicz" && d >= 1) return detail::analytic(Function::Michalewicz, d, 0.07, 0.01);
    if (name == "mod-rastrigin" && d == 2) return detail::analytic(Function::ModRastrigin, 2, 20.0, 0.1);
    if (name == "series-system" && d == 2) return detail::analytic(Function::SeriesSystem, 2, 3.0, 0.5);
    if (name == "rosenbrock" && d >= 2) return detail::analytic(Function::Rosenbrock, d, 250.0 * d / 2.0, 5.0);
    if (name == "appendix" && d == 1) {
        BenchmarkCase c = detail::analytic(Function::Appendix1d, 1, 1.0, 0.05);
        c.n_init = 10;
        c.n_adapt = 100;
        return c;
    }
    if (name == "ridge-rosenbrock" && d == 2) return detail::ridge_case(Function::Rosenbrock, 2, 250.0, 5.0, 100);
    if (name == "ridge-michalewicz" && d == 2) return detail::ridge_case(Function::Michalewicz, 2, 0.3, 0.03, 200);
    throw ParameterError("unknown benchmark id '" + id + "'");
}

inline std::vector<std::string> case_ids() {
    return {"appendix-1d",      "styblinski-tang-2d", "styblinski-tang-4d",  "michalewicz-2d",
            "michalewicz-4d",   "mod-rastrigin-2d",   "series-system-2d",    "rosenbrock-2d",
            "ridge-rosenbrock-2d", "ridge-michalewicz-2d"};
}

/// E[delta(X)^2] and E[delta(X)] under uniform X by plain Monte Carlo.
struct SignalMoments {
    double mean;
    double second;
};

inline SignalMoments signal_moments(const BenchmarkCase& c, std::size_t samples = 1000000, std::uint64_t seed = 7) {
    Rng rng = Rng::stream(seed, "signal");
    const ResidualOracle o = c.oracle(0, 0.0);
    double s1 = 0.0, s2 = 0.0;
    Vector u(c.dim);
    for (std::size_t i = 0; i < samples; ++i) {
        for (int j = 0; j < c.dim; ++j) u[j] = rng.uniform();
        const double v = o.residual(u);
        s1 += v;
        s2 += v * v;
    }
    return {s1 / static_cast<double>(samples), s2 / static_cast<double>(samples)};
}

/// Noise sd giving noise-to-signal ratio sigma^2 / E[delta(X)^2] = ratio.
inline double noise_sd_for_ratio(const SignalMoments& m, double ratio) {
    LOCVAL_REQUIRE(ratio > 0.0, ParameterError, "noise-to-signal ratio must be positive");
    return std::sqrt(ratio * m.second);
}

/// k-th smallest score with k = ceil((n + 1)(1 - alpha)).
inline double conformal_quantile(std::vector<double> scores, double alpha) {
    LOCVAL_REQUIRE(alpha > 0.0 && alpha < 1.0, ParameterError, "alpha must lie in (0,1)");
    const auto n = scores.size();
    const double kk = std::ceil(static_cast<double>(n + 1) * (1.0 - alpha) - 1e-12);
    if (n == 0 || kk > static_cast<double>(n))
        throw InfeasibleError("coverage 1 - alpha needs at least " +
                              std::to_string(static_cast<long>(std::ceil(1.0 / alpha - 1.0))) +
                              " calibration points, got " + std::to_string(n));
    const auto k = static_cast<std::size_t>(kk);
    std::nth_element(scores.begin(), scores.begin() + static_cast<std::ptrdiff_t>(k - 1), scores.end());
    return scores[k - 1];
}

/// Half-width of the split-conformal interval from absolute residuals.
inline double split_conformal(const std::vector<double>& abs_residuals, double alpha) {
    return conformal_quantile(abs_residuals, alpha);
}

inline constexpr double kResidualScaleFloor = 1e-12;

/// Multiplier q such that q u(x) is the locally scaled half-width.
inline double mad_conformal(const std::vector<double>& abs_residuals, const std::vector<double>& scale, double alpha) {
    LOCVAL_REQUIRE(abs_residuals.size() == scale.size(), ParameterError, "residual and scale counts differ");
    std::vector<double> s(abs_residuals.size());
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = abs_residuals[i] / std::max(scale[i], kResidualScaleFloor);
    return conformal_quantile(std::move(s), alpha);
}

}  // namespace locval::bench
