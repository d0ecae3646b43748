#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

#include "locval/core.hpp"
#include "locval/kernel.hpp"
#include "locval/optimize.hpp"

namespace locval {

/// Half-Cauchy priors on hyperparameters; a missing scale means a flat prior.
struct PriorSpec {
    std::optional<double> lengthscale_scale = 2.0;
    std::optional<double> outputscale_scale;
    std::optional<double> noise_scale;

    static PriorSpec flat() { return PriorSpec{std::nullopt, std::nullopt, std::nullopt}; }

    void validate() const {
        for (const auto& s : {lengthscale_scale, outputscale_scale, noise_scale})
            LOCVAL_REQUIRE(!s || *s > 0.0, ParameterError, "prior scale must be positive");
    }
};

struct GpHyperparams {
    KernelSpec kernel;
    double noise_var = 1e-2;  // standardized units
    double mean_const = 0.0;  // standardized units
};

struct Interval {
    double lo;
    double hi;
};

/// Box constraints for the hyperparameter search (standardized units).
struct HyperBounds {
    Interval lengthscale{1e-3, 1e3};
    Interval scale{1e-4, 20.0};
    Interval shape{1e-2, 1e2};
    Interval noise{1e-6, 1.0};
};

inline constexpr double kNoiseFloor = 1e-6;
inline constexpr double kMaxJitter = 1e-2;

/// Label centering and scaling used inside a GpModel.
struct Standardization {
    double mean = 0.0;
    double sd = 1.0;

    static Standardization of(const Vector& y) {
        Standardization s;
        const Eigen::Index n = y.size();
        if (n == 0) return s;
        s.mean = y.mean();
        if (n >= 2) {
            const double var = (y.array() - s.mean).square().sum() / static_cast<double>(n - 1);
            const double sd = std::sqrt(var);
            if (sd > 1e-12 * std::max(1.0, std::abs(s.mean))) s.sd = sd;
        }
        return s;
    }

    Vector apply(const Vector& y) const { return (y.array() - mean) / sd; }
};

namespace gp_detail {

inline constexpr double kLog2Pi = 1.8378770664093453;

/// log density of a half-Cauchy(scale) at v and its derivative w.r.t. log v.
inline double half_cauchy_log(double v, double scale, double* dlog) {
    const double z = v / scale;
    if (dlog) *dlog = -2.0 * z * z / (1.0 + z * z);
    return std::log(2.0 / (std::numbers::pi * scale)) - std::log1p(z * z);
}

/// Per-dimension squared coordinate differences of every training pair (r >= c),
/// packed column by column.
struct PairwiseCache {
    Eigen::Index n = 0;
    std::vector<Vector> sqdiff;
    Vector weight;  // 1 on the diagonal, 2 off it: sums over the full symmetric matrix

    explicit PairwiseCache(const Matrix& x) : n(x.rows()) {
        const Eigen::Index np = n * (n + 1) / 2;
        sqdiff.assign(static_cast<std::size_t>(x.cols()), Vector(np));
        weight.resize(np);
        Eigen::Index p = 0;
        for (Eigen::Index c = 0; c < n; ++c)
            for (Eigen::Index r = c; r < n; ++r, ++p) weight[p] = r == c ? 1.0 : 2.0;
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            Vector& d = sqdiff[static_cast<std::size_t>(j)];
            p = 0;
            for (Eigen::Index c = 0; c < n; ++c)
                for (Eigen::Index r = c; r < n; ++r, ++p) {
                    const double z = x(r, j) - x(c, j);
                    d[p] = z * z;
                }
        }
    }
};

/// Packed values of one term: k = scale * profile, and (with gradients)
/// scale * d profile / d r^2 and d k / d log shape.
struct TermValues {
    Vector r2, k, dk_dr2, dshape;
};

inline void fill_term(const KernelTerm& t, const PairwiseCache& cache, bool with_grad, TermValues& out) {
    const Eigen::Index np = cache.weight.size();
    out.r2.setZero(np);
    for (std::size_t j = 0; j < cache.sqdiff.size(); ++j) {
        const double l = t.lengthscales[static_cast<Eigen::Index>(j)];
        out.r2 += cache.sqdiff[j] * (1.0 / (l * l));
    }
    const double sc = t.scale;
    const auto r2 = out.r2.array();
    switch (t.family) {
        case KernelFamily::SquaredExponential:
            out.k = sc * (-0.5 * r2).exp();
            if (with_grad) out.dk_dr2 = -0.5 * out.k;
            break;
        case KernelFamily::Matern12: {
            const Eigen::ArrayXd rr = r2.sqrt();
            out.k = sc * (-rr).exp();
            if (with_grad) out.dk_dr2 = (rr > 0.0).select(-out.k.array() / (2.0 * rr), 0.0);
            break;
        }
        case KernelFamily::Matern32: {
            const Eigen::ArrayXd s = detail::kSqrt3 * r2.sqrt();
            const Eigen::ArrayXd e = sc * (-s).exp();
            out.k = (1.0 + s) * e;
            if (with_grad) out.dk_dr2 = -1.5 * e;
            break;
        }
        case KernelFamily::Matern52: {
            const Eigen::ArrayXd s = detail::kSqrt5 * r2.sqrt();
            const Eigen::ArrayXd e = sc * (-s).exp();
            out.k = (1.0 + s + (5.0 / 3.0) * r2) * e;
            if (with_grad) out.dk_dr2 = -(5.0 / 6.0) * (1.0 + s) * e;
            break;
        }
        case KernelFamily::RationalQuadratic: {
            const double a = t.shape;
            const Eigen::ArrayXd u = r2 / (2.0 * a);
            const Eigen::ArrayXd lb = u.log1p();
            out.k = sc * (-a * lb).exp();
            if (with_grad) {
                out.dk_dr2 = -0.5 * out.k.array() / (1.0 + u);
                out.dshape = out.k.array() * a * (u / (1.0 + u) - lb);
            }
            break;
        }
    }
}

inline Eigen::Index param_count(const KernelSpec& k) {
    Eigen::Index p = 1;  // noise
    for (const auto& t : k.terms) p += t.lengthscales.size() + 1 + (t.has_shape() ? 1 : 0);
    return p;
}

/// log marginal likelihood + log prior of centered labels `y`, with optional
/// gradient w.r.t. the log-parameters in pack() order. Returns -inf when the
/// covariance is not numerically positive definite.
inline double objective(const PairwiseCache& cache, const Vector& y, const GpHyperparams& h,
                        const PriorSpec& prior, Vector* grad) {
    const Eigen::Index n = y.size();
    const auto& terms = h.kernel.terms;
    std::vector<TermValues> tv(terms.size());
    Vector kp = Vector::Zero(cache.weight.size());
    for (std::size_t t = 0; t < terms.size(); ++t) {
        fill_term(terms[t], cache, grad != nullptr, tv[t]);
        kp += tv[t].k;
    }
    Matrix K(n, n);
    Eigen::Index p = 0;
    for (Eigen::Index c = 0; c < n; ++c)
        for (Eigen::Index r = c; r < n; ++r) K(r, c) = kp[p++];
    K.diagonal().array() += h.noise_var;
    Eigen::LLT<Matrix, Eigen::Lower> llt(K);
    if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
    const Vector alpha = llt.solve(y);
    const auto& L = llt.matrixLLT();
    double logdet = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) logdet += std::log(L(i, i));
    logdet *= 2.0;
    double value = -0.5 * y.dot(alpha) - 0.5 * logdet - 0.5 * static_cast<double>(n) * kLog2Pi;
    if (!std::isfinite(value)) return -std::numeric_limits<double>::infinity();

    // W = alpha alpha^T - K^{-1}, packed and pre-multiplied by the symmetry weight
    Vector w;
    if (grad) {
        grad->setZero(param_count(h.kernel));
        Matrix linv = Matrix::Identity(n, n);
        llt.matrixL().solveInPlace(linv);
        Matrix kinv = Matrix::Zero(n, n);
        kinv.selfadjointView<Eigen::Lower>().rankUpdate(linv.transpose());
        w.resize(cache.weight.size());
        p = 0;
        for (Eigen::Index c = 0; c < n; ++c)
            for (Eigen::Index r = c; r < n; ++r, ++p) w[p] = cache.weight[p] * (alpha[r] * alpha[c] - kinv(r, c));
    }

    p = 0;
    for (std::size_t t = 0; t < terms.size(); ++t) {
        const auto& term = terms[t];
        const Eigen::Index d = term.lengthscales.size();
        Vector wg;
        if (grad) wg = w.cwiseProduct(tv[t].dk_dr2);
        for (Eigen::Index j = 0; j < d; ++j, ++p) {
            const double l = term.lengthscales[j];
            double dprior = 0.0;
            if (prior.lengthscale_scale) value += half_cauchy_log(l, *prior.lengthscale_scale, &dprior);
            if (grad) (*grad)[p] = -wg.dot(cache.sqdiff[static_cast<std::size_t>(j)]) / (l * l) + dprior;
        }
        {
            double dprior = 0.0;
            if (prior.outputscale_scale) value += half_cauchy_log(term.scale, *prior.outputscale_scale, &dprior);
            if (grad) (*grad)[p] = 0.5 * w.dot(tv[t].k) + dprior;
            ++p;
        }
        if (term.has_shape()) {
            if (grad) (*grad)[p] = 0.5 * w.dot(tv[t].dshape);
            ++p;
        }
    }
    double dprior = 0.0;
    if (prior.noise_scale) value += half_cauchy_log(h.noise_var, *prior.noise_scale, &dprior);
    if (grad) {
        double tr = 0.0;
        Eigen::Index q = 0;
        for (Eigen::Index c = 0; c < n; ++c) {
            tr += w[q];
            q += n - c;
        }
        (*grad)[p] = 0.5 * h.noise_var * tr + dprior;
    }
    return value;
}

}  // namespace gp_detail

/// Log-parameters in a fixed order: per term (log lengthscales, log scale,
/// [log shape]), then log noise variance.
inline Vector pack(const GpHyperparams& h) {
    Vector v(gp_detail::param_count(h.kernel));
    Eigen::Index p = 0;
    for (const auto& t : h.kernel.terms) {
        for (Eigen::Index j = 0; j < t.lengthscales.size(); ++j) v[p++] = std::log(t.lengthscales[j]);
        v[p++] = std::log(t.scale);
        if (t.has_shape()) v[p++] = std::log(t.shape);
    }
    v[p] = std::log(h.noise_var);
    return v;
}

/// Inverse of pack(); `like` provides the kernel structure and mean constant.
inline GpHyperparams unpack(const Vector& v, const GpHyperparams& like) {
    GpHyperparams h = like;
    LOCVAL_REQUIRE(v.size() == gp_detail::param_count(h.kernel), ParameterError, "parameter vector size mismatch");
    Eigen::Index p = 0;
    for (auto& t : h.kernel.terms) {
        for (Eigen::Index j = 0; j < t.lengthscales.size(); ++j) t.lengthscales[j] = std::exp(v[p++]);
        t.scale = std::exp(v[p++]);
        if (t.has_shape()) t.shape = std::exp(v[p++]);
    }
    h.noise_var = std::exp(v[p]);
    return h;
}

inline std::pair<Vector, Vector> log_bounds(const KernelSpec& k, const HyperBounds& b) {
    const Eigen::Index np = gp_detail::param_count(k);
    Vector lo(np), hi(np);
    Eigen::Index p = 0;
    for (const auto& t : k.terms) {
        for (Eigen::Index j = 0; j < t.lengthscales.size(); ++j, ++p) {
            lo[p] = std::log(b.lengthscale.lo);
            hi[p] = std::log(b.lengthscale.hi);
        }
        lo[p] = std::log(b.scale.lo);
        hi[p++] = std::log(b.scale.hi);
        if (t.has_shape()) {
            lo[p] = std::log(b.shape.lo);
            hi[p++] = std::log(b.shape.hi);
        }
    }
    lo[p] = std::log(b.noise.lo);
    hi[p] = std::log(b.noise.hi);
    return {lo, hi};
}

/// Log marginal likelihood plus log prior density of `data` under `hyper`,
/// evaluated on the labels as given (callers standardize first if desired).
inline double log_map_objective(const Dataset& data, const GpHyperparams& hyper, const PriorSpec& priors) {
    hyper.kernel.validate();
    LOCVAL_REQUIRE(data.dim() == hyper.kernel.dim(), ParameterError, "data and kernel dimension differ");
    const gp_detail::PairwiseCache cache(data.inputs);
    const Vector y = data.labels.array() - hyper.mean_const;
    const double v = gp_detail::objective(cache, y, hyper, priors, nullptr);
    if (!std::isfinite(v)) throw IllConditionedError("covariance matrix is not positive definite");
    return v;
}

/// As above, also returning the gradient w.r.t. pack(hyper).
inline double log_map_objective(const Dataset& data, const GpHyperparams& hyper, const PriorSpec& priors,
                                Vector& grad) {
    hyper.kernel.validate();
    LOCVAL_REQUIRE(data.dim() == hyper.kernel.dim(), ParameterError, "data and kernel dimension differ");
    const gp_detail::PairwiseCache cache(data.inputs);
    const Vector y = data.labels.array() - hyper.mean_const;
    const double v = gp_detail::objective(cache, y, hyper, priors, &grad);
    if (!std::isfinite(v)) throw IllConditionedError("covariance matrix is not positive definite");
    return v;
}

struct Prediction {
    double mean;
    double variance;
};

/// Exact GP conditioned on a dataset with fixed hyperparameters. Immutable;
/// update() returns a new model.
class GpModel {
public:
    /// Standardizes the labels and factorizes K + noise I. If that fails, a
    /// diagonal jitter starting at the noise floor escalates x10 up to 1e-2.
    static GpModel condition(Dataset data, GpHyperparams hyper) {
        hyper.kernel.validate();
        LOCVAL_REQUIRE(data.size() == 0 || data.dim() == hyper.kernel.dim(), ParameterError,
                       "data and kernel dimension differ");
        LOCVAL_REQUIRE(hyper.noise_var >= 0.0 && std::isfinite(hyper.noise_var), ParameterError,
                       "noise variance must be nonnegative");
        GpModel m;
        m.std_ = Standardization::of(data.labels);
        m.hyper_ = std::move(hyper);
        m.data_ = std::move(data);
        m.factorize();
        return m;
    }

    const Dataset& data() const { return data_; }
    const GpHyperparams& hyper() const { return hyper_; }
    const Standardization& standardization() const { return std_; }
    double jitter() const { return jitter_; }
    int dim() const { return hyper_.kernel.dim(); }

    /// Lower Cholesky factor of K + (noise + jitter) I.
    const Matrix& cholesky() const { return chol_; }
    /// (K + (noise + jitter) I)^{-1} (y_std - mean_const).
    const Vector& weights() const { return alpha_; }
    Vector standardized_labels() const { return std_.apply(data_.labels); }

    /// Predictive mean and latent variance in standardized units.
    Prediction predict_standardized(const Vector& x) const {
        Vector mean, var;
        predict_standardized(x.transpose(), mean, &var);
        return {mean[0], var[0]};
    }

    void predict_standardized(const Matrix& points, Vector& mean, Vector* variance) const {
        LOCVAL_REQUIRE(points.cols() == dim(), ParameterError, "prediction points have wrong dimension");
        const Eigen::Index m = points.rows();
        mean.resize(m);
        if (variance) variance->resize(m);
        const double prior_var = hyper_.kernel.prior_variance();
        if (data_.size() == 0) {
            mean.setConstant(hyper_.mean_const);
            if (variance) variance->setConstant(prior_var);
            return;
        }
        constexpr Eigen::Index kBlock = 2048;
        for (Eigen::Index start = 0; start < m; start += kBlock) {
            const Eigen::Index len = std::min(kBlock, m - start);
            const Matrix kx = cross_covariance(hyper_.kernel, points.middleRows(start, len), data_.inputs);
            mean.segment(start, len) = (kx * alpha_).array() + hyper_.mean_const;
            if (variance) {
                Matrix v = kx.transpose();
                chol_.triangularView<Eigen::Lower>().solveInPlace(v);
                variance->segment(start, len) =
                    (prior_var - v.colwise().squaredNorm().transpose().array()).cwiseMax(0.0);
            }
        }
    }

    /// Predictive mean and latent variance in label units.
    Prediction predict(const Vector& x) const {
        const Prediction s = predict_standardized(x);
        return {std_.mean + std_.sd * s.mean, std_.sd * std_.sd * s.variance};
    }

    void predict(const Matrix& points, Vector& mean, Vector* variance) const {
        predict_standardized(points, mean, variance);
        mean = (mean.array() * std_.sd + std_.mean).matrix();
        if (variance) *variance *= std_.sd * std_.sd;
    }

    /// Model conditioned on the dataset plus (x, y), hyperparameters unchanged.
    /// Extends the Cholesky factor by one row when possible.
    GpModel updated(const Vector& x, double y) const {
        GpModel m = *this;
        m.data_.append(x, y);
        m.std_ = Standardization::of(m.data_.labels);
        const Eigen::Index n = data_.size();
        bool extended = false;
        if (n > 0) {
            const Vector kx = cross_covariance(hyper_.kernel, x.transpose(), data_.inputs).transpose();
            Vector l = kx;
            chol_.triangularView<Eigen::Lower>().solveInPlace(l);
            const double d2 = hyper_.kernel.prior_variance() + hyper_.noise_var + jitter_ - l.squaredNorm();
            // reject pivots too small relative to the diagonal to trust
            if (d2 > 1e-10 * (hyper_.kernel.prior_variance() + hyper_.noise_var)) {
                Matrix c = Matrix::Zero(n + 1, n + 1);
                c.topLeftCorner(n, n) = chol_;
                c.block(n, 0, 1, n) = l.transpose();
                c(n, n) = std::sqrt(d2);
                m.chol_ = std::move(c);
                m.solve_weights();
                extended = true;
            }
        }
        if (!extended) m.factorize();
        return m;
    }

private:
    void factorize() {
        const Eigen::Index n = data_.size();
        if (n == 0) {
            chol_.resize(0, 0);
            alpha_.resize(0);
            jitter_ = 0.0;
            return;
        }
        Matrix K = cross_covariance(hyper_.kernel, data_.inputs, data_.inputs);
        K.diagonal().array() += hyper_.noise_var;
        for (double jitter = 0.0; jitter <= kMaxJitter * 1.0000001; jitter = jitter == 0.0 ? kNoiseFloor : jitter * 10.0) {
            Matrix Kj = K;
            Kj.diagonal().array() += jitter;
            Eigen::LLT<Matrix> llt(Kj);
            if (llt.info() == Eigen::Success) {
                chol_ = llt.matrixL();
                jitter_ = jitter;
                solve_weights();
                return;
            }
        }
        throw IllConditionedError("kernel matrix not positive definite after maximal jitter");
    }

    void solve_weights() {
        Vector r = std_.apply(data_.labels).array() - hyper_.mean_const;
        chol_.triangularView<Eigen::Lower>().solveInPlace(r);
        chol_.transpose().triangularView<Eigen::Upper>().solveInPlace(r);
        alpha_ = std::move(r);
    }

    Dataset data_;
    GpHyperparams hyper_;
    Standardization std_;
    double jitter_ = 0.0;
    Matrix chol_;
    Vector alpha_;
};

/// Convenience for tests and the n = 0 case.
inline GpModel condition(Dataset data, GpHyperparams hyper) { return GpModel::condition(std::move(data), std::move(hyper)); }

struct FitOptions {
    std::vector<KernelFamily> families{kAllFamilies.begin(), kAllFamilies.end()};
    /// Extra initialization tried before the random ones; must match `families`.
    std::optional<GpHyperparams> warm_start;
    HyperBounds bounds;
    optimize::Options optimizer = default_optimizer();

    /// Stops once five iterations gain less than 1e-5 relative; far below
    /// the resolution that matters for predictions.
    static optimize::Options default_optimizer() {
        optimize::Options o;
        o.max_iterations = 200;
        o.gradient_tolerance = 1e-4;
        o.relative_tolerance = 1e-5;
        o.stall_window = 5;
        return o;
    }
};

struct FitReport {
    std::vector<double> initial_objectives;
    std::vector<double> final_objectives;
    double best_objective = -std::numeric_limits<double>::infinity();
};

/// MAP hyperparameters over standardized labels, multi-started from one
/// deterministic initialization (the warm start if given, otherwise a fixed
/// heuristic) plus `restarts` log-uniform draws over the box.
inline GpModel fit(const Dataset& data, const PriorSpec& priors, int restarts, Rng& rng,
                   const FitOptions& options = {}, FitReport* report = nullptr) {
    LOCVAL_REQUIRE(data.size() >= 2, ParameterError, "fit needs at least two observations");
    LOCVAL_REQUIRE(restarts >= 1, ParameterError, "fit needs at least one restart");
    LOCVAL_REQUIRE(!options.families.empty(), ParameterError, "fit needs at least one kernel family");
    priors.validate();
    data.validate();
    const int d = data.dim();

    GpHyperparams base;
    base.kernel = KernelSpec::of(options.families, d, 0.2, 1.0 / static_cast<double>(options.families.size()));
    base.noise_var = 1e-2;
    base.mean_const = 0.0;

    const Standardization st = Standardization::of(data.labels);
    const Vector y = st.apply(data.labels);
    const gp_detail::PairwiseCache cache(data.inputs);
    const auto [lo, hi] = log_bounds(base.kernel, options.bounds);

    std::vector<Vector> inits;
    bool warm_ok = false;
    if (options.warm_start) {
        const auto& w = options.warm_start->kernel.terms;
        warm_ok = w.size() == base.kernel.terms.size();
        for (std::size_t t = 0; warm_ok && t < w.size(); ++t)
            warm_ok = w[t].family == base.kernel.terms[t].family && w[t].lengthscales.size() == d;
    }
    inits.push_back(warm_ok ? pack(*options.warm_start) : pack(base));
    for (int r = 0; r < restarts; ++r) {
        Vector v(lo.size());
        for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.uniform(lo[i], hi[i]);
        inits.push_back(std::move(v));
    }

    const optimize::Objective f = [&](const Vector& v, Vector& g) {
        return gp_detail::objective(cache, y, unpack(v, base), priors, &g);
    };

    FitReport rep;
    Vector best;
    for (const Vector& init : inits) {
        Vector g0;
        rep.initial_objectives.push_back(f(optimize::detail::project(init, lo, hi), g0));
        const auto res = optimize::maximize_box(f, init, lo, hi, options.optimizer);
        rep.final_objectives.push_back(res.value);
        if (std::isfinite(res.value) && res.value > rep.best_objective) {
            rep.best_objective = res.value;
            best = res.x;
        }
    }
    if (best.size() == 0) throw IllConditionedError("no initialization produced a factorizable covariance");
    if (report) *report = rep;
    return GpModel::condition(data, unpack(best, base));
}

}  // namespace locval
