#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "locval/errors.hpp"
#include "locval/random.hpp"

namespace locval {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Axis-aligned validation domain. All internal computation runs in the unit
/// cube; this type maps between the two coordinate systems.
class Domain {
public:
    Domain(Vector lower, Vector upper) : lower_(std::move(lower)), upper_(std::move(upper)) {
        LOCVAL_REQUIRE(lower_.size() >= 1, ParameterError, "domain needs at least one dimension");
        LOCVAL_REQUIRE(lower_.size() == upper_.size(), ParameterError, "domain bound sizes differ");
        for (Eigen::Index i = 0; i < lower_.size(); ++i) {
            if (!(std::isfinite(lower_[i]) && std::isfinite(upper_[i]) && lower_[i] < upper_[i]))
                throw DomainError("degenerate or invalid bounds in dimension " + std::to_string(i));
        }
    }

    /// Same interval [lo, hi] in every one of `d` dimensions.
    static Domain cube(int d, double lo, double hi) {
        return Domain(Vector::Constant(d, lo), Vector::Constant(d, hi));
    }
    static Domain unit(int d) { return cube(d, 0.0, 1.0); }

    int dim() const { return static_cast<int>(lower_.size()); }
    const Vector& lower() const { return lower_; }
    const Vector& upper() const { return upper_; }

    Vector normalize(const Vector& x) const {
        check_dim(x);
        Vector u(x.size());
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            if (!(x[i] >= lower_[i] && x[i] <= upper_[i]))
                throw DomainError("coordinate " + std::to_string(x[i]) + " outside bounds in dimension " +
                                  std::to_string(i));
            u[i] = (x[i] - lower_[i]) / (upper_[i] - lower_[i]);
        }
        return u;
    }

    Vector denormalize(const Vector& u) const {
        check_dim(u);
        for (Eigen::Index i = 0; i < u.size(); ++i) {
            if (!(u[i] >= 0.0 && u[i] <= 1.0))
                throw DomainError("unit-cube coordinate outside [0,1] in dimension " + std::to_string(i));
        }
        return lower_.array() + u.array() * (upper_ - lower_).array();
    }

    bool contains(const Vector& x) const {
        if (x.size() != lower_.size()) return false;
        return (x.array() >= lower_.array()).all() && (x.array() <= upper_.array()).all();
    }

private:
    void check_dim(const Vector& x) const {
        if (x.size() != lower_.size())
            throw ParameterError("point has dimension " + std::to_string(x.size()) + ", domain has " +
                                 std::to_string(lower_.size()));
    }

    Vector lower_;
    Vector upper_;
};

/// Observed (unit-cube input, noisy residual label) pairs. Labels are kept in
/// their original units.
struct Dataset {
    Matrix inputs;  // n x d
    Vector labels;  // n

    Dataset() = default;
    Dataset(Matrix x, Vector y) : inputs(std::move(x)), labels(std::move(y)) { validate(); }

    Eigen::Index size() const { return labels.size(); }
    int dim() const { return static_cast<int>(inputs.cols()); }

    void validate() const {
        LOCVAL_REQUIRE(inputs.rows() == labels.size(), ParameterError, "input rows and label count differ");
        LOCVAL_REQUIRE(labels.allFinite(), ParameterError, "labels must be finite");
        LOCVAL_REQUIRE(inputs.size() == 0 || ((inputs.array() >= 0.0).all() && (inputs.array() <= 1.0).all()),
                       DomainError, "dataset inputs must lie in the unit cube");
    }

    void append(const Vector& x, double y) {
        LOCVAL_REQUIRE(inputs.rows() == 0 || x.size() == inputs.cols(), ParameterError,
                       "appended point has wrong dimension");
        LOCVAL_REQUIRE(std::isfinite(y), ParameterError, "label must be finite");
        LOCVAL_REQUIRE((x.array() >= 0.0).all() && (x.array() <= 1.0).all(), DomainError,
                       "appended point outside the unit cube");
        const Eigen::Index n = size();
        Matrix xi(n + 1, x.size());
        if (n > 0) xi.topRows(n) = inputs;
        xi.row(n) = x.transpose();
        Vector yi(n + 1);
        yi.head(n) = labels;
        yi[n] = y;
        inputs = std::move(xi);
        labels = std::move(yi);
    }
};

/// Tolerance xi on |error| and the exploration slack omega of the acquisition.
struct ToleranceSpec {
    double xi;
    double omega;

    ToleranceSpec(double xi_, double omega_) : xi(xi_), omega(omega_) {
        LOCVAL_REQUIRE(xi > 0.0 && std::isfinite(xi), ParameterError, "tolerance xi must be positive");
        LOCVAL_REQUIRE(omega >= 0.0 && omega < xi, ParameterError, "omega must satisfy 0 <= omega < xi");
    }
};

using ScalarField = std::function<double(const Vector&)>;

/// The noisy observation channel f_D(x) = f_M(x) - f_E(x) - eps.
///
/// Queries are in unit-cube coordinates. Single owner: the noise stream
/// advances with every observation.
class ResidualOracle {
public:
    /// Model under validation and ground truth, both over original coordinates.
    ResidualOracle(Domain domain, ScalarField model, ScalarField truth, double noise_sd, std::uint64_t seed)
        : domain_(std::move(domain)),
          noise_sd_(noise_sd),
          rng_(Rng::stream(seed, "noise")) {
        LOCVAL_REQUIRE(noise_sd >= 0.0, ParameterError, "noise sd must be nonnegative");
        residual_ = [m = std::move(model), t = std::move(truth)](const Vector& x) { return m(x) - t(x); };
    }

    /// Direct error surface delta over original coordinates.
    ResidualOracle(Domain domain, ScalarField residual, double noise_sd, std::uint64_t seed)
        : domain_(std::move(domain)),
          residual_(std::move(residual)),
          noise_sd_(noise_sd),
          rng_(Rng::stream(seed, "noise")) {
        LOCVAL_REQUIRE(noise_sd >= 0.0, ParameterError, "noise sd must be nonnegative");
    }

    double observe(const Vector& unit_x) {
        const double eps = noise_sd_ > 0.0 ? noise_sd_ * rng_.normal() : 0.0;
        return residual(unit_x) - eps;
    }

    /// Noise-free residual delta at a unit-cube point.
    double residual(const Vector& unit_x) const {
        const double v = residual_(domain_.denormalize(unit_x));
        if (!std::isfinite(v)) throw EvaluationError("residual evaluated to a non-finite value");
        return v;
    }

    const Domain& domain() const { return domain_; }
    double noise_sd() const { return noise_sd_; }
    int dim() const { return domain_.dim(); }

private:
    Domain domain_;
    ScalarField residual_;
    double noise_sd_;
    Rng rng_;
};

}  // namespace locval
