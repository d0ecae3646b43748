#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <numbers>

#include "locval/bench.hpp"
#include "locval/doe.hpp"

using namespace locval;
using namespace locval::bench;

namespace {

constexpr double kPi = std::numbers::pi;

// Second implementations, written from the textbook definitions.
double st_ref(const Vector& x) {
    double s = 0;
    for (Eigen::Index i = 0; i < x.size(); ++i) s += std::pow(x[i], 4) - 16 * std::pow(x[i], 2) + 5 * x[i];
    return s / 2;
}

double mich_ref(const Vector& x) {
    double s = 0;
    for (Eigen::Index i = 1; i <= x.size(); ++i) {
        const double v = x[i - 1];
        double p = std::sin(static_cast<double>(i) * v * v / kPi);
        p = p * p;          // ^2
        p = p * p;          // ^4
        const double p4 = p;
        p = p * p;          // ^8
        p = p * p;          // ^16
        s -= std::sin(v) * p * p4;
    }
    return s;
}

double rast_ref(const Vector& x) { return 10 + (x.array().square() - 5 * (2 * kPi * x.array()).cos()).sum(); }

double series_ref(const Vector& x) {
    const double a = x[0], b = x[1], q = 0.1 * std::pow(a - b, 2), s = (a + b) / std::sqrt(2.0);
    const std::array<double, 4> v{3 + q - s, 3 + q + s, a - b + 7 / std::sqrt(2.0), b - a + 7 / std::sqrt(2.0)};
    return *std::min_element(v.begin(), v.end());
}

double rosen_ref(const Vector& x) {
    double s = 0;
    for (Eigen::Index i = 0; i + 1 < x.size(); ++i) s += 100 * std::pow(x[i + 1] - std::pow(x[i], 2), 2) + std::pow(1 - x[i], 2);
    return s;
}

Vector at(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

}  // namespace

TEST(Functions, Examples) {
    EXPECT_EQ(eval_benchmark(Function::StyblinskiTang, at({0, 0})), 0.0);
    EXPECT_EQ(eval_benchmark(Function::ModRastrigin, at({0, 0})), 0.0);
    EXPECT_EQ(eval_benchmark(Function::Rosenbrock, at({1, 1, 1, 1})), 0.0);
    EXPECT_DOUBLE_EQ(eval_benchmark(Function::SeriesSystem, at({0, 0})), 3.0);
    EXPECT_EQ(eval_benchmark(Function::Michalewicz, at({0, 0, 0})), 0.0);
    EXPECT_NEAR(eval_benchmark(Function::Appendix1d, at({0.0})), 0.5 * std::sin(-2.0), 1e-15);
    EXPECT_THROW(eval_benchmark(Function::StyblinskiTang, at({6, 0})), DomainError);
    EXPECT_THROW(eval_benchmark(Function::SeriesSystem, at({0, 0, 0})), ParameterError);
    EXPECT_THROW(eval_benchmark(Function::Rosenbrock, at({0})), ParameterError);
}

TEST(Functions, AgreeWithSecondImplementation) {
    Rng rng(1);
    struct Item {
        Function f;
        int d;
        double (*ref)(const Vector&);
    };
    const std::array<Item, 7> items{{{Function::StyblinskiTang, 2, st_ref},
                                      {Function::StyblinskiTang, 5, st_ref},
                                      {Function::Michalewicz, 4, mich_ref},
                                      {Function::ModRastrigin, 2, rast_ref},
                                      {Function::SeriesSystem, 2, series_ref},
                                      {Function::Rosenbrock, 2, rosen_ref},
                                      {Function::Rosenbrock, 6, rosen_ref}}};
    for (const auto& it : items) {
        const Domain dom = default_domain(it.f, it.d);
        for (int k = 0; k < 1000; ++k) {
            Vector u(it.d);
            for (int j = 0; j < it.d; ++j) u[j] = rng.uniform();
            const Vector x = dom.denormalize(u);
            const double want = it.ref(x);
            EXPECT_NEAR(eval_benchmark(it.f, x), want, 1e-10 * std::max(1.0, std::abs(want))) << to_string(it.f);
        }
    }
}

TEST(Functions, AppendixDerivative) {
    for (double x = 0.0; x <= 1.0; x += 0.01) {
        const double h = 1e-6;
        const double fd = (appendix_1d(at({x + h})) - appendix_1d(at({x - h}))) / (2 * h);
        EXPECT_NEAR(appendix_1d_derivative(x), fd, 1e-6);
    }
}

TEST(Registry, CasesResolve) {
    for (const auto& id : case_ids()) {
        const BenchmarkCase c = find_case(id);
        EXPECT_EQ(c.id, id);
        EXPECT_GT(c.xi, 0.0);
        EXPECT_EQ(c.domain.dim(), c.dim);
    }
    const BenchmarkCase st = find_case("styblinski-tang-2d");
    EXPECT_EQ(st.xi, 30.0);
    EXPECT_EQ(st.noise_sd, 5.0);
    EXPECT_EQ(st.n_init, 20);
    EXPECT_EQ(st.n_adapt, 100);
    EXPECT_EQ(find_case("appendix-1d").n_adapt, 100);
    EXPECT_EQ(find_case("rosenbrock-4d").xi, 500.0);
    EXPECT_THROW(find_case("series-system-3d"), ParameterError);
    EXPECT_THROW(find_case("nothing"), ParameterError);
    EXPECT_THROW(find_case("styblinski-tang-xd"), ParameterError);
}

TEST(GroundTruth, Examples) {
    const BenchmarkCase c = find_case("styblinski-tang-2d");
    const ResidualOracle o = c.oracle(0);
    Matrix u(2, 2);
    u << 0.5, 0.5, 0.0, 0.0;
    const auto labels = ground_truth_labels(o, 30.0, u);
    EXPECT_TRUE(labels[0]);
    EXPECT_FALSE(labels[1]);
    EXPECT_DOUBLE_EQ(o.residual(u.row(1).transpose()), 200.0);
}

TEST(GroundTruth, EveryCaseIsPartiallyValid) {
    for (const auto& id : case_ids()) {
        const BenchmarkCase c = find_case(id);
        Rng rng = Rng::stream(3, id);
        const Matrix pts = doe::lhs(std::min(25000 * c.dim, 250000), c.dim, rng);
        const auto labels = ground_truth_labels(c.oracle(0), c.xi, pts);
        const double ratio = static_cast<double>(std::count(labels.begin(), labels.end(), true)) / labels.size();
        EXPECT_GT(ratio, 0.0) << id;
        EXPECT_LT(ratio, 1.0) << id;
    }
}

TEST(Metrics, Examples) {
    Scores s = metrics({10, 0, 5, 0});
    EXPECT_EQ(s.precision, 1.0);
    EXPECT_EQ(s.recall, 1.0);
    EXPECT_EQ(s.f1, 1.0);
    s = metrics({1, 1, 0, 1});
    EXPECT_DOUBLE_EQ(s.precision, 0.5);
    EXPECT_DOUBLE_EQ(s.recall, 0.5);
    EXPECT_DOUBLE_EQ(s.f1, 0.5);
    s = metrics({0, 0, 5, 0});
    EXPECT_EQ(s.f1, 1.0);
    EXPECT_EQ(s.precision, 1.0);
    s = metrics({0, 3, 5, 0});
    EXPECT_EQ(s.precision, 0.0);
    EXPECT_EQ(s.f1, 0.0);
}

TEST(Metrics, RecomputedFromRawLabels) {
    Rng rng(4);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 1 + rng.index(200);
        std::vector<bool> pred(n), truth(n);
        for (std::size_t i = 0; i < n; ++i) {
            pred[i] = rng.uniform() < 0.6;
            truth[i] = rng.uniform() < 0.5;
        }
        const ConfusionCounts c = confusion(pred, truth);
        EXPECT_EQ(c.total(), n);
        double tp = 0, pp = 0, ap = 0;
        for (std::size_t i = 0; i < n; ++i) {
            tp += pred[i] && truth[i];
            pp += pred[i];
            ap += truth[i];
        }
        if (tp == 0) continue;
        const Scores s = metrics(c);
        EXPECT_NEAR(s.precision, tp / pp, 1e-15);
        EXPECT_NEAR(s.recall, tp / ap, 1e-15);
        EXPECT_NEAR(s.f1, 2 * tp / (pp + ap), 1e-15);
    }
    EXPECT_THROW(confusion({true}, {true, false}), ParameterError);
}

TEST(Ridge, RecoversLinearData) {
    Rng rng(5);
    Matrix x(30, 2);
    Vector y(30);
    for (int i = 0; i < 30; ++i) {
        x(i, 0) = rng.uniform(-3, 3);
        x(i, 1) = rng.uniform(0, 10);
        y[i] = 1.5 - 2.0 * x(i, 0) + 0.25 * x(i, 1);
    }
    const RidgeModel m = RidgeModel::fit(x, y, 1, 1e-12);
    for (int k = 0; k < 10; ++k) {
        const Vector p = at({rng.uniform(-3, 3), rng.uniform(0, 10)});
        EXPECT_NEAR(m.predict(p), 1.5 - 2.0 * p[0] + 0.25 * p[1], 1e-8);
    }
}

TEST(Ridge, InfiniteShrinkagePredictsTheMean) {
    Rng rng(6);
    Matrix x(20, 1);
    Vector y(20);
    for (int i = 0; i < 20; ++i) {
        x(i, 0) = rng.uniform();
        y[i] = std::exp(x(i, 0));
    }
    const RidgeModel m = RidgeModel::fit(x, y, 3, 1e14);
    EXPECT_NEAR(m.predict(at({0.3})), y.mean(), 1e-9);
    EXPECT_THROW(RidgeModel::fit(x, y, 0, 0.3), ParameterError);
}

TEST(Ridge, DuplicatedDataWithDoubledPenaltyIsUnchanged) {
    Rng rng(7);
    Matrix x(25, 2), xx(50, 2);
    Vector y(25), yy(50);
    for (int i = 0; i < 25; ++i) {
        x.row(i) << rng.uniform(-2, 2), rng.uniform(-2, 2);
        y[i] = rosen_ref(x.row(i).transpose()) + rng.normal();
    }
    xx << x, x;
    yy << y, y;
    // the penalty is not normalized by n, so duplicating the data halves its weight
    const RidgeModel a = RidgeModel::fit(x, y, 3, 0.3), b = RidgeModel::fit(xx, yy, 3, 0.6);
    EXPECT_EQ(a.feature_count(), 9);
    for (int k = 0; k < 10; ++k) {
        const Vector p = at({rng.uniform(-2, 2), rng.uniform(-2, 2)});
        EXPECT_NEAR(a.predict(p), b.predict(p), 1e-8 * std::max(1.0, std::abs(a.predict(p))));
    }
}

TEST(Ridge, CasesValidateATrainedModel) {
    const BenchmarkCase c = find_case("ridge-rosenbrock-2d");
    const Vector p = at({0.5, 0.5});
    EXPECT_NE(c.residual(c.domain.denormalize(p)), 0.0);
    // the same model every time
    EXPECT_EQ(c.residual(c.domain.denormalize(p)), find_case("ridge-rosenbrock-2d").residual(c.domain.denormalize(p)));
}

TEST(Conformal, RankRule) {
    EXPECT_DOUBLE_EQ(split_conformal({0.3, 0.1, 0.4, 0.2}, 0.2), 0.4);
    EXPECT_DOUBLE_EQ(split_conformal({0.3, 0.1, 0.4, 0.2, 0.5, 0.6, 0.7, 0.8, 0.9}, 0.2), 0.8);
    EXPECT_THROW(split_conformal({0.1, 0.2}, 0.01), InfeasibleError);
    EXPECT_THROW(split_conformal({}, 0.5), InfeasibleError);
    EXPECT_THROW(split_conformal({0.1}, 0.0), ParameterError);
}

TEST(Conformal, MarginalCoverage) {
    // marginal over calibration draws: 200 calibration sets of 500, 50 fresh points each
    for (double alpha : {0.05, 0.1, 0.2}) {
        Rng rng = Rng::stream(8, std::to_string(alpha));
        int covered = 0, m = 0;
        for (int rep = 0; rep < 200; ++rep) {
            std::vector<double> cal(500);
            for (double& v : cal) v = std::abs(rng.normal());
            const double rho = split_conformal(cal, alpha);
            for (int i = 0; i < 50; ++i, ++m) covered += std::abs(rng.normal()) <= rho;
        }
        const double target = 1 - alpha;
        EXPECT_GE(static_cast<double>(covered) / m, target - 3 * std::sqrt(target * alpha / m)) << alpha;
    }
}

TEST(Conformal, MadReducesToSplitWithUnitScale) {
    Rng rng(9);
    std::vector<double> r(100), ones(100, 1.0);
    for (double& v : r) v = std::abs(rng.normal());
    EXPECT_EQ(mad_conformal(r, ones, 0.1), split_conformal(r, 0.1));
}

TEST(Conformal, MadIsScaleInvariant) {
    Rng rng(10);
    std::vector<double> r(100), u(100), cu(100);
    for (std::size_t i = 0; i < r.size(); ++i) {
        u[i] = rng.uniform(0.1, 2);
        cu[i] = 7.5 * u[i];
        r[i] = u[i] * std::abs(rng.normal());
    }
    const double q = mad_conformal(r, u, 0.1), qc = mad_conformal(r, cu, 0.1);
    EXPECT_NEAR(qc, q / 7.5, 1e-14);
    for (std::size_t i = 0; i < u.size(); ++i) EXPECT_NEAR(qc * cu[i], q * u[i], 1e-12);
    EXPECT_THROW(mad_conformal(r, {1.0}, 0.1), ParameterError);
}

TEST(Conformal, LocalScaleHelpsOnHeteroscedasticErrors) {
    // error magnitude grows 10x across [0,1]; the true scale is the residual predictor
    Rng rng(11);
    const auto scale = [](double x) { return 0.02 * std::pow(10.0, x); };
    const double xi = 0.2, alpha = 0.1;
    std::vector<double> cal(400), u(400);
    for (std::size_t i = 0; i < cal.size(); ++i) {
        const double x = rng.uniform();
        u[i] = scale(x);
        cal[i] = std::abs(u[i] * rng.normal());
    }
    const double rho = split_conformal(cal, alpha), q = mad_conformal(cal, u, alpha);
    std::vector<bool> truth, split_valid, mad_valid;
    for (int i = 0; i < 5000; ++i) {
        const double x = i / 4999.0;
        truth.push_back(1.645 * scale(x) <= xi);  // 90% of |error| within tolerance
        split_valid.push_back(rho <= xi);
        mad_valid.push_back(q * scale(x) <= xi);
    }
    EXPECT_GE(metrics(confusion(mad_valid, truth)).f1, metrics(confusion(split_valid, truth)).f1);
}

TEST(NoiseRatio, RoundTrip) {
    const BenchmarkCase c = find_case("styblinski-tang-2d");
    const SignalMoments m = signal_moments(c, 200000);
    EXPECT_GT(m.second, m.mean * m.mean);
    for (double ratio : {0.001, 0.1, 0.5}) {
        const double sd = noise_sd_for_ratio(m, ratio);
        EXPECT_NEAR(sd * sd / m.second, ratio, 1e-6 * ratio);
    }
    EXPECT_THROW(noise_sd_for_ratio(m, 0.0), ParameterError);
    const SignalMoments again = signal_moments(c, 200000);
    EXPECT_EQ(m.second, again.second);
}
