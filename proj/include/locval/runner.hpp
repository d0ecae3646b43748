#pragma once

#include <chrono>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "locval/acquisition.hpp"
#include "locval/bench.hpp"

namespace locval {

/// One evaluation of a campaign's model against ground truth.
struct EvalRow {
    std::string run_id;
    std::uint64_t seed = 0;
    std::string strategy;
    int iteration = 0;  // adaptive samples contained in the evaluated model
    int n_samples = 0;
    double precision = 0.0, recall = 0.0, f1 = 0.0;
    double precision_conf = 0.0, recall_conf = 0.0, f1_conf = 0.0;
    double p_mis_est = 0.0;
    double true_mis_rate = 0.0;
    double wall_ms = 0.0;
};

/// Campaign settings of a benchmark case: its tolerance and budgets.
inline CampaignConfig campaign_for(const bench::BenchmarkCase& c, Strategy strategy, std::uint64_t seed,
                                   double omega_fraction = 0.2) {
    CampaignConfig cfg;
    cfg.xi = c.xi;
    cfg.omega = omega_fraction * c.xi;
    cfg.n_init = c.n_init;
    cfg.n_adapt_max = c.n_adapt;
    cfg.strategy = strategy;
    cfg.seed = seed;
    return cfg;
}

struct RunSpec {
    explicit RunSpec(bench::BenchmarkCase c, Strategy strategy = Strategy::Mis, std::uint64_t seed = 0)
        : bench(std::move(c)), campaign(campaign_for(bench, strategy, seed)) {}

    bench::BenchmarkCase bench;
    CampaignConfig campaign;  // xi and budgets are taken from here
    std::optional<double> noise_sd;  // overrides the benchmark default
    int eval_every = 5;
    std::optional<std::size_t> test_points;  // default min(25000 d, 250000)
    double conf_alpha = 0.1;
    bool record_wall_time = false;  // wall_ms stays 0 otherwise, keeping output byte-stable
    std::string run_id;
};

inline std::size_t default_test_points(int d) {
    return std::min<std::size_t>(25000u * static_cast<std::size_t>(d), 250000u);
}

/// Fixed test design and its ground truth for one seed.
struct TestSet {
    Matrix points;
    std::vector<bool> truth;
};

inline TestSet make_test_set(const ResidualOracle& oracle, double xi, std::size_t n, std::uint64_t seed) {
    Rng rng = Rng::stream(seed, "test");
    TestSet t;
    t.points = doe::lhs(static_cast<int>(n), oracle.dim(), rng);
    t.truth = bench::ground_truth_labels(oracle, xi, t.points);
    return t;
}

struct ModelScores {
    bench::Scores plain;
    bench::Scores conf;
    double mis_rate;
};

inline ModelScores score_model(const GpModel& model, const TestSet& test, double xi, double conf_alpha) {
    Vector mean, var;
    model.predict(test.points, mean, &var);
    const auto valid = predict_valid(mean, xi);
    const auto valid_conf = predict_valid_conf(mean, var, xi, conf_alpha);
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < valid.size(); ++i) wrong += valid[i] != test.truth[i];
    return {bench::metrics(bench::confusion(valid, test.truth)), bench::metrics(bench::confusion(valid_conf, test.truth)),
            static_cast<double>(wrong) / static_cast<double>(std::max<std::size_t>(valid.size(), 1))};
}

/// Runs one campaign and scores its model every `eval_every` adaptive samples
/// and once at the end.
inline std::vector<EvalRow> run_scored(const RunSpec& spec) {
    LOCVAL_REQUIRE(spec.eval_every >= 1, ParameterError, "eval_every must be positive");
    const auto t_start = std::chrono::steady_clock::now();
    const CampaignConfig& cfg = spec.campaign;
    ResidualOracle oracle = spec.bench.oracle(cfg.seed, spec.noise_sd);
    const int d = oracle.dim();
    const TestSet test = make_test_set(oracle, cfg.xi, spec.test_points.value_or(default_test_points(d)), cfg.seed);

    std::vector<EvalRow> rows;
    const auto emit = [&](int iteration, const GpModel& model, double p_mis) {
        const ModelScores s = score_model(model, test, cfg.xi, spec.conf_alpha);
        EvalRow r;
        r.run_id = spec.run_id;
        r.seed = cfg.seed;
        r.strategy = std::string(to_string(cfg.strategy));
        r.iteration = iteration;
        r.n_samples = static_cast<int>(model.data().size());
        r.precision = s.plain.precision;
        r.recall = s.plain.recall;
        r.f1 = s.plain.f1;
        r.precision_conf = s.conf.precision;
        r.recall_conf = s.conf.recall;
        r.f1_conf = s.conf.f1;
        r.p_mis_est = p_mis;
        r.true_mis_rate = s.mis_rate;
        if (spec.record_wall_time)
            r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t_start).count();
        rows.push_back(std::move(r));
    };

    const auto result = run_campaign(oracle, cfg, [&](const IterationView& v) {
        const int evaluated = v.record.iteration - 1;
        if (evaluated % spec.eval_every == 0) emit(evaluated, v.model, v.record.p_mis);
    });

    Rng final_rng = Rng::stream(cfg.seed, "final-candidates");
    const Matrix cand = doe::candidates(d, final_rng, cfg.candidate_override);
    emit(result.history.adaptive_iterations, result.model, stopping_pmis(result.model, cfg.xi, cand));
    return rows;
}

}  // namespace locval
