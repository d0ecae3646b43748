#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "locval/doe.hpp"
#include "locval/gp.hpp"
#include "locval/limitstate.hpp"

namespace locval {

enum class Strategy { Mis, U, U2, Random };

inline std::string_view to_string(Strategy s) {
    switch (s) {
        case Strategy::Mis: return "mis";
        case Strategy::U: return "u";
        case Strategy::U2: return "u2";
        case Strategy::Random: return "random";
    }
    return "unknown";
}

inline Strategy strategy_from_string(std::string_view s) {
    for (auto v : {Strategy::Mis, Strategy::U, Strategy::U2, Strategy::Random})
        if (to_string(v) == s) return v;
    throw ParameterError("unknown strategy '" + std::string(s) + "' (expected mis, u, u2 or random)");
}

/// Probability that the sign of g at this point is misclassified, with
/// exploration slack omega: P(G <= -omega) on the predicted-valid side,
/// P(G > omega) on the predicted-invalid side.
inline double psi_mis(const LimitStatePosterior& p, double omega) {
    LOCVAL_REQUIRE(omega >= 0.0 && omega < p.xi, ParameterError, "omega must satisfy 0 <= omega < xi");
    if (std::abs(p.mu_star) <= p.xi) return folded_cdf(p, -omega);
    return folded_sf(p, omega);
}

inline double psi_mis(const GpModel& model, double xi, double omega, const Vector& x) {
    return psi_mis(LimitStatePosterior::from(model.predict(x), xi), omega);
}

/// -|mean of G| / sd of G.
inline double psi_u(const LimitStatePosterior& p) {
    const FoldedMoments m = folded_moments(p);
    const double sd = std::max(std::sqrt(m.variance), 1e-9 * p.xi);
    return -std::abs(m.mean) / sd;
}

inline double psi_u(const GpModel& model, double xi, const Vector& x) {
    return psi_u(LimitStatePosterior::from(model.predict(x), xi));
}

/// Plain U-function of one Gaussian belief N(mean, sd^2) about a limit state at 0.
inline double u_function(double mean, double sd) { return -std::abs(mean) / std::max(sd, 1e-300); }

inline void require_same_inputs(const GpModel& a, const GpModel& b) {
    if (a.data().inputs.rows() != b.data().inputs.rows() || a.data().inputs != b.data().inputs)
        throw ConsistencyError("paired models were trained on different inputs");
}

/// Sum of the U-functions of a GP on xi - y and a GP on xi + y.
inline double psi_u2(const GpModel& model_low, const GpModel& model_up, const Vector& x) {
    require_same_inputs(model_low, model_up);
    const Prediction lo = model_low.predict(x), up = model_up.predict(x);
    return u_function(lo.mean, std::sqrt(lo.variance)) + u_function(up.mean, std::sqrt(up.variance));
}

/// Models an acquisition strategy needs. `residual` regresses the labels y and
/// drives prediction; `low`/`up` are only set for the u2 strategy.
struct AcquisitionModels {
    const GpModel* residual = nullptr;
    const GpModel* low = nullptr;
    const GpModel* up = nullptr;
};

/// Scores of every candidate row. Random sampling scores everything 0.
inline Vector acquisition_scores(Strategy strategy, const AcquisitionModels& models, const ToleranceSpec& tol,
                                 const Matrix& candidates) {
    const Eigen::Index m = candidates.rows();
    Vector scores = Vector::Zero(m);
    switch (strategy) {
        case Strategy::Random: break;
        case Strategy::Mis:
        case Strategy::U: {
            LOCVAL_REQUIRE(models.residual, ParameterError, "strategy needs the residual model");
            Vector mean, var;
            models.residual->predict(candidates, mean, &var);
            for (Eigen::Index i = 0; i < m; ++i) {
                const LimitStatePosterior p(mean[i], std::sqrt(std::max(var[i], 0.0)), tol.xi);
                scores[i] = strategy == Strategy::Mis ? psi_mis(p, tol.omega) : psi_u(p);
            }
            break;
        }
        case Strategy::U2: {
            LOCVAL_REQUIRE(models.low && models.up, ParameterError, "u2 needs both paired models");
            require_same_inputs(*models.low, *models.up);
            Vector ml, vl, mu, vu;
            models.low->predict(candidates, ml, &vl);
            models.up->predict(candidates, mu, &vu);
            for (Eigen::Index i = 0; i < m; ++i)
                scores[i] = u_function(ml[i], std::sqrt(std::max(vl[i], 0.0))) +
                            u_function(mu[i], std::sqrt(std::max(vu[i], 0.0)));
            break;
        }
    }
    return scores;
}

/// Index of the first maximal score.
inline Eigen::Index argmax_first(const Vector& scores) {
    LOCVAL_REQUIRE(scores.size() > 0, ParameterError, "candidate set is empty");
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < scores.size(); ++i)
        if (scores[i] > scores[best]) best = i;
    return best;
}

/// Candidate row chosen by `strategy`; random picks uniformly with `rng`.
inline Eigen::Index select_next(Strategy strategy, const AcquisitionModels& models, const ToleranceSpec& tol,
                                const Matrix& candidates, Rng& rng) {
    LOCVAL_REQUIRE(candidates.rows() > 0, ParameterError, "candidate set is empty");
    if (strategy == Strategy::Random) return static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(candidates.rows())));
    return argmax_first(acquisition_scores(strategy, models, tol, candidates));
}

/// Mean misclassification probability over the candidates.
inline double stopping_pmis(const Vector& mean, const Vector& variance, double xi) {
    LOCVAL_REQUIRE(mean.size() > 0, ParameterError, "candidate set is empty");
    double s = 0.0;
    for (Eigen::Index i = 0; i < mean.size(); ++i)
        s += psi_mis(LimitStatePosterior(mean[i], std::sqrt(std::max(variance[i], 0.0)), xi), 0.0);
    return s / static_cast<double>(mean.size());
}

inline double stopping_pmis(const GpModel& model, double xi, const Matrix& candidates) {
    Vector mean, var;
    model.predict(candidates, mean, &var);
    return stopping_pmis(mean, var, xi);
}

struct CampaignConfig {
    double xi = 1.0;
    std::optional<double> omega;             // default 0.2 xi
    std::optional<int> n_init;               // default 10 d
    std::optional<int> n_adapt_max;          // default 50 d
    std::optional<std::size_t> candidate_override;
    int retrain_every_until = 1;
    int retrain_switch_samples = 100;
    int retrain_every_after = 4;
    double stop_alpha = 0.01;
    int stop_k = 3;
    bool early_stop = true;
    std::uint64_t seed = 0;
    Strategy strategy = Strategy::Mis;
    std::vector<KernelFamily> families{kAllFamilies.begin(), kAllFamilies.end()};
    PriorSpec priors;
    int restarts = 5;         // random restarts of the first fit
    int refit_restarts = 1;   // random restarts added to the warm start on later retrains

    double omega_value() const { return omega.value_or(0.2 * xi); }
    int n_init_value(int d) const { return n_init.value_or(10 * d); }
    int n_adapt_value(int d) const { return n_adapt_max.value_or(50 * d); }

    void validate(int d) const {
        ToleranceSpec(xi, omega_value());
        LOCVAL_REQUIRE(n_init_value(d) >= 2, ParameterError, "initial design needs at least two points");
        LOCVAL_REQUIRE(n_adapt_value(d) >= 0, ParameterError, "adaptive budget must be nonnegative");
        LOCVAL_REQUIRE(retrain_every_until >= 1 && retrain_every_after >= 1, ParameterError,
                       "retraining intervals must be positive");
        LOCVAL_REQUIRE(stop_alpha > 0.0 && stop_alpha < 1.0, ParameterError, "stop_alpha must lie in (0,1)");
        LOCVAL_REQUIRE(stop_k >= 1, ParameterError, "stop_k must be positive");
        LOCVAL_REQUIRE(restarts >= 1 && refit_restarts >= 1, ParameterError, "invalid restart counts");
        LOCVAL_REQUIRE(!families.empty(), ParameterError, "kernel needs at least one family");
        LOCVAL_REQUIRE(!candidate_override || *candidate_override > 0, ParameterError,
                       "candidate override must be positive");
    }

    /// Whether hyperparameters are relearned when the model holds n samples.
    bool retrain_due(Eigen::Index n) const {
        const auto sw = static_cast<Eigen::Index>(retrain_switch_samples);
        if (n < sw) return n % retrain_every_until == 0;
        return (n - sw) % retrain_every_after == 0;
    }
};

struct IterationRecord {
    int iteration = 0;  // 0 for the initial design, then 1, 2, ... per adaptive sample
    Vector point;       // unit cube
    double label = 0.0;
    double p_mis = std::numeric_limits<double>::quiet_NaN();  // NaN for initial-design records
    bool retrained = false;
    double elapsed_ms = 0.0;
};

struct RunHistory {
    std::vector<IterationRecord> records;
    int adaptive_iterations = 0;
    bool stopped_early = false;
};

struct CampaignResult {
    Dataset data;
    GpModel model;  // final retrain on all data
    RunHistory history;
};

/// What an adaptive iteration saw: the model used for selection (trained on
/// every sample before this iteration), its candidates and the estimate.
struct IterationView {
    const IterationRecord& record;
    const GpModel& model;
    const Matrix& candidates;
};

using RecordCallback = std::function<void(const IterationView&)>;

namespace campaign_detail {

struct Models {
    GpModel residual;
    std::optional<GpModel> low, up;
};

inline Dataset shifted(const Dataset& d, double sign, double xi) {
    Dataset s = d;
    s.labels = (xi + sign * d.labels.array()).matrix();
    return s;
}

inline FitOptions fit_options(const CampaignConfig& cfg, const GpModel* warm) {
    FitOptions o;
    o.families = cfg.families;
    if (warm) o.warm_start = warm->hyper();
    return o;
}

inline Models train(const CampaignConfig& cfg, const Dataset& data, const Models* prev, Rng& rng) {
    const int restarts = prev ? cfg.refit_restarts : cfg.restarts;
    if (cfg.strategy != Strategy::U2) {
        GpModel m = fit(data, cfg.priors, restarts, rng, fit_options(cfg, prev ? &prev->residual : nullptr));
        return {std::move(m), std::nullopt, std::nullopt};
    }
    auto one = [&](double sign, const GpModel* w) {
        return fit(shifted(data, sign, cfg.xi), cfg.priors, restarts, rng, fit_options(cfg, w));
    };
    GpModel low = one(-1.0, prev ? &*prev->low : nullptr);
    GpModel up = one(1.0, prev ? &*prev->up : nullptr);
    // the GP on xi + y is the GP on y shifted by xi: standardization absorbs the offset
    GpModel residual = GpModel::condition(data, up.hyper());
    return {std::move(residual), std::move(low), std::move(up)};
}

}  // namespace campaign_detail

/// Active-learning validation campaign: Latin hypercube start, then one
/// queried point per iteration until the budget is spent or the estimated
/// misclassification rate stays at or below stop_alpha for stop_k iterations.
inline CampaignResult run_campaign(ResidualOracle& oracle, const CampaignConfig& cfg,
                                   const RecordCallback& on_iteration = {}) {
    const int d = oracle.dim();
    cfg.validate(d);
    const ToleranceSpec tol(cfg.xi, cfg.omega_value());
    const int n_init = cfg.n_init_value(d);
    const int n_adapt = cfg.n_adapt_value(d);

    Rng init_rng = Rng::stream(cfg.seed, "init");
    Rng cand_rng = Rng::stream(cfg.seed, "candidates");
    Rng restart_rng = Rng::stream(cfg.seed, "restarts");
    Rng acq_rng = Rng::stream(cfg.seed, "acquisition");

    using clock = std::chrono::steady_clock;
    const auto ms_since = [](clock::time_point t0) {
        return std::chrono::duration<double, std::milli>(clock::now() - t0).count();
    };

    RunHistory history;
    Dataset data;
    {
        const Matrix x0 = doe::lhs(n_init, d, init_rng);
        Vector y0(n_init);
        for (int i = 0; i < n_init; ++i) {
            const auto t0 = clock::now();
            y0[i] = oracle.observe(x0.row(i).transpose());
            history.records.push_back({0, x0.row(i).transpose(), y0[i], std::numeric_limits<double>::quiet_NaN(),
                                       false, ms_since(t0)});
        }
        data = Dataset(x0, y0);
    }

    std::optional<campaign_detail::Models> models;
    int streak = 0;
    for (int it = 1; it <= n_adapt; ++it) {
        const auto t0 = clock::now();
        bool retrained = false;
        if (!models || cfg.retrain_due(data.size())) {
            models = campaign_detail::train(cfg, data, models ? &*models : nullptr, restart_rng);
            retrained = true;
        } else {
            const Eigen::Index last = data.size() - 1;
            const Vector x = data.inputs.row(last).transpose();
            const double y = data.labels[last];
            models->residual = models->residual.updated(x, y);
            if (models->low) {
                models->low = models->low->updated(x, cfg.xi - y);
                models->up = models->up->updated(x, cfg.xi + y);
            }
        }

        const Matrix cand = doe::candidates(d, cand_rng, cfg.candidate_override);
        Vector mean, var;
        models->residual.predict(cand, mean, &var);
        const double p_mis = stopping_pmis(mean, var, cfg.xi);

        Eigen::Index pick = 0;
        switch (cfg.strategy) {
            case Strategy::Random:
                pick = static_cast<Eigen::Index>(acq_rng.index(static_cast<std::size_t>(cand.rows())));
                break;
            case Strategy::Mis:
            case Strategy::U: {
                Vector scores(cand.rows());
                for (Eigen::Index i = 0; i < cand.rows(); ++i) {
                    const LimitStatePosterior p(mean[i], std::sqrt(std::max(var[i], 0.0)), cfg.xi);
                    scores[i] = cfg.strategy == Strategy::Mis ? psi_mis(p, tol.omega) : psi_u(p);
                }
                pick = argmax_first(scores);
                break;
            }
            case Strategy::U2:
                pick = argmax_first(acquisition_scores(Strategy::U2, {nullptr, &*models->low, &*models->up}, tol, cand));
                break;
        }

        const Vector x = cand.row(pick).transpose();
        const double y = oracle.observe(x);
        history.records.push_back({it, x, y, p_mis, retrained, ms_since(t0)});
        history.adaptive_iterations = it;
        if (on_iteration) on_iteration(IterationView{history.records.back(), models->residual, cand});
        data.append(x, y);

        streak = p_mis <= cfg.stop_alpha ? streak + 1 : 0;
        if (cfg.early_stop && streak >= cfg.stop_k) {
            history.stopped_early = true;
            break;
        }
    }

    campaign_detail::Models final_models =
        campaign_detail::train(cfg, data, models ? &*models : nullptr, restart_rng);
    return {std::move(data), std::move(final_models.residual), std::move(history)};
}

}  // namespace locval
