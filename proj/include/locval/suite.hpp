#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

#include "json.hpp"
#include "locval/csv.hpp"
#include "locval/runner.hpp"

namespace locval::suite {

struct Job {
    std::string variant;  // strategy, or strategy plus a noise level
    RunSpec spec;
};

inline constexpr std::array<double, 3> kNoiseRatios{0.001, 0.1, 0.5};
inline constexpr std::string_view kNoisePrefix = "noise-";

namespace detail {

inline Job make_job(const std::string& suite, const std::string& variant, const bench::BenchmarkCase& c, Strategy s,
                    int seed, std::optional<double> noise_sd) {
    RunSpec spec(c, s, static_cast<std::uint64_t>(seed));
    spec.noise_sd = noise_sd;
    spec.campaign.early_stop = false;
    spec.run_id = suite + "/" + variant + "/" + std::to_string(seed);
    return {variant, std::move(spec)};
}

inline std::string noise_variant(double ratio) {
    char label[48];
    std::snprintf(label, sizeof label, "mis@ns=%g", ratio);
    return label;
}

}  // namespace detail

/// mis campaigns (omega = 0.2 xi) at each noise-to-signal ratio, seeds 1..seeds.
inline std::vector<Job> noise_jobs(const std::string& suite, const bench::BenchmarkCase& c,
                                   const std::vector<double>& ratios, int seeds) {
    LOCVAL_REQUIRE(seeds >= 1, ParameterError, "restarts must be positive");
    const auto moments = bench::signal_moments(c);
    std::vector<Job> jobs;
    for (double r : ratios) {
        const double sd = bench::noise_sd_for_ratio(moments, r);
        for (int seed = 1; seed <= seeds; ++seed)
            jobs.push_back(detail::make_job(suite, detail::noise_variant(r), c, Strategy::Mis, seed, sd));
    }
    return jobs;
}

/// Jobs of a registered suite. A benchmark id compares mis (omega = 0.2 xi),
/// u and random sampling; "noise-<id>" runs mis at several noise-to-signal ratios.
/// Seeds are 1..restarts. Every campaign uses its full budget.
inline std::vector<Job> jobs_for(const std::string& suite, int restarts) {
    LOCVAL_REQUIRE(restarts >= 1, ParameterError, "restarts must be positive");
    const bool noise = suite.rfind(kNoisePrefix, 0) == 0;
    const bench::BenchmarkCase c = bench::find_case(noise ? suite.substr(kNoisePrefix.size()) : suite);
    if (noise) return noise_jobs(suite, c, {kNoiseRatios.begin(), kNoiseRatios.end()}, restarts);
    std::vector<Job> jobs;
    for (Strategy s : {Strategy::Mis, Strategy::U, Strategy::Random})
        for (int seed = 1; seed <= restarts; ++seed)
            jobs.push_back(detail::make_job(suite, std::string(to_string(s)), c, s, seed, std::nullopt));
    return jobs;
}

/// Runs jobs on `threads` workers. Output order is the job order regardless
/// of scheduling.
inline std::vector<std::vector<EvalRow>> run_jobs(const std::vector<Job>& jobs, int threads) {
    std::vector<std::vector<EvalRow>> out(jobs.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    const auto worker = [&] {
        for (std::size_t i; (i = next++) < jobs.size();) {
            try {
                out[i] = run_scored(jobs[i].spec);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = jobs.size();
            }
        }
    };
    const int n = std::max(1, std::min<int>(threads, static_cast<int>(jobs.size())));
    std::vector<std::thread> pool;
    for (int t = 1; t < n; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
    return out;
}

/// Linearly interpolated percentile, p in [0, 100].
inline double percentile(std::vector<double> v, double p) {
    LOCVAL_REQUIRE(!v.empty(), ParameterError, "percentile of an empty sample");
    std::sort(v.begin(), v.end());
    const double pos = p / 100.0 * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

struct SummaryRow {
    std::string variant;
    int iteration;
    double n_samples;
    int runs;
    double f1_median, f1_lo, f1_hi;
    double p_mis_median;
    double true_mis_median;
};

/// Median and 95% band of F1 per variant and iteration.
inline std::vector<SummaryRow> summarize(const std::vector<Job>& jobs, const std::vector<std::vector<EvalRow>>& rows) {
    std::vector<std::string> order;
    std::map<std::pair<std::string, int>, std::vector<const EvalRow*>> groups;
    for (std::size_t j = 0; j < jobs.size(); ++j) {
        if (std::find(order.begin(), order.end(), jobs[j].variant) == order.end()) order.push_back(jobs[j].variant);
        for (const auto& r : rows[j]) groups[{jobs[j].variant, r.iteration}].push_back(&r);
    }
    std::vector<SummaryRow> out;
    for (const auto& variant : order) {
        for (const auto& [key, members] : groups) {
            if (key.first != variant) continue;
            std::vector<double> f1, n, pm, tm;
            for (const EvalRow* r : members) {
                f1.push_back(r->f1);
                n.push_back(r->n_samples);
                pm.push_back(r->p_mis_est);
                tm.push_back(r->true_mis_rate);
            }
            out.push_back({variant, key.second, percentile(n, 50), static_cast<int>(members.size()),
                           percentile(f1, 50), percentile(f1, 2.5), percentile(f1, 97.5), percentile(pm, 50),
                           percentile(tm, 50)});
        }
    }
    return out;
}

inline void write_summary(std::ostream& os, const std::vector<SummaryRow>& rows) {
    os << "variant,iteration,n_samples,runs,f1_median,f1_lo,f1_hi,p_mis_median,true_mis_median\r\n";
    for (const auto& r : rows)
        os << csv::quote(r.variant) << ',' << r.iteration << ',' << csv::number(r.n_samples) << ',' << r.runs << ','
           << csv::number(r.f1_median) << ',' << csv::number(r.f1_lo) << ',' << csv::number(r.f1_hi) << ','
           << csv::number(r.p_mis_median) << ',' << csv::number(r.true_mis_median) << "\r\n";
}

inline nlohmann::json plot_data(const std::string& suite, const std::vector<SummaryRow>& rows) {
    nlohmann::json series = nlohmann::json::array();
    for (const auto& r : rows) {
        if (series.empty() || series.back()["variant"] != r.variant)
            series.push_back({{"variant", r.variant}, {"points", nlohmann::json::array()}});
        series.back()["points"].push_back(
            {{"n_samples", r.n_samples}, {"median", r.f1_median}, {"lo", r.f1_lo}, {"hi", r.f1_hi}});
    }
    return {{"suite", suite}, {"version", 1}, {"metric", "f1"}, {"series", series}};
}

struct Outputs {
    std::filesystem::path results, summary, plot;
};

/// Final evaluation row of each run, per noise-to-signal ratio.
struct NoiseLevel {
    double ratio;
    double noise_sd;
    double noise_to_tolerance;  // sigma_e / xi
    std::vector<EvalRow> final_rows;
};

inline std::vector<NoiseLevel> noise_study(const bench::BenchmarkCase& c, const std::vector<double>& ratios, int seeds,
                                           int threads) {
    const auto jobs = noise_jobs("noise-" + c.id, c, ratios, seeds);
    const auto rows = run_jobs(jobs, threads);
    std::vector<NoiseLevel> out;
    for (std::size_t j = 0; j < jobs.size(); ++j) {
        const double sd = *jobs[j].spec.noise_sd;
        if (out.empty() || out.back().noise_sd != sd)
            out.push_back({ratios[out.size()], sd, sd / c.xi, {}});
        out.back().final_rows.push_back(rows[j].back());
    }
    return out;
}

/// Runs a suite and writes <suite>_results.csv, <suite>_summary.csv and
/// <suite>_plot.json into `out_dir`.
inline Outputs run_suite(const std::string& suite, int restarts, int threads, const std::filesystem::path& out_dir) {
    const auto jobs = jobs_for(suite, restarts);
    const auto rows = run_jobs(jobs, threads);
    std::filesystem::create_directories(out_dir);
    Outputs o{out_dir / (suite + "_results.csv"), out_dir / (suite + "_summary.csv"), out_dir / (suite + "_plot.json")};
    std::ofstream results(o.results, std::ios::binary);
    csv::write_header(results);
    for (const auto& run : rows)
        for (const auto& r : run) csv::write_row(results, r);
    const auto summary = summarize(jobs, rows);
    std::ofstream s(o.summary, std::ios::binary);
    write_summary(s, summary);
    std::ofstream p(o.plot, std::ios::binary);
    p << plot_data(suite, summary).dump(2) << '\n';
    if (!results || !s || !p) throw Error("failed to write suite outputs to " + out_dir.string());
    return o;
}

}  // namespace locval::suite
