#pragma once

#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "locval/runner.hpp"

namespace locval::report {

struct Triple {
    double precision = 0.0, recall = 0.0, f1 = 0.0;
};

struct StrategySummary {
    std::string strategy;
    std::size_t rows = 0;
    std::size_t runs = 0;
    Triple mean;   // over every evaluated row
    Triple final;  // over the last row of each run
};

/// Gap between the stopping estimate and the true misclassification rate.
struct Conservativeness {
    std::size_t rows = 0;
    double mean_gap = 0.0;
    double fraction_nonnegative = 0.0;  // of rows with p_mis_est >= true_mis_rate
    std::size_t iterations = 0;
    std::size_t iterations_nonnegative = 0;  // iterations whose mean gap is >= 0
};

struct Report {
    std::vector<StrategySummary> strategies;
    Conservativeness conservativeness;
};

inline Report summarize(const std::vector<EvalRow>& rows) {
    Report rep;
    std::vector<std::string> order;
    std::map<std::string, std::vector<const EvalRow*>> by_strategy;
    for (const auto& r : rows) {
        if (!by_strategy.count(r.strategy)) order.push_back(r.strategy);
        by_strategy[r.strategy].push_back(&r);
    }
    for (const auto& name : order) {
        const auto& members = by_strategy[name];
        StrategySummary s;
        s.strategy = name;
        s.rows = members.size();
        std::map<std::tuple<std::string, std::uint64_t>, const EvalRow*> last;
        for (const EvalRow* r : members) {
            s.mean.precision += r->precision;
            s.mean.recall += r->recall;
            s.mean.f1 += r->f1;
            auto& slot = last[{r->run_id, r->seed}];
            if (!slot || r->iteration >= slot->iteration) slot = r;
        }
        const double n = static_cast<double>(s.rows);
        s.mean = {s.mean.precision / n, s.mean.recall / n, s.mean.f1 / n};
        s.runs = last.size();
        for (const auto& [key, r] : last) {
            s.final.precision += r->precision;
            s.final.recall += r->recall;
            s.final.f1 += r->f1;
        }
        const double m = static_cast<double>(s.runs);
        s.final = {s.final.precision / m, s.final.recall / m, s.final.f1 / m};
        rep.strategies.push_back(s);
    }

    Conservativeness& c = rep.conservativeness;
    std::map<int, std::pair<double, std::size_t>> per_iteration;
    std::size_t nonneg = 0;
    double total = 0.0;
    for (const auto& r : rows) {
        if (!std::isfinite(r.p_mis_est)) continue;
        const double gap = r.p_mis_est - r.true_mis_rate;
        ++c.rows;
        total += gap;
        nonneg += gap >= 0.0;
        auto& acc = per_iteration[r.iteration];
        acc.first += gap;
        ++acc.second;
    }
    if (c.rows > 0) {
        c.mean_gap = total / static_cast<double>(c.rows);
        c.fraction_nonnegative = static_cast<double>(nonneg) / static_cast<double>(c.rows);
    }
    c.iterations = per_iteration.size();
    for (const auto& [it, acc] : per_iteration) c.iterations_nonnegative += acc.first >= 0.0;
    return rep;
}

inline std::string format(const Report& rep) {
    if (rep.strategies.empty()) return "no rows\n";
    std::string out;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-10s %6s %5s | %9s %9s %9s | %9s %9s %9s\n", "strategy", "rows", "runs",
                  "mean_P", "mean_R", "mean_F1", "final_P", "final_R", "final_F1");
    out += buf;
    for (const auto& s : rep.strategies) {
        std::snprintf(buf, sizeof buf, "%-10s %6zu %5zu | %9.4f %9.4f %9.4f | %9.4f %9.4f %9.4f\n", s.strategy.c_str(),
                      s.rows, s.runs, s.mean.precision, s.mean.recall, s.mean.f1, s.final.precision, s.final.recall,
                      s.final.f1);
        out += buf;
    }
    const auto& c = rep.conservativeness;
    std::snprintf(buf, sizeof buf,
                  "p_mis_est - true_mis_rate: mean %+.5f over %zu rows; nonnegative in %.1f%% of rows, "
                  "%zu/%zu iterations have a nonnegative mean\n",
                  c.mean_gap, c.rows, 100.0 * c.fraction_nonnegative, c.iterations_nonnegative, c.iterations);
    out += buf;
    return out;
}

}  // namespace locval::report
