#pragma once

#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <sstream>
#include <string>

#include "locval/runner.hpp"

namespace locval::config {

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

struct Entry {
    std::string value;
    int line;
};

inline double to_double(const Entry& e, const std::string& key) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(e.value, &pos);
        if (pos == e.value.size() && std::isfinite(v)) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError("'" + key + "' expects a number, got '" + e.value + "'", e.line);
}

inline long long to_int(const Entry& e, const std::string& key) {
    try {
        std::size_t pos = 0;
        const long long v = std::stoll(e.value, &pos);
        if (pos == e.value.size()) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError("'" + key + "' expects an integer, got '" + e.value + "'", e.line);
}

inline bool to_bool(const Entry& e, const std::string& key) {
    if (e.value == "true" || e.value == "1" || e.value == "yes") return true;
    if (e.value == "false" || e.value == "0" || e.value == "no") return false;
    throw ConfigError("'" + key + "' expects true or false, got '" + e.value + "'", e.line);
}

}  // namespace detail

/// Section-qualified key -> (value, line).
using Entries = std::map<std::string, detail::Entry>;

/// Reads `[section]` headers and `key = value` lines; '#' and ';' start comments.
inline Entries parse(std::istream& is) {
    Entries out;
    std::string section;
    std::string raw;
    int line = 0;
    while (std::getline(is, raw)) {
        ++line;
        std::string s = raw;
        const auto c = s.find_first_of("#;");
        if (c != std::string::npos) s = s.substr(0, c);
        s = detail::trim(s);
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') throw ConfigError("malformed section header", line);
            section = detail::trim(s.substr(1, s.size() - 2));
            if (section.empty()) throw ConfigError("empty section name", line);
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError("expected 'key = value'", line);
        if (section.empty()) throw ConfigError("key outside of any section", line);
        const std::string key = section + "." + detail::trim(s.substr(0, eq));
        const std::string value = detail::trim(s.substr(eq + 1));
        if (value.empty()) throw ConfigError("empty value for '" + key + "'", line);
        if (out.count(key)) throw ConfigError("duplicate key '" + key + "'", line);
        out[key] = {value, line};
    }
    return out;
}

/// Builds a run from parsed entries. Unknown keys are rejected.
inline RunSpec to_run_spec(const Entries& entries) {
    const auto find = [&](const std::string& k) -> const detail::Entry* {
        const auto it = entries.find(k);
        return it == entries.end() ? nullptr : &it->second;
    };
    const auto* id = find("benchmark.id");
    if (!id) throw ConfigError("missing required key 'benchmark.id'");

    RunSpec spec = [&] {
        try {
            return RunSpec(bench::find_case(id->value));
        } catch (const ParameterError& e) {
            throw ConfigError(e.what(), id->line);
        }
    }();
    CampaignConfig& c = spec.campaign;
    double omega_fraction = 0.2;
    std::optional<double> omega_abs;

    using Handler = std::function<void(const detail::Entry&, const std::string&)>;
    const std::map<std::string, Handler> handlers{
        {"benchmark.id", [](const detail::Entry&, const std::string&) {}},
        {"benchmark.noise_sd", [&](auto& e, auto& k) { spec.noise_sd = detail::to_double(e, k); }},
        {"tolerance.xi", [&](auto& e, auto& k) { c.xi = detail::to_double(e, k); }},
        {"tolerance.omega_fraction", [&](auto& e, auto& k) { omega_fraction = detail::to_double(e, k); }},
        {"tolerance.omega", [&](auto& e, auto& k) { omega_abs = detail::to_double(e, k); }},
        {"budget.n_init", [&](auto& e, auto& k) { c.n_init = static_cast<int>(detail::to_int(e, k)); }},
        {"budget.n_adapt", [&](auto& e, auto& k) { c.n_adapt_max = static_cast<int>(detail::to_int(e, k)); }},
        {"budget.candidates",
         [&](auto& e, auto& k) {
             const auto v = detail::to_int(e, k);
             if (v <= 0) throw ConfigError("'" + k + "' must be positive", e.line);
             c.candidate_override = static_cast<std::size_t>(v);
         }},
        {"budget.test_points",
         [&](auto& e, auto& k) {
             const auto v = detail::to_int(e, k);
             if (v <= 0) throw ConfigError("'" + k + "' must be positive", e.line);
             spec.test_points = static_cast<std::size_t>(v);
         }},
        {"gp.kernel",
         [&](auto& e, auto&) {
             if (e.value == "sum5") c.families.assign(kAllFamilies.begin(), kAllFamilies.end());
             else if (e.value == "matern52") c.families = {KernelFamily::Matern52};
             else throw ConfigError("'gp.kernel' must be sum5 or matern52", e.line);
         }},
        {"gp.restarts", [&](auto& e, auto& k) { c.restarts = static_cast<int>(detail::to_int(e, k)); }},
        {"gp.refit_restarts", [&](auto& e, auto& k) { c.refit_restarts = static_cast<int>(detail::to_int(e, k)); }},
        {"gp.lengthscale_prior",
         [&](auto& e, auto& k) {
             if (e.value == "flat") c.priors.lengthscale_scale.reset();
             else c.priors.lengthscale_scale = detail::to_double(e, k);
         }},
        {"gp.retrain_switch_samples",
         [&](auto& e, auto& k) { c.retrain_switch_samples = static_cast<int>(detail::to_int(e, k)); }},
        {"gp.retrain_every_after",
         [&](auto& e, auto& k) { c.retrain_every_after = static_cast<int>(detail::to_int(e, k)); }},
        {"acquisition.strategy",
         [&](auto& e, auto&) {
             try {
                 c.strategy = strategy_from_string(e.value);
             } catch (const ParameterError& err) {
                 throw ConfigError(err.what(), e.line);
             }
         }},
        {"acquisition.stop_alpha", [&](auto& e, auto& k) { c.stop_alpha = detail::to_double(e, k); }},
        {"acquisition.stop_k", [&](auto& e, auto& k) { c.stop_k = static_cast<int>(detail::to_int(e, k)); }},
        {"acquisition.early_stop", [&](auto& e, auto& k) { c.early_stop = detail::to_bool(e, k); }},
        {"run.seed",
         [&](auto& e, auto& k) {
             const auto v = detail::to_int(e, k);
             if (v < 0) throw ConfigError("'run.seed' must be nonnegative", e.line);
             c.seed = static_cast<std::uint64_t>(v);
         }},
        {"run.eval_every", [&](auto& e, auto& k) { spec.eval_every = static_cast<int>(detail::to_int(e, k)); }},
        {"run.conf_alpha", [&](auto& e, auto& k) { spec.conf_alpha = detail::to_double(e, k); }},
        {"run.record_wall_time", [&](auto& e, auto& k) { spec.record_wall_time = detail::to_bool(e, k); }},
        {"run.id", [&](auto& e, auto&) { spec.run_id = e.value; }},
    };
    for (const auto& [key, entry] : entries) {
        const auto h = handlers.find(key);
        if (h == handlers.end()) throw ConfigError("unknown key '" + key + "'", entry.line);
        h->second(entry, key);
    }
    c.omega = omega_abs.value_or(omega_fraction * c.xi);

    // report the first offending line for semantic errors
    const auto line_of = [&](std::initializer_list<const char*> keys) {
        for (const char* k : keys)
            if (const auto* e = find(k)) return e->line;
        return 0;
    };
    try {
        c.validate(spec.bench.dim);
    } catch (const ParameterError& e) {
        throw ConfigError(e.what(), line_of({"tolerance.xi", "tolerance.omega", "tolerance.omega_fraction",
                                            "budget.n_init", "budget.n_adapt", "acquisition.stop_alpha",
                                            "acquisition.stop_k", "gp.restarts", "gp.refit_restarts"}));
    }
    if (spec.eval_every < 1) throw ConfigError("'run.eval_every' must be positive", line_of({"run.eval_every"}));
    if (!(spec.conf_alpha > 0.0 && spec.conf_alpha < 1.0))
        throw ConfigError("'run.conf_alpha' must lie in (0,1)", line_of({"run.conf_alpha"}));
    if (spec.noise_sd && *spec.noise_sd < 0.0)
        throw ConfigError("'benchmark.noise_sd' must be nonnegative", line_of({"benchmark.noise_sd"}));
    return spec;
}

inline RunSpec load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    return to_run_spec(parse(in));
}

inline RunSpec from_string(const std::string& text) {
    std::istringstream in(text);
    return to_run_spec(parse(in));
}

}  // namespace locval::config
