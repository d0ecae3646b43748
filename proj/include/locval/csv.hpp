#pragma once

#include <cstdio>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "locval/runner.hpp"

namespace locval::csv {

inline constexpr int kSchemaVersion = 1;

inline const std::vector<std::string>& header() {
    static const std::vector<std::string> h{"schema_version", "run_id",      "seed",         "strategy",
                                            "iteration",      "n_samples",   "precision",    "recall",
                                            "f1",             "precision_conf", "recall_conf", "f1_conf",
                                            "p_mis_est",      "true_mis_rate", "wall_ms"};
    return h;
}

/// RFC 4180 field quoting.
inline std::string quote(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

/// Shortest round-trippable form, identical on every run.
inline std::string number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_header(std::ostream& os) {
    const auto& h = header();
    for (std::size_t i = 0; i < h.size(); ++i) os << (i ? "," : "") << h[i];
    os << "\r\n";
}

inline void write_row(std::ostream& os, const EvalRow& r) {
    os << kSchemaVersion << ',' << quote(r.run_id) << ',' << r.seed << ',' << quote(r.strategy) << ','
       << r.iteration << ',' << r.n_samples << ',' << number(r.precision) << ',' << number(r.recall) << ','
       << number(r.f1) << ',' << number(r.precision_conf) << ',' << number(r.recall_conf) << ','
       << number(r.f1_conf) << ',' << number(r.p_mis_est) << ',' << number(r.true_mis_rate) << ','
       << number(r.wall_ms) << "\r\n";
}

inline void write(std::ostream& os, const std::vector<EvalRow>& rows) {
    write_header(os);
    for (const auto& r : rows) write_row(os, r);
}

/// Splits one CSV record; `is` may supply further lines for quoted newlines.
inline bool read_record(std::istream& is, std::vector<std::string>& fields) {
    fields.clear();
    std::string line;
    if (!std::getline(is, line)) return false;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0;; ++i) {
        if (i == line.size()) {
            if (quoted) {
                std::string more;
                if (!std::getline(is, more)) throw ConfigError("unterminated quoted field");
                cur += '\n';
                line = more;
                i = static_cast<std::size_t>(-1);
                continue;
            }
            break;
        }
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    return true;
}

/// Parses a results file; ConfigError (with line number) on schema violations.
inline std::vector<EvalRow> read(std::istream& is) {
    std::vector<EvalRow> rows;
    std::vector<std::string> f;
    int line = 1;
    if (!read_record(is, f)) return rows;
    if (f != header()) throw ConfigError("results header does not match the expected schema", line);
    const auto to_d = [&](const std::string& s) {
        try {
            std::size_t pos = 0;
            const double v = std::stod(s, &pos);
            if (pos != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            throw ConfigError("invalid number '" + s + "'", line);
        }
    };
    while (read_record(is, f)) {
        ++line;
        if (f.size() == 1 && f[0].empty()) continue;
        if (f.size() != header().size()) throw ConfigError("wrong field count", line);
        if (f[0] != std::to_string(kSchemaVersion)) throw ConfigError("unsupported schema version " + f[0], line);
        EvalRow r;
        r.run_id = f[1];
        try {
            std::size_t pos = 0;
            r.seed = std::stoull(f[2], &pos);
            if (pos != f[2].size()) throw std::invalid_argument(f[2]);
        } catch (const std::exception&) {
            throw ConfigError("invalid seed '" + f[2] + "'", line);
        }
        r.strategy = f[3];
        r.iteration = static_cast<int>(to_d(f[4]));
        r.n_samples = static_cast<int>(to_d(f[5]));
        r.precision = to_d(f[6]);
        r.recall = to_d(f[7]);
        r.f1 = to_d(f[8]);
        r.precision_conf = to_d(f[9]);
        r.recall_conf = to_d(f[10]);
        r.f1_conf = to_d(f[11]);
        r.p_mis_est = to_d(f[12]);
        r.true_mis_rate = to_d(f[13]);
        r.wall_ms = to_d(f[14]);
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace locval::csv
