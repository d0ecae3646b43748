#pragma once

#include <string>

#include "json.hpp"
#include "locval/gp.hpp"

namespace locval::gp_io {

inline constexpr int kFormatVersion = 1;

namespace detail {

inline nlohmann::json to_array(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline Vector from_array(const nlohmann::json& j) {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace detail

/// Hyperparameters and training data; the factorization is rebuilt on load.
inline nlohmann::json to_json(const GpModel& model) {
    nlohmann::json terms = nlohmann::json::array();
    for (const auto& t : model.hyper().kernel.terms)
        terms.push_back({{"family", std::string(to_string(t.family))},
                         {"lengthscales", detail::to_array(t.lengthscales)},
                         {"scale", t.scale},
                         {"shape", t.shape}});
    const Dataset& data = model.data();
    nlohmann::json inputs = nlohmann::json::array();
    for (Eigen::Index i = 0; i < data.inputs.rows(); ++i) inputs.push_back(detail::to_array(data.inputs.row(i).transpose()));
    return {{"format", "locval-gp"},
            {"version", kFormatVersion},
            {"kernel", terms},
            {"noise_var", model.hyper().noise_var},
            {"mean_const", model.hyper().mean_const},
            {"inputs", inputs},
            {"labels", detail::to_array(data.labels)}};
}

inline GpModel from_json(const nlohmann::json& j) {
    try {
        if (j.at("format").get<std::string>() != "locval-gp") throw ConfigError("not a serialized GP model");
        const int version = j.at("version").get<int>();
        if (version != kFormatVersion) throw ConfigError("unsupported model format version " + std::to_string(version));
        GpHyperparams h;
        for (const auto& t : j.at("kernel")) {
            KernelTerm term;
            term.family = family_from_string(t.at("family").get<std::string>());
            term.lengthscales = detail::from_array(t.at("lengthscales"));
            term.scale = t.at("scale").get<double>();
            term.shape = t.at("shape").get<double>();
            h.kernel.terms.push_back(std::move(term));
        }
        h.noise_var = j.at("noise_var").get<double>();
        h.mean_const = j.at("mean_const").get<double>();
        const auto& rows = j.at("inputs");
        const int d = h.kernel.dim();
        Matrix x(static_cast<Eigen::Index>(rows.size()), d);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const Vector r = detail::from_array(rows[i]);
            if (r.size() != d) throw ConfigError("input row " + std::to_string(i) + " has the wrong dimension");
            x.row(static_cast<Eigen::Index>(i)) = r.transpose();
        }
        return GpModel::condition(Dataset(std::move(x), detail::from_array(j.at("labels"))), h);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed model document: ") + e.what());
    }
}

inline std::string dump(const GpModel& model) { return to_json(model).dump(2); }

inline GpModel load(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("invalid JSON: ") + e.what());
    }
    return from_json(j);
}

}  // namespace locval::gp_io
