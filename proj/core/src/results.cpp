#include "paneldml/results.hpp"

#include "paneldml/errors.hpp"
#include "paneldml/panel_io.hpp"

#include <sstream>

namespace paneldml {

const Coefficient& EstimateResult::coef(const std::string& name) const {
    for (const auto& c : coefficients) {
        if (c.name == name) return c;
    }
    throw EstimationError("no coefficient named '" + name + "'");
}

bool EstimateResult::has_coef(const std::string& name) const {
    for (const auto& c : coefficients) {
        if (c.name == name) return true;
    }
    return false;
}

std::string EstimateResult::to_csv(const std::vector<std::string>& meta) const {
    std::ostringstream out;
    for (const auto& m : meta) out << "# " << m << '\n';
    out << "# n_obs=" << n_obs << '\n';
    for (const auto& [key, value] : diagnostics)
        out << "# " << key << '=' << format_double(value) << '\n';
    out << "term,estimate,std_error,t_stat\n";
    for (const auto& c : coefficients) {
        out << c.name << ',' << format_double(c.estimate) << ',' << format_double(c.std_error)
            << ',' << format_double(c.t_stat) << '\n';
    }
    return out.str();
}

nlohmann::json EstimateResult::to_json(const std::vector<std::string>& meta) const {
    nlohmann::json doc;
    doc["n_obs"] = n_obs;
    doc["diagnostics"] = diagnostics;
    auto& coefs = doc["coefficients"] = nlohmann::json::array();
    for (const auto& c : coefficients) {
        coefs.push_back({{"term", c.name},
                         {"estimate", c.estimate},
                         {"std_error", c.std_error},
                         {"t_stat", c.t_stat}});
    }
    if (!meta.empty()) doc["provenance"] = meta;
    return doc;
}

std::string DynamicEffects::period_label(std::size_t t) const {
    const auto short_label = [](int year) {
        return year >= 1000 ? std::to_string(year % 100) : std::to_string(year);
    };
    return short_label(periods.at(t)) + "-" + short_label(periods.back());
}

std::string DynamicEffects::to_csv(const std::vector<std::string>& meta) const {
    std::ostringstream out;
    for (const auto& m : meta) out << "# " << m << '\n';
    out << "# n_obs=" << n_obs << '\n';
    out << "period,estimate,std_error,t_stat\n";
    for (std::size_t t = 0; t < periods.size(); ++t) {
        const double tstat = se[t] > 0.0 ? psi[t] / se[t] : 0.0;
        out << period_label(t) << ',' << format_double(psi[t]) << ',' << format_double(se[t])
            << ',' << format_double(tstat) << '\n';
    }
    return out.str();
}

nlohmann::json DynamicEffects::to_json(const std::vector<std::string>& meta) const {
    nlohmann::json doc;
    doc["n_obs"] = n_obs;
    auto& rows = doc["effects"] = nlohmann::json::array();
    for (std::size_t t = 0; t < periods.size(); ++t) {
        rows.push_back({{"period", period_label(t)},
                        {"year", periods[t]},
                        {"estimate", psi[t]},
                        {"std_error", se[t]}});
    }
    if (!meta.empty()) doc["provenance"] = meta;
    return doc;
}

} // namespace paneldml
