#pragma once

#include <nlohmann/json.hpp>

#include <map>
#include <string>
#include <vector>

namespace paneldml {

struct Coefficient {
    std::string name;
    double estimate = 0.0;
    double std_error = 0.0;
    double t_stat = 0.0;
};

/// Coefficient table plus fit diagnostics, the common result currency of
/// every estimator. Serializes to a CSV/JSON table with one row per term.
struct EstimateResult {
    std::vector<Coefficient> coefficients;
    std::size_t n_obs = 0;
    std::map<std::string, double> diagnostics;

    const Coefficient& coef(const std::string& name) const;
    bool has_coef(const std::string& name) const;

    /// `meta` lines are emitted as '# key=value' comments (CSV) or a
    /// "provenance" object (JSON).
    std::string to_csv(const std::vector<std::string>& meta = {}) const;
    nlohmann::json to_json(const std::vector<std::string>& meta = {}) const;
};

/// Per-period marginal effects of treatment on the terminal outcome.
struct DynamicEffects {
    std::vector<int> periods; // wave labels, ascending
    std::vector<double> psi;
    std::vector<double> se;
    std::size_t n_obs = 0;

    /// "15-19"-style row label: treatment period vs terminal period.
    std::string period_label(std::size_t t) const;
    std::string to_csv(const std::vector<std::string>& meta = {}) const;
    nlohmann::json to_json(const std::vector<std::string>& meta = {}) const;
};

} // namespace paneldml
