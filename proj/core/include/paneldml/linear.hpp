#pragma once

#include "paneldml/panel.hpp"
#include "paneldml/results.hpp"

#include <string>
#include <vector>

namespace paneldml {

enum class SeType { Classical, Robust };

/// Declares which dataset fields play which role in a regression. A field
/// may appear in one role only; instruments require exactly one treatment.
struct RegressionSpec {
    std::string outcome;
    std::vector<std::string> treatments;
    std::vector<std::string> controls;
    std::vector<std::string> fixed_effects; // expanded into dummies, e.g. year, province_id
    std::vector<std::string> instruments;   // 2SLS only
    SeType se_type = SeType::Robust;

    void validate() const;
};

/// Pooled least squares of outcome on treatments + controls + fixed-effect
/// dummies (one level dropped per effect, intercept kept). Rows with a
/// missing value in any referenced field are excluded. Rank-deficient
/// designs raise EstimationError naming the collinear columns.
EstimateResult fe_ols(const PanelDataset& ds, const RegressionSpec& spec);

/// Least squares on a binary outcome; identical mechanics to fe_ols,
/// fitted values are not clipped.
EstimateResult lpm(const PanelDataset& ds, const RegressionSpec& spec);

/// Two-stage least squares with exactly one endogenous treatment. Standard
/// errors use second-stage residuals computed with the original treatment.
/// Diagnostics carry the first-stage F for the excluded instruments;
/// F < 10 sets weak_instrument = 1.
EstimateResult tsls(const PanelDataset& ds, const RegressionSpec& spec);

/// Appends a leave-one-out mean of `target` over same-group, same-wave
/// rows as a new column (default name: target + "_group_avg"). Singleton
/// groups get a missing value.
PanelDataset city_average_instrument(const PanelDataset& ds, const std::string& group_field,
                                     const std::string& target_field,
                                     const std::string& output_field = "");

} // namespace paneldml
