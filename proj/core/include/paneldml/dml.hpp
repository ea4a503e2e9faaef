#pragma once

#include "paneldml/learners.hpp"
#include "paneldml/panel.hpp"
#include "paneldml/results.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace paneldml {

/// Cross-fitted partially-linear-model estimation plan. Each nuisance
/// (E[Y|X], E[D|X], and E[Z|X] when instrumented) gets its own learner.
struct DmlSpec {
    std::string outcome;
    std::string treatment;
    std::vector<std::string> controls;
    std::string instrument; // empty = no instrument

    LearnerSpec outcome_learner = LearnerSpec::default_forest(0);
    LearnerSpec treatment_learner = LearnerSpec::default_forest(0);
    LearnerSpec instrument_learner = LearnerSpec::default_forest(0);

    int k_folds = 5;
    int n_repeats = 1; // cross-fitting repetitions, median-aggregated
    std::uint64_t seed = 0;

    void validate() const;
    /// Applies one seed to fold splitting and all nuisance learners.
    DmlSpec with_seed(std::uint64_t s) const;
};

struct DmlResult {
    double theta = 0.0;
    double std_error = 0.0;
    double t_stat = 0.0;
    std::size_t n_obs = 0;

    std::vector<double> fold_thetas;   // per-fold diagnostics (first repeat)
    std::vector<double> repeat_thetas; // one pooled theta per repeat
    double outcome_rmse = 0.0;         // out-of-fold nuisance RMSEs
    double treatment_rmse = 0.0;
    double instrument_rmse = 0.0;
    double first_stage_f = 0.0; // IV only
    bool weak_instrument = false;

    EstimateResult to_estimate_result(const std::string& treatment_name) const;
};

/// Partialling-out DML for Y = theta*D + g(X) + U, E[D|X] = m(X) + V:
/// residualizes Y and D out-of-fold, then theta = sum(VW)/sum(V^2) with the
/// influence-function standard error
///   se = sqrt( mean[(W - theta V)^2 V^2] / mean[V^2]^2 / n ).
/// With n_repeats > 1, the median theta across fold draws is reported and
/// each repeat's se is median-adjusted by its distance from that median.
DmlResult dml_plm(const PanelDataset& ds, const DmlSpec& spec);

/// Partially linear IV: residualizes Y, D, Z on X, then
/// theta = sum(Zr*W)/sum(Zr*V), se from the IV influence function.
/// A residualized first-stage F below 10 flags a weak instrument.
DmlResult dml_plm_iv(const PanelDataset& ds, const DmlSpec& spec);

/// Restricts to one wave, adds province dummies to the controls when a
/// province_id column exists, and delegates to dml_plm (or dml_plm_iv when
/// the spec carries an instrument).
DmlResult per_year_dml(const PanelDataset& ds, const DmlSpec& spec, int year);

} // namespace paneldml
