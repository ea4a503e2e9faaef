#pragma once

#include "paneldml/dml.hpp"
#include "paneldml/panel.hpp"
#include "paneldml/results.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace paneldml {

/// Parameters of the recursive structural system
///   state_t     = (a + c .* state_{t-1}) * treat_{t-1} + B state_{t-1} + eps_t
///   treat_t     = alpha treat_{t-1} + (1 - alpha) d' state_t + zeta_t
///   outcome     = (sigma' state_m + 1) e treat_m + f' state_m + eta
/// with state_1 standard normal and treat_1 drawn without a lag term.
struct DynamicDGPParams {
    Eigen::VectorXd a;     // treatment -> state
    Eigen::MatrixXd b;     // state transition, spectral radius < 1
    Eigen::VectorXd c;     // elementwise treatment x state interaction
    double alpha = 0.0;    // treatment persistence in [0, 1)
    Eigen::VectorXd d;     // state -> treatment
    double e = 0.0;        // direct treatment effect
    Eigen::VectorXd sigma; // effect heterogeneity
    Eigen::VectorXd f;     // state -> outcome
    double state_noise_sd = 0.0;
    double treatment_noise_sd = 0.0;
    double outcome_noise_sd = 0.0;
    int n_periods = 2; // m >= 2

    Eigen::Index state_dim() const { return a.size(); }
    void validate() const;
    /// True per-period effects are analytic only when c = 0 and sigma = 0.
    bool linear_homogeneous() const;
};

/// Draws n independent household trajectories. Columns: x1..xp per-period
/// state, d treatment, y terminal outcome (replicated to every wave of the
/// household); waves are labelled 1..m. Households are seeded
/// independently, so parallel generation is bit-identical to sequential.
PanelDataset simulate_dynamic_panel(const DynamicDGPParams& params, std::size_t n_households,
                                    std::uint64_t seed);

/// Exact marginal effects psi_t = dY_m / dD_t under c = 0, sigma = 0,
/// unrolled through the treatment-persistence and state channels:
///   u_{q+1} = a s_q + B u_q,  s_{q+1} = alpha s_q + (1-alpha) d' u_{q+1}
/// starting from s_t = 1, u_t = 0, with psi_t = e s_m + f' u_m.
DynamicEffects true_effects(const DynamicDGPParams& params);

/// Dynamic estimation plan; per-period columns are resolved from the
/// panel's waves.
struct DdmlSpec {
    std::string outcome;                // terminal outcome column
    std::string treatment;              // per-period treatment column
    std::vector<std::string> controls;  // per-period state columns
    LearnerSpec outcome_learner = LearnerSpec::default_forest(0);
    LearnerSpec treatment_learner = LearnerSpec::default_forest(0);
    int k_folds = 5;
    std::uint64_t seed = 0;
    /// false: stage t conditions on (X_t, D_{t-1}); true: on the full
    /// history (X_1..X_t, D_1..D_{t-1}).
    bool full_history = false;

    void validate() const;
};

/// Blip-down recursion over the panel's waves: stage m estimates psi_m by
/// dml_plm of Y on D_m given (X_m, D_{m-1}); each earlier stage removes the
/// later effects from the outcome and repeats with its own information set.
/// Stage t uses fold seed spec.seed + (m - t), so a single-wave panel
/// reproduces dml_plm bit for bit. Standard errors are per-stage plug-in
/// (later-stage estimation noise ignored).
DynamicEffects ddml_estimate(const PanelDataset& ds, const DdmlSpec& spec);

} // namespace paneldml
