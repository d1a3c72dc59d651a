#pragma once

#include "rctlab/battery_model.hpp"
#include "rctlab/cc_accuracy.hpp"
#include "rctlab/charge_profile.hpp"
#include "rctlab/cv_resistance.hpp"

#include <functional>

namespace rctlab {

struct EstimatorConfig {
    double soc_step_cv = 0.01;
    double eta_cv = 1.0;
    double baseline_eta_cc = 0.9;
    double baseline_eta_cv = 1.0;
    // Multiply durations by the accuracy instead of dividing the C-rate by
    // it. Kept for comparison with the literal printed formulas.
    bool eta_multiplies = false;

    void validate() const;
};

// Where the charge currently stands, as seen by the estimator.
struct SessionState {
    double soc = 0.0;
    double start_soc = 0.0;
    double target_soc = 1.0;
    double temperature_c = 25.0;
    Stage stage = Stage::CC;
};

using ResistancePredictor = std::function<double(const RbfInput&)>;

ResistancePredictor predictor_for(const RbfModel& model);

struct RctEstimate {
    double total_minutes = 0.0;
    double cc_minutes = 0.0;
    double cv_minutes = 0.0;
    Scenario scenario{ScenarioKind::CcOnly, std::nullopt, std::nullopt};
    double eta_cc_used = 1.0;
    double turning_soc = 1.0;

    // Whole minutes, for display only.
    long display_minutes() const;
};

// Hours to cover the partitioned CC span at the commanded rates scaled by
// the charging accuracy.
double rct_cc(const Partitioning& partitioning, double eta_cc, const EstimatorConfig& config = {});

// Hours to cover a CV span. The span is cut on the absolute soc_step_cv grid
// and every piece is charged at the CV current evaluated at its midpoint.
double rct_cv(const SocSpan& span, const ResistancePredictor& resistance,
              const BatteryParams& battery, const OcvCurve& ocv, double start_soc,
              double temperature_c, const EstimatorConfig& config = {});
double rct_cv(const SocSpan& span, const RbfModel& model, const BatteryParams& battery,
              const OcvCurve& ocv, double start_soc, double temperature_c,
              const EstimatorConfig& config = {});

// Full estimate: locates the CV turning SOC along the commanded profile scaled
// by the current accuracy, classifies the scenario and sums both stages. An
// observed CV stage overrides the prediction and pins the turning SOC to the
// present SOC.
RctEstimate estimate(const SessionState& state, const ChargeProfile& profile,
                     const BatteryParams& battery, const OcvCurve& ocv,
                     const AccuracyState& accuracy, const ResistancePredictor& resistance,
                     const EstimatorConfig& config = {});
RctEstimate estimate(const SessionState& state, const ChargeProfile& profile,
                     const BatteryParams& battery, const OcvCurve& ocv,
                     const AccuracyState& accuracy, const RbfModel& model,
                     const EstimatorConfig& config = {});

// Conventional estimate: delta SOC * capacity over min(charger, command)
// current with a fixed accuracy per stage. Returns minutes.
double estimate_baseline(const SessionState& state, const BatteryParams& battery,
                         double charger_max_current_a, double commanded_current_a,
                         const EstimatorConfig& config = {});

} // namespace rctlab
