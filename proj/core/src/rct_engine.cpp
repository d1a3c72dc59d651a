#include "rctlab/rct_engine.hpp"

#include "rctlab/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace rctlab {

namespace {

double apply_accuracy(double hours_at_command, double eta, bool multiplies) {
    return multiplies ? hours_at_command * eta : hours_at_command / eta;
}

} // namespace

void EstimatorConfig::validate() const {
    if (!(soc_step_cv > 0.0 && soc_step_cv <= 0.05))
        throw DomainError("soc_step_cv must lie in (0, 0.05]");
    if (!(eta_cv > 0.0 && baseline_eta_cc > 0.0 && baseline_eta_cv > 0.0))
        throw DomainError("accuracies must be positive");
}

ResistancePredictor predictor_for(const RbfModel& model) {
    return [&model](const RbfInput& x) { return predict_resistance(model, x); };
}

long RctEstimate::display_minutes() const {
    return std::lround(total_minutes);
}

double rct_cc(const Partitioning& partitioning, double eta_cc, const EstimatorConfig& config) {
    if (!(eta_cc > 0.0))
        throw DomainError("eta_cc must be positive");
    double hours = 0.0;
    for (const auto& seg : partitioning.segments)
        hours += seg.delta_soc / seg.c_rate;
    return apply_accuracy(hours, eta_cc, config.eta_multiplies);
}

double rct_cv(const SocSpan& span, const ResistancePredictor& resistance,
              const BatteryParams& battery, const OcvCurve& ocv, double start_soc,
              double temperature_c, const EstimatorConfig& config) {
    if (!(span.from < span.to))
        throw DomainError("CV span is empty or reversed");
    const double step = config.soc_step_cv;
    // Grid points strictly inside the span; pieces thinner than this are
    // merged into their neighbour.
    constexpr double sliver = 1e-9;
    double hours = 0.0;
    double lower = span.from;
    auto k = static_cast<long>(std::floor(span.from / step + sliver)) + 1;
    while (lower < span.to) {
        double grid = static_cast<double>(k) * step;
        double upper = grid < span.to - sliver ? grid : span.to;
        if (upper - lower > sliver || upper == span.to) {
            double mid = 0.5 * (lower + upper);
            double r = resistance({mid, start_soc, temperature_c});
            double ocv_mid = ocv_at(ocv, mid);
            double c_rate = 0.0;
            try {
                c_rate = cv_c_rate(battery.cutoff_voltage_v, ocv_mid, r, battery.capacity_ah);
            } catch (const NegativeCurrentError&) {
                c_rate = 0.0;
            }
            if (!(c_rate > 0.0)) {
                std::ostringstream msg;
                msg << "target unreachable in CV: OCV reaches the cut-off voltage at SOC " << mid;
                throw UnreachableTargetError(msg.str(), mid);
            }
            hours += (upper - lower) / c_rate;
            lower = upper;
        }
        ++k;
    }
    return apply_accuracy(hours, config.eta_cv, config.eta_multiplies);
}

double rct_cv(const SocSpan& span, const RbfModel& model, const BatteryParams& battery,
              const OcvCurve& ocv, double start_soc, double temperature_c,
              const EstimatorConfig& config) {
    return rct_cv(span, predictor_for(model), battery, ocv, start_soc, temperature_c, config);
}

RctEstimate estimate(const SessionState& state, const ChargeProfile& profile,
                     const BatteryParams& battery, const OcvCurve& ocv,
                     const AccuracyState& accuracy, const ResistancePredictor& resistance,
                     const EstimatorConfig& config) {
    if (!(state.soc < state.target_soc))
        throw DomainError("current SOC must be below target SOC");

    RctEstimate out;
    out.eta_cc_used = accuracy.eta_cc;
    if (state.stage == Stage::CC) {
        // The transition happens on the received current, so the profile is
        // scaled by the tracked accuracy before solving for it.
        auto received = profile.scaled(accuracy.eta_cc);
        out.turning_soc = cv_turning_soc(received, battery, ocv, [&](double soc) {
            return resistance({soc, state.start_soc, state.temperature_c});
        });
        out.turning_soc = std::max(out.turning_soc, state.soc);
    } else {
        out.turning_soc = state.soc;
    }

    out.scenario = classify_scenario(state.soc, state.target_soc, out.turning_soc);
    if (out.scenario.cc_span) {
        auto parts = partition_cc(profile, out.scenario.cc_span->from, out.scenario.cc_span->to);
        out.cc_minutes = 60.0 * rct_cc(parts, accuracy.eta_cc, config);
    }
    if (out.scenario.cv_span)
        out.cv_minutes = 60.0 * rct_cv(*out.scenario.cv_span, resistance, battery, ocv,
                                       state.start_soc, state.temperature_c, config);
    out.total_minutes = out.cc_minutes + out.cv_minutes;
    return out;
}

RctEstimate estimate(const SessionState& state, const ChargeProfile& profile,
                     const BatteryParams& battery, const OcvCurve& ocv,
                     const AccuracyState& accuracy, const RbfModel& model,
                     const EstimatorConfig& config) {
    return estimate(state, profile, battery, ocv, accuracy, predictor_for(model), config);
}

double estimate_baseline(const SessionState& state, const BatteryParams& battery,
                         double charger_max_current_a, double commanded_current_a,
                         const EstimatorConfig& config) {
    if (!(charger_max_current_a > 0.0 && commanded_current_a > 0.0))
        throw DomainError("baseline currents must be positive");
    double delta_soc = std::max(state.target_soc - state.soc, 0.0);
    double eta = state.stage == Stage::CV ? config.baseline_eta_cv : config.baseline_eta_cc;
    double hours = delta_soc * battery.capacity_ah / std::min(charger_max_current_a, commanded_current_a);
    return 60.0 * apply_accuracy(hours, eta, config.eta_multiplies);
}

} // namespace rctlab
