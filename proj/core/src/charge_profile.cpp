#include "rctlab/charge_profile.hpp"

#include "rctlab/csv.hpp"
#include "rctlab/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>

namespace rctlab {

ChargeProfile::ChargeProfile(std::vector<ProfileStep> steps) : steps_(std::move(steps)) {
    if (steps_.empty())
        throw DomainError("charge profile has no steps");
    for (std::size_t i = 0; i < steps_.size(); ++i) {
        const auto& s = steps_[i];
        if (!(s.soc_from < s.soc_to))
            throw DomainError("charge profile step " + std::to_string(i) + " is empty or reversed");
        if (s.soc_from < 0.0 || s.soc_to > 1.0)
            throw DomainError("charge profile step " + std::to_string(i) + " leaves [0, 1]");
        if (!(s.c_rate > 0.0))
            throw DomainError("charge profile step " + std::to_string(i) +
                              " has a non-positive C-rate");
        if (i > 0) {
            if (steps_[i - 1].soc_to != s.soc_from)
                throw DomainError("charge profile steps " + std::to_string(i - 1) + " and " +
                                  std::to_string(i) + " are not contiguous");
            if (s.c_rate > steps_[i - 1].c_rate)
                throw DomainError("charge profile C-rate increases at step " + std::to_string(i));
        }
    }
}

double ChargeProfile::commanded_c_rate(double soc) const {
    if (!covers(soc))
        throw DomainError("SOC " + std::to_string(soc) + " outside charge profile coverage");
    for (const auto& s : steps_)
        if (soc < s.soc_to)
            return s.c_rate;
    return steps_.back().c_rate;
}

ChargeProfile ChargeProfile::scaled(double factor) const {
    if (!(factor > 0.0))
        throw DomainError("profile scale factor must be positive");
    auto steps = steps_;
    for (auto& s : steps)
        s.c_rate *= factor;
    return ChargeProfile(std::move(steps));
}

ChargeProfile ChargeProfile::parse(std::istream& in, const std::string& source) {
    auto table = csv::parse(in, source, {"soc_from", "soc_to", "c_rate"});
    std::vector<ProfileStep> steps;
    for (const auto& row : table.rows)
        steps.push_back({table.number(row, 0), table.number(row, 1), table.number(row, 2)});
    try {
        return ChargeProfile(std::move(steps));
    } catch (const DomainError& e) {
        throw ConfigError(source + ": " + e.what());
    }
}

ChargeProfile ChargeProfile::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path.string());
    return parse(in, path.string());
}

void ChargeProfile::save(std::ostream& out) const {
    csv::write_line(out, {"soc_from", "soc_to", "c_rate"});
    for (const auto& s : steps_)
        csv::write_line(out, {csv::format_number(s.soc_from), csv::format_number(s.soc_to),
                              csv::format_number(s.c_rate)});
}

const ChargeProfile& default_charge_profile() {
    static const ChargeProfile profile({
        {0.00, 0.35, 1.2},
        {0.35, 0.60, 0.9},
        {0.60, 0.80, 0.6},
        {0.80, 1.00, 0.3},
    });
    return profile;
}

const ChargeProfile& fast_charge_profile() {
    static const ChargeProfile profile({
        {0.00, 0.50, 2.0},
        {0.50, 0.70, 1.6},
        {0.70, 1.00, 1.2},
    });
    return profile;
}

Partitioning partition_cc(const ChargeProfile& profile, double start_soc, double end_soc) {
    if (!(start_soc < end_soc))
        throw DomainError("CC span is empty or reversed");
    if (!profile.covers(start_soc) || !profile.covers(end_soc))
        throw DomainError("CC span outside charge profile coverage");
    Partitioning out;
    double lower = start_soc;
    for (const auto& s : profile.steps()) {
        if (s.soc_to <= lower)
            continue;
        double upper = std::min(s.soc_to, end_soc);
        out.segments.push_back({upper - lower, s.c_rate});
        lower = upper;
        if (upper >= end_soc)
            break;
    }
    return out;
}

double cv_turning_soc(const ChargeProfile& profile, const BatteryParams& battery,
                      const OcvCurve& ocv, const ResistanceBySoc& resistance) {
    auto reached = [&](double soc) {
        double amps = battery.amps_from_c_rate(profile.commanded_c_rate(soc));
        return ocv_at(ocv, soc) + resistance(soc) * amps >= battery.cutoff_voltage_v;
    };

    const double lo = profile.soc_min();
    const double hi = profile.soc_max();
    constexpr double scan_step = 0.01;
    if (reached(lo))
        return lo;

    double prev = lo;
    for (int k = 1;; ++k) {
        double soc = std::min(lo + k * scan_step, hi);
        if (reached(soc)) {
            double a = prev;
            double b = soc;
            while (b - a > kTurningSocTolerance) {
                double mid = 0.5 * (a + b);
                if (reached(mid))
                    b = mid;
                else
                    a = mid;
            }
            return b;
        }
        if (soc >= hi)
            break;
        prev = soc;
    }
    return 1.0;
}

std::string_view to_string(Stage stage) {
    switch (stage) {
    case Stage::CC:
        return "CC";
    case Stage::CV:
        return "CV";
    case Stage::DONE:
        return "DONE";
    }
    return "?";
}

Stage stage_from_string(std::string_view text) {
    if (text == "CC")
        return Stage::CC;
    if (text == "CV")
        return Stage::CV;
    if (text == "DONE")
        return Stage::DONE;
    throw ConfigError("unknown stage '" + std::string(text) + "'");
}

std::string_view to_string(ScenarioKind kind) {
    switch (kind) {
    case ScenarioKind::CcOnly:
        return "CC_ONLY";
    case ScenarioKind::CvOnly:
        return "CV_ONLY";
    case ScenarioKind::CcThenCv:
        return "CC_THEN_CV";
    }
    return "?";
}

Scenario classify_scenario(double current_soc, double target_soc, double turning_soc) {
    if (!(current_soc < target_soc))
        throw DomainError("current SOC must be below target SOC");
    if (target_soc <= turning_soc)
        return {ScenarioKind::CcOnly, SocSpan{current_soc, target_soc}, std::nullopt};
    if (current_soc >= turning_soc)
        return {ScenarioKind::CvOnly, std::nullopt, SocSpan{current_soc, target_soc}};
    return {ScenarioKind::CcThenCv, SocSpan{current_soc, turning_soc},
            SocSpan{turning_soc, target_soc}};
}

} // namespace rctlab
