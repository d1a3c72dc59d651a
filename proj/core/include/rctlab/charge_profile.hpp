#pragma once

#include "rctlab/battery_model.hpp"

#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rctlab {

struct ProfileStep {
    double soc_from;
    double soc_to;
    double c_rate; // commanded, 1/hour
};

// Designed CC current profile: contiguous steps whose commanded C-rate never
// increases with SOC.
class ChargeProfile {
  public:
    explicit ChargeProfile(std::vector<ProfileStep> steps);

    const std::vector<ProfileStep>& steps() const { return steps_; }
    double soc_min() const { return steps_.front().soc_from; }
    double soc_max() const { return steps_.back().soc_to; }
    bool covers(double soc) const { return soc >= soc_min() && soc <= soc_max(); }

    // Step boundaries are half-open [from, to); soc_max maps to the last step.
    double commanded_c_rate(double soc) const;

    // Same breakpoints with every commanded C-rate multiplied by factor.
    ChargeProfile scaled(double factor) const;

    // CSV with header `soc_from,soc_to,c_rate`.
    static ChargeProfile load(const std::filesystem::path& path);
    static ChargeProfile parse(std::istream& in, const std::string& source = "<stream>");
    void save(std::ostream& out) const;

  private:
    std::vector<ProfileStep> steps_;
};

// Moderate profile used by the CC experiments.
const ChargeProfile& default_charge_profile();
// DC fast-charge profile that enters CV around mid SOC.
const ChargeProfile& fast_charge_profile();

struct Segment {
    double delta_soc;
    double c_rate;
};

struct Partitioning {
    std::vector<Segment> segments;
    std::size_t count() const { return segments.size(); }
};

// Splits [start_soc, end_soc] at profile step boundaries so that the commanded
// current is constant inside every segment.
Partitioning partition_cc(const ChargeProfile& profile, double start_soc, double end_soc);

using ResistanceBySoc = std::function<double(double soc)>;

// Smallest SOC at which OCV + R * commanded current reaches the cut-off
// voltage: 1 % scan from the start of the profile, then bisection to
// kTurningSocTolerance. Returns 1.0 when the cut-off is never reached.
inline constexpr double kTurningSocTolerance = 1e-4;
double cv_turning_soc(const ChargeProfile& profile, const BatteryParams& battery,
                      const OcvCurve& ocv, const ResistanceBySoc& resistance);

enum class Stage { CC, CV, DONE };

std::string_view to_string(Stage stage);
Stage stage_from_string(std::string_view text);

enum class ScenarioKind { CcOnly, CvOnly, CcThenCv };

std::string_view to_string(ScenarioKind kind);

struct SocSpan {
    double from;
    double to;
    double width() const { return to - from; }
};

struct Scenario {
    ScenarioKind kind;
    std::optional<SocSpan> cc_span;
    std::optional<SocSpan> cv_span;
};

// Ties go to the side that avoids a zero-width span: target == turning is
// CC only, current == turning is CV only.
Scenario classify_scenario(double current_soc, double target_soc, double turning_soc);

} // namespace rctlab
