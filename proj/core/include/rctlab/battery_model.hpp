#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace rctlab {

// Physical identity of the battery. Currents elsewhere are C-rates in 1/hour,
// so delta_soc / c_rate is a duration in hours.
struct BatteryParams {
    double capacity_ah = 4.8;
    double cutoff_voltage_v = 4.2;
    double cutoff_current_c = 1.0 / 20.0;
    double nominal_temperature_c = 25.0;

    // Throws DomainError when an invariant does not hold.
    void validate() const;

    double amps_from_c_rate(double c_rate) const { return c_rate * capacity_ah; }
    double c_rate_from_amps(double amps) const { return amps / capacity_ah; }
    double cutoff_current_a() const { return cutoff_current_c * capacity_ah; }
};

struct OcvPoint {
    double soc;
    double ocv_v;
};

// Monotone OCV-SOC relation covering [0, 1], interpolated piecewise linearly.
class OcvCurve {
  public:
    // Throws DomainError unless soc is strictly increasing, ocv is
    // non-decreasing, there are at least two points and the knots span 0..1.
    explicit OcvCurve(std::vector<OcvPoint> points);

    const std::vector<OcvPoint>& points() const { return points_; }

    // CSV with header `soc,ocv_v`.
    static OcvCurve load(const std::filesystem::path& path);
    static OcvCurve parse(std::istream& in, const std::string& source = "<stream>");
    void save(std::ostream& out) const;

  private:
    std::vector<OcvPoint> points_;
};

// Synthetic default curve: steep near empty and full, flat mid-range.
const OcvCurve& default_ocv_curve();

struct RintState {
    double soc = 0.0;
    double resistance_ohm = 0.0;
    double temperature_c = 25.0;
};

double ocv_at(const OcvCurve& curve, double soc);

// Rint relation solved for the current in CV: (V_T - OCV) / (R * capacity).
double cv_c_rate(double v_terminal, double ocv, double resistance_ohm, double capacity_ah);

// Rint relation solved for the resistance: (V_T - OCV) / I.
double resistance_from_measurement(double v_terminal, double ocv, double current_a);

} // namespace rctlab
