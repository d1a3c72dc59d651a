#include "rctlab/battery_model.hpp"

#include "rctlab/csv.hpp"
#include "rctlab/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>

namespace rctlab {

void BatteryParams::validate() const {
    if (!(capacity_ah > 0.0))
        throw DomainError("battery capacity must be positive");
    if (!(cutoff_voltage_v > 0.0))
        throw DomainError("cut-off voltage must be positive");
    if (!(cutoff_current_c > 0.0 && cutoff_current_c < 1.0))
        throw DomainError("cut-off current must lie in (0, 1) C");
}

OcvCurve::OcvCurve(std::vector<OcvPoint> points) : points_(std::move(points)) {
    if (points_.size() < 2)
        throw DomainError("OCV curve needs at least two points");
    if (points_.front().soc != 0.0 || points_.back().soc != 1.0)
        throw DomainError("OCV curve must cover SOC 0 through 1");
    for (std::size_t i = 1; i < points_.size(); ++i) {
        if (!(points_[i].soc > points_[i - 1].soc))
            throw DomainError("OCV curve SOC knots must be strictly increasing");
        if (points_[i].ocv_v < points_[i - 1].ocv_v)
            throw DomainError("OCV curve voltages must be non-decreasing");
    }
}

OcvCurve OcvCurve::parse(std::istream& in, const std::string& source) {
    auto table = csv::parse(in, source, {"soc", "ocv_v"});
    std::vector<OcvPoint> points;
    points.reserve(table.rows.size());
    for (const auto& row : table.rows)
        points.push_back({table.number(row, 0), table.number(row, 1)});
    try {
        return OcvCurve(std::move(points));
    } catch (const DomainError& e) {
        throw ConfigError(source + ": " + e.what());
    }
}

OcvCurve OcvCurve::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path.string());
    return parse(in, path.string());
}

void OcvCurve::save(std::ostream& out) const {
    csv::write_line(out, {"soc", "ocv_v"});
    for (const auto& p : points_)
        csv::write_line(out, {csv::format_number(p.soc), csv::format_number(p.ocv_v)});
}

const OcvCurve& default_ocv_curve() {
    static const OcvCurve curve({
        {0.00, 3.000},
        {0.05, 3.400},
        {0.10, 3.520},
        {0.20, 3.600},
        {0.30, 3.660},
        {0.40, 3.730},
        {0.50, 3.810},
        {0.60, 3.890},
        {0.70, 3.970},
        {0.80, 4.030},
        {0.90, 4.080},
        {0.95, 4.120},
        {1.00, 4.180},
    });
    return curve;
}

double ocv_at(const OcvCurve& curve, double soc) {
    if (!(soc >= 0.0 && soc <= 1.0))
        throw DomainError("SOC " + std::to_string(soc) + " outside [0, 1]");
    const auto& pts = curve.points();
    auto hi = std::lower_bound(pts.begin(), pts.end(), soc,
                               [](const OcvPoint& p, double s) { return p.soc < s; });
    if (hi == pts.begin())
        return hi->ocv_v;
    if (hi == pts.end())
        return pts.back().ocv_v;
    if (hi->soc == soc)
        return hi->ocv_v;
    auto lo = hi - 1;
    double t = (soc - lo->soc) / (hi->soc - lo->soc);
    return lo->ocv_v + t * (hi->ocv_v - lo->ocv_v);
}

double cv_c_rate(double v_terminal, double ocv, double resistance_ohm, double capacity_ah) {
    if (!(resistance_ohm > 0.0))
        throw DomainError("resistance must be positive");
    if (!(capacity_ah > 0.0))
        throw DomainError("capacity must be positive");
    if (v_terminal < ocv)
        throw NegativeCurrentError("terminal voltage below OCV: CV model invalid");
    return (v_terminal - ocv) / (resistance_ohm * capacity_ah);
}

double resistance_from_measurement(double v_terminal, double ocv, double current_a) {
    if (current_a == 0.0)
        throw UnmeasurableResistanceError("resistance is unmeasurable at zero current");
    return (v_terminal - ocv) / current_a;
}

} // namespace rctlab
