#pragma once

#include "rctlab/battery_model.hpp"
#include "rctlab/charge_profile.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace rctlab {

struct AccuracyBreakpoint {
    double time_s;
    double accuracy;
};

// Charger that delivers accuracy(t) * min(commanded, max) in CC. In CV the
// battery takes whatever the voltage limit allows and the command carries an
// extra auxiliary load on top.
struct ChargerModel {
    std::string id = "sim-charger";
    double max_current_a = 12.0;
    std::vector<AccuracyBreakpoint> schedule{{0.0, 1.0}};
    double noise_amplitude = 0.0;     // uniform multiplicative, +/- amplitude
    double aux_load_fraction = 0.0;   // CV command = received * (1 + fraction * U[0,1))
    std::uint64_t seed = 1;

    void validate() const;
    // Piecewise-constant schedule value in force at time t.
    double scheduled_accuracy(double time_s) const;
};

// Synthetic ground-truth resistance:
// r_base * (1 - temp_coeff (T - 25)) * (1 + gain e^{rate (soc - 1)})
//        * (1 + start_soc_coeff * start_soc) * aging_scale
struct TrueResistanceLaw {
    double r_base_ohm = 0.05;
    double temp_coeff = 0.01;
    double end_rise_gain = 5.0;
    double end_rise_rate = 20.0;
    double start_soc_coeff = 0.1;
    double aging_scale = 1.0;

    void validate() const;
    double resistance(double soc, double start_soc, double temperature_c) const;
};

struct TemperatureBreakpoint {
    double time_s;
    double temperature_c;
};

struct TemperatureSchedule {
    std::vector<TemperatureBreakpoint> points{{0.0, 25.0}};

    static TemperatureSchedule constant(double temperature_c) { return {{{0.0, temperature_c}}}; }
    double at(double time_s) const;
};

struct TraceRow {
    double time_s;
    double soc;
    Stage stage;
    double i_cmd_a;
    double i_recv_a;
    double v_term_v;
    double temp_c;
};

struct TraceMetadata {
    double start_soc = 0.0;
    double target_soc = 0.0;
    std::string charger_id;
    std::string battery_id;
    std::uint64_t seed = 0;
    bool ended_at_cutoff = false; // cut-off current reached before the target
    std::string config_hash;
};

// One simulated charging session. The last row is always the DONE row at the
// session end time.
struct SessionTrace {
    std::vector<TraceRow> rows;
    TraceMetadata metadata;

    double end_time_s() const { return rows.back().time_s; }

    // CSV `time_s,soc,stage,i_cmd_a,i_recv_a,v_term_v,temp_c`.
    void save_csv(std::ostream& out) const;
    // Sidecar JSON with the metadata.
    std::string metadata_json() const;
    void save(const std::filesystem::path& csv_path) const; // writes <csv>.json next to it
    static SessionTrace parse_csv(std::istream& in, const std::string& source = "<stream>");
    static SessionTrace load(const std::filesystem::path& csv_path);
};

struct SessionSetup {
    BatteryParams battery;
    OcvCurve ocv = default_ocv_curve();
    ChargeProfile profile = default_charge_profile();
    ChargerModel charger;
    TrueResistanceLaw law;
    double start_soc = 0.1;
    double target_soc = 0.9;
    TemperatureSchedule temperature;
    double dt_s = 1.0;
    std::string battery_id = "sim-cell";

    // Stable digest of every parameter, recorded in trace metadata.
    std::string config_hash() const;
};

// Euler integration of SOC with dt_s steps; the final step is shortened so
// the trace ends exactly on the target SOC.
SessionTrace simulate_session(const SessionSetup& setup);

// Minutes from at_time_s until the end of the trace.
double true_rct(const SessionTrace& trace, double at_time_s);

// Received-over-commanded charge over the CC rows of a trace.
double overall_cc_accuracy(const SessionTrace& trace);

// 5 % -> 70 % on the default profile with a derating charger whose overall
// accuracy is 0.748, including a brief dip that ends at 41 minutes.
SessionSetup paper_scenario_cc(std::uint64_t seed = 7);
// 71 % -> 90 % entirely in CV on the fast-charge profile.
SessionSetup paper_scenario_cv(std::uint64_t seed = 11);
// Three consecutive CV sessions of a pack whose resistance is 15 % above the
// pack the model was trained on.
std::vector<SessionSetup> paper_scenario_aging(std::uint64_t seed = 13);
// Sessions across start SOC and temperature used to train the offline model.
std::vector<SessionSetup> training_sessions(std::size_t count, std::uint64_t seed,
                                            double aging_scale = 1.0);

inline constexpr double kCcScenarioAccuracy = 0.748;
inline constexpr double kAgedPackScale = 1.15;

} // namespace rctlab
