#include "rctlab/sim_harness.hpp"

#include "rctlab/csv.hpp"
#include "rctlab/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace rctlab {

namespace {

double unit_uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// 64-bit FNV-1a, stable across platforms and runs.
std::string fnv1a_hex(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[h & 0xf];
        h >>= 4;
    }
    return out;
}

} // namespace

void ChargerModel::validate() const {
    if (!(max_current_a > 0.0))
        throw DomainError("charger max current must be positive");
    if (schedule.empty())
        throw DomainError("charger accuracy schedule is empty");
    for (std::size_t i = 0; i < schedule.size(); ++i) {
        if (!(schedule[i].accuracy > 0.0 && schedule[i].accuracy <= 1.2))
            throw DomainError("charger accuracy must lie in (0, 1.2]");
        if (i > 0 && !(schedule[i].time_s > schedule[i - 1].time_s))
            throw DomainError("charger schedule times must be strictly increasing");
    }
    if (noise_amplitude < 0.0 || noise_amplitude >= 1.0)
        throw DomainError("charger noise amplitude must lie in [0, 1)");
    if (aux_load_fraction < 0.0)
        throw DomainError("auxiliary load fraction must be non-negative");
}

double ChargerModel::scheduled_accuracy(double time_s) const {
    double value = schedule.front().accuracy;
    for (const auto& p : schedule) {
        if (p.time_s > time_s)
            break;
        value = p.accuracy;
    }
    return value;
}

void TrueResistanceLaw::validate() const {
    if (!(r_base_ohm > 0.0))
        throw DomainError("base resistance must be positive");
    if (!(temp_coeff > 0.0))
        throw DomainError("temperature coefficient must be positive");
    if (!(end_rise_gain > 0.0 && end_rise_rate > 0.0))
        throw DomainError("end-of-charge rise parameters must be positive");
    if (start_soc_coeff < 0.0)
        throw DomainError("start SOC coefficient must be non-negative");
    if (!(aging_scale >= 1.0))
        throw DomainError("aging scale must be at least 1");
}

double TrueResistanceLaw::resistance(double soc, double start_soc, double temperature_c) const {
    double thermal = 1.0 - temp_coeff * (temperature_c - 25.0);
    if (!(thermal > 0.0))
        throw DomainError("temperature " + std::to_string(temperature_c) +
                          " C is outside the resistance law domain");
    return r_base_ohm * thermal * (1.0 + end_rise_gain * std::exp(end_rise_rate * (soc - 1.0))) *
           (1.0 + start_soc_coeff * start_soc) * aging_scale;
}

double TemperatureSchedule::at(double time_s) const {
    double value = points.front().temperature_c;
    for (const auto& p : points) {
        if (p.time_s > time_s)
            break;
        value = p.temperature_c;
    }
    return value;
}

void SessionTrace::save_csv(std::ostream& out) const {
    csv::write_line(out, {"time_s", "soc", "stage", "i_cmd_a", "i_recv_a", "v_term_v", "temp_c"});
    for (const auto& r : rows)
        csv::write_line(out, {csv::format_number(r.time_s), csv::format_number(r.soc),
                              std::string(to_string(r.stage)), csv::format_number(r.i_cmd_a),
                              csv::format_number(r.i_recv_a), csv::format_number(r.v_term_v),
                              csv::format_number(r.temp_c)});
}

std::string SessionTrace::metadata_json() const {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["start_soc"] = metadata.start_soc;
    j["target_soc"] = metadata.target_soc;
    j["charger_id"] = metadata.charger_id;
    j["battery_id"] = metadata.battery_id;
    j["seed"] = metadata.seed;
    j["ended_at_cutoff"] = metadata.ended_at_cutoff;
    j["config_hash"] = metadata.config_hash;
    return j.dump(2);
}

void SessionTrace::save(const std::filesystem::path& csv_path) const {
    std::ofstream out(csv_path);
    if (!out)
        throw IoError("cannot write " + csv_path.string());
    save_csv(out);
    auto sidecar = csv_path;
    sidecar += ".json";
    std::ofstream meta(sidecar);
    if (!meta)
        throw IoError("cannot write " + sidecar.string());
    meta << metadata_json() << '\n';
    if (!out || !meta)
        throw IoError("failed writing " + csv_path.string());
}

SessionTrace SessionTrace::parse_csv(std::istream& in, const std::string& source) {
    auto table = csv::parse(in, source,
                            {"time_s", "soc", "stage", "i_cmd_a", "i_recv_a", "v_term_v", "temp_c"});
    SessionTrace trace;
    for (const auto& row : table.rows) {
        Stage stage;
        try {
            stage = stage_from_string(table.text(row, 2));
        } catch (const ConfigError& e) {
            throw ConfigError(source + ":" + std::to_string(row.line) + ": " + e.what());
        }
        trace.rows.push_back({table.number(row, 0), table.number(row, 1), stage,
                              table.number(row, 3), table.number(row, 4), table.number(row, 5),
                              table.number(row, 6)});
    }
    if (trace.rows.empty())
        throw ConfigError(source + ": trace has no rows");
    for (std::size_t i = 1; i < trace.rows.size(); ++i)
        if (!(trace.rows[i].time_s > trace.rows[i - 1].time_s))
            throw ConfigError(source + ": time is not strictly increasing at row " +
                              std::to_string(table.rows[i].line));
    trace.metadata.start_soc = trace.rows.front().soc;
    trace.metadata.target_soc = trace.rows.back().soc;
    return trace;
}

SessionTrace SessionTrace::load(const std::filesystem::path& csv_path) {
    std::ifstream in(csv_path);
    if (!in)
        throw IoError("cannot open " + csv_path.string());
    auto trace = parse_csv(in, csv_path.string());
    auto sidecar = csv_path;
    sidecar += ".json";
    std::ifstream meta(sidecar);
    if (meta) {
        try {
            auto j = nlohmann::json::parse(meta);
            trace.metadata.start_soc = j.value("start_soc", trace.metadata.start_soc);
            trace.metadata.target_soc = j.value("target_soc", trace.metadata.target_soc);
            trace.metadata.charger_id = j.value("charger_id", std::string{});
            trace.metadata.battery_id = j.value("battery_id", std::string{});
            trace.metadata.seed = j.value("seed", std::uint64_t{0});
            trace.metadata.ended_at_cutoff = j.value("ended_at_cutoff", false);
            trace.metadata.config_hash = j.value("config_hash", std::string{});
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(sidecar.string() + ": " + e.what());
        }
    }
    return trace;
}

std::string SessionSetup::config_hash() const {
    std::ostringstream s;
    auto num = [&](double v) { s << csv::format_number(v) << ';'; };
    num(battery.capacity_ah);
    num(battery.cutoff_voltage_v);
    num(battery.cutoff_current_c);
    num(battery.nominal_temperature_c);
    for (const auto& p : ocv.points()) {
        num(p.soc);
        num(p.ocv_v);
    }
    for (const auto& st : profile.steps()) {
        num(st.soc_from);
        num(st.soc_to);
        num(st.c_rate);
    }
    s << charger.id << ';';
    num(charger.max_current_a);
    for (const auto& p : charger.schedule) {
        num(p.time_s);
        num(p.accuracy);
    }
    num(charger.noise_amplitude);
    num(charger.aux_load_fraction);
    s << charger.seed << ';';
    num(law.r_base_ohm);
    num(law.temp_coeff);
    num(law.end_rise_gain);
    num(law.end_rise_rate);
    num(law.start_soc_coeff);
    num(law.aging_scale);
    num(start_soc);
    num(target_soc);
    for (const auto& p : temperature.points) {
        num(p.time_s);
        num(p.temperature_c);
    }
    num(dt_s);
    s << battery_id;
    return fnv1a_hex(s.str());
}

SessionTrace simulate_session(const SessionSetup& setup) {
    setup.battery.validate();
    setup.charger.validate();
    setup.law.validate();
    if (!(setup.start_soc < setup.target_soc))
        throw DomainError("session start SOC must be below target SOC");
    if (!setup.profile.covers(setup.start_soc) || !setup.profile.covers(setup.target_soc))
        throw DomainError("session SOC span outside the charge profile");
    if (!(setup.dt_s > 0.0))
        throw DomainError("time step must be positive");
    if (setup.temperature.points.empty())
        throw DomainError("temperature schedule is empty");

    const auto& battery = setup.battery;
    const double cutoff_v = battery.cutoff_voltage_v;
    const double cutoff_a = battery.cutoff_current_a();
    const double amp_hours_per_second = 1.0 / 3600.0;

    SessionTrace trace;
    trace.metadata.start_soc = setup.start_soc;
    trace.metadata.target_soc = setup.target_soc;
    trace.metadata.charger_id = setup.charger.id;
    trace.metadata.battery_id = setup.battery_id;
    trace.metadata.seed = setup.charger.seed;
    trace.metadata.config_hash = setup.config_hash();

    std::mt19937_64 rng(setup.charger.seed);
    Stage stage = Stage::CC;
    double soc = setup.start_soc;
    double t = 0.0;
    for (std::size_t k = 0;; ++k) {
        t = static_cast<double>(k) * setup.dt_s;
        const double temp = setup.temperature.at(t);
        const double r = setup.law.resistance(soc, setup.start_soc, temp);
        const double ocv = ocv_at(setup.ocv, soc);
        double i_cmd = 0.0;
        double i_recv = 0.0;
        double v_term = 0.0;
        const double u = unit_uniform(rng);

        if (stage == Stage::CC) {
            i_cmd = battery.amps_from_c_rate(setup.profile.commanded_c_rate(soc));
            double accuracy = setup.charger.scheduled_accuracy(t) *
                              (1.0 + setup.charger.noise_amplitude * (2.0 * u - 1.0));
            accuracy = std::clamp(accuracy, 1e-6, 1.2);
            i_recv = std::min(i_cmd, setup.charger.max_current_a) * accuracy;
            v_term = ocv + r * i_recv;
            if (v_term >= cutoff_v)
                stage = Stage::CV;
        }
        if (stage == Stage::CV) {
            i_recv = (cutoff_v - ocv) / r;
            if (i_recv <= cutoff_a) {
                trace.metadata.ended_at_cutoff = true;
                break;
            }
            i_cmd = i_recv * (1.0 + setup.charger.aux_load_fraction * u);
            v_term = cutoff_v;
        }
        trace.rows.push_back({t, soc, stage, i_cmd, i_recv, v_term, temp});

        const double dsoc = i_recv * setup.dt_s * amp_hours_per_second / battery.capacity_ah;
        if (soc + dsoc >= setup.target_soc) {
            t += (setup.target_soc - soc) * battery.capacity_ah / (i_recv * amp_hours_per_second);
            soc = setup.target_soc;
            break;
        }
        soc += dsoc;
    }
    if (trace.metadata.ended_at_cutoff && trace.rows.empty())
        throw DomainError("charge current is below cut-off at the start SOC");
    const double temp = setup.temperature.at(t);
    trace.rows.push_back({t, soc, Stage::DONE, 0.0, 0.0, ocv_at(setup.ocv, soc), temp});
    return trace;
}

double true_rct(const SessionTrace& trace, double at_time_s) {
    if (trace.rows.empty())
        throw DomainError("empty trace");
    if (at_time_s < trace.rows.front().time_s || at_time_s > trace.end_time_s())
        throw DomainError("time " + std::to_string(at_time_s) + " s outside the trace");
    return (trace.end_time_s() - at_time_s) / 60.0;
}

double overall_cc_accuracy(const SessionTrace& trace) {
    double received = 0.0;
    double commanded = 0.0;
    for (std::size_t i = 0; i + 1 < trace.rows.size(); ++i) {
        const auto& r = trace.rows[i];
        if (r.stage != Stage::CC)
            continue;
        double dt = trace.rows[i + 1].time_s - r.time_s;
        received += r.i_recv_a * dt;
        commanded += r.i_cmd_a * dt;
    }
    if (commanded <= 0.0)
        throw DomainError("trace has no CC rows");
    return received / commanded;
}

SessionSetup paper_scenario_cc(std::uint64_t seed) {
    SessionSetup s;
    s.profile = default_charge_profile();
    s.start_soc = 0.05;
    s.target_soc = 0.70;
    s.charger.id = "dc-derating";
    s.charger.max_current_a = 12.0;
    s.charger.schedule = {{0.0, 0.763}, {37.0 * 60.0, 0.55}, {41.0 * 60.0, 0.763}};
    s.charger.noise_amplitude = 0.08;
    s.charger.seed = seed;
    s.battery_id = "pack-a";
    return s;
}

SessionSetup paper_scenario_cv(std::uint64_t seed) {
    SessionSetup s;
    s.profile = fast_charge_profile();
    s.start_soc = 0.71;
    s.target_soc = 0.90;
    s.charger.id = "dc-fast";
    s.charger.max_current_a = 12.0;
    s.charger.schedule = {{0.0, 1.0}};
    s.charger.noise_amplitude = 0.0;
    s.charger.aux_load_fraction = 0.15;
    s.charger.seed = seed;
    s.battery_id = "pack-a";
    return s;
}

std::vector<SessionSetup> paper_scenario_aging(std::uint64_t seed) {
    std::vector<SessionSetup> cycles;
    for (std::uint64_t c = 0; c < 3; ++c) {
        auto s = paper_scenario_cv(seed + c);
        s.law.aging_scale = kAgedPackScale;
        s.battery_id = "pack-b";
        cycles.push_back(std::move(s));
    }
    return cycles;
}

std::vector<SessionSetup> training_sessions(std::size_t count, std::uint64_t seed,
                                            double aging_scale) {
    std::vector<SessionSetup> out;
    std::mt19937_64 rng(seed);
    for (std::size_t k = 0; k < count; ++k) {
        double frac = count > 1 ? static_cast<double>(k) / static_cast<double>(count - 1) : 0.5;
        double perm = count > 1 ? static_cast<double>((k * 3) % count) /
                                      static_cast<double>(count - 1)
                                : 0.5;
        SessionSetup s;
        s.profile = fast_charge_profile();
        s.start_soc = 0.05 + 0.70 * frac;
        s.target_soc = 1.0;
        // Cells warm up while charging: +10 C over the first hour in 90 s steps.
        const double t0 = 12.0 + 26.0 * perm + 4.0 * (unit_uniform(rng) - 0.5);
        s.temperature.points.clear();
        for (int j = 0; j <= 40; ++j)
            s.temperature.points.push_back({90.0 * j, t0 + 10.0 * j / 40.0});
        s.charger.id = "dc-fast";
        s.charger.schedule = {{0.0, 0.95}};
        s.charger.noise_amplitude = 0.02;
        s.charger.seed = seed + 1000 + k;
        s.law.aging_scale = aging_scale;
        s.battery_id = "pack-a";
        out.push_back(std::move(s));
    }
    return out;
}

} // namespace rctlab
