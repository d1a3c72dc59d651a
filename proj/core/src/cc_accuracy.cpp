#include "rctlab/cc_accuracy.hpp"

#include "rctlab/csv.hpp"
#include "rctlab/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace rctlab {

void AccuracyState::validate() const {
    if (!(alpha_slow > 0.0 && alpha_slow < alpha_fast && alpha_fast < 1.0))
        throw DomainError("update rates must satisfy 0 < alpha_slow < alpha_fast < 1");
    if (!(start_soc < target_soc))
        throw DomainError("accuracy state needs start SOC below target SOC");
    if (!(eta_cc > 0.0 && eta_cc <= cap))
        throw DomainError("eta_cc must lie in (0, cap]");
}

double instantaneous_accuracy(double i_received, double i_commanded, double cap) {
    if (!(i_commanded > 0.0))
        throw NoCommandError("no commanded current");
    return std::clamp(i_received / i_commanded, 0.0, cap);
}

double update_rate(const AccuracyState& state, double current_soc) {
    if (!(state.start_soc < state.target_soc))
        throw DomainError("accuracy state needs start SOC below target SOC");
    if (current_soc < state.start_soc || current_soc > state.target_soc)
        throw DomainError("current SOC outside [start, target]");
    if (current_soc == state.start_soc)
        return state.alpha_slow;
    double exponent = (current_soc - state.target_soc) / (current_soc - state.start_soc);
    return state.alpha_slow + (state.alpha_fast - state.alpha_slow) * std::exp(exponent);
}

AccuracyState step(const AccuracyState& state, double current_soc, double i_received,
                   double i_commanded) {
    double instant = 0.0;
    try {
        instant = instantaneous_accuracy(i_received, i_commanded, state.cap);
    } catch (const NoCommandError&) {
        return state;
    }
    double alpha = update_rate(state, current_soc);
    AccuracyState next = state;
    next.eta_cc = (1.0 - alpha) * state.eta_cc + alpha * instant;
    return next;
}

ChargerTypeTable ChargerTypeTable::parse(std::istream& in, const std::string& source) {
    auto table = csv::parse(in, source, {"charger_type", "historical_eta"});
    ChargerTypeTable out;
    for (const auto& row : table.rows) {
        double eta = table.number(row, 1);
        if (!(eta > 0.0 && eta <= kDefaultAccuracyCap))
            throw ConfigError(source + ":" + std::to_string(row.line) +
                              ": historical_eta outside (0, 1.2]");
        out.set(table.text(row, 0), eta);
    }
    return out;
}

ChargerTypeTable ChargerTypeTable::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path.string());
    return parse(in, path.string());
}

void ChargerTypeTable::set(const std::string& charger_type, double historical_eta) {
    table_[charger_type] = historical_eta;
}

double ChargerTypeTable::historical_eta(const std::string& charger_type) const {
    auto it = table_.find(charger_type);
    return it == table_.end() ? kFallbackHistoricalEta : it->second;
}

} // namespace rctlab
