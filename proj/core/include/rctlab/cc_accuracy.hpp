#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

namespace rctlab {

inline constexpr double kDefaultAlphaSlow = 0.01;
inline constexpr double kDefaultAlphaFast = 0.2;
inline constexpr double kDefaultAccuracyCap = 1.2;
inline constexpr double kFallbackHistoricalEta = 0.9;

// Online estimate of the CC charging accuracy (received / commanded current).
struct AccuracyState {
    double eta_cc = kFallbackHistoricalEta;
    double alpha_slow = kDefaultAlphaSlow;
    double alpha_fast = kDefaultAlphaFast;
    double start_soc = 0.0;
    double target_soc = 1.0;
    double cap = kDefaultAccuracyCap;

    void validate() const;
};

// Received over commanded current, clamped to [0, cap]. Throws NoCommandError
// when nothing is commanded.
double instantaneous_accuracy(double i_received, double i_commanded,
                              double cap = kDefaultAccuracyCap);

// EMA rate that slides from alpha_slow at the start SOC to alpha_fast at the
// target SOC. At current_soc == start_soc the exponent diverges to -inf and
// the rate is alpha_slow exactly.
double update_rate(const AccuracyState& state, double current_soc);

// One EMA step. Samples without a positive command leave the state unchanged.
AccuracyState step(const AccuracyState& state, double current_soc, double i_received,
                   double i_commanded);

// Historical accuracy per charger type, CSV `charger_type,historical_eta`.
class ChargerTypeTable {
  public:
    ChargerTypeTable() = default;

    static ChargerTypeTable load(const std::filesystem::path& path);
    static ChargerTypeTable parse(std::istream& in, const std::string& source = "<stream>");

    void set(const std::string& charger_type, double historical_eta);
    // Unknown types fall back to kFallbackHistoricalEta.
    double historical_eta(const std::string& charger_type) const;
    bool contains(const std::string& charger_type) const { return table_.count(charger_type) > 0; }

  private:
    std::map<std::string, double> table_;
};

} // namespace rctlab
