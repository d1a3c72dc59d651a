#include "rctlab/config.hpp"

#include "rctlab/error.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace rctlab {

namespace pt = boost::property_tree;

namespace {

// property_tree drops line numbers, so keep the raw text to point errors at
// the offending key.
class Locator {
  public:
    Locator(std::string source, const std::string& text) : source_(std::move(source)) {
        std::istringstream in(text);
        std::string line;
        std::string section;
        std::size_t n = 0;
        while (std::getline(in, line)) {
            ++n;
            auto first = line.find_first_not_of(" \t");
            if (first == std::string::npos || line[first] == ';' || line[first] == '#')
                continue;
            if (line[first] == '[') {
                auto close = line.find(']', first);
                section = line.substr(first + 1, close == std::string::npos ? std::string::npos
                                                                            : close - first - 1);
                lines_.emplace(section, n);
                continue;
            }
            auto eq = line.find('=');
            auto key = trim(line.substr(0, eq));
            lines_.emplace(section + "." + key, n);
        }
    }

    bool has(const std::string& path) const { return lines_.count(path) > 0; }

    std::string at(const std::string& path) const {
        auto it = lines_.find(path);
        return it == lines_.end() ? source_ : source_ + ":" + std::to_string(it->second);
    }

  private:
    static std::string trim(std::string s) {
        auto b = s.find_first_not_of(" \t");
        auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    }

    std::string source_;
    std::map<std::string, std::size_t> lines_;
};

struct Reader {
    const pt::ptree& tree;
    const Locator& where;
    std::filesystem::path base_dir;

    std::string text(const std::string& path) const { return tree.get<std::string>(path); }

    double number(const std::string& path) const {
        auto s = text(path);
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
            throw ConfigError(where.at(path) + ": " + path + " = '" + s + "' is not a number");
        return v;
    }

    std::uint64_t count(const std::string& path) const {
        auto s = text(path);
        std::uint64_t v = 0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
            throw ConfigError(where.at(path) + ": " + path + " = '" + s +
                              "' is not a non-negative integer");
        return v;
    }

    bool flag(const std::string& path) const {
        auto s = text(path);
        if (s == "true" || s == "1" || s == "yes" || s == "on")
            return true;
        if (s == "false" || s == "0" || s == "no" || s == "off")
            return false;
        throw ConfigError(where.at(path) + ": " + path + " = '" + s + "' is not a boolean");
    }

    std::filesystem::path file(const std::string& path) const {
        std::filesystem::path p = text(path);
        return p.is_relative() ? base_dir / p : p;
    }
};

using Setter = std::function<void(ExperimentConfig&, const Reader&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"experiment.scenario", [](ExperimentConfig&, const Reader&, const std::string&) {}},
        {"experiment.name",
         [](ExperimentConfig& c, const Reader& r, const std::string& k) { c.name = r.text(k); }},
        {"experiment.seed",
         [](ExperimentConfig& c, const Reader& r, const std::string& k) {
             apply_seed(c, r.count(k));
         }},
        {"experiment.tick_s",
         [](ExperimentConfig& c, const Reader& r, const std::string& k) { c.tick_s = r.number(k); }},
        {"experiment.initial_eta",
         [](ExperimentConfig& c, const Reader& r, const std::string& k) {
             c.initial_eta = r.number(k);
         }},
        {"experiment.alpha_slow",
         [](ExperimentConfig& c, const Reader& r, const std::string& k) {
             c.alpha_slow = r.number(k);
         }},
        {"experiment.alpha_fast",
         [](ExperimentConfig& c, const Reader& r, const std::string& k) {
             c.alpha_fast = r.number(k);
         }},
        {"experiment.accuracy_cap",
         [](ExperimentConfig& c, const Reader& r, const std::string& k) {
             c.accuracy_cap = r.number(k);
         }},
        {"estimator.soc_step_cv",
         [](ExperimentConfig& c, const Reader& r, const std::string& k) {
             c.estimator.soc_step_cv = r.number(k);
         }},
        {"estimator.eta_cv",
         [](ExperimentConfig& c, const Reader& r, const std::string& k) {
             c.estimator.eta_cv = r.number(k);
         }},
        {"estimator.baseline_eta_cc",
         [](ExperimentConfig& c, const Reader& r, const std::string& k) {
             c.estimator.baseline_eta_cc = r.number(k);
         }},
        {"estimator.baseline_eta_cv",
         [](ExperimentConfig& c, const Reader& r, const std::string& k) {
             c.estimator.baseline_eta_cv = r.number(k);
         }},
        {"estimator.eta_multiplies",
         [](ExperimentConfig& c, const Reader& r, const std::string& k) {
             c.estimator.eta_multiplies = r.flag(k);
         }},
        {"model.source",
         [](ExperimentConfig& c, const Reader& r, const std::string& k) {
             try {
                 c.model_source = model_source_from_string(r.text(k));
             } catch (const ConfigError& e) {
                 throw ConfigError(r.where.at(k) + ": " + e.what());
             }
         }},
        {"model.file",
         [](ExperimentConfig& c, const Reader& r, const std::string& k) {
             c.model_file = r.file(k);
         }},
        {"model.n_hidden",
         [](ExperimentConfig& c, const Reader& r, const std::string& k) {
             c.n_hidden = r.count(k);
         }},
        {"model.training_sessions",
         [](ExperimentConfig& c, const Reader& r, const std::string& k) {
             c.training_session_count = r.count(k);
         }},
        {"model.training_seed",
         [](ExperimentConfig& c, const Reader& r, const std::string& k) {
             c.training_seed = r.count(k);
         }},
        {"model.training_aging_scale",
         [](ExperimentConfig& c, const Reader& r, const std::string& k) {
             c.training_aging_scale = r.number(k);
         }},
        {"online.enabled",
         [](ExperimentConfig& c, const Reader& r, const std::string& k) {
             c.online_updates = r.flag(k);
         }},
        {"online.learning_rate",
         [](ExperimentConfig& c, const Reader& r, const std::string& k) {
             c.online.learning_rate = r.number(k);
         }},
        {"online.epochs",
         [](ExperimentConfig& c, const Reader& r, const std::string& k) {
             c.online.epochs = r.count(k);
         }},
        {"online.tau",
         [](ExperimentConfig& c, const Reader& r, const std::string& k) {
             c.online.tau = r.number(k);
         }},
        {"online.divergence_patience",
         [](ExperimentConfig& c, const Reader& r, const std::string& k) {
             c.online.divergence_patience = r.count(k);
         }},
        {"online.discard_threshold",
         [](ExperimentConfig& c, const Reader& r, const std::string& k) {
             c.discard_threshold = r.count(k);
         }},
        {"session.start_soc",
         [](ExperimentConfig& c, const Reader& r, const std::string& k) {
             for (auto& s : c.sessions)
                 s.start_soc = r.number(k);
         }},
        {"session.target_soc",
         [](ExperimentConfig& c, const Reader& r, const std::string& k) {
             for (auto& s : c.sessions)
                 s.target_soc = r.number(k);
         }},
        {"session.profile_file",
         [](ExperimentConfig& c, const Reader& r, const std::string& k) {
             auto profile = ChargeProfile::load(r.file(k));
             for (auto& s : c.sessions)
                 s.profile = profile;
         }},
        {"session.ocv_file",
         [](ExperimentConfig& c, const Reader& r, const std::string& k) {
             auto ocv = OcvCurve::load(r.file(k));
             for (auto& s : c.sessions)
                 s.ocv = ocv;
         }},
        {"session.aging_scale",
         [](ExperimentConfig& c, const Reader& r, const std::string& k) {
             for (auto& s : c.sessions)
                 s.law.aging_scale = r.number(k);
         }},
        {"session.noise_amplitude",
         [](ExperimentConfig& c, const Reader& r, const std::string& k) {
             for (auto& s : c.sessions)
                 s.charger.noise_amplitude = r.number(k);
         }},
        {"thresholds.min_improvement_percent",
         [](ExperimentConfig& c, const Reader& r, const std::string& k) {
             c.thresholds.min_improvement_percent = r.number(k);
         }},
        {"thresholds.min_baseline_underestimate_share",
         [](ExperimentConfig& c, const Reader& r, const std::string& k) {
             c.thresholds.min_baseline_underestimate_share = r.number(k);
         }},
        {"thresholds.max_late_error_ratio",
         [](ExperimentConfig& c, const Reader& r, const std::string& k) {
             c.thresholds.max_late_error_ratio = r.number(k);
         }},
        {"thresholds.final_tick_within_one_tick",
         [](ExperimentConfig& c, const Reader& r, const std::string& k) {
             c.thresholds.final_tick_within_one_tick = r.flag(k);
         }},
        {"thresholds.max_error_strictly_decreasing",
         [](ExperimentConfig& c, const Reader& r, const std::string& k) {
             c.thresholds.max_error_strictly_decreasing = r.flag(k);
         }},
        {"thresholds.rmse_below_partition",
         [](ExperimentConfig& c, const Reader& r, const std::string& k) {
             c.thresholds.rmse_below_partition = r.flag(k);
         }},
    };
    return table;
}

} // namespace

ExperimentConfig parse_experiment_config(std::istream& in, const std::string& source,
                                         const std::filesystem::path& base_dir) {
    std::ostringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();
    Locator where(source, text);

    pt::ptree tree;
    try {
        std::istringstream parse_in(text);
        pt::read_ini(parse_in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(source + ":" + std::to_string(e.line()) + ": " + e.message());
    }

    const auto& table = setters();
    std::vector<std::string> keys;
    for (const auto& [section, body] : tree) {
        if (body.empty() && where.has("." + section))
            throw ConfigError(where.at("." + section) + ": key '" + section +
                              "' outside any section");
        for (const auto& [key, value] : body) {
            auto path = section + "." + key;
            if (!table.count(path))
                throw ConfigError(where.at(path) + ": unknown key '" + key + "' in [" + section +
                                  "]");
            keys.push_back(path);
        }
    }

    std::string scenario = tree.get<std::string>("experiment.scenario", "cc");
    ExperimentConfig config;
    try {
        config = scenario_config(scenario);
    } catch (const ConfigError& e) {
        throw ConfigError(where.at("experiment.scenario") + ": " + e.what());
    }

    Reader reader{tree, where, base_dir};
    // Seed first so explicit training_seed and friends can override it.
    if (tree.get_optional<std::string>("experiment.seed"))
        table.at("experiment.seed")(config, reader, "experiment.seed");
    for (const auto& path : keys) {
        if (path == "experiment.seed")
            continue;
        try {
            table.at(path)(config, reader, path);
        } catch (const DomainError& e) {
            throw ConfigError(where.at(path) + ": " + e.what());
        }
    }

    try {
        config.estimator.validate();
        AccuracyState probe;
        probe.eta_cc = config.initial_eta;
        probe.alpha_slow = config.alpha_slow;
        probe.alpha_fast = config.alpha_fast;
        probe.cap = config.accuracy_cap;
        probe.validate();
        for (const auto& s : config.sessions) {
            s.battery.validate();
            s.charger.validate();
            s.law.validate();
            if (!(s.start_soc < s.target_soc))
                throw DomainError("start_soc must be below target_soc");
            if (!s.profile.covers(s.start_soc) || !s.profile.covers(s.target_soc))
                throw DomainError("session SOC span outside the charge profile");
        }
    } catch (const DomainError& e) {
        throw ConfigError(source + ": " + e.what());
    }
    if (!(config.tick_s > 0.0))
        throw ConfigError(where.at("experiment.tick_s") + ": tick_s must be positive");
    if (config.model_source == ModelSource::File && config.model_file.empty())
        throw ConfigError(source + ": model.source = file needs model.file");
    return config;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path.string());
    return parse_experiment_config(in, path.string(), path.parent_path());
}

std::optional<std::uint64_t> seed_from_env() {
    const char* raw = std::getenv(kSeedEnvVar);
    if (!raw || !*raw)
        return std::nullopt;
    std::string s(raw);
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw ConfigError(std::string(kSeedEnvVar) + " = '" + s + "' is not an unsigned integer");
    return v;
}

} // namespace rctlab
