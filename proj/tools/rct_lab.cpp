#include "rctlab/config.hpp"
#include "rctlab/error.hpp"
#include "rctlab/evaluation.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace rctlab;

namespace {

enum Exit : int { kOk = 0, kThresholdFailed = 1, kConfigFailed = 2, kIoFailed = 3 };

struct Common {
    std::string config_file;
    std::string scenario = "cc";
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    bool eta_multiplies = false;
};

void add_common(CLI::App* cmd, Common& c, bool with_out) {
    cmd->add_option("--config", c.config_file, "Experiment INI file")->check(CLI::ExistingFile);
    cmd->add_option("--scenario", c.scenario, "Built-in scenario (ignored with --config)");
    cmd->add_option("--seed", c.seed, "Seed for every random source");
    cmd->add_flag("--eta-multiplies", c.eta_multiplies,
                  "Multiply durations by the accuracy (literal formula mode)");
    if (with_out)
        cmd->add_option("--out", c.out_dir, "Output directory");
}

// Precedence: --seed, then RCT_LAB_SEED, then the config file.
ExperimentConfig resolve(const Common& c) {
    ExperimentConfig config = c.config_file.empty() ? scenario_config(c.scenario)
                                                    : load_experiment_config(c.config_file);
    if (auto env = seed_from_env())
        apply_seed(config, *env);
    if (c.seed)
        apply_seed(config, *c.seed);
    if (c.eta_multiplies)
        config.estimator.eta_multiplies = true;
    return config;
}

fs::path out_dir_or(const Common& c, const std::string& fallback) {
    return c.out_dir.empty() ? fs::path(fallback) : fs::path(c.out_dir);
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
        throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

void print_report(const EvaluationReport& r, std::ostream& out) {
    char line[256];
    out << "scenario " << r.scenario << "  seed " << r.seed << "  ticks " << r.series.size()
        << '\n';
    std::snprintf(line, sizeof line, "  proposed  RMSE %9.4f min  max |err| %9.4f min\n",
                  r.proposed.rmse_minutes, r.proposed.max_abs_error_min);
    out << line;
    std::snprintf(line, sizeof line, "  baseline  RMSE %9.4f min  max |err| %9.4f min\n",
                  r.baseline.rmse_minutes, r.baseline.max_abs_error_min);
    out << line;
    std::snprintf(line, sizeof line, "  improvement %.2f %%\n", r.improvement_percent);
    out << line;
    for (const auto& s : r.sessions) {
        std::snprintf(line, sizeof line,
                      "  session %zu: %.1f min, cc accuracy %.4f, proposed max |err| %.4f, "
                      "baseline max |err| %.4f\n",
                      s.session, s.duration_min, s.overall_cc_accuracy,
                      s.proposed.max_abs_error_min, s.baseline.max_abs_error_min);
        out << line;
    }
    for (const auto& t : r.thresholds) {
        std::snprintf(line, sizeof line, "  [%s] %s: %.6g (limit %.6g)\n",
                      t.passed ? "pass" : "FAIL", t.name.c_str(), t.value, t.limit);
        out << line;
    }
}

int cmd_simulate(const Common& c) {
    auto config = resolve(c);
    auto dir = out_dir_or(c, "traces");
    ensure_dir(dir);
    for (std::size_t i = 0; i < config.sessions.size(); ++i) {
        auto trace = simulate_session(config.sessions[i]);
        auto path = dir / ("session_" + std::to_string(i) + ".csv");
        trace.save(path);
        std::cout << path.string() << ": " << trace.rows.size() << " rows, "
                  << trace.end_time_s() / 60.0 << " min"
                  << (trace.metadata.ended_at_cutoff ? ", ended at cut-off current" : "") << '\n';
    }
    return kOk;
}

struct TrainArgs {
    std::vector<std::string> traces;
    std::optional<std::size_t> n_hidden;
};

int cmd_train(const Common& c, const TrainArgs& t) {
    auto config = resolve(c);
    auto dir = out_dir_or(c, "model");
    ensure_dir(dir);
    auto model_path = dir / "model.json";
    std::size_t n_hidden = t.n_hidden.value_or(config.n_hidden);
    const auto& ocv = config.sessions.front().ocv;

    TrainedModel trained = [&] {
        if (!t.traces.empty()) {
            std::vector<fs::path> files(t.traces.begin(), t.traces.end());
            return train_model(files, ocv, n_hidden, config.training_seed, model_path);
        }
        auto setups = training_sessions(config.training_session_count, config.training_seed,
                                        config.training_aging_scale);
        std::vector<SessionTrace> traces;
        for (const auto& s : setups)
            traces.push_back(simulate_session(s));
        auto result = train_model(traces, ocv, n_hidden, config.training_seed);
        result.model.save(model_path);
        return result;
    }();

    const auto& s = trained.summary;
    std::cout << model_path.string() << ": " << s.samples << " samples, " << s.n_hidden
              << " hidden units" << (s.reduced ? " (reduced to distinct points)" : "") << '\n'
              << "voltage MSE " << s.mse_v2 << " V^2 (RMSE " << s.rmse_mv << " mV), rank "
              << s.rank << ", condition " << s.condition << '\n';
    return kOk;
}

struct EstimateArgs {
    std::string model_file;
    double soc = 0.5;
    double start_soc = 0.5;
    double target_soc = 0.9;
    double temperature_c = 25.0;
    std::string stage = "CC";
    std::optional<double> eta;
    std::string charger_type;
    std::string charger_table;
    std::string profile_file;
    double charger_max_a = 12.0;
    std::optional<double> command_a;
};

int cmd_estimate(const Common& c, const EstimateArgs& e) {
    auto config = resolve(c);
    auto setup = config.sessions.front();
    if (!e.profile_file.empty())
        setup.profile = ChargeProfile::load(e.profile_file);

    double eta = config.initial_eta;
    if (!e.charger_table.empty())
        eta = ChargerTypeTable::load(e.charger_table).historical_eta(e.charger_type);
    else if (!e.charger_type.empty())
        eta = ChargerTypeTable().historical_eta(e.charger_type);
    if (e.eta)
        eta = *e.eta;

    AccuracyState accuracy;
    accuracy.eta_cc = eta;
    accuracy.start_soc = e.start_soc;
    accuracy.target_soc = e.target_soc;
    accuracy.validate();

    Stage stage = stage_from_string(e.stage);
    if (stage == Stage::DONE)
        throw ConfigError("--stage must be CC or CV");
    SessionState state{e.soc, e.start_soc, e.target_soc, e.temperature_c, stage};

    std::optional<RbfModel> model;
    if (!e.model_file.empty())
        model = RbfModel::load(e.model_file);
    else if (config.model_source != ModelSource::TrueLaw)
        model = prepare_model(config);
    ResistancePredictor predictor;
    if (model) {
        predictor = predictor_for(*model);
    } else {
        predictor = [law = setup.law](const RbfInput& x) {
            return law.resistance(x.soc, x.start_soc, x.temperature_c);
        };
    }

    auto est = estimate(state, setup.profile, setup.battery, setup.ocv, accuracy, predictor,
                        config.estimator);
    double command = e.command_a.value_or(
        setup.battery.amps_from_c_rate(setup.profile.commanded_c_rate(e.soc)));
    double base = estimate_baseline(state, setup.battery, e.charger_max_a, command,
                                    config.estimator);

    nlohmann::json j;
    j["scenario"] = std::string(to_string(est.scenario.kind));
    j["turning_soc"] = est.turning_soc;
    j["eta_cc"] = est.eta_cc_used;
    j["cc_minutes"] = est.cc_minutes;
    j["cv_minutes"] = est.cv_minutes;
    j["total_minutes"] = est.total_minutes;
    j["display_minutes"] = est.display_minutes();
    j["baseline_minutes"] = base;
    std::cout << j.dump(2) << '\n';
    return kOk;
}

int cmd_evaluate(const Common& c) {
    auto config = resolve(c);
    auto dir = out_dir_or(c, "out/" + config.name);
    auto report = run_experiment(config, dir);
    print_report(report, std::cout);
    std::cout << "wrote " << (dir / "report.json").string() << " and "
              << (dir / "series.csv").string() << '\n';
    return report.passed() ? kOk : kThresholdFailed;
}

int cmd_report(const std::string& in_dir) {
    fs::path dir(in_dir);
    std::ifstream json_in(dir / "report.json");
    if (!json_in)
        throw IoError("cannot open " + (dir / "report.json").string());
    nlohmann::json j;
    try {
        json_in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError((dir / "report.json").string() + ": " + e.what());
    }
    std::ifstream csv_in(dir / "series.csv");
    if (!csv_in)
        throw IoError("cannot open " + (dir / "series.csv").string());

    EvaluationReport report;
    report.series = EvaluationReport::parse_series_csv(csv_in, (dir / "series.csv").string());
    if (report.series.empty())
        throw ConfigError((dir / "series.csv").string() + ": no rows");
    std::size_t sessions = report.series.back().session + 1;
    for (std::size_t i = 0; i < sessions; ++i)
        report.sessions.push_back({i, 0, 0.0, 0.0, false, {}, {}});
    summarize(report);
    report.scenario = j.value("scenario", std::string("?"));
    report.seed = j.value("seed", std::uint64_t{0});
    report.tick_s = j.value("tick_s", 10.0);
    for (const auto& t : j.value("thresholds", nlohmann::json::array()))
        report.thresholds.push_back({t.at("name"), t.at("passed"), t.at("value"), t.at("limit")});

    print_report(report, std::cout);
    double stored = j.at("proposed").at("rmse_minutes").get<double>();
    if (stored != report.proposed.rmse_minutes) {
        std::cout << "  series and report.json disagree on the proposed RMSE\n";
        return kThresholdFailed;
    }
    return report.passed() ? kOk : kThresholdFailed;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Remaining charging time lab: simulate, train, estimate and evaluate"};
    app.require_subcommand(1);

    Common common;
    TrainArgs train_args;
    EstimateArgs est_args;
    std::string report_dir;

    auto* simulate = app.add_subcommand("simulate", "Simulate the sessions of an experiment");
    add_common(simulate, common, true);

    auto* train = app.add_subcommand("train", "Fit the resistance network offline");
    add_common(train, common, true);
    train->add_option("--traces", train_args.traces, "Trace CSVs (default: simulate them)")
        ->check(CLI::ExistingFile);
    train->add_option("--n-hidden", train_args.n_hidden, "Hidden units");

    auto* est = app.add_subcommand("estimate", "One estimate from a session state");
    add_common(est, common, false);
    est->add_option("--model", est_args.model_file, "Model JSON")->check(CLI::ExistingFile);
    est->add_option("--soc", est_args.soc, "Present SOC");
    est->add_option("--start-soc", est_args.start_soc, "SOC at plug-in");
    est->add_option("--target-soc", est_args.target_soc, "Target SOC");
    est->add_option("--temp", est_args.temperature_c, "Cell temperature in C");
    est->add_option("--stage", est_args.stage, "CC or CV");
    est->add_option("--eta", est_args.eta, "Charging accuracy");
    est->add_option("--charger-type", est_args.charger_type, "Charger type for the initial accuracy");
    est->add_option("--charger-table", est_args.charger_table, "charger_type,historical_eta CSV")
        ->check(CLI::ExistingFile);
    est->add_option("--profile", est_args.profile_file, "Charge profile CSV")
        ->check(CLI::ExistingFile);
    est->add_option("--charger-max", est_args.charger_max_a, "Charger maximum current in A");
    est->add_option("--command", est_args.command_a, "Commanded current in A for the baseline");

    auto* evaluate = app.add_subcommand("evaluate", "Run an experiment and score both methods");
    add_common(evaluate, common, true);

    auto* report = app.add_subcommand("report", "Summarize a finished evaluation directory");
    report->add_option("--in", report_dir, "Directory holding report.json and series.csv")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kOk : kConfigFailed;
    }

    try {
        if (*simulate)
            return cmd_simulate(common);
        if (*train)
            return cmd_train(common, train_args);
        if (*est)
            return cmd_estimate(common, est_args);
        if (*evaluate)
            return cmd_evaluate(common);
        if (*report)
            return cmd_report(report_dir);
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kIoFailed;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kConfigFailed;
    }
    return kOk;
}
