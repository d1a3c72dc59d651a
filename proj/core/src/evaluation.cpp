#include "rctlab/evaluation.hpp"

#include "rctlab/csv.hpp"
#include "rctlab/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

namespace rctlab {

double rmse(std::span<const double> estimates, std::span<const double> truths) {
    if (estimates.empty())
        throw DomainError("RMSE of an empty series");
    if (estimates.size() != truths.size())
        throw DomainError("RMSE series lengths differ");
    double sum = 0.0;
    for (std::size_t i = 0; i < estimates.size(); ++i) {
        double d = estimates[i] - truths[i];
        sum += d * d;
    }
    return std::sqrt(sum / static_cast<double>(estimates.size()));
}

std::string_view to_string(ModelSource source) {
    switch (source) {
    case ModelSource::Train:
        return "train";
    case ModelSource::File:
        return "file";
    case ModelSource::TrueLaw:
        return "true-law";
    }
    return "?";
}

ModelSource model_source_from_string(std::string_view text) {
    if (text == "train")
        return ModelSource::Train;
    if (text == "file")
        return ModelSource::File;
    if (text == "true-law")
        return ModelSource::TrueLaw;
    throw ConfigError("unknown model source '" + std::string(text) + "'");
}

std::vector<std::string> scenario_names() {
    return {"cc", "cc-wrong-init", "cv", "aging", "ideal"};
}

ExperimentConfig scenario_config(std::string_view name) {
    ExperimentConfig c;
    c.name = std::string(name);
    if (name == "cc" || name == "cc-wrong-init") {
        c.seed = 7;
        c.sessions = {paper_scenario_cc(c.seed)};
        c.thresholds.final_tick_within_one_tick = true;
        if (name == "cc") {
            c.initial_eta = 0.7;
            c.thresholds.min_improvement_percent = 60.0;
        } else {
            c.initial_eta = 0.5;
            c.thresholds.max_late_error_ratio = 0.1;
        }
    } else if (name == "cv") {
        c.seed = 11;
        c.sessions = {paper_scenario_cv(c.seed)};
        c.thresholds.min_improvement_percent = 70.0;
        c.thresholds.min_baseline_underestimate_share = 0.9;
        c.thresholds.final_tick_within_one_tick = true;
    } else if (name == "aging") {
        c.seed = 13;
        c.sessions = paper_scenario_aging(c.seed);
        c.online_updates = true;
        c.thresholds.max_error_strictly_decreasing = true;
    } else if (name == "ideal") {
        c.seed = 5;
        SessionSetup s;
        s.profile = ChargeProfile({{0.0, 1.0, 1.0}});
        s.start_soc = 0.2;
        s.target_soc = 0.6;
        s.charger.id = "ideal";
        s.charger.schedule = {{0.0, 1.0}};
        s.charger.seed = c.seed;
        c.sessions = {s};
        c.initial_eta = 1.0;
        c.estimator.baseline_eta_cc = 1.0;
        c.model_source = ModelSource::TrueLaw;
        c.thresholds.rmse_below_partition = true;
        c.thresholds.final_tick_within_one_tick = true;
    } else {
        throw ConfigError("unknown scenario '" + std::string(name) + "'");
    }
    apply_seed(c, c.seed);
    return c;
}

void apply_seed(ExperimentConfig& config, std::uint64_t seed) {
    config.seed = seed;
    for (std::size_t i = 0; i < config.sessions.size(); ++i)
        config.sessions[i].charger.seed = seed + i;
    config.training_seed = seed + 100;
}

bool EvaluationReport::passed() const {
    return std::all_of(thresholds.begin(), thresholds.end(),
                       [](const ThresholdResult& t) { return t.passed; });
}

namespace {

MethodStats stats_of(const std::vector<double>& est, const std::vector<double>& truth) {
    MethodStats s;
    s.rmse_minutes = rmse(est, truth);
    for (std::size_t i = 0; i < est.size(); ++i)
        s.max_abs_error_min = std::max(s.max_abs_error_min, std::abs(est[i] - truth[i]));
    return s;
}

nlohmann::json stats_json(const MethodStats& s) {
    return {{"rmse_minutes", s.rmse_minutes}, {"max_abs_error_min", s.max_abs_error_min}};
}

double improvement(const MethodStats& proposed, const MethodStats& baseline) {
    if (baseline.rmse_minutes <= 0.0)
        return 0.0;
    return 100.0 * (1.0 - proposed.rmse_minutes / baseline.rmse_minutes);
}

} // namespace

void summarize(EvaluationReport& report) {
    std::vector<double> truth;
    std::vector<double> proposed;
    std::vector<double> baseline;
    for (const auto& r : report.series) {
        truth.push_back(r.true_rct_min);
        proposed.push_back(r.est_proposed_min);
        baseline.push_back(r.est_baseline_min);
    }
    report.proposed = stats_of(proposed, truth);
    report.baseline = stats_of(baseline, truth);
    report.improvement_percent = improvement(report.proposed, report.baseline);

    for (auto& s : report.sessions) {
        truth.clear();
        proposed.clear();
        baseline.clear();
        for (const auto& r : report.series) {
            if (r.session != s.session)
                continue;
            truth.push_back(r.true_rct_min);
            proposed.push_back(r.est_proposed_min);
            baseline.push_back(r.est_baseline_min);
        }
        s.ticks = truth.size();
        if (!truth.empty()) {
            s.proposed = stats_of(proposed, truth);
            s.baseline = stats_of(baseline, truth);
        }
    }
}

std::string EvaluationReport::to_json() const {
    nlohmann::json j;
    j["schema_version"] = kReportSchemaVersion;
    j["scenario"] = scenario;
    j["seed"] = seed;
    j["tick_s"] = tick_s;
    j["m"] = series.size();
    j["proposed"] = stats_json(proposed);
    j["baseline"] = stats_json(baseline);
    j["improvement_percent"] = improvement_percent;
    auto& sess = j["sessions"] = nlohmann::json::array();
    for (const auto& s : sessions)
        sess.push_back({{"session", s.session},
                        {"ticks", s.ticks},
                        {"duration_min", s.duration_min},
                        {"overall_cc_accuracy", s.overall_cc_accuracy},
                        {"ended_at_cutoff", s.ended_at_cutoff},
                        {"proposed", stats_json(s.proposed)},
                        {"baseline", stats_json(s.baseline)}});
    auto& th = j["thresholds"] = nlohmann::json::array();
    for (const auto& t : thresholds)
        th.push_back({{"name", t.name}, {"passed", t.passed}, {"value", t.value}, {"limit", t.limit}});
    j["passed"] = passed();
    return j.dump(2);
}

void EvaluationReport::save_series_csv(std::ostream& out) const {
    out << "# schema_version: " << kReportSchemaVersion << '\n';
    csv::write_line(out, {"session", "time_s", "soc", "stage", "true_rct_min", "est_proposed_min",
                          "est_baseline_min", "eta_cc", "predicted_r_ohm"});
    for (const auto& r : series)
        csv::write_line(out, {std::to_string(r.session), csv::format_number(r.time_s),
                              csv::format_number(r.soc), std::string(to_string(r.stage)),
                              csv::format_number(r.true_rct_min),
                              csv::format_number(r.est_proposed_min),
                              csv::format_number(r.est_baseline_min), csv::format_number(r.eta_cc),
                              csv::format_number(r.predicted_r_ohm)});
}

std::vector<SeriesRow> EvaluationReport::parse_series_csv(std::istream& in,
                                                          const std::string& source) {
    auto table = csv::parse(in, source,
                            {"session", "time_s", "soc", "stage", "true_rct_min", "est_proposed_min",
                             "est_baseline_min", "eta_cc", "predicted_r_ohm"});
    std::vector<SeriesRow> rows;
    for (const auto& row : table.rows) {
        SeriesRow r;
        auto session = table.integer(row, 0);
        if (session < 0)
            throw ConfigError(source + ":" + std::to_string(row.line) + ": negative session");
        r.session = static_cast<std::size_t>(session);
        r.time_s = table.number(row, 1);
        r.soc = table.number(row, 2);
        try {
            r.stage = stage_from_string(table.text(row, 3));
        } catch (const ConfigError& e) {
            throw ConfigError(source + ":" + std::to_string(row.line) + ": " + e.what());
        }
        r.true_rct_min = table.number(row, 4);
        r.est_proposed_min = table.number(row, 5);
        r.est_baseline_min = table.number(row, 6);
        r.eta_cc = table.number(row, 7);
        r.predicted_r_ohm = table.number(row, 8);
        rows.push_back(r);
    }
    return rows;
}

std::vector<TrainingSample> samples_from_traces(std::span<const SessionTrace> traces,
                                                const OcvCurve& ocv) {
    std::vector<TrainingSample> out;
    for (const auto& trace : traces) {
        const double start = trace.metadata.start_soc;
        for (const auto& r : trace.rows) {
            if (r.stage != Stage::CV || !(r.i_recv_a > 0.0))
                continue;
            out.push_back({r.soc, start, r.temp_c, r.i_recv_a, r.v_term_v, ocv_at(ocv, r.soc), 0});
        }
    }
    return out;
}

TrainedModel train_model(std::span<const SessionTrace> traces, const OcvCurve& ocv,
                         std::size_t n_hidden, std::uint64_t seed) {
    auto samples = samples_from_traces(traces, ocv);
    if (samples.empty())
        throw EmptyTrainingSetError("traces contain no CV rows to train on");
    std::vector<RbfInput> inputs;
    inputs.reserve(samples.size());
    for (const auto& s : samples)
        inputs.push_back(s.input());
    auto centers = fit_centers(inputs, std::min(n_hidden, inputs.size()), seed);
    RbfModel initial(centers.centers, centers.spreads, std::vector<double>(centers.n_hidden, 0.0),
                     centers.scaling);
    auto fit = fit_weights(initial, samples);
    TrainingSummary summary;
    summary.samples = samples.size();
    summary.n_hidden = centers.n_hidden;
    summary.reduced = centers.reduced || centers.n_hidden < n_hidden;
    summary.mse_v2 = fit.mse;
    summary.rmse_mv = 1000.0 * std::sqrt(fit.mse);
    summary.rank = fit.rank;
    summary.condition = fit.condition;
    return {std::move(fit.model), summary};
}

TrainedModel train_model(std::span<const std::filesystem::path> trace_files, const OcvCurve& ocv,
                         std::size_t n_hidden, std::uint64_t seed,
                         const std::filesystem::path& out_model_file) {
    std::vector<SessionTrace> traces;
    for (const auto& path : trace_files)
        traces.push_back(SessionTrace::load(path));
    auto trained = train_model(traces, ocv, n_hidden, seed);
    trained.model.save(out_model_file);
    return trained;
}

RbfModel prepare_model(const ExperimentConfig& config) {
    switch (config.model_source) {
    case ModelSource::File:
        return RbfModel::load(config.model_file);
    case ModelSource::Train: {
        auto setups = training_sessions(config.training_session_count, config.training_seed,
                                        config.training_aging_scale);
        std::vector<SessionTrace> traces;
        for (const auto& s : setups)
            traces.push_back(simulate_session(s));
        const auto& ocv = config.sessions.empty() ? default_ocv_curve() : config.sessions[0].ocv;
        return train_model(traces, ocv, config.n_hidden, config.training_seed).model;
    }
    case ModelSource::TrueLaw:
        break;
    }
    throw ConfigError("experiment uses the true resistance law, not a fitted model");
}

namespace {

void check_thresholds(const ExperimentConfig& config, EvaluationReport& report) {
    const auto& th = config.thresholds;
    if (th.min_improvement_percent) {
        report.thresholds.push_back({"improvement_percent", report.improvement_percent >= *th.min_improvement_percent,
                                     report.improvement_percent, *th.min_improvement_percent});
    }
    if (th.min_baseline_underestimate_share) {
        std::size_t under = 0;
        for (const auto& r : report.series)
            if (r.est_baseline_min < r.true_rct_min)
                ++under;
        double share = static_cast<double>(under) / static_cast<double>(report.series.size());
        report.thresholds.push_back({"baseline_underestimate_share",
                                     share >= *th.min_baseline_underestimate_share, share,
                                     *th.min_baseline_underestimate_share});
    }
    if (th.max_late_error_ratio) {
        double worst = 0.0;
        for (const auto& s : report.sessions) {
            double initial = -1.0;
            double late = 0.0;
            for (const auto& r : report.series) {
                if (r.session != s.session)
                    continue;
                double err = std::abs(r.est_proposed_min - r.true_rct_min);
                if (initial < 0.0)
                    initial = err;
                if (r.time_s >= 0.75 * s.duration_min * 60.0)
                    late = std::max(late, err);
            }
            double ratio = initial > 0.0 ? late / initial : (late > 0.0 ? 1e9 : 0.0);
            worst = std::max(worst, ratio);
        }
        report.thresholds.push_back({"late_error_ratio", worst < *th.max_late_error_ratio, worst,
                                     *th.max_late_error_ratio});
    }
    if (th.final_tick_within_one_tick) {
        double worst = 0.0;
        for (const auto& s : report.sessions) {
            const SeriesRow* last = nullptr;
            for (const auto& r : report.series)
                if (r.session == s.session)
                    last = &r;
            if (!last)
                continue;
            worst = std::max({worst, std::abs(last->est_proposed_min - last->true_rct_min),
                              std::abs(last->est_baseline_min - last->true_rct_min)});
        }
        double limit = config.tick_s / 60.0;
        report.thresholds.push_back({"final_tick_error_min", worst <= limit, worst, limit});
    }
    if (th.max_error_strictly_decreasing) {
        bool ok = report.sessions.size() >= 2;
        for (std::size_t i = 1; i < report.sessions.size(); ++i)
            ok = ok && report.sessions[i].proposed.max_abs_error_min <
                           report.sessions[i - 1].proposed.max_abs_error_min;
        double last = report.sessions.empty() ? 0.0
                                              : report.sessions.back().proposed.max_abs_error_min;
        double first = report.sessions.empty() ? 0.0
                                               : report.sessions.front().proposed.max_abs_error_min;
        report.thresholds.push_back({"max_error_strictly_decreasing", ok, last, first});
    }
    if (th.rmse_below_partition) {
        double shortest = std::numeric_limits<double>::infinity();
        for (const auto& s : config.sessions) {
            auto parts = partition_cc(s.profile, s.start_soc, s.target_soc);
            for (const auto& seg : parts.segments)
                shortest = std::min(shortest, 60.0 * seg.delta_soc / seg.c_rate);
        }
        double worst = std::max(report.proposed.rmse_minutes, report.baseline.rmse_minutes);
        report.thresholds.push_back({"rmse_below_partition_min", worst < shortest, worst, shortest});
    }
}

void write_outputs(const EvaluationReport& report, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
        throw IoError("cannot create " + dir.string() + ": " + ec.message());
    {
        std::ofstream out(dir / "report.json");
        if (!out)
            throw IoError("cannot write " + (dir / "report.json").string());
        out << report.to_json() << '\n';
    }
    std::ofstream series(dir / "series.csv");
    if (!series)
        throw IoError("cannot write " + (dir / "series.csv").string());
    report.save_series_csv(series);
    if (!series)
        throw IoError("failed writing " + (dir / "series.csv").string());
}

} // namespace

EvaluationReport run_experiment(const ExperimentConfig& config,
                                const std::optional<std::filesystem::path>& out_dir) {
    config.estimator.validate();
    if (config.sessions.empty())
        throw ConfigError("experiment '" + config.name + "' has no sessions");
    if (!(config.tick_s > 0.0))
        throw ConfigError("tick_s must be positive");

    std::optional<RbfModel> model;
    if (config.model_source != ModelSource::TrueLaw)
        model = prepare_model(config);
    TrainingBuffer buffer(config.discard_threshold);

    EvaluationReport report;
    report.scenario = config.name;
    report.seed = config.seed;
    report.tick_s = config.tick_s;

    for (std::size_t index = 0; index < config.sessions.size(); ++index) {
        const auto& setup = config.sessions[index];
        auto trace = simulate_session(setup);

        AccuracyState accuracy;
        accuracy.eta_cc = config.initial_eta;
        accuracy.alpha_slow = config.alpha_slow;
        accuracy.alpha_fast = config.alpha_fast;
        accuracy.cap = config.accuracy_cap;
        accuracy.start_soc = setup.start_soc;
        accuracy.target_soc = setup.target_soc;
        accuracy.validate();

        ResistancePredictor predictor;
        if (model) {
            predictor = predictor_for(*model);
        } else {
            predictor = [law = setup.law](const RbfInput& x) {
                return law.resistance(x.soc, x.start_soc, x.temperature_c);
            };
        }

        double next_tick = 0.0;
        for (const auto& row : trace.rows) {
            if (row.stage == Stage::DONE)
                break;
            if (row.stage == Stage::CC)
                accuracy = step(accuracy, row.soc, row.i_recv_a, row.i_cmd_a);
            if (row.time_s < next_tick)
                continue;
            next_tick = (std::floor(row.time_s / config.tick_s) + 1.0) * config.tick_s;

            SessionState state{row.soc, setup.start_soc, setup.target_soc, row.temp_c, row.stage};
            auto est = estimate(state, setup.profile, setup.battery, setup.ocv, accuracy, predictor,
                                config.estimator);
            double base = estimate_baseline(state, setup.battery, setup.charger.max_current_a,
                                            row.i_cmd_a, config.estimator);
            report.series.push_back({index, row.time_s, row.soc, row.stage,
                                     true_rct(trace, row.time_s), est.total_minutes, base,
                                     accuracy.eta_cc,
                                     predictor({row.soc, setup.start_soc, row.temp_c})});
            if (row.stage == Stage::CV)
                buffer.ingest({row.soc, setup.start_soc, row.temp_c, row.i_recv_a, row.v_term_v,
                               ocv_at(setup.ocv, row.soc), 0});
        }

        SessionSummary summary;
        summary.session = index;
        summary.duration_min = trace.end_time_s() / 60.0;
        summary.ended_at_cutoff = trace.metadata.ended_at_cutoff;
        try {
            summary.overall_cc_accuracy = overall_cc_accuracy(trace);
        } catch (const DomainError&) {
            summary.overall_cc_accuracy = 0.0;
        }
        report.sessions.push_back(summary);

        if (config.online_updates && model && !buffer.empty())
            model = online_update(*model, buffer, config.online).model;
    }

    summarize(report);
    check_thresholds(config, report);
    if (out_dir)
        write_outputs(report, *out_dir);
    return report;
}

} // namespace rctlab
