#include "rctlab/error.hpp"
#include "rctlab/evaluation.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

using namespace rctlab;

namespace {

std::filesystem::path temp_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("rctlab_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

std::vector<SessionTrace> simulate_all(const std::vector<SessionSetup>& setups) {
    std::vector<SessionTrace> out;
    for (const auto& s : setups)
        out.push_back(simulate_session(s));
    return out;
}

} // namespace

TEST(Rmse, Examples) {
    std::vector<double> a{1, 2, 3}, b{1, 2, 3};
    EXPECT_EQ(rmse(a, b), 0.0);
    std::vector<double> c{0, 0}, d{3, 4};
    EXPECT_NEAR(rmse(c, d), std::sqrt(12.5), 1e-15);
    std::vector<double> e;
    EXPECT_THROW(rmse(e, e), DomainError);
    EXPECT_THROW(rmse(a, c), DomainError);
}

TEST(ModelSource, StringRoundTrip) {
    for (auto s : {ModelSource::Train, ModelSource::File, ModelSource::TrueLaw})
        EXPECT_EQ(model_source_from_string(to_string(s)), s);
    EXPECT_THROW(model_source_from_string("magic"), ConfigError);
}

TEST(Scenarios, NamesAreKnown) {
    for (const auto& n : scenario_names())
        EXPECT_EQ(scenario_config(n).name, n);
    EXPECT_THROW(scenario_config("nope"), ConfigError);
}

TEST(Report, IdealScenarioIsExact) {
    auto r = run_experiment(scenario_config("ideal"));
    EXPECT_TRUE(r.passed());
    EXPECT_LT(r.proposed.rmse_minutes, r.tick_s / 60.0);
    for (const auto& row : r.series) {
        EXPECT_NEAR(row.est_proposed_min, row.true_rct_min, 1e-6);
        EXPECT_NEAR(row.est_baseline_min, row.true_rct_min, 1e-6);
    }
}

TEST(Report, SummaryMatchesSeries) {
    auto r = run_experiment(scenario_config("cc"));
    std::vector<double> p, b, t;
    double max_p = 0.0;
    for (const auto& row : r.series) {
        p.push_back(row.est_proposed_min);
        b.push_back(row.est_baseline_min);
        t.push_back(row.true_rct_min);
        max_p = std::max(max_p, std::abs(row.est_proposed_min - row.true_rct_min));
    }
    EXPECT_DOUBLE_EQ(r.proposed.rmse_minutes, rmse(p, t));
    EXPECT_DOUBLE_EQ(r.baseline.rmse_minutes, rmse(b, t));
    EXPECT_DOUBLE_EQ(r.proposed.max_abs_error_min, max_p);
    EXPECT_NEAR(r.improvement_percent,
                100.0 * (1.0 - r.proposed.rmse_minutes / r.baseline.rmse_minutes), 1e-12);

    auto j = nlohmann::json::parse(r.to_json());
    EXPECT_EQ(j["schema_version"], kReportSchemaVersion);
    EXPECT_EQ(j["scenario"], "cc");
    EXPECT_DOUBLE_EQ(j["proposed"]["rmse_minutes"].get<double>(), r.proposed.rmse_minutes);
    EXPECT_EQ(j["passed"].get<bool>(), r.passed());
}

TEST(Report, SeriesTicksEveryTickAndTruthFallsToZero) {
    auto c = scenario_config("cv");
    auto r = run_experiment(c);
    ASSERT_FALSE(r.series.empty());
    for (std::size_t i = 1; i < r.series.size(); ++i) {
        EXPECT_NEAR(r.series[i].time_s - r.series[i - 1].time_s, c.tick_s, 1e-9);
        EXPECT_LT(r.series[i].true_rct_min, r.series[i - 1].true_rct_min);
    }
    EXPECT_LE(r.series.back().true_rct_min, c.tick_s / 60.0);
}

TEST(Report, SeriesCsvRoundTrip) {
    auto r = run_experiment(scenario_config("aging"));
    std::stringstream ss;
    r.save_series_csv(ss);
    EXPECT_EQ(ss.str().rfind("# schema_version: 1\n", 0), 0u);
    auto rows = EvaluationReport::parse_series_csv(ss);
    ASSERT_EQ(rows.size(), r.series.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        EXPECT_EQ(rows[i].session, r.series[i].session);
        EXPECT_EQ(rows[i].time_s, r.series[i].time_s);
        EXPECT_EQ(rows[i].est_proposed_min, r.series[i].est_proposed_min);
        EXPECT_EQ(rows[i].predicted_r_ohm, r.series[i].predicted_r_ohm);
        EXPECT_EQ(rows[i].stage, r.series[i].stage);
    }
}

TEST(Report, DeterministicAcrossRuns) {
    for (const auto& name : scenario_names()) {
        std::ostringstream a, b;
        run_experiment(scenario_config(name)).save_series_csv(a);
        run_experiment(scenario_config(name)).save_series_csv(b);
        EXPECT_EQ(a.str(), b.str()) << name;
    }
}

TEST(Report, WritesOutputs) {
    auto dir = temp_dir("outputs");
    auto r = run_experiment(scenario_config("ideal"), dir);
    EXPECT_TRUE(std::filesystem::exists(dir / "report.json"));
    std::ifstream in(dir / "series.csv");
    auto rows = EvaluationReport::parse_series_csv(in);
    EXPECT_EQ(rows.size(), r.series.size());
    std::filesystem::remove_all(dir);
}

TEST(Report, FailingThresholdFailsTheReport) {
    auto c = scenario_config("ideal");
    c.thresholds.min_improvement_percent = 101.0;
    auto r = run_experiment(c);
    EXPECT_FALSE(r.passed());
}

TEST(Training, HeldOutVoltageErrorBelowTwoMillivolts) {
    // Interleaved split: every fifth CV sample is held out.
    auto traces = simulate_all(training_sessions(10, 101));
    auto all = samples_from_traces(traces, default_ocv_curve());
    std::vector<TrainingSample> train, held;
    for (std::size_t i = 0; i < all.size(); ++i)
        (i % 5 == 4 ? held : train).push_back(all[i]);
    std::vector<RbfInput> inputs;
    for (const auto& s : train)
        inputs.push_back(s.input());
    auto centers = fit_centers(inputs, 150, 101);
    RbfModel base(centers.centers, centers.spreads, std::vector<double>(centers.centers.size(), 0.0),
                  centers.scaling);
    auto fit = fit_weights(base, train);
    double se = 0.0;
    for (const auto& s : held) {
        double v = s.ocv_v + predict_raw(fit.model, s.input()) * s.current_a;
        se += (v - s.v_measured) * (v - s.v_measured);
    }
    double rmse_mv = 1000.0 * std::sqrt(se / static_cast<double>(held.size()));
    EXPECT_LT(rmse_mv, 2.0);
}

TEST(Training, MoreUnitsFitBetter) {
    auto traces = simulate_all(training_sessions(10, 101));
    auto one = train_model(traces, default_ocv_curve(), 1, 101);
    auto many = train_model(traces, default_ocv_curve(), kDefaultHiddenUnits, 101);
    EXPECT_LT(many.summary.mse_v2, one.summary.mse_v2);
    EXPECT_EQ(many.summary.n_hidden, kDefaultHiddenUnits);
    EXPECT_NEAR(many.summary.rmse_mv, 1000.0 * std::sqrt(many.summary.mse_v2), 1e-9);
}

TEST(Training, OnlyCvRowsBecomeSamples) {
    auto traces = simulate_all({paper_scenario_cc(7)});
    EXPECT_TRUE(samples_from_traces(traces, default_ocv_curve()).empty());
    EXPECT_THROW(train_model(traces, default_ocv_curve(), 5, 1), EmptyTrainingSetError);
}

TEST(Training, CorruptTraceNamesTheRow) {
    auto dir = temp_dir("corrupt");
    auto file = dir / "bad.csv";
    {
        std::ofstream out(file);
        out << "time_s,soc,stage,i_cmd_a,i_recv_a,v_term_v,temp_c\n"
            << "0,0.7,CV,1,1,4.2,25\n"
            << "1,0.7,CV,1,oops,4.2,25\n";
    }
    std::vector<std::filesystem::path> files{file};
    try {
        train_model(files, default_ocv_curve(), 2, 1, dir / "model.json");
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("bad.csv:3"), std::string::npos) << e.what();
    }
    std::vector<std::filesystem::path> missing{dir / "none.csv"};
    EXPECT_THROW(train_model(missing, default_ocv_curve(), 2, 1, dir / "model.json"), IoError);
    std::filesystem::remove_all(dir);
}

TEST(Training, FileVariantWritesTheModel) {
    auto dir = temp_dir("train_files");
    std::vector<std::filesystem::path> files;
    auto setups = training_sessions(4, 3);
    for (std::size_t i = 0; i < setups.size(); ++i) {
        files.push_back(dir / ("s" + std::to_string(i) + ".csv"));
        simulate_session(setups[i]).save(files.back());
    }
    auto trained = train_model(files, default_ocv_curve(), 6, 3, dir / "model.json");
    auto loaded = RbfModel::load(dir / "model.json");
    EXPECT_EQ(loaded.weights(), trained.model.weights());
    std::filesystem::remove_all(dir);
}

TEST(PrepareModel, TrueLawNeedsNoTraining) {
    auto c = scenario_config("ideal");
    EXPECT_EQ(c.model_source, ModelSource::TrueLaw);
    c.model_source = ModelSource::File;
    c.model_file = "/nonexistent/model.json";
    EXPECT_THROW(prepare_model(c), IoError);
}
