#pragma once

#include "rctlab/cc_accuracy.hpp"
#include "rctlab/cv_resistance.hpp"
#include "rctlab/rct_engine.hpp"
#include "rctlab/sim_harness.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rctlab {

inline constexpr int kReportSchemaVersion = 1;

// Root mean squared difference. Throws DomainError on empty or mismatched input.
double rmse(std::span<const double> estimates, std::span<const double> truths);

enum class ModelSource { Train, File, TrueLaw };

std::string_view to_string(ModelSource source);
ModelSource model_source_from_string(std::string_view text);

// Pass/fail rules a scenario attaches to its report.
struct Thresholds {
    std::optional<double> min_improvement_percent;
    // Share of ticks at which the baseline must be below the truth.
    std::optional<double> min_baseline_underestimate_share;
    // Max error over the last quarter relative to the first-tick error.
    std::optional<double> max_late_error_ratio;
    bool final_tick_within_one_tick = false;
    bool max_error_strictly_decreasing = false;
    // Both methods' RMSE below the shortest CC partition duration.
    bool rmse_below_partition = false;
};

struct ExperimentConfig {
    std::string name;
    std::vector<SessionSetup> sessions; // run back to back, sharing model and buffer
    std::uint64_t seed = 0;
    double tick_s = 10.0;

    double initial_eta = kFallbackHistoricalEta;
    double alpha_slow = kDefaultAlphaSlow;
    double alpha_fast = kDefaultAlphaFast;
    double accuracy_cap = kDefaultAccuracyCap;
    EstimatorConfig estimator;

    ModelSource model_source = ModelSource::Train;
    std::filesystem::path model_file;
    std::size_t n_hidden = kDefaultHiddenUnits;
    std::size_t training_session_count = 10;
    std::uint64_t training_seed = 101;
    double training_aging_scale = 1.0;

    bool online_updates = false; // gradient update after every session
    OnlineUpdateOptions online;
    std::size_t discard_threshold = kDefaultDiscardThreshold;

    Thresholds thresholds;
};

// Built-in experiments: "cc", "cc-wrong-init", "cv", "aging", "ideal".
ExperimentConfig scenario_config(std::string_view name);
std::vector<std::string> scenario_names();

// Re-seeds every random source of the experiment from one seed.
void apply_seed(ExperimentConfig& config, std::uint64_t seed);

struct SeriesRow {
    std::size_t session = 0;
    double time_s = 0.0;
    double soc = 0.0;
    Stage stage = Stage::CC;
    double true_rct_min = 0.0;
    double est_proposed_min = 0.0;
    double est_baseline_min = 0.0;
    double eta_cc = 0.0;
    double predicted_r_ohm = 0.0;
};

struct MethodStats {
    double rmse_minutes = 0.0;
    double max_abs_error_min = 0.0;
};

struct SessionSummary {
    std::size_t session = 0;
    std::size_t ticks = 0;
    double duration_min = 0.0;
    double overall_cc_accuracy = 0.0; // 0 when the session has no CC rows
    bool ended_at_cutoff = false;
    MethodStats proposed;
    MethodStats baseline;
};

struct ThresholdResult {
    std::string name;
    bool passed = false;
    double value = 0.0;
    double limit = 0.0;
};

struct EvaluationReport {
    std::string scenario;
    std::uint64_t seed = 0;
    double tick_s = 10.0;
    MethodStats proposed;
    MethodStats baseline;
    double improvement_percent = 0.0;
    std::vector<SessionSummary> sessions;
    std::vector<SeriesRow> series;
    std::vector<ThresholdResult> thresholds;

    bool passed() const;

    std::string to_json() const;
    // CSV with a leading `# schema_version: N` line.
    void save_series_csv(std::ostream& out) const;
    static std::vector<SeriesRow> parse_series_csv(std::istream& in,
                                                   const std::string& source = "<stream>");
};

// Fills proposed/baseline stats and improvement from the series, with RMSE
// taken over every tick of every session.
void summarize(EvaluationReport& report);

struct TrainingSummary {
    std::size_t samples = 0;
    std::size_t n_hidden = 0;
    bool reduced = false;
    double mse_v2 = 0.0;
    double rmse_mv = 0.0;
    std::size_t rank = 0;
    double condition = 0.0;
};

struct TrainedModel {
    RbfModel model;
    TrainingSummary summary;
};

// CV rows of the traces become training samples (inputs, current, measured
// voltage, OCV from the curve).
std::vector<TrainingSample> samples_from_traces(std::span<const SessionTrace> traces,
                                                const OcvCurve& ocv);

TrainedModel train_model(std::span<const SessionTrace> traces, const OcvCurve& ocv,
                         std::size_t n_hidden, std::uint64_t seed);
// File variant: loads trace CSVs and writes the model JSON.
TrainedModel train_model(std::span<const std::filesystem::path> trace_files, const OcvCurve& ocv,
                         std::size_t n_hidden, std::uint64_t seed,
                         const std::filesystem::path& out_model_file);

// Offline model for an experiment: trains on simulated sessions or loads a file.
RbfModel prepare_model(const ExperimentConfig& config);

// Simulates every session, replays it tick by tick through both estimators
// and scores them. Writes report.json and series.csv when out_dir is set.
EvaluationReport run_experiment(const ExperimentConfig& config,
                                const std::optional<std::filesystem::path>& out_dir = std::nullopt);

} // namespace rctlab
