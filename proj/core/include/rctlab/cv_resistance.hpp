#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace rctlab {

inline constexpr std::size_t kDefaultHiddenUnits = 25;
inline constexpr double kDefaultResistanceFloor = 1e-4;
inline constexpr std::size_t kDefaultDiscardThreshold = 500;

// Network input: present SOC, SOC at the start of the charge, temperature.
struct RbfInput {
    double soc = 0.0;
    double start_soc = 0.0;
    double temperature_c = 25.0;

    friend bool operator==(const RbfInput&, const RbfInput&) = default;
};

using Point3 = std::array<double, 3>;

struct AxisScaling {
    double offset = 0.0;
    double scale = 1.0; // always > 0
};

// Maps each input dimension of the training domain onto [0, 1].
struct InputScaling {
    std::array<AxisScaling, 3> axes{};

    Point3 apply(const RbfInput& x) const;
    RbfInput invert(const Point3& p) const;

    // Degenerate dimensions (zero range) keep scale 1.
    static InputScaling fit(std::span<const RbfInput> data);
};

// Gaussian RBF network with a linear output unit predicting resistance.
class RbfModel {
  public:
    RbfModel(std::vector<RbfInput> centers, std::vector<double> spreads,
             std::vector<double> weights, InputScaling scaling,
             double floor_ohm = kDefaultResistanceFloor);

    std::size_t n_hidden() const { return centers_.size(); }
    const std::vector<RbfInput>& centers() const { return centers_; }
    const std::vector<double>& spreads() const { return spreads_; }
    const std::vector<double>& weights() const { return weights_; }
    const InputScaling& scaling() const { return scaling_; }
    double floor_ohm() const { return floor_ohm_; }

    RbfModel with_weights(std::vector<double> weights) const;

    // Hidden-layer outputs, written into out (size n_hidden).
    void activations_into(const RbfInput& x, std::span<double> out) const;

    // JSON with n_hidden, centers, spreads, weights, input_scaling, floor_ohm.
    std::string to_json() const;
    static RbfModel from_json(const std::string& text);
    static RbfModel load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

  private:
    std::vector<RbfInput> centers_;
    std::vector<Point3> scaled_centers_;
    std::vector<double> spreads_;
    std::vector<double> weights_;
    InputScaling scaling_;
    double floor_ohm_;
};

std::vector<double> activations(const RbfModel& model, const RbfInput& x);

// Linear output without the positivity floor; this is what training fits.
double predict_raw(const RbfModel& model, const RbfInput& x);

double predict_resistance(const RbfModel& model, const RbfInput& x);

struct KMeansOptions {
    std::size_t max_iterations = 300;
    std::size_t nearest_for_spread = 2;
    double spread_floor = 1e-3;
};

struct CenterFit {
    std::vector<RbfInput> centers;
    std::vector<double> spreads; // in scaled input space
    InputScaling scaling;
    std::size_t n_hidden = 0;
    bool reduced = false; // fewer distinct points than requested units
    std::size_t iterations = 0;
    std::vector<double> wcss_history; // within-cluster sum of squares per Lloyd pass
};

// k-means++ seeding then Lloyd iterations in scaled space. Deterministic for a
// given seed.
CenterFit fit_centers(std::span<const RbfInput> data, std::size_t n_hidden, std::uint64_t seed,
                      const KMeansOptions& options = {});

struct TrainingSample {
    double soc = 0.0;
    double start_soc = 0.0;
    double temperature_c = 25.0;
    double current_a = 0.0;
    double v_measured = 0.0;
    double ocv_v = 0.0;
    std::uint64_t serial = 0; // 0 is the newest

    RbfInput input() const { return {soc, start_soc, temperature_c}; }
};

// Newest-first store of CV measurements used for online training.
class TrainingBuffer {
  public:
    explicit TrainingBuffer(std::size_t discard_threshold = kDefaultDiscardThreshold);

    // New sample gets serial 0, everything else ages by one, and anything
    // older than the discard threshold is dropped.
    void ingest(TrainingSample sample);

    const std::deque<TrainingSample>& samples() const { return samples_; }
    std::size_t size() const { return samples_.size(); }
    bool empty() const { return samples_.empty(); }
    std::size_t discard_threshold() const { return discard_threshold_; }
    std::size_t capacity() const { return discard_threshold_ + 1; }

    // CSV `serial,soc,start_soc,temp_c,current_a,v_meas,ocv_v`.
    void save(std::ostream& out) const;
    static TrainingBuffer parse(std::istream& in, std::size_t discard_threshold,
                                const std::string& source = "<stream>");

  private:
    std::deque<TrainingSample> samples_;
    std::size_t discard_threshold_;
};

struct WeightFit {
    RbfModel model;
    double mse = 0.0; // mean squared voltage error over the fitted samples
    std::size_t rank = 0;
    bool rank_deficient = false;
    double condition = 1.0; // ratio of largest to smallest retained pivot
};

// Exact linear least squares on V - OCV = (sum_i W_i H_i) * I. Rank-deficient
// systems get the minimum-norm solution.
WeightFit fit_weights(const RbfModel& model, std::span<const TrainingSample> samples);
WeightFit fit_weights(const RbfModel& model, const TrainingBuffer& buffer);

// Serial decay exp(-serial / tau). tau == 1 reproduces exp(-serial).
double serial_weight(std::uint64_t serial, double tau);

// (1/m) sum_j w_j (V_pred - V_meas)^2 and its gradient in the output weights.
double weighted_loss(const RbfModel& model, std::span<const TrainingSample> samples, double tau);
std::vector<double> loss_gradient(const RbfModel& model, std::span<const TrainingSample> samples,
                                  double tau);

struct OnlineUpdateOptions {
    double learning_rate = 0.005;
    std::size_t epochs = 20;
    double tau = static_cast<double>(kDefaultDiscardThreshold) / 4.0;
    std::size_t divergence_patience = 5;
};

struct OnlineUpdateResult {
    RbfModel model;
    double final_learning_rate = 0.0;
    std::size_t halvings = 0;
    std::vector<double> loss_history; // loss before each epoch, then the final loss
};

// Full-batch gradient descent on the output weights only; centers and
// spreads stay fixed. The rate halves after divergence_patience consecutive
// loss increases.
OnlineUpdateResult online_update(const RbfModel& model, const TrainingBuffer& buffer,
                                 const OnlineUpdateOptions& options = {});

} // namespace rctlab
