#include "rctlab/cv_resistance.hpp"

#include "rctlab/csv.hpp"
#include "rctlab/error.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

namespace rctlab {

namespace {

double squared_distance(const Point3& a, const Point3& b) {
    double d0 = a[0] - b[0];
    double d1 = a[1] - b[1];
    double d2 = a[2] - b[2];
    return d0 * d0 + d1 * d1 + d2 * d2;
}

// Uniform on [0, 1) from the top 53 bits; identical on every platform.
double unit_uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

} // namespace

Point3 InputScaling::apply(const RbfInput& x) const {
    return {(x.soc - axes[0].offset) / axes[0].scale,
            (x.start_soc - axes[1].offset) / axes[1].scale,
            (x.temperature_c - axes[2].offset) / axes[2].scale};
}

RbfInput InputScaling::invert(const Point3& p) const {
    return {axes[0].offset + p[0] * axes[0].scale, axes[1].offset + p[1] * axes[1].scale,
            axes[2].offset + p[2] * axes[2].scale};
}

InputScaling InputScaling::fit(std::span<const RbfInput> data) {
    InputScaling out;
    if (data.empty())
        return out;
    std::array<double, 3> lo{data[0].soc, data[0].start_soc, data[0].temperature_c};
    std::array<double, 3> hi = lo;
    for (const auto& x : data) {
        const std::array<double, 3> v{x.soc, x.start_soc, x.temperature_c};
        for (int d = 0; d < 3; ++d) {
            lo[d] = std::min(lo[d], v[d]);
            hi[d] = std::max(hi[d], v[d]);
        }
    }
    for (int d = 0; d < 3; ++d) {
        double range = hi[d] - lo[d];
        out.axes[d] = {lo[d], range > 0.0 ? range : 1.0};
    }
    return out;
}

RbfModel::RbfModel(std::vector<RbfInput> centers, std::vector<double> spreads,
                   std::vector<double> weights, InputScaling scaling, double floor_ohm)
    : centers_(std::move(centers)), spreads_(std::move(spreads)), weights_(std::move(weights)),
      scaling_(scaling), floor_ohm_(floor_ohm) {
    if (centers_.empty())
        throw DomainError("RBF model needs at least one hidden unit");
    if (spreads_.size() != centers_.size() || weights_.size() != centers_.size())
        throw DomainError("RBF centers, spreads and weights differ in length");
    for (double s : spreads_)
        if (!(s > 0.0))
            throw DomainError("RBF spreads must be positive");
    for (const auto& axis : scaling_.axes)
        if (!(axis.scale > 0.0))
            throw DomainError("RBF input scale must be positive");
    if (!(floor_ohm_ > 0.0))
        throw DomainError("resistance floor must be positive");
    scaled_centers_.reserve(centers_.size());
    for (const auto& c : centers_)
        scaled_centers_.push_back(scaling_.apply(c));
}

RbfModel RbfModel::with_weights(std::vector<double> weights) const {
    return RbfModel(centers_, spreads_, std::move(weights), scaling_, floor_ohm_);
}

void RbfModel::activations_into(const RbfInput& x, std::span<double> out) const {
    const Point3 p = scaling_.apply(x);
    for (std::size_t i = 0; i < scaled_centers_.size(); ++i) {
        double s = spreads_[i];
        out[i] = std::exp(-squared_distance(p, scaled_centers_[i]) / (2.0 * s * s));
    }
}

std::string RbfModel::to_json() const {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["n_hidden"] = n_hidden();
    auto& centers = j["centers"] = nlohmann::json::array();
    for (const auto& c : centers_)
        centers.push_back({c.soc, c.start_soc, c.temperature_c});
    j["spreads"] = spreads_;
    j["weights"] = weights_;
    auto& scaling = j["input_scaling"] = nlohmann::json::array();
    for (const auto& axis : scaling_.axes)
        scaling.push_back({{"offset", axis.offset}, {"scale", axis.scale}});
    j["floor_ohm"] = floor_ohm_;
    return j.dump(2);
}

RbfModel RbfModel::from_json(const std::string& text) {
    try {
        auto j = nlohmann::json::parse(text);
        std::vector<RbfInput> centers;
        for (const auto& c : j.at("centers")) {
            if (c.size() != 3)
                throw ConfigError("model center must have 3 components");
            centers.push_back({c[0].get<double>(), c[1].get<double>(), c[2].get<double>()});
        }
        if (j.at("n_hidden").get<std::size_t>() != centers.size())
            throw ConfigError("model n_hidden does not match the number of centers");
        InputScaling scaling;
        const auto& axes = j.at("input_scaling");
        if (axes.size() != 3)
            throw ConfigError("model input_scaling must have 3 entries");
        for (std::size_t d = 0; d < 3; ++d)
            scaling.axes[d] = {axes[d].at("offset").get<double>(), axes[d].at("scale").get<double>()};
        return RbfModel(std::move(centers), j.at("spreads").get<std::vector<double>>(),
                        j.at("weights").get<std::vector<double>>(), scaling,
                        j.at("floor_ohm").get<double>());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("model JSON: ") + e.what());
    } catch (const DomainError& e) {
        throw ConfigError(std::string("model JSON: ") + e.what());
    }
}

RbfModel RbfModel::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        return from_json(buf.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

void RbfModel::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot write " + path.string());
    out << to_json() << '\n';
    if (!out)
        throw IoError("failed writing " + path.string());
}

std::vector<double> activations(const RbfModel& model, const RbfInput& x) {
    std::vector<double> h(model.n_hidden());
    model.activations_into(x, h);
    return h;
}

double predict_raw(const RbfModel& model, const RbfInput& x) {
    auto h = activations(model, x);
    return std::inner_product(h.begin(), h.end(), model.weights().begin(), 0.0);
}

double predict_resistance(const RbfModel& model, const RbfInput& x) {
    return std::max(predict_raw(model, x), model.floor_ohm());
}

CenterFit fit_centers(std::span<const RbfInput> data, std::size_t n_hidden, std::uint64_t seed,
                      const KMeansOptions& options) {
    if (n_hidden == 0)
        throw DomainError("n_hidden must be at least 1");
    if (data.size() < n_hidden)
        throw DomainError("need at least n_hidden data points");

    CenterFit fit;
    fit.scaling = InputScaling::fit(data);
    std::vector<Point3> pts;
    pts.reserve(data.size());
    for (const auto& x : data)
        pts.push_back(fit.scaling.apply(x));

    auto distinct = pts;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    std::size_t k = n_hidden;
    if (distinct.size() < k) {
        k = distinct.size();
        fit.reduced = true;
    }
    fit.n_hidden = k;

    // k-means++ seeding.
    std::mt19937_64 rng(seed);
    std::vector<Point3> centers;
    centers.reserve(k);
    centers.push_back(pts[static_cast<std::size_t>(unit_uniform(rng) * pts.size())]);
    std::vector<double> nearest(pts.size(), std::numeric_limits<double>::infinity());
    while (centers.size() < k) {
        double total = 0.0;
        for (std::size_t j = 0; j < pts.size(); ++j) {
            nearest[j] = std::min(nearest[j], squared_distance(pts[j], centers.back()));
            total += nearest[j];
        }
        double target = unit_uniform(rng) * total;
        std::size_t pick = pts.size();
        double acc = 0.0;
        for (std::size_t j = 0; j < pts.size(); ++j) {
            if (nearest[j] <= 0.0)
                continue;
            acc += nearest[j];
            pick = j;
            if (acc > target)
                break;
        }
        centers.push_back(pts[pick]);
    }

    // Lloyd iterations.
    std::vector<std::size_t> assign(pts.size(), k);
    std::vector<double> dist(pts.size());
    for (std::size_t iter = 0; iter < options.max_iterations; ++iter) {
        bool changed = false;
        for (std::size_t j = 0; j < pts.size(); ++j) {
            std::size_t best = 0;
            double best_d = squared_distance(pts[j], centers[0]);
            for (std::size_t c = 1; c < k; ++c) {
                double d = squared_distance(pts[j], centers[c]);
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            if (assign[j] != best) {
                assign[j] = best;
                changed = true;
            }
            dist[j] = best_d;
        }

        std::vector<std::size_t> counts(k, 0);
        for (auto a : assign)
            ++counts[a];
        // An empty cluster takes over the worst-served point of a cluster
        // that has more than one member.
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] != 0)
                continue;
            std::size_t worst = pts.size();
            for (std::size_t j = 0; j < pts.size(); ++j)
                if (counts[assign[j]] > 1 && (worst == pts.size() || dist[j] > dist[worst]))
                    worst = j;
            if (worst == pts.size())
                break;
            --counts[assign[worst]];
            assign[worst] = c;
            centers[c] = pts[worst];
            dist[worst] = 0.0;
            counts[c] = 1;
            changed = true;
        }

        fit.wcss_history.push_back(std::accumulate(dist.begin(), dist.end(), 0.0));
        fit.iterations = iter + 1;
        if (!changed && iter > 0)
            break;

        std::vector<Point3> sums(k, Point3{0.0, 0.0, 0.0});
        for (std::size_t j = 0; j < pts.size(); ++j)
            for (int d = 0; d < 3; ++d)
                sums[assign[j]][d] += pts[j][d];
        for (std::size_t c = 0; c < k; ++c)
            if (counts[c] > 0)
                for (int d = 0; d < 3; ++d)
                    centers[c][d] = sums[c][d] / static_cast<double>(counts[c]);
    }

    // Spread: mean distance to the P nearest other centroids.
    fit.spreads.resize(k);
    if (k == 1) {
        double ss = 0.0;
        for (const auto& p : pts)
            ss += squared_distance(p, centers[0]);
        fit.spreads[0] = std::max(std::sqrt(ss / static_cast<double>(pts.size())),
                                  options.spread_floor);
    } else {
        std::size_t p = std::min(options.nearest_for_spread, k - 1);
        std::vector<double> d;
        for (std::size_t c = 0; c < k; ++c) {
            d.clear();
            for (std::size_t o = 0; o < k; ++o)
                if (o != c)
                    d.push_back(std::sqrt(squared_distance(centers[c], centers[o])));
            std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(p), d.end());
            double mean = std::accumulate(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(p), 0.0) /
                          static_cast<double>(p);
            fit.spreads[c] = std::max(mean, options.spread_floor);
        }
    }

    fit.centers.reserve(k);
    for (const auto& c : centers)
        fit.centers.push_back(fit.scaling.invert(c));
    return fit;
}

TrainingBuffer::TrainingBuffer(std::size_t discard_threshold)
    : discard_threshold_(discard_threshold) {}

void TrainingBuffer::ingest(TrainingSample sample) {
    for (auto& s : samples_)
        ++s.serial;
    sample.serial = 0;
    samples_.push_front(sample);
    while (!samples_.empty() && samples_.back().serial > discard_threshold_)
        samples_.pop_back();
}

void TrainingBuffer::save(std::ostream& out) const {
    csv::write_line(out, {"serial", "soc", "start_soc", "temp_c", "current_a", "v_meas", "ocv_v"});
    for (const auto& s : samples_)
        csv::write_line(out, {std::to_string(s.serial), csv::format_number(s.soc),
                              csv::format_number(s.start_soc), csv::format_number(s.temperature_c),
                              csv::format_number(s.current_a), csv::format_number(s.v_measured),
                              csv::format_number(s.ocv_v)});
}

TrainingBuffer TrainingBuffer::parse(std::istream& in, std::size_t discard_threshold,
                                     const std::string& source) {
    auto table = csv::parse(in, source,
                            {"serial", "soc", "start_soc", "temp_c", "current_a", "v_meas", "ocv_v"});
    std::vector<TrainingSample> rows;
    for (const auto& row : table.rows) {
        auto serial = table.integer(row, 0);
        if (serial < 0)
            throw ConfigError(source + ":" + std::to_string(row.line) + ": negative serial");
        rows.push_back({table.number(row, 1), table.number(row, 2), table.number(row, 3),
                        table.number(row, 4), table.number(row, 5), table.number(row, 6),
                        static_cast<std::uint64_t>(serial)});
    }
    std::stable_sort(rows.begin(), rows.end(),
                     [](const auto& a, const auto& b) { return a.serial < b.serial; });
    TrainingBuffer buffer(discard_threshold);
    for (auto& r : rows)
        if (r.serial <= discard_threshold)
            buffer.samples_.push_back(r);
    return buffer;
}

WeightFit fit_weights(const RbfModel& model, std::span<const TrainingSample> samples) {
    if (samples.empty())
        throw EmptyTrainingSetError("cannot fit weights without samples");
    const auto m = static_cast<Eigen::Index>(samples.size());
    const auto n = static_cast<Eigen::Index>(model.n_hidden());
    Eigen::MatrixXd design(m, n);
    Eigen::VectorXd target(m);
    std::vector<double> h(model.n_hidden());
    for (Eigen::Index j = 0; j < m; ++j) {
        const auto& s = samples[static_cast<std::size_t>(j)];
        model.activations_into(s.input(), h);
        for (Eigen::Index i = 0; i < n; ++i)
            design(j, i) = h[static_cast<std::size_t>(i)] * s.current_a;
        target(j) = s.v_measured - s.ocv_v;
    }

    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(design);
    Eigen::VectorXd w = cod.solve(target);

    WeightFit fit{model.with_weights(std::vector<double>(w.data(), w.data() + w.size()))};
    fit.rank = static_cast<std::size_t>(cod.rank());
    fit.rank_deficient = cod.rank() < std::min(m, n);
    const auto& r = cod.matrixQTZ();
    double rmax = 0.0;
    double rmin = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < cod.rank(); ++i) {
        double v = std::abs(r(i, i));
        rmax = std::max(rmax, v);
        rmin = std::min(rmin, v);
    }
    fit.condition = cod.rank() > 0 ? rmax / rmin : std::numeric_limits<double>::infinity();
    fit.mse = (design * w - target).squaredNorm() / static_cast<double>(m);
    return fit;
}

WeightFit fit_weights(const RbfModel& model, const TrainingBuffer& buffer) {
    std::vector<TrainingSample> samples(buffer.samples().begin(), buffer.samples().end());
    return fit_weights(model, samples);
}

double serial_weight(std::uint64_t serial, double tau) {
    return std::exp(-static_cast<double>(serial) / tau);
}

double weighted_loss(const RbfModel& model, std::span<const TrainingSample> samples, double tau) {
    if (samples.empty())
        throw EmptyTrainingSetError("loss over an empty sample set");
    double total = 0.0;
    for (const auto& s : samples) {
        double err = s.ocv_v + predict_raw(model, s.input()) * s.current_a - s.v_measured;
        total += serial_weight(s.serial, tau) * err * err;
    }
    return total / static_cast<double>(samples.size());
}

std::vector<double> loss_gradient(const RbfModel& model, std::span<const TrainingSample> samples,
                                  double tau) {
    if (samples.empty())
        throw EmptyTrainingSetError("gradient over an empty sample set");
    std::vector<double> grad(model.n_hidden(), 0.0);
    std::vector<double> h(model.n_hidden());
    for (const auto& s : samples) {
        model.activations_into(s.input(), h);
        double r = std::inner_product(h.begin(), h.end(), model.weights().begin(), 0.0);
        double err = s.ocv_v + r * s.current_a - s.v_measured;
        double scale = 2.0 * err * s.current_a * serial_weight(s.serial, tau);
        for (std::size_t i = 0; i < h.size(); ++i)
            grad[i] += scale * h[i];
    }
    for (auto& g : grad)
        g /= static_cast<double>(samples.size());
    return grad;
}

OnlineUpdateResult online_update(const RbfModel& model, const TrainingBuffer& buffer,
                                 const OnlineUpdateOptions& options) {
    if (buffer.empty())
        throw EmptyTrainingSetError("online update needs stored samples");
    if (!(options.learning_rate > 0.0))
        throw DomainError("learning rate must be positive");
    if (!(options.tau > 0.0))
        throw DomainError("serial decay scale must be positive");

    // Centers are fixed, so the activations are computed once.
    const std::size_t m = buffer.size();
    const std::size_t n = model.n_hidden();
    std::vector<double> hmat(m * n);
    std::vector<double> sample_weight(m);
    std::size_t row = 0;
    for (const auto& s : buffer.samples()) {
        model.activations_into(s.input(), std::span<double>(hmat.data() + row * n, n));
        sample_weight[row] = serial_weight(s.serial, options.tau);
        ++row;
    }

    auto weights = model.weights();
    std::vector<double> err(m);
    auto evaluate = [&](const std::vector<double>& w) {
        double loss = 0.0;
        std::size_t j = 0;
        for (const auto& s : buffer.samples()) {
            const double* h = hmat.data() + j * n;
            double r = std::inner_product(h, h + n, w.begin(), 0.0);
            err[j] = s.ocv_v + r * s.current_a - s.v_measured;
            loss += sample_weight[j] * err[j] * err[j];
            ++j;
        }
        return loss / static_cast<double>(m);
    };

    OnlineUpdateResult result{model, 0.0, 0, {}};
    double lr = options.learning_rate;
    double loss = evaluate(weights);
    std::size_t rising = 0;
    std::vector<double> grad(n);
    for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
        result.loss_history.push_back(loss);
        std::fill(grad.begin(), grad.end(), 0.0);
        std::size_t j = 0;
        for (const auto& s : buffer.samples()) {
            const double* h = hmat.data() + j * n;
            double scale = 2.0 * err[j] * s.current_a * sample_weight[j];
            for (std::size_t i = 0; i < n; ++i)
                grad[i] += scale * h[i];
            ++j;
        }
        auto previous = weights;
        for (std::size_t i = 0; i < n; ++i)
            weights[i] -= lr * grad[i] / static_cast<double>(m);
        double next = evaluate(weights);
        if (!std::isfinite(next)) {
            weights = std::move(previous);
            lr *= 0.5;
            ++result.halvings;
            rising = 0;
            loss = evaluate(weights);
            continue;
        }
        rising = next > loss ? rising + 1 : 0;
        if (rising >= options.divergence_patience) {
            lr *= 0.5;
            ++result.halvings;
            rising = 0;
        }
        loss = next;
    }
    result.loss_history.push_back(loss);
    result.final_learning_rate = lr;
    result.model = model.with_weights(std::move(weights));
    return result;
}

} // namespace rctlab
