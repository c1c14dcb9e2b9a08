#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "geoctx/features.hpp"
#include "geoctx/histfn.hpp"
#include "geoctx/random.hpp"

namespace geoctx {

/// Row-major dense matrix.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double &operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    std::span<const double> row(std::size_t r) const {
        return std::span<const double>(data).subspan(r * cols, cols);
    }
};

// ---------------------------------------------------------------------------
// Layers. Each works on one sample at a time; backward passes accumulate into
// gradient buffers so a minibatch is reduced in sample order.

class FullyConnected {
public:
    FullyConnected() = default;
    FullyConnected(std::size_t in, std::size_t out);

    std::size_t in_dim() const { return weights.cols; }
    std::size_t out_dim() const { return weights.rows; }

    /// Uniform +-sqrt(6 / (fan_in + fan_out)); biases zero.
    void init(Rng &rng);

    /// y = W x + b
    void forward(std::span<const double> x, std::vector<double> &y) const;
    /// Accumulates dW += gy x^T, db += gy. Writes W^T gy into grad_x when given.
    void backward(std::span<const double> x, std::span<const double> grad_y,
                  std::vector<double> *grad_x);

    Matrix weights;
    std::vector<double> bias;
    Matrix grad_weights;
    std::vector<double> grad_bias;
};

void relu_forward(std::span<const double> x, std::vector<double> &y);
/// Gradient through ReLU given the layer's output.
void relu_backward(std::span<const double> y, std::span<double> grad);

/// Inverted dropout: kept units are scaled by 1/(1-p) at training time so the
/// layer is the identity at evaluation time.
class Dropout {
public:
    explicit Dropout(double p = 0.5);

    double rate() const { return p_; }
    /// rng == nullptr means evaluation mode (identity).
    void forward(std::span<double> x, Rng *rng);
    void backward(std::span<double> grad) const;

private:
    double p_;
    std::vector<double> mask_;
    bool active_ = false;
};

std::vector<double> concat_forward(const std::vector<std::span<const double>> &parts);
std::vector<std::vector<double>> concat_backward(std::span<const double> grad,
                                                 std::span<const std::size_t> part_dims);

struct SoftmaxResult {
    double loss = 0.0;
    std::vector<double> probs;
    std::vector<double> grad_logits;
};

/// Numerically stable softmax cross-entropy; grad = softmax - onehot(label).
SoftmaxResult softmax_ce(std::span<const double> logits, int label);
std::vector<double> softmax(std::span<const double> logits);

/// Learnable pooling radii. Output (h, k) = H_h(rho_{h,k}), laid out
/// function-major: index h * replicas + k.
class RadiusLayer {
public:
    RadiusLayer() = default;
    RadiusLayer(std::size_t fn_count, std::size_t replicas, RadiiSet radii);

    std::size_t fn_count() const { return fn_count_; }
    std::size_t replicas() const { return replicas_; }
    std::size_t out_dim() const { return fn_count_ * replicas_; }
    const RadiiSet &radii() const { return radii_; }

    /// Replicas evenly spaced over [R_min, R_max] plus +-5% jitter of the
    /// spacing, clamped into the range.
    void init(Rng &rng);

    /// `bank_values` is a (fn_count x |R|) row-major histogram bank.
    void forward(std::span<const double> bank_values, std::vector<double> &out) const;
    /// grad_rho(h, k) += grad_out(h, k) * H_h'(rho_{h,k})
    void backward(std::span<const double> bank_values, std::span<const double> grad_out);

    void clamp();

    std::vector<double> rho;
    std::vector<double> grad_rho;

private:
    std::size_t fn_count_ = 0;
    std::size_t replicas_ = 0;
    RadiiSet radii_;
};

// ---------------------------------------------------------------------------
// Network description.

struct LayerFullyConnected { std::size_t in, out; };
struct LayerRelu {};
struct LayerDropout { double p; };
struct LayerConcat { std::vector<std::size_t> part_dims; };
struct LayerRadiusLearning { std::size_t fn_count, replicas; };
struct LayerSoftmaxCE { std::size_t classes; };
using LayerSpec = std::variant<LayerFullyConnected, LayerRelu, LayerDropout, LayerConcat,
                               LayerRadiusLearning, LayerSoftmaxCE>;

std::string describe(const LayerSpec &spec);

/// One input branch. For radius-learning branches the input is a histogram
/// bank of `input_dim / radii.size()` functions.
struct BranchSpec {
    FeatureKind kind = FeatureKind::Image;
    std::size_t input_dim = 0;
    std::size_t precat = 0;    // 0: no pre-cat layer
    std::size_t replicas = 0;  // >0: radius learning layer over a histogram bank
    RadiiSet radii;            // knots, used when replicas > 0

    std::size_t fn_count() const { return replicas ? input_dim / radii.size() : 0; }
    std::size_t output_dim() const;
};

struct NetworkConfig {
    std::vector<BranchSpec> branches;
    std::size_t postcat = 0;
    std::size_t classes = 0;
    double dropout = 0.5;

    void validate() const;
    std::vector<LayerSpec> layers() const;
    /// "256/-" style notation.
    std::string width_notation() const;
};

struct TrainConfig {
    double lr = 0.1;
    double momentum = 0.9;
    double weight_decay = 0.005;
    int epochs = 30;
    int lr_step_epochs = 10;
    double lr_decay = 0.1;
    std::size_t batch_size = 128;
    std::uint64_t seed = 1;
    /// Learning-rate multiplier for radii. A radius is measured in meters
    /// and histogram slopes are ~1e-4 per meter, so the loss gradient w.r.t.
    /// a radius is tiny; at 1e8 radii move by hundreds of meters per epoch.
    double radius_lr_mult = 1e8;

    void validate() const;
    double lr_at_epoch(int epoch) const;
};

/// One training or test example: one input view per branch. Views usually
/// point into a feature cache; `owning` keeps its own copies alive instead
/// (shared, so copies of the sample stay valid).
struct Sample {
    std::vector<std::span<const double>> inputs;
    int label = -1;
    std::shared_ptr<const std::vector<std::vector<double>>> storage;

    static Sample owning(std::vector<std::vector<double>> parts, int label) {
        Sample s;
        s.label = label;
        s.storage = std::make_shared<const std::vector<std::vector<double>>>(std::move(parts));
        for (const auto &p : *s.storage) s.inputs.emplace_back(p);
        return s;
    }
};

/// Parameter view used by the optimizer and by gradient checks.
struct ParamRef {
    std::string name;
    std::span<double> value;
    std::span<double> grad;
    bool decay = false;
    bool radius = false;
    std::size_t rows = 1;  // cols = value.size() / rows
};

class Network {
public:
    Network() = default;
    explicit Network(NetworkConfig config);

    const NetworkConfig &config() const { return config_; }

    void init(std::uint64_t seed);

    /// Evaluation-mode logits.
    std::vector<double> logits(const Sample &sample) const;
    std::vector<double> predict(const Sample &sample) const;
    double loss(const Sample &sample) const;

    /// Forward and backward for one sample; gradients are accumulated scaled
    /// by `scale`. `dropout_rng == nullptr` disables dropout. Returns the loss.
    double accumulate(const Sample &sample, Rng *dropout_rng, double scale);

    void zero_grad();
    std::vector<ParamRef> params();
    void clamp_radii();

    const std::vector<RadiusLayer> &radius_layers() const { return radius_; }
    std::vector<FullyConnected> &precat_layers() { return precat_; }
    FullyConnected &postcat_layer() { return postcat_; }
    FullyConnected &output_layer() { return output_; }
    std::vector<RadiusLayer> &radius_layers() { return radius_; }

    void check_sample(const Sample &sample) const;

private:
    struct Trace;
    void forward(const Sample &sample, Trace &t, Rng *dropout_rng) const;

    NetworkConfig config_;
    std::vector<RadiusLayer> radius_;      // per branch, empty when unused
    std::vector<FullyConnected> precat_;   // per branch, empty when unused
    FullyConnected postcat_;
    FullyConnected output_;
};

/// Momentum SGD with decoupled per-parameter options.
class SgdOptimizer {
public:
    explicit SgdOptimizer(const TrainConfig &config) : config_(config) {}

    /// v <- momentum v - lr (g + wd w); w <- w + v. Radii use
    /// lr * radius_lr_mult, no decay, and are clamped afterwards.
    void step(Network &net, double lr);
    void step(std::vector<ParamRef> params, double lr);

    const std::vector<std::vector<double>> &velocity() const { return velocity_; }

private:
    TrainConfig config_;
    std::vector<std::vector<double>> velocity_;
};

struct EpochStat {
    int epoch = 0;
    double loss = 0.0;
    double lr = 0.0;
};

struct TrainResult {
    Network model;
    std::vector<EpochStat> curve;
};

using EpochCallback = std::function<void(const EpochStat &)>;

TrainResult train(const std::vector<Sample> &dataset, const NetworkConfig &net_config,
                  const TrainConfig &train_config, const EpochCallback &on_epoch = {});

// Checkpoints: "GEOCTXNN" magic, u32 version, u64 length + JSON config echo,
// u64 tensor count, then per tensor u64 name length, name, u64 rows,
// u64 cols and rows*cols little-endian doubles.
void save_checkpoint(const Network &net, const std::string &path);
Network load_checkpoint(const std::string &path);

}  // namespace geoctx
