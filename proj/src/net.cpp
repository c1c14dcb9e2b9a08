#include "geoctx/net.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "geoctx/binary_io.hpp"
#include "geoctx/error.hpp"

namespace geoctx {

using nlohmann::json;

// ---------------------------------------------------------------------------
// FullyConnected

FullyConnected::FullyConnected(std::size_t in, std::size_t out)
    : weights(out, in), bias(out, 0.0), grad_weights(out, in), grad_bias(out, 0.0) {
    if (in == 0 || out == 0) throw ShapeError("fully connected layer needs nonzero dimensions");
}

void FullyConnected::init(Rng &rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(in_dim() + out_dim()));
    for (double &w : weights.data) w = rng.uniform(-limit, limit);
    std::fill(bias.begin(), bias.end(), 0.0);
}

void FullyConnected::forward(std::span<const double> x, std::vector<double> &y) const {
    if (x.size() != in_dim()) {
        throw ShapeError("fully connected layer expects " + std::to_string(in_dim()) +
                         " inputs, got " + std::to_string(x.size()));
    }
    // One-hot and histogram inputs are mostly zero; skip those columns.
    std::vector<std::size_t> nz;
    nz.reserve(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
        if (x[j] != 0.0) nz.push_back(j);
    }
    y.assign(out_dim(), 0.0);
    for (std::size_t i = 0; i < out_dim(); ++i) {
        const double *w = weights.data.data() + i * weights.cols;
        double acc = bias[i];
        for (std::size_t j : nz) acc += w[j] * x[j];
        y[i] = acc;
    }
}

void FullyConnected::backward(std::span<const double> x, std::span<const double> grad_y,
                              std::vector<double> *grad_x) {
    if (x.size() != in_dim() || grad_y.size() != out_dim()) {
        throw ShapeError("fully connected backward shape mismatch");
    }
    std::vector<std::size_t> nz;
    for (std::size_t j = 0; j < x.size(); ++j) {
        if (x[j] != 0.0) nz.push_back(j);
    }
    for (std::size_t i = 0; i < out_dim(); ++i) {
        const double g = grad_y[i];
        grad_bias[i] += g;
        if (g == 0.0) continue;
        double *gw = grad_weights.data.data() + i * weights.cols;
        for (std::size_t j : nz) gw[j] += g * x[j];
    }
    if (grad_x) {
        grad_x->assign(in_dim(), 0.0);
        for (std::size_t i = 0; i < out_dim(); ++i) {
            const double g = grad_y[i];
            if (g == 0.0) continue;
            const double *w = weights.data.data() + i * weights.cols;
            for (std::size_t j = 0; j < in_dim(); ++j) (*grad_x)[j] += w[j] * g;
        }
    }
}

// ---------------------------------------------------------------------------
// Elementwise layers

void relu_forward(std::span<const double> x, std::vector<double> &y) {
    y.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward(std::span<const double> y, std::span<double> grad) {
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (!(y[i] > 0.0)) grad[i] = 0.0;
    }
}

Dropout::Dropout(double p) : p_(p) {
    if (!(p >= 0.0 && p < 1.0)) throw InvalidArgument("dropout rate must lie in [0, 1)");
}

void Dropout::forward(std::span<double> x, Rng *rng) {
    active_ = rng != nullptr && p_ > 0.0;
    if (!active_) return;
    const double scale = 1.0 / (1.0 - p_);
    mask_.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        mask_[i] = rng->bernoulli(p_) ? 0.0 : scale;
        x[i] *= mask_[i];
    }
}

void Dropout::backward(std::span<double> grad) const {
    if (!active_) return;
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] *= mask_[i];
}

std::vector<double> concat_forward(const std::vector<std::span<const double>> &parts) {
    std::vector<double> out;
    std::size_t total = 0;
    for (const auto &p : parts) total += p.size();
    out.reserve(total);
    for (const auto &p : parts) out.insert(out.end(), p.begin(), p.end());
    return out;
}

std::vector<std::vector<double>> concat_backward(std::span<const double> grad,
                                                 std::span<const std::size_t> part_dims) {
    const std::size_t total = std::accumulate(part_dims.begin(), part_dims.end(), std::size_t{0});
    if (total != grad.size()) {
        throw ShapeError("concat backward: parts sum to " + std::to_string(total) +
                         " but gradient has " + std::to_string(grad.size()) + " entries");
    }
    std::vector<std::vector<double>> out;
    std::size_t off = 0;
    for (std::size_t d : part_dims) {
        out.emplace_back(grad.begin() + static_cast<std::ptrdiff_t>(off),
                         grad.begin() + static_cast<std::ptrdiff_t>(off + d));
        off += d;
    }
    return out;
}

std::vector<double> softmax(std::span<const double> logits) {
    const double mx = *std::max_element(logits.begin(), logits.end());
    std::vector<double> p(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - mx);
        sum += p[i];
    }
    for (double &v : p) v /= sum;
    return p;
}

SoftmaxResult softmax_ce(std::span<const double> logits, int label) {
    if (logits.empty()) throw ShapeError("softmax over zero classes");
    if (label < 0 || static_cast<std::size_t>(label) >= logits.size()) {
        throw InvalidArgument("label " + std::to_string(label) + " outside [0, " +
                              std::to_string(logits.size()) + ")");
    }
    const double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double z : logits) sum += std::exp(z - mx);
    const double log_z = mx + std::log(sum);

    SoftmaxResult r;
    r.loss = log_z - logits[static_cast<std::size_t>(label)];
    r.probs.resize(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) r.probs[i] = std::exp(logits[i] - log_z);
    r.grad_logits = r.probs;
    r.grad_logits[static_cast<std::size_t>(label)] -= 1.0;
    return r;
}

// ---------------------------------------------------------------------------
// RadiusLayer

RadiusLayer::RadiusLayer(std::size_t fn_count, std::size_t replicas, RadiiSet radii)
    : rho(fn_count * replicas, 0.0),
      grad_rho(fn_count * replicas, 0.0),
      fn_count_(fn_count),
      replicas_(replicas),
      radii_(std::move(radii)) {
    if (fn_count == 0 || replicas == 0) throw ShapeError("radius layer needs functions and replicas");
    if (radii_.size() < 2) throw InvalidArgument("radius layer needs at least two radii");
    const double mid = 0.5 * (radii_.min() + radii_.max());
    std::fill(rho.begin(), rho.end(), mid);
}

void RadiusLayer::init(Rng &rng) {
    const double lo = radii_.min();
    const double hi = radii_.max();
    const double spacing = replicas_ > 1 ? (hi - lo) / static_cast<double>(replicas_ - 1) : hi - lo;
    for (std::size_t h = 0; h < fn_count_; ++h) {
        for (std::size_t k = 0; k < replicas_; ++k) {
            const double base = replicas_ > 1 ? lo + spacing * static_cast<double>(k) : 0.5 * (lo + hi);
            rho[h * replicas_ + k] = base + rng.uniform(-0.05, 0.05) * spacing;
        }
    }
    clamp();
}

void RadiusLayer::forward(std::span<const double> bank_values, std::vector<double> &out) const {
    const std::size_t nr = radii_.size();
    if (bank_values.size() != fn_count_ * nr) {
        throw ShapeError("radius layer expects " + std::to_string(fn_count_) +
                         " histogram functions, got " + std::to_string(bank_values.size() / nr));
    }
    out.resize(out_dim());
    for (std::size_t h = 0; h < fn_count_; ++h) {
        const auto vals = bank_values.subspan(h * nr, nr);
        for (std::size_t k = 0; k < replicas_; ++k) {
            out[h * replicas_ + k] = pwl_eval(radii_.values(), vals, rho[h * replicas_ + k]);
        }
    }
}

void RadiusLayer::backward(std::span<const double> bank_values, std::span<const double> grad_out) {
    const std::size_t nr = radii_.size();
    if (bank_values.size() != fn_count_ * nr || grad_out.size() != out_dim()) {
        throw ShapeError("radius layer backward shape mismatch");
    }
    for (std::size_t h = 0; h < fn_count_; ++h) {
        const auto vals = bank_values.subspan(h * nr, nr);
        for (std::size_t k = 0; k < replicas_; ++k) {
            const std::size_t i = h * replicas_ + k;
            if (grad_out[i] == 0.0) continue;
            grad_rho[i] += grad_out[i] * pwl_deriv(radii_.values(), vals, rho[i]);
        }
    }
}

void RadiusLayer::clamp() {
    for (double &r : rho) r = std::clamp(r, radii_.min(), radii_.max());
}

// ---------------------------------------------------------------------------
// Configuration

std::string describe(const LayerSpec &spec) {
    struct V {
        std::string operator()(const LayerFullyConnected &l) const {
            return "FullyConnected(" + std::to_string(l.in) + "," + std::to_string(l.out) + ")";
        }
        std::string operator()(const LayerRelu &) const { return "ReLU"; }
        std::string operator()(const LayerDropout &l) const {
            std::ostringstream os;
            os << "Dropout(" << l.p << ")";
            return os.str();
        }
        std::string operator()(const LayerConcat &l) const {
            std::string s = "Concat(";
            for (std::size_t i = 0; i < l.part_dims.size(); ++i) {
                s += (i ? "," : "") + std::to_string(l.part_dims[i]);
            }
            return s + ")";
        }
        std::string operator()(const LayerRadiusLearning &l) const {
            return "RadiusLearning(" + std::to_string(l.fn_count) + "," + std::to_string(l.replicas) + ")";
        }
        std::string operator()(const LayerSoftmaxCE &l) const {
            return "SoftmaxCE(" + std::to_string(l.classes) + ")";
        }
    };
    return std::visit(V{}, spec);
}

std::size_t BranchSpec::output_dim() const {
    if (precat) return precat;
    if (replicas) return fn_count() * replicas;
    return input_dim;
}

void NetworkConfig::validate() const {
    if (branches.empty()) throw ConfigError("network has no input branches");
    if (classes < 1) throw ConfigError("network needs at least one class");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
    for (const auto &b : branches) {
        if (b.input_dim == 0) throw ConfigError("branch '" + feature_name(b.kind) + "' has no inputs");
        if (b.replicas) {
            if (b.radii.size() < 2) throw ConfigError("radius learning needs at least two radii");
            if (b.input_dim % b.radii.size() != 0) {
                throw ConfigError("branch '" + feature_name(b.kind) +
                                  "' input is not a whole number of histogram functions");
            }
        }
    }
}

std::vector<LayerSpec> NetworkConfig::layers() const {
    std::vector<LayerSpec> out;
    std::vector<std::size_t> parts;
    for (const auto &b : branches) {
        std::size_t dim = b.input_dim;
        if (b.replicas) {
            out.push_back(LayerRadiusLearning{b.fn_count(), b.replicas});
            dim = b.fn_count() * b.replicas;
        }
        if (b.precat) {
            out.push_back(LayerFullyConnected{dim, b.precat});
            out.push_back(LayerRelu{});
            out.push_back(LayerDropout{dropout});
            dim = b.precat;
        }
        parts.push_back(dim);
    }
    const std::size_t cat = std::accumulate(parts.begin(), parts.end(), std::size_t{0});
    out.push_back(LayerConcat{parts});
    std::size_t dim = cat;
    if (postcat) {
        out.push_back(LayerFullyConnected{dim, postcat});
        out.push_back(LayerRelu{});
        out.push_back(LayerDropout{dropout});
        dim = postcat;
    }
    out.push_back(LayerFullyConnected{dim, classes});
    out.push_back(LayerSoftmaxCE{classes});
    return out;
}

std::string NetworkConfig::width_notation() const {
    std::size_t pre = 0;
    for (const auto &b : branches) pre = std::max(pre, b.precat);
    return (pre ? std::to_string(pre) : std::string("-")) + "/" +
           (postcat ? std::to_string(postcat) : std::string("-"));
}

void TrainConfig::validate() const {
    if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
    if (!(weight_decay >= 0.0)) throw ConfigError("weight decay must be non-negative");
    if (epochs < 1) throw ConfigError("epochs must be at least 1");
    if (lr_step_epochs < 1) throw ConfigError("learning-rate step must be at least 1 epoch");
    if (!(lr_decay > 0.0)) throw ConfigError("learning-rate decay must be positive");
    if (batch_size < 1) throw ConfigError("batch size must be at least 1");
    if (!(radius_lr_mult >= 0.0)) throw ConfigError("radius learning-rate multiplier must be >= 0");
}

double TrainConfig::lr_at_epoch(int epoch) const {
    return lr * std::pow(lr_decay, epoch / lr_step_epochs);
}

// ---------------------------------------------------------------------------
// Network

struct Network::Trace {
    std::vector<std::vector<double>> radius_out;
    std::vector<std::vector<double>> pre_out;
    std::vector<Dropout> pre_drop;
    std::vector<double> cat;
    std::vector<double> post;
    Dropout post_drop;
    std::vector<double> logits;

    std::span<const double> branch_output(const Sample &s, const NetworkConfig &cfg, std::size_t b) const {
        if (cfg.branches[b].precat) return pre_out[b];
        if (cfg.branches[b].replicas) return radius_out[b];
        return s.inputs[b];
    }
};

Network::Network(NetworkConfig config) : config_(std::move(config)) {
    config_.validate();
    radius_.resize(config_.branches.size());
    precat_.resize(config_.branches.size());
    std::size_t cat = 0;
    for (std::size_t b = 0; b < config_.branches.size(); ++b) {
        const BranchSpec &spec = config_.branches[b];
        std::size_t dim = spec.input_dim;
        if (spec.replicas) {
            radius_[b] = RadiusLayer(spec.fn_count(), spec.replicas, spec.radii);
            dim = radius_[b].out_dim();
        }
        if (spec.precat) precat_[b] = FullyConnected(dim, spec.precat);
        cat += spec.output_dim();
    }
    if (config_.postcat) postcat_ = FullyConnected(cat, config_.postcat);
    output_ = FullyConnected(config_.postcat ? config_.postcat : cat, config_.classes);
}

void Network::init(std::uint64_t seed) {
    Rng rng = Rng::stream(seed, "init");
    for (std::size_t b = 0; b < config_.branches.size(); ++b) {
        if (config_.branches[b].replicas) radius_[b].init(rng);
        if (config_.branches[b].precat) precat_[b].init(rng);
    }
    if (config_.postcat) postcat_.init(rng);
    output_.init(rng);
}

void Network::check_sample(const Sample &s) const {
    if (s.inputs.size() != config_.branches.size()) {
        throw ShapeError("sample has " + std::to_string(s.inputs.size()) + " inputs, network expects " +
                         std::to_string(config_.branches.size()));
    }
    for (std::size_t b = 0; b < s.inputs.size(); ++b) {
        if (s.inputs[b].size() != config_.branches[b].input_dim) {
            throw ShapeError("input '" + feature_name(config_.branches[b].kind) + "' has dimension " +
                             std::to_string(s.inputs[b].size()) + ", network expects " +
                             std::to_string(config_.branches[b].input_dim));
        }
    }
}

void Network::forward(const Sample &s, Trace &t, Rng *rng) const {
    check_sample(s);
    const std::size_t nb = config_.branches.size();
    t.radius_out.resize(nb);
    t.pre_out.resize(nb);
    t.pre_drop.assign(nb, Dropout(config_.dropout));
    std::vector<std::span<const double>> parts;
    parts.reserve(nb);
    for (std::size_t b = 0; b < nb; ++b) {
        const BranchSpec &spec = config_.branches[b];
        std::span<const double> x = s.inputs[b];
        if (spec.replicas) {
            radius_[b].forward(x, t.radius_out[b]);
            x = t.radius_out[b];
        }
        if (spec.precat) {
            std::vector<double> z;
            precat_[b].forward(x, z);
            relu_forward(z, t.pre_out[b]);
            t.pre_drop[b].forward(t.pre_out[b], rng);
        }
        parts.push_back(t.branch_output(s, config_, b));
    }
    t.cat = concat_forward(parts);
    std::span<const double> top = t.cat;
    if (config_.postcat) {
        std::vector<double> z;
        postcat_.forward(t.cat, z);
        relu_forward(z, t.post);
        t.post_drop = Dropout(config_.dropout);
        t.post_drop.forward(t.post, rng);
        top = t.post;
    }
    output_.forward(top, t.logits);
}

std::vector<double> Network::logits(const Sample &sample) const {
    Trace t;
    forward(sample, t, nullptr);
    return t.logits;
}

std::vector<double> Network::predict(const Sample &sample) const { return softmax(logits(sample)); }

double Network::loss(const Sample &sample) const { return softmax_ce(logits(sample), sample.label).loss; }

double Network::accumulate(const Sample &s, Rng *rng, double scale) {
    Trace t;
    forward(s, t, rng);
    SoftmaxResult sm = softmax_ce(t.logits, s.label);
    for (double &g : sm.grad_logits) g *= scale;

    std::vector<double> grad;
    if (config_.postcat) {
        output_.backward(t.post, sm.grad_logits, &grad);
        t.post_drop.backward(grad);
        relu_backward(t.post, grad);
        std::vector<double> grad_cat;
        postcat_.backward(t.cat, grad, &grad_cat);
        grad = std::move(grad_cat);
    } else {
        output_.backward(t.cat, sm.grad_logits, &grad);
    }

    std::vector<std::size_t> dims;
    for (const auto &b : config_.branches) dims.push_back(b.output_dim());
    auto grads = concat_backward(grad, dims);
    for (std::size_t b = 0; b < config_.branches.size(); ++b) {
        const BranchSpec &spec = config_.branches[b];
        if (!spec.precat && !spec.replicas) continue;
        std::vector<double> &g = grads[b];
        if (spec.precat) {
            t.pre_drop[b].backward(g);
            relu_backward(t.pre_out[b], g);
            std::span<const double> x = spec.replicas ? std::span<const double>(t.radius_out[b])
                                                      : std::span<const double>(s.inputs[b]);
            std::vector<double> gx;
            precat_[b].backward(x, g, spec.replicas ? &gx : nullptr);
            if (spec.replicas) g = std::move(gx);
        }
        if (spec.replicas) radius_[b].backward(s.inputs[b], g);
    }
    return sm.loss;
}

void Network::zero_grad() {
    for (const ParamRef &p : params()) std::fill(p.grad.begin(), p.grad.end(), 0.0);
}

std::vector<ParamRef> Network::params() {
    std::vector<ParamRef> out;
    auto add_fc = [&](const std::string &prefix, FullyConnected &fc) {
        out.push_back({prefix + ".weight", fc.weights.data, fc.grad_weights.data, true, false,
                       fc.weights.rows});
        out.push_back({prefix + ".bias", fc.bias, fc.grad_bias, false, false, 1});
    };
    for (std::size_t b = 0; b < config_.branches.size(); ++b) {
        const std::string prefix = "branch." + feature_name(config_.branches[b].kind);
        if (config_.branches[b].replicas) {
            out.push_back({prefix + ".radius", radius_[b].rho, radius_[b].grad_rho, false, true,
                           radius_[b].fn_count()});
        }
        if (config_.branches[b].precat) add_fc(prefix + ".precat", precat_[b]);
    }
    if (config_.postcat) add_fc("postcat", postcat_);
    add_fc("output", output_);
    return out;
}

void Network::clamp_radii() {
    for (std::size_t b = 0; b < config_.branches.size(); ++b) {
        if (config_.branches[b].replicas) radius_[b].clamp();
    }
}

// ---------------------------------------------------------------------------
// Optimizer and training loop

void SgdOptimizer::step(std::vector<ParamRef> params, double lr) {
    if (velocity_.empty()) {
        for (const auto &p : params) velocity_.emplace_back(p.value.size(), 0.0);
    }
    if (velocity_.size() != params.size()) throw ShapeError("optimizer state does not match parameters");
    for (std::size_t i = 0; i < params.size(); ++i) {
        ParamRef &p = params[i];
        std::vector<double> &v = velocity_[i];
        if (v.size() != p.value.size()) throw ShapeError("optimizer state does not match " + p.name);
        const double rate = p.radius ? lr * config_.radius_lr_mult : lr;
        const double wd = p.decay ? config_.weight_decay : 0.0;
        for (std::size_t j = 0; j < v.size(); ++j) {
            v[j] = config_.momentum * v[j] - rate * (p.grad[j] + wd * p.value[j]);
            p.value[j] += v[j];
        }
    }
}

void SgdOptimizer::step(Network &net, double lr) {
    step(net.params(), lr);
    net.clamp_radii();
}

TrainResult train(const std::vector<Sample> &dataset, const NetworkConfig &net_config,
                  const TrainConfig &tc, const EpochCallback &on_epoch) {
    tc.validate();
    if (dataset.empty()) throw InvalidArgument("training set is empty");
    TrainResult result{Network(net_config), {}};
    Network &net = result.model;
    for (const Sample &s : dataset) {
        net.check_sample(s);
        if (s.label < 0 || static_cast<std::size_t>(s.label) >= net_config.classes) {
            throw InvalidArgument("training label " + std::to_string(s.label) + " outside [0, " +
                                  std::to_string(net_config.classes) + ")");
        }
    }
    net.init(tc.seed);

    Rng shuffle_rng = Rng::stream(tc.seed, "shuffle");
    Rng dropout_rng = Rng::stream(tc.seed, "dropout");
    SgdOptimizer opt(tc);
    std::vector<std::size_t> order(dataset.size());

    for (int epoch = 0; epoch < tc.epochs; ++epoch) {
        const double lr = tc.lr_at_epoch(epoch);
        std::iota(order.begin(), order.end(), std::size_t{0});
        shuffle_rng.shuffle(order);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += tc.batch_size) {
            const std::size_t end = std::min(order.size(), start + tc.batch_size);
            const double scale = 1.0 / static_cast<double>(end - start);
            net.zero_grad();
            for (std::size_t i = start; i < end; ++i) {
                epoch_loss += net.accumulate(dataset[order[i]], &dropout_rng, scale);
            }
            opt.step(net, lr);
        }
        EpochStat stat{epoch + 1, epoch_loss / static_cast<double>(dataset.size()), lr};
        result.curve.push_back(stat);
        if (on_epoch) on_epoch(stat);
    }
    return result;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr char kCheckpointMagic[9] = "GEOCTXNN";
constexpr std::uint32_t kCheckpointVersion = 1;

json config_to_json(const NetworkConfig &c) {
    json branches = json::array();
    for (const auto &b : c.branches) {
        json rj = json::array();
        for (double r : b.radii.values()) rj.push_back(r);
        branches.push_back({{"feature", feature_name(b.kind)},
                            {"input_dim", b.input_dim},
                            {"precat", b.precat},
                            {"replicas", b.replicas},
                            {"radii", rj}});
    }
    return {{"branches", branches},
            {"postcat", c.postcat},
            {"classes", c.classes},
            {"dropout", c.dropout}};
}

NetworkConfig config_from_json(const json &j) {
    NetworkConfig c;
    for (const auto &bj : j.at("branches")) {
        BranchSpec b;
        b.kind = feature_from_name(bj.at("feature").get<std::string>());
        b.input_dim = bj.at("input_dim").get<std::size_t>();
        b.precat = bj.at("precat").get<std::size_t>();
        b.replicas = bj.at("replicas").get<std::size_t>();
        const auto radii = bj.at("radii").get<std::vector<double>>();
        if (!radii.empty()) b.radii = RadiiSet(radii);
        c.branches.push_back(std::move(b));
    }
    c.postcat = j.at("postcat").get<std::size_t>();
    c.classes = j.at("classes").get<std::size_t>();
    c.dropout = j.at("dropout").get<double>();
    return c;
}

}  // namespace

void save_checkpoint(const Network &net, const std::string &path) {
    Network &mut = const_cast<Network &>(net);  // params() exposes mutable views
    const json header = {{"format", "geoctx-checkpoint"},
                         {"version", kCheckpointVersion},
                         {"network", config_to_json(net.config())}};
    BinaryWriter w(path);
    w.bytes(kCheckpointMagic, 8);
    w.u32(kCheckpointVersion);
    w.str(header.dump());
    const auto params = mut.params();
    w.u64(params.size());
    for (const ParamRef &p : params) {
        w.str(p.name);
        const std::size_t rows = p.rows;
        const std::size_t cols = p.value.size() / rows;
        w.u64(rows);
        w.u64(cols);
        w.f64s(p.value);
    }
    w.close();
}

Network load_checkpoint(const std::string &path) {
    BinaryReader r(path);
    r.expect_magic(kCheckpointMagic);
    const std::uint32_t version = r.u32();
    if (version != kCheckpointVersion) {
        throw FormatError("checkpoint version " + std::to_string(version) + " is not supported");
    }
    const json header = json::parse(r.str(std::size_t{1} << 24));
    Network net(config_from_json(header.at("network")));
    auto params = net.params();
    const std::uint64_t count = r.u64();
    if (count != params.size()) throw FormatError("checkpoint tensor count does not match its network");
    for (ParamRef &p : params) {
        const std::string name = r.str(1024);
        const std::uint64_t rows = r.u64();
        const std::uint64_t cols = r.u64();
        if (name != p.name || rows * cols != p.value.size()) {
            throw FormatError("checkpoint tensor '" + name + "' does not match '" + p.name + "'");
        }
        r.f64s(p.value);
    }
    return net;
}

}  // namespace geoctx
