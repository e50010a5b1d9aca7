#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "fairstream/errors.hpp"

namespace fairstream {

enum class Activation { Tanh, Relu, Sigmoid };

Activation activation_from_string(const std::string& name);
std::string to_string(Activation a);

struct ModelConfig {
    int feature_dim = 0;
    int hidden_dim = 20;
    int gnn_layers = 1;
    std::vector<int> output_hidden_dims = {10};
    Activation activation = Activation::Tanh;

    void validate() const;
};

struct ParamBlock {
    std::size_t offset = 0;
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
    std::size_t size() const { return std::size_t(rows) * std::size_t(cols); }
};

// Flat parameter buffer layout. Gate rows of the recurrent blocks are stacked
// [input; forget; cell; output], each hidden_dim tall.
struct ParamLayout {
    ParamBlock lstm_wx; // 4H x F
    ParamBlock lstm_wh; // 4H x H
    ParamBlock lstm_b;  // 4H x 1
    std::vector<ParamBlock> gnn_w; // H x 2H per layer
    std::vector<ParamBlock> gnn_b; // H x 1  per layer
    std::vector<ParamBlock> head_w;
    std::vector<ParamBlock> head_b;
    std::size_t total = 0;

    static ParamLayout make(const ModelConfig& cfg);
};

// All learnable parameters plus Adam moments, stored as one flat 64-bit
// buffer so optimization, serialization and finite differencing can treat the
// model generically.
class ModelState {
public:
    ModelState(ModelConfig cfg, std::uint64_t seed);

    const ModelConfig& config() const { return cfg_; }
    const ParamLayout& layout() const { return layout_; }
    std::size_t param_count() const { return layout_.total; }

    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }
    std::vector<double>& adam_m() { return m_; }
    const std::vector<double>& adam_m() const { return m_; }
    std::vector<double>& adam_v() { return v_; }
    const std::vector<double>& adam_v() const { return v_; }
    std::int64_t step() const { return step_; }
    std::int64_t& step_ref() { return step_; }

    Eigen::Map<const Eigen::MatrixXd> view(const ParamBlock& b) const {
        return {params_.data() + b.offset, b.rows, b.cols};
    }
    Eigen::Map<Eigen::MatrixXd> view(const ParamBlock& b) {
        return {params_.data() + b.offset, b.rows, b.cols};
    }

private:
    ModelConfig cfg_;
    ParamLayout layout_;
    std::vector<double> params_;
    std::vector<double> m_;
    std::vector<double> v_;
    std::int64_t step_ = 0;
};

// Neighbor reference inside a batch: index into the batch context plus the
// (rescaled) aggregation weight.
struct BatchNeighbor {
    int ctx = -1;
    double weight = 0.0;
};

struct BatchObservation {
    int node = -1; // context index
    int t = -1;
    double y = 0.0;
};

// A mini-batch: the prediction targets (level 0) together with the sampled
// neighborhood context they need, expanded one level per aggregation layer.
// Every referenced neighbor has its feature sequence in the context.
struct Batch {
    std::vector<int> segment_ids;                    // context segment ids
    std::vector<const Eigen::MatrixXd*> features;    // per context node, rows >= time_steps
    std::vector<std::vector<BatchNeighbor>> neighbors;
    std::vector<int> level;                          // 0 = prediction target
    int time_steps = 0;
    std::vector<BatchObservation> observations;

    int size() const { return int(features.size()); }
    void validate(const ModelConfig& cfg) const;
};

struct ForwardCache;

struct ForwardResult {
    Eigen::MatrixXd predictions; // context x time_steps; NaN where not computed
    double loss = 0.0;           // NaN when the batch carries no observations
    std::shared_ptr<ForwardCache> cache;
};

// Full forward pass: recurrent encoding per context node, gnn_layers rounds of
// weighted-mean aggregation, dense head for level-0 nodes. Never mutates the
// state; set record for a subsequent backward().
ForwardResult forward(const ModelState& state, const Batch& batch, bool record = false);

// Exact reverse-mode gradient of the recorded forward pass with respect to
// every parameter (backpropagation through the full unroll).
std::vector<double> backward(const ModelState& state, const Batch& batch,
                             const ForwardResult& result);

struct AdamParams {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// Standard Adam update with bias correction; throws NumericError on
// non-finite gradients.
void adam_step(ModelState& state, const std::vector<double>& grad,
               const AdamParams& params = {});

// Mean squared error over the observation set; throws on an empty set.
double mse_loss(const Eigen::MatrixXd& predictions, const std::vector<BatchObservation>& obs);

// Single-sequence encoder: x is time x feature_dim, result time x hidden_dim.
Eigen::MatrixXd encode_sequence(const ModelState& state, const Eigen::MatrixXd& x);

// Gradient of <upstream_dh, encode_sequence(x)> with respect to every
// parameter; lets tests check the recurrent unroll in isolation.
std::vector<double> encode_sequence_grad(const ModelState& state, const Eigen::MatrixXd& x,
                                         const Eigen::MatrixXd& upstream_dh);

// One aggregation layer applied to embedding columns: weighted-mean pooling of
// neighbor embeddings (zero vector for empty neighborhoods), concatenation
// with the node's own embedding, then the layer's affine map and nonlinearity.
Eigen::MatrixXd aggregate(const Eigen::MatrixXd& z_prev,
                          const std::vector<std::vector<BatchNeighbor>>& neighbors,
                          const Eigen::MatrixXd& w, const Eigen::VectorXd& b,
                          Activation activation);

// Dense output head applied to one embedding column.
double predict_head(const ModelState& state, const Eigen::VectorXd& z);

} // namespace fairstream
