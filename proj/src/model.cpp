#include "fairstream/model.hpp"

#include <cmath>
#include <limits>

#include "fairstream/rng.hpp"

namespace fairstream {

namespace {

constexpr std::uint64_t kStreamModelInit = 0x6d6f64656cULL;

void apply_activation(Eigen::MatrixXd& m, Activation a) {
    switch (a) {
        case Activation::Tanh: m = m.array().tanh().matrix(); break;
        case Activation::Relu: m = m.array().max(0.0).matrix(); break;
        case Activation::Sigmoid: m = (1.0 + (-m.array()).exp()).inverse().matrix(); break;
    }
}

// Derivative expressed through the activation output.
Eigen::ArrayXXd activation_grad(const Eigen::MatrixXd& y, Activation a) {
    switch (a) {
        case Activation::Tanh: return 1.0 - y.array().square();
        case Activation::Relu: return (y.array() > 0.0).cast<double>();
        case Activation::Sigmoid: return y.array() * (1.0 - y.array());
    }
    throw ValidationError("unknown activation");
}

Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& m) {
    return (1.0 + (-m.array()).exp()).inverse().matrix();
}

// LSTM internals for one batched unroll; column c of every matrix belongs to
// context node c.
struct LstmTape {
    std::vector<Eigen::MatrixXd> gate_i, gate_f, gate_g, gate_o; // post-activation
    std::vector<Eigen::MatrixXd> cell, tanh_cell;
    std::vector<Eigen::MatrixXd> hidden;
};

LstmTape lstm_forward(const Eigen::Map<const Eigen::MatrixXd>& wx,
                      const Eigen::Map<const Eigen::MatrixXd>& wh,
                      const Eigen::Map<const Eigen::MatrixXd>& b,
                      const std::vector<Eigen::MatrixXd>& xs, bool record) {
    const Eigen::Index h = wh.cols();
    const Eigen::Index n = xs.empty() ? 0 : xs.front().cols();
    const int steps = int(xs.size());
    LstmTape tape;
    tape.hidden.reserve(size_t(steps));
    if (record) {
        tape.gate_i.reserve(size_t(steps));
        tape.gate_f.reserve(size_t(steps));
        tape.gate_g.reserve(size_t(steps));
        tape.gate_o.reserve(size_t(steps));
        tape.cell.reserve(size_t(steps));
        tape.tanh_cell.reserve(size_t(steps));
    }

    Eigen::MatrixXd h_prev = Eigen::MatrixXd::Zero(h, n);
    Eigen::MatrixXd c_prev = Eigen::MatrixXd::Zero(h, n);
    for (int t = 0; t < steps; ++t) {
        Eigen::MatrixXd pre = wx * xs[size_t(t)] + wh * h_prev;
        pre.colwise() += b.col(0);
        Eigen::MatrixXd gi = sigmoid(pre.middleRows(0, h));
        Eigen::MatrixXd gf = sigmoid(pre.middleRows(h, h));
        Eigen::MatrixXd gg = pre.middleRows(2 * h, h).array().tanh().matrix();
        Eigen::MatrixXd go = sigmoid(pre.middleRows(3 * h, h));
        Eigen::MatrixXd cell = gf.cwiseProduct(c_prev) + gi.cwiseProduct(gg);
        Eigen::MatrixXd tc = cell.array().tanh().matrix();
        Eigen::MatrixXd hid = go.cwiseProduct(tc);
        c_prev = cell;
        h_prev = hid;
        if (record) {
            tape.gate_i.push_back(std::move(gi));
            tape.gate_f.push_back(std::move(gf));
            tape.gate_g.push_back(std::move(gg));
            tape.gate_o.push_back(std::move(go));
            tape.cell.push_back(std::move(cell));
            tape.tanh_cell.push_back(std::move(tc));
        }
        tape.hidden.push_back(h_prev);
    }
    return tape;
}

// Backpropagation through time given the per-step gradients flowing into the
// hidden outputs. Accumulates into the gradient views.
void lstm_backward(const Eigen::Map<const Eigen::MatrixXd>& wx,
                   const Eigen::Map<const Eigen::MatrixXd>& wh, const LstmTape& tape,
                   const std::vector<Eigen::MatrixXd>& xs,
                   const std::vector<Eigen::MatrixXd>& d_hidden,
                   Eigen::Map<Eigen::MatrixXd> g_wx, Eigen::Map<Eigen::MatrixXd> g_wh,
                   Eigen::Map<Eigen::MatrixXd> g_b) {
    const Eigen::Index h = wh.cols();
    const int steps = int(xs.size());
    if (steps == 0) return;
    const Eigen::Index n = xs.front().cols();

    Eigen::MatrixXd d_cell_next = Eigen::MatrixXd::Zero(h, n);
    Eigen::MatrixXd d_hidden_carry = Eigen::MatrixXd::Zero(h, n);
    Eigen::MatrixXd d_gates(4 * h, n);
    for (int t = steps - 1; t >= 0; --t) {
        const auto& gi = tape.gate_i[size_t(t)];
        const auto& gf = tape.gate_f[size_t(t)];
        const auto& gg = tape.gate_g[size_t(t)];
        const auto& go = tape.gate_o[size_t(t)];
        const auto& tc = tape.tanh_cell[size_t(t)];

        Eigen::MatrixXd dh = d_hidden[size_t(t)] + d_hidden_carry;
        Eigen::MatrixXd d_out = dh.cwiseProduct(tc);
        Eigen::MatrixXd d_cell =
            d_cell_next + (dh.array() * go.array() * (1.0 - tc.array().square())).matrix();

        Eigen::MatrixXd d_in = d_cell.cwiseProduct(gg);
        Eigen::MatrixXd d_gate_g = d_cell.cwiseProduct(gi);
        d_cell_next = d_cell.cwiseProduct(gf);

        d_gates.middleRows(0, h) = (d_in.array() * gi.array() * (1.0 - gi.array())).matrix();
        if (t > 0) {
            const auto& c_prev = tape.cell[size_t(t - 1)];
            d_gates.middleRows(h, h) =
                (d_cell.array() * c_prev.array() * gf.array() * (1.0 - gf.array())).matrix();
        } else {
            d_gates.middleRows(h, h).setZero(); // c_{-1} = 0
        }
        d_gates.middleRows(2 * h, h) = (d_gate_g.array() * (1.0 - gg.array().square())).matrix();
        d_gates.middleRows(3 * h, h) = (d_out.array() * go.array() * (1.0 - go.array())).matrix();

        g_wx += d_gates * xs[size_t(t)].transpose();
        if (t > 0) g_wh += d_gates * tape.hidden[size_t(t - 1)].transpose();
        g_b.col(0) += d_gates.rowwise().sum();
        d_hidden_carry = wh.transpose() * d_gates;
    }
}

// Weighted-mean pooling plus affine transform; writes the pooled neighbor
// embedding into *pool_out when requested.
Eigen::MatrixXd aggregate_with_pool(const Eigen::MatrixXd& z_prev,
                                    const std::vector<std::vector<BatchNeighbor>>& neighbors,
                                    const Eigen::Map<const Eigen::MatrixXd>& w,
                                    const Eigen::Map<const Eigen::MatrixXd>& b,
                                    Activation activation, Eigen::MatrixXd* pool_out) {
    const Eigen::Index h = z_prev.rows();
    const Eigen::Index n = z_prev.cols();
    Eigen::MatrixXd pooled = Eigen::MatrixXd::Zero(h, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& nbrs = neighbors[size_t(i)];
        double weight_sum = 0.0;
        for (const auto& nb : nbrs) {
            pooled.col(i) += nb.weight * z_prev.col(nb.ctx);
            weight_sum += nb.weight;
        }
        if (weight_sum > 0.0) pooled.col(i) /= weight_sum;
    }
    Eigen::MatrixXd z = w.leftCols(h) * z_prev + w.rightCols(h) * pooled;
    z.colwise() += b.col(0);
    apply_activation(z, activation);
    if (pool_out) *pool_out = std::move(pooled);
    return z;
}

} // namespace

Activation activation_from_string(const std::string& name) {
    if (name == "tanh") return Activation::Tanh;
    if (name == "relu") return Activation::Relu;
    if (name == "sigmoid") return Activation::Sigmoid;
    throw ValidationError("unknown activation: " + name);
}

std::string to_string(Activation a) {
    switch (a) {
        case Activation::Tanh: return "tanh";
        case Activation::Relu: return "relu";
        case Activation::Sigmoid: return "sigmoid";
    }
    throw ValidationError("unknown activation");
}

void ModelConfig::validate() const {
    if (feature_dim < 1) throw ValidationError("feature_dim must be >= 1");
    if (hidden_dim < 1) throw ValidationError("hidden_dim must be >= 1");
    if (gnn_layers < 1) throw ValidationError("gnn_layers must be >= 1");
    for (int d : output_hidden_dims)
        if (d < 1) throw ValidationError("output head dims must be >= 1");
}

ParamLayout ParamLayout::make(const ModelConfig& cfg) {
    cfg.validate();
    ParamLayout lay;
    std::size_t at = 0;
    auto add = [&at](Eigen::Index rows, Eigen::Index cols) {
        ParamBlock b{at, rows, cols};
        at += b.size();
        return b;
    };
    const Eigen::Index h = cfg.hidden_dim, f = cfg.feature_dim;
    lay.lstm_wx = add(4 * h, f);
    lay.lstm_wh = add(4 * h, h);
    lay.lstm_b = add(4 * h, 1);
    for (int l = 0; l < cfg.gnn_layers; ++l) {
        lay.gnn_w.push_back(add(h, 2 * h));
        lay.gnn_b.push_back(add(h, 1));
    }
    Eigen::Index in_dim = h;
    for (int d : cfg.output_hidden_dims) {
        lay.head_w.push_back(add(d, in_dim));
        lay.head_b.push_back(add(d, 1));
        in_dim = d;
    }
    lay.head_w.push_back(add(1, in_dim));
    lay.head_b.push_back(add(1, 1));
    lay.total = at;
    return lay;
}

ModelState::ModelState(ModelConfig cfg, std::uint64_t seed)
    : cfg_(std::move(cfg)), layout_(ParamLayout::make(cfg_)) {
    params_.assign(layout_.total, 0.0);
    m_.assign(layout_.total, 0.0);
    v_.assign(layout_.total, 0.0);

    Rng rng = Rng::stream(seed, kStreamModelInit);
    auto fill = [&](const ParamBlock& b, double fan_in) {
        const double bound = 1.0 / std::sqrt(fan_in);
        for (std::size_t k = 0; k < b.size(); ++k)
            params_[b.offset + k] = rng.uniform(-bound, bound);
    };
    const double lstm_fan = double(cfg_.feature_dim + cfg_.hidden_dim);
    fill(layout_.lstm_wx, lstm_fan);
    fill(layout_.lstm_wh, lstm_fan);
    fill(layout_.lstm_b, lstm_fan);
    for (size_t l = 0; l < layout_.gnn_w.size(); ++l) {
        fill(layout_.gnn_w[l], double(2 * cfg_.hidden_dim));
        fill(layout_.gnn_b[l], double(2 * cfg_.hidden_dim));
    }
    for (size_t k = 0; k < layout_.head_w.size(); ++k) {
        fill(layout_.head_w[k], double(layout_.head_w[k].cols));
        fill(layout_.head_b[k], double(layout_.head_w[k].cols));
    }
}

void Batch::validate(const ModelConfig& cfg) const {
    const int n = size();
    if (int(segment_ids.size()) != n || int(neighbors.size()) != n || int(level.size()) != n)
        throw ValidationError("batch arrays disagree on the context size");
    if (time_steps < 1) throw ValidationError("batch needs at least one time step");
    for (int i = 0; i < n; ++i) {
        const Eigen::MatrixXd* x = features[size_t(i)];
        if (!x) throw ValidationError("missing feature sequence in batch context");
        if (x->cols() != cfg.feature_dim)
            throw ValidationError("feature dimension mismatch in batch");
        if (x->rows() < time_steps)
            throw ValidationError("feature sequence shorter than the batch window");
        for (const auto& nb : neighbors[size_t(i)]) {
            if (nb.ctx < 0 || nb.ctx >= n)
                throw ValidationError("neighbor embedding missing from batch context");
            if (!(nb.weight > 0.0)) throw ValidationError("neighbor weights must be positive");
            if (level[size_t(nb.ctx)] > level[size_t(i)] + 1)
                throw ValidationError("neighbor context level too deep for aggregation");
        }
    }
    for (const auto& obs : observations) {
        if (obs.node < 0 || obs.node >= n || level[size_t(obs.node)] != 0)
            throw ValidationError("observation must reference a level-0 batch node");
        if (obs.t < 0 || obs.t >= time_steps)
            throw ValidationError("observation outside the batch window");
    }
}

double mse_loss(const Eigen::MatrixXd& predictions, const std::vector<BatchObservation>& obs) {
    if (obs.empty()) throw ValidationError("loss over an empty observation set");
    double sse = 0.0;
    for (const auto& o : obs) {
        const double e = predictions(o.node, o.t) - o.y;
        sse += e * e;
    }
    return sse / double(obs.size());
}

struct ForwardCache {
    std::vector<Eigen::MatrixXd> xs; // feature_dim x context per step
    LstmTape lstm;
    std::vector<std::vector<Eigen::MatrixXd>> pooled; // [layer][t]
    std::vector<std::vector<Eigen::MatrixXd>> z;      // [layer][t], post-activation
    std::vector<std::vector<Eigen::MatrixXd>> head_hidden; // [hidden layer][t]
};

ForwardResult forward(const ModelState& state, const Batch& batch, bool record) {
    const ModelConfig& cfg = state.config();
    batch.validate(cfg);
    const int n = batch.size();
    const int steps = batch.time_steps;
    const int layers = cfg.gnn_layers;

    // Layer l is evaluated for nodes within level <= layers - l; the head only
    // for level-0 nodes.
    auto active_in_layer = [&](int node, int layer) {
        return batch.level[size_t(node)] <= layers - layer;
    };

    std::vector<Eigen::MatrixXd> xs(size_t(steps));
    for (int t = 0; t < steps; ++t) {
        xs[size_t(t)].resize(cfg.feature_dim, n);
        for (int i = 0; i < n; ++i)
            xs[size_t(t)].col(i) = batch.features[size_t(i)]->row(t).transpose();
    }

    LstmTape tape = lstm_forward(state.view(state.layout().lstm_wx),
                                 state.view(state.layout().lstm_wh),
                                 state.view(state.layout().lstm_b), xs, record);

    ForwardResult result;
    result.predictions.setConstant(n, steps, std::numeric_limits<double>::quiet_NaN());
    auto cache = std::make_shared<ForwardCache>();
    if (record) {
        cache->pooled.resize(size_t(layers));
        cache->z.resize(size_t(layers));
        cache->head_hidden.resize(state.config().output_hidden_dims.size());
    }

    const size_t n_head = state.layout().head_w.size();
    for (int t = 0; t < steps; ++t) {
        Eigen::MatrixXd z_prev = tape.hidden[size_t(t)];
        for (int l = 1; l <= layers; ++l) {
            Eigen::MatrixXd pooled;
            Eigen::MatrixXd z = aggregate_with_pool(
                z_prev, batch.neighbors, state.view(state.layout().gnn_w[size_t(l - 1)]),
                state.view(state.layout().gnn_b[size_t(l - 1)]), cfg.activation, &pooled);
            for (int i = 0; i < n; ++i)
                if (!active_in_layer(i, l)) {
                    z.col(i).setZero();
                    pooled.col(i).setZero();
                }
            if (record) {
                cache->pooled[size_t(l - 1)].push_back(std::move(pooled));
                cache->z[size_t(l - 1)].push_back(z);
            }
            z_prev = std::move(z);
        }

        // Output head, columns for all nodes; only level-0 predictions kept.
        Eigen::MatrixXd v = std::move(z_prev);
        for (size_t k = 0; k + 1 < n_head; ++k) {
            Eigen::MatrixXd next = state.view(state.layout().head_w[k]) * v;
            next.colwise() += state.view(state.layout().head_b[k]).col(0);
            apply_activation(next, cfg.activation);
            if (record) cache->head_hidden[k].push_back(next);
            v = std::move(next);
        }
        Eigen::MatrixXd y = state.view(state.layout().head_w[n_head - 1]) * v;
        y.colwise() += state.view(state.layout().head_b[n_head - 1]).col(0);
        for (int i = 0; i < n; ++i)
            if (batch.level[size_t(i)] == 0) result.predictions(i, t) = y(0, i);
    }

    if (record) {
        cache->xs = std::move(xs);
        cache->lstm = std::move(tape);
        result.cache = std::move(cache);
    }

    result.loss = batch.observations.empty() ? std::numeric_limits<double>::quiet_NaN()
                                             : mse_loss(result.predictions, batch.observations);
    return result;
}

std::vector<double> backward(const ModelState& state, const Batch& batch,
                             const ForwardResult& result) {
    if (!result.cache) throw ValidationError("backward requires a recorded forward pass");
    if (batch.observations.empty())
        throw ValidationError("backward over an empty observation set");
    const ModelConfig& cfg = state.config();
    const ForwardCache& cache = *result.cache;
    const int n = batch.size();
    const int steps = batch.time_steps;
    const int h = cfg.hidden_dim;
    const int layers = cfg.gnn_layers;
    const ParamLayout& lay = state.layout();

    std::vector<double> grad(lay.total, 0.0);
    auto gview = [&grad](const ParamBlock& b) {
        return Eigen::Map<Eigen::MatrixXd>(grad.data() + b.offset, b.rows, b.cols);
    };

    // dL/dz for the topmost aggregation layer, accumulated per time step.
    std::vector<Eigen::MatrixXd> dz(size_t(steps));
    for (int t = 0; t < steps; ++t) dz[size_t(t)] = Eigen::MatrixXd::Zero(h, n);

    const size_t n_head = lay.head_w.size();
    const double inv_count = 1.0 / double(batch.observations.size());
    // Input column of head layer k for a given (node, t).
    auto head_input = [&](size_t k, int node, int t) -> Eigen::VectorXd {
        if (k > 0) return cache.head_hidden[k - 1][size_t(t)].col(node);
        return cache.z[size_t(layers - 1)][size_t(t)].col(node);
    };
    for (const auto& obs : batch.observations) {
        const double dy = 2.0 * inv_count * (result.predictions(obs.node, obs.t) - obs.y);
        // Walk the head backwards for this column.
        Eigen::VectorXd dv = dy * state.view(lay.head_w[n_head - 1]).transpose().col(0);
        {
            const Eigen::VectorXd v_in = head_input(n_head - 1, obs.node, obs.t);
            gview(lay.head_w[n_head - 1]).row(0) += dy * v_in.transpose();
            gview(lay.head_b[n_head - 1])(0, 0) += dy;
        }
        for (int k = int(n_head) - 2; k >= 0; --k) {
            const Eigen::VectorXd v_out = cache.head_hidden[size_t(k)][size_t(obs.t)].col(obs.node);
            const Eigen::VectorXd v_in = head_input(size_t(k), obs.node, obs.t);
            const Eigen::VectorXd dpre =
                (dv.array() * activation_grad(v_out, cfg.activation).col(0)).matrix();
            gview(lay.head_w[size_t(k)]) += dpre * v_in.transpose();
            gview(lay.head_b[size_t(k)]).col(0) += dpre;
            dv = state.view(lay.head_w[size_t(k)]).transpose() * dpre;
        }
        dz[size_t(obs.t)].col(obs.node) += dv;
    }

    // Aggregation layers in reverse.
    for (int l = layers; l >= 1; --l) {
        const auto w = state.view(lay.gnn_w[size_t(l - 1)]);
        auto g_w = gview(lay.gnn_w[size_t(l - 1)]);
        auto g_b = gview(lay.gnn_b[size_t(l - 1)]);
        std::vector<Eigen::MatrixXd> dz_prev(size_t(steps));
        for (int t = 0; t < steps; ++t) {
            const Eigen::MatrixXd& z_out = cache.z[size_t(l - 1)][size_t(t)];
            const Eigen::MatrixXd& pooled = cache.pooled[size_t(l - 1)][size_t(t)];
            const Eigen::MatrixXd& z_in =
                l > 1 ? cache.z[size_t(l - 2)][size_t(t)] : cache.lstm.hidden[size_t(t)];

            Eigen::MatrixXd dpre =
                (dz[size_t(t)].array() * activation_grad(z_out, cfg.activation)).matrix();
            g_w.leftCols(h) += dpre * z_in.transpose();
            g_w.rightCols(h) += dpre * pooled.transpose();
            g_b.col(0) += dpre.rowwise().sum();

            Eigen::MatrixXd d_self = w.leftCols(h).transpose() * dpre;
            Eigen::MatrixXd d_pool = w.rightCols(h).transpose() * dpre;
            dz_prev[size_t(t)] = std::move(d_self);
            for (int i = 0; i < n; ++i) {
                if (batch.level[size_t(i)] > layers - l) continue;
                const auto& nbrs = batch.neighbors[size_t(i)];
                if (nbrs.empty()) continue;
                double weight_sum = 0.0;
                for (const auto& nb : nbrs) weight_sum += nb.weight;
                for (const auto& nb : nbrs)
                    dz_prev[size_t(t)].col(nb.ctx) +=
                        (nb.weight / weight_sum) * d_pool.col(i);
            }
        }
        dz = std::move(dz_prev);
    }

    lstm_backward(state.view(lay.lstm_wx), state.view(lay.lstm_wh), cache.lstm, cache.xs, dz,
                  gview(lay.lstm_wx), gview(lay.lstm_wh), gview(lay.lstm_b));
    return grad;
}

void adam_step(ModelState& state, const std::vector<double>& grad, const AdamParams& p) {
    if (grad.size() != state.param_count())
        throw ValidationError("gradient size does not match the parameter count");
    for (std::size_t k = 0; k < grad.size(); ++k)
        if (!std::isfinite(grad[k]))
            throw NumericError("non-finite gradient at parameter index " + std::to_string(k));

    const std::int64_t t = ++state.step_ref();
    const double bias1 = 1.0 - std::pow(p.beta1, double(t));
    const double bias2 = 1.0 - std::pow(p.beta2, double(t));
    auto& theta = state.params();
    auto& m = state.adam_m();
    auto& v = state.adam_v();
    for (std::size_t k = 0; k < grad.size(); ++k) {
        m[k] = p.beta1 * m[k] + (1.0 - p.beta1) * grad[k];
        v[k] = p.beta2 * v[k] + (1.0 - p.beta2) * grad[k] * grad[k];
        const double m_hat = m[k] / bias1;
        const double v_hat = v[k] / bias2;
        theta[k] -= p.learning_rate * m_hat / (std::sqrt(v_hat) + p.epsilon);
    }
}

Eigen::MatrixXd encode_sequence(const ModelState& state, const Eigen::MatrixXd& x) {
    const ModelConfig& cfg = state.config();
    if (x.cols() != cfg.feature_dim)
        throw ValidationError("sequence feature dimension mismatch");
    std::vector<Eigen::MatrixXd> xs(size_t(x.rows()));
    for (Eigen::Index t = 0; t < x.rows(); ++t) xs[size_t(t)] = x.row(t).transpose();
    LstmTape tape = lstm_forward(state.view(state.layout().lstm_wx),
                                 state.view(state.layout().lstm_wh),
                                 state.view(state.layout().lstm_b), xs, false);
    Eigen::MatrixXd out(x.rows(), cfg.hidden_dim);
    for (Eigen::Index t = 0; t < x.rows(); ++t) out.row(t) = tape.hidden[size_t(t)].transpose();
    return out;
}

std::vector<double> encode_sequence_grad(const ModelState& state, const Eigen::MatrixXd& x,
                                         const Eigen::MatrixXd& upstream_dh) {
    const ModelConfig& cfg = state.config();
    if (x.cols() != cfg.feature_dim)
        throw ValidationError("sequence feature dimension mismatch");
    if (upstream_dh.rows() != x.rows() || upstream_dh.cols() != cfg.hidden_dim)
        throw ValidationError("upstream gradient shape mismatch");
    std::vector<Eigen::MatrixXd> xs(size_t(x.rows()));
    std::vector<Eigen::MatrixXd> dh(size_t(x.rows()));
    for (Eigen::Index t = 0; t < x.rows(); ++t) {
        xs[size_t(t)] = x.row(t).transpose();
        dh[size_t(t)] = upstream_dh.row(t).transpose();
    }
    LstmTape tape = lstm_forward(state.view(state.layout().lstm_wx),
                                 state.view(state.layout().lstm_wh),
                                 state.view(state.layout().lstm_b), xs, true);
    std::vector<double> grad(state.param_count(), 0.0);
    auto gview = [&grad](const ParamBlock& b) {
        return Eigen::Map<Eigen::MatrixXd>(grad.data() + b.offset, b.rows, b.cols);
    };
    lstm_backward(state.view(state.layout().lstm_wx), state.view(state.layout().lstm_wh), tape,
                  xs, dh, gview(state.layout().lstm_wx), gview(state.layout().lstm_wh),
                  gview(state.layout().lstm_b));
    return grad;
}

Eigen::MatrixXd aggregate(const Eigen::MatrixXd& z_prev,
                          const std::vector<std::vector<BatchNeighbor>>& neighbors,
                          const Eigen::MatrixXd& w, const Eigen::VectorXd& b,
                          Activation activation) {
    if (int(neighbors.size()) != int(z_prev.cols()))
        throw ValidationError("one neighbor list per embedding column required");
    if (w.cols() != 2 * z_prev.rows())
        throw ValidationError("aggregation weight shape mismatch");
    for (const auto& nbrs : neighbors)
        for (const auto& nb : nbrs)
            if (nb.ctx < 0 || nb.ctx >= int(z_prev.cols()))
                throw ValidationError("neighbor embedding missing");
    Eigen::Map<const Eigen::MatrixXd> wm(w.data(), w.rows(), w.cols());
    Eigen::Map<const Eigen::MatrixXd> bm(b.data(), b.rows(), 1);
    return aggregate_with_pool(z_prev, neighbors, wm, bm, activation, nullptr);
}

double predict_head(const ModelState& state, const Eigen::VectorXd& z) {
    const ParamLayout& lay = state.layout();
    if (z.rows() != state.config().hidden_dim)
        throw ValidationError("embedding dimension mismatch");
    Eigen::VectorXd v = z;
    const size_t n_head = lay.head_w.size();
    for (size_t k = 0; k + 1 < n_head; ++k) {
        Eigen::MatrixXd next = state.view(lay.head_w[k]) * v;
        next.col(0) += state.view(lay.head_b[k]).col(0);
        apply_activation(next, state.config().activation);
        v = next.col(0);
    }
    return (state.view(lay.head_w[n_head - 1]) * v)(0, 0) +
           state.view(lay.head_b[n_head - 1])(0, 0);
}

} // namespace fairstream
