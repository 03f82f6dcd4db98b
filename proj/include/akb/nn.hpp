#pragma once

#include <optional>
#include <string>

#include "akb/common.hpp"

namespace akb {

// Conv1D -> BN+ReLU -> Linear -> BN+ReLU -> Linear -> softmax.
//
// The conv layer has kernel 3, stride 3 and no bias: with 6 input and 10
// output channels this is the unique unpadded integer solution giving 180
// weights and a 10 x 20 output for a length-60 input.
struct ModelConfig {
    int input_length = 60;  // k
    int in_channels = 6;
    int conv_channels = 10;
    int conv_kernel = 3;
    int conv_stride = 3;
    int hidden = 64;
    int classes = 5;
    double bn_epsilon = 1e-5;
    double bn_momentum = 0.1;

    int conv_steps() const { return (input_length - conv_kernel) / conv_stride + 1; }
    int flat_size() const { return conv_channels * conv_steps(); }

    void validate() const {
        if (input_length < conv_kernel)
            throw DataError("model config: input shorter than conv kernel");
        if (conv_kernel < 1 || conv_stride < 1 || conv_channels < 1 || in_channels < 1 ||
            hidden < 1 || classes < 2)
            throw DataError("model config: non-positive dimension");
        if (!(bn_epsilon > 0.0)) throw DataError("model config: bn_epsilon must be positive");
    }
};

template <typename Scalar>
struct BatchNorm {
    VectorX<Scalar> gamma, beta, running_mean, running_var;

    void init(int features) {
        gamma = VectorX<Scalar>::Ones(features);
        beta = VectorX<Scalar>::Zero(features);
        running_mean = VectorX<Scalar>::Zero(features);
        running_var = VectorX<Scalar>::Ones(features);
    }
};

// Parameter layout:
//   conv_weight: (conv_kernel * in_channels) x conv_channels; row index
//                j*in_channels + c_in for kernel tap j.
//   fc weights:  (in_features) x (out_features); activations multiply on
//                the left as row vectors.
// The conv output flattens channel-major: feature index c*conv_steps + s.
template <typename Scalar>
struct Model {
    ModelConfig config;
    MatrixX<Scalar> conv_weight;
    BatchNorm<Scalar> bn1;
    MatrixX<Scalar> fc1_weight;
    VectorX<Scalar> fc1_bias;
    BatchNorm<Scalar> bn2;
    MatrixX<Scalar> fc2_weight;
    VectorX<Scalar> fc2_bias;

    static Model zeros(const ModelConfig& cfg) {
        cfg.validate();
        Model m;
        m.config = cfg;
        m.conv_weight = MatrixX<Scalar>::Zero(cfg.conv_kernel * cfg.in_channels, cfg.conv_channels);
        m.bn1.init(cfg.flat_size());
        m.fc1_weight = MatrixX<Scalar>::Zero(cfg.flat_size(), cfg.hidden);
        m.fc1_bias = VectorX<Scalar>::Zero(cfg.hidden);
        m.bn2.init(cfg.hidden);
        m.fc2_weight = MatrixX<Scalar>::Zero(cfg.hidden, cfg.classes);
        m.fc2_bias = VectorX<Scalar>::Zero(cfg.classes);
        return m;
    }

    template <typename Other>
    Model<Other> cast() const {
        Model<Other> m;
        m.config = config;
        m.conv_weight = conv_weight.template cast<Other>();
        m.bn1.gamma = bn1.gamma.template cast<Other>();
        m.bn1.beta = bn1.beta.template cast<Other>();
        m.bn1.running_mean = bn1.running_mean.template cast<Other>();
        m.bn1.running_var = bn1.running_var.template cast<Other>();
        m.fc1_weight = fc1_weight.template cast<Other>();
        m.fc1_bias = fc1_bias.template cast<Other>();
        m.bn2.gamma = bn2.gamma.template cast<Other>();
        m.bn2.beta = bn2.beta.template cast<Other>();
        m.bn2.running_mean = bn2.running_mean.template cast<Other>();
        m.bn2.running_var = bn2.running_var.template cast<Other>();
        m.fc2_weight = fc2_weight.template cast<Other>();
        m.fc2_bias = fc2_bias.template cast<Other>();
        return m;
    }
};

// Visits every persisted tensor in the documented serialization order.
// The callable receives (name, matrix-or-vector reference).
template <typename Scalar, typename F>
void for_each_tensor(Model<Scalar>& m, F&& f) {
    f("conv_weight", m.conv_weight);
    f("bn1_gamma", m.bn1.gamma);
    f("bn1_beta", m.bn1.beta);
    f("bn1_running_mean", m.bn1.running_mean);
    f("bn1_running_var", m.bn1.running_var);
    f("fc1_weight", m.fc1_weight);
    f("fc1_bias", m.fc1_bias);
    f("bn2_gamma", m.bn2.gamma);
    f("bn2_beta", m.bn2.beta);
    f("bn2_running_mean", m.bn2.running_mean);
    f("bn2_running_var", m.bn2.running_var);
    f("fc2_weight", m.fc2_weight);
    f("fc2_bias", m.fc2_bias);
}
template <typename Scalar, typename F>
void for_each_tensor(const Model<Scalar>& m, F&& f) {
    for_each_tensor(const_cast<Model<Scalar>&>(m),
                    [&f](const char* name, const auto& tensor) { f(name, tensor); });
}

template <typename Scalar>
struct Gradients {
    MatrixX<Scalar> conv_weight;
    VectorX<Scalar> bn1_gamma, bn1_beta;
    MatrixX<Scalar> fc1_weight;
    VectorX<Scalar> fc1_bias;
    VectorX<Scalar> bn2_gamma, bn2_beta;
    MatrixX<Scalar> fc2_weight;
    VectorX<Scalar> fc2_bias;

    static Gradients zeros(const ModelConfig& cfg) {
        Gradients g;
        g.conv_weight =
            MatrixX<Scalar>::Zero(cfg.conv_kernel * cfg.in_channels, cfg.conv_channels);
        g.bn1_gamma = VectorX<Scalar>::Zero(cfg.flat_size());
        g.bn1_beta = VectorX<Scalar>::Zero(cfg.flat_size());
        g.fc1_weight = MatrixX<Scalar>::Zero(cfg.flat_size(), cfg.hidden);
        g.fc1_bias = VectorX<Scalar>::Zero(cfg.hidden);
        g.bn2_gamma = VectorX<Scalar>::Zero(cfg.hidden);
        g.bn2_beta = VectorX<Scalar>::Zero(cfg.hidden);
        g.fc2_weight = MatrixX<Scalar>::Zero(cfg.hidden, cfg.classes);
        g.fc2_bias = VectorX<Scalar>::Zero(cfg.classes);
        return g;
    }
};

template <typename Scalar, typename F>
void for_each_gradient(Gradients<Scalar>& g, F&& f) {
    f("conv_weight", g.conv_weight);
    f("bn1_gamma", g.bn1_gamma);
    f("bn1_beta", g.bn1_beta);
    f("fc1_weight", g.fc1_weight);
    f("fc1_bias", g.fc1_bias);
    f("bn2_gamma", g.bn2_gamma);
    f("bn2_beta", g.bn2_beta);
    f("fc2_weight", g.fc2_weight);
    f("fc2_bias", g.fc2_bias);
}
template <typename Scalar, typename F>
void for_each_gradient(const Gradients<Scalar>& g, F&& f) {
    for_each_gradient(const_cast<Gradients<Scalar>&>(g),
                      [&f](const char* name, const auto& tensor) { f(name, tensor); });
}

// Pairs each trainable tensor of the model with its gradient slot.
// BN running statistics are deliberately not visited.
template <typename Scalar, typename F>
void for_each_trainable(Model<Scalar>& m, Gradients<Scalar>& g, F&& f) {
    f("conv_weight", m.conv_weight, g.conv_weight);
    f("bn1_gamma", m.bn1.gamma, g.bn1_gamma);
    f("bn1_beta", m.bn1.beta, g.bn1_beta);
    f("fc1_weight", m.fc1_weight, g.fc1_weight);
    f("fc1_bias", m.fc1_bias, g.fc1_bias);
    f("bn2_gamma", m.bn2.gamma, g.bn2_gamma);
    f("bn2_beta", m.bn2.beta, g.bn2_beta);
    f("fc2_weight", m.fc2_weight, g.fc2_weight);
    f("fc2_bias", m.fc2_bias, g.fc2_bias);
}

struct LayerCounts {
    long conv = 0;
    long bn1 = 0;
    long fc1 = 0;
    long bn2 = 0;
    long fc2 = 0;
    long total() const { return conv + bn1 + fc1 + bn2 + fc2; }
};

// BN rows count all four tensors (gamma, beta and both running stats),
// matching how the deployed parameter table tallies them.
inline LayerCounts layer_param_counts(const ModelConfig& cfg) {
    LayerCounts c;
    c.conv = static_cast<long>(cfg.conv_channels) * cfg.in_channels * cfg.conv_kernel;
    c.bn1 = 4L * cfg.flat_size();
    c.fc1 = static_cast<long>(cfg.flat_size()) * cfg.hidden + cfg.hidden;
    c.bn2 = 4L * cfg.hidden;
    c.fc2 = static_cast<long>(cfg.hidden) * cfg.classes + cfg.classes;
    return c;
}

template <typename Scalar>
long param_count(const Model<Scalar>& m) {
    long n = 0;
    for_each_tensor(m, [&n](const char*, const auto& t) { n += t.size(); });
    return n;
}

enum class ForwardMode { Train, Eval };
enum class LossReduction { Sum, Mean };

// Per-layer activations and batch statistics cached for backprop.
// Only populated by train-mode forwards.
template <typename Scalar>
struct ForwardTrace {
    MatrixX<Scalar> input;      // N x (k*6), time-major rows
    MatrixX<Scalar> conv_flat;  // N x flat, channel-major features
    VectorX<Scalar> bn1_mean, bn1_var;
    MatrixX<Scalar> bn1_xhat;
    MatrixX<Scalar> act1;  // post-ReLU, N x flat
    MatrixX<Scalar> fc1_out;
    VectorX<Scalar> bn2_mean, bn2_var;
    MatrixX<Scalar> bn2_xhat;
    MatrixX<Scalar> act2;  // post-ReLU, N x hidden
    MatrixX<Scalar> probs;
};

template <typename Scalar>
struct ForwardResult {
    MatrixX<Scalar> logits;  // N x classes
    MatrixX<Scalar> probs;   // rows sum to 1
    std::optional<ForwardTrace<Scalar>> trace;
};

namespace detail {

template <typename Scalar>
void check_finite(const MatrixX<Scalar>& m, const char* layer) {
    if (!m.allFinite())
        throw NumericalError(std::string("non-finite activations after ") + layer);
}

template <typename Scalar>
MatrixX<Scalar> softmax_rows(const MatrixX<Scalar>& logits) {
    MatrixX<Scalar> probs(logits.rows(), logits.cols());
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        const Scalar peak = logits.row(i).maxCoeff();
        probs.row(i) = (logits.row(i).array() - peak).exp();
        probs.row(i) /= probs.row(i).sum();
    }
    return probs;
}

}  // namespace detail

// Batch forward pass. Input rows are windows flattened time-major
// (t*in_channels + c). Train mode normalizes with batch statistics and
// returns a trace; eval mode uses the running statistics. The model is
// never mutated; running-stat updates are the trainer's job.
template <typename Scalar>
ForwardResult<Scalar> forward(const Model<Scalar>& m, const MatrixX<Scalar>& input,
                              ForwardMode mode) {
    const ModelConfig& cfg = m.config;
    const Eigen::Index n = input.rows();
    if (input.cols() != cfg.input_length * cfg.in_channels)
        throw DataError("forward: input width " + std::to_string(input.cols()) +
                        " does not match k*channels");
    if (mode == ForwardMode::Train && n < 2)
        throw DataError("forward: train mode needs a batch of >= 2 for batch statistics");
    if (!input.allFinite()) throw NumericalError("non-finite values in forward input");

    const int steps = cfg.conv_steps();
    const int flat = cfg.flat_size();
    const int patch = cfg.conv_kernel * cfg.in_channels;
    const Scalar eps = static_cast<Scalar>(cfg.bn_epsilon);

    // Conv1D: patches are contiguous column blocks of the time-major input.
    MatrixX<Scalar> conv_flat(n, flat);
    for (int s = 0; s < steps; ++s) {
        const auto block = input.middleCols(static_cast<Eigen::Index>(s) * cfg.conv_stride *
                                                cfg.in_channels,
                                            patch);
        const MatrixX<Scalar> out = block * m.conv_weight;  // n x conv_channels
        for (int c = 0; c < cfg.conv_channels; ++c) conv_flat.col(c * steps + s) = out.col(c);
    }
    detail::check_finite(conv_flat, "conv1");

    ForwardTrace<Scalar> trace;
    const bool training = mode == ForwardMode::Train;

    auto batch_norm = [&](const MatrixX<Scalar>& x, const BatchNorm<Scalar>& bn,
                          VectorX<Scalar>* mean_out, VectorX<Scalar>* var_out,
                          MatrixX<Scalar>* xhat_out) {
        MatrixX<Scalar> xhat(x.rows(), x.cols());
        if (training) {
            const VectorX<Scalar> mean = x.colwise().mean();
            const VectorX<Scalar> var =
                (x.rowwise() - mean.transpose()).array().square().colwise().mean();
            xhat = (x.rowwise() - mean.transpose()).array().rowwise() /
                   (var.transpose().array() + eps).sqrt();
            if (mean_out) *mean_out = mean;
            if (var_out) *var_out = var;
        } else {
            xhat = (x.rowwise() - bn.running_mean.transpose()).array().rowwise() /
                   (bn.running_var.transpose().array() + eps).sqrt();
        }
        if (xhat_out) *xhat_out = xhat;
        MatrixX<Scalar> y = xhat.array().rowwise() * bn.gamma.transpose().array();
        y.rowwise() += bn.beta.transpose();
        return y;
    };

    MatrixX<Scalar> act1 = batch_norm(conv_flat, m.bn1, training ? &trace.bn1_mean : nullptr,
                                      training ? &trace.bn1_var : nullptr,
                                      training ? &trace.bn1_xhat : nullptr);
    detail::check_finite(act1, "bn1");
    act1 = act1.cwiseMax(Scalar(0));

    MatrixX<Scalar> fc1_out = act1 * m.fc1_weight;
    fc1_out.rowwise() += m.fc1_bias.transpose();
    detail::check_finite(fc1_out, "fc1");

    MatrixX<Scalar> act2 = batch_norm(fc1_out, m.bn2, training ? &trace.bn2_mean : nullptr,
                                      training ? &trace.bn2_var : nullptr,
                                      training ? &trace.bn2_xhat : nullptr);
    detail::check_finite(act2, "bn2");
    act2 = act2.cwiseMax(Scalar(0));

    ForwardResult<Scalar> result;
    result.logits = act2 * m.fc2_weight;
    result.logits.rowwise() += m.fc2_bias.transpose();
    detail::check_finite(result.logits, "fc2");
    result.probs = detail::softmax_rows(result.logits);
    detail::check_finite(result.probs, "softmax");

    if (training) {
        trace.input = input;
        trace.conv_flat = std::move(conv_flat);
        trace.act1 = std::move(act1);
        trace.fc1_out = std::move(fc1_out);
        trace.act2 = std::move(act2);
        trace.probs = result.probs;
        result.trace = std::move(trace);
    }
    return result;
}

// Cross-entropy over the batch: sum (default) or mean of -log p[true].
// Zero probabilities are clamped at 1e-12 (with a warning) so the loss
// stays finite on saturated predictions.
template <typename Scalar>
double cross_entropy(const MatrixX<Scalar>& probs, const Eigen::VectorXi& classes,
                     LossReduction reduction = LossReduction::Sum) {
    if (probs.rows() != classes.size())
        throw DataError("cross_entropy: batch size mismatch");
    double total = 0.0;
    bool clamped = false;
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
        const int c = classes[i];
        if (c < 0 || c >= probs.cols())
            throw DataError("cross_entropy: class id out of range");
        double p = static_cast<double>(probs(i, c));
        if (p < 1e-12) {
            p = 1e-12;
            clamped = true;
        }
        total -= std::log(p);
    }
    if (clamped) log_warn("cross_entropy: clamped zero probability at 1e-12");
    if (reduction == LossReduction::Mean && probs.rows() > 0)
        total /= static_cast<double>(probs.rows());
    return total;
}

// Analytic gradients of the cross-entropy loss for every trainable
// tensor, from a train-mode trace of the same batch. Deterministic.
template <typename Scalar>
Gradients<Scalar> backward(const Model<Scalar>& m, const ForwardTrace<Scalar>& trace,
                           const Eigen::VectorXi& classes,
                           LossReduction reduction = LossReduction::Sum) {
    const ModelConfig& cfg = m.config;
    const Eigen::Index n = trace.probs.rows();
    if (n == 0 || trace.input.rows() != n)
        throw DataError("backward: trace does not match a train-mode forward");
    if (classes.size() != n) throw DataError("backward: class vector does not match batch");
    const Scalar eps = static_cast<Scalar>(cfg.bn_epsilon);
    const int steps = cfg.conv_steps();
    const int patch = cfg.conv_kernel * cfg.in_channels;

    Gradients<Scalar> g = Gradients<Scalar>::zeros(cfg);

    // Softmax + cross-entropy combined: dL/dlogits = probs - onehot.
    MatrixX<Scalar> dlogits = trace.probs;
    for (Eigen::Index i = 0; i < n; ++i) dlogits(i, classes[i]) -= Scalar(1);
    if (reduction == LossReduction::Mean) dlogits /= static_cast<Scalar>(n);

    g.fc2_weight = trace.act2.transpose() * dlogits;
    g.fc2_bias = dlogits.colwise().sum().transpose();
    const MatrixX<Scalar> dact2 = dlogits * m.fc2_weight.transpose();

    // ReLU mask: act2 holds max(bn2_out, 0), so act2 > 0 marks pass-through.
    const MatrixX<Scalar> dbn2 =
        (trace.act2.array() > Scalar(0)).select(dact2, MatrixX<Scalar>::Zero(n, cfg.hidden));

    using RowVec = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;
    auto bn_backward = [n, eps](const MatrixX<Scalar>& dy, const MatrixX<Scalar>& xhat,
                                const VectorX<Scalar>& var, const VectorX<Scalar>& gamma,
                                VectorX<Scalar>& dgamma, VectorX<Scalar>& dbeta) {
        dgamma = (dy.array() * xhat.array()).colwise().sum().transpose();
        dbeta = dy.colwise().sum().transpose();
        const MatrixX<Scalar> dxhat = dy.array().rowwise() * gamma.transpose().array();
        const RowVec sum_dxhat = dxhat.colwise().sum();
        const RowVec sum_dxhat_xhat = (dxhat.array() * xhat.array()).colwise().sum();
        const RowVec scale = (var.transpose().array() + eps).rsqrt() / Scalar(n);
        MatrixX<Scalar> dx = (Scalar(n) * dxhat).array().rowwise() - sum_dxhat.array();
        dx.array() -= xhat.array().rowwise() * sum_dxhat_xhat.array();
        dx.array().rowwise() *= scale.array();
        return dx;
    };

    const MatrixX<Scalar> dfc1_out =
        bn_backward(dbn2, trace.bn2_xhat, trace.bn2_var, m.bn2.gamma, g.bn2_gamma, g.bn2_beta);

    g.fc1_weight = trace.act1.transpose() * dfc1_out;
    g.fc1_bias = dfc1_out.colwise().sum().transpose();
    const MatrixX<Scalar> dact1 = dfc1_out * m.fc1_weight.transpose();

    const MatrixX<Scalar> dbn1 =
        (trace.act1.array() > Scalar(0)).select(dact1, MatrixX<Scalar>::Zero(n, cfg.flat_size()));

    const MatrixX<Scalar> dconv_flat =
        bn_backward(dbn1, trace.bn1_xhat, trace.bn1_var, m.bn1.gamma, g.bn1_gamma, g.bn1_beta);

    // Conv weight gradient: accumulate patch' * dOut over output steps.
    MatrixX<Scalar> dout_s(n, cfg.conv_channels);
    for (int s = 0; s < steps; ++s) {
        for (int c = 0; c < cfg.conv_channels; ++c) dout_s.col(c) = dconv_flat.col(c * steps + s);
        const auto block = trace.input.middleCols(
            static_cast<Eigen::Index>(s) * cfg.conv_stride * cfg.in_channels, patch);
        g.conv_weight.noalias() += block.transpose() * dout_s;
    }
    return g;
}

}  // namespace akb
