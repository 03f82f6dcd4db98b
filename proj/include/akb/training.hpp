#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "akb/labeling.hpp"
#include "akb/nn.hpp"

namespace akb {

struct TrainConfig {
    int epochs = 10;
    int batch_size = 64;
    double learning_rate = 0.0001;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    std::uint64_t seed = 0;
    bool shuffle = true;
    LossReduction reduction = LossReduction::Sum;

    void validate() const {
        if (epochs < 0) throw DataError("train config: epochs must be >= 0");
        if (batch_size < 2) throw DataError("train config: batch_size must be >= 2");
        if (!(learning_rate > 0.0)) throw DataError("train config: learning_rate must be positive");
    }
};

template <typename Scalar>
struct OptimizerState {
    Gradients<Scalar> first_moment;
    Gradients<Scalar> second_moment;
    long step = 0;

    static OptimizerState zeros(const ModelConfig& cfg) {
        return {Gradients<Scalar>::zeros(cfg), Gradients<Scalar>::zeros(cfg), 0};
    }
};

struct EpochStats {
    double loss = 0.0;      // summed cross-entropy over the epoch
    double accuracy = 0.0;  // train-mode argmax accuracy
};

struct TrainReport {
    std::vector<EpochStats> epochs;
    std::vector<long> class_histogram;
    long dataset_size = 0;
    long batches_skipped = 0;  // size-1 tails that cannot define batch statistics
};

// Fan-in-scaled uniform init for conv/linear weights; BN starts at
// identity (gamma 1, beta 0, running mean 0, running var 1).
template <typename Scalar>
Model<Scalar> init_weights(const ModelConfig& cfg, std::uint64_t seed) {
    Model<Scalar> m = Model<Scalar>::zeros(cfg);
    std::mt19937_64 rng(seed);
    auto fill_uniform = [&rng](auto& tensor, int fan_in) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (Eigen::Index i = 0; i < tensor.size(); ++i)
            tensor.data()[i] = static_cast<Scalar>(dist(rng));
    };
    fill_uniform(m.conv_weight, cfg.conv_kernel * cfg.in_channels);
    fill_uniform(m.fc1_weight, cfg.flat_size());
    fill_uniform(m.fc1_bias, cfg.flat_size());
    fill_uniform(m.fc2_weight, cfg.hidden);
    fill_uniform(m.fc2_bias, cfg.hidden);
    return m;
}

// One bias-corrected Adam update over the trainable tensors. Rejects
// non-finite gradients without touching the model. Running BN statistics
// are not part of the update.
template <typename Scalar>
void adam_step(Model<Scalar>& model, const Gradients<Scalar>& grads, OptimizerState<Scalar>& state,
               const TrainConfig& cfg) {
    bool finite = true;
    for_each_gradient(grads, [&finite](const char*, const auto& grad) {
        if (!grad.allFinite()) finite = false;
    });
    if (!finite) throw NumericalError("adam_step: non-finite gradients, update rejected");

    state.step += 1;
    const double b1 = cfg.adam_beta1;
    const double b2 = cfg.adam_beta2;
    const double bias1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
    const double bias2 = 1.0 - std::pow(b2, static_cast<double>(state.step));

    auto update = [&](auto& param, const auto& grad, auto& m1, auto& m2) {
        m1 = (b1 * m1.array() + (1.0 - b1) * grad.array()).matrix();
        m2 = (b2 * m2.array() + (1.0 - b2) * grad.array().square()).matrix();
        param.array() -= static_cast<Scalar>(cfg.learning_rate) *
                         (m1.array() / static_cast<Scalar>(bias1)) /
                         ((m2.array() / static_cast<Scalar>(bias2)).sqrt() +
                          static_cast<Scalar>(cfg.adam_epsilon));
    };
    update(model.conv_weight, grads.conv_weight, state.first_moment.conv_weight,
           state.second_moment.conv_weight);
    update(model.bn1.gamma, grads.bn1_gamma, state.first_moment.bn1_gamma,
           state.second_moment.bn1_gamma);
    update(model.bn1.beta, grads.bn1_beta, state.first_moment.bn1_beta,
           state.second_moment.bn1_beta);
    update(model.fc1_weight, grads.fc1_weight, state.first_moment.fc1_weight,
           state.second_moment.fc1_weight);
    update(model.fc1_bias, grads.fc1_bias, state.first_moment.fc1_bias,
           state.second_moment.fc1_bias);
    update(model.bn2.gamma, grads.bn2_gamma, state.first_moment.bn2_gamma,
           state.second_moment.bn2_gamma);
    update(model.bn2.beta, grads.bn2_beta, state.first_moment.bn2_beta,
           state.second_moment.bn2_beta);
    update(model.fc2_weight, grads.fc2_weight, state.first_moment.fc2_weight,
           state.second_moment.fc2_weight);
    update(model.fc2_bias, grads.fc2_bias, state.first_moment.fc2_bias,
           state.second_moment.fc2_bias);
}

// Updates running statistics from one train-mode batch. The running
// variance uses the unbiased batch variance, the normalization itself the
// biased one — the convention the usual training frameworks follow.
template <typename Scalar>
void update_running_stats(BatchNorm<Scalar>& bn, const VectorX<Scalar>& batch_mean,
                          const VectorX<Scalar>& batch_var, Eigen::Index batch_size,
                          double momentum) {
    const Scalar mom = static_cast<Scalar>(momentum);
    const Scalar correction = batch_size > 1
                                  ? static_cast<Scalar>(batch_size) / (batch_size - Scalar(1))
                                  : Scalar(1);
    bn.running_mean = (Scalar(1) - mom) * bn.running_mean + mom * batch_mean;
    bn.running_var = (Scalar(1) - mom) * bn.running_var + mom * correction * batch_var;
}

// Checkpoint: the weight-bundle image with the optimizer state (step
// counter and both moment sets) appended, so training can resume exactly.
void write_checkpoint(const Model<float>& model, const OptimizerState<float>& state,
                      const std::string& path);
std::pair<Model<float>, OptimizerState<float>> read_checkpoint(const std::string& path);

// Full training loop: seeded shuffling, mini-batches (short tails kept,
// except single rows which cannot define batch statistics), Adam updates,
// running-stat maintenance. Bit-deterministic for a fixed (dataset, cfg).
// `final_state` receives the optimizer state for checkpointing when given.
template <typename Scalar>
std::pair<Model<Scalar>, TrainReport> fit(const Dataset& data, const ModelConfig& model_cfg,
                                          const TrainConfig& cfg,
                                          OptimizerState<Scalar>* final_state = nullptr) {
    cfg.validate();
    model_cfg.validate();
    if (data.size() == 0) throw DataError("fit: empty dataset");
    if (data.k != model_cfg.input_length)
        throw DataError("fit: dataset k does not match model input length");

    TrainReport report;
    report.dataset_size = data.size();
    report.class_histogram = data.class_histogram(model_cfg.classes);
    long present = 0;
    for (long c : report.class_histogram) present += c > 0 ? 1 : 0;
    if (present < 2)
        throw DataError("fit: dataset contains a single class; nothing separable to learn");

    Model<Scalar> model = init_weights<Scalar>(model_cfg, cfg.seed);
    OptimizerState<Scalar> opt = OptimizerState<Scalar>::zeros(model_cfg);
    std::mt19937_64 shuffle_rng(mix_seed(cfg.seed, 0x5u));

    const long n = data.size();
    std::vector<long> order(n);
    for (long i = 0; i < n; ++i) order[i] = i;

    MatrixX<Scalar> batch;
    Eigen::VectorXi batch_classes;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        if (cfg.shuffle) std::shuffle(order.begin(), order.end(), shuffle_rng);
        double epoch_loss = 0.0;
        long correct = 0, seen = 0;
        for (long begin = 0; begin < n; begin += cfg.batch_size) {
            const long size = std::min<long>(cfg.batch_size, n - begin);
            if (size < 2) {
                ++report.batches_skipped;
                continue;
            }
            batch.resize(size, data.windows.cols());
            batch_classes.resize(size);
            for (long r = 0; r < size; ++r) {
                batch.row(r) = data.windows.row(order[begin + r]).template cast<Scalar>();
                batch_classes[r] = data.labels[order[begin + r]];
            }
            auto result = forward(model, batch, ForwardMode::Train);
            epoch_loss += cross_entropy(result.probs, batch_classes, cfg.reduction);
            const Gradients<Scalar> grads =
                backward(model, *result.trace, batch_classes, cfg.reduction);
            adam_step(model, grads, opt, cfg);
            update_running_stats(model.bn1, result.trace->bn1_mean, result.trace->bn1_var, size,
                                 model_cfg.bn_momentum);
            update_running_stats(model.bn2, result.trace->bn2_mean, result.trace->bn2_var, size,
                                 model_cfg.bn_momentum);
            for (long r = 0; r < size; ++r) {
                Eigen::Index argmax;
                result.probs.row(r).maxCoeff(&argmax);
                correct += argmax == batch_classes[r] ? 1 : 0;
            }
            seen += size;
        }
        report.epochs.push_back(
            {epoch_loss, seen > 0 ? static_cast<double>(correct) / seen : 0.0});
    }
    if (final_state) *final_state = std::move(opt);
    return {std::move(model), std::move(report)};
}

}  // namespace akb
