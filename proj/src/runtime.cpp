#include "akb/runtime.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace akb {

// --- weight bundle -----------------------------------------------------------

namespace {

constexpr char kBundleMagic[4] = {'A', 'K', 'B', '1'};
constexpr std::size_t kHeaderBytes = 4 + 7 * 4 + 2 * 8;  // magic + 7 u32 + 2 f64

template <typename T>
void put(std::vector<std::uint8_t>& buf, const T& value) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
    buf.insert(buf.end(), p, p + sizeof(T));
}

template <typename T>
T take(const std::uint8_t*& p) {
    T value;
    std::memcpy(&value, p, sizeof(T));
    p += sizeof(T);
    return value;
}

}  // namespace

WeightBundle export_weights(const Model<float>& model) {
    model.config.validate();
    WeightBundle bundle;
    bundle.config = model.config;
    bundle.data.reserve(param_count(model));
    for_each_tensor(model, [&bundle](const char*, const auto& tensor) {
        bundle.data.insert(bundle.data.end(), tensor.data(), tensor.data() + tensor.size());
    });
    return bundle;
}

Model<float> import_weights(const WeightBundle& bundle) {
    bundle.config.validate();
    Model<float> model = Model<float>::zeros(bundle.config);
    const long expected = param_count(model);
    if (static_cast<long>(bundle.data.size()) != expected)
        throw BundleError(BundleErrorKind::SizeMismatch,
                          "bundle holds " + std::to_string(bundle.data.size()) +
                              " floats, config requires " + std::to_string(expected));
    std::size_t offset = 0;
    for_each_tensor(model, [&](const char*, auto& tensor) {
        std::memcpy(tensor.data(), bundle.data.data() + offset, tensor.size() * sizeof(float));
        offset += tensor.size();
    });
    if (!model.bn1.running_var.allFinite() || (model.bn1.running_var.array() <= 0.0f).any() ||
        (model.bn2.running_var.array() <= 0.0f).any())
        throw BundleError(BundleErrorKind::SizeMismatch,
                          "bundle running variance entries must be positive");
    return model;
}

std::size_t bundle_file_size(const ModelConfig& config) {
    return kHeaderBytes + static_cast<std::size_t>(layer_param_counts(config).total()) * 4 + 4;
}

namespace {

std::vector<std::uint8_t> serialize_bundle(const WeightBundle& bundle) {
    std::vector<std::uint8_t> buf;
    buf.reserve(bundle_file_size(bundle.config));
    buf.insert(buf.end(), kBundleMagic, kBundleMagic + 4);
    const ModelConfig& c = bundle.config;
    for (int field : {c.input_length, c.in_channels, c.conv_channels, c.conv_kernel,
                      c.conv_stride, c.hidden, c.classes})
        put(buf, static_cast<std::uint32_t>(field));
    put(buf, c.bn_epsilon);
    put(buf, c.bn_momentum);
    for (float v : bundle.data) put(buf, v);
    put(buf, crc32(buf.data(), buf.size()));
    return buf;
}

}  // namespace

void write_bundle(const WeightBundle& bundle, const std::string& path) {
    const auto buf = serialize_bundle(bundle);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw BundleError(BundleErrorKind::Io, "cannot open " + path + " for writing");
    out.write(reinterpret_cast<const char*>(buf.data()), buf.size());
    if (!out) throw BundleError(BundleErrorKind::Io, "short write to " + path);
}

WeightBundle read_bundle(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw BundleError(BundleErrorKind::Io, "cannot open " + path);
    std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
    if (buf.size() < kHeaderBytes + 4)
        throw BundleError(BundleErrorKind::SizeMismatch, path + ": file shorter than a header");
    if (std::memcmp(buf.data(), "AKB", 3) != 0)
        throw BundleError(BundleErrorKind::Magic, path + ": not a weight bundle");
    if (buf[3] != '1')
        throw BundleError(BundleErrorKind::Version,
                          path + ": unsupported bundle version '" + std::string(1, buf[3]) + "'");

    const std::uint8_t* p = buf.data() + 4;
    WeightBundle bundle;
    ModelConfig& c = bundle.config;
    c.input_length = static_cast<int>(take<std::uint32_t>(p));
    c.in_channels = static_cast<int>(take<std::uint32_t>(p));
    c.conv_channels = static_cast<int>(take<std::uint32_t>(p));
    c.conv_kernel = static_cast<int>(take<std::uint32_t>(p));
    c.conv_stride = static_cast<int>(take<std::uint32_t>(p));
    c.hidden = static_cast<int>(take<std::uint32_t>(p));
    c.classes = static_cast<int>(take<std::uint32_t>(p));
    c.bn_epsilon = take<double>(p);
    c.bn_momentum = take<double>(p);
    try {
        c.validate();
    } catch (const DataError& e) {
        throw BundleError(BundleErrorKind::SizeMismatch, path + ": bad config block: " + e.what());
    }

    if (buf.size() != bundle_file_size(c))
        throw BundleError(BundleErrorKind::SizeMismatch,
                          path + ": file is " + std::to_string(buf.size()) + " bytes, config " +
                              "requires " + std::to_string(bundle_file_size(c)));

    std::uint32_t stored_crc;
    std::memcpy(&stored_crc, buf.data() + buf.size() - 4, 4);
    if (crc32(buf.data(), buf.size() - 4) != stored_crc)
        throw BundleError(BundleErrorKind::Checksum, path + ": checksum mismatch");

    const std::size_t count = (buf.size() - kHeaderBytes - 4) / 4;
    bundle.data.resize(count);
    std::memcpy(bundle.data.data(), buf.data() + kHeaderBytes, count * 4);
    return bundle;
}

// --- constant-array export ----------------------------------------------------

void write_constant_arrays(const WeightBundle& bundle, const std::string& header_path,
                           const std::string& manifest_path) {
    Model<float> model = import_weights(bundle);

    std::ofstream header(header_path);
    if (!header) throw BundleError(BundleErrorKind::Io, "cannot open " + header_path);
    header << "// trained model weights exported as constant arrays\n";
    header << "// layout: column-major per tensor; see the manifest for roles\n";
    header << "#pragma once\n\n";

    std::ofstream manifest(manifest_path);
    if (!manifest) throw BundleError(BundleErrorKind::Io, "cannot open " + manifest_path);
    manifest << "{\n  \"tensors\": [\n";

    bool first = true;
    for_each_tensor(model, [&](const char* name, const auto& tensor) {
        header << "static const float akb_" << name << "[" << tensor.size() << "] = {";
        char buf[32];
        for (Eigen::Index i = 0; i < tensor.size(); ++i) {
            // 9 significant digits round-trip IEEE binary32 exactly.
            std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(tensor.data()[i]));
            header << (i ? "," : "") << (i % 8 == 0 ? "\n    " : " ") << buf;
            if (std::strchr(buf, '.') == nullptr && std::strchr(buf, 'e') == nullptr &&
                std::strchr(buf, 'n') == nullptr)
                header << ".f";
            else
                header << 'f';
        }
        header << "\n};\n\n";

        if (!first) manifest << ",\n";
        first = false;
        manifest << "    {\"array\": \"akb_" << name << "\", \"role\": \"" << name
                 << "\", \"rows\": " << tensor.rows() << ", \"cols\": " << tensor.cols()
                 << ", \"count\": " << tensor.size() << "}";
    });
    const ModelConfig& c = bundle.config;
    manifest << "\n  ],\n";
    manifest << "  \"config\": {\"input_length\": " << c.input_length
             << ", \"in_channels\": " << c.in_channels
             << ", \"conv_channels\": " << c.conv_channels
             << ", \"conv_kernel\": " << c.conv_kernel << ", \"conv_stride\": " << c.conv_stride
             << ", \"hidden\": " << c.hidden << ", \"classes\": " << c.classes << "}\n}\n";
}

// --- detection -----------------------------------------------------------------

GestureDetector::GestureDetector(const TriggerConfig& cfg) : cfg_(cfg) { cfg_.validate(); }

std::optional<DetectionEvent> GestureDetector::feed(
    long window_index, double t, const Eigen::Ref<const Eigen::VectorXf>& probs) {
    if (refractory_until_.empty()) refractory_until_.assign(probs.size(), -1.0);

    int best = 0;
    float best_prob = 0.0f;
    for (int c = 1; c < probs.size(); ++c) {
        if (probs[c] > best_prob) {
            best_prob = probs[c];
            best = c;
        }
    }
    const bool qualifies = best >= 1 && best_prob >= cfg_.prob_threshold;

    std::optional<DetectionEvent> completed;
    if (open_) {
        if (qualifies && best == current_.cls) {
            current_.end_window = window_index;
            current_.t_end = t;
            current_.peak_prob = std::max(current_.peak_prob, best_prob);
            return std::nullopt;
        }
        completed = current_;
        open_ = false;
        refractory_until_[current_.cls] = current_.t_end + cfg_.refractory;
        run_class_ = 0;
        run_length_ = 0;
    }

    if (qualifies && t >= refractory_until_[best]) {
        if (run_class_ == best) {
            ++run_length_;
            current_.peak_prob = std::max(current_.peak_prob, best_prob);
        } else {
            run_class_ = best;
            run_length_ = 1;
            run_start_ = window_index;
            run_start_t_ = t;
            current_.peak_prob = best_prob;
        }
        if (run_length_ >= cfg_.min_consecutive_windows) {
            open_ = true;
            current_.cls = best;
            current_.start_window = run_start_;
            current_.end_window = window_index;
            current_.t_start = run_start_t_;
            current_.t_end = t;
        }
    } else {
        run_class_ = 0;
        run_length_ = 0;
    }
    return completed;
}

std::optional<DetectionEvent> GestureDetector::flush() {
    if (!open_) return std::nullopt;
    open_ = false;
    refractory_until_[current_.cls] = current_.t_end + cfg_.refractory;
    run_class_ = 0;
    run_length_ = 0;
    return current_;
}

std::vector<DetectionEvent> detect(const std::vector<ProbFrame>& frames,
                                   const TriggerConfig& cfg) {
    GestureDetector detector(cfg);
    std::vector<DetectionEvent> events;
    for (const ProbFrame& f : frames)
        if (auto e = detector.feed(f.window_index, f.t, f.probs)) events.push_back(*e);
    if (auto e = detector.flush()) events.push_back(*e);
    return events;
}

DoubleGestureGate::DoubleGestureGate(const TriggerConfig& cfg) : cfg_(cfg) { cfg_.validate(); }

std::optional<ConfirmedGesture> DoubleGestureGate::feed(const DetectionEvent& event) {
    if (static_cast<std::size_t>(event.cls) >= pending_end_.size())
        pending_end_.resize(event.cls + 1, -1.0);
    double& pending = pending_end_[event.cls];
    if (pending >= 0.0 && event.t_start - pending <= cfg_.double_gesture_timeout) {
        pending = -1.0;  // pair consumed
        return ConfirmedGesture{event.cls, event.t_end};
    }
    pending = event.t_end;
    return std::nullopt;
}

std::vector<ConfirmedGesture> confirm_gestures(const std::vector<DetectionEvent>& events,
                                               const TriggerConfig& cfg) {
    DoubleGestureGate gate(cfg);
    std::vector<ConfirmedGesture> confirmed;
    for (const DetectionEvent& e : events)
        if (auto c = gate.feed(e)) confirmed.push_back(*c);
    return confirmed;
}

// --- memory budget ---------------------------------------------------------------

std::string MemoryReport::to_string() const {
    std::ostringstream out;
    for (const auto& item : items) {
        out.width(28);
        out << std::left << item.name << " " << item.bytes << " B\n";
    }
    out << "total " << total() << " B, limit " << limit_bytes << " B -> "
        << (pass() ? "PASS" : "FAIL") << "\n";
    return out.str();
}

namespace {

MemoryReport budget_report(std::size_t weight_bytes, const ModelConfig& config,
                           const TriggerConfig& trigger) {
    (void)trigger;
    MemoryReport report;
    report.items.push_back({"weights", weight_bytes});
    report.items.push_back({"activation workspace", EvalWorkspace::workspace_bytes(config)});
    report.items.push_back(
        {"sample ring buffer",
         static_cast<std::size_t>(config.input_length) * config.in_channels * sizeof(float) +
             static_cast<std::size_t>(config.input_length) * sizeof(double)});
    report.items.push_back({"trigger state", sizeof(GestureDetector) + sizeof(DoubleGestureGate) +
                                                 2 * 8 * sizeof(double)});
    return report;
}

}  // namespace

MemoryReport budget_check(const ModelConfig& config, const TriggerConfig& trigger,
                          const NormalizationConstants&) {
    return budget_report(static_cast<std::size_t>(layer_param_counts(config).total()) *
                             sizeof(float),
                         config, trigger);
}

MemoryReport budget_check(const WeightBundle& bundle, const TriggerConfig& trigger,
                          const NormalizationConstants&) {
    return budget_report(bundle.tensor_bytes(), bundle.config, trigger);
}

// --- eval kernel ------------------------------------------------------------------

EvalWorkspace::EvalWorkspace(const ModelConfig& config) {
    config.validate();
    window = Eigen::VectorXf::Zero(config.input_length * config.in_channels);
    probs = Eigen::VectorXf::Zero(config.classes);
    conv_step_ = Eigen::VectorXf::Zero(config.conv_channels);
    conv_flat_ = Eigen::VectorXf::Zero(config.flat_size());
    hidden_ = Eigen::VectorXf::Zero(config.hidden);
    logits_ = Eigen::VectorXf::Zero(config.classes);
    bn1_denom_ = Eigen::VectorXf::Zero(config.flat_size());
    bn2_denom_ = Eigen::VectorXf::Zero(config.hidden);
}

std::size_t EvalWorkspace::workspace_bytes(const ModelConfig& config) {
    const std::size_t floats = static_cast<std::size_t>(config.input_length) * config.in_channels +
                               2 * config.classes +        // probs + logits
                               config.conv_channels +      // conv step
                               2 * config.flat_size() +    // conv features + bn1 denom
                               2 * config.hidden +         // hidden + bn2 denom
                               config.classes;             // slack for the softmax peak etc.
    return floats * sizeof(float);
}

void EvalWorkspace::run(const Model<float>& model) {
    const ModelConfig& cfg = model.config;
    const int steps = cfg.conv_steps();
    const int patch = cfg.conv_kernel * cfg.in_channels;

    if (!denoms_ready_) {
        bn1_denom_ = (model.bn1.running_var.array() + static_cast<float>(cfg.bn_epsilon)).sqrt();
        bn2_denom_ = (model.bn2.running_var.array() + static_cast<float>(cfg.bn_epsilon)).sqrt();
        denoms_ready_ = true;
    }

    for (int s = 0; s < steps; ++s) {
        conv_step_.noalias() =
            model.conv_weight.transpose() *
            window.segment(static_cast<Eigen::Index>(s) * cfg.conv_stride * cfg.in_channels,
                           patch);
        for (int c = 0; c < cfg.conv_channels; ++c) conv_flat_[c * steps + s] = conv_step_[c];
    }

    conv_flat_ = (conv_flat_ - model.bn1.running_mean).cwiseQuotient(bn1_denom_);
    conv_flat_ = conv_flat_.cwiseProduct(model.bn1.gamma) + model.bn1.beta;
    conv_flat_ = conv_flat_.cwiseMax(0.0f);

    hidden_.noalias() = model.fc1_weight.transpose() * conv_flat_;
    hidden_ += model.fc1_bias;
    hidden_ = (hidden_ - model.bn2.running_mean).cwiseQuotient(bn2_denom_);
    hidden_ = hidden_.cwiseProduct(model.bn2.gamma) + model.bn2.beta;
    hidden_ = hidden_.cwiseMax(0.0f);

    logits_.noalias() = model.fc2_weight.transpose() * hidden_;
    logits_ += model.fc2_bias;

    const float peak = logits_.maxCoeff();
    probs = (logits_.array() - peak).exp();
    probs /= probs.sum();
}

Eigen::MatrixXf classify_windows(const Model<float>& model, const Eigen::MatrixXf& windows) {
    EvalWorkspace ws(model.config);
    Eigen::MatrixXf probs(windows.rows(), model.config.classes);
    for (Eigen::Index i = 0; i < windows.rows(); ++i) {
        ws.window = windows.row(i).transpose();
        ws.run(model);
        probs.row(i) = ws.probs.transpose();
    }
    return probs;
}

// --- streaming session --------------------------------------------------------------

StreamSession::StreamSession(Model<float> model, const SessionConfig& cfg)
    : model_(std::move(model)),
      cfg_(cfg),
      k_(model_.config.input_length),
      ring_(Eigen::MatrixXf::Zero(model_.config.input_length, model_.config.in_channels)),
      ring_times_(model_.config.input_length, 0.0),
      workspace_(model_.config) {
    model_.config.validate();
    cfg_.trigger.validate();
    if (model_.config.in_channels != 6)
        throw DataError("session: streaming expects the 6-channel IMU layout");
    if (!cfg_.norm.valid()) throw DataError("session: invalid normalization constants");
    if (cfg_.lag_policy == LagPolicy::SkipWhenBusy && !(cfg_.max_inference_rate > 0.0))
        throw DataError("session: max_inference_rate must be positive");
}

const Eigen::VectorXf* StreamSession::push(const ImuSample& sample) {
    ++samples_seen_;
    if (!sample.finite()) {
        ++samples_dropped_;
        return nullptr;
    }
    ring_.row(ring_head_).head<3>() = (sample.acc / cfg_.norm.c_a).transpose();
    ring_.row(ring_head_).tail<3>() = (sample.gyro / cfg_.norm.c_g).transpose();
    ring_times_[ring_head_] = sample.t;
    ring_head_ = (ring_head_ + 1) % k_;
    if (ring_count_ < k_) ++ring_count_;
    if (ring_count_ < k_) return nullptr;

    if (cfg_.lag_policy == LagPolicy::SkipWhenBusy && last_inference_t_ >= 0.0 &&
        sample.t - last_inference_t_ < 1.0 / cfg_.max_inference_rate) {
        ++samples_skipped_;
        return nullptr;
    }

    // Oldest sample sits at ring_head_ once the buffer is full.
    for (int i = 0; i < k_; ++i) {
        const int row = (ring_head_ + i) % k_;
        workspace_.window.segment(static_cast<Eigen::Index>(i) * 6, 6) =
            ring_.row(row).transpose();
    }
    workspace_.run(model_);
    ++windows_classified_;
    last_window_time_ = sample.t;
    last_inference_t_ = sample.t;
    return &workspace_.probs;
}

MemoryReport StreamSession::memory_report() const {
    return budget_check(model_.config, cfg_.trigger, cfg_.norm);
}

}  // namespace akb
