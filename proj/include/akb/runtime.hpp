#pragma once

#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "akb/imu_data.hpp"
#include "akb/nn.hpp"

namespace akb {

// Serialized model: magic "AKB1", config block, all tensors as f32
// little-endian in the for_each_tensor order (column-major within each
// tensor), trailing CRC-32 over everything before it.
struct WeightBundle {
    ModelConfig config;
    std::vector<float> data;  // concatenated tensors

    std::size_t tensor_bytes() const { return data.size() * sizeof(float); }
};

enum class BundleErrorKind { Io, Magic, Version, SizeMismatch, Checksum };

class BundleError : public std::runtime_error {
public:
    BundleError(BundleErrorKind kind, const std::string& msg)
        : std::runtime_error(msg), kind_(kind) {}
    BundleErrorKind kind() const { return kind_; }

private:
    BundleErrorKind kind_;
};

WeightBundle export_weights(const Model<float>& model);
Model<float> import_weights(const WeightBundle& bundle);

void write_bundle(const WeightBundle& bundle, const std::string& path);
WeightBundle read_bundle(const std::string& path);

// Exact on-disk size of a bundle for the given config.
std::size_t bundle_file_size(const ModelConfig& config);

// Renders the bundle as C source text: one constant float array per
// tensor (9 significant digits, which round-trips f32 exactly) plus a
// manifest mapping array names to tensor roles and shapes.
void write_constant_arrays(const WeightBundle& bundle, const std::string& header_path,
                           const std::string& manifest_path);

// --- detection / trigger ----------------------------------------------------

struct TriggerConfig {
    float prob_threshold = 0.8f;
    int min_consecutive_windows = 3;
    double double_gesture_timeout = 2.0;  // seconds
    double refractory = 0.5;              // seconds

    void validate() const {
        if (!(prob_threshold > 0.0f) || min_consecutive_windows < 1 ||
            !(double_gesture_timeout > 0.0) || !(refractory > 0.0))
            throw DataError("trigger config: all fields must be positive");
    }
};

// Contiguous run of high-confidence windows for one gesture class.
struct DetectionEvent {
    int cls = 0;  // in {1..4}
    long start_window = 0;
    long end_window = 0;
    double t_start = 0.0;
    double t_end = 0.0;
    float peak_prob = 0.0f;
};

struct ProbFrame {
    long window_index = 0;
    double t = 0.0;  // timestamp of the newest sample in the window
    Eigen::VectorXf probs;
};

// Incremental event detector. An event opens once a class stays at or
// above prob_threshold for min_consecutive_windows consecutive windows,
// closes when it drops, and cannot reopen for the same class during the
// refractory period.
class GestureDetector {
public:
    explicit GestureDetector(const TriggerConfig& cfg);

    // Returns a completed event when one closes at this frame.
    std::optional<DetectionEvent> feed(long window_index, double t,
                                       const Eigen::Ref<const Eigen::VectorXf>& probs);
    // Closes any still-open event (end of stream).
    std::optional<DetectionEvent> flush();

private:
    TriggerConfig cfg_;
    int run_class_ = 0;
    int run_length_ = 0;
    long run_start_ = 0;
    double run_start_t_ = 0.0;
    bool open_ = false;
    DetectionEvent current_;
    std::vector<double> refractory_until_;
};

std::vector<DetectionEvent> detect(const std::vector<ProbFrame>& frames,
                                   const TriggerConfig& cfg);

struct ConfirmedGesture {
    int cls = 0;
    double t = 0.0;  // end time of the confirming event
};

// Two detections of the same class within double_gesture_timeout confirm
// one gesture; the pair is consumed, so a third event starts a new pair.
class DoubleGestureGate {
public:
    explicit DoubleGestureGate(const TriggerConfig& cfg);
    std::optional<ConfirmedGesture> feed(const DetectionEvent& event);

private:
    TriggerConfig cfg_;
    std::vector<double> pending_end_;  // per class; negative = none
};

std::vector<ConfirmedGesture> confirm_gestures(const std::vector<DetectionEvent>& events,
                                               const TriggerConfig& cfg);

// --- memory budget ----------------------------------------------------------

constexpr std::size_t kMemoryLimitBytes = 92160;  // 90 KB

struct MemoryItem {
    std::string name;
    std::size_t bytes = 0;
};

struct MemoryReport {
    std::vector<MemoryItem> items;
    std::size_t limit_bytes = kMemoryLimitBytes;

    std::size_t total() const {
        std::size_t sum = 0;
        for (const auto& item : items) sum += item.bytes;
        return sum;
    }
    bool pass() const { return total() <= limit_bytes; }
    std::string to_string() const;
};

// Itemized accounting of everything a streaming session keeps resident:
// weights, activation workspace, the sample ring buffer and trigger state.
MemoryReport budget_check(const ModelConfig& config, const TriggerConfig& trigger,
                          const NormalizationConstants& consts = {});
MemoryReport budget_check(const WeightBundle& bundle, const TriggerConfig& trigger,
                          const NormalizationConstants& consts = {});

// --- streaming session -------------------------------------------------------

// Single-window eval-mode inference. Both the streaming session and the
// batch classifier run this same kernel, which is what makes their
// outputs bit-identical.
class EvalWorkspace {
public:
    explicit EvalWorkspace(const ModelConfig& config);

    // Reads `window` (k*6, time-major), writes `probs`. No allocation.
    void run(const Model<float>& model);

    Eigen::VectorXf window;  // input slot
    Eigen::VectorXf probs;   // output slot

    static std::size_t workspace_bytes(const ModelConfig& config);

private:
    Eigen::VectorXf conv_step_;
    Eigen::VectorXf conv_flat_;
    Eigen::VectorXf hidden_;
    Eigen::VectorXf logits_;
    Eigen::VectorXf bn1_denom_, bn2_denom_;
    bool denoms_ready_ = false;
};

// Eval-mode classification of dataset rows (time-major flattened
// windows); row i of the result is the probability vector of window i.
Eigen::MatrixXf classify_windows(const Model<float>& model, const Eigen::MatrixXf& windows);

enum class LagPolicy {
    EverySample,   // classify on each arriving sample
    SkipWhenBusy,  // classify at most max_inference_rate Hz, dropping windows in between
};

struct SessionConfig {
    NormalizationConstants norm;
    TriggerConfig trigger;
    LagPolicy lag_policy = LagPolicy::EverySample;
    double max_inference_rate = 75.0;  // used by SkipWhenBusy
};

// Streaming classifier: fixed-size ring buffer of normalized samples,
// one eval-mode inference per arriving sample once k samples are
// buffered. Everything is allocated at construction; push() never
// allocates.
class StreamSession {
public:
    StreamSession(Model<float> model, const SessionConfig& cfg);

    // Returns the probability vector of the newest window, or nullptr
    // during warm-up (first k-1 samples) or when the sample was dropped.
    // The pointee stays valid until the next push.
    const Eigen::VectorXf* push(const ImuSample& sample);

    long windows_classified() const { return windows_classified_; }
    long samples_seen() const { return samples_seen_; }
    long samples_dropped() const { return samples_dropped_; }
    long samples_skipped() const { return samples_skipped_; }
    double last_window_time() const { return last_window_time_; }
    const Model<float>& model() const { return model_; }
    const SessionConfig& config() const { return cfg_; }

    MemoryReport memory_report() const;

private:
    Model<float> model_;
    SessionConfig cfg_;
    int k_;
    Eigen::MatrixXf ring_;              // k x 6 normalized samples, circular rows
    std::vector<double> ring_times_;    // parallel timestamps
    int ring_head_ = 0;                 // next write slot
    int ring_count_ = 0;
    EvalWorkspace workspace_;
    long samples_seen_ = 0;
    long samples_dropped_ = 0;
    long samples_skipped_ = 0;
    long windows_classified_ = 0;
    double last_window_time_ = 0.0;
    double last_inference_t_ = -1.0;
};

}  // namespace akb
