#pragma once

#include <string>
#include <vector>

#include "akb/baselines.hpp"
#include "akb/control.hpp"
#include "akb/runtime.hpp"
#include "akb/synth.hpp"
#include "akb/training.hpp"

namespace akb {

// Leave-one-subject-out fold plan: every subject is the test subject
// exactly once, trained on all the others.
struct FoldPlan {
    struct Fold {
        int test_subject;
        std::vector<int> train_subjects;
    };
    std::vector<Fold> folds;
};

FoldPlan make_loso_plan(const std::vector<int>& subject_ids);

// Loads every "<stem>.csv" recording (with optional "<stem>.csv.meta"
// sidecar and "<stem>_labels.csv" intervals) under a directory, sorted by
// filename.
std::vector<SubjectData> load_subjects_dir(const std::string& data_dir);

enum class ModelKind { Nn, Lda, Svm, Rf, Dtw };
ModelKind parse_model_kind(const std::string& name);
const char* model_kind_name(ModelKind kind);

struct EvalConfig {
    int k = 60;
    int stride = 1;
    OverlapConfig overlap;
    NormalizationConstants norm;
    ModelConfig model;
    TrainConfig train;
    LdaConfig lda;
    SvmConfig svm;
    ForestConfig forest;
    DtwConfig dtw;
    long dtw_max_eval_windows = 400;  // DTW prediction is O(k^2) per candidate
    int train_subject_count = -1;     // -1 = all remaining subjects per fold
    std::uint64_t seed = 0;
    int jobs = 1;
};

struct FoldResult {
    int test_subject = 0;
    Metrics metrics;
    std::vector<std::string> notes;
};

struct MetricSummary {
    double mean = 0.0;
    double stddev = 0.0;
    int defined_folds = 0;
};

struct FoldSummary {
    std::vector<FoldResult> folds;
    MetricSummary accuracy, macro_precision, macro_recall, macro_f1;
    Eigen::MatrixXi pooled_confusion;
};

MetricSummary summarize(const std::vector<double>& values);

FoldSummary cross_validate(const std::vector<SubjectData>& subjects, ModelKind kind,
                           const EvalConfig& cfg);

void write_fold_summary_csv(const FoldSummary& summary, const std::string& path);
std::string fold_summary_json(const FoldSummary& summary);

// --- sweeps -------------------------------------------------------------------

enum class SweepAxis { WindowDuration, Sigma, Frequency, TrainSubjectCount };
SweepAxis parse_sweep_axis(const std::string& name);
const char* sweep_axis_name(SweepAxis axis);

struct SweepSpec {
    SweepAxis axis = SweepAxis::WindowDuration;
    std::vector<double> grid;
};

// Paper-ranged default grids per axis.
SweepSpec default_sweep(SweepAxis axis);

struct SweepPoint {
    double value = 0.0;
    bool skipped = false;
    std::string note;
    FoldSummary summary;
};

struct SweepResults {
    SweepSpec spec;
    std::vector<SweepPoint> points;
};

// One cross-validation per grid point. Per-point seeds derive from the
// axis value (not grid position), so reordering the grid cannot change
// any result.
SweepResults sweep(const SweepSpec& spec, const std::vector<SubjectData>& subjects,
                   ModelKind kind, const EvalConfig& cfg);

void write_sweep_csv(const SweepResults& results, const std::string& path);

// --- confusion report ------------------------------------------------------------

struct ConfusionReport {
    Eigen::MatrixXi counts;         // pooled over all LOSO folds
    Eigen::MatrixXd row_normalized;
};

ConfusionReport confusion_report(const std::vector<SubjectData>& subjects, ModelKind kind,
                                 const EvalConfig& cfg);

// --- end-to-end simulation ----------------------------------------------------------

struct ClassOutcome {
    long expected_pairs = 0;
    long confirmed_hits = 0;
    double hit_rate() const {
        return expected_pairs > 0 ? static_cast<double>(confirmed_hits) / expected_pairs : 0.0;
    }
};

struct SessionReport {
    long samples = 0;
    long windows = 0;
    long detection_events = 0;
    std::vector<ConfirmedGesture> confirmed;
    std::vector<ClassOutcome> per_class;  // index 1..4 used
    long false_activations = 0;
    std::vector<double> false_activation_times;
    long commands_sent = 0;
    HandState controller_state;
    HandState simulator_state;
    bool states_agree = false;
    MemoryReport memory;
    std::string simulator_log;
};

// Replays a recording through the full chain:
// stream_classify -> detect -> double-gesture gate -> state machine ->
// framed wire -> hand simulator. Ground truth double-performances are
// derived from the label intervals (same-class pairs within the gate
// timeout); a confirmation matching no expected pair counts as a false
// activation. Aborts (throws) if the session would break the memory
// budget.
SessionReport simulate_e2e(const Recording& recording, const std::vector<LabelInterval>& labels,
                           const Model<float>& model, const SessionConfig& session_cfg);

std::string session_report_json(const SessionReport& report);

}  // namespace akb
