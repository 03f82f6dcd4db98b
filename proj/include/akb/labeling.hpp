#pragma once

#include <string>
#include <vector>

#include "akb/imu_data.hpp"

namespace akb {

// Ground-truth gesture interval on the recording clock.
struct LabelInterval {
    int gesture = 0;  // class id in {1,2,3,4}
    double t_s = 0.0;
    double t_e = 0.0;

    double duration() const { return t_e - t_s; }
};

enum class OverlapVariant { Coverage, Iou };

struct OverlapConfig {
    double sigma = 0.5;  // in (0, 1]
    OverlapVariant variant = OverlapVariant::Coverage;
};

struct LabeledWindow {
    Window window;
    int cls = 0;  // 0 = no gesture
    float overlap_score = 0.0f;
    int subject = 0;
};

// Fraction relating a gesture interval to a window interval.
// Coverage: |intersection| / |gesture|  (1 iff gesture fully inside window).
// Iou:      |intersection| / |union|.
// Throws DataError on invalid (start >= end) gesture intervals.
double overlap(double window_start, double window_end, double gesture_start,
               double gesture_end, OverlapVariant variant);

// Assigns the max-overlap gesture when that overlap >= sigma, else class 0.
// Ties break toward the earlier gesture start.
std::pair<int, double> label_interval_set(double window_start, double window_end,
                                          const std::vector<LabelInterval>& labels,
                                          const OverlapConfig& cfg);

// Labels one window whose first sample sits at t_start on a rate-Hz grid;
// the window interval is [t_start, t_start + (k-1)/rate].
LabeledWindow label_window(const Window& window, double t_start, double rate,
                           const std::vector<LabelInterval>& labels, const OverlapConfig& cfg,
                           int subject = 0);

// Columnar supervised dataset. Row i of `windows` is window i flattened
// time-major: entry (t, c) at column t*6 + c.
struct Dataset {
    int k = 0;
    double rate = 0.0;
    double sigma = 0.5;
    OverlapVariant variant = OverlapVariant::Coverage;
    Eigen::MatrixXf windows;            // n x (k*6)
    Eigen::VectorXi labels;             // n
    Eigen::VectorXf overlap_scores;     // n
    std::vector<int> subjects;          // n
    std::vector<int> start_indices;     // n

    long size() const { return windows.rows(); }
    std::vector<long> class_histogram(int num_classes = 5) const;
};

struct SubjectData {
    Recording recording;
    std::vector<LabelInterval> labels;
};

// Windows every recording, labels each window against its subject's
// intervals, and concatenates in (subject, start index) order.
// The window interval is [t_start, t_start + (k-1)/rate].
Dataset build_dataset(const std::vector<SubjectData>& subjects, int k, int stride,
                      const OverlapConfig& cfg = {},
                      const NormalizationConstants& consts = {});

// Label CSV: header "gesture,t_start,t_end", gesture in {1,2,3,4}.
void write_labels_csv(const std::vector<LabelInterval>& labels, const std::string& path);
std::vector<LabelInterval> read_labels_csv(const std::string& path);

// Binary dataset export: magic "AKD1", header (k, rate, sigma, variant,
// count), then per record the k*6 f32 window followed by a u8 class.
void write_dataset(const Dataset& data, const std::string& path);
Dataset read_dataset(const std::string& path);

// CSV summary: one row per subject with per-class window counts.
void write_dataset_summary_csv(const Dataset& data, const std::string& path);

}  // namespace akb
