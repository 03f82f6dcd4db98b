#pragma once

#include <optional>
#include <string>
#include <vector>

#include "akb/common.hpp"

namespace akb {

// One 6-channel IMU reading: accelerations in m/s^2 and roll/pitch/yaw
// angular velocities in rad/s. Timestamps are seconds on the recording
// clock and must be strictly increasing within a stream.
struct ImuSample {
    double t = 0.0;
    Eigen::Vector3f acc = Eigen::Vector3f::Zero();
    Eigen::Vector3f gyro = Eigen::Vector3f::Zero();

    bool finite() const { return acc.allFinite() && gyro.allFinite() && std::isfinite(t); }
};

struct Recording {
    int subject_id = 0;
    double nominal_rate = 100.0;  // Hz
    std::vector<ImuSample> samples;

    double duration() const {
        return samples.empty() ? 0.0 : samples.back().t - samples.front().t;
    }
};

// Channel divisors bringing accelerations and angular velocities to
// roughly [-1, 1]. Acceleration needs the larger divisor because the
// gravity component alone is ~9.81.
struct NormalizationConstants {
    float c_a = 10.0f;
    float c_g = 2.0f;

    bool valid() const { return c_a > 0.0f && c_g > 0.0f; }
};

// k consecutive normalized samples; rows are time steps, columns are the
// six channels (ax, ay, az, gr, gp, gy).
struct Window {
    int start_index = 0;
    Eigen::MatrixXf values;  // k x 6
};

// Divides acc channels by c_a and gyro channels by c_g.
// Throws DataError on non-finite input.
Vec6f normalize(const ImuSample& sample, const NormalizationConstants& consts = {});

// Validates stream invariants: non-empty, strictly increasing timestamps,
// finite channels, median inter-sample gap within 10% of 1/nominal_rate.
// Throws DataError describing the first violation.
void validate_recording(const Recording& rec);

// Normalized sliding windows at start indices 0, stride, 2*stride, ...
// A recording shorter than k yields an empty result (with a warning).
std::vector<Window> make_windows(const Recording& rec, int k, int stride,
                                 const NormalizationConstants& consts = {});

// Decimates onto a uniform grid at target_rate by nearest-timestamp
// selection. Keeps the first sample, never invents samples, and refuses
// upsampling (target_rate > nominal_rate).
Recording resample(const Recording& rec, double target_rate);

// --- file formats ---------------------------------------------------------

// CSV with header "t,ax,ay,az,gr,gp,gy". The optional sidecar
// ("<path>.meta", key=value lines) carries subject_id and nominal_rate.
void write_recording_csv(const Recording& rec, const std::string& path,
                         bool write_sidecar = true);
Recording read_recording_csv(const std::string& path);

// Compact little-endian binary log: magic "AKL1", rate (f32), count (u32),
// then count x 7 f32 values (t, ax, ay, az, gr, gp, gy).
void write_recording_binary(const Recording& rec, const std::string& path);
Recording read_recording_binary(const std::string& path);

}  // namespace akb
