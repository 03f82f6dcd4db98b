#pragma once

#include <cstdint>
#include <vector>

#include "akb/labeling.hpp"

namespace akb {

enum class BurstShape { HalfSine, FullSine, DoubleBump, Triangle };

// Additive burst injected on top of the noise floor. `amplitude` holds
// per-channel peaks in physical units (acc m/s^2, gyro rad/s), so each
// gesture class can live on its own channel subset.
struct GestureTemplate {
    BurstShape shape = BurstShape::HalfSine;
    Vec6f amplitude = Vec6f::Zero();
};

// Four well-separated classes on distinct channel subsets.
std::vector<GestureTemplate> default_gesture_templates();

struct SynthSpec {
    double rate = 100.0;
    int subject_id = 0;

    int events_per_class = 8;  // performances per gesture class
    bool paired = false;       // schedule every performance as a double gesture

    double duration_min = 0.5, duration_max = 0.8;  // burst length, seconds
    double gap_min = 1.0, gap_max = 2.0;            // between scheduled entries
    double pair_gap_min = 0.7, pair_gap_max = 1.1;  // between the two bursts of a pair
    double lead_noise = 4.0, trail_noise = 4.0;     // pure-noise stretches, seconds

    double noise_acc = 0.4, noise_gyro = 0.15;  // white noise sigma
    double sway_acc = 0.2, sway_gyro = 0.06;    // slow body-sway amplitude
    double gravity = 9.81;                      // resting acc z baseline

    double subject_amp_jitter = 0.2;   // per-subject amplitude scale in [1-j, 1+j]
    double subject_time_jitter = 0.1;  // per-subject duration scale in [1-j, 1+j]
    double event_amp_jitter = 0.1;     // additional per-event amplitude scale

    std::vector<GestureTemplate> templates = default_gesture_templates();
};

// Deterministic synthetic recording plus the exact ground-truth intervals
// of every injected burst. The same (spec, seed) always reproduces the
// same bits; distinct subject_ids draw independent jitter.
std::pair<Recording, std::vector<LabelInterval>> generate_synthetic(const SynthSpec& spec,
                                                                    std::uint64_t seed);

// `count` subjects with ids 0..count-1 sharing one base seed.
std::vector<SubjectData> make_synthetic_subjects(SynthSpec spec, int count, std::uint64_t seed);

}  // namespace akb
