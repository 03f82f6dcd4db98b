#include "akb/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace akb {

std::vector<GestureTemplate> default_gesture_templates() {
    std::vector<GestureTemplate> templates(4);
    auto amp = [](float ax, float ay, float az, float gr, float gp, float gy) {
        Vec6f v;
        v << ax, ay, az, gr, gp, gy;
        return v;
    };
    templates[0] = {BurstShape::HalfSine, amp(0, 0, 6.0f, 0, 1.2f, 0)};    // toe lift
    templates[1] = {BurstShape::FullSine, amp(5.0f, 0, 0, 1.0f, 0, 0)};    // heel rock
    templates[2] = {BurstShape::DoubleBump, amp(0, 4.0f, 0, 0, 0, 1.4f)};  // outward tap
    templates[3] = {BurstShape::Triangle, amp(-4.0f, 0, 0, 0, 0, -1.4f)};  // inward sweep
    return templates;
}

namespace {

double burst_shape(BurstShape shape, double u) {
    switch (shape) {
        case BurstShape::HalfSine: return std::sin(M_PI * u);
        case BurstShape::FullSine: return std::sin(2.0 * M_PI * u);
        case BurstShape::DoubleBump: return std::abs(std::sin(2.0 * M_PI * u));
        case BurstShape::Triangle: return 1.0 - std::abs(2.0 * u - 1.0);
    }
    return 0.0;
}

struct ScheduledBurst {
    int gesture = 0;  // 1-based class id
    double t_s = 0.0;
    double t_e = 0.0;
    double amp_scale = 1.0;
};

void validate_spec(const SynthSpec& spec) {
    if (!(spec.rate > 0.0)) throw DataError("synth: rate must be positive");
    if (spec.templates.empty()) throw DataError("synth: no gesture templates");
    for (const GestureTemplate& t : spec.templates)
        if (t.amplitude.isZero()) throw DataError("synth: zero-amplitude gesture template");
    if (!(spec.duration_min > 0.0) || spec.duration_max < spec.duration_min)
        throw DataError("synth: degenerate burst duration range");
    if (spec.events_per_class < 0) throw DataError("synth: negative event count");
}

}  // namespace

std::pair<Recording, std::vector<LabelInterval>> generate_synthetic(const SynthSpec& spec,
                                                                    std::uint64_t seed) {
    validate_spec(spec);
    std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(spec.subject_id)));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

    // Per-subject jitter, drawn before anything else so the schedule and
    // noise depend on it deterministically.
    const double subj_amp = uniform(1.0 - spec.subject_amp_jitter, 1.0 + spec.subject_amp_jitter);
    const double subj_time =
        uniform(1.0 - spec.subject_time_jitter, 1.0 + spec.subject_time_jitter);

    // Slow sway: one sinusoid per channel with subject-specific phase/frequency.
    double sway_freq[6], sway_phase[6];
    for (int c = 0; c < 6; ++c) {
        sway_freq[c] = uniform(0.2, 0.5);
        sway_phase[c] = uniform(0.0, 2.0 * M_PI);
    }

    // Interleaved schedule: every class appears events_per_class times, in
    // shuffled order; paired mode turns each entry into two bursts.
    const int num_classes = static_cast<int>(spec.templates.size());
    std::vector<int> order;
    for (int c = 1; c <= num_classes; ++c)
        for (int i = 0; i < spec.events_per_class; ++i) order.push_back(c);
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<ScheduledBurst> bursts;
    std::vector<LabelInterval> labels;
    double t = spec.lead_noise;
    auto place_burst = [&](int gesture) {
        ScheduledBurst b;
        b.gesture = gesture;
        b.t_s = t;
        b.t_e = t + uniform(spec.duration_min, spec.duration_max) * subj_time;
        b.amp_scale =
            subj_amp * uniform(1.0 - spec.event_amp_jitter, 1.0 + spec.event_amp_jitter);
        bursts.push_back(b);
        labels.push_back({gesture, b.t_s, b.t_e});
        t = b.t_e;
    };
    for (int gesture : order) {
        place_burst(gesture);
        if (spec.paired) {
            t += uniform(spec.pair_gap_min, spec.pair_gap_max);
            place_burst(gesture);
        }
        t += uniform(spec.gap_min, spec.gap_max);
    }
    const double total = t + spec.trail_noise;

    Recording rec;
    rec.subject_id = spec.subject_id;
    rec.nominal_rate = spec.rate;
    const long n = static_cast<long>(std::floor(total * spec.rate)) + 1;
    rec.samples.reserve(n);

    std::normal_distribution<double> gauss(0.0, 1.0);
    std::size_t burst_cursor = 0;
    for (long i = 0; i < n; ++i) {
        ImuSample s;
        s.t = static_cast<double>(i) / spec.rate;
        double ch[6] = {0, 0, spec.gravity, 0, 0, 0};
        for (int c = 0; c < 6; ++c) {
            const double sway = c < 3 ? spec.sway_acc : spec.sway_gyro;
            const double noise = c < 3 ? spec.noise_acc : spec.noise_gyro;
            ch[c] += sway * std::sin(2.0 * M_PI * sway_freq[c] * s.t + sway_phase[c]);
            ch[c] += noise * gauss(rng);
        }
        while (burst_cursor < bursts.size() && bursts[burst_cursor].t_e < s.t) ++burst_cursor;
        if (burst_cursor < bursts.size()) {
            const ScheduledBurst& b = bursts[burst_cursor];
            if (s.t >= b.t_s && s.t <= b.t_e) {
                const double u = (s.t - b.t_s) / (b.t_e - b.t_s);
                const double g = burst_shape(spec.templates[b.gesture - 1].shape, u) * b.amp_scale;
                const Vec6f& amp = spec.templates[b.gesture - 1].amplitude;
                for (int c = 0; c < 6; ++c) ch[c] += amp[c] * g;
            }
        }
        s.acc = Eigen::Vector3f(static_cast<float>(ch[0]), static_cast<float>(ch[1]),
                                static_cast<float>(ch[2]));
        s.gyro = Eigen::Vector3f(static_cast<float>(ch[3]), static_cast<float>(ch[4]),
                                 static_cast<float>(ch[5]));
        rec.samples.push_back(s);
    }
    return {std::move(rec), std::move(labels)};
}

std::vector<SubjectData> make_synthetic_subjects(SynthSpec spec, int count, std::uint64_t seed) {
    std::vector<SubjectData> subjects;
    subjects.reserve(count);
    for (int id = 0; id < count; ++id) {
        spec.subject_id = id;
        auto [rec, labels] = generate_synthetic(spec, seed);
        subjects.push_back({std::move(rec), std::move(labels)});
    }
    return subjects;
}

}  // namespace akb
