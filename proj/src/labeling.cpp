#include "akb/labeling.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace akb {

double overlap(double window_start, double window_end, double gesture_start,
               double gesture_end, OverlapVariant variant) {
    if (!(gesture_start < gesture_end))
        throw DataError("overlap: gesture interval must have positive length");
    if (!(window_start <= window_end))
        throw DataError("overlap: window interval must be ordered");

    const double inter = std::max(0.0, std::min(window_end, gesture_end) -
                                           std::max(window_start, gesture_start));
    if (variant == OverlapVariant::Coverage)
        return inter / (gesture_end - gesture_start);
    const double uni = (window_end - window_start) + (gesture_end - gesture_start) - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

std::pair<int, double> label_interval_set(double window_start, double window_end,
                                          const std::vector<LabelInterval>& labels,
                                          const OverlapConfig& cfg) {
    int best_cls = 0;
    double best_score = 0.0;
    double best_ts = 0.0;
    for (const LabelInterval& li : labels) {
        const double score = overlap(window_start, window_end, li.t_s, li.t_e, cfg.variant);
        if (score > best_score || (score == best_score && best_cls != 0 && li.t_s < best_ts)) {
            best_cls = li.gesture;
            best_score = score;
            best_ts = li.t_s;
        }
    }
    if (best_score < cfg.sigma) return {0, best_score};
    return {best_cls, best_score};
}

LabeledWindow label_window(const Window& window, double t_start, double rate,
                           const std::vector<LabelInterval>& labels, const OverlapConfig& cfg,
                           int subject) {
    if (!(rate > 0.0)) throw DataError("label_window: rate must be positive");
    const double span = (window.values.rows() - 1) / rate;
    const auto [cls, score] = label_interval_set(t_start, t_start + span, labels, cfg);
    LabeledWindow out;
    out.window = window;
    out.cls = cls;
    out.overlap_score = static_cast<float>(score);
    out.subject = subject;
    return out;
}

std::vector<long> Dataset::class_histogram(int num_classes) const {
    std::vector<long> hist(num_classes, 0);
    for (long i = 0; i < labels.size(); ++i) {
        const int c = labels[i];
        if (c >= 0 && c < num_classes) ++hist[c];
    }
    return hist;
}

Dataset build_dataset(const std::vector<SubjectData>& subjects, int k, int stride,
                      const OverlapConfig& cfg, const NormalizationConstants& consts) {
    if (!(cfg.sigma > 0.0 && cfg.sigma <= 1.0))
        throw DataError("build_dataset: sigma must be in (0, 1]");

    Dataset data;
    data.k = k;
    data.sigma = cfg.sigma;
    data.variant = cfg.variant;

    struct Row {
        Eigen::RowVectorXf values;
        int cls;
        float score;
        int subject;
        int start;
    };
    std::vector<Row> rows;

    for (const SubjectData& subj : subjects) {
        validate_recording(subj.recording);
        if (data.rate == 0.0) data.rate = subj.recording.nominal_rate;
        for (const LabelInterval& li : subj.labels) {
            if (!(li.t_s < li.t_e))
                throw DataError("build_dataset: degenerate label interval");
            if (li.duration() < 0.3 || li.duration() > 2.0)
                log_warn("label interval of " + std::to_string(li.duration()) +
                         " s outside the typical [0.3, 2.0] s range");
        }
        const double window_span = (k - 1) / subj.recording.nominal_rate;
        const auto windows = make_windows(subj.recording, k, stride, consts);
        for (const Window& win : windows) {
            const double t_start = subj.recording.samples[win.start_index].t;
            const auto [cls, score] =
                label_interval_set(t_start, t_start + window_span, subj.labels, cfg);
            Row row;
            // Window values are k x 6; dataset rows flatten time-major (t*6 + c).
            Eigen::RowVectorXf flat(k * 6);
            for (int t = 0; t < k; ++t)
                for (int c = 0; c < 6; ++c) flat[t * 6 + c] = win.values(t, c);
            row.values = std::move(flat);
            row.cls = cls;
            row.score = static_cast<float>(score);
            row.subject = subj.recording.subject_id;
            row.start = win.start_index;
            rows.push_back(std::move(row));
        }
    }

    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
        return a.subject != b.subject ? a.subject < b.subject : a.start < b.start;
    });

    const long n = static_cast<long>(rows.size());
    data.windows.resize(n, k * 6);
    data.labels.resize(n);
    data.overlap_scores.resize(n);
    data.subjects.resize(n);
    data.start_indices.resize(n);
    for (long i = 0; i < n; ++i) {
        data.windows.row(i) = rows[i].values;
        data.labels[i] = rows[i].cls;
        data.overlap_scores[i] = rows[i].score;
        data.subjects[i] = rows[i].subject;
        data.start_indices[i] = rows[i].start;
    }

    const auto hist = data.class_histogram();
    std::ostringstream msg;
    msg << "dataset: " << n << " windows, class histogram";
    for (std::size_t c = 0; c < hist.size(); ++c) msg << " " << c << ":" << hist[c];
    log_info(msg.str());
    return data;
}

// --- label CSV --------------------------------------------------------------

void write_labels_csv(const std::vector<LabelInterval>& labels, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open " + path + " for writing");
    out << "gesture,t_start,t_end\n";
    out.precision(12);
    for (const LabelInterval& li : labels)
        out << li.gesture << ',' << li.t_s << ',' << li.t_e << '\n';
}

std::vector<LabelInterval> read_labels_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError(path + ": empty file");
    if (line.rfind("gesture,", 0) != 0)
        throw DataError(path + ": missing gesture,t_start,t_end header");
    std::vector<LabelInterval> labels;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        LabelInterval li;
        char comma;
        row >> li.gesture >> comma >> li.t_s >> comma >> li.t_e;
        if (!row) throw DataError(path + ": malformed label row");
        if (li.gesture < 1 || li.gesture > 4)
            throw DataError(path + ": gesture id must be in {1,2,3,4}");
        if (!(li.t_s < li.t_e)) throw DataError(path + ": label interval must have t_start < t_end");
        labels.push_back(li);
    }
    return labels;
}

// --- dataset binary ----------------------------------------------------------

namespace {
constexpr char kDatasetMagic[4] = {'A', 'K', 'D', '1'};
}

void write_dataset(const Dataset& data, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open " + path + " for writing");
    out.write(kDatasetMagic, 4);
    const std::uint32_t k = static_cast<std::uint32_t>(data.k);
    const std::uint32_t variant = data.variant == OverlapVariant::Coverage ? 0 : 1;
    const std::uint32_t count = static_cast<std::uint32_t>(data.size());
    out.write(reinterpret_cast<const char*>(&k), 4);
    out.write(reinterpret_cast<const char*>(&data.rate), 8);
    out.write(reinterpret_cast<const char*>(&data.sigma), 8);
    out.write(reinterpret_cast<const char*>(&variant), 4);
    out.write(reinterpret_cast<const char*>(&count), 4);
    std::vector<float> row(data.k * 6);
    for (long i = 0; i < data.size(); ++i) {
        Eigen::Map<Eigen::RowVectorXf>(row.data(), data.k * 6) = data.windows.row(i);
        out.write(reinterpret_cast<const char*>(row.data()), row.size() * sizeof(float));
        const std::uint8_t cls = static_cast<std::uint8_t>(data.labels[i]);
        out.write(reinterpret_cast<const char*>(&cls), 1);
    }
}

Dataset read_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kDatasetMagic, 4) != 0)
        throw DataError(path + ": bad dataset magic");
    std::uint32_t k = 0, variant = 0, count = 0;
    Dataset data;
    in.read(reinterpret_cast<char*>(&k), 4);
    in.read(reinterpret_cast<char*>(&data.rate), 8);
    in.read(reinterpret_cast<char*>(&data.sigma), 8);
    in.read(reinterpret_cast<char*>(&variant), 4);
    in.read(reinterpret_cast<char*>(&count), 4);
    if (!in) throw DataError(path + ": truncated dataset header");
    data.k = static_cast<int>(k);
    data.variant = variant == 0 ? OverlapVariant::Coverage : OverlapVariant::Iou;
    data.windows.resize(count, data.k * 6);
    data.labels.resize(count);
    data.overlap_scores = Eigen::VectorXf::Zero(count);
    data.subjects.assign(count, 0);
    data.start_indices.assign(count, 0);
    std::vector<float> row(data.k * 6);
    for (std::uint32_t i = 0; i < count; ++i) {
        in.read(reinterpret_cast<char*>(row.data()), row.size() * sizeof(float));
        std::uint8_t cls = 0;
        in.read(reinterpret_cast<char*>(&cls), 1);
        if (!in) throw DataError(path + ": truncated at record " + std::to_string(i));
        data.windows.row(i) = Eigen::Map<Eigen::RowVectorXf>(row.data(), data.k * 6);
        data.labels[i] = cls;
    }
    return data;
}

void write_dataset_summary_csv(const Dataset& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open " + path + " for writing");
    std::map<int, std::vector<long>> per_subject;
    for (long i = 0; i < data.size(); ++i) {
        auto& hist = per_subject[data.subjects[i]];
        if (hist.empty()) hist.assign(5, 0);
        const int c = data.labels[i];
        if (c >= 0 && c < 5) ++hist[c];
    }
    out << "subject,class0,class1,class2,class3,class4\n";
    for (const auto& [subject, hist] : per_subject) {
        out << subject;
        for (long n : hist) out << ',' << n;
        out << '\n';
    }
}

}  // namespace akb
