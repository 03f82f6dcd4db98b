#include "akb/imu_data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace akb {

Vec6f normalize(const ImuSample& sample, const NormalizationConstants& consts) {
    if (!consts.valid()) throw DataError("normalize: non-positive normalization constant");
    if (!sample.finite()) throw DataError("normalize: non-finite sample");
    Vec6f out;
    out.head<3>() = sample.acc / consts.c_a;
    out.tail<3>() = sample.gyro / consts.c_g;
    return out;
}

void validate_recording(const Recording& rec) {
    if (rec.samples.empty()) throw DataError("recording: no samples");
    if (!(rec.nominal_rate > 0.0)) throw DataError("recording: nominal_rate must be positive");
    std::vector<double> gaps;
    gaps.reserve(rec.samples.size());
    for (std::size_t i = 0; i < rec.samples.size(); ++i) {
        const ImuSample& s = rec.samples[i];
        if (!s.finite())
            throw DataError("recording: non-finite sample at index " + std::to_string(i));
        if (i > 0) {
            const double gap = s.t - rec.samples[i - 1].t;
            if (!(gap > 0.0))
                throw DataError("recording: timestamps not strictly increasing at index " +
                                std::to_string(i));
            gaps.push_back(gap);
        }
    }
    if (!gaps.empty()) {
        auto mid = gaps.begin() + gaps.size() / 2;
        std::nth_element(gaps.begin(), mid, gaps.end());
        const double median = *mid;
        const double expected = 1.0 / rec.nominal_rate;
        if (std::abs(median - expected) > 0.1 * expected)
            throw DataError("recording: median sample gap " + std::to_string(median) +
                            " s inconsistent with nominal rate " +
                            std::to_string(rec.nominal_rate) + " Hz");
    }
}

std::vector<Window> make_windows(const Recording& rec, int k, int stride,
                                 const NormalizationConstants& consts) {
    if (k < 1) throw DataError("make_windows: k must be >= 1");
    if (stride < 1) throw DataError("make_windows: stride must be >= 1");
    const int n = static_cast<int>(rec.samples.size());
    std::vector<Window> windows;
    if (n < k) {
        log_warn("make_windows: recording of " + std::to_string(n) +
                 " samples is shorter than k=" + std::to_string(k));
        return windows;
    }
    const int count = (n - k) / stride + 1;
    windows.reserve(count);
    int out_of_range = 0;
    for (int w = 0; w < count; ++w) {
        Window win;
        win.start_index = w * stride;
        win.values.resize(k, 6);
        for (int row = 0; row < k; ++row)
            win.values.row(row) = normalize(rec.samples[win.start_index + row], consts).transpose();
        if ((win.values.array().abs() > 2.0f).any()) ++out_of_range;
        windows.push_back(std::move(win));
    }
    if (out_of_range > 0)
        log_msg(LogLevel::Debug, "make_windows: " + std::to_string(out_of_range) + "/" +
                                     std::to_string(count) +
                                     " windows exceed the typical [-2,2] normalized range");
    return windows;
}

Recording resample(const Recording& rec, double target_rate) {
    validate_recording(rec);
    if (!(target_rate > 0.0)) throw DataError("resample: target_rate must be positive");
    if (target_rate > rec.nominal_rate)
        throw DataError("resample: upsampling unsupported (target " + std::to_string(target_rate) +
                        " Hz > nominal " + std::to_string(rec.nominal_rate) + " Hz)");

    Recording out;
    out.subject_id = rec.subject_id;
    out.nominal_rate = target_rate;

    const double t0 = rec.samples.front().t;
    const double t_end = rec.samples.back().t;
    const long grid_points = static_cast<long>(std::floor((t_end - t0) * target_rate)) + 1;
    out.samples.reserve(grid_points);

    std::size_t cursor = 0;
    long last_taken = -1;
    for (long i = 0; i < grid_points; ++i) {
        const double target = t0 + static_cast<double>(i) / target_rate;
        while (cursor + 1 < rec.samples.size() &&
               std::abs(rec.samples[cursor + 1].t - target) <=
                   std::abs(rec.samples[cursor].t - target))
            ++cursor;
        if (static_cast<long>(cursor) == last_taken) continue;  // never duplicate a sample
        out.samples.push_back(rec.samples[cursor]);
        last_taken = static_cast<long>(cursor);
    }
    return out;
}

// --- CSV ------------------------------------------------------------------

namespace {

std::string sidecar_path(const std::string& path) { return path + ".meta"; }

void write_sidecar_file(const Recording& rec, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open " + path + " for writing");
    out << "subject_id=" << rec.subject_id << "\n";
    out << "nominal_rate=" << rec.nominal_rate << "\n";
}

void read_sidecar_file(Recording& rec, const std::string& path) {
    std::ifstream in(path);
    if (!in) return;  // sidecar is optional
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = line.substr(0, eq);
        const std::string value = line.substr(eq + 1);
        if (key == "subject_id") rec.subject_id = std::stoi(value);
        else if (key == "nominal_rate") rec.nominal_rate = std::stod(value);
    }
}

}  // namespace

void write_recording_csv(const Recording& rec, const std::string& path, bool write_sidecar) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open " + path + " for writing");
    out << "t,ax,ay,az,gr,gp,gy\n";
    out.precision(9);
    for (const ImuSample& s : rec.samples) {
        out.precision(12);
        out << s.t;
        out.precision(9);
        for (int i = 0; i < 3; ++i) out << ',' << s.acc[i];
        for (int i = 0; i < 3; ++i) out << ',' << s.gyro[i];
        out << '\n';
    }
    if (write_sidecar) write_sidecar_file(rec, sidecar_path(path));
}

Recording read_recording_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    Recording rec;
    std::string line;
    if (!std::getline(in, line)) throw DataError(path + ": empty file");
    if (line.rfind("t,", 0) != 0) throw DataError(path + ": missing t,ax,... header");
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream row(line);
        ImuSample s;
        char comma;
        row >> s.t;
        for (int i = 0; i < 3; ++i) row >> comma >> s.acc[i];
        for (int i = 0; i < 3; ++i) row >> comma >> s.gyro[i];
        if (!row) throw DataError(path + ": malformed row at line " + std::to_string(lineno));
        rec.samples.push_back(s);
    }
    read_sidecar_file(rec, sidecar_path(path));
    validate_recording(rec);
    return rec;
}

// --- binary log -----------------------------------------------------------

namespace {
constexpr char kLogMagic[4] = {'A', 'K', 'L', '1'};
}

void write_recording_binary(const Recording& rec, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open " + path + " for writing");
    out.write(kLogMagic, 4);
    const float rate = static_cast<float>(rec.nominal_rate);
    const std::uint32_t count = static_cast<std::uint32_t>(rec.samples.size());
    out.write(reinterpret_cast<const char*>(&rate), 4);
    out.write(reinterpret_cast<const char*>(&count), 4);
    for (const ImuSample& s : rec.samples) {
        float row[7] = {static_cast<float>(s.t), s.acc[0], s.acc[1], s.acc[2],
                        s.gyro[0], s.gyro[1], s.gyro[2]};
        out.write(reinterpret_cast<const char*>(row), sizeof(row));
    }
}

Recording read_recording_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kLogMagic, 4) != 0)
        throw DataError(path + ": bad binary log magic");
    float rate = 0.0f;
    std::uint32_t count = 0;
    in.read(reinterpret_cast<char*>(&rate), 4);
    in.read(reinterpret_cast<char*>(&count), 4);
    if (!in) throw DataError(path + ": truncated header");
    Recording rec;
    rec.nominal_rate = rate;
    rec.samples.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        float row[7];
        in.read(reinterpret_cast<char*>(row), sizeof(row));
        if (!in) throw DataError(path + ": truncated at sample " + std::to_string(i));
        ImuSample s;
        s.t = row[0];
        s.acc = Eigen::Vector3f(row[1], row[2], row[3]);
        s.gyro = Eigen::Vector3f(row[4], row[5], row[6]);
        rec.samples.push_back(s);
    }
    validate_recording(rec);
    return rec;
}

}  // namespace akb
