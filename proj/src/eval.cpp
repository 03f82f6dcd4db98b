#include "akb/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <filesystem>
#include <future>
#include <map>
#include <memory>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace akb {

FoldPlan make_loso_plan(const std::vector<int>& subject_ids) {
    if (subject_ids.size() < 2)
        throw DataError("cross-validation needs at least two subjects");
    FoldPlan plan;
    for (int test : subject_ids) {
        FoldPlan::Fold fold;
        fold.test_subject = test;
        for (int other : subject_ids)
            if (other != test) fold.train_subjects.push_back(other);
        plan.folds.push_back(std::move(fold));
    }
    return plan;
}

ModelKind parse_model_kind(const std::string& name) {
    if (name == "nn") return ModelKind::Nn;
    if (name == "lda") return ModelKind::Lda;
    if (name == "svm") return ModelKind::Svm;
    if (name == "rf") return ModelKind::Rf;
    if (name == "dtw") return ModelKind::Dtw;
    throw DataError("unknown model kind '" + name + "' (expected nn|lda|svm|rf|dtw)");
}

const char* model_kind_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::Nn: return "nn";
        case ModelKind::Lda: return "lda";
        case ModelKind::Svm: return "svm";
        case ModelKind::Rf: return "rf";
        case ModelKind::Dtw: return "dtw";
    }
    return "?";
}

std::vector<SubjectData> load_subjects_dir(const std::string& data_dir) {
    namespace fs = std::filesystem;
    std::vector<fs::path> recordings;
    for (const auto& entry : fs::directory_iterator(data_dir)) {
        const std::string name = entry.path().filename().string();
        if (entry.path().extension() == ".csv" && name.find("_labels") == std::string::npos)
            recordings.push_back(entry.path());
    }
    std::sort(recordings.begin(), recordings.end());
    std::vector<SubjectData> subjects;
    std::set<int> seen_ids;
    for (const fs::path& rec_path : recordings) {
        SubjectData subject;
        subject.recording = read_recording_csv(rec_path.string());
        // Files without sidecar metadata all land on subject 0; fall back
        // to file order so leave-one-subject-out still has distinct folds.
        if (!seen_ids.insert(subject.recording.subject_id).second) {
            const int fallback = static_cast<int>(subjects.size());
            log_warn(rec_path.filename().string() + ": duplicate subject id " +
                     std::to_string(subject.recording.subject_id) + ", using file order id " +
                     std::to_string(fallback));
            subject.recording.subject_id = fallback;
            seen_ids.insert(fallback);
        }
        fs::path label_path = rec_path;
        label_path.replace_filename(rec_path.stem().string() + "_labels.csv");
        if (fs::exists(label_path)) subject.labels = read_labels_csv(label_path.string());
        subjects.push_back(std::move(subject));
    }
    if (subjects.empty()) throw DataError("no recording CSVs found under " + data_dir);
    return subjects;
}

MetricSummary summarize(const std::vector<double>& values) {
    MetricSummary s;
    double sum = 0.0;
    for (double v : values) {
        if (std::isnan(v)) continue;
        sum += v;
        ++s.defined_folds;
    }
    if (s.defined_folds == 0) return s;
    s.mean = sum / s.defined_folds;
    double sq = 0.0;
    for (double v : values) {
        if (std::isnan(v)) continue;
        sq += (v - s.mean) * (v - s.mean);
    }
    s.stddev = s.defined_folds > 1 ? std::sqrt(sq / (s.defined_folds - 1)) : 0.0;
    return s;
}

namespace {

Dataset concat_datasets(const std::vector<const Dataset*>& parts) {
    Dataset out;
    long rows = 0;
    for (const Dataset* part : parts) rows += part->size();
    if (parts.empty() || rows == 0) throw DataError("cross_validate: empty training fold");
    const Dataset& first = *parts.front();
    out.k = first.k;
    out.rate = first.rate;
    out.sigma = first.sigma;
    out.variant = first.variant;
    out.windows.resize(rows, first.windows.cols());
    out.labels.resize(rows);
    out.overlap_scores.resize(rows);
    out.subjects.reserve(rows);
    out.start_indices.reserve(rows);
    long at = 0;
    for (const Dataset* part : parts) {
        out.windows.middleRows(at, part->size()) = part->windows;
        out.labels.segment(at, part->size()) = part->labels;
        out.overlap_scores.segment(at, part->size()) = part->overlap_scores;
        out.subjects.insert(out.subjects.end(), part->subjects.begin(), part->subjects.end());
        out.start_indices.insert(out.start_indices.end(), part->start_indices.begin(),
                                 part->start_indices.end());
        at += part->size();
    }
    return out;
}

std::unique_ptr<Classifier> fit_model(ModelKind kind, const Dataset& train,
                                      const EvalConfig& cfg, std::uint64_t fold_seed) {
    switch (kind) {
        case ModelKind::Nn: {
            ModelConfig mc = cfg.model;
            mc.input_length = train.k;
            TrainConfig tc = cfg.train;
            tc.seed = fold_seed;
            auto [model, report] = fit<float>(train, mc, tc);
            return std::make_unique<NeuralClassifier>(std::move(model));
        }
        case ModelKind::Lda: return std::make_unique<LdaModel>(fit_lda(train, cfg.lda));
        case ModelKind::Svm: {
            SvmConfig sc = cfg.svm;
            sc.seed = fold_seed;
            return std::make_unique<SvmModel>(fit_linear_svm(train, sc));
        }
        case ModelKind::Rf: {
            ForestConfig fc = cfg.forest;
            fc.seed = fold_seed;
            return std::make_unique<RandomForestModel>(fit_random_forest(train, fc));
        }
        case ModelKind::Dtw: {
            DtwConfig dc = cfg.dtw;
            dc.seed = fold_seed;
            return std::make_unique<DtwModel>(fit_dtw(train, dc));
        }
    }
    throw DataError("fit_model: unhandled kind");
}

FoldResult run_fold(const std::map<int, Dataset>& per_subject, const FoldPlan::Fold& fold,
                    ModelKind kind, const EvalConfig& cfg) {
    FoldResult result;
    result.test_subject = fold.test_subject;

    const std::uint64_t fold_seed =
        mix_seed(cfg.seed, 0xF01D0000ull + static_cast<std::uint64_t>(fold.test_subject));

    std::vector<int> train_subjects = fold.train_subjects;
    if (cfg.train_subject_count > 0 &&
        cfg.train_subject_count < static_cast<int>(train_subjects.size())) {
        std::mt19937_64 rng(mix_seed(fold_seed, 0x5B));
        std::shuffle(train_subjects.begin(), train_subjects.end(), rng);
        train_subjects.resize(cfg.train_subject_count);
        result.notes.push_back("trained on " + std::to_string(cfg.train_subject_count) +
                               " randomly drawn subjects");
    }

    std::vector<const Dataset*> parts;
    for (int s : train_subjects) parts.push_back(&per_subject.at(s));
    const Dataset train = concat_datasets(parts);
    const Dataset& test = per_subject.at(fold.test_subject);
    const auto model = fit_model(kind, train, cfg, fold_seed);

    if (kind == ModelKind::Dtw && test.size() > cfg.dtw_max_eval_windows) {
        // DTW prediction cost caps the evaluated subset (seeded, stable).
        std::vector<long> rows(test.size());
        std::iota(rows.begin(), rows.end(), 0);
        std::mt19937_64 rng(mix_seed(fold_seed, 0xD7));
        std::shuffle(rows.begin(), rows.end(), rng);
        rows.resize(cfg.dtw_max_eval_windows);
        std::sort(rows.begin(), rows.end());
        Eigen::MatrixXf windows(rows.size(), test.windows.cols());
        Eigen::VectorXi labels(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            windows.row(i) = test.windows.row(rows[i]);
            labels[i] = test.labels[rows[i]];
        }
        result.metrics =
            evaluate_predictions(labels, model->predict(windows), model->num_classes());
        result.notes.push_back("dtw evaluated on a seeded subsample of " +
                               std::to_string(rows.size()) + "/" + std::to_string(test.size()) +
                               " windows");
    } else {
        result.metrics = evaluate(*model, test);
    }

    std::vector<long> hist(model->num_classes(), 0);
    for (Eigen::Index i = 0; i < test.labels.size(); ++i) ++hist[test.labels[i]];
    for (std::size_t c = 0; c < hist.size(); ++c)
        if (hist[c] == 0)
            result.notes.push_back("class " + std::to_string(c) +
                                   " missing from the test subject; metrics partially defined");
    return result;
}

}  // namespace

FoldSummary cross_validate(const std::vector<SubjectData>& subjects, ModelKind kind,
                           const EvalConfig& cfg) {
    std::vector<int> ids;
    std::map<int, Dataset> per_subject;
    for (const SubjectData& subject : subjects) {
        const int id = subject.recording.subject_id;
        if (per_subject.count(id))
            throw DataError("cross_validate: duplicate subject id " + std::to_string(id));
        ids.push_back(id);
        per_subject.emplace(id,
                            build_dataset({subject}, cfg.k, cfg.stride, cfg.overlap, cfg.norm));
    }
    const FoldPlan plan = make_loso_plan(ids);

    FoldSummary summary;
    summary.folds.resize(plan.folds.size());
    if (cfg.jobs > 1) {
        std::vector<std::future<FoldResult>> futures;
        for (const auto& fold : plan.folds)
            futures.push_back(std::async(std::launch::async, run_fold, std::cref(per_subject),
                                         std::cref(fold), kind, std::cref(cfg)));
        for (std::size_t i = 0; i < futures.size(); ++i) summary.folds[i] = futures[i].get();
    } else {
        for (std::size_t i = 0; i < plan.folds.size(); ++i)
            summary.folds[i] = run_fold(per_subject, plan.folds[i], kind, cfg);
    }

    std::vector<double> acc, mp, mr, mf;
    for (const FoldResult& fold : summary.folds) {
        acc.push_back(fold.metrics.accuracy);
        mp.push_back(fold.metrics.macro_precision);
        mr.push_back(fold.metrics.macro_recall);
        mf.push_back(fold.metrics.macro_f1);
        if (summary.pooled_confusion.size() == 0)
            summary.pooled_confusion = fold.metrics.confusion;
        else
            summary.pooled_confusion += fold.metrics.confusion;
    }
    summary.accuracy = summarize(acc);
    summary.macro_precision = summarize(mp);
    summary.macro_recall = summarize(mr);
    summary.macro_f1 = summarize(mf);
    return summary;
}

void write_fold_summary_csv(const FoldSummary& summary, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open " + path + " for writing");
    out.precision(12);
    out << "fold_test_subject,accuracy,macro_precision,macro_recall,macro_f1,notes\n";
    for (const FoldResult& fold : summary.folds) {
        out << fold.test_subject << ',' << fold.metrics.accuracy << ','
            << fold.metrics.macro_precision << ',' << fold.metrics.macro_recall << ','
            << fold.metrics.macro_f1 << ',';
        for (std::size_t i = 0; i < fold.notes.size(); ++i)
            out << (i ? "; " : "") << fold.notes[i];
        out << '\n';
    }
    out << "mean," << summary.accuracy.mean << ',' << summary.macro_precision.mean << ','
        << summary.macro_recall.mean << ',' << summary.macro_f1.mean << ",\n";
    out << "stddev," << summary.accuracy.stddev << ',' << summary.macro_precision.stddev << ','
        << summary.macro_recall.stddev << ',' << summary.macro_f1.stddev << ",\n";
}

std::string fold_summary_json(const FoldSummary& summary) {
    std::ostringstream out;
    out.precision(12);
    auto metric = [&out](const char* name, const MetricSummary& m, bool comma = true) {
        out << "  \"" << name << "\": {\"mean\": " << m.mean << ", \"stddev\": " << m.stddev
            << ", \"defined_folds\": " << m.defined_folds << "}" << (comma ? ",\n" : "\n");
    };
    out << "{\n  \"folds\": [\n";
    for (std::size_t i = 0; i < summary.folds.size(); ++i) {
        const FoldResult& f = summary.folds[i];
        out << "    {\"test_subject\": " << f.test_subject
            << ", \"accuracy\": " << f.metrics.accuracy
            << ", \"macro_precision\": " << f.metrics.macro_precision
            << ", \"macro_recall\": " << f.metrics.macro_recall
            << ", \"macro_f1\": " << f.metrics.macro_f1 << "}"
            << (i + 1 < summary.folds.size() ? "," : "") << "\n";
    }
    out << "  ],\n";
    metric("accuracy", summary.accuracy);
    metric("macro_precision", summary.macro_precision);
    metric("macro_recall", summary.macro_recall);
    metric("macro_f1", summary.macro_f1, false);
    out << "}\n";
    return out.str();
}

// --- sweeps ------------------------------------------------------------------------

SweepAxis parse_sweep_axis(const std::string& name) {
    if (name == "window_duration") return SweepAxis::WindowDuration;
    if (name == "sigma") return SweepAxis::Sigma;
    if (name == "frequency") return SweepAxis::Frequency;
    if (name == "train_subject_count") return SweepAxis::TrainSubjectCount;
    throw DataError("unknown sweep axis '" + name + "'");
}

const char* sweep_axis_name(SweepAxis axis) {
    switch (axis) {
        case SweepAxis::WindowDuration: return "window_duration";
        case SweepAxis::Sigma: return "sigma";
        case SweepAxis::Frequency: return "frequency";
        case SweepAxis::TrainSubjectCount: return "train_subject_count";
    }
    return "?";
}

SweepSpec default_sweep(SweepAxis axis) {
    SweepSpec spec;
    spec.axis = axis;
    switch (axis) {
        case SweepAxis::WindowDuration:
            spec.grid = {0.1, 0.3, 0.5, 0.6, 0.8, 1.0, 1.2, 1.5};
            break;
        case SweepAxis::Sigma:
            spec.grid = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
            break;
        case SweepAxis::Frequency:
            spec.grid = {20, 40, 60, 80, 100, 150, 200};
            break;
        case SweepAxis::TrainSubjectCount:
            spec.grid = {1, 2, 3, 4, 5, 6, 7, 8, 9};
            break;
    }
    return spec;
}

namespace {

std::uint64_t value_seed(std::uint64_t base, SweepAxis axis, double value) {
    std::uint64_t bits;
    std::memcpy(&bits, &value, sizeof(bits));
    return mix_seed(mix_seed(base, static_cast<std::uint64_t>(axis) + 0xA0), bits);
}

}  // namespace

SweepResults sweep(const SweepSpec& spec, const std::vector<SubjectData>& subjects,
                   ModelKind kind, const EvalConfig& cfg) {
    if (spec.grid.empty()) throw DataError("sweep: empty grid");
    SweepResults results;
    results.spec = spec;

    const double source_rate = subjects.empty() ? 100.0 : subjects.front().recording.nominal_rate;
    const double window_duration = cfg.k / source_rate;

    for (double value : spec.grid) {
        SweepPoint point;
        point.value = value;
        EvalConfig point_cfg = cfg;
        point_cfg.seed = value_seed(cfg.seed, spec.axis, value);
        std::vector<SubjectData> point_subjects;
        const std::vector<SubjectData>* active = &subjects;
        try {
            switch (spec.axis) {
                case SweepAxis::WindowDuration: {
                    const int k = static_cast<int>(std::lround(value * source_rate));
                    if (k < 2 || k < cfg.model.conv_kernel)
                        throw DataError("duration yields k=" + std::to_string(k) +
                                        ", shorter than the model can consume");
                    point_cfg.k = k;
                    break;
                }
                case SweepAxis::Sigma:
                    if (!(value > 0.0 && value <= 1.0))
                        throw DataError("sigma must lie in (0,1]");
                    point_cfg.overlap.sigma = value;
                    break;
                case SweepAxis::Frequency: {
                    if (value > source_rate)
                        throw DataError("frequency above the source rate (no upsampling)");
                    const int k = static_cast<int>(std::lround(window_duration * value));
                    if (k < 2 || k < cfg.model.conv_kernel)
                        throw DataError("frequency yields k=" + std::to_string(k));
                    point_subjects.reserve(subjects.size());
                    for (const SubjectData& s : subjects)
                        point_subjects.push_back({resample(s.recording, value), s.labels});
                    active = &point_subjects;
                    point_cfg.k = k;
                    break;
                }
                case SweepAxis::TrainSubjectCount: {
                    const int m = static_cast<int>(std::lround(value));
                    if (m < 1 || m + 1 > static_cast<int>(subjects.size()))
                        throw DataError("train subject count must be in [1, subjects-1]");
                    point_cfg.train_subject_count = m;
                    break;
                }
            }
            point.summary = cross_validate(*active, kind, point_cfg);
        } catch (const DataError& e) {
            point.skipped = true;
            point.note = e.what();
            log_warn("sweep point " + std::to_string(value) + " skipped: " + point.note);
        }
        results.points.push_back(std::move(point));
    }
    return results;
}

void write_sweep_csv(const SweepResults& results, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open " + path + " for writing");
    out.precision(12);
    out << sweep_axis_name(results.spec.axis)
        << ",accuracy_mean,accuracy_std,macro_precision_mean,macro_precision_std,"
           "macro_recall_mean,macro_recall_std,macro_f1_mean,macro_f1_std,skipped,note\n";
    for (const SweepPoint& p : results.points) {
        out << p.value << ',';
        if (p.skipped) {
            out << ",,,,,,,,1," << p.note << '\n';
            continue;
        }
        out << p.summary.accuracy.mean << ',' << p.summary.accuracy.stddev << ','
            << p.summary.macro_precision.mean << ',' << p.summary.macro_precision.stddev << ','
            << p.summary.macro_recall.mean << ',' << p.summary.macro_recall.stddev << ','
            << p.summary.macro_f1.mean << ',' << p.summary.macro_f1.stddev << ",0,\n";
    }
}

ConfusionReport confusion_report(const std::vector<SubjectData>& subjects, ModelKind kind,
                                 const EvalConfig& cfg) {
    const FoldSummary summary = cross_validate(subjects, kind, cfg);
    ConfusionReport report;
    report.counts = summary.pooled_confusion;
    report.row_normalized = row_normalized(summary.pooled_confusion);
    return report;
}

// --- end-to-end simulation ------------------------------------------------------------

namespace {

struct ExpectedPair {
    int cls;
    double t_start;
    double t_end;
    bool matched = false;
};

std::vector<ExpectedPair> expected_pairs_from_labels(const std::vector<LabelInterval>& labels,
                                                     double timeout) {
    std::vector<ExpectedPair> pairs;
    std::vector<LabelInterval> sorted = labels;
    std::sort(sorted.begin(), sorted.end(),
              [](const LabelInterval& a, const LabelInterval& b) { return a.t_s < b.t_s; });
    std::map<int, const LabelInterval*> pending;
    for (const LabelInterval& li : sorted) {
        auto it = pending.find(li.gesture);
        if (it != pending.end() && li.t_s - it->second->t_e <= timeout) {
            pairs.push_back({li.gesture, it->second->t_s, li.t_e});
            pending.erase(it);
        } else {
            pending[li.gesture] = &li;
        }
    }
    return pairs;
}

}  // namespace

SessionReport simulate_e2e(const Recording& recording, const std::vector<LabelInterval>& labels,
                           const Model<float>& model, const SessionConfig& session_cfg) {
    SessionReport report;
    report.memory = budget_check(model.config, session_cfg.trigger, session_cfg.norm);
    if (!report.memory.pass())
        throw DataError("simulate_e2e: session exceeds the memory budget\n" +
                        report.memory.to_string());

    StreamSession session(model, session_cfg);
    GestureDetector detector(session_cfg.trigger);
    DoubleGestureGate gate(session_cfg.trigger);
    LoopbackTransport transport;
    HandController controller(transport);
    HandSimulator simulator(transport);

    auto expected = expected_pairs_from_labels(labels, session_cfg.trigger.double_gesture_timeout);
    report.per_class.assign(model.config.classes, {});
    for (const ExpectedPair& p : expected)
        if (p.cls >= 1 && p.cls < model.config.classes) ++report.per_class[p.cls].expected_pairs;

    // Confirmation must land inside the pair's span plus the tail the
    // detector needs to close its last event.
    const double slack = 1.5;

    long window_index = 0;
    auto handle_event = [&](const DetectionEvent& event) {
        ++report.detection_events;
        const auto confirmed = gate.feed(event);
        if (!confirmed) return;
        report.confirmed.push_back(*confirmed);
        bool hit = false;
        for (ExpectedPair& p : expected) {
            if (p.matched || p.cls != confirmed->cls) continue;
            if (confirmed->t >= p.t_start && confirmed->t <= p.t_end + slack) {
                p.matched = true;
                ++report.per_class[p.cls].confirmed_hits;
                hit = true;
                break;
            }
        }
        if (!hit) {
            ++report.false_activations;
            report.false_activation_times.push_back(confirmed->t);
        }
        if (controller.on_confirmed_gesture(confirmed->cls)) {
            ++report.commands_sent;
            simulator.poll(confirmed->t);
        }
    };

    for (const ImuSample& sample : recording.samples) {
        const auto* probs = session.push(sample);
        if (!probs) continue;
        if (auto event = detector.feed(window_index++, sample.t, *probs)) handle_event(*event);
    }
    if (auto event = detector.flush()) handle_event(*event);
    simulator.poll(recording.samples.empty() ? 0.0 : recording.samples.back().t);

    report.samples = session.samples_seen();
    report.windows = session.windows_classified();
    report.controller_state = controller.state();
    report.simulator_state = simulator.state();
    report.states_agree = report.controller_state == report.simulator_state;
    report.simulator_log = simulator.log_text();
    return report;
}

std::string session_report_json(const SessionReport& report) {
    std::ostringstream out;
    out.precision(12);
    out << "{\n";
    out << "  \"samples\": " << report.samples << ",\n";
    out << "  \"windows\": " << report.windows << ",\n";
    out << "  \"detection_events\": " << report.detection_events << ",\n";
    out << "  \"confirmed\": [";
    for (std::size_t i = 0; i < report.confirmed.size(); ++i) {
        if (i) out << ", ";
        out << "{\"class\": " << report.confirmed[i].cls << ", \"t\": " << report.confirmed[i].t
            << "}";
    }
    out << "],\n  \"per_class\": [";
    for (std::size_t c = 0; c < report.per_class.size(); ++c) {
        if (c) out << ", ";
        out << "{\"class\": " << c << ", \"expected_pairs\": " << report.per_class[c].expected_pairs
            << ", \"confirmed_hits\": " << report.per_class[c].confirmed_hits << "}";
    }
    out << "],\n";
    out << "  \"false_activations\": " << report.false_activations << ",\n";
    out << "  \"commands_sent\": " << report.commands_sent << ",\n";
    out << "  \"controller_state\": \"" << grip_name(report.controller_state.grip) << "/"
        << report.controller_state.wrist_steps << "\",\n";
    out << "  \"simulator_state\": \"" << grip_name(report.simulator_state.grip) << "/"
        << report.simulator_state.wrist_steps << "\",\n";
    out << "  \"states_agree\": " << (report.states_agree ? "true" : "false") << ",\n";
    out << "  \"memory_total_bytes\": " << report.memory.total() << ",\n";
    out << "  \"memory_pass\": " << (report.memory.pass() ? "true" : "false") << "\n";
    out << "}\n";
    return out.str();
}

}  // namespace akb
