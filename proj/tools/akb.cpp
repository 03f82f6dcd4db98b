// akb — IMU gesture recognition and prosthetic-hand control toolkit.
//
// Subcommands: gen-synth, train, eval, sweep, confusion, simulate,
// export-weights, budget-check. Every command is deterministic under
// --seed; any failed check exits nonzero.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "akb/eval.hpp"
#include "akb/plot.hpp"

namespace fs = std::filesystem;
using namespace akb;

namespace {

struct GlobalOptions {
    std::uint64_t seed = 0;
    std::string out_dir = ".";
    bool verbose = false;
};

fs::path ensure_out_dir(const GlobalOptions& global) {
    fs::path dir(global.out_dir);
    fs::create_directories(dir);
    return dir;
}

std::string subject_stem(int id) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "subject_%02d", id);
    return buf;
}


void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open " + path.string() + " for writing");
    out << text;
}

SynthSpec& add_synth_options(CLI::App* cmd, int& subjects) {
    static SynthSpec spec;  // lifetime spans CLI11 parsing
    spec = SynthSpec{};
    cmd->add_option("--subjects", subjects, "number of synthetic subjects");
    cmd->add_option("--events-per-class", spec.events_per_class,
                    "gesture performances per class and subject");
    cmd->add_flag("--paired", spec.paired, "schedule every performance as a double gesture");
    cmd->add_option("--rate", spec.rate, "sample rate in Hz");
    cmd->add_option("--noise-acc", spec.noise_acc, "accelerometer noise sigma");
    cmd->add_option("--noise-gyro", spec.noise_gyro, "gyro noise sigma");
    cmd->add_option("--gap-min", spec.gap_min, "min gap between scheduled entries, s");
    cmd->add_option("--gap-max", spec.gap_max, "max gap between scheduled entries, s");
    return spec;
}

void add_eval_options(CLI::App* cmd, EvalConfig& cfg, std::string& kind) {
    cmd->add_option("--kind", kind, "model kind: nn|lda|svm|rf|dtw");
    cmd->add_option("--k", cfg.k, "window length in samples");
    cmd->add_option("--stride", cfg.stride, "window stride in samples");
    cmd->add_option("--sigma", cfg.overlap.sigma, "labeling overlap threshold");
    cmd->add_option_function<std::string>(
        "--overlap-variant",
        [&cfg](const std::string& v) {
            if (v == "coverage") cfg.overlap.variant = OverlapVariant::Coverage;
            else if (v == "iou") cfg.overlap.variant = OverlapVariant::Iou;
            else throw CLI::ValidationError("--overlap-variant", "expected coverage|iou");
        },
        "overlap variant: coverage|iou");
    cmd->add_option("--epochs", cfg.train.epochs, "training epochs");
    cmd->add_option("--batch", cfg.train.batch_size, "batch size");
    cmd->add_option("--lr", cfg.train.learning_rate, "learning rate");
    cmd->add_option("--jobs", cfg.jobs, "parallel fold workers");
    cmd->add_option("--train-subjects", cfg.train_subject_count,
                    "train on this many randomly drawn subjects per fold");
}

int cmd_gen_synth(const GlobalOptions& global, SynthSpec spec, int subjects, bool binary) {
    const fs::path dir = ensure_out_dir(global);
    const auto data = make_synthetic_subjects(spec, subjects, global.seed);
    for (const SubjectData& subject : data) {
        const std::string stem = subject_stem(subject.recording.subject_id);
        write_recording_csv(subject.recording, (dir / (stem + ".csv")).string());
        write_labels_csv(subject.labels, (dir / (stem + "_labels.csv")).string());
        if (binary)
            write_recording_binary(subject.recording, (dir / (stem + ".akl")).string());
    }
    std::cout << "wrote " << data.size() << " subjects to " << dir << "\n";
    return 0;
}

int cmd_train(const GlobalOptions& global, const std::string& data_dir, EvalConfig cfg,
              const std::string& bundle_name, const std::string& report_name,
              const std::string& checkpoint_name) {
    const fs::path dir = ensure_out_dir(global);
    const auto subjects = load_subjects_dir(data_dir);
    const Dataset data = build_dataset(subjects, cfg.k, cfg.stride, cfg.overlap, cfg.norm);

    ModelConfig mc = cfg.model;
    mc.input_length = cfg.k;
    TrainConfig tc = cfg.train;
    tc.seed = global.seed;
    OptimizerState<float> opt_state;
    const auto [model, report] = fit<float>(data, mc, tc, &opt_state);

    write_bundle(export_weights(model), (dir / bundle_name).string());
    if (!checkpoint_name.empty())
        write_checkpoint(model, opt_state, (dir / checkpoint_name).string());

    std::ostringstream json;
    json.precision(12);
    json << "{\n  \"dataset_size\": " << report.dataset_size << ",\n  \"class_histogram\": [";
    for (std::size_t c = 0; c < report.class_histogram.size(); ++c)
        json << (c ? ", " : "") << report.class_histogram[c];
    json << "],\n  \"epochs\": [\n";
    for (std::size_t e = 0; e < report.epochs.size(); ++e)
        json << "    {\"epoch\": " << e + 1 << ", \"loss\": " << report.epochs[e].loss
             << ", \"accuracy\": " << report.epochs[e].accuracy << "}"
             << (e + 1 < report.epochs.size() ? "," : "") << "\n";
    json << "  ]\n}\n";
    write_text(dir / report_name, json.str());

    std::cout << "trained on " << report.dataset_size << " windows; bundle " << dir / bundle_name
              << "\n";
    if (!report.epochs.empty())
        std::cout << "final epoch: loss " << report.epochs.back().loss << ", accuracy "
                  << report.epochs.back().accuracy << "\n";
    return 0;
}

int cmd_eval(const GlobalOptions& global, const std::string& data_dir, EvalConfig cfg,
             const std::string& kind_name) {
    const fs::path dir = ensure_out_dir(global);
    cfg.seed = global.seed;
    const auto subjects = load_subjects_dir(data_dir);
    const ModelKind kind = parse_model_kind(kind_name);
    const FoldSummary summary = cross_validate(subjects, kind, cfg);

    const std::string stem = std::string("eval_") + kind_name;
    write_fold_summary_csv(summary, (dir / (stem + "_folds.csv")).string());
    write_text(dir / (stem + ".json"), fold_summary_json(summary));

    std::cout << kind_name << " LOSO over " << summary.folds.size() << " folds:\n"
              << "  accuracy  " << summary.accuracy.mean << " +- " << summary.accuracy.stddev
              << "\n  macro F1  " << summary.macro_f1.mean << " +- " << summary.macro_f1.stddev
              << "\n";
    return 0;
}

int cmd_sweep(const GlobalOptions& global, const std::string& data_dir, EvalConfig cfg,
              const std::string& kind_name, const std::string& axis_name,
              std::vector<double> grid) {
    const fs::path dir = ensure_out_dir(global);
    cfg.seed = global.seed;
    const auto subjects = load_subjects_dir(data_dir);
    const SweepAxis axis = parse_sweep_axis(axis_name);
    SweepSpec spec = default_sweep(axis);
    if (!grid.empty()) spec.grid = std::move(grid);

    const SweepResults results = sweep(spec, subjects, parse_model_kind(kind_name), cfg);
    const std::string stem = std::string("sweep_") + axis_name + "_" + kind_name;
    write_sweep_csv(results, (dir / (stem + ".csv")).string());

    PlotSeries f1, recall;
    f1.name = "macro F1";
    recall.name = "macro recall";
    for (const SweepPoint& p : results.points) {
        if (p.skipped) continue;
        f1.x.push_back(p.value);
        f1.y.push_back(p.summary.macro_f1.mean);
        f1.yerr.push_back(p.summary.macro_f1.stddev);
        recall.x.push_back(p.value);
        recall.y.push_back(p.summary.macro_recall.mean);
        recall.yerr.push_back(p.summary.macro_recall.stddev);
    }
    svg_line_plot((dir / (stem + ".svg")).string(), stem, axis_name, "score", {f1, recall});

    for (const SweepPoint& p : results.points)
        if (p.skipped)
            std::cout << "point " << p.value << " skipped: " << p.note << "\n";
        else
            std::cout << "point " << p.value << ": macro F1 " << p.summary.macro_f1.mean
                      << " +- " << p.summary.macro_f1.stddev << "\n";
    return 0;
}

int cmd_confusion(const GlobalOptions& global, const std::string& data_dir, EvalConfig cfg,
                  const std::string& kind_name) {
    const fs::path dir = ensure_out_dir(global);
    cfg.seed = global.seed;
    const auto subjects = load_subjects_dir(data_dir);
    const ConfusionReport report =
        confusion_report(subjects, parse_model_kind(kind_name), cfg);

    const std::string stem = std::string("confusion_") + kind_name;
    write_confusion_csv(report.counts, (dir / (stem + ".csv")).string());

    std::ofstream norm(dir / (stem + "_row_normalized.csv"));
    norm.precision(6);
    norm << "true\\pred,no gesture,g1,g2,g3,g4\n";
    const char* row_names[] = {"no gesture", "g1", "g2", "g3", "g4"};
    for (int r = 0; r < report.row_normalized.rows(); ++r) {
        norm << row_names[r];
        for (int c = 0; c < report.row_normalized.cols(); ++c)
            norm << ',' << report.row_normalized(r, c);
        norm << '\n';
    }

    svg_heatmap((dir / (stem + ".svg")).string(), "confusion (row-normalized)",
                report.row_normalized, {"no gesture", "g1", "g2", "g3", "g4"});
    std::cout << "pooled confusion (rows = true):\n" << report.counts << "\n";
    return 0;
}

int cmd_simulate(const GlobalOptions& global, const std::string& recording_path,
                 const std::string& labels_path, const std::string& bundle_path,
                 SessionConfig scfg) {
    const fs::path dir = ensure_out_dir(global);
    const Recording recording = read_recording_csv(recording_path);
    const std::vector<LabelInterval> labels =
        labels_path.empty() ? std::vector<LabelInterval>{} : read_labels_csv(labels_path);
    const Model<float> model = import_weights(read_bundle(bundle_path));

    const SessionReport report = simulate_e2e(recording, labels, model, scfg);
    write_text(dir / "session_report.json", session_report_json(report));
    write_text(dir / "simulator_log.txt", report.simulator_log);

    std::cout << "windows " << report.windows << ", events " << report.detection_events
              << ", confirmed " << report.confirmed.size() << ", commands "
              << report.commands_sent << "\n";
    for (std::size_t c = 1; c < report.per_class.size(); ++c)
        if (report.per_class[c].expected_pairs > 0)
            std::cout << "  g" << c << ": " << report.per_class[c].confirmed_hits << "/"
                      << report.per_class[c].expected_pairs << " pairs confirmed\n";
    std::cout << "false activations: " << report.false_activations << "\n";
    std::cout << (report.states_agree ? "controller and simulator states agree\n"
                                      : "STATE MISMATCH between controller and simulator\n");
    return report.states_agree ? 0 : 1;
}

int cmd_export_weights(const GlobalOptions& global, const std::string& bundle_path) {
    const fs::path dir = ensure_out_dir(global);
    const WeightBundle bundle = read_bundle(bundle_path);
    write_constant_arrays(bundle, (dir / "akb_weights.h").string(),
                          (dir / "akb_weights_manifest.json").string());
    std::cout << "wrote " << dir / "akb_weights.h" << " (" << bundle.data.size()
              << " floats) and manifest\n";
    return 0;
}

int cmd_budget_check(const GlobalOptions& global, const std::string& bundle_path, int hidden) {
    (void)global;
    TriggerConfig trigger;
    MemoryReport report;
    if (!bundle_path.empty()) {
        report = budget_check(read_bundle(bundle_path), trigger);
    } else {
        ModelConfig config;
        if (hidden > 0) config.hidden = hidden;
        report = budget_check(config, trigger);
    }
    std::cout << report.to_string();
    return report.pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"IMU gesture recognition and prosthetic-hand control toolkit"};
    app.require_subcommand(1);
    app.set_config("--config", "", "key=value configuration file");
    app.allow_config_extras(true);

    GlobalOptions global;
    app.add_option("--seed", global.seed, "global random seed")->capture_default_str();
    app.add_option("--out-dir", global.out_dir, "output directory")->capture_default_str();
    app.add_flag("--verbose", global.verbose, "info-level logging");

    // gen-synth
    auto* gen = app.add_subcommand("gen-synth", "generate synthetic subject recordings");
    int subjects = 10;
    bool gen_binary = false;
    SynthSpec& spec = add_synth_options(gen, subjects);
    gen->add_flag("--binary", gen_binary, "also write compact binary logs");

    // shared eval-ish options
    std::string data_dir = ".";
    std::string kind = "nn";
    EvalConfig cfg;

    auto* train = app.add_subcommand("train", "train the network on every subject in a dir");
    train->add_option("--data-dir", data_dir, "directory of recording/label CSVs")->required();
    std::string bundle_name = "model.akb";
    std::string report_name = "train_report.json";
    std::string checkpoint_name;
    train->add_option("--bundle", bundle_name, "output bundle filename");
    train->add_option("--report", report_name, "output report filename");
    train->add_option("--checkpoint", checkpoint_name,
                      "also write a resumable checkpoint (weights + optimizer state)");
    add_eval_options(train, cfg, kind);

    auto* eval_cmd = app.add_subcommand("eval", "leave-one-subject-out cross-validation");
    eval_cmd->add_option("--data-dir", data_dir, "directory of recording/label CSVs")
        ->required();
    add_eval_options(eval_cmd, cfg, kind);

    auto* sweep_cmd = app.add_subcommand("sweep", "cross-validated parameter sweep");
    std::string axis = "window_duration";
    std::vector<double> grid;
    sweep_cmd->add_option("--data-dir", data_dir)->required();
    sweep_cmd->add_option("--axis", axis,
                          "window_duration|sigma|frequency|train_subject_count");
    sweep_cmd->add_option("--grid", grid, "explicit grid values (default: the studied range)");
    add_eval_options(sweep_cmd, cfg, kind);

    auto* conf = app.add_subcommand("confusion", "pooled LOSO confusion matrix");
    conf->add_option("--data-dir", data_dir)->required();
    add_eval_options(conf, cfg, kind);

    auto* sim = app.add_subcommand("simulate", "replay a recording end to end");
    std::string recording_path, labels_path, bundle_path;
    SessionConfig scfg;
    sim->add_option("--recording", recording_path, "recording CSV")->required();
    sim->add_option("--labels", labels_path, "label CSV (optional)");
    sim->add_option("--model", bundle_path, "weight bundle")->required();
    sim->add_option("--prob-threshold", scfg.trigger.prob_threshold);
    sim->add_option("--min-consecutive", scfg.trigger.min_consecutive_windows);
    sim->add_option("--double-timeout", scfg.trigger.double_gesture_timeout);
    sim->add_option("--refractory", scfg.trigger.refractory);
    bool skip_when_busy = false;
    sim->add_flag("--skip-when-busy", skip_when_busy,
                  "classify at most --max-rate Hz instead of every sample");
    sim->add_option("--max-rate", scfg.max_inference_rate, "inference rate cap for skip mode");

    auto* exp = app.add_subcommand("export-weights", "render a bundle as constant arrays");
    exp->add_option("--model", bundle_path, "weight bundle")->required();

    auto* budget = app.add_subcommand("budget-check", "memory accounting against 90 KB");
    int hidden = -1;
    std::string budget_bundle;
    budget->add_option("--model", budget_bundle, "weight bundle (default: stock config)");
    budget->add_option("--hidden", hidden, "override hidden width of the stock config");

    CLI11_PARSE(app, argc, argv);

    set_log_level(global.verbose ? LogLevel::Info : LogLevel::Warn);
    if (skip_when_busy) scfg.lag_policy = LagPolicy::SkipWhenBusy;

    try {
        if (gen->parsed()) return cmd_gen_synth(global, spec, subjects, gen_binary);
        if (train->parsed())
            return cmd_train(global, data_dir, cfg, bundle_name, report_name, checkpoint_name);
        if (eval_cmd->parsed()) return cmd_eval(global, data_dir, cfg, kind);
        if (sweep_cmd->parsed()) return cmd_sweep(global, data_dir, cfg, kind, axis, grid);
        if (conf->parsed()) return cmd_confusion(global, data_dir, cfg, kind);
        if (sim->parsed())
            return cmd_simulate(global, recording_path, labels_path, bundle_path, scfg);
        if (exp->parsed()) return cmd_export_weights(global, bundle_path);
        if (budget->parsed()) return cmd_budget_check(global, budget_bundle, hidden);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
