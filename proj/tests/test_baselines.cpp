#include <doctest.h>

#include <random>

#include "akb/baselines.hpp"
#include "akb/runtime.hpp"
#include "akb/synth.hpp"
#include "akb/training.hpp"

using namespace akb;

namespace {

// Two well-separated Gaussian blobs as a 2-class dataset over F features.
Dataset blob_dataset(int n_per_class, int features, double separation, std::uint64_t seed,
                     bool identical = false) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> noise(0.0f, 1.0f);
    Dataset data;
    data.k = features / 6;
    data.rate = 100.0;
    data.windows.resize(2 * n_per_class, features);
    data.labels.resize(2 * n_per_class);
    for (int i = 0; i < 2 * n_per_class; ++i) {
        const int cls = i < n_per_class ? 0 : 1;
        const float offset = identical ? 0.0f : (cls == 0 ? -1.0f : 1.0f) * separation / 2.0f;
        for (int f = 0; f < features; ++f) data.windows(i, f) = noise(rng) + offset;
        data.labels[i] = cls;
    }
    data.overlap_scores = Eigen::VectorXf::Zero(2 * n_per_class);
    data.subjects.assign(2 * n_per_class, 0);
    data.start_indices.assign(2 * n_per_class, 0);
    return data;
}

double training_accuracy(const Classifier& model, const Dataset& data) {
    const Eigen::VectorXi pred = model.predict(data.windows);
    long hit = 0;
    for (Eigen::Index i = 0; i < data.size(); ++i) hit += pred[i] == data.labels[i];
    return static_cast<double>(hit) / data.size();
}

// Plain quadratic-memory DTW, written independently of the library DP.
double dtw_oracle(const Eigen::MatrixXf& a, const Eigen::MatrixXf& b) {
    const int n = static_cast<int>(a.rows()), m = static_cast<int>(b.rows());
    Eigen::MatrixXd acc(n, m);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < m; ++j) {
            const double cost = (a.row(i).cast<double>() - b.row(j).cast<double>()).norm();
            double best = std::numeric_limits<double>::infinity();
            if (i == 0 && j == 0) best = 0.0;
            if (i > 0) best = std::min(best, acc(i - 1, j));
            if (j > 0) best = std::min(best, acc(i, j - 1));
            if (i > 0 && j > 0) best = std::min(best, acc(i - 1, j - 1));
            acc(i, j) = cost + best;
        }
    }
    return acc(n - 1, m - 1);
}

}  // namespace

TEST_CASE("lda separates two blobs and stays at chance on identical ones") {
    const Dataset blobs = blob_dataset(60, 36, 8.0, 1);
    const LdaModel lda = fit_lda(blobs);
    CHECK(training_accuracy(lda, blobs) == 1.0);

    const Dataset same = blob_dataset(200, 36, 0.0, 2, true);
    const double acc = training_accuracy(fit_lda(same), same);
    CHECK(acc > 0.35);
    CHECK(acc < 0.65);
}

TEST_CASE("lda on 360 features serializes within the budget in reduced form") {
    SynthSpec spec;
    spec.events_per_class = 3;
    const Dataset data = build_dataset(make_synthetic_subjects(spec, 2, 3), 60, 5);
    const LdaModel lda = fit_lda(data);

    // Reduced discriminant form: classes x (features + 1) floats.
    CHECK(lda.serialized_size() == 5 * 361 * 4 + 16);
    CHECK(lda.serialized_size() <= kMemoryLimitBytes);

    // The full generative form (means + triangular shared precision) would
    // not fit, which is exactly why the reduced form is the serialized one.
    const std::size_t full_form = (5 * 360 + 360 * 361 / 2) * 4;
    CHECK(full_form > kMemoryLimitBytes);
}

TEST_CASE("lda flags a singular pooled covariance and still fits via ridge") {
    // Constant feature columns make the pooled covariance rank deficient.
    Dataset data = blob_dataset(20, 24, 6.0, 4);
    data.windows.col(3).setZero();
    data.windows.col(17).setConstant(2.0f);
    const LdaModel lda = fit_lda(data);
    CHECK(lda.covariance_was_singular());
    CHECK(training_accuracy(lda, data) == 1.0);
}

TEST_CASE("svm drives hinge loss to zero on a separable pair") {
    const Dataset blobs = blob_dataset(40, 30, 10.0, 5);
    SvmConfig cfg;
    cfg.epochs = 60;
    const SvmModel svm = fit_linear_svm(blobs, cfg);
    CHECK(training_accuracy(svm, blobs) == 1.0);
    CHECK(svm_hinge_loss(svm, blobs) < 1e-6);

    // Structure: one weight vector + bias per class.
    CHECK(svm.weights.rows() == 30);
    CHECK(svm.weights.cols() == 2);
    CHECK(svm.bias.size() == 2);
    CHECK(svm.serialized_size() == (30 * 2 + 2) * 4 + 16);
    CHECK(svm.serialized_size() <= kMemoryLimitBytes);
}

TEST_CASE("svm training-point argmax is invariant to doubling the input scale") {
    const Dataset base = blob_dataset(30, 18, 6.0, 6);
    Dataset doubled = base;
    doubled.windows *= 2.0f;

    SvmConfig cfg;
    cfg.epochs = 60;
    const SvmModel m1 = fit_linear_svm(base, cfg);
    const SvmModel m2 = fit_linear_svm(doubled, cfg);
    const Eigen::VectorXi p1 = m1.predict(base.windows);
    const Eigen::VectorXi p2 = m2.predict(doubled.windows);
    CHECK(p1 == p2);
}

TEST_CASE("random forest: determinism, depth cap, node budget") {
    SynthSpec spec;
    spec.events_per_class = 3;
    const Dataset data = build_dataset(make_synthetic_subjects(spec, 2, 7), 60, 5);

    ForestConfig cfg;  // 8 trees, depth 8
    const RandomForestModel a = fit_random_forest(data, cfg);
    const RandomForestModel b = fit_random_forest(data, cfg);
    CHECK(a.predict(data.windows) == b.predict(data.windows));

    for (int t = 0; t < cfg.trees; ++t) CHECK(a.internal_node_count(t) <= 255);
    CHECK(a.serialized_size() <= kMemoryLimitBytes);
    CHECK(training_accuracy(a, data) > 0.8);

    ForestConfig other = cfg;
    other.seed = 99;
    const RandomForestModel c = fit_random_forest(data, other);
    CHECK(a.predict(data.windows) != c.predict(data.windows));
}

TEST_CASE("random forest degenerate configurations") {
    const Dataset blobs = blob_dataset(30, 12, 6.0, 8);

    // Depth 0: every tree is a majority-class stump.
    ForestConfig stump;
    stump.max_depth = 0;
    const RandomForestModel majority = fit_random_forest(blobs, stump);
    const Eigen::VectorXi pred = majority.predict(blobs.windows);
    for (Eigen::Index i = 0; i < pred.size(); ++i) CHECK(pred[i] == pred[0]);

    // Single-sample dataset predicts that class everywhere.
    Dataset single;
    single.k = 2;
    single.rate = 100.0;
    single.windows = Eigen::MatrixXf::Constant(1, 12, 0.5f);
    single.labels = Eigen::VectorXi::Constant(1, 3);
    single.overlap_scores = Eigen::VectorXf::Zero(1);
    single.subjects = {0};
    single.start_indices = {0};
    const RandomForestModel one = fit_random_forest(single, ForestConfig{});
    Eigen::RowVectorXf anywhere = Eigen::RowVectorXf::Random(12);
    CHECK(one.predict_one(anywhere) == 3);
}

TEST_CASE("dtw distance: identity, shift identity, and the DP oracle") {
    std::mt19937_64 rng(9);
    std::normal_distribution<float> noise(0.0f, 1.0f);

    // Identical sequences -> 0.
    Eigen::MatrixXf a(20, 6);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = noise(rng);
    CHECK(dtw_distance(a, a) == 0.0);

    // Constant univariate series shifted by c -> n * |c|.
    for (double c : {0.5, -1.25, 3.0}) {
        const int n = 17;
        Eigen::MatrixXf x = Eigen::MatrixXf::Constant(n, 1, 2.0f);
        Eigen::MatrixXf y = Eigen::MatrixXf::Constant(n, 1, 2.0f + static_cast<float>(c));
        CHECK(dtw_distance(x, y) == doctest::Approx(n * std::abs(c)).epsilon(1e-6));
    }

    // Random pairs against the independent quadratic oracle.
    for (int trial = 0; trial < 25; ++trial) {
        const int n = 5 + trial % 14, m = 5 + (trial * 3) % 17;
        Eigen::MatrixXf x(n, 3), y(m, 3);
        for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = noise(rng);
        for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = noise(rng);
        CHECK(dtw_distance(x, y) == doctest::Approx(dtw_oracle(x, y)).epsilon(1e-9));
    }
}

TEST_CASE("dtw distance properties: non-negative, symmetric-ish reversal") {
    std::mt19937_64 rng(10);
    std::normal_distribution<float> noise(0.0f, 1.0f);
    for (int trial = 0; trial < 10; ++trial) {
        Eigen::MatrixXf x(12, 2), y(15, 2);
        for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = noise(rng);
        for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = noise(rng);
        const double d = dtw_distance(x, y);
        CHECK(d >= 0.0);
        // Reversing both sequences leaves the optimal path cost unchanged.
        const double rev = dtw_distance(x.colwise().reverse(), y.colwise().reverse());
        CHECK(d == doctest::Approx(rev).epsilon(1e-9));
    }
}

TEST_CASE("dtw model: candidate hit, shifted copies, budget auto-reduction") {
    SynthSpec spec;
    spec.events_per_class = 4;
    const Dataset data = build_dataset(make_synthetic_subjects(spec, 2, 11), 60, 4);

    DtwConfig cfg;
    cfg.pool_cap = 24;
    cfg.band = 8;
    const DtwModel dtw = fit_dtw(data, cfg);

    // 20/class at k=60 would blow the budget, so the count must shrink.
    CHECK(dtw.serialized_size() <= kMemoryLimitBytes);
    std::vector<int> per_class(5, 0);
    for (const auto& cand : dtw.candidates()) ++per_class[cand.cls];
    for (int c = 0; c < 5; ++c) CHECK(per_class[c] < 20);

    // A stored candidate is its own nearest neighbour.
    const auto& cand = dtw.candidates().front();
    Eigen::RowVectorXf flat(60 * 6);
    for (int t = 0; t < 60; ++t)
        for (int ch = 0; ch < 6; ++ch) flat[t * 6 + ch] = cand.window(t, ch);
    CHECK(dtw.predict_one(flat) == cand.cls);

    // A small time shift of a candidate stays in its class (band absorbs it).
    Eigen::RowVectorXf shifted = flat;
    shifted.tail(60 * 6 - 3 * 6) = flat.head(60 * 6 - 3 * 6);
    CHECK(dtw.predict_one(shifted) == cand.cls);
}

TEST_CASE("evaluate: metrics identities on hand-built confusions") {
    // Perfect predictions.
    Eigen::VectorXi truth(6), pred(6);
    truth << 0, 1, 2, 3, 4, 2;
    pred = truth;
    const Metrics perfect = evaluate_predictions(truth, pred, 5);
    CHECK(perfect.accuracy == 1.0);
    CHECK(perfect.macro_f1 == 1.0);
    for (int c = 0; c < 5; ++c) {
        CHECK(perfect.precision[c] == 1.0);
        CHECK(perfect.recall[c] == 1.0);
    }
    CHECK(perfect.confusion.diagonal().sum() == 6);

    // All-class-0 predictor on balanced data: accuracy = 1/classes.
    Eigen::VectorXi btruth(10), bpred = Eigen::VectorXi::Zero(10);
    btruth << 0, 0, 1, 1, 2, 2, 3, 3, 4, 4;
    const Metrics zeroed = evaluate_predictions(btruth, bpred, 5);
    CHECK(zeroed.accuracy == doctest::Approx(0.2));
    // Classes 1..4 never predicted -> precision undefined, noted.
    CHECK(std::isnan(zeroed.precision[1]));
    CHECK(!zeroed.notes.empty());

    // Hand-built 2-class confusion [[8,2],[1,9]].
    Eigen::MatrixXi confusion(2, 2);
    confusion << 8, 2, 1, 9;
    const Metrics two = metrics_from_confusion(confusion);
    CHECK(two.precision[0] == doctest::Approx(8.0 / 9.0));
    CHECK(two.recall[0] == doctest::Approx(0.8));
    CHECK(two.total == 20);
    CHECK(two.accuracy == doctest::Approx(17.0 / 20.0));
}

TEST_CASE("evaluate: confusion sums and per-class recall identity") {
    SynthSpec spec;
    spec.events_per_class = 3;
    const Dataset data = build_dataset(make_synthetic_subjects(spec, 2, 13), 60, 6);
    const LdaModel lda = fit_lda(data);
    const Metrics m = evaluate(lda, data);
    CHECK(m.confusion.sum() == data.size());
    for (int c = 0; c < 5; ++c) {
        const long row = m.confusion.row(c).sum();
        if (row > 0)
            CHECK(m.recall[c] == doctest::Approx(static_cast<double>(m.confusion(c, c)) / row));
    }
}

TEST_CASE("every fitted baseline honors the shared 90 KB constraint") {
    SynthSpec spec;
    spec.events_per_class = 3;
    const Dataset data = build_dataset(make_synthetic_subjects(spec, 2, 17), 60, 5);

    CHECK(fit_lda(data).serialized_size() <= kMemoryLimitBytes);
    SvmConfig svm_cfg;
    svm_cfg.epochs = 3;
    CHECK(fit_linear_svm(data, svm_cfg).serialized_size() <= kMemoryLimitBytes);
    CHECK(fit_random_forest(data).serialized_size() <= kMemoryLimitBytes);
    DtwConfig dtw_cfg;
    dtw_cfg.pool_cap = 12;
    CHECK(fit_dtw(data, dtw_cfg).serialized_size() <= kMemoryLimitBytes);

    const NeuralClassifier nn(init_weights<float>(ModelConfig{}, 1));
    CHECK(nn.serialized_size() <= kMemoryLimitBytes);
}
