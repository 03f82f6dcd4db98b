#include "akb/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "akb/runtime.hpp"

namespace akb {

Eigen::VectorXi Classifier::predict(const Eigen::MatrixXf& windows) const {
    Eigen::VectorXi out(windows.rows());
    for (Eigen::Index i = 0; i < windows.rows(); ++i) out[i] = predict_one(windows.row(i));
    return out;
}

Metrics evaluate(const Classifier& model, const Dataset& data) {
    return evaluate_predictions(data.labels, model.predict(data.windows), model.num_classes());
}

namespace {

int max_class(const Dataset& data) {
    int classes = 0;
    for (Eigen::Index i = 0; i < data.labels.size(); ++i)
        classes = std::max(classes, data.labels[i] + 1);
    return std::max(classes, 2);
}

}  // namespace

// --- LDA ---------------------------------------------------------------------

LdaModel fit_lda(const Dataset& data, const LdaConfig& cfg) {
    if (data.size() == 0) throw DataError("fit_lda: empty dataset");
    const int classes = max_class(data);
    const Eigen::Index features = data.windows.cols();

    std::vector<long> counts(classes, 0);
    for (Eigen::Index i = 0; i < data.size(); ++i) ++counts[data.labels[i]];
    int present = 0;
    for (long c : counts) present += c > 0 ? 1 : 0;
    if (present < 2) throw DataError("fit_lda: need at least two classes");

    Eigen::MatrixXd means = Eigen::MatrixXd::Zero(features, classes);
    for (Eigen::Index i = 0; i < data.size(); ++i)
        means.col(data.labels[i]) += data.windows.row(i).cast<double>().transpose();
    for (int c = 0; c < classes; ++c)
        if (counts[c] > 0) means.col(c) /= static_cast<double>(counts[c]);

    Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(features, features);
    for (Eigen::Index i = 0; i < data.size(); ++i) {
        const Eigen::VectorXd centered =
            data.windows.row(i).cast<double>().transpose() - means.col(data.labels[i]);
        scatter.noalias() += centered * centered.transpose();
    }
    scatter /= static_cast<double>(std::max<long>(1, data.size() - present));

    LdaModel model;
    Eigen::LLT<Eigen::MatrixXd> raw(scatter);
    model.covariance_singular_ = raw.info() != Eigen::Success;
    if (model.covariance_singular_)
        log_warn("fit_lda: pooled covariance singular without regularization; ridge applied");

    const double ridge = cfg.ridge * scatter.diagonal().mean() + 1e-12;
    scatter.diagonal().array() += ridge;
    Eigen::LLT<Eigen::MatrixXd> llt(scatter);
    if (llt.info() != Eigen::Success)
        throw NumericalError("fit_lda: covariance not positive definite after ridge");

    model.classes_ = classes;
    model.discriminant_weights.resize(features, classes);
    model.discriminant_bias.resize(classes);
    const double total = static_cast<double>(data.size());
    for (int c = 0; c < classes; ++c) {
        if (counts[c] == 0) {
            model.discriminant_weights.col(c).setZero();
            model.discriminant_bias[c] = -std::numeric_limits<float>::infinity();
            continue;
        }
        const Eigen::VectorXd w = llt.solve(means.col(c));
        model.discriminant_weights.col(c) = w.cast<float>();
        model.discriminant_bias[c] = static_cast<float>(
            -0.5 * means.col(c).dot(w) + std::log(static_cast<double>(counts[c]) / total));
    }
    return model;
}

int LdaModel::predict_one(const Eigen::Ref<const Eigen::RowVectorXf>& window) const {
    Eigen::Index best;
    (window * discriminant_weights + discriminant_bias.transpose()).maxCoeff(&best);
    return static_cast<int>(best);
}

std::size_t LdaModel::serialized_size() const {
    return static_cast<std::size_t>(discriminant_weights.size() + discriminant_bias.size()) *
               sizeof(float) +
           16;  // small header: classes, features, format tag
}

// --- linear SVM ---------------------------------------------------------------

SvmModel fit_linear_svm(const Dataset& data, const SvmConfig& cfg) {
    if (data.size() == 0) throw DataError("fit_linear_svm: empty dataset");
    const int classes = max_class(data);
    const Eigen::Index features = data.windows.cols();
    const long n = data.size();

    SvmModel model;
    model.classes_ = classes;
    model.weights = Eigen::MatrixXf::Zero(features, classes);
    model.bias = Eigen::VectorXf::Zero(classes);

    std::vector<long> order(n);
    std::iota(order.begin(), order.end(), 0);

    for (int c = 0; c < classes; ++c) {
        Eigen::VectorXd w = Eigen::VectorXd::Zero(features);
        double b = 0.0;
        std::mt19937_64 rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(c)));
        long t = 0;
        double prev_objective = std::numeric_limits<double>::infinity();
        double objective = prev_objective;
        int epoch = 0;
        bool converged = false;
        for (; epoch < cfg.epochs; ++epoch) {
            std::shuffle(order.begin(), order.end(), rng);
            for (long idx : order) {
                ++t;
                const double eta = 1.0 / (cfg.lambda * static_cast<double>(t));
                const double y = data.labels[idx] == c ? 1.0 : -1.0;
                const Eigen::VectorXd x = data.windows.row(idx).cast<double>().transpose();
                const double margin = y * (w.dot(x) + b);
                w *= 1.0 - eta * cfg.lambda;
                if (margin < 1.0) {
                    w.noalias() += (eta * y) * x;
                    b += eta * y;  // unregularized bias
                }
            }
            double hinge = 0.0;
            for (long i = 0; i < n; ++i) {
                const double y = data.labels[i] == c ? 1.0 : -1.0;
                hinge += std::max(
                    0.0, 1.0 - y * (w.dot(data.windows.row(i).cast<double>().transpose()) + b));
            }
            objective = 0.5 * cfg.lambda * w.squaredNorm() + hinge / static_cast<double>(n);
            if (std::abs(prev_objective - objective) <=
                cfg.convergence_tol * std::max(1.0, std::abs(prev_objective))) {
                converged = true;
                ++epoch;
                break;
            }
            prev_objective = objective;
        }
        if (!converged)
            log_warn("fit_linear_svm: class " + std::to_string(c) +
                     " hit the epoch cap; final objective " + std::to_string(objective));
        model.info_.objectives.push_back(objective);
        model.info_.converged = converged && (c == 0 ? true : model.info_.converged);
        model.info_.epochs_run = std::max(model.info_.epochs_run, epoch);
        model.weights.col(c) = w.cast<float>();
        model.bias[c] = static_cast<float>(b);
    }
    return model;
}

int SvmModel::predict_one(const Eigen::Ref<const Eigen::RowVectorXf>& window) const {
    Eigen::Index best;
    (window * weights + bias.transpose()).maxCoeff(&best);
    return static_cast<int>(best);
}

std::size_t SvmModel::serialized_size() const {
    return static_cast<std::size_t>(weights.size() + bias.size()) * sizeof(float) + 16;
}

double svm_hinge_loss(const SvmModel& model, const Dataset& data) {
    double hinge = 0.0;
    for (Eigen::Index i = 0; i < data.size(); ++i) {
        for (int c = 0; c < model.num_classes(); ++c) {
            const double y = data.labels[i] == c ? 1.0 : -1.0;
            const double score = data.windows.row(i).cast<double>() *
                                     model.weights.col(c).cast<double>() +
                                 model.bias[c];
            hinge += std::max(0.0, 1.0 - y * score);
        }
    }
    return hinge;
}

// --- random forest --------------------------------------------------------------

namespace {

struct SplitResult {
    int feature = -1;
    float threshold = 0.0f;
    double gini = std::numeric_limits<double>::infinity();
};

double gini_impurity(const std::vector<long>& counts, long total) {
    if (total == 0) return 0.0;
    double sum_sq = 0.0;
    for (long c : counts) {
        const double p = static_cast<double>(c) / total;
        sum_sq += p * p;
    }
    return 1.0 - sum_sq;
}

int majority(const std::vector<long>& counts) {
    int best = 0;
    long best_count = -1;
    for (std::size_t c = 0; c < counts.size(); ++c)
        if (counts[c] > best_count) {
            best_count = counts[c];
            best = static_cast<int>(c);
        }
    return best;
}

struct TreeBuilder {
    const Dataset& data;
    const ForestConfig& cfg;
    int classes;
    int mtry;
    std::mt19937_64 rng;
    RandomForestModel::Tree tree;
    std::vector<std::pair<float, long>> scratch;

    int build(std::vector<long>& indices, int depth) {
        std::vector<long> counts(classes, 0);
        for (long i : indices) ++counts[data.labels[i]];
        const double node_gini = gini_impurity(counts, indices.size());

        const int node_id = static_cast<int>(tree.size());
        tree.push_back({});
        tree[node_id].leaf_class = majority(counts);

        if (depth >= cfg.max_depth || node_gini == 0.0 ||
            static_cast<long>(indices.size()) < cfg.min_samples_split)
            return node_id;

        // Feature subsample without replacement.
        const Eigen::Index features = data.windows.cols();
        std::vector<int> pool(features);
        std::iota(pool.begin(), pool.end(), 0);
        for (int j = 0; j < mtry; ++j) {
            std::uniform_int_distribution<int> pick(j, static_cast<int>(features) - 1);
            std::swap(pool[j], pool[pick(rng)]);
        }

        SplitResult best;
        for (int j = 0; j < mtry; ++j) {
            const int f = pool[j];
            scratch.clear();
            for (long i : indices) scratch.emplace_back(data.windows(i, f), i);
            std::sort(scratch.begin(), scratch.end());

            std::vector<long> left(classes, 0), right = counts;
            const long total = static_cast<long>(scratch.size());
            for (long pos = 0; pos + 1 < total; ++pos) {
                const int cls = data.labels[scratch[pos].second];
                ++left[cls];
                --right[cls];
                if (scratch[pos].first == scratch[pos + 1].first) continue;
                const long nl = pos + 1, nr = total - nl;
                const double g = (nl * gini_impurity(left, nl) + nr * gini_impurity(right, nr)) /
                                 static_cast<double>(total);
                if (g < best.gini) {
                    best.gini = g;
                    best.feature = f;
                    // Midpoint keeps prediction stable under small noise.
                    best.threshold = 0.5f * (scratch[pos].first + scratch[pos + 1].first);
                }
            }
        }
        if (best.feature < 0 || best.gini >= node_gini) return node_id;

        std::vector<long> left_idx, right_idx;
        for (long i : indices)
            (data.windows(i, best.feature) < best.threshold ? left_idx : right_idx).push_back(i);
        if (left_idx.empty() || right_idx.empty()) return node_id;

        tree[node_id].feature = best.feature;
        tree[node_id].threshold = best.threshold;
        tree[node_id].left = build(left_idx, depth + 1);
        tree[node_id].right = build(right_idx, depth + 1);
        return node_id;
    }
};

}  // namespace

RandomForestModel fit_random_forest(const Dataset& data, const ForestConfig& cfg) {
    if (data.size() == 0) throw DataError("fit_random_forest: empty dataset");
    if (cfg.trees < 1) throw DataError("fit_random_forest: need at least one tree");

    RandomForestModel model;
    model.classes_ = max_class(data);
    const long n = data.size();
    const int mtry = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(
                                     data.windows.cols()))));

    for (int t = 0; t < cfg.trees; ++t) {
        TreeBuilder builder{data, cfg, model.classes_, mtry,
                            std::mt19937_64(mix_seed(cfg.seed, static_cast<std::uint64_t>(t))),
                            {}, {}};
        std::vector<long> bootstrap(n);
        std::uniform_int_distribution<long> pick(0, n - 1);
        for (long i = 0; i < n; ++i) bootstrap[i] = pick(builder.rng);
        builder.build(bootstrap, 0);
        model.trees_.push_back(std::move(builder.tree));
    }
    return model;
}

int RandomForestModel::predict_one(const Eigen::Ref<const Eigen::RowVectorXf>& window) const {
    std::vector<int> votes(classes_, 0);
    for (const Tree& tree : trees_) {
        int node = 0;
        while (tree[node].feature >= 0)
            node = window[tree[node].feature] < tree[node].threshold ? tree[node].left
                                                                     : tree[node].right;
        ++votes[tree[node].leaf_class];
    }
    return static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
}

long RandomForestModel::internal_node_count(int tree) const {
    long count = 0;
    for (const Node& node : trees_.at(tree))
        if (node.feature >= 0) ++count;
    return count;
}

std::size_t RandomForestModel::serialized_size() const {
    // Per node: feature u16 + threshold f32 + child ids u16 x2 + class u8 + flag u8.
    std::size_t nodes = 0;
    for (const Tree& tree : trees_) nodes += tree.size();
    return nodes * 12 + 16;
}

// --- DTW --------------------------------------------------------------------------

double dtw_distance(const Eigen::MatrixXf& a, const Eigen::MatrixXf& b, int band) {
    const Eigen::Index n = a.rows(), m = b.rows();
    if (n == 0 || m == 0) throw DataError("dtw_distance: empty sequence");
    if (a.cols() != b.cols()) throw DataError("dtw_distance: channel mismatch");
    constexpr double inf = std::numeric_limits<double>::infinity();

    std::vector<double> prev(m, inf), curr(m, inf);
    for (Eigen::Index i = 0; i < n; ++i) {
        std::fill(curr.begin(), curr.end(), inf);
        const Eigen::Index lo = band < 0 ? 0 : std::max<Eigen::Index>(0, i - band);
        const Eigen::Index hi = band < 0 ? m - 1 : std::min<Eigen::Index>(m - 1, i + band);
        for (Eigen::Index j = lo; j <= hi; ++j) {
            const double cost =
                (a.row(i).cast<double>() - b.row(j).cast<double>()).norm();
            double best;
            if (i == 0 && j == 0) best = 0.0;
            else {
                best = prev[j];  // insertion
                if (j > 0) best = std::min(best, curr[j - 1]);  // deletion
                if (j > 0) best = std::min(best, prev[j - 1]);  // match
                if (best == inf) continue;
            }
            curr[j] = cost + best;
        }
        std::swap(prev, curr);
    }
    return prev[m - 1];
}

namespace {

Eigen::MatrixXf unflatten_window(const Eigen::Ref<const Eigen::RowVectorXf>& row, int k) {
    const int channels = static_cast<int>(row.size()) / k;
    Eigen::MatrixXf window(k, channels);
    for (int t = 0; t < k; ++t)
        for (int c = 0; c < channels; ++c) window(t, c) = row[t * channels + c];
    return window;
}

}  // namespace

DtwModel fit_dtw(const Dataset& data, const DtwConfig& cfg) {
    if (data.size() == 0) throw DataError("fit_dtw: empty dataset");
    if (data.k <= 0) throw DataError("fit_dtw: dataset carries no window length");
    const int classes = max_class(data);

    DtwModel model;
    model.classes_ = classes;
    model.k_ = data.k;
    model.band_ = cfg.band;

    // Budget first: how many candidates fit in 90 KB?
    const std::size_t bytes_per_candidate = static_cast<std::size_t>(data.windows.cols()) *
                                                sizeof(float) +
                                            2;  // class + flag
    int present = 0;
    for (int c = 0; c < classes; ++c) {
        for (Eigen::Index i = 0; i < data.size(); ++i)
            if (data.labels[i] == c) {
                ++present;
                break;
            }
    }
    int per_class = cfg.candidates_per_class;
    while (per_class > 1 &&
           static_cast<std::size_t>(per_class) * present * bytes_per_candidate + 16 >
               kMemoryLimitBytes)
        --per_class;
    if (per_class != cfg.candidates_per_class)
        log_warn("fit_dtw: " + std::to_string(cfg.candidates_per_class) +
                 " candidates/class would exceed the memory budget; reduced to " +
                 std::to_string(per_class));

    for (int c = 0; c < classes; ++c) {
        std::vector<long> members;
        for (Eigen::Index i = 0; i < data.size(); ++i)
            if (data.labels[i] == c) members.push_back(i);
        if (members.empty()) continue;

        std::vector<long> pool;
        if (static_cast<int>(members.size()) > cfg.pool_cap) {
            std::mt19937_64 rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(c)));
            std::sample(members.begin(), members.end(), std::back_inserter(pool), cfg.pool_cap,
                        rng);
        } else {
            pool = members;
        }

        std::vector<Eigen::MatrixXf> windows;
        windows.reserve(pool.size());
        for (long i : pool) windows.push_back(unflatten_window(data.windows.row(i), data.k));

        const int count = std::min<int>(per_class, static_cast<int>(pool.size()));
        const std::size_t p = pool.size();
        Eigen::MatrixXd dist = Eigen::MatrixXd::Zero(p, p);
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t j = i + 1; j < p; ++j)
                dist(i, j) = dist(j, i) = dtw_distance(windows[i], windows[j], cfg.band);

        // Greedy medoid-style selection: start at the medoid, then add the
        // pool element farthest from the current set (max-min coverage).
        std::vector<bool> chosen(p, false);
        std::size_t first = 0;
        double best_sum = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < p; ++i) {
            const double sum = dist.row(i).sum();
            if (sum < best_sum) {
                best_sum = sum;
                first = i;
            }
        }
        chosen[first] = true;
        model.candidates_.push_back({windows[first], c});
        for (int picked = 1; picked < count; ++picked) {
            std::size_t next = p;
            double best_min = -1.0;
            for (std::size_t i = 0; i < p; ++i) {
                if (chosen[i]) continue;
                double min_d = std::numeric_limits<double>::infinity();
                for (std::size_t j = 0; j < p; ++j)
                    if (chosen[j]) min_d = std::min(min_d, dist(i, j));
                if (min_d > best_min) {
                    best_min = min_d;
                    next = i;
                }
            }
            if (next == p) break;
            chosen[next] = true;
            model.candidates_.push_back({windows[next], c});
        }
    }
    if (model.candidates_.empty()) throw DataError("fit_dtw: no candidates selected");
    return model;
}

int DtwModel::predict_one(const Eigen::Ref<const Eigen::RowVectorXf>& window) const {
    const Eigen::MatrixXf query = unflatten_window(window, k_);
    double best = std::numeric_limits<double>::infinity();
    int best_cls = 0;
    for (const Candidate& cand : candidates_) {
        const double d = dtw_distance(query, cand.window, band_);
        if (d < best) {
            best = d;
            best_cls = cand.cls;
        }
    }
    return best_cls;
}

std::size_t DtwModel::serialized_size() const {
    std::size_t bytes = 16;
    for (const Candidate& cand : candidates_)
        bytes += static_cast<std::size_t>(cand.window.size()) * sizeof(float) + 2;
    return bytes;
}

// --- NN adapter -------------------------------------------------------------------

NeuralClassifier::NeuralClassifier(Model<float> model) : model_(std::move(model)) {}

int NeuralClassifier::predict_one(const Eigen::Ref<const Eigen::RowVectorXf>& window) const {
    Eigen::MatrixXf one(1, window.size());
    one.row(0) = window;
    const Eigen::MatrixXf probs = classify_windows(model_, one);
    Eigen::Index best;
    probs.row(0).maxCoeff(&best);
    return static_cast<int>(best);
}

Eigen::VectorXi NeuralClassifier::predict(const Eigen::MatrixXf& windows) const {
    const Eigen::MatrixXf probs = classify_windows(model_, windows);
    Eigen::VectorXi out(windows.rows());
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
        Eigen::Index best;
        probs.row(i).maxCoeff(&best);
        out[i] = static_cast<int>(best);
    }
    return out;
}

std::size_t NeuralClassifier::serialized_size() const {
    return bundle_file_size(model_.config);
}

}  // namespace akb
