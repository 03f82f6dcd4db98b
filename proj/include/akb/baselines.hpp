#pragma once

#include <memory>
#include <string>
#include <vector>

#include "akb/labeling.hpp"
#include "akb/metrics.hpp"
#include "akb/nn.hpp"

namespace akb {

// Common prediction surface for the comparison study. All models consume
// the flattened normalized window (k*6 values, time-major) and report the
// size they would occupy serialized, which must respect the same 90 KB
// limit as the deployed network.
class Classifier {
public:
    virtual ~Classifier() = default;
    virtual int predict_one(const Eigen::Ref<const Eigen::RowVectorXf>& window) const = 0;
    virtual Eigen::VectorXi predict(const Eigen::MatrixXf& windows) const;
    virtual std::size_t serialized_size() const = 0;
    virtual std::string kind() const = 0;
    virtual int num_classes() const = 0;
};

Metrics evaluate(const Classifier& model, const Dataset& data);

// --- LDA ---------------------------------------------------------------------

struct LdaConfig {
    double ridge = 1e-3;  // scaled by mean covariance diagonal
};

class LdaModel : public Classifier {
public:
    int predict_one(const Eigen::Ref<const Eigen::RowVectorXf>& window) const override;
    std::size_t serialized_size() const override;
    std::string kind() const override { return "lda"; }
    int num_classes() const override { return classes_; }
    bool covariance_was_singular() const { return covariance_singular_; }

    Eigen::MatrixXf discriminant_weights;  // features x classes
    Eigen::VectorXf discriminant_bias;     // classes

private:
    friend LdaModel fit_lda(const Dataset&, const LdaConfig&);
    int classes_ = 0;
    bool covariance_singular_ = false;
};

// Class means + shared (pooled, ridge-regularized) covariance, reduced to
// the linear discriminant form for prediction and serialization.
LdaModel fit_lda(const Dataset& data, const LdaConfig& cfg = {});

// --- linear SVM ---------------------------------------------------------------

struct SvmConfig {
    double lambda = 1e-5;  // L2 strength
    int epochs = 40;
    std::uint64_t seed = 0;
    double convergence_tol = 1e-4;  // relative objective change per epoch
};

struct SvmTrainInfo {
    std::vector<double> objectives;  // final primal objective per class
    bool converged = false;
    int epochs_run = 0;
};

class SvmModel : public Classifier {
public:
    int predict_one(const Eigen::Ref<const Eigen::RowVectorXf>& window) const override;
    std::size_t serialized_size() const override;
    std::string kind() const override { return "svm"; }
    int num_classes() const override { return classes_; }
    const SvmTrainInfo& train_info() const { return info_; }

    Eigen::MatrixXf weights;  // features x classes (one-vs-rest)
    Eigen::VectorXf bias;     // classes

private:
    friend SvmModel fit_linear_svm(const Dataset&, const SvmConfig&);
    int classes_ = 0;
    SvmTrainInfo info_;
};

// One-vs-rest hinge loss minimized by a deterministic seeded subgradient
// (Pegasos-style) pass; reports the final objective per class.
SvmModel fit_linear_svm(const Dataset& data, const SvmConfig& cfg = {});

// Total hinge loss of the model on a dataset (diagnostic).
double svm_hinge_loss(const SvmModel& model, const Dataset& data);

// --- random forest --------------------------------------------------------------

struct ForestConfig {
    int trees = 8;
    int max_depth = 8;  // levels of internal nodes; 0 = majority-class stump
    int min_samples_split = 2;
    std::uint64_t seed = 0;
};

class RandomForestModel : public Classifier {
public:
    struct Node {
        int feature = -1;  // -1 marks a leaf
        float threshold = 0.0f;
        int left = -1;
        int right = -1;
        int leaf_class = 0;
    };
    using Tree = std::vector<Node>;

    int predict_one(const Eigen::Ref<const Eigen::RowVectorXf>& window) const override;
    std::size_t serialized_size() const override;
    std::string kind() const override { return "rf"; }
    int num_classes() const override { return classes_; }

    long internal_node_count(int tree) const;
    const std::vector<Tree>& trees() const { return trees_; }

private:
    friend RandomForestModel fit_random_forest(const Dataset&, const ForestConfig&);
    std::vector<Tree> trees_;
    int classes_ = 0;
};

// Seeded bootstrap + sqrt(F) feature subsampling, Gini splits, majority
// vote. Depth-0 degenerates to the majority-class predictor.
RandomForestModel fit_random_forest(const Dataset& data, const ForestConfig& cfg = {});

// --- DTW nearest candidate ---------------------------------------------------------

struct DtwConfig {
    int candidates_per_class = 20;
    int pool_cap = 64;  // per-class pool for medoid selection
    int band = -1;      // Sakoe-Chiba half-width in samples; -1 = unbounded
    std::uint64_t seed = 0;
};

// Dependent multivariate DTW: local cost is the Euclidean distance
// between the 6-channel rows, summed along the optimal warping path.
double dtw_distance(const Eigen::MatrixXf& a, const Eigen::MatrixXf& b, int band = -1);

class DtwModel : public Classifier {
public:
    struct Candidate {
        Eigen::MatrixXf window;  // k x channels
        int cls = 0;
    };

    int predict_one(const Eigen::Ref<const Eigen::RowVectorXf>& window) const override;
    std::size_t serialized_size() const override;
    std::string kind() const override { return "dtw"; }
    int num_classes() const override { return classes_; }

    const std::vector<Candidate>& candidates() const { return candidates_; }
    int band() const { return band_; }

private:
    friend DtwModel fit_dtw(const Dataset&, const DtwConfig&);
    std::vector<Candidate> candidates_;
    int classes_ = 0;
    int k_ = 0;
    int band_ = -1;
};

// Seeded medoid-style candidate selection per class; the candidate count
// is reduced (with a warning) when the stored set would break the 90 KB
// budget.
DtwModel fit_dtw(const Dataset& data, const DtwConfig& cfg = {});

// --- NN adapter ----------------------------------------------------------------

class NeuralClassifier : public Classifier {
public:
    explicit NeuralClassifier(Model<float> model);
    int predict_one(const Eigen::Ref<const Eigen::RowVectorXf>& window) const override;
    Eigen::VectorXi predict(const Eigen::MatrixXf& windows) const override;
    std::size_t serialized_size() const override;
    std::string kind() const override { return "nn"; }
    int num_classes() const override { return model_.config.classes; }
    const Model<float>& model() const { return model_; }

private:
    Model<float> model_;
};

}  // namespace akb
