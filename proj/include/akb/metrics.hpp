#pragma once

#include <string>
#include <vector>

#include "akb/common.hpp"

namespace akb {

// Classification metrics derived from a confusion matrix with rows = true
// labels and columns = predictions. Per-class values are NaN when
// undefined (class absent from truth or never predicted); macro averages
// skip undefined entries and say so in `notes`.
struct Metrics {
    Eigen::MatrixXi confusion;
    long total = 0;
    double accuracy = 0.0;
    Eigen::VectorXd precision, recall, f1;
    double macro_precision = 0.0, macro_recall = 0.0, macro_f1 = 0.0;
    std::vector<std::string> notes;
};

Eigen::MatrixXi confusion_matrix(const Eigen::VectorXi& truth, const Eigen::VectorXi& predicted,
                                 int num_classes);

Metrics metrics_from_confusion(const Eigen::MatrixXi& confusion);

Metrics evaluate_predictions(const Eigen::VectorXi& truth, const Eigen::VectorXi& predicted,
                             int num_classes);

// Row-normalized copy (rows with no mass stay zero).
Eigen::MatrixXd row_normalized(const Eigen::MatrixXi& confusion);

void write_confusion_csv(const Eigen::MatrixXi& confusion, const std::string& path);
std::string metrics_to_json(const Metrics& m);

}  // namespace akb
