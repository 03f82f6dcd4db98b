#include "akb/metrics.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace akb {

Eigen::MatrixXi confusion_matrix(const Eigen::VectorXi& truth, const Eigen::VectorXi& predicted,
                                 int num_classes) {
    if (truth.size() != predicted.size())
        throw DataError("confusion_matrix: prediction count does not match truth");
    Eigen::MatrixXi confusion = Eigen::MatrixXi::Zero(num_classes, num_classes);
    for (Eigen::Index i = 0; i < truth.size(); ++i) {
        const int t = truth[i], p = predicted[i];
        if (t < 0 || t >= num_classes || p < 0 || p >= num_classes)
            throw DataError("confusion_matrix: class id out of range");
        ++confusion(t, p);
    }
    return confusion;
}

Metrics metrics_from_confusion(const Eigen::MatrixXi& confusion) {
    const int classes = static_cast<int>(confusion.rows());
    Metrics m;
    m.confusion = confusion;
    m.total = confusion.sum();
    m.accuracy = m.total > 0 ? static_cast<double>(confusion.trace()) / m.total : 0.0;
    m.precision = Eigen::VectorXd::Constant(classes, std::nan(""));
    m.recall = Eigen::VectorXd::Constant(classes, std::nan(""));
    m.f1 = Eigen::VectorXd::Constant(classes, std::nan(""));

    double psum = 0, rsum = 0, fsum = 0;
    int pdef = 0, rdef = 0, fdef = 0;
    for (int c = 0; c < classes; ++c) {
        const long row = confusion.row(c).sum();
        const long col = confusion.col(c).sum();
        const long hit = confusion(c, c);
        if (col > 0) {
            m.precision[c] = static_cast<double>(hit) / col;
            psum += m.precision[c];
            ++pdef;
        } else {
            m.notes.push_back("precision undefined for class " + std::to_string(c) +
                              " (never predicted)");
        }
        if (row > 0) {
            m.recall[c] = static_cast<double>(hit) / row;
            rsum += m.recall[c];
            ++rdef;
        } else {
            m.notes.push_back("recall undefined for class " + std::to_string(c) +
                              " (absent from ground truth)");
        }
        if (col > 0 && row > 0) {
            const double p = m.precision[c], r = m.recall[c];
            m.f1[c] = (p + r) > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
            fsum += m.f1[c];
            ++fdef;
        }
    }
    m.macro_precision = pdef > 0 ? psum / pdef : std::nan("");
    m.macro_recall = rdef > 0 ? rsum / rdef : std::nan("");
    m.macro_f1 = fdef > 0 ? fsum / fdef : std::nan("");
    return m;
}

Metrics evaluate_predictions(const Eigen::VectorXi& truth, const Eigen::VectorXi& predicted,
                             int num_classes) {
    return metrics_from_confusion(confusion_matrix(truth, predicted, num_classes));
}

Eigen::MatrixXd row_normalized(const Eigen::MatrixXi& confusion) {
    Eigen::MatrixXd out = confusion.cast<double>();
    for (Eigen::Index r = 0; r < out.rows(); ++r) {
        const double sum = out.row(r).sum();
        if (sum > 0.0) out.row(r) /= sum;
    }
    return out;
}

void write_confusion_csv(const Eigen::MatrixXi& confusion, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open " + path + " for writing");
    out << "true\\pred";
    for (Eigen::Index c = 0; c < confusion.cols(); ++c) out << ",class" << c;
    out << '\n';
    for (Eigen::Index r = 0; r < confusion.rows(); ++r) {
        out << "class" << r;
        for (Eigen::Index c = 0; c < confusion.cols(); ++c) out << ',' << confusion(r, c);
        out << '\n';
    }
}

std::string metrics_to_json(const Metrics& m) {
    std::ostringstream out;
    out.precision(12);
    auto vec = [&out](const char* name, const Eigen::VectorXd& v) {
        out << "  \"" << name << "\": [";
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            if (i) out << ", ";
            if (std::isnan(v[i])) out << "null";
            else out << v[i];
        }
        out << "],\n";
    };
    out << "{\n";
    out << "  \"total\": " << m.total << ",\n";
    out << "  \"accuracy\": " << m.accuracy << ",\n";
    vec("precision", m.precision);
    vec("recall", m.recall);
    vec("f1", m.f1);
    out << "  \"macro_precision\": " << m.macro_precision << ",\n";
    out << "  \"macro_recall\": " << m.macro_recall << ",\n";
    out << "  \"macro_f1\": " << m.macro_f1 << ",\n";
    out << "  \"confusion\": [";
    for (Eigen::Index r = 0; r < m.confusion.rows(); ++r) {
        if (r) out << ", ";
        out << "[";
        for (Eigen::Index c = 0; c < m.confusion.cols(); ++c) {
            if (c) out << ", ";
            out << m.confusion(r, c);
        }
        out << "]";
    }
    out << "],\n";
    out << "  \"notes\": [";
    for (std::size_t i = 0; i < m.notes.size(); ++i) {
        if (i) out << ", ";
        out << '"' << m.notes[i] << '"';
    }
    out << "]\n}\n";
    return out.str();
}

}  // namespace akb
