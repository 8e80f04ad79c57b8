#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mmf/errors.hpp"

namespace mmf {

// Confusion matrix (rows = true class, cols = predicted) plus the derived
// scores. For binary tasks class 1 is the positive class — by convention the
// more severe label — and AUC is computed from the positive-class softmax
// score. Multiclass sensitivity/specificity are macro-averaged one-vs-rest.
struct Metrics {
    std::vector<std::vector<int>> confusion;
    double acc = 0.0;
    double spe = 0.0;
    double sen = 0.0;
    std::optional<double> auc;

    int total() const;
    double error_rate() const { return 100.0 * (1.0 - acc); }
};

// Builds a confusion matrix from (true, predicted) pairs and derives
// ACC/SPE/SEN.
Metrics metrics_from_pairs(const std::vector<int>& truth, const std::vector<int>& predicted,
                           int num_classes);

Metrics metrics_from_confusion(const std::vector<std::vector<int>>& confusion);

// Mann-Whitney ROC-AUC: the fraction of (positive, negative) pairs where the
// positive outscores the negative, ties counted 0.5. Computed via midranks;
// exact, and invariant under strictly increasing score transforms.
double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels);

// One evaluated configuration for the report table.
struct ReportEntry {
    std::string task;
    std::string provider;
    int shots = 0;
    Metrics metrics;
};

// Error-rate table (one row per entry) plus a machine-readable JSON mirror
// holding the same rounded values. Percentages are rendered in integer
// hundredths, so the accuracy and error cells always sum to exactly 100.
struct Report {
    std::string text;
    std::string json;
};

Report report(const std::vector<ReportEntry>& entries);

}  // namespace mmf
