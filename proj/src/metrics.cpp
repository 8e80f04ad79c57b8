#include "mmf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

namespace mmf {

int Metrics::total() const {
    int n = 0;
    for (const auto& row : confusion)
        for (int v : row) n += v;
    return n;
}

Metrics metrics_from_pairs(const std::vector<int>& truth, const std::vector<int>& predicted,
                           int num_classes) {
    if (truth.size() != predicted.size() || truth.empty()) {
        throw evaluation_error("metrics need matching non-empty truth/prediction lists");
    }
    std::vector<std::vector<int>> confusion(static_cast<size_t>(num_classes),
                                            std::vector<int>(static_cast<size_t>(num_classes), 0));
    for (size_t i = 0; i < truth.size(); ++i) {
        const int t = truth[i], p = predicted[i];
        if (t < 0 || t >= num_classes || p < 0 || p >= num_classes) {
            throw evaluation_error("class index outside [0," + std::to_string(num_classes) + ")");
        }
        ++confusion[static_cast<size_t>(t)][static_cast<size_t>(p)];
    }
    return metrics_from_confusion(confusion);
}

Metrics metrics_from_confusion(const std::vector<std::vector<int>>& confusion) {
    const auto c = confusion.size();
    if (c < 2) throw evaluation_error("confusion matrix needs at least 2 classes");
    for (const auto& row : confusion) {
        if (row.size() != c) throw evaluation_error("confusion matrix must be square");
    }
    Metrics m;
    m.confusion = confusion;
    const int n = m.total();
    if (n == 0) throw evaluation_error("confusion matrix is empty");

    int trace = 0;
    for (size_t i = 0; i < c; ++i) trace += confusion[i][i];
    m.acc = static_cast<double>(trace) / n;

    if (c == 2) {
        // Class 1 is positive.
        const double tp = confusion[1][1], fn = confusion[1][0];
        const double tn = confusion[0][0], fp = confusion[0][1];
        m.sen = (tp + fn) > 0 ? tp / (tp + fn) : 0.0;
        m.spe = (tn + fp) > 0 ? tn / (tn + fp) : 0.0;
    } else {
        // Macro one-vs-rest.
        double sen_sum = 0.0, spe_sum = 0.0;
        for (size_t k = 0; k < c; ++k) {
            double tp = confusion[k][k], fn = 0.0, fp = 0.0;
            for (size_t j = 0; j < c; ++j) {
                if (j == k) continue;
                fn += confusion[k][j];
                fp += confusion[j][k];
            }
            const double tn = n - tp - fn - fp;
            sen_sum += (tp + fn) > 0 ? tp / (tp + fn) : 0.0;
            spe_sum += (tn + fp) > 0 ? tn / (tn + fp) : 0.0;
        }
        m.sen = sen_sum / static_cast<double>(c);
        m.spe = spe_sum / static_cast<double>(c);
    }
    return m;
}

double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size() || scores.empty()) {
        throw metric_error("roc_auc needs matching non-empty scores/labels");
    }
    int64_t n_pos = 0, n_neg = 0;
    for (int l : labels) {
        if (l == 1) {
            ++n_pos;
        } else if (l == 0) {
            ++n_neg;
        } else {
            throw metric_error("roc_auc labels must be 0 or 1");
        }
    }
    if (n_pos == 0 || n_neg == 0) {
        throw metric_error("roc_auc needs both classes present (got " + std::to_string(n_pos) +
                           " positives, " + std::to_string(n_neg) + " negatives)");
    }

    // Midrank formulation: AUC = (R_pos - n_pos(n_pos+1)/2) / (n_pos n_neg),
    // where R_pos sums positive midranks. Midranks are exact multiples of
    // 0.5, so the arithmetic below is exact in double at these sizes.
    std::vector<size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return scores[a] < scores[b]; });

    double rank_sum_pos = 0.0;
    size_t i = 0;
    while (i < order.size()) {
        size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        // Positions i..j-1 (0-based) share midrank (i+1 + j) / 2 in 1-based ranks.
        const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (size_t k = i; k < j; ++k) {
            if (labels[order[k]] == 1) rank_sum_pos += midrank;
        }
        i = j;
    }
    const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
    return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

namespace {

// Percentages as integer hundredths; keeps acc + err at exactly 100.00.
int64_t pct_hundredths(double fraction) { return std::llround(fraction * 10000.0); }

std::string pct_string(int64_t hundredths) {
    std::ostringstream os;
    os << hundredths / 100 << "." << (hundredths % 100 < 10 ? "0" : "")
       << hundredths % 100;
    return os.str();
}

}  // namespace

Report report(const std::vector<ReportEntry>& entries) {
    if (entries.empty()) throw evaluation_error("report needs at least one evaluated task");

    std::ostringstream table;
    table << "task          provider      shots  acc     err     sen     spe     auc\n";
    nlohmann::json mirror = nlohmann::json::array();
    for (const auto& e : entries) {
        const int64_t acc_c = pct_hundredths(e.metrics.acc);
        const int64_t err_c = 10000 - acc_c;
        const int64_t sen_c = pct_hundredths(e.metrics.sen);
        const int64_t spe_c = pct_hundredths(e.metrics.spe);
        std::ostringstream row;
        row.setf(std::ios::left);
        row.width(14);
        row << e.task;
        row.width(14);
        row << e.provider;
        row.width(7);
        row << e.shots;
        auto cell = [&](const std::string& s) {
            row.width(8);
            row << s;
        };
        cell(pct_string(acc_c));
        cell(pct_string(err_c));
        cell(pct_string(sen_c));
        cell(pct_string(spe_c));
        // Mirror values are the rendered hundredths as numbers, so parsing a
        // table cell and reading the JSON field yield the identical double.
        auto as_num = [](int64_t hundredths) { return static_cast<double>(hundredths) / 100.0; };
        std::string auc_cell = "-";
        nlohmann::json j = {{"task", e.task},           {"provider", e.provider},
                            {"shots", e.shots},         {"acc", as_num(acc_c)},
                            {"error_rate", as_num(err_c)}, {"sen", as_num(sen_c)},
                            {"spe", as_num(spe_c)}};
        if (e.metrics.auc.has_value()) {
            const int64_t auc_ten_thousandths = std::llround(*e.metrics.auc * 10000.0);
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.4f", static_cast<double>(auc_ten_thousandths) / 10000.0);
            auc_cell = buf;
            j["auc"] = static_cast<double>(auc_ten_thousandths) / 10000.0;
        }
        row << auc_cell;
        table << row.str() << "\n";
        mirror.push_back(std::move(j));
    }
    return Report{table.str(), mirror.dump(2)};
}

}  // namespace mmf
