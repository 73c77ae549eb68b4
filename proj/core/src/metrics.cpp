#include "stacktier/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "stacktier/common.hpp"

namespace stacktier {

namespace {

void check_inputs(std::span<const double> scores, std::span<const int> labels,
                  const char* op) {
    if (scores.size() != labels.size())
        throw Error(std::string(op) + ": scores/labels length mismatch");
    if (scores.empty()) throw Error(std::string(op) + ": empty input");
}

std::pair<std::size_t, std::size_t> class_counts(std::span<const int> labels) {
    std::size_t pos = 0;
    for (int y : labels) pos += (y == 1);
    return {pos, labels.size() - pos};
}

}  // namespace

ConfusionCounts confusion_at_threshold(std::span<const double> scores,
                                       std::span<const int> labels,
                                       double threshold) {
    check_inputs(scores, labels, "confusion_at_threshold");
    ConfusionCounts c;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool predicted = scores[i] >= threshold;
        if (labels[i] == 1) {
            predicted ? ++c.tp : ++c.fn;
        } else {
            predicted ? ++c.fp : ++c.tn;
        }
    }
    return c;
}

ThresholdMetrics threshold_metrics(const ConfusionCounts& c) {
    const std::size_t total = c.total();
    if (total == 0) throw Error("threshold_metrics: empty counts");
    ThresholdMetrics m;
    m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(total);
    if (c.tp + c.fp > 0) {
        m.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
    } else {
        m.precision_defined = false;
    }
    if (c.tp + c.fn > 0) {
        m.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    } else {
        m.recall_defined = false;
    }
    const double pr = m.precision + m.recall;
    m.f1 = pr > 0.0 ? 2.0 * m.precision * m.recall / pr : 0.0;
    return m;
}

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
    check_inputs(scores, labels, "roc_auc");
    const auto [pos, neg] = class_counts(labels);
    if (pos == 0 || neg == 0) throw Error("roc_auc: single-class labels");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Walk ascending tie groups; each positive beats every negative with a
    // strictly smaller score and halves against negatives in its own group.
    // All terms are dyadic rationals, so the sum is exact.
    double pairs_won = 0.0;
    double neg_below = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        double group_pos = 0.0, group_neg = 0.0;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            labels[order[j]] == 1 ? ++group_pos : ++group_neg;
            ++j;
        }
        pairs_won += group_pos * neg_below + 0.5 * group_pos * group_neg;
        neg_below += group_neg;
        i = j;
    }
    return pairs_won / (static_cast<double>(pos) * static_cast<double>(neg));
}

double average_precision(std::span<const double> scores,
                         std::span<const int> labels) {
    check_inputs(scores, labels, "average_precision");
    const auto [pos, neg] = class_counts(labels);
    (void)neg;
    if (pos == 0) throw Error("average_precision: zero positives");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    double ap = 0.0;
    std::size_t tp_cum = 0, n_cum = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        std::size_t block_tp = 0;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            block_tp += (labels[order[j]] == 1);
            ++j;
        }
        tp_cum += block_tp;
        n_cum = j;
        if (block_tp > 0) {
            const double precision_at_cut =
                static_cast<double>(tp_cum) / static_cast<double>(n_cum);
            const double delta_recall =
                static_cast<double>(block_tp) / static_cast<double>(pos);
            ap += delta_recall * precision_at_cut;
        }
        i = j;
    }
    return ap;
}

MetricReport full_report(std::span<const double> scores,
                         std::span<const int> labels, double threshold) {
    const auto t = threshold_metrics(confusion_at_threshold(scores, labels, threshold));
    MetricReport r;
    r.accuracy = t.accuracy;
    r.f1 = t.f1;
    r.recall = t.recall;
    r.precision = t.precision;
    r.roc_auc = roc_auc(scores, labels);
    r.auprc = average_precision(scores, labels);
    return r;
}

double metric_value(const MetricReport& report, const std::string& name) {
    if (name == "accuracy") return report.accuracy;
    if (name == "f1") return report.f1;
    if (name == "recall") return report.recall;
    if (name == "precision") return report.precision;
    if (name == "roc_auc") return report.roc_auc;
    if (name == "auprc") return report.auprc;
    throw Error("unknown metric name: " + name);
}

std::string report_csv_header() {
    return "Accuracy,F1 Score,Recall,Precision,ROC-AUC,AUPRC";
}

std::string report_csv_row(const MetricReport& r) {
    return format_fixed(r.accuracy, 4) + "," + format_fixed(r.f1, 4) + "," +
           format_fixed(r.recall, 4) + "," + format_fixed(r.precision, 4) + "," +
           format_fixed(r.roc_auc, 4) + "," + format_fixed(r.auprc, 4);
}

std::string report_text(const MetricReport& r) {
    std::string out;
    out += "Accuracy : " + format_fixed(r.accuracy, 4) + "\n";
    out += "F1 Score : " + format_fixed(r.f1, 4) + "\n";
    out += "Recall   : " + format_fixed(r.recall, 4) + "\n";
    out += "Precision: " + format_fixed(r.precision, 4) + "\n";
    out += "ROC-AUC  : " + format_fixed(r.roc_auc, 4) + "\n";
    out += "AUPRC    : " + format_fixed(r.auprc, 4) + "\n";
    return out;
}

}  // namespace stacktier
