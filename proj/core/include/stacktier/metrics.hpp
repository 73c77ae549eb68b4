#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace stacktier {

struct ConfusionCounts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;

    std::size_t total() const { return tp + fp + tn + fn; }
};

struct ThresholdMetrics {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    // Degenerate denominators (tp+fp == 0 or tp+fn == 0) map the metric
    // to 0 and clear the corresponding flag instead of erroring, so grid
    // search stays total.
    bool precision_defined = true;
    bool recall_defined = true;
};

/// The six-metric row reported for every evaluated model, in the fixed
/// column order Accuracy, F1 Score, Recall, Precision, ROC-AUC, AUPRC.
struct MetricReport {
    double accuracy = 0.0;
    double f1 = 0.0;
    double recall = 0.0;
    double precision = 0.0;
    double roc_auc = 0.0;
    double auprc = 0.0;
};

/// Positive prediction is score >= threshold (boundary inclusive).
ConfusionCounts confusion_at_threshold(std::span<const double> scores,
                                       std::span<const int> labels,
                                       double threshold);

ThresholdMetrics threshold_metrics(const ConfusionCounts& c);

/// Mann-Whitney statistic: over all positive/negative pairs, the
/// fraction where the positive outranks the negative, ties counting
/// one half. Exact for integer-representable pair counts.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

/// Step-wise average precision with tied scores processed as one block
/// (precision evaluated after the whole block).
double average_precision(std::span<const double> scores,
                         std::span<const int> labels);

MetricReport full_report(std::span<const double> scores,
                         std::span<const int> labels,
                         double threshold = 0.5);

/// Looks up one of accuracy|f1|recall|precision|roc_auc|auprc.
double metric_value(const MetricReport& report, const std::string& name);

std::string report_csv_header();
std::string report_csv_row(const MetricReport& report);
std::string report_text(const MetricReport& report);

}  // namespace stacktier
