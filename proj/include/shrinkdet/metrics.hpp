#pragma once

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "shrinkdet/codec.hpp"
#include "shrinkdet/core.hpp"

namespace shrinkdet {

/// ROC AUC via the rank statistic (ties count one half), equivalent to the
/// Mann-Whitney probability that a positive outranks a negative.
inline double roc_auc(const std::vector<double>& scores, const std::vector<Label>& labels) {
    if (scores.size() != labels.size())
        throw std::invalid_argument("roc_auc: score/label length mismatch");
    const size_t m = scores.size();
    size_t positives = 0;
    for (Label l : labels) positives += l == Label::outlier;
    const size_t negatives = m - positives;
    if (positives == 0 || negatives == 0)
        throw std::invalid_argument("roc_auc: needs both classes");

    std::vector<size_t> order(m);
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return scores[a] < scores[b]; });

    double rank_sum_pos = 0.0;
    size_t i = 0;
    while (i < m) {
        size_t j = i;
        while (j < m && scores[order[j]] == scores[order[i]]) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // 1-based tie average
        for (size_t k = i; k < j; ++k)
            if (labels[order[k]] == Label::outlier) rank_sum_pos += avg_rank;
        i = j;
    }
    const double p = static_cast<double>(positives);
    return (rank_sum_pos - p * (p + 1.0) / 2.0) / (p * static_cast<double>(negatives));
}

/// PR AUC in the average-precision convention: threshold sweep over the
/// distinct scores, precision weighted by recall increments.
inline double pr_auc(const std::vector<double>& scores, const std::vector<Label>& labels) {
    if (scores.size() != labels.size())
        throw std::invalid_argument("pr_auc: score/label length mismatch");
    size_t positives = 0;
    for (Label l : labels) positives += l == Label::outlier;
    if (positives == 0)
        throw std::invalid_argument("pr_auc: needs at least one positive");

    const size_t m = scores.size();
    std::vector<size_t> order(m);
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return scores[a] > scores[b]; });

    double ap = 0.0;
    size_t tp = 0, fp = 0, i = 0;
    while (i < m) {
        size_t j = i;
        size_t group_tp = 0, group_fp = 0;
        while (j < m && scores[order[j]] == scores[order[i]]) {
            if (labels[order[j]] == Label::outlier) ++group_tp; else ++group_fp;
            ++j;
        }
        tp += group_tp;
        fp += group_fp;
        if (group_tp > 0) {
            const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
            ap += precision * static_cast<double>(group_tp) / static_cast<double>(positives);
        }
        i = j;
    }
    return ap;
}

/// 100 * compressed / uncompressed; > 100 means the compressed run did better.
inline double detection_ratio(double compressed_metric, double uncompressed_metric) {
    if (!(uncompressed_metric > 0.0))
        throw std::invalid_argument("detection_ratio: zero uncompressed baseline");
    return 100.0 * compressed_metric / uncompressed_metric;
}

struct CompressionReport {
    size_t original_bytes = 0;  // n * 8 (64-bit values)
    size_t archive_bytes = 0;
    size_t base_bytes = 0;
    size_t residual_bytes = 0;
    double compression_ratio = 0.0;
    double base_fraction = 0.0;
};

inline CompressionReport compression_report(const TimeSeries& original, const Archive& archive) {
    CompressionReport rep;
    rep.original_bytes = original.size() * 8;
    rep.archive_bytes = serialize(archive).size();
    rep.base_bytes = base_payload_bytes(archive);
    rep.residual_bytes = residual_payload_bytes(archive);
    rep.compression_ratio =
        static_cast<double>(rep.original_bytes) / static_cast<double>(rep.archive_bytes);
    rep.base_fraction =
        static_cast<double>(rep.base_bytes) / static_cast<double>(rep.original_bytes);
    return rep;
}

/// One raw-vs-compressed comparison row for a (dataset, detector) pair.
struct EvalReport {
    std::string dataset;
    std::string detector;
    double roc_auc_raw = 0.0, roc_auc_compressed = 0.0;
    double pr_auc_raw = 0.0, pr_auc_compressed = 0.0;
    double detection_ratio_roc = 0.0;
    double detection_ratio_pr = 0.0;
    double compression_ratio = 0.0;
    double base_fraction = 0.0;
    double runtime_raw = 0.0;         // seconds, median of repetitions
    double runtime_compressed = 0.0;  // seconds, median of repetitions
    double speedup = 0.0;
};

}  // namespace shrinkdet
