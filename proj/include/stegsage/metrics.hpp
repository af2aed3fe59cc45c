#pragma once

#include <string>
#include <vector>

#include "stegsage/graph.hpp"
#include "stegsage/model.hpp"

namespace stegsage {

/// Confusion counts and the metrics derived from them. Zero-denominator
/// metrics report 0 with the matching degenerate flag instead of NaN.
struct MetricsReport {
    long long tp = 0, tn = 0, fp = 0, fn = 0;
    double accuracy = 0.0, precision = 0.0, recall = 0.0, f1 = 0.0;
    bool accuracy_degenerate = false;
    bool precision_degenerate = false;
    bool recall_degenerate = false;
    bool f1_degenerate = false;
    std::vector<double> loss_history;  // per-epoch train loss when produced by a training run

    long long total() const { return tp + tn + fp + fn; }
    bool operator==(const MetricsReport&) const = default;
};

// accuracy = (TP+TN)/total, precision = TP/(TP+FP), recall = TP/(TP+FN),
// f1 = 2TP/(2TP+FP+FN), each exactly as written.
MetricsReport metrics_from_counts(long long tp, long long tn, long long fp, long long fn);

// 1 (stego) iff the stego logit strictly exceeds the cover logit; the
// knife-edge tie goes to cover.
int decide(double logit_cover, double logit_stego);

// Eval-mode forward over the whole set, decisions via `decide`, counts
// against the graphs' labels. Parallelizes across fixed-size chunks;
// results do not depend on the thread count.
MetricsReport evaluate(const ModelState& state, const std::vector<StreamGraph>& graphs);

// One line per graph: label, then the graph embedding, tab-separated
// with full double precision.
void export_embeddings(const ModelState& state, const std::vector<StreamGraph>& graphs,
                       const std::string& path);

// Per-label mean embedding rows (row 0 cover, row 1 stego) and their
// Euclidean distance; the separation statistic for an exported set.
double centroid_distance(const ModelState& state, const std::vector<StreamGraph>& graphs);

std::string format_report(const MetricsReport& r);

}  // namespace stegsage
