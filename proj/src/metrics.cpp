#include "stegsage/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "stegsage/common.hpp"
#include "stegsage/nn.hpp"

namespace stegsage {

namespace {

constexpr int kEvalChunk = 8;

struct EvalOutputs {
    Tensor2 z;       // [n x hidden]
    Tensor2 logits;  // [n x classes]
};

// Chunked eval-mode forward; each chunk writes disjoint output rows, so
// the result is the same for any thread count.
EvalOutputs forward_all(const ModelState& state, const std::vector<StreamGraph>& graphs) {
    if (graphs.empty()) throw ValidationError("evaluation set is empty");
    const int n = static_cast<int>(graphs.size());
    EvalOutputs out{Tensor2(n, state.config.hidden), Tensor2(n, state.config.classes)};
    const std::int64_t chunks = (n + kEvalChunk - 1) / kEvalChunk;
    parallel_for(chunks, [&](std::int64_t c) {
        const int lo = static_cast<int>(c) * kEvalChunk;
        const int hi = std::min(n, lo + kEvalChunk);
        std::vector<StreamGraph> slice(graphs.begin() + lo, graphs.begin() + hi);
        GraphBatch batch = batch_graphs(slice);
        ForwardTrace tr = model_forward(batch, state, Mode::eval, 0);
        for (int g = lo; g < hi; ++g) {
            for (int j = 0; j < out.z.cols; ++j) out.z(g, j) = tr.z_G(g - lo, j);
            for (int j = 0; j < out.logits.cols; ++j) out.logits(g, j) = tr.logits(g - lo, j);
        }
    });
    return out;
}

void require_binary_labels(const std::vector<StreamGraph>& graphs) {
    for (size_t i = 0; i < graphs.size(); ++i)
        if (graphs[i].label != 0 && graphs[i].label != 1)
            throw ValidationError("graph " + std::to_string(i) + " has no 0/1 label");
}

std::string pct(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * v);
    return buf;
}

}  // namespace

MetricsReport metrics_from_counts(long long tp, long long tn, long long fp, long long fn) {
    for (long long c : {tp, tn, fp, fn})
        if (c < 0) throw ValidationError("confusion counts must be non-negative");
    MetricsReport r;
    r.tp = tp;
    r.tn = tn;
    r.fp = fp;
    r.fn = fn;
    const long long total = tp + tn + fp + fn;
    if (total == 0) r.accuracy_degenerate = true;
    else r.accuracy = static_cast<double>(tp + tn) / static_cast<double>(total);
    if (tp + fp == 0) r.precision_degenerate = true;
    else r.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    if (tp + fn == 0) r.recall_degenerate = true;
    else r.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    if (2 * tp + fp + fn == 0) r.f1_degenerate = true;
    else r.f1 = static_cast<double>(2 * tp) / static_cast<double>(2 * tp + fp + fn);
    return r;
}

int decide(double logit_cover, double logit_stego) { return logit_stego > logit_cover ? 1 : 0; }

MetricsReport evaluate(const ModelState& state, const std::vector<StreamGraph>& graphs) {
    require_binary_labels(graphs);
    EvalOutputs out = forward_all(state, graphs);
    long long tp = 0, tn = 0, fp = 0, fn = 0;
    for (size_t g = 0; g < graphs.size(); ++g) {
        const int row = static_cast<int>(g);
        const int pred = decide(out.logits(row, 0), out.logits(row, 1));
        if (graphs[g].label == 1)
            (pred == 1 ? tp : fn) += 1;
        else
            (pred == 0 ? tn : fp) += 1;
    }
    return metrics_from_counts(tp, tn, fp, fn);
}

void export_embeddings(const ModelState& state, const std::vector<StreamGraph>& graphs,
                       const std::string& path) {
    require_binary_labels(graphs);
    EvalOutputs out = forward_all(state, graphs);
    std::ofstream f(path);
    if (!f) throw IoError("cannot open for writing: " + path);
    char buf[40];
    for (size_t g = 0; g < graphs.size(); ++g) {
        f << graphs[g].label;
        for (int j = 0; j < out.z.cols; ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", out.z(static_cast<int>(g), j));
            f << '\t' << buf;
        }
        f << '\n';
    }
    if (!f.flush()) throw IoError("write failed: " + path);
}

double centroid_distance(const ModelState& state, const std::vector<StreamGraph>& graphs) {
    require_binary_labels(graphs);
    EvalOutputs out = forward_all(state, graphs);
    Tensor2 mean(2, out.z.cols);
    long long count[2] = {0, 0};
    for (size_t g = 0; g < graphs.size(); ++g) {
        const int lab = graphs[g].label;
        ++count[lab];
        for (int j = 0; j < out.z.cols; ++j) mean(lab, j) += out.z(static_cast<int>(g), j);
    }
    if (count[0] == 0 || count[1] == 0)
        throw ValidationError("centroid distance needs both labels present");
    double d2 = 0.0;
    for (int j = 0; j < out.z.cols; ++j) {
        const double diff = mean(0, j) / count[0] - mean(1, j) / count[1];
        d2 += diff * diff;
    }
    return std::sqrt(d2);
}

std::string format_report(const MetricsReport& r) {
    std::string s = "TP " + std::to_string(r.tp) + "  TN " + std::to_string(r.tn) + "  FP " +
                    std::to_string(r.fp) + "  FN " + std::to_string(r.fn) + "\n";
    auto line = [&](const char* name, double v, bool degenerate) {
        s += name;
        s += " ";
        s += pct(v);
        if (degenerate) s += " (degenerate: empty denominator)";
        s += "\n";
    };
    line("accuracy ", r.accuracy, r.accuracy_degenerate);
    line("precision", r.precision, r.precision_degenerate);
    line("recall   ", r.recall, r.recall_degenerate);
    line("f1       ", r.f1, r.f1_degenerate);
    return s;
}

}  // namespace stegsage
