#include "stegsage/graph.hpp"

#include <algorithm>

namespace stegsage {

StreamGraph build_graph(const QisMatrix& q, Normalization norm, bool undirected) {
    q.validate();
    StreamGraph g;
    g.undirected = undirected;
    g.node_features = Tensor2(q.T, 3);
    for (int t = 0; t < q.T; ++t)
        for (int i = 0; i < 3; ++i) {
            double v = q.at(i, t);
            if (norm == Normalization::scaled) v /= std::max(1, q.sizes[i] - 1);
            g.node_features(t, i) = v;
        }
    g.edges.reserve(undirected ? 2 * (q.T - 1) : q.T - 1);
    for (int t = 0; t + 1 < q.T; ++t) {
        g.edges.emplace_back(t, t + 1);
        if (undirected) g.edges.emplace_back(t + 1, t);
    }
    return g;
}

GraphBatch batch_graphs(const std::vector<StreamGraph>& graphs) {
    if (graphs.empty()) throw ValidationError("batch_graphs: empty batch");

    int total = 0;
    for (const StreamGraph& g : graphs) total += g.T();

    GraphBatch batch;
    batch.node_features = Tensor2(total, 3);
    batch.graph_sizes.reserve(graphs.size());
    batch.node_offset.reserve(graphs.size());
    batch.labels.reserve(graphs.size());

    int offset = 0;
    for (const StreamGraph& g : graphs) {
        if (g.node_features.cols != 3) throw ValidationError("batch_graphs: features must be 3-dim");
        batch.graph_sizes.push_back(g.T());
        batch.node_offset.push_back(offset);
        batch.labels.push_back(g.label);
        for (int t = 0; t < g.T(); ++t)
            for (int c = 0; c < 3; ++c) batch.node_features(offset + t, c) = g.node_features(t, c);
        for (auto [a, b] : g.edges) batch.edges.emplace_back(offset + a, offset + b);
        offset += g.T();
    }

    // CSR over in-neighbors: count, prefix-sum, scatter
    batch.in_offsets.assign(total + 1, 0);
    for (auto [a, b] : batch.edges) batch.in_offsets[b + 1] += 1;
    for (int v = 0; v < total; ++v) batch.in_offsets[v + 1] += batch.in_offsets[v];
    batch.in_list.resize(batch.edges.size());
    std::vector<int> cursor(batch.in_offsets.begin(), batch.in_offsets.end() - 1);
    for (auto [a, b] : batch.edges) batch.in_list[cursor[b]++] = a;
    return batch;
}

}  // namespace stegsage
