#pragma once

#include <utility>
#include <vector>

#include "stegsage/qis.hpp"
#include "stegsage/tensor.hpp"

namespace stegsage {

enum class Normalization { raw, scaled };

/// Chain graph over the frames of one stream: node t carries the three
/// quantization indices of frame t, edges run t -> t+1.
struct StreamGraph {
    Tensor2 node_features;                   // [T x 3]
    std::vector<std::pair<int, int>> edges;  // directed, 0-based
    bool undirected = false;                 // both directions materialized
    int label = -1;                          // -1 unknown, 0 cover, 1 stego

    int T() const { return node_features.rows; }
};

// scaled divides each coordinate by (codebook size - 1) so features land
// in [0, 1]; raw keeps integer indices. undirected adds the reverse of
// every chain edge.
StreamGraph build_graph(const QisMatrix& q, Normalization norm = Normalization::scaled,
                        bool undirected = false);

/// Disjoint union of graphs with offset-shifted node ids, plus a CSR
/// view of in-neighbors that aggregation consumes directly.
struct GraphBatch {
    Tensor2 node_features;                   // [total nodes x 3]
    std::vector<std::pair<int, int>> edges;  // shifted into batch coordinates
    std::vector<int> graph_sizes;
    std::vector<int> node_offset;  // start of each graph's nodes
    std::vector<int> labels;

    std::vector<int> in_offsets;  // CSR: in-neighbors of node v are
    std::vector<int> in_list;     // in_list[in_offsets[v] .. in_offsets[v+1])

    int total_nodes() const { return node_features.rows; }
    int graph_count() const { return static_cast<int>(graph_sizes.size()); }
};

GraphBatch batch_graphs(const std::vector<StreamGraph>& graphs);

}  // namespace stegsage
