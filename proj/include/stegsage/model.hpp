#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "stegsage/graph.hpp"
#include "stegsage/nn.hpp"
#include "stegsage/optim.hpp"
#include "stegsage/tensor.hpp"

namespace stegsage {

enum class Aggregator { lstm, mean };
enum class LayerKind { sage, gcn };
enum class ReadoutMode { hierarchical_mean, hierarchical_max, last_mean };

struct ModelConfig {
    int K = 3;
    int hidden = 64;
    int input_dim = 3;
    Aggregator aggregator = Aggregator::lstm;
    LayerKind layer_kind = LayerKind::sage;
    ReadoutMode readout = ReadoutMode::hierarchical_mean;
    double dropout_p = 0.3;
    int classes = 2;
    std::uint64_t seed = 0;

    void validate() const;
    bool operator==(const ModelConfig&) const = default;
};

// Ablation presets. 1 is the full model; 2 keeps only the last layer's
// mean pool; 3 swaps the LSTM aggregator for a mean; 4 pools with max;
// 5 swaps GraphSAGE layers for GCN layers; 7 and 8 change depth to 2
// and 4. Variant 6 (attention layers) is out of scope and rejected.
ModelConfig variant_config(int variant);

const char* aggregator_name(Aggregator a);
const char* layer_kind_name(LayerKind k);
const char* readout_name(ReadoutMode r);
Aggregator aggregator_from_name(const std::string& s);
LayerKind layer_kind_from_name(const std::string& s);
ReadoutMode readout_from_name(const std::string& s);

/// Parameters plus the config that fixes their shapes. Frozen states are
/// safe to share across threads; training mutates through one writer.
struct ModelState {
    ModelConfig config;
    ParamStore params;
};

struct ParamShape {
    std::string name;
    int rows = 0;
    int cols = 0;
    enum class Init { glorot, lstm_mat, bias } init = Init::glorot;
};

// Canonical parameter list (names, shapes, insertion order) for a
// config. init_model, param_count and checkpoint loading all derive
// from this one description.
std::vector<ParamShape> param_shapes(const ModelConfig& config);

ModelState init_model(const ModelConfig& config);

long long param_count(const ModelConfig& config);

/// One layer's parameters copied out of the store.
struct LayerParams {
    Tensor2 W, b;
    LstmParams lstm;  // empty tensors unless the layer aggregates with an LSTM
    bool has_lstm = false;
};

LayerParams layer_params(const ModelState& state, int k);

/// One packed LSTM step over the nodes still holding unconsumed
/// neighbors. Row r of the step feeds node order[r].
struct LstmStep {
    LstmCache cache;
    std::vector<int> src;  // neighbor node id gathered into row r
    bool zero_state = false;
};

struct LayerTrace {
    Tensor2 agg;        // [nodes x agg width]
    Tensor2 concat_in;  // [nodes x (in + agg width)], sage layers
    Tensor2 mixed;      // [nodes x in], gcn layers: normalized adjacency times input
    std::vector<int> order;    // node ids, descending in-degree, stable
    std::vector<int> lengths;  // permuted in-neighbor counts, aligned with order
    std::vector<int> active;   // rows alive at each step
    std::vector<LstmStep> steps;
};

/// Symmetric-normalized adjacency with self loops on the undirected
/// lift of the batch edges, stored as CSR with per-entry coefficients.
struct GcnAdjacency {
    std::vector<int> offsets;
    std::vector<int> nbr;
    std::vector<double> coef;  // 1/sqrt(deg(u) deg(v)), self loops included
};

GcnAdjacency gcn_adjacency(const GraphBatch& batch);

struct ForwardTrace {
    std::vector<Tensor2> H;          // K+1 entries; H[0] is the node features
    std::vector<LayerTrace> layers;  // K entries
    GcnAdjacency adj;                // populated for gcn configs
    std::vector<Tensor2> z_layer;    // per-layer pooled vectors [graphs x hidden]
    std::vector<std::vector<int>> max_arg;  // max readout: argmax node per (graph, channel)
    Tensor2 z_G;
    Tensor2 z_D;  // post dropout
    Tensor2 dropout_mask;
    Tensor2 logits;
    Mode mode = Mode::eval;
    std::uint64_t seed = 0;
};

// Reference semantics for one neighborhood: shuffle the rows with the
// seeded permutation, run the LSTM over them from zero state, return
// the final hidden state. Zero rows in -> zero vector out.
Tensor2 lstm_aggregate(const Tensor2& neighbors, const LstmParams& p, std::uint64_t perm_seed);

// Per-node permutation seed used by the batched layers; exposed so the
// reference path above can reproduce the exact shuffles. Node ids are
// local to their graph, so a graph aggregates the same way alone or
// inside any batch.
std::uint64_t node_perm_seed(std::uint64_t layer_seed, int local_node);

// agg width = hidden for lstm, input width for mean
Tensor2 sage_layer(const GraphBatch& batch, const Tensor2& h_prev, const LayerParams& lp,
                   Aggregator agg, std::uint64_t layer_seed, LayerTrace* tr = nullptr);

Tensor2 gcn_layer(const GraphBatch& batch, const Tensor2& h_prev, const LayerParams& lp,
                  const GcnAdjacency& adj, LayerTrace* tr = nullptr);

// per_layer holds K node-embedding tensors. Hierarchical modes pool
// every layer and sum for z_G; last_mean takes the final layer's mean.
Tensor2 readout(std::span<const Tensor2> per_layer, ReadoutMode mode, const GraphBatch& batch,
                std::vector<Tensor2>* z_layer = nullptr,
                std::vector<std::vector<int>>* max_arg = nullptr);

std::string config_summary(const ModelConfig& config);

// K layers, readout, dropout on z_G (train mode only), linear head.
// Deterministic given (state, mode, seed).
ForwardTrace model_forward(const GraphBatch& batch, const ModelState& state, Mode mode,
                           std::uint64_t seed);

// dlogits is the loss gradient at the logits. Returns parameter
// gradients named like the store entries.
GradBundle model_backward(const GraphBatch& batch, const ModelState& state,
                          const ForwardTrace& trace, const Tensor2& dlogits);

// Versioned binary round trip of config + parameters, bit-exact.
void save_checkpoint(const ModelState& state, const std::string& path);
ModelState load_checkpoint(const std::string& path);
// Loads and additionally rejects a checkpoint whose config differs.
ModelState load_checkpoint(const std::string& path, const ModelConfig& expected);

}  // namespace stegsage
