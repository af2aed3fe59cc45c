#include "stegsage/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace stegsage {

namespace {

std::vector<int> node_graph_map(const GraphBatch& batch) {
    std::vector<int> ng(static_cast<size_t>(batch.total_nodes()));
    for (int g = 0; g < batch.graph_count(); ++g) {
        const int start = batch.node_offset[g];
        for (int i = 0; i < batch.graph_sizes[g]; ++i) ng[start + i] = g;
    }
    return ng;
}

Tensor2 head_rows(const Tensor2& src, int r) {
    Tensor2 out(r, src.cols);
    std::memcpy(out.data.data(), src.data.data(), static_cast<size_t>(r) * src.cols * 8);
    return out;
}

void copy_row(Tensor2& dst, int dr, const Tensor2& src, int sr) {
    std::memcpy(dst.row_ptr(dr), src.row_ptr(sr), static_cast<size_t>(src.cols) * 8);
}

void add_row(Tensor2& dst, int dr, const Tensor2& src, int sr, double scale = 1.0) {
    double* d = dst.row_ptr(dr);
    const double* s = src.row_ptr(sr);
    for (int c = 0; c < src.cols; ++c) d[c] += scale * s[c];
}

int in_degree(const GraphBatch& b, int v) { return b.in_offsets[v + 1] - b.in_offsets[v]; }

// Fills agg plus the packing metadata the backward pass replays.
// Nodes are processed longest-neighborhood-first so each step works on
// a prefix; a node's final hidden state lands in agg when it exits.
void lstm_packed_forward(const GraphBatch& batch, const Tensor2& h_prev, const LstmParams& p,
                         std::uint64_t layer_seed, LayerTrace& T) {
    const int n = batch.total_nodes();
    const int in = h_prev.cols;
    T.agg = Tensor2(n, p.hidden_dim());

    std::vector<int> nbr = batch.in_list;
    const std::vector<int> ng = node_graph_map(batch);
    int max_deg = 0;
    for (int v = 0; v < n; ++v) {
        const int m = in_degree(batch, v);
        max_deg = std::max(max_deg, m);
        if (m >= 2) {
            Rng rng(node_perm_seed(layer_seed, v - batch.node_offset[ng[v]]));
            std::vector<int> perm = rng.permutation(m);
            const int off = batch.in_offsets[v];
            std::vector<int> tmp(m);
            for (int j = 0; j < m; ++j) tmp[j] = batch.in_list[off + perm[j]];
            std::copy(tmp.begin(), tmp.end(), nbr.begin() + off);
        }
    }
    T.order.clear();
    T.lengths.clear();
    T.active.clear();
    T.steps.clear();
    if (max_deg == 0) return;

    // counting sort, degree descending, node id ascending within a degree
    std::vector<int> cnt(max_deg + 1, 0);
    for (int v = 0; v < n; ++v) ++cnt[in_degree(batch, v)];
    std::vector<int> pos(max_deg + 1, 0);
    for (int d = max_deg - 1; d >= 0; --d) pos[d] = pos[d + 1] + cnt[d + 1];
    T.order.resize(n);
    T.lengths.resize(n);
    {
        std::vector<int> cursor = pos;
        for (int v = 0; v < n; ++v) {
            const int d = in_degree(batch, v);
            const int r = cursor[d]++;
            T.order[r] = v;
            T.lengths[r] = d;
        }
    }
    T.active.resize(max_deg);
    for (int t = 0; t < max_deg; ++t) {
        int a = 0;
        for (int d = t + 1; d <= max_deg; ++d) a += cnt[d];
        T.active[t] = a;
    }

    T.steps.resize(max_deg);
    Tensor2 h_state, c_state;
    for (int t = 0; t < max_deg; ++t) {
        const int a = T.active[t];
        LstmStep& st = T.steps[t];
        st.src.resize(a);
        Tensor2 x(a, in);
        for (int r = 0; r < a; ++r) {
            const int v = T.order[r];
            const int u = nbr[batch.in_offsets[v] + t];
            st.src[r] = u;
            copy_row(x, r, h_prev, u);
        }
        Tensor2 h_new, c_new;
        if (t == 0) {
            st.zero_state = true;
            lstm_cell_zero(x, p, h_new, c_new, &st.cache);
        } else {
            Tensor2 hp = head_rows(h_state, a);
            Tensor2 cp = head_rows(c_state, a);
            lstm_cell(x, hp, cp, p, h_new, c_new, &st.cache);
        }
        const int a_next = (t + 1 < max_deg) ? T.active[t + 1] : 0;
        for (int r = a_next; r < a; ++r) copy_row(T.agg, T.order[r], h_new, r);
        h_state = std::move(h_new);
        c_state = std::move(c_new);
    }
}

// dagg rows for zero-length nodes are ignored (their aggregate is the
// constant zero vector). dx at each step scatters back into dh_nodes.
void lstm_packed_backward(const LayerTrace& T, const LstmParams& p, const Tensor2& dagg,
                          Tensor2& dh_nodes, LstmGrads& grads) {
    const int steps = static_cast<int>(T.steps.size());
    const int H = p.hidden_dim();
    Tensor2 dh_carry, dc_carry;
    for (int t = steps - 1; t >= 0; --t) {
        const int a = T.active[t];
        const int a_next = (t + 1 < steps) ? T.active[t + 1] : 0;
        Tensor2 dh(a, H), dc(a, H);
        for (int r = 0; r < a_next; ++r) {
            copy_row(dh, r, dh_carry, r);
            copy_row(dc, r, dc_carry, r);
        }
        for (int r = a_next; r < a; ++r) copy_row(dh, r, dagg, T.order[r]);
        Tensor2 dx;
        if (T.steps[t].zero_state) {
            lstm_cell_zero_backward(T.steps[t].cache, p, dh, dc, dx, grads);
        } else {
            lstm_cell_backward(T.steps[t].cache, p, dh, dc, dx, dh_carry, dc_carry, grads);
        }
        for (int r = 0; r < a; ++r) add_row(dh_nodes, T.steps[t].src[r], dx, r);
    }
}

void mean_aggregate(const GraphBatch& batch, const Tensor2& h_prev, Tensor2& agg) {
    const int n = batch.total_nodes();
    agg = Tensor2(n, h_prev.cols);
    for (int v = 0; v < n; ++v) {
        const int m = in_degree(batch, v);
        if (m == 0) continue;
        for (int j = 0; j < m; ++j) add_row(agg, v, h_prev, batch.in_list[batch.in_offsets[v] + j]);
        double* row = agg.row_ptr(v);
        for (int c = 0; c < agg.cols; ++c) row[c] /= m;
    }
}

void mean_aggregate_backward(const GraphBatch& batch, const Tensor2& dagg, Tensor2& dh_nodes) {
    for (int v = 0; v < batch.total_nodes(); ++v) {
        const int m = in_degree(batch, v);
        if (m == 0) continue;
        for (int j = 0; j < m; ++j)
            add_row(dh_nodes, batch.in_list[batch.in_offsets[v] + j], dagg, v, 1.0 / m);
    }
}

const char* lstm_suffix(int i) {
    static const char* kNames[12] = {"Wxi", "Wxf", "Wxg", "Wxo", "Whi", "Whf",
                                     "Whg", "Who", "bi",  "bf",  "bg",  "bo"};
    return kNames[i];
}

Tensor2& lstm_tensor(LstmParams& p, int i) {
    Tensor2* slots[12] = {&p.Wxi, &p.Wxf, &p.Wxg, &p.Wxo, &p.Whi, &p.Whf,
                          &p.Whg, &p.Who, &p.bi,  &p.bf,  &p.bg,  &p.bo};
    return *slots[i];
}

const Tensor2& lstm_grad_tensor(const LstmGrads& g, int i) {
    const Tensor2* slots[12] = {&g.Wxi, &g.Wxf, &g.Wxg, &g.Wxo, &g.Whi, &g.Whf,
                                &g.Whg, &g.Who, &g.bi,  &g.bf,  &g.bg,  &g.bo};
    return *slots[i];
}

}  // namespace

void ModelConfig::validate() const {
    if (K < 1) throw ValidationError("config: K must be >= 1");
    if (hidden < 1) throw ValidationError("config: hidden must be >= 1");
    if (input_dim < 1) throw ValidationError("config: input_dim must be >= 1");
    if (classes < 2) throw ValidationError("config: classes must be >= 2");
    if (!(dropout_p >= 0.0 && dropout_p < 1.0))
        throw ValidationError("config: dropout_p must be in [0, 1)");
}

ModelConfig variant_config(int variant) {
    ModelConfig c;
    switch (variant) {
        case 1: break;
        case 2: c.readout = ReadoutMode::last_mean; break;
        case 3: c.aggregator = Aggregator::mean; break;
        case 4: c.readout = ReadoutMode::hierarchical_max; break;
        case 5: c.layer_kind = LayerKind::gcn; break;
        case 6: throw ValidationError("variant 6 (attention layers) is not supported");
        case 7: c.K = 2; break;
        case 8: c.K = 4; break;
        default: throw ValidationError("unknown model variant " + std::to_string(variant));
    }
    return c;
}

const char* aggregator_name(Aggregator a) { return a == Aggregator::lstm ? "lstm" : "mean"; }
const char* layer_kind_name(LayerKind k) { return k == LayerKind::sage ? "sage" : "gcn"; }
const char* readout_name(ReadoutMode r) {
    switch (r) {
        case ReadoutMode::hierarchical_mean: return "hierarchical_mean";
        case ReadoutMode::hierarchical_max: return "hierarchical_max";
        default: return "last_mean";
    }
}

Aggregator aggregator_from_name(const std::string& s) {
    if (s == "lstm") return Aggregator::lstm;
    if (s == "mean") return Aggregator::mean;
    throw ValidationError("unknown aggregator: " + s);
}

LayerKind layer_kind_from_name(const std::string& s) {
    if (s == "sage") return LayerKind::sage;
    if (s == "gcn") return LayerKind::gcn;
    throw ValidationError("unknown layer kind: " + s);
}

ReadoutMode readout_from_name(const std::string& s) {
    if (s == "hierarchical_mean") return ReadoutMode::hierarchical_mean;
    if (s == "hierarchical_max") return ReadoutMode::hierarchical_max;
    if (s == "last_mean") return ReadoutMode::last_mean;
    throw ValidationError("unknown readout: " + s);
}

std::string config_summary(const ModelConfig& c) {
    return "K=" + std::to_string(c.K) + " hidden=" + std::to_string(c.hidden) +
           " agg=" + aggregator_name(c.aggregator) + " layers=" + layer_kind_name(c.layer_kind) +
           " readout=" + readout_name(c.readout);
}

std::vector<ParamShape> param_shapes(const ModelConfig& cfg) {
    cfg.validate();
    std::vector<ParamShape> out;
    for (int k = 1; k <= cfg.K; ++k) {
        const int in = (k == 1) ? cfg.input_dim : cfg.hidden;
        const std::string base = "layer" + std::to_string(k) + ".";
        if (cfg.layer_kind == LayerKind::gcn) {
            out.push_back({base + "W", cfg.hidden, in, ParamShape::Init::glorot});
            out.push_back({base + "b", 1, cfg.hidden, ParamShape::Init::bias});
            continue;
        }
        const int agg_w = (cfg.aggregator == Aggregator::lstm) ? cfg.hidden : in;
        out.push_back({base + "W", cfg.hidden, in + agg_w, ParamShape::Init::glorot});
        out.push_back({base + "b", 1, cfg.hidden, ParamShape::Init::bias});
        if (cfg.aggregator == Aggregator::lstm) {
            for (int i = 0; i < 4; ++i)
                out.push_back({base + "agg." + lstm_suffix(i), cfg.hidden, in,
                               ParamShape::Init::lstm_mat});
            for (int i = 4; i < 8; ++i)
                out.push_back({base + "agg." + lstm_suffix(i), cfg.hidden, cfg.hidden,
                               ParamShape::Init::lstm_mat});
            for (int i = 8; i < 12; ++i)
                out.push_back({base + "agg." + lstm_suffix(i), 1, cfg.hidden,
                               ParamShape::Init::bias});
        }
    }
    out.push_back({"head.W", cfg.classes, cfg.hidden, ParamShape::Init::glorot});
    out.push_back({"head.b", 1, cfg.classes, ParamShape::Init::bias});
    return out;
}

ModelState init_model(const ModelConfig& cfg) {
    ModelState st;
    st.config = cfg;
    Rng rng(derive_seed(cfg.seed, 0x171717));
    for (const ParamShape& s : param_shapes(cfg)) {
        Tensor2 t(s.rows, s.cols);
        double limit = 0.0;
        if (s.init == ParamShape::Init::glorot)
            limit = std::sqrt(6.0 / (s.rows + s.cols));
        else if (s.init == ParamShape::Init::lstm_mat)
            limit = 1.0 / std::sqrt(static_cast<double>(s.rows));
        if (limit > 0.0)
            for (double& v : t.data) v = (2.0 * rng.uniform() - 1.0) * limit;
        st.params.add(s.name, std::move(t));
    }
    return st;
}

long long param_count(const ModelConfig& cfg) {
    long long total = 0;
    for (const ParamShape& s : param_shapes(cfg))
        total += static_cast<long long>(s.rows) * s.cols;
    return total;
}

LayerParams layer_params(const ModelState& state, int k) {
    const std::string base = "layer" + std::to_string(k) + ".";
    LayerParams lp;
    lp.W = state.params.at(base + "W");
    lp.b = state.params.at(base + "b");
    if (state.params.has(base + "agg.Wxi")) {
        lp.has_lstm = true;
        for (int i = 0; i < 12; ++i)
            lstm_tensor(lp.lstm, i) = state.params.at(base + "agg." + lstm_suffix(i));
    }
    return lp;
}

std::uint64_t node_perm_seed(std::uint64_t layer_seed, int local_node) {
    return derive_seed(layer_seed, 0x9E12, static_cast<std::uint64_t>(local_node));
}

Tensor2 lstm_aggregate(const Tensor2& neighbors, const LstmParams& p, std::uint64_t perm_seed) {
    const int H = p.hidden_dim();
    if (neighbors.rows == 0) return Tensor2(1, H);
    if (neighbors.cols != p.input_dim())
        throw ValidationError("lstm_aggregate: neighbor width does not match aggregator input");
    std::vector<int> perm{0};
    if (neighbors.rows >= 2) perm = Rng(perm_seed).permutation(neighbors.rows);
    Tensor2 h, c;
    for (int t = 0; t < neighbors.rows; ++t) {
        Tensor2 x(1, neighbors.cols);
        copy_row(x, 0, neighbors, perm[t]);
        Tensor2 h2, c2;
        if (t == 0)
            lstm_cell_zero(x, p, h2, c2);
        else
            lstm_cell(x, h, c, p, h2, c2);
        h = std::move(h2);
        c = std::move(c2);
    }
    return h;
}

Tensor2 sage_layer(const GraphBatch& batch, const Tensor2& h_prev, const LayerParams& lp,
                   Aggregator agg, std::uint64_t layer_seed, LayerTrace* tr) {
    const int n = batch.total_nodes();
    if (h_prev.rows != n) throw ValidationError("sage_layer: h_prev row count != node count");
    LayerTrace local;
    LayerTrace& T = tr ? *tr : local;
    if (agg == Aggregator::lstm) {
        if (!lp.has_lstm) throw ValidationError("sage_layer: LSTM aggregator parameters missing");
        if (lp.lstm.input_dim() != h_prev.cols)
            throw ValidationError("sage_layer: aggregator input width mismatch");
        lstm_packed_forward(batch, h_prev, lp.lstm, layer_seed, T);
    } else {
        mean_aggregate(batch, h_prev, T.agg);
    }
    T.concat_in = concat(h_prev, T.agg);
    return relu(affine(T.concat_in, lp.W, lp.b));
}

GcnAdjacency gcn_adjacency(const GraphBatch& batch) {
    const int n = batch.total_nodes();
    std::vector<std::pair<int, int>> und;
    und.reserve(batch.edges.size() * 2 + static_cast<size_t>(n));
    for (const auto& [a, b] : batch.edges) {
        if (a == b) continue;
        und.emplace_back(a, b);
        und.emplace_back(b, a);
    }
    for (int v = 0; v < n; ++v) und.emplace_back(v, v);
    std::sort(und.begin(), und.end());
    und.erase(std::unique(und.begin(), und.end()), und.end());

    GcnAdjacency adj;
    adj.offsets.assign(n + 1, 0);
    for (const auto& e : und) ++adj.offsets[e.first + 1];
    for (int v = 0; v < n; ++v) adj.offsets[v + 1] += adj.offsets[v];
    adj.nbr.resize(und.size());
    for (size_t i = 0; i < und.size(); ++i) adj.nbr[i] = und[i].second;  // sorted by row already
    std::vector<double> inv_sqrt_deg(n);
    for (int v = 0; v < n; ++v)
        inv_sqrt_deg[v] = 1.0 / std::sqrt(static_cast<double>(adj.offsets[v + 1] - adj.offsets[v]));
    adj.coef.resize(und.size());
    for (size_t i = 0; i < und.size(); ++i)
        adj.coef[i] = inv_sqrt_deg[und[i].first] * inv_sqrt_deg[und[i].second];
    return adj;
}

Tensor2 gcn_layer(const GraphBatch& batch, const Tensor2& h_prev, const LayerParams& lp,
                  const GcnAdjacency& adj, LayerTrace* tr) {
    const int n = batch.total_nodes();
    if (h_prev.rows != n) throw ValidationError("gcn_layer: h_prev row count != node count");
    if (static_cast<int>(adj.offsets.size()) != n + 1)
        throw ValidationError("gcn_layer: adjacency built for a different batch");
    Tensor2 mixed(n, h_prev.cols);
    for (int v = 0; v < n; ++v)
        for (int idx = adj.offsets[v]; idx < adj.offsets[v + 1]; ++idx)
            add_row(mixed, v, h_prev, adj.nbr[idx], adj.coef[idx]);
    Tensor2 out = relu(affine(mixed, lp.W, lp.b));
    if (tr) tr->mixed = std::move(mixed);
    return out;
}

Tensor2 readout(std::span<const Tensor2> per_layer, ReadoutMode mode, const GraphBatch& batch,
                std::vector<Tensor2>* z_layer_out, std::vector<std::vector<int>>* max_arg_out) {
    const int K = static_cast<int>(per_layer.size());
    if (K == 0) throw ValidationError("readout: no layer embeddings");
    const int G = batch.graph_count();
    const int n = batch.total_nodes();
    const int W = per_layer[0].cols;
    for (const Tensor2& h : per_layer) require_shape(h, n, W, "readout layer embeddings");
    for (int g = 0; g < G; ++g)
        if (batch.graph_sizes[g] < 1) throw ValidationError("readout: empty graph");

    const bool use_max = (mode == ReadoutMode::hierarchical_max);
    std::vector<Tensor2> zl(K);
    std::vector<std::vector<int>> am;
    if (use_max) am.resize(K);
    for (int k = 0; k < K; ++k) {
        Tensor2 P(G, W);
        if (use_max) am[k].assign(static_cast<size_t>(G) * W, -1);
        for (int g = 0; g < G; ++g) {
            const int start = batch.node_offset[g];
            const int size = batch.graph_sizes[g];
            double* p = P.row_ptr(g);
            if (use_max) {
                int* arg = am[k].data() + static_cast<size_t>(g) * W;
                const double* first = per_layer[k].row_ptr(start);
                for (int c = 0; c < W; ++c) {
                    p[c] = first[c];
                    arg[c] = start;
                }
                for (int v = start + 1; v < start + size; ++v) {
                    const double* row = per_layer[k].row_ptr(v);
                    for (int c = 0; c < W; ++c)
                        if (row[c] > p[c]) {  // ties keep the lowest node id
                            p[c] = row[c];
                            arg[c] = v;
                        }
                }
            } else {
                for (int v = start; v < start + size; ++v) {
                    const double* row = per_layer[k].row_ptr(v);
                    for (int c = 0; c < W; ++c) p[c] += row[c];
                }
                for (int c = 0; c < W; ++c) p[c] /= size;
            }
        }
        zl[k] = std::move(P);
    }

    Tensor2 z;
    if (mode == ReadoutMode::last_mean) {
        z = zl[K - 1];
    } else {
        z = zl[0];
        for (int k = 1; k < K; ++k) z.map() += zl[k].map();
    }
    if (z_layer_out) *z_layer_out = std::move(zl);
    if (max_arg_out) *max_arg_out = std::move(am);
    return z;
}

ForwardTrace model_forward(const GraphBatch& batch, const ModelState& state, Mode mode,
                           std::uint64_t seed) {
    const ModelConfig& cfg = state.config;
    cfg.validate();
    if (batch.graph_count() == 0) throw ValidationError("model_forward: empty batch");
    if (batch.node_features.cols != cfg.input_dim)
        throw ValidationError("model_forward: feature width " +
                              std::to_string(batch.node_features.cols) + " != input_dim " +
                              std::to_string(cfg.input_dim));

    ForwardTrace tr;
    tr.mode = mode;
    tr.seed = seed;
    tr.H.resize(cfg.K + 1);
    tr.H[0] = batch.node_features;
    tr.layers.resize(cfg.K);
    if (cfg.layer_kind == LayerKind::gcn) tr.adj = gcn_adjacency(batch);

    for (int k = 1; k <= cfg.K; ++k) {
        const LayerParams lp = layer_params(state, k);
        if (cfg.layer_kind == LayerKind::gcn) {
            tr.H[k] = gcn_layer(batch, tr.H[k - 1], lp, tr.adj, &tr.layers[k - 1]);
        } else {
            const std::uint64_t layer_seed = derive_seed(seed, 0xA66, static_cast<std::uint64_t>(k));
            tr.H[k] = sage_layer(batch, tr.H[k - 1], lp, cfg.aggregator, layer_seed,
                                 &tr.layers[k - 1]);
        }
    }

    tr.z_G = readout(std::span<const Tensor2>(tr.H.data() + 1, static_cast<size_t>(cfg.K)),
                     cfg.readout, batch, &tr.z_layer, &tr.max_arg);
    tr.z_D = dropout(tr.z_G, cfg.dropout_p, mode, derive_seed(seed, 0xD80), &tr.dropout_mask);
    tr.logits = affine(tr.z_D, state.params.at("head.W"), state.params.at("head.b"));
    return tr;
}

GradBundle model_backward(const GraphBatch& batch, const ModelState& state,
                          const ForwardTrace& tr, const Tensor2& dlogits) {
    const ModelConfig& cfg = state.config;
    const int G = batch.graph_count();
    require_shape(dlogits, G, cfg.classes, "model_backward dlogits");
    GradBundle gb;

    Tensor2 dzD, dWh, dbh;
    affine_backward(tr.z_D, state.params.at("head.W"), dlogits, dzD, dWh, dbh);
    gb.accumulate("head.W", dWh);
    gb.accumulate("head.b", dbh);
    Tensor2 dzG = dropout_backward(dzD, tr.dropout_mask);

    std::vector<Tensor2> dH(cfg.K + 1);
    for (int k = 0; k <= cfg.K; ++k) dH[k] = Tensor2::zeros_like(tr.H[k]);

    const int k_lo = (cfg.readout == ReadoutMode::last_mean) ? cfg.K : 1;
    for (int k = k_lo; k <= cfg.K; ++k) {
        if (cfg.readout == ReadoutMode::hierarchical_max) {
            const std::vector<int>& arg = tr.max_arg[k - 1];
            for (int g = 0; g < G; ++g)
                for (int c = 0; c < cfg.hidden; ++c)
                    dH[k](arg[static_cast<size_t>(g) * cfg.hidden + c], c) += dzG(g, c);
        } else {
            for (int g = 0; g < G; ++g) {
                const int start = batch.node_offset[g];
                const int size = batch.graph_sizes[g];
                for (int v = start; v < start + size; ++v) add_row(dH[k], v, dzG, g, 1.0 / size);
            }
        }
    }

    for (int k = cfg.K; k >= 1; --k) {
        const LayerParams lp = layer_params(state, k);
        const std::string base = "layer" + std::to_string(k) + ".";
        // H[k] is the ReLU output: H[k] > 0 exactly where the preactivation is
        Tensor2 dpre = relu_backward(tr.H[k], dH[k]);
        if (cfg.layer_kind == LayerKind::gcn) {
            Tensor2 dmix, dW, db;
            affine_backward(tr.layers[k - 1].mixed, lp.W, dpre, dmix, dW, db);
            gb.accumulate(base + "W", dW);
            gb.accumulate(base + "b", db);
            const GcnAdjacency& adj = tr.adj;
            for (int v = 0; v < batch.total_nodes(); ++v)
                for (int idx = adj.offsets[v]; idx < adj.offsets[v + 1]; ++idx)
                    add_row(dH[k - 1], v, dmix, adj.nbr[idx], adj.coef[idx]);
            continue;
        }
        Tensor2 dC, dW, db;
        affine_backward(tr.layers[k - 1].concat_in, lp.W, dpre, dC, dW, db);
        gb.accumulate(base + "W", dW);
        gb.accumulate(base + "b", db);
        Tensor2 dself, dagg;
        concat_backward(dC, tr.H[k - 1].cols, dself, dagg);
        dH[k - 1].map() += dself.map();
        if (cfg.aggregator == Aggregator::lstm) {
            LstmGrads lg = LstmGrads::zeros(lp.lstm.input_dim(), lp.lstm.hidden_dim());
            lstm_packed_backward(tr.layers[k - 1], lp.lstm, dagg, dH[k - 1], lg);
            for (int i = 0; i < 12; ++i)
                gb.accumulate(base + "agg." + lstm_suffix(i), lstm_grad_tensor(lg, i));
        } else {
            mean_aggregate_backward(batch, dagg, dH[k - 1]);
        }
    }
    return gb;
}

}  // namespace stegsage
