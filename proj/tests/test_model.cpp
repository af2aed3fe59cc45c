#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "stegsage/model.hpp"
#include "stegsage/nn.hpp"
#include "support/finite_diff.hpp"
#include "support/tmpdir.hpp"

using namespace stegsage;
using testing::max_rel_error;
using testing::numeric_grad;
using testing::random_tensor;

namespace {

StreamGraph chain_graph(const Tensor2& feats, bool undirected = false) {
    StreamGraph g;
    g.node_features = feats;
    g.undirected = undirected;
    for (int t = 0; t + 1 < feats.rows; ++t) {
        g.edges.emplace_back(t, t + 1);
        if (undirected) g.edges.emplace_back(t + 1, t);
    }
    return g;
}

GraphBatch random_chain_batch(const std::vector<int>& sizes, Rng& rng, bool undirected = false) {
    std::vector<StreamGraph> gs;
    for (size_t i = 0; i < sizes.size(); ++i) {
        StreamGraph g = chain_graph(random_tensor(sizes[i], 3, rng), undirected);
        g.label = static_cast<int>(i % 2);
        gs.push_back(std::move(g));
    }
    return batch_graphs(gs);
}

ModelConfig tiny_config(int variant) {
    ModelConfig c = variant_config(variant);
    c.hidden = 4;
    c.seed = 0x900D + variant;
    return c;
}

LstmParams random_lstm(int input, int hidden, Rng& rng) {
    LstmParams p = LstmParams::zeros(input, hidden);
    for (Tensor2* t : {&p.Wxi, &p.Wxf, &p.Wxg, &p.Wxo, &p.Whi, &p.Whf, &p.Whg, &p.Who, &p.bi,
                       &p.bf, &p.bg, &p.bo})
        for (double& v : t->data) v = rng.normal() * 0.5;
    return p;
}

}  // namespace

TEST_CASE("empty neighborhood aggregates to the zero vector") {
    Rng rng(1);
    LstmParams p = random_lstm(3, 5, rng);
    Tensor2 out = lstm_aggregate(Tensor2(0, 3), p, 42);
    CHECK(out.rows == 1);
    CHECK(out.cols == 5);
    CHECK(out == Tensor2(1, 5));
}

TEST_CASE("single neighbor is one lstm step from zero state") {
    Rng rng(2);
    LstmParams p = random_lstm(3, 4, rng);
    Tensor2 nb = random_tensor(1, 3, rng);

    Tensor2 got = lstm_aggregate(nb, p, 7);
    Tensor2 h, c;
    lstm_cell(nb, Tensor2(1, 4), Tensor2(1, 4), p, h, c);
    CHECK(max_rel_error(got, h) < 1e-15);
}

TEST_CASE("two neighbors replay as two hand-traced lstm steps in permuted order") {
    Rng rng(3);
    LstmParams p = random_lstm(3, 4, rng);
    Tensor2 nb = random_tensor(2, 3, rng);
    const std::uint64_t seed = 99;

    std::vector<int> perm = Rng(seed).permutation(2);
    Tensor2 x0(1, 3), x1(1, 3);
    for (int c = 0; c < 3; ++c) {
        x0(0, c) = nb(perm[0], c);
        x1(0, c) = nb(perm[1], c);
    }
    Tensor2 h1, c1, h2, c2;
    lstm_cell(x0, Tensor2(1, 4), Tensor2(1, 4), p, h1, c1);
    lstm_cell(x1, h1, c1, p, h2, c2);

    CHECK(max_rel_error(lstm_aggregate(nb, p, seed), h2) < 1e-15);
}

TEST_CASE("aggregation order matters, so the permutation seed does too") {
    Rng rng(4);
    LstmParams p = random_lstm(3, 4, rng);
    Tensor2 nb = random_tensor(2, 3, rng);
    // seeds whose permutations of {0,1} differ
    std::uint64_t s_id = 0, s_sw = 0;
    bool found_id = false, found_sw = false;
    for (std::uint64_t s = 0; s < 64 && !(found_id && found_sw); ++s) {
        if (Rng(s).permutation(2)[0] == 0) {
            s_id = s;
            found_id = true;
        } else {
            s_sw = s;
            found_sw = true;
        }
    }
    REQUIRE(found_id);
    REQUIRE(found_sw);
    Tensor2 a = lstm_aggregate(nb, p, s_id);
    Tensor2 b = lstm_aggregate(nb, p, s_sw);
    CHECK(max_rel_error(a, b) > 1e-6);
}

TEST_CASE("single-node graph: sage layer reduces to relu(W [h || 0] + b)") {
    ModelConfig cfg = tiny_config(1);
    ModelState st = init_model(cfg);
    Rng rng(5);
    StreamGraph g = chain_graph(random_tensor(1, 3, rng));
    GraphBatch batch = batch_graphs({g});

    LayerParams lp = layer_params(st, 1);
    Tensor2 out = sage_layer(batch, batch.node_features, lp, cfg.aggregator, 11);

    Tensor2 expect = relu(affine(concat(batch.node_features, Tensor2(1, cfg.hidden)), lp.W, lp.b));
    CHECK(max_rel_error(out, expect) < 1e-15);
}

TEST_CASE("first node of a directed chain aggregates the zero vector") {
    ModelConfig cfg = tiny_config(1);
    ModelState st = init_model(cfg);
    Rng rng(6);
    GraphBatch batch = batch_graphs({chain_graph(random_tensor(3, 3, rng))});

    LayerParams lp = layer_params(st, 1);
    Tensor2 out = sage_layer(batch, batch.node_features, lp, cfg.aggregator, 11);

    Tensor2 row0(1, 3);
    for (int c = 0; c < 3; ++c) row0(0, c) = batch.node_features(0, c);
    Tensor2 expect = relu(affine(concat(row0, Tensor2(1, cfg.hidden)), lp.W, lp.b));
    for (int c = 0; c < cfg.hidden; ++c) CHECK(out(0, c) == doctest::Approx(expect(0, c)));
}

TEST_CASE("sage layer with zero W and b maps everything to zero") {
    ModelConfig cfg = tiny_config(1);
    ModelState st = init_model(cfg);
    Rng rng(7);
    GraphBatch batch = batch_graphs({chain_graph(random_tensor(4, 3, rng))});
    LayerParams lp = layer_params(st, 1);
    lp.W.fill(0.0);
    lp.b.fill(0.0);
    Tensor2 out = sage_layer(batch, batch.node_features, lp, cfg.aggregator, 11);
    CHECK(out == Tensor2(4, cfg.hidden));
}

TEST_CASE("batched sage layer matches the per-node reference aggregation") {
    // undirected chains give interior nodes two in-neighbors, exercising
    // the packed multi-step path and the per-node permutations
    ModelConfig cfg = tiny_config(1);
    ModelState st = init_model(cfg);
    Rng rng(8);
    GraphBatch batch = random_chain_batch({5, 3, 4}, rng, true);
    LayerParams lp = layer_params(st, 1);
    const std::uint64_t layer_seed = 1234;

    Tensor2 out = sage_layer(batch, batch.node_features, lp, cfg.aggregator, layer_seed);

    std::vector<int> node_graph(batch.total_nodes());
    for (int g = 0; g < batch.graph_count(); ++g)
        for (int i = 0; i < batch.graph_sizes[g]; ++i) node_graph[batch.node_offset[g] + i] = g;
    for (int v = 0; v < batch.total_nodes(); ++v) {
        const int m = batch.in_offsets[v + 1] - batch.in_offsets[v];
        Tensor2 nbs(m, 3);
        for (int j = 0; j < m; ++j)
            for (int c = 0; c < 3; ++c)
                nbs(j, c) = batch.node_features(batch.in_list[batch.in_offsets[v] + j], c);
        const int local = v - batch.node_offset[node_graph[v]];
        Tensor2 agg = lstm_aggregate(nbs, lp.lstm, node_perm_seed(layer_seed, local));
        Tensor2 self(1, 3);
        for (int c = 0; c < 3; ++c) self(0, c) = batch.node_features(v, c);
        Tensor2 expect = relu(affine(concat(self, agg), lp.W, lp.b));
        for (int c = 0; c < cfg.hidden; ++c)
            CHECK(out(v, c) == doctest::Approx(expect(0, c)).epsilon(1e-12));
    }
}

TEST_CASE("mean aggregator averages the in-neighborhood") {
    ModelConfig cfg = tiny_config(3);
    ModelState st = init_model(cfg);
    Tensor2 feats{{1.0, 0.0, 2.0}, {3.0, 4.0, -1.0}, {5.0, -2.0, 0.5}};
    GraphBatch batch = batch_graphs({chain_graph(feats, true)});
    LayerParams lp = layer_params(st, 1);

    Tensor2 out = sage_layer(batch, batch.node_features, lp, cfg.aggregator, 0);

    // node 1 of the undirected 3-chain averages nodes 0 and 2
    Tensor2 self{{3.0, 4.0, -1.0}};
    Tensor2 agg{{3.0, -1.0, 1.25}};
    Tensor2 expect = relu(affine(concat(self, agg), lp.W, lp.b));
    for (int c = 0; c < cfg.hidden; ++c)
        CHECK(out(1, c) == doctest::Approx(expect(0, c)).epsilon(1e-12));
}

TEST_CASE("gcn on a single node reduces to relu of the affine map") {
    ModelConfig cfg = tiny_config(5);
    ModelState st = init_model(cfg);
    Rng rng(9);
    GraphBatch batch = batch_graphs({chain_graph(random_tensor(1, 3, rng))});
    GcnAdjacency adj = gcn_adjacency(batch);
    LayerParams lp = layer_params(st, 1);

    Tensor2 out = gcn_layer(batch, batch.node_features, lp, adj);
    Tensor2 expect = relu(affine(batch.node_features, lp.W, lp.b));
    CHECK(max_rel_error(out, expect) < 1e-15);
}

TEST_CASE("gcn on a two-node chain mixes self and neighbor with weight one half") {
    ModelConfig cfg = tiny_config(5);
    ModelState st = init_model(cfg);
    Tensor2 feats{{1.0, 2.0, 3.0}, {5.0, 7.0, 11.0}};
    GraphBatch batch = batch_graphs({chain_graph(feats)});
    GcnAdjacency adj = gcn_adjacency(batch);
    LayerParams lp = layer_params(st, 1);

    Tensor2 out = gcn_layer(batch, batch.node_features, lp, adj);

    Tensor2 mixed{{3.0, 4.5, 7.0}, {3.0, 4.5, 7.0}};  // (row0 + row1) / 2 for both
    Tensor2 expect = relu(affine(mixed, lp.W, lp.b));
    CHECK(max_rel_error(out, expect) < 1e-12);
}

TEST_CASE("gcn mixing equals the dense normalized-adjacency product") {
    Rng rng(10);
    GraphBatch batch = random_chain_batch({4, 3}, rng);
    for (double& v : batch.node_features.data) v = std::abs(v) + 0.1;  // keep relu inert
    GcnAdjacency adj = gcn_adjacency(batch);

    const int n = batch.total_nodes();
    LayerParams lp;
    lp.W = Tensor2(3, 3);
    for (int i = 0; i < 3; ++i) lp.W(i, i) = 1.0;
    lp.b = Tensor2(1, 3);

    // dense oracle: build A+I, normalize symmetrically, multiply
    Tensor2 A(n, n);
    for (const auto& [a, b] : batch.edges) {
        A(a, b) = 1.0;
        A(b, a) = 1.0;
    }
    for (int v = 0; v < n; ++v) A(v, v) = 1.0;
    std::vector<double> d(n, 0.0);
    for (int v = 0; v < n; ++v)
        for (int u = 0; u < n; ++u) d[v] += A(v, u);
    Tensor2 expect(n, 3);
    for (int v = 0; v < n; ++v)
        for (int u = 0; u < n; ++u)
            if (A(v, u) != 0.0)
                for (int c = 0; c < 3; ++c)
                    expect(v, c) += batch.node_features(u, c) / std::sqrt(d[v] * d[u]);

    Tensor2 out = gcn_layer(batch, batch.node_features, lp, adj);
    CHECK(max_rel_error(out, expect) < 1e-12);
}

TEST_CASE("readout of a single-node graph is the node embedding, summed over layers") {
    Rng rng(11);
    GraphBatch batch = batch_graphs({chain_graph(random_tensor(1, 3, rng))});
    std::vector<Tensor2> H = {random_tensor(1, 4, rng), random_tensor(1, 4, rng)};

    std::vector<Tensor2> zl;
    Tensor2 z = readout(H, ReadoutMode::hierarchical_mean, batch, &zl);
    for (int c = 0; c < 4; ++c) {
        CHECK(zl[0](0, c) == H[0](0, c));
        CHECK(zl[1](0, c) == H[1](0, c));
        CHECK(z(0, c) == doctest::Approx(H[0](0, c) + H[1](0, c)));
    }
}

TEST_CASE("with one layer, hierarchical and last-layer readouts coincide") {
    Rng rng(12);
    GraphBatch batch = random_chain_batch({3, 2}, rng);
    std::vector<Tensor2> H = {random_tensor(5, 4, rng)};
    Tensor2 a = readout(H, ReadoutMode::hierarchical_mean, batch);
    Tensor2 b = readout(H, ReadoutMode::last_mean, batch);
    CHECK(a == b);
}

TEST_CASE("readout is invariant to relabeling nodes within a graph") {
    Rng rng(13);
    GraphBatch batch = random_chain_batch({4, 3}, rng);
    std::vector<Tensor2> H = {random_tensor(7, 4, rng), random_tensor(7, 4, rng)};

    // reverse the first graph's rows; graph membership is unchanged
    std::vector<Tensor2> Hp = H;
    for (size_t k = 0; k < H.size(); ++k)
        for (int v = 0; v < 4; ++v)
            for (int c = 0; c < 4; ++c) Hp[k](v, c) = H[k](3 - v, c);

    for (ReadoutMode mode :
         {ReadoutMode::hierarchical_mean, ReadoutMode::hierarchical_max, ReadoutMode::last_mean}) {
        Tensor2 a = readout(H, mode, batch);
        Tensor2 b = readout(Hp, mode, batch);
        CHECK(max_rel_error(a, b) < 1e-15);
    }
}

TEST_CASE("max readout breaks ties toward the lowest node id") {
    GraphBatch batch = batch_graphs({chain_graph(Tensor2(3, 3))});
    Tensor2 h(3, 2);
    h(0, 0) = 5.0;
    h(1, 0) = 5.0;  // tie with node 0
    h(2, 1) = -1.0;
    std::vector<Tensor2> H = {h};
    std::vector<std::vector<int>> am;
    Tensor2 z = readout(H, ReadoutMode::hierarchical_max, batch, nullptr, &am);
    CHECK(z(0, 0) == 5.0);
    CHECK(am[0][0] == 0);
    CHECK(am[0][1] == 0);  // all-zero channel except node 2's -1: zero wins at node 0
}

TEST_CASE("eval forward is deterministic and the trace keeps the hierarchical identity") {
    ModelConfig cfg = tiny_config(1);
    ModelState st = init_model(cfg);
    Rng rng(14);
    GraphBatch batch = random_chain_batch({4, 3}, rng);

    ForwardTrace a = model_forward(batch, st, Mode::eval, 5);
    ForwardTrace b = model_forward(batch, st, Mode::eval, 5);
    CHECK(a.logits == b.logits);

    Tensor2 sum = Tensor2::zeros_like(a.z_G);
    for (const Tensor2& zk : a.z_layer) sum.map() += zk.map();
    CHECK(max_rel_error(a.z_G, sum) < 1e-15);
}

TEST_CASE("all-zero parameters give logits (0,0) and softmax one half") {
    ModelConfig cfg = tiny_config(1);
    ModelState st = init_model(cfg);
    for (Tensor2& t : st.params.params) t.fill(0.0);
    Rng rng(15);
    GraphBatch batch = random_chain_batch({3}, rng);

    ForwardTrace tr = model_forward(batch, st, Mode::eval, 0);
    CHECK(tr.logits == Tensor2(1, 2));
    Tensor2 probs = softmax(tr.logits);
    CHECK(probs(0, 0) == doctest::Approx(0.5));
    CHECK(probs(0, 1) == doctest::Approx(0.5));
}

TEST_CASE("a graph's logits do not depend on its batch") {
    for (int variant : {1, 2, 3, 4, 5, 7, 8}) {
        CAPTURE(variant);
        ModelConfig cfg = tiny_config(variant);
        cfg.hidden = 8;
        ModelState st = init_model(cfg);
        Rng rng(0xBA7C + variant);
        std::vector<StreamGraph> gs;
        for (int i = 0; i < 4; ++i)
            gs.push_back(chain_graph(random_tensor(2 + i, 3, rng), variant == 5));

        GraphBatch all = batch_graphs(gs);
        ForwardTrace batched = model_forward(all, st, Mode::eval, 3);
        for (int i = 0; i < 4; ++i) {
            GraphBatch solo = batch_graphs({gs[i]});
            ForwardTrace single = model_forward(solo, st, Mode::eval, 3);
            for (int c = 0; c < 2; ++c)
                CHECK(std::abs(batched.logits(i, c) - single.logits(0, c)) < 1e-9);
        }
    }
}

TEST_CASE("end-to-end parameter gradients match central differences for every variant") {
    for (int variant : {1, 2, 3, 4, 5, 7, 8}) {
        CAPTURE(variant);
        ModelConfig cfg = tiny_config(variant);
        ModelState st = init_model(cfg);
        Rng rng(0xF00 + variant);
        // zero-init biases leave some preactivations exactly on the relu
        // kink (zero rows propagate); nudge every parameter off it
        for (Tensor2& t : st.params.params)
            for (double& v : t.data) v += 0.05 + 0.1 * rng.uniform();
        GraphBatch batch = random_chain_batch({3, 4}, rng, variant == 5);
        const std::vector<int> labels = {0, 1};
        const std::uint64_t seed = 17;

        auto loss = [&] {
            ForwardTrace tr = model_forward(batch, st, Mode::train, seed);
            return softmax_cross_entropy(tr.logits, labels);
        };

        ForwardTrace tr = model_forward(batch, st, Mode::train, seed);
        Tensor2 dlogits;
        softmax_cross_entropy(tr.logits, labels, &dlogits);
        GradBundle gb = model_backward(batch, st, tr, dlogits);

        for (const std::string& name : st.params.names) {
            CAPTURE(name);
            const Tensor2* g = gb.find(name);
            Tensor2 analytic = g ? *g : Tensor2::zeros_like(st.params.at(name));
            Tensor2 numeric = numeric_grad(st.params.at(name), loss);
            CHECK(max_rel_error(analytic, numeric) < 1e-4);
        }
    }
}

TEST_CASE("train-mode gradients are reproducible for a fixed seed") {
    ModelConfig cfg = tiny_config(1);
    ModelState st = init_model(cfg);
    Rng rng(16);
    GraphBatch batch = random_chain_batch({4, 4}, rng);
    const std::vector<int> labels = {1, 0};

    auto run = [&] {
        ForwardTrace tr = model_forward(batch, st, Mode::train, 21);
        Tensor2 dlogits;
        softmax_cross_entropy(tr.logits, labels, &dlogits);
        return model_backward(batch, st, tr, dlogits);
    };
    GradBundle a = run();
    GradBundle b = run();
    for (const std::string& name : st.params.names) CHECK(*a.find(name) == *b.find(name));
}

TEST_CASE("parameter count: head contribution and monotonicity in depth") {
    ModelConfig cfg;  // defaults
    long long head = 0;
    for (const ParamShape& s : param_shapes(cfg))
        if (s.name.rfind("head.", 0) == 0) head += static_cast<long long>(s.rows) * s.cols;
    CHECK(head == 64 * 2 + 2);

    CHECK(param_count(variant_config(7)) < param_count(variant_config(1)));
    CHECK(param_count(variant_config(1)) < param_count(variant_config(8)));

    // default config, counted by hand:
    //   layer1: lstm 4*(64*3 + 64*64 + 64) = 17408, W 64*67 + 64 = 4352
    //   layers 2-3: lstm 4*(64*64 + 64*64 + 64) = 33024, W 64*128 + 64 = 8256 each
    //   head: 2*64 + 2 = 130
    CHECK(param_count(cfg) == 104450);
    CHECK(init_model(cfg).params.scalar_count() == 104450);
    MESSAGE("default config trainable scalars: " << param_count(cfg));
}

TEST_CASE("variant 6 and unknown variants are rejected") {
    CHECK_THROWS_AS(variant_config(6), ValidationError);
    CHECK_THROWS_AS(variant_config(0), ValidationError);
    CHECK_THROWS_AS(variant_config(9), ValidationError);
}

TEST_CASE("invalid configs are rejected") {
    ModelConfig c;
    c.K = 0;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = ModelConfig{};
    c.dropout_p = 1.0;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = ModelConfig{};
    c.hidden = 0;
    CHECK_THROWS_AS(c.validate(), ValidationError);
}

TEST_CASE("checkpoint round trip reproduces the forward bit-exactly") {
    testing::TmpDir dir("ckpt");
    ModelConfig cfg = tiny_config(1);
    ModelState st = init_model(cfg);
    Rng rng(18);
    GraphBatch batch = random_chain_batch({3, 5}, rng);
    ForwardTrace before = model_forward(batch, st, Mode::eval, 9);

    const std::string path = dir.file("model.ckpt");
    save_checkpoint(st, path);
    ModelState loaded = load_checkpoint(path);

    CHECK(loaded.config == cfg);
    ForwardTrace after = model_forward(batch, loaded, Mode::eval, 9);
    CHECK(before.logits == after.logits);
}

TEST_CASE("truncated checkpoints are refused") {
    testing::TmpDir dir("ckpt_trunc");
    ModelState st = init_model(tiny_config(1));
    const std::string path = dir.file("model.ckpt");
    save_checkpoint(st, path);

    namespace fs = std::filesystem;
    const auto full = fs::file_size(path);
    fs::resize_file(path, full - 16);
    CHECK_THROWS_AS(load_checkpoint(path), TruncatedFileError);
    fs::resize_file(path, 3);
    CHECK_THROWS_AS(load_checkpoint(path), TruncatedFileError);
}

TEST_CASE("checkpoints with a foreign magic or version are refused") {
    testing::TmpDir dir("ckpt_magic");
    ModelState st = init_model(tiny_config(1));
    const std::string path = dir.file("model.ckpt");
    save_checkpoint(st, path);

    {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.put('X');
    }
    CHECK_THROWS_AS(load_checkpoint(path), CorruptHeaderError);

    save_checkpoint(st, path);
    {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(4);
        f.put('\x7f');  // version
    }
    CHECK_THROWS_AS(load_checkpoint(path), CorruptHeaderError);
}

TEST_CASE("loading under a different requested config is an explicit mismatch") {
    testing::TmpDir dir("ckpt_mismatch");
    ModelState st = init_model(tiny_config(1));
    const std::string path = dir.file("model.ckpt");
    save_checkpoint(st, path);

    CHECK_NOTHROW(load_checkpoint(path, tiny_config(1)));
    CHECK_THROWS_AS(load_checkpoint(path, tiny_config(7)), ValidationError);
}

TEST_CASE("model rejects feature width different from input_dim") {
    ModelConfig cfg = tiny_config(1);
    cfg.input_dim = 5;
    ModelState st = init_model(cfg);
    Rng rng(4);
    GraphBatch batch = random_chain_batch({3}, rng);
    CHECK_THROWS_AS(model_forward(batch, st, Mode::eval, 0), ValidationError);
}
