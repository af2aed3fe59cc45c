// Acceptance suite for the full detection pipeline: ten gated checks,
// one [PASS]/[FAIL] line each, exit status = number of failures.
//
// Every tolerance and experiment knob is pinned in the `pin` namespace;
// nothing is read from the environment. The detection experiments run
// on synthetic corpora from the built-in cover source, so the whole
// suite is self-contained and deterministic on a fixed platform.

#include <unistd.h>

#include <array>
#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "stegsage/bench.hpp"
#include "stegsage/codebook.hpp"
#include "stegsage/common.hpp"
#include "stegsage/dataset.hpp"
#include "stegsage/graph.hpp"
#include "stegsage/metrics.hpp"
#include "stegsage/model.hpp"
#include "stegsage/nn.hpp"
#include "stegsage/qim.hpp"
#include "stegsage/qis.hpp"
#include "stegsage/stream.hpp"
#include "stegsage/train.hpp"
#include "support/finite_diff.hpp"

namespace fs = std::filesystem;
using namespace stegsage;
using testing::max_rel_error;
using testing::numeric_grad;
using testing::random_tensor;
using testing::random_tensor_off_kink;

namespace {

namespace pin {
// numeric gates
constexpr double kFdKernelTol = 1e-5;
constexpr double kFdModelTol = 1e-4;
constexpr double kBatchTol = 1e-9;
constexpr double kDeskFloorT100 = 0.95;
constexpr double kDeskFloorT1000 = 0.99;
constexpr double kTrendSlack = 0.02;    // two accuracy points
constexpr double kAblationGap = 0.02;   // full model must lead by this
constexpr double kR2Floor = 0.95;
constexpr double kLatencyBudgetT50 = 0.050;  // seconds per stream
constexpr double kDeskTimeBudget = 900.0;    // seconds, whole criterion 6
constexpr double kFastTimeBudget = 60.0;     // criteria 1 and 2

// shared synthetic cover source for every detection experiment
constexpr double kAr = 0.95;
constexpr double kNoise = 0.2;
constexpr double kSpread = 0.5;

// corpus and run seeds
constexpr std::uint64_t kSplitSeed = 1;
constexpr std::uint64_t kTrainSeed = 1;
constexpr std::uint64_t kDeskSeedT100 = 101;
constexpr std::uint64_t kDeskSeedT1000 = 102;
constexpr std::uint64_t kTrendSeed = 5;  // shared: the sweeps vary one knob at a time

// experiment sizes (streams are per label)
constexpr int kDeskStreams = 2000;
constexpr int kTrendStreams = 600;
constexpr int kDeskEpochsT100 = 15;
constexpr int kDeskEpochsT1000 = 5;
constexpr int kTrendEpochs = 6;
// the desk runs embed at one bit per codeword, the lightest touch; the
// trend/ablation sweeps use two so the 20% point separates from chance
// within the epoch budget
constexpr int kDeskNBits = 1;
constexpr int kTrendNBits = 2;
constexpr std::array<double, 5> kRates{0.2, 0.4, 0.6, 0.8, 1.0};

// latency measurement
constexpr int kBenchRuns = 200;
constexpr std::array<int, 3> kBenchLengths{50, 500, 1000};
constexpr std::uint64_t kBenchSeed = 3;
}  // namespace pin

struct Failure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string fmt(const char* f, ...) {
    va_list ap;
    va_start(ap, f);
    char buf[512];
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

double now_s() {
    using namespace std::chrono;
    return duration<double>(steady_clock::now().time_since_epoch()).count();
}

// Scratch directory that cleans up after itself.
struct Scratch {
    fs::path root;
    explicit Scratch(const std::string& tag) {
        root = fs::temp_directory_path() /
               fmt("stegsage_accept_%d_%s", static_cast<int>(::getpid()), tag.c_str());
        fs::create_directories(root);
    }
    ~Scratch() {
        std::error_code ec;
        fs::remove_all(root, ec);
    }
    fs::path dir(const std::string& name) const {
        fs::path p = root / name;
        fs::create_directories(p);
        return p;
    }
};

CoverSourceConfig pinned_source(std::uint64_t seed) {
    CoverSourceConfig src;
    src.ar = {pin::kAr, pin::kAr, pin::kAr};
    src.noise_scale = {pin::kNoise, pin::kNoise, pin::kNoise};
    src.anchor_spread = pin::kSpread;
    src.seed = seed;
    return src;
}

const CodebookSet& default_books() {
    static const CodebookSet books = gen_codebooks();
    return books;
}

void require(bool ok, const std::string& detail) {
    if (!ok) throw Failure(detail);
}

// ---------------------------------------------------------------- 1

void check_kernel(double err, const char* what) {
    require(err < pin::kFdKernelTol, fmt("%s gradient error %.3g >= %.3g", what, err,
                                         pin::kFdKernelTol));
}

double weighted_sum(const Tensor2& y, const Tensor2& w) {
    double s = 0.0;
    for (size_t k = 0; k < y.data.size(); ++k) s += y.data[k] * w.data[k];
    return s;
}

std::string c1_gradients() {
    const double t0 = now_s();
    Rng rng(0xACC1);

    {  // affine: dx, dW, db (W is [out x in])
        Tensor2 x = random_tensor(5, 4, rng), W = random_tensor(3, 4, rng);
        Tensor2 b = random_tensor(1, 3, rng), R = random_tensor(5, 3, rng);
        auto loss = [&] { return weighted_sum(affine(x, W, b), R); };
        Tensor2 dx, dW, db;
        affine_backward(x, W, R, dx, dW, db);
        check_kernel(max_rel_error(dx, numeric_grad(x, loss)), "affine/x");
        check_kernel(max_rel_error(dW, numeric_grad(W, loss)), "affine/W");
        check_kernel(max_rel_error(db, numeric_grad(b, loss)), "affine/b");
    }
    {  // relu, away from the kink
        Tensor2 x = random_tensor_off_kink(6, 5, rng), R = random_tensor(6, 5, rng);
        auto loss = [&] { return weighted_sum(relu(x), R); };
        check_kernel(max_rel_error(relu_backward(x, R), numeric_grad(x, loss)), "relu");
    }
    {  // concat
        Tensor2 a = random_tensor(4, 3, rng), b = random_tensor(4, 5, rng);
        Tensor2 R = random_tensor(4, 8, rng);
        auto loss = [&] { return weighted_sum(concat(a, b), R); };
        Tensor2 da, db;
        concat_backward(R, a.cols, da, db);
        check_kernel(max_rel_error(da, numeric_grad(a, loss)), "concat/a");
        check_kernel(max_rel_error(db, numeric_grad(b, loss)), "concat/b");
    }
    {  // one lstm cell, both the general and the zero-state first step
        const int in = 3, hid = 4, n = 5;
        LstmParams p = LstmParams::zeros(in, hid);
        std::vector<Tensor2*> mats = {&p.Wxi, &p.Wxf, &p.Wxg, &p.Wxo, &p.Whi, &p.Whf,
                                      &p.Whg, &p.Who, &p.bi,  &p.bf,  &p.bg,  &p.bo};
        for (Tensor2* t : mats)
            for (double& v : t->data) v = rng.normal() * 0.5;
        Tensor2 x = random_tensor(n, in, rng), h0 = random_tensor(n, hid, rng);
        Tensor2 c0 = random_tensor(n, hid, rng);
        Tensor2 Rh = random_tensor(n, hid, rng), Rc = random_tensor(n, hid, rng);

        for (int zero_state : {0, 1}) {
            auto run = [&](Tensor2& h_out, Tensor2& c_out, LstmCache* cache) {
                if (zero_state)
                    lstm_cell_zero(x, p, h_out, c_out, cache);
                else
                    lstm_cell(x, h0, c0, p, h_out, c_out, cache);
            };
            auto loss = [&] {
                Tensor2 h, c;
                run(h, c, nullptr);
                return weighted_sum(h, Rh) + weighted_sum(c, Rc);
            };
            Tensor2 h, c;
            LstmCache cache;
            run(h, c, &cache);
            LstmGrads g = LstmGrads::zeros(in, hid);
            Tensor2 dx, dh0, dc0;
            if (zero_state)
                lstm_cell_zero_backward(cache, p, Rh, Rc, dx, g);
            else
                lstm_cell_backward(cache, p, Rh, Rc, dx, dh0, dc0, g);

            const char* tag = zero_state ? "lstm0" : "lstm";
            check_kernel(max_rel_error(dx, numeric_grad(x, loss)), fmt("%s/x", tag).c_str());
            if (!zero_state) {
                check_kernel(max_rel_error(dh0, numeric_grad(h0, loss)), "lstm/h0");
                check_kernel(max_rel_error(dc0, numeric_grad(c0, loss)), "lstm/c0");
            }
            std::vector<Tensor2*> gmats = {&g.Wxi, &g.Wxf, &g.Wxg, &g.Wxo, &g.Whi, &g.Whf,
                                           &g.Whg, &g.Who, &g.bi,  &g.bf,  &g.bg,  &g.bo};
            for (size_t i = 0; i < mats.size(); ++i)
                check_kernel(max_rel_error(*gmats[i], numeric_grad(*mats[i], loss)),
                             fmt("%s/p%zu", tag, i).c_str());
        }
    }
    {  // dropout in train mode: piecewise linear in x for a fixed seed
        Tensor2 x = random_tensor(6, 4, rng), R = random_tensor(6, 4, rng);
        Tensor2 mask;
        auto loss = [&] { return weighted_sum(dropout(x, 0.4, Mode::train, 9, nullptr), R); };
        dropout(x, 0.4, Mode::train, 9, &mask);
        check_kernel(max_rel_error(dropout_backward(R, mask), numeric_grad(x, loss)), "dropout");
    }
    {  // softmax cross entropy at moderate and saturated logits
        for (double scale : {1.0, 30.0}) {
            Tensor2 logits = random_tensor(6, 2, rng, scale);
            const std::vector<int> labels = {0, 1, 1, 0, 1, 0};
            auto loss = [&] { return softmax_cross_entropy(logits, labels); };
            Tensor2 dlogits;
            softmax_cross_entropy(logits, labels, &dlogits);
            check_kernel(max_rel_error(dlogits, numeric_grad(logits, loss)), "softmax_xent");
        }
    }

    // end to end across every supported variant, on real tiny streams
    double worst = 0.0;
    for (int variant : {1, 2, 3, 4, 5, 7, 8}) {
        ModelConfig cfg = variant_config(variant);
        cfg.hidden = 4;
        cfg.seed = 0x900D + variant;
        ModelState st = init_model(cfg);
        Rng vr(0xF00 + variant);
        // zero-init biases sit exactly on the relu kink; nudge off it
        for (Tensor2& t : st.params.params)
            for (double& v : t.data) v += 0.05 + 0.1 * vr.uniform();

        std::vector<StreamGraph> gs;
        std::vector<int> labels;
        for (int i = 0; i < 2; ++i) {
            LatentSequence lat =
                gen_latent_sequence(pinned_source(vr.u64()), default_books(), 3 + i);
            StreamGraph g = build_graph(quantize_cover(lat, default_books()));
            g.label = i;
            labels.push_back(i);
            gs.push_back(std::move(g));
        }
        GraphBatch batch = batch_graphs(gs);
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
            const Tensor2* g = gb.find(name);
            Tensor2 analytic = g ? *g : Tensor2::zeros_like(st.params.at(name));
            const double err = max_rel_error(analytic, numeric_grad(st.params.at(name), loss));
            worst = std::max(worst, err);
            require(err < pin::kFdModelTol, fmt("variant %d param %s end-to-end error %.3g",
                                                variant, name.c_str(), err));
        }
    }

    const double elapsed = now_s() - t0;
    require(elapsed < pin::kFastTimeBudget, fmt("took %.1fs >= %.0fs", elapsed,
                                                pin::kFastTimeBudget));
    return fmt("kernels < %.0e, end-to-end worst %.2e across 7 variants, %.1fs",
               pin::kFdKernelTol, worst, elapsed);
}

// ---------------------------------------------------------------- 2

std::string c2_qim_roundtrip() {
    const double t0 = now_s();
    long long bits = 0;
    Rng rng(0xACC2);
    for (int n_bits : {1, 2}) {
        CodebookPartition part = cnv_partition(default_books(), n_bits, 40 + n_bits);
        for (double rate : pin::kRates) {
            for (int i = 0; i < 100; ++i) {
                LatentSequence lat =
                    gen_latent_sequence(pinned_source(rng.u64()), default_books(), 100);
                StegoStream s = qim_embed(lat, default_books(), part, rate, rng.u64());
                std::vector<std::uint8_t> got = qim_extract(s, part);
                require(got == s.plan.payload,
                        fmt("payload mismatch at rate %.1f n_bits %d stream %d", rate, n_bits, i));
                bits += static_cast<long long>(got.size());
            }
        }
    }
    const double elapsed = now_s() - t0;
    require(elapsed < pin::kFastTimeBudget, fmt("took %.1fs >= %.0fs", elapsed,
                                                pin::kFastTimeBudget));
    return fmt("1000 streams, %lld payload bits recovered exactly, %.1fs", bits, elapsed);
}

// ---------------------------------------------------------------- 3

std::string c3_partition_invariants() {
    Rng meta(0xACC3);
    int validated = 0, resampled = 0;
    while (validated < 100) {
        // even sizes and roomy dimensions keep most geometries balanceable
        const std::array<int, 3> sizes = {8 + 2 * static_cast<int>(meta.uniform_int(29)),
                                          8 + 2 * static_cast<int>(meta.uniform_int(13)),
                                          8 + 2 * static_cast<int>(meta.uniform_int(13))};
        const std::array<int, 3> dims = {4 + static_cast<int>(meta.uniform_int(6)),
                                         3 + static_cast<int>(meta.uniform_int(4)),
                                         3 + static_cast<int>(meta.uniform_int(4))};
        CodebookSet books = gen_codebooks(sizes, dims, meta.u64(), 0.02);
        try {
            for (int n_bits : {1, 2})
                cnv_partition(books, n_bits, meta.u64()).validate(books);
        } catch (const ValidationError& e) {
            // some geometries admit no balanced complementary split and
            // must say so; they don't count toward the hundred
            require(std::string(e.what()).find("cannot balance") != std::string::npos,
                    fmt("unexpected partition failure: %s", e.what()));
            ++resampled;
            require(resampled < 200, "resampled 200 codebooks without reaching 100 valid");
            continue;
        }
        ++validated;
    }
    return fmt("100 codebooks: disjoint, exhaustive, balanced, complementary (n_bits 1 and 2; "
               "%d unbalanceable geometries resampled)",
               resampled);
}

// ---------------------------------------------------------------- 4

std::string c4_batching_oracle() {
    Rng rng(0xACC4);
    const std::array<int, 6> variants = {1, 3, 4, 5, 7, 8};
    CodebookPartition part = cnv_partition(default_books(), 1, 9);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        ModelConfig cfg = variant_config(variants[trial % variants.size()]);
        cfg.hidden = 8;
        cfg.seed = rng.u64();
        ModelState st = init_model(cfg);

        const int n = 1 + static_cast<int>(rng.uniform_int(5));
        std::vector<StreamGraph> gs;
        for (int i = 0; i < n; ++i) {
            LatentSequence lat = gen_latent_sequence(pinned_source(rng.u64()), default_books(),
                                                     2 + static_cast<int>(rng.uniform_int(5)));
            QisMatrix q = rng.uniform() < 0.5
                              ? quantize_cover(lat, default_books())
                              : qim_embed(lat, default_books(), part, rng.uniform(), rng.u64()).qis;
            gs.push_back(build_graph(q));
        }
        const std::uint64_t seed = rng.u64();
        ForwardTrace batched = model_forward(batch_graphs(gs), st, Mode::eval, seed);
        for (int i = 0; i < n; ++i) {
            ForwardTrace single = model_forward(batch_graphs({gs[i]}), st, Mode::eval, seed);
            for (int c = 0; c < batched.logits.cols; ++c) {
                const double d = std::abs(batched.logits(i, c) - single.logits(0, c));
                worst = std::max(worst, d);
                require(d <= pin::kBatchTol, fmt("trial %d graph %d logit %d differs by %.3g",
                                                 trial, i, c, d));
            }
        }
    }
    return fmt("100 graph sets, batched vs single logits within %.0e (worst %.2e)",
               pin::kBatchTol, worst);
}

// ---------------------------------------------------------------- 5

std::string c5_metrics() {
    MetricsReport r = metrics_from_counts(1503, 1511, 72, 80);
    auto pct2 = [](double v) { return std::llround(v * 10000.0); };
    require(pct2(r.precision) == 9543, fmt("precision %.4f%% != 95.43%%", r.precision * 100));
    require(pct2(r.recall) == 9495, fmt("recall %.4f%% != 94.95%%", r.recall * 100));
    require(pct2(r.f1) == 9519, fmt("F1 %.4f%% != 95.19%%", r.f1 * 100));
    return fmt("TP=1503 TN=1511 FP=72 FN=80 -> precision %.2f%% recall %.2f%% F1 %.2f%%",
               r.precision * 100, r.recall * 100, r.f1 * 100);
}

// ------------------------------------------------------- 6, 7, 8, 10

struct ExperimentReport {
    double desk_t100 = 0.0;
    double desk_t1000 = 0.0;
    std::array<double, 5> rate_acc{};  // at T=1000, rates 20..100%
    double t50 = 0.0, t100 = 0.0;      // at 100% rate (T=1000 shares rate_acc[4])
    double ablation_full = 0.0, ablation_last = 0.0;  // variants 1 and 2, 20% rate
    bool operator==(const ExperimentReport&) const = default;
};

double trained_accuracy(const fs::path& dir, int streams, int T, double rate, int n_bits,
                        int variant, int epochs, std::uint64_t corpus_seed) {
    CorpusSpec spec;
    spec.covers = streams;
    spec.stegos = streams;
    spec.T = T;
    spec.rate = rate;
    spec.n_bits = n_bits;
    spec.source = pinned_source(0);  // per-stream seeds derive from spec.seed
    spec.seed = corpus_seed;
    std::vector<ManifestEntry> entries = generate_corpus(spec, default_books(), dir.string());
    DatasetManifest m = build_manifest(entries, pin::kSplitSeed);

    TrainConfig tc;
    tc.model = variant_config(variant);
    tc.epochs = epochs;
    tc.seed = pin::kTrainSeed;
    TrainResult r = train(m, tc);
    return evaluate(r.best_state, load_split(m, Split::test)).accuracy;
}

// One deterministic pass over every experiment criteria 6-8 score.
// Criterion 10 calls it twice and compares reports.
ExperimentReport run_experiments(const Scratch& scratch, double* desk_elapsed) {
    ExperimentReport rep;

    const double desk0 = now_s();
    rep.desk_t100 = trained_accuracy(scratch.dir("desk_t100"), pin::kDeskStreams, 100, 1.0,
                                     pin::kDeskNBits, 1, pin::kDeskEpochsT100, pin::kDeskSeedT100);
    rep.desk_t1000 =
        trained_accuracy(scratch.dir("desk_t1000"), pin::kDeskStreams, 1000, 1.0, pin::kDeskNBits,
                         1, pin::kDeskEpochsT1000, pin::kDeskSeedT1000);
    if (desk_elapsed) *desk_elapsed = now_s() - desk0;

    for (size_t i = 0; i < pin::kRates.size(); ++i)
        rep.rate_acc[i] =
            trained_accuracy(scratch.dir(fmt("rate_%02d", static_cast<int>(pin::kRates[i] * 100))),
                             pin::kTrendStreams, 1000, pin::kRates[i], pin::kTrendNBits, 1,
                             pin::kTrendEpochs, pin::kTrendSeed);
    rep.t50 = trained_accuracy(scratch.dir("t50"), pin::kTrendStreams, 50, 1.0, pin::kTrendNBits,
                               1, pin::kTrendEpochs, pin::kTrendSeed);
    rep.t100 = trained_accuracy(scratch.dir("t100"), pin::kTrendStreams, 100, 1.0,
                                pin::kTrendNBits, 1, pin::kTrendEpochs, pin::kTrendSeed);

    rep.ablation_full = rep.rate_acc[0];
    rep.ablation_last =
        trained_accuracy(scratch.dir("ablation_v2"), pin::kTrendStreams, 1000, pin::kRates[0],
                         pin::kTrendNBits, 2, pin::kTrendEpochs, pin::kTrendSeed);
    return rep;
}

std::optional<ExperimentReport> g_report;
double g_desk_elapsed = 0.0;

const ExperimentReport& experiments() {
    if (!g_report) {
        Scratch scratch("experiments");
        g_report = run_experiments(scratch, &g_desk_elapsed);
    }
    return *g_report;
}

std::string c6_desk_scale() {
    const ExperimentReport& r = experiments();
    require(r.desk_t100 >= pin::kDeskFloorT100,
            fmt("T=100 accuracy %.2f%% < %.0f%%", r.desk_t100 * 100, pin::kDeskFloorT100 * 100));
    require(r.desk_t1000 >= pin::kDeskFloorT1000,
            fmt("T=1000 accuracy %.2f%% < %.0f%%", r.desk_t1000 * 100,
                pin::kDeskFloorT1000 * 100));
    require(g_desk_elapsed <= pin::kDeskTimeBudget,
            fmt("desk experiments took %.0fs > %.0fs", g_desk_elapsed, pin::kDeskTimeBudget));
    return fmt("%d+%d streams, 100%% rate: %.2f%% at T=100, %.2f%% at T=1000 (floors %.0f/%.0f%%),"
               " %.0fs",
               pin::kDeskStreams, pin::kDeskStreams, r.desk_t100 * 100, r.desk_t1000 * 100,
               pin::kDeskFloorT100 * 100, pin::kDeskFloorT1000 * 100, g_desk_elapsed);
}

std::string format_series(const double* v, size_t n) {
    std::string s;
    for (size_t i = 0; i < n; ++i) s += fmt(i ? " %.1f" : "%.1f", v[i] * 100);
    return s;
}

std::string c7_trends() {
    const ExperimentReport& r = experiments();
    for (size_t i = 1; i < r.rate_acc.size(); ++i)
        require(r.rate_acc[i] >= r.rate_acc[i - 1] - pin::kTrendSlack,
                fmt("accuracy drops %.2f%% -> %.2f%% from rate %.0f%% to %.0f%%",
                    r.rate_acc[i - 1] * 100, r.rate_acc[i] * 100, pin::kRates[i - 1] * 100,
                    pin::kRates[i] * 100));
    const std::array<double, 3> by_T = {r.t50, r.t100, r.rate_acc[4]};
    for (size_t i = 1; i < by_T.size(); ++i)
        require(by_T[i] >= by_T[i - 1] - pin::kTrendSlack,
                fmt("accuracy drops %.2f%% -> %.2f%% between T points %zu and %zu",
                    by_T[i - 1] * 100, by_T[i] * 100, i - 1, i));
    return fmt("rate 20..100%%: [%s]; T 50/100/1000: [%s] (slack %.0f pts)",
               format_series(r.rate_acc.data(), r.rate_acc.size()).c_str(),
               format_series(by_T.data(), by_T.size()).c_str(), pin::kTrendSlack * 100);
}

std::string c8_ablation() {
    const ExperimentReport& r = experiments();
    require(r.ablation_full - r.ablation_last >= pin::kAblationGap,
            fmt("full %.2f%% vs last-pool-only %.2f%%: gap %.2f pts < %.0f",
                r.ablation_full * 100, r.ablation_last * 100,
                (r.ablation_full - r.ablation_last) * 100, pin::kAblationGap * 100));
    return fmt("20%% rate, T=1000: full model %.2f%%, last-pool-only %.2f%% (gap %.2f pts)",
               r.ablation_full * 100, r.ablation_last * 100,
               (r.ablation_full - r.ablation_last) * 100);
}

// ---------------------------------------------------------------- 9

std::string c9_latency() {
    ModelState st = init_model(ModelConfig{});
    std::vector<int> lengths(pin::kBenchLengths.begin(), pin::kBenchLengths.end());
    LatencyReport r = bench_detection(st, default_books(), lengths, pin::kBenchRuns,
                                      pin::kBenchSeed);
    for (size_t i = 1; i < r.timings.size(); ++i)
        require(r.timings[i].mean_s >= r.timings[i - 1].mean_s,
                fmt("mean time decreases from T=%d to T=%d", r.timings[i - 1].T,
                    r.timings[i].T));
    require(r.fit.r2 >= pin::kR2Floor, fmt("R^2 %.4f < %.2f", r.fit.r2, pin::kR2Floor));
    require(r.timings[0].mean_s < pin::kLatencyBudgetT50,
            fmt("T=50 mean %.1fms >= %.0fms", r.timings[0].mean_s * 1e3,
                pin::kLatencyBudgetT50 * 1e3));
    return fmt("%d runs: means %.2f/%.2f/%.2f ms, fit DT = %.6f*L_s + %.6f (R^2 %.4f); "
               "reference DT = 0.003*L_s + 0.0145",
               pin::kBenchRuns, r.timings[0].mean_s * 1e3, r.timings[1].mean_s * 1e3,
               r.timings[2].mean_s * 1e3, r.fit.slope, r.fit.intercept, r.fit.r2);
}

// --------------------------------------------------------------- 10

std::string c10_reproducibility() {
    const ExperimentReport& first = experiments();
    Scratch scratch("experiments_rerun");
    ExperimentReport second = run_experiments(scratch, nullptr);
    require(first == second, "reruns of criteria 6-8 with identical seeds disagree");
    return fmt("criteria 6-8 rerun with identical seeds: reports identical "
               "(T=100 %.2f%%, T=1000 %.2f%%, 10 experiment scores)",
               second.desk_t100 * 100, second.desk_t1000 * 100);
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        std::function<std::string()> body;
    };
    const std::vector<Criterion> criteria = {
        {1, "gradient correctness", c1_gradients},
        {2, "qim round trip", c2_qim_roundtrip},
        {3, "partition invariants", c3_partition_invariants},
        {4, "batching oracle", c4_batching_oracle},
        {5, "metrics reproduction", c5_metrics},
        {6, "desk-scale detection", c6_desk_scale},
        {7, "monotonic trends", c7_trends},
        {8, "ablation direction", c8_ablation},
        {9, "latency linearity", c9_latency},
        {10, "reproducibility", c10_reproducibility},
    };

    int failures = 0;
    for (const Criterion& c : criteria) {
        const double t0 = now_s();
        std::string verdict, detail;
        try {
            detail = c.body();
            verdict = "[PASS]";
        } catch (const std::exception& e) {
            detail = e.what();
            verdict = "[FAIL]";
            ++failures;
        }
        std::printf("%s %2d %-22s %s (%.1fs)\n", verdict.c_str(), c.id, c.name, detail.c_str(),
                    now_s() - t0);
        std::fflush(stdout);
    }
    if (failures) std::printf("%d of 10 criteria failed\n", failures);
    return failures;
}
