#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "stegsage/bench.hpp"
#include "stegsage/common.hpp"
#include "stegsage/correlation.hpp"
#include "stegsage/dataset.hpp"
#include "stegsage/metrics.hpp"
#include "stegsage/model.hpp"
#include "stegsage/nn.hpp"
#include "stegsage/train.hpp"

using namespace stegsage;

namespace {

struct SourceFlags {
    double ar = 0.9;
    double noise = 0.25;
    double spread = 0.5;

    CoverSourceConfig config() const {
        CoverSourceConfig c;
        c.ar = {ar, ar, ar};
        c.noise_scale = {noise, noise, noise};
        c.anchor_spread = spread;
        return c;
    }
};

void add_source_flags(CLI::App* cmd, SourceFlags& f) {
    cmd->add_option("--ar", f.ar, "Temporal correlation of the latent source");
    cmd->add_option("--noise", f.noise, "Innovation noise scale of the latent source");
    cmd->add_option("--spread", f.spread, "Anchor spread of the latent source");
}

// Average total-variation distance from independence across position
// pairs, split by lag; the temporal half is what detection feeds on.
void print_corpus_report(const std::vector<ManifestEntry>& entries) {
    double tv[2][2] = {{0, 0}, {0, 0}};        // [label][lag]
    long long pairs[2][2] = {{0, 0}, {0, 0}};  // averaged pair counts
    long long sampled[2] = {0, 0};
    for (const ManifestEntry& e : entries) {
        if (sampled[e.label] >= 5) continue;
        ++sampled[e.label];
        QisMatrix q = read_qis(e.path);
        CorrelationReport rep = correlation_diagnostic(q, {0, 1});
        for (const PairCorrelation& p : rep.pairs) {
            if (p.lag == 0 && p.i == p.k) continue;  // same-position, same-frame is trivially dependent
            tv[e.label][p.lag] += p.tv;
            ++pairs[e.label][p.lag];
        }
    }
    std::printf("corpus report (up to 5 streams per label)\n");
    for (int label = 0; label < 2; ++label) {
        if (sampled[label] == 0) continue;
        std::printf("  %s: mean TV from independence, lag 0 (cross-position) %.4f, lag 1 %.4f\n",
                    label ? "stego" : "cover",
                    pairs[label][0] ? tv[label][0] / pairs[label][0] : 0.0,
                    pairs[label][1] ? tv[label][1] / pairs[label][1] : 0.0);
    }
}

void print_index_stats(const std::vector<ManifestEntry>& entries) {
    long long covers = 0, stegos = 0;
    for (const ManifestEntry& e : entries) (e.label ? stegos : covers) += 1;
    std::printf("wrote %lld cover + %lld stego streams\n", covers, stegos);
}

ModelState model_from_checkpoint_or_default(const std::string& path) {
    if (!path.empty()) return load_checkpoint(path);
    return init_model(ModelConfig{});
}

int run(int argc, char** argv) {
    CLI::App app{"VoIP quantization-index steganalysis toolkit"};
    app.require_subcommand(1);

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "Generate a labeled cover+stego corpus");
    int gen_streams = 100, gen_frames = 100, gen_nbits = 1;
    double gen_rate = 1.0;
    std::uint64_t gen_seed = 0, gen_book_seed = kDefaultCodebookSeed;
    std::string gen_out;
    bool gen_report = false;
    SourceFlags gen_src;
    gen->add_option("--streams", gen_streams, "Streams per label")->check(CLI::PositiveNumber);
    gen->add_option("--frames", gen_frames, "Frames per stream")->check(CLI::PositiveNumber);
    gen->add_option("--rate", gen_rate, "Embedding rate of the stego half")
        ->check(CLI::Range(0.0, 1.0));
    gen->add_option("--nbits", gen_nbits, "Bits per codeword position")->check(CLI::Range(1, 2));
    gen->add_option("--seed", gen_seed, "Corpus seed");
    gen->add_option("--codebook-seed", gen_book_seed, "Codebook generation seed");
    gen->add_option("--out", gen_out, "Output directory")->required();
    gen->add_flag("--report", gen_report, "Print index stats and a correlation summary");
    add_source_flags(gen, gen_src);
    gen->callback([&] {
        CorpusSpec spec;
        spec.covers = gen_streams;
        spec.stegos = gen_streams;
        spec.T = gen_frames;
        spec.rate = gen_rate;
        spec.n_bits = gen_nbits;
        spec.seed = gen_seed;
        spec.source = gen_src.config();
        CodebookSet books = gen_codebooks(kDefaultCodebookSizes, kDefaultCodebookDims, gen_book_seed);
        std::vector<ManifestEntry> entries = generate_corpus(spec, books, gen_out);
        write_codebooks(books, (std::filesystem::path(gen_out) / "codebooks.bin").string());
        print_index_stats(entries);
        if (gen_report) print_corpus_report(entries);
    });

    // embed
    auto* emb = app.add_subcommand("embed", "Generate a stego-only corpus from fresh latents");
    int emb_streams = 100, emb_frames = 100, emb_nbits = 1;
    double emb_rate = 1.0;
    std::uint64_t emb_seed = 0, emb_book_seed = kDefaultCodebookSeed;
    std::string emb_out;
    SourceFlags emb_src;
    emb->add_option("--streams", emb_streams, "Stego stream count")->check(CLI::PositiveNumber);
    emb->add_option("--frames", emb_frames, "Frames per stream")->check(CLI::PositiveNumber);
    emb->add_option("--rate", emb_rate, "Embedding rate")->check(CLI::Range(0.0, 1.0));
    emb->add_option("--nbits", emb_nbits, "Bits per codeword position")->check(CLI::Range(1, 2));
    emb->add_option("--seed", emb_seed, "Corpus seed");
    emb->add_option("--codebook-seed", emb_book_seed, "Codebook generation seed");
    emb->add_option("--out", emb_out, "Output directory")->required();
    add_source_flags(emb, emb_src);
    emb->callback([&] {
        CorpusSpec spec;
        spec.covers = 0;
        spec.stegos = emb_streams;
        spec.T = emb_frames;
        spec.rate = emb_rate;
        spec.n_bits = emb_nbits;
        spec.seed = emb_seed;
        spec.source = emb_src.config();
        CodebookSet books = gen_codebooks(kDefaultCodebookSizes, kDefaultCodebookDims, emb_book_seed);
        std::vector<ManifestEntry> entries = generate_corpus(spec, books, emb_out);
        print_index_stats(entries);
    });

    // split
    auto* spl = app.add_subcommand("split", "Build a train/val/test manifest over a corpus");
    std::string spl_corpus, spl_out;
    std::uint64_t spl_seed = 0;
    spl->add_option("--corpus", spl_corpus, "Corpus directory with index.tsv")->required();
    spl->add_option("--seed", spl_seed, "Split seed");
    spl->add_option("--out", spl_out, "Manifest path to write")->required();
    spl->callback([&] {
        DatasetManifest m = build_manifest(spl_corpus, spl_seed);
        write_manifest(m, spl_out);
        std::printf("manifest with %zu entries -> %s\n", m.entries.size(), spl_out.c_str());
    });

    // train
    auto* trn = app.add_subcommand("train", "Train a detector over a manifest");
    std::string trn_manifest, trn_config, trn_out, trn_out_final, trn_history;
    int trn_epochs = -1;
    std::int64_t trn_seed = -1;
    trn->add_option("--manifest", trn_manifest, "Manifest path")->required();
    trn->add_option("--config", trn_config, "key=value training config");
    trn->add_option("--out-checkpoint", trn_out, "Best-validation checkpoint path")->required();
    trn->add_option("--out-final", trn_out_final, "Final-epoch checkpoint path");
    trn->add_option("--history", trn_history, "Per-epoch TSV path");
    trn->add_option("--epochs", trn_epochs, "Override the config's epoch count");
    trn->add_option("--seed", trn_seed, "Override the config's training seed");
    trn->callback([&] {
        TrainConfig tc = trn_config.empty() ? TrainConfig{} : parse_train_config(trn_config);
        if (trn_epochs >= 0) tc.epochs = trn_epochs;
        if (trn_seed >= 0) tc.seed = static_cast<std::uint64_t>(trn_seed);
        DatasetManifest m = read_manifest(trn_manifest);
        TrainResult res = train(m, tc, [](const EpochStats& e) {
            std::printf("epoch %d  train_loss %.6f  val_accuracy %.2f%%\n", e.epoch, e.train_loss,
                        100.0 * e.val_accuracy);
            std::fflush(stdout);
        });
        save_checkpoint(res.best_state, trn_out);
        if (!trn_out_final.empty()) save_checkpoint(res.final_state, trn_out_final);
        if (!trn_history.empty()) {
            std::ofstream h(trn_history);
            if (!h) throw IoError("cannot open for writing: " + trn_history);
            for (const EpochStats& e : res.history)
                h << e.epoch << '\t' << e.train_loss << '\t' << e.val_accuracy << '\n';
        }
        if (res.best_epoch >= 0)
            std::printf("best epoch %d  val_accuracy %.2f%%\n", res.best_epoch,
                        100.0 * res.history[res.best_epoch].val_accuracy);
        std::printf("checkpoint -> %s\n", trn_out.c_str());
    });

    // eval
    auto* evl = app.add_subcommand("eval", "Evaluate a checkpoint on one split");
    std::string evl_ckpt, evl_manifest, evl_split = "test";
    evl->add_option("--checkpoint", evl_ckpt, "Checkpoint path")->required();
    evl->add_option("--manifest", evl_manifest, "Manifest path")->required();
    evl->add_option("--split", evl_split, "train, val, or test");
    evl->callback([&] {
        ModelState st = load_checkpoint(evl_ckpt);
        DatasetManifest m = read_manifest(evl_manifest);
        MetricsReport r = evaluate(st, load_split(m, split_from_name(evl_split)));
        std::fputs(format_report(r).c_str(), stdout);
    });

    // detect
    auto* det = app.add_subcommand("detect", "Classify one quantization-index stream");
    std::string det_ckpt, det_qis;
    det->add_option("--checkpoint", det_ckpt, "Checkpoint path")->required();
    det->add_option("--qis", det_qis, "Stream file to classify")->required();
    det->callback([&] {
        ModelState st = load_checkpoint(det_ckpt);
        StreamGraph g = build_graph(read_qis(det_qis));
        ForwardTrace tr = model_forward(batch_graphs({g}), st, Mode::eval, 0);
        Tensor2 probs = softmax(tr.logits);
        const int pred = decide(tr.logits(0, 0), tr.logits(0, 1));
        std::printf("%s\tp_stego=%.6f\n", pred ? "stego" : "cover", probs(0, 1));
    });

    // bench
    auto* ben = app.add_subcommand("bench", "Measure detection latency across sample lengths");
    std::vector<int> ben_lengths = {50, 500, 1000};
    int ben_runs = 200;
    std::uint64_t ben_seed = 0, ben_book_seed = kDefaultCodebookSeed;
    std::string ben_ckpt;
    ben->add_option("--lengths", ben_lengths, "Frame counts to time");
    ben->add_option("--runs", ben_runs, "Runs per length (>= 30)");
    ben->add_option("--seed", ben_seed, "Stream generation seed");
    ben->add_option("--codebook-seed", ben_book_seed, "Codebook generation seed");
    ben->add_option("--checkpoint", ben_ckpt, "Checkpoint path (default-initialized model if absent)");
    ben->callback([&] {
        ModelState st = model_from_checkpoint_or_default(ben_ckpt);
        CodebookSet books = gen_codebooks(kDefaultCodebookSizes, kDefaultCodebookDims, ben_book_seed);
        LatencyReport r = bench_detection(st, books, ben_lengths, ben_runs, ben_seed);
        std::fputs(format_latency(r).c_str(), stdout);
    });

    // export-embeddings
    auto* exp = app.add_subcommand("export-embeddings", "Write per-graph embeddings as TSV");
    std::string exp_ckpt, exp_manifest, exp_split = "test", exp_out;
    exp->add_option("--checkpoint", exp_ckpt, "Checkpoint path")->required();
    exp->add_option("--manifest", exp_manifest, "Manifest path")->required();
    exp->add_option("--split", exp_split, "train, val, or test");
    exp->add_option("--out", exp_out, "Output TSV path")->required();
    exp->callback([&] {
        ModelState st = load_checkpoint(exp_ckpt);
        DatasetManifest m = read_manifest(exp_manifest);
        std::vector<StreamGraph> graphs = load_split(m, split_from_name(exp_split));
        export_embeddings(st, graphs, exp_out);
        std::printf("%zu embeddings -> %s\n", graphs.size(), exp_out.c_str());
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitValidation;
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitValidation;
    } catch (const IoError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitIo;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "unexpected error: %s\n", e.what());
        return 1;
    }
}
