// Path-level python surface: every function takes files or scalars and
// returns plain dicts, so the extension stays a thin shim over the C++
// pipeline instead of a second API to maintain.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <filesystem>
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
#include "stegsage/qis.hpp"
#include "stegsage/stream.hpp"
#include "stegsage/train.hpp"

namespace py = pybind11;
using namespace stegsage;

namespace {

CoverSourceConfig source_config(double ar, double noise, double spread) {
    CoverSourceConfig src;
    src.ar = {ar, ar, ar};
    src.noise_scale = {noise, noise, noise};
    src.anchor_spread = spread;
    return src;
}

py::dict metrics_dict(const MetricsReport& r) {
    py::dict d;
    d["tp"] = r.tp;
    d["tn"] = r.tn;
    d["fp"] = r.fp;
    d["fn"] = r.fn;
    d["accuracy"] = r.accuracy;
    d["precision"] = r.precision;
    d["recall"] = r.recall;
    d["f1"] = r.f1;
    d["accuracy_degenerate"] = r.accuracy_degenerate;
    d["precision_degenerate"] = r.precision_degenerate;
    d["recall_degenerate"] = r.recall_degenerate;
    d["f1_degenerate"] = r.f1_degenerate;
    return d;
}

ModelConfig config_for(int variant, int hidden, std::uint64_t seed) {
    ModelConfig mc = variant_config(variant);
    if (hidden > 0) mc.hidden = hidden;
    mc.seed = seed;
    mc.validate();
    return mc;
}

int py_gen_corpus(const std::string& out_dir, int covers, int stegos, int frames, double rate,
                  int n_bits, std::uint64_t seed, double ar, double noise, double spread,
                  std::uint64_t codebook_seed) {
    CorpusSpec spec;
    spec.covers = covers;
    spec.stegos = stegos;
    spec.T = frames;
    spec.rate = rate;
    spec.n_bits = n_bits;
    spec.seed = seed;
    spec.source = source_config(ar, noise, spread);
    CodebookSet books = gen_codebooks(kDefaultCodebookSizes, kDefaultCodebookDims, codebook_seed);
    std::vector<ManifestEntry> entries = generate_corpus(spec, books, out_dir);
    write_codebooks(books, (std::filesystem::path(out_dir) / "codebooks.bin").string());
    return static_cast<int>(entries.size());
}

py::dict py_build_manifest(const std::string& corpus_dir, std::uint64_t split_seed,
                           const std::string& out_path) {
    DatasetManifest m = build_manifest(corpus_dir, split_seed);
    write_manifest(m, out_path);
    py::dict d;
    for (Split s : {Split::train, Split::val, Split::test})
        d[py::str(split_name(s))] = m.split_entries(s).size();
    return d;
}

py::dict py_train(const std::string& manifest_path, const std::string& out_checkpoint,
                  const std::string& config_text, int epochs, long long seed,
                  const std::string& out_final) {
    TrainConfig cfg =
        config_text.empty() ? TrainConfig{} : parse_train_config_text(config_text);
    if (epochs >= 0) cfg.epochs = epochs;
    if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
    cfg.validate();
    DatasetManifest m = read_manifest(manifest_path);
    TrainResult r = train(m, cfg);
    save_checkpoint(r.best_state, out_checkpoint);
    if (!out_final.empty()) save_checkpoint(r.final_state, out_final);
    py::list history;
    for (const EpochStats& e : r.history) {
        py::dict row;
        row["epoch"] = e.epoch;
        row["train_loss"] = e.train_loss;
        row["val_accuracy"] = e.val_accuracy;
        history.append(row);
    }
    py::dict d;
    d["best_epoch"] = r.best_epoch;
    d["best_val_accuracy"] =
        r.best_epoch >= 0 ? r.history[static_cast<std::size_t>(r.best_epoch)].val_accuracy : 0.0;
    d["history"] = history;
    return d;
}

py::dict py_evaluate(const std::string& checkpoint_path, const std::string& manifest_path,
                     const std::string& split) {
    ModelState st = load_checkpoint(checkpoint_path);
    DatasetManifest m = read_manifest(manifest_path);
    return metrics_dict(evaluate(st, load_split(m, split_from_name(split))));
}

py::dict py_detect(const std::string& checkpoint_path, const std::string& qis_path) {
    ModelState st = load_checkpoint(checkpoint_path);
    QisMatrix q = read_qis(qis_path);
    StreamGraph g = build_graph(q);
    ForwardTrace tr = model_forward(batch_graphs({g}), st, Mode::eval, 0);
    Tensor2 probs = softmax(tr.logits);
    int label = decide(tr.logits(0, 0), tr.logits(0, 1));
    py::dict d;
    d["label"] = label == 1 ? "stego" : "cover";
    d["p_stego"] = probs(0, 1);
    return d;
}

int py_export_embeddings(const std::string& checkpoint_path, const std::string& manifest_path,
                         const std::string& split, const std::string& out_path) {
    ModelState st = load_checkpoint(checkpoint_path);
    DatasetManifest m = read_manifest(manifest_path);
    std::vector<StreamGraph> graphs = load_split(m, split_from_name(split));
    export_embeddings(st, graphs, out_path);
    return static_cast<int>(graphs.size());
}

void py_init_checkpoint(const std::string& path, int variant, int hidden, std::uint64_t seed) {
    save_checkpoint(init_model(config_for(variant, hidden, seed)), path);
}

py::dict py_bench(const std::vector<int>& lengths, int runs, std::uint64_t seed,
                  const std::string& checkpoint_path, std::uint64_t codebook_seed) {
    ModelState st = checkpoint_path.empty() ? init_model(ModelConfig{})
                                            : load_checkpoint(checkpoint_path);
    CodebookSet books = gen_codebooks(kDefaultCodebookSizes, kDefaultCodebookDims, codebook_seed);
    LatencyReport r = bench_detection(st, books, lengths, runs, seed);
    py::list timings;
    for (const LengthTiming& t : r.timings) {
        py::dict row;
        row["T"] = t.T;
        row["length_s"] = t.length_s;
        row["mean_s"] = t.mean_s;
        row["stddev_s"] = t.stddev_s;
        row["runs"] = t.runs;
        timings.append(row);
    }
    py::dict d;
    d["timings"] = timings;
    d["slope"] = r.fit.slope;
    d["intercept"] = r.fit.intercept;
    d["r2"] = r.fit.r2;
    d["resolution_warning"] = r.resolution_warning;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "VoIP quantization-index steganalysis pipeline";

    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const ValidationError& e) {
            PyErr_SetString(PyExc_ValueError, e.what());
        } catch (const NumericError& e) {
            PyErr_SetString(PyExc_ArithmeticError, e.what());
        } catch (const IoError& e) {
            PyErr_SetString(PyExc_OSError, e.what());
        }
    });

    m.def("gen_corpus", &py_gen_corpus, py::arg("out_dir"), py::arg("covers"), py::arg("stegos"),
          py::arg("frames"), py::arg("rate") = 1.0, py::arg("n_bits") = 1, py::arg("seed") = 0,
          py::arg("ar") = 0.9, py::arg("noise") = 0.25, py::arg("spread") = 0.5,
          py::arg("codebook_seed") = kDefaultCodebookSeed,
          "Write a labeled cover+stego corpus (plus codebooks.bin) into out_dir; "
          "returns the number of index entries.");

    m.def("build_manifest", &py_build_manifest, py::arg("corpus_dir"), py::arg("split_seed"),
          py::arg("out_path"),
          "Stratify a corpus into train/val/test and write the manifest; "
          "returns the per-split entry counts.");

    m.def("train", &py_train, py::arg("manifest_path"), py::arg("out_checkpoint"),
          py::arg("config_text") = std::string(), py::arg("epochs") = -1, py::arg("seed") = -1,
          py::arg("out_final") = std::string(),
          "Train on a manifest and save the best-validation checkpoint; returns "
          "best_epoch, best_val_accuracy and the per-epoch history.");

    m.def("evaluate", &py_evaluate, py::arg("checkpoint_path"), py::arg("manifest_path"),
          py::arg("split") = std::string("test"),
          "Run a checkpoint over one manifest split and return the confusion "
          "counts and derived metrics.");

    m.def("detect", &py_detect, py::arg("checkpoint_path"), py::arg("qis_path"),
          "Classify a single stream file; returns the label and stego probability.");

    m.def("export_embeddings", &py_export_embeddings, py::arg("checkpoint_path"),
          py::arg("manifest_path"), py::arg("split"), py::arg("out_path"),
          "Write one 'label <tab> embedding...' row per stream; returns the row count.");

    m.def("init_checkpoint", &py_init_checkpoint, py::arg("path"), py::arg("variant") = 1,
          py::arg("hidden") = -1, py::arg("seed") = 0,
          "Save a freshly initialized model checkpoint.");

    m.def("bench", &py_bench, py::arg("lengths"), py::arg("runs") = 200, py::arg("seed") = 0,
          py::arg("checkpoint_path") = std::string(),
          py::arg("codebook_seed") = kDefaultCodebookSeed,
          "Time single-stream detection across sample lengths; returns per-length "
          "timings and the linear fit.");

    m.def(
        "metrics_from_counts",
        [](long long tp, long long tn, long long fp, long long fn) {
            return metrics_dict(metrics_from_counts(tp, tn, fp, fn));
        },
        py::arg("tp"), py::arg("tn"), py::arg("fp"), py::arg("fn"),
        "Derive accuracy/precision/recall/F1 from a confusion matrix.");

    m.def(
        "param_count",
        [](int variant, int hidden) { return param_count(config_for(variant, hidden, 0)); },
        py::arg("variant") = 1, py::arg("hidden") = -1,
        "Trainable parameter count for an ablation variant.");

    m.attr("__version__") = "0.1.0";
}
