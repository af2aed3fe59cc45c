#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stegsage/codebook.hpp"
#include "stegsage/graph.hpp"
#include "stegsage/stream.hpp"

namespace stegsage {

enum class Split { train, val, test };

std::string split_name(Split s);
Split split_from_name(const std::string& name);

/// One corpus file plus its provenance. `mask_sha256` is "-" for covers.
struct ManifestEntry {
    std::string path;  // resolved, absolute or relative to the process cwd
    int label = 0;     // 0 cover, 1 stego
    double rate = 0.0;
    double length_s = 0.0;
    std::uint64_t seed = 0;
    std::string mask_sha256 = "-";
    Split split = Split::train;

    bool operator==(const ManifestEntry&) const = default;
};

/// Labeled corpus with a train/val/test assignment. Each split keeps a
/// 1:1 cover:stego ratio within 1, and the split sizes are 70/15/15
/// percent of the corpus within 1 entry per label.
struct DatasetManifest {
    std::vector<ManifestEntry> entries;

    std::vector<ManifestEntry> split_entries(Split s) const;
    void validate() const;
};

/// Inputs of one synthetic corpus: equal-sized cover and stego halves
/// drawn from the same latent source, stego embedded at `rate`.
struct CorpusSpec {
    int covers = 0;
    int stegos = 0;
    int T = 0;
    double rate = 1.0;
    int n_bits = 1;
    CoverSourceConfig source;  // per-stream seed is derived from `seed`, not taken from here
    std::uint64_t seed = 0;

    void validate() const;
};

// Writes cover_*.qis / stego_*.qis plus an index.tsv describing them
// into out_dir (created if missing). Streams are independent across
// indices and reproducible from spec.seed alone.
std::vector<ManifestEntry> generate_corpus(const CorpusSpec& spec, const CodebookSet& codebooks,
                                           const std::string& out_dir);

// Reads out_dir/index.tsv back; paths come out resolved against the
// directory.
std::vector<ManifestEntry> read_index(const std::string& corpus_dir);

// Stratified 70/15/15 split of the indexed corpus, shuffled per label by
// split_seed. Rejects corpora whose cover and stego counts differ by
// more than one.
DatasetManifest build_manifest(const std::string& corpus_dir, std::uint64_t split_seed);
DatasetManifest build_manifest(std::vector<ManifestEntry> entries, std::uint64_t split_seed);

void write_manifest(const DatasetManifest& m, const std::string& path);
DatasetManifest read_manifest(const std::string& path);

// Loads every file of one split as a labeled feature graph.
std::vector<StreamGraph> load_split(const DatasetManifest& m, Split s);

}  // namespace stegsage
