#include "stegsage/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <unordered_set>

#include "stegsage/common.hpp"
#include "stegsage/qim.hpp"
#include "stegsage/qis.hpp"

namespace fs = std::filesystem;

namespace stegsage {

namespace {

std::string pad5(int n) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%05d", n);
    return buf;
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    size_t start = 0;
    while (true) {
        size_t tab = line.find('\t', start);
        if (tab == std::string::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
}

double parse_double(const std::string& s, const std::string& what) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size())
        throw FormatError("bad " + what + " field: '" + s + "'");
    return v;
}

std::uint64_t parse_u64(const std::string& s, const std::string& what) {
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size())
        throw FormatError("bad " + what + " field: '" + s + "'");
    return v;
}

int parse_label(const std::string& s) {
    if (s == "0") return 0;
    if (s == "1") return 1;
    throw FormatError("bad label field: '" + s + "'");
}

// path, label, rate, length_s, seed, mask; manifests append the split
ManifestEntry parse_entry(const std::string& line, const fs::path& base_dir, bool with_split) {
    std::vector<std::string> f = split_tabs(line);
    const size_t want = with_split ? 7 : 6;
    if (f.size() != want)
        throw FormatError("expected " + std::to_string(want) + " tab-separated fields, got " +
                          std::to_string(f.size()));
    ManifestEntry e;
    fs::path p = f[0];
    e.path = (p.is_absolute() ? p : base_dir / p).lexically_normal().string();
    e.label = parse_label(f[1]);
    e.rate = parse_double(f[2], "rate");
    e.length_s = parse_double(f[3], "length_s");
    e.seed = parse_u64(f[4], "seed");
    e.mask_sha256 = f[5];
    if (with_split) e.split = split_from_name(f[6]);
    if (e.rate < 0.0 || e.rate > 1.0)
        throw FormatError("rate out of [0,1]: " + f[2]);
    return e;
}

std::string entry_line(const ManifestEntry& e, const fs::path& base_dir, bool with_split) {
    fs::path p = e.path;
    std::error_code ec;
    fs::path rel = fs::proximate(p, base_dir, ec);
    if (!ec && !rel.empty()) p = rel;
    std::string line = p.string() + "\t" + std::to_string(e.label) + "\t" + fmt_double(e.rate) +
                       "\t" + fmt_double(e.length_s) + "\t" + std::to_string(e.seed) + "\t" +
                       e.mask_sha256;
    if (with_split) line += "\t" + split_name(e.split);
    return line;
}

void write_entry_file(const std::vector<ManifestEntry>& entries, const fs::path& path,
                      bool with_split) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open for writing: " + path.string());
    for (const ManifestEntry& e : entries) f << entry_line(e, path.parent_path(), with_split) << "\n";
    if (!f.flush()) throw IoError("write failed: " + path.string());
}

std::vector<ManifestEntry> read_entry_file(const fs::path& path, bool with_split) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open: " + path.string());
    std::vector<ManifestEntry> entries;
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            entries.push_back(parse_entry(line, path.parent_path(), with_split));
        } catch (const FormatError& e) {
            throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return entries;
}

void check_no_duplicates(const std::vector<ManifestEntry>& entries) {
    std::unordered_set<std::string> seen;
    for (const ManifestEntry& e : entries)
        if (!seen.insert(e.path).second)
            throw ValidationError("file listed twice: " + e.path);
}

struct SplitCounts {
    long long train = 0, val = 0, test = 0;

    long long total() const { return train + val + test; }
    long long of(Split s) const {
        return s == Split::train ? train : s == Split::val ? val : test;
    }
};

}  // namespace

std::string split_name(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
    }
    throw ValidationError("bad split value");
}

Split split_from_name(const std::string& name) {
    if (name == "train") return Split::train;
    if (name == "val") return Split::val;
    if (name == "test") return Split::test;
    throw FormatError("bad split field: '" + name + "'");
}

std::vector<ManifestEntry> DatasetManifest::split_entries(Split s) const {
    std::vector<ManifestEntry> out;
    for (const ManifestEntry& e : entries)
        if (e.split == s) out.push_back(e);
    return out;
}

void DatasetManifest::validate() const {
    if (entries.empty()) throw ValidationError("manifest is empty");
    check_no_duplicates(entries);
    SplitCounts by_label[2];
    for (const ManifestEntry& e : entries) {
        if (e.label != 0 && e.label != 1)
            throw ValidationError("entry " + e.path + " has label " + std::to_string(e.label) +
                                  ", want 0 or 1");
        SplitCounts& c = by_label[e.label];
        switch (e.split) {
            case Split::train: ++c.train; break;
            case Split::val: ++c.val; break;
            case Split::test: ++c.test; break;
        }
    }
    for (Split s : {Split::train, Split::val, Split::test}) {
        long long cover = by_label[0].of(s), stego = by_label[1].of(s);
        if (std::llabs(cover - stego) > 1)
            throw ValidationError("split " + split_name(s) + " is unbalanced: " +
                                  std::to_string(cover) + " cover vs " + std::to_string(stego) +
                                  " stego");
    }
    const double total = static_cast<double>(entries.size());
    const double want[3] = {0.70 * total, 0.15 * total, 0.15 * total};
    const Split splits[3] = {Split::train, Split::val, Split::test};
    for (int i = 0; i < 3; ++i) {
        long long got = by_label[0].of(splits[i]) + by_label[1].of(splits[i]);
        if (std::abs(static_cast<double>(got) - want[i]) > 1.0 + 1e-9)
            throw ValidationError("split " + split_name(splits[i]) + " has " +
                                  std::to_string(got) + " entries, expected about " +
                                  std::to_string(want[i]));
    }
}

void CorpusSpec::validate() const {
    if (covers < 0 || stegos < 0 || covers + stegos < 1)
        throw ValidationError("corpus needs at least one stream");
    if (T < 1) throw ValidationError("corpus T must be >= 1");
    if (!(rate >= 0.0 && rate <= 1.0)) throw ValidationError("rate must be in [0, 1]");
    if (n_bits != 1 && n_bits != 2) throw ValidationError("n_bits must be 1 or 2");
    source.validate();
}

std::vector<ManifestEntry> generate_corpus(const CorpusSpec& spec, const CodebookSet& codebooks,
                                           const std::string& out_dir) {
    spec.validate();
    codebooks.validate();
    fs::path dir = out_dir;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());

    CodebookPartition partition;
    if (spec.stegos > 0)
        partition = cnv_partition(codebooks, spec.n_bits, derive_seed(spec.seed, 0xCB00));

    std::vector<ManifestEntry> entries(static_cast<size_t>(spec.covers) + spec.stegos);
    parallel_for(static_cast<std::int64_t>(entries.size()), [&](std::int64_t idx) {
        const bool is_stego = idx >= spec.covers;
        const int i = is_stego ? static_cast<int>(idx) - spec.covers : static_cast<int>(idx);
        CoverSourceConfig src = spec.source;
        src.seed = derive_seed(spec.seed, is_stego ? 0x57E6 : 0xC0E4, i);
        LatentSequence latents = gen_latent_sequence(src, codebooks, spec.T);

        ManifestEntry e;
        e.seed = src.seed;
        QisMatrix q;
        if (is_stego) {
            StegoStream s = qim_embed(latents, codebooks, partition, spec.rate,
                                      derive_seed(spec.seed, 0xBA9, i));
            q = std::move(s.qis);
            e.label = 1;
            e.rate = spec.rate;
            e.mask_sha256 = s.plan.mask_digest();
            e.path = (dir / ("stego_" + pad5(i) + ".qis")).lexically_normal().string();
        } else {
            q = quantize_cover(latents, codebooks);
            e.label = 0;
            e.path = (dir / ("cover_" + pad5(i) + ".qis")).lexically_normal().string();
        }
        e.length_s = q.sample_length_s();
        write_qis(q, e.path);
        entries[idx] = std::move(e);
    });

    write_entry_file(entries, dir / "index.tsv", false);
    return entries;
}

std::vector<ManifestEntry> read_index(const std::string& corpus_dir) {
    return read_entry_file(fs::path(corpus_dir) / "index.tsv", false);
}

DatasetManifest build_manifest(std::vector<ManifestEntry> entries, std::uint64_t split_seed) {
    if (entries.empty()) throw ValidationError("corpus index is empty");
    check_no_duplicates(entries);
    std::vector<int> by_label[2];
    for (size_t i = 0; i < entries.size(); ++i) {
        if (entries[i].label != 0 && entries[i].label != 1)
            throw ValidationError("entry " + entries[i].path + " has label " +
                                  std::to_string(entries[i].label) + ", want 0 or 1");
        by_label[entries[i].label].push_back(static_cast<int>(i));
    }
    const long long nc = static_cast<long long>(by_label[0].size());
    const long long ns = static_cast<long long>(by_label[1].size());
    if (std::llabs(nc - ns) > 1)
        throw ValidationError("corpus is unbalanced beyond 1: " + std::to_string(nc) +
                              " cover vs " + std::to_string(ns) + " stego");
    if (nc == 0 || ns == 0) throw ValidationError("corpus needs both cover and stego streams");

    // Split totals round the 70/15/15 targets; each total is then divided
    // across the two labels as evenly as the remaining capacity allows, so
    // every split stays balanced within 1 even for odd corpora.
    const long long total = nc + ns;
    long long quota[3];
    quota[0] = std::llround(0.70 * static_cast<double>(total));
    quota[1] = std::llround(0.15 * static_cast<double>(total));
    quota[2] = total - quota[0] - quota[1];
    long long remaining[2] = {nc, ns};
    long long take[2][3];
    for (int s = 0; s < 3; ++s) {
        long long a = quota[s] / 2;
        if (quota[s] % 2 != 0 && remaining[0] > remaining[1]) ++a;
        take[0][s] = a;
        take[1][s] = quota[s] - a;
        remaining[0] -= take[0][s];
        remaining[1] -= take[1][s];
    }

    for (int label = 0; label < 2; ++label) {
        std::vector<int>& idx = by_label[label];
        const int n = static_cast<int>(idx.size());
        Rng rng(derive_seed(split_seed, 0x59117, label));
        std::vector<int> perm = rng.permutation(n);
        for (int r = 0; r < n; ++r) {
            Split s = r < take[label][0]               ? Split::train
                      : r < take[label][0] + take[label][1] ? Split::val
                                                            : Split::test;
            entries[idx[perm[r]]].split = s;
        }
    }
    DatasetManifest m{std::move(entries)};
    m.validate();
    return m;
}

DatasetManifest build_manifest(const std::string& corpus_dir, std::uint64_t split_seed) {
    return build_manifest(read_index(corpus_dir), split_seed);
}

void write_manifest(const DatasetManifest& m, const std::string& path) {
    m.validate();
    write_entry_file(m.entries, path, true);
}

DatasetManifest read_manifest(const std::string& path) {
    DatasetManifest m{read_entry_file(path, true)};
    m.validate();
    return m;
}

std::vector<StreamGraph> load_split(const DatasetManifest& m, Split s) {
    std::vector<ManifestEntry> entries = m.split_entries(s);
    if (entries.empty()) throw ValidationError("split " + split_name(s) + " is empty");
    std::vector<StreamGraph> graphs(entries.size());
    parallel_for(static_cast<std::int64_t>(entries.size()), [&](std::int64_t i) {
        QisMatrix q = read_qis(entries[i].path);
        graphs[i] = build_graph(q, Normalization::scaled, false);
        graphs[i].label = entries[i].label;
    });
    return graphs;
}

}  // namespace stegsage
