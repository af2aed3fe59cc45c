#include "stegsage/codebook.hpp"

#include <cmath>

#include "stegsage/io_util.hpp"

namespace stegsage {

void CodebookSet::validate() const {
    for (int i = 0; i < 3; ++i) {
        const Codebook& cb = books[i];
        if (cb.size() < 1 || cb.dim < 1)
            throw ValidationError("codebook " + std::to_string(i + 1) + " is empty");
        if (cb.vectors.cols != cb.dim)
            throw ValidationError("codebook " + std::to_string(i + 1) + " dim mismatch");
        if (!cb.vectors.all_finite())
            throw ValidationError("codebook " + std::to_string(i + 1) + " has non-finite vectors");
        for (int a = 0; a < cb.size(); ++a)
            for (int b = a + 1; b < cb.size(); ++b) {
                bool same = true;
                for (int d = 0; d < cb.dim && same; ++d) same = cb.vectors(a, d) == cb.vectors(b, d);
                if (same)
                    throw ValidationError("codebook " + std::to_string(i + 1) +
                                          " has duplicate vectors " + std::to_string(a) + " and " +
                                          std::to_string(b));
            }
    }
}

CodebookSet gen_codebooks(const std::array<int, 3>& sizes, const std::array<int, 3>& dims,
                          std::uint64_t seed, double min_separation) {
    if (min_separation < 0.0) throw ValidationError("gen_codebooks: negative separation");
    CodebookSet set;
    const double min_sq = min_separation * min_separation;
    for (int i = 0; i < 3; ++i) {
        if (sizes[i] < 1 || dims[i] < 1) throw ValidationError("gen_codebooks: bad size/dim");
        Rng rng(derive_seed(seed, 0xC0DEB00C, static_cast<std::uint64_t>(i)));
        Codebook cb;
        cb.dim = dims[i];
        cb.vectors = Tensor2(sizes[i], dims[i]);
        std::vector<double> cand(dims[i]);
        for (int r = 0; r < sizes[i]; ++r) {
            bool placed = false;
            for (int attempt = 0; attempt < 10000 && !placed; ++attempt) {
                for (double& v : cand) v = rng.uniform();
                placed = true;
                for (int prev = 0; prev < r && placed; ++prev) {
                    double d2 = 0.0;
                    for (int d = 0; d < dims[i]; ++d) {
                        double diff = cand[d] - cb.vectors(prev, d);
                        d2 += diff * diff;
                    }
                    if (d2 < min_sq) placed = false;
                }
            }
            if (!placed)
                throw ValidationError("gen_codebooks: cannot place " + std::to_string(sizes[i]) +
                                      " vectors with separation " + std::to_string(min_separation));
            for (int d = 0; d < dims[i]; ++d) cb.vectors(r, d) = cand[d];
        }
        set.books[i] = std::move(cb);
    }
    set.validate();
    return set;
}

void write_codebooks(const CodebookSet& set, const std::string& path) {
    set.validate();
    std::ofstream out = open_output(path);
    write_bytes(out, "CBK1", 4);
    write_u8(out, 3);
    for (const Codebook& cb : set.books) {
        if (cb.size() > 0xffff || cb.dim > 0xffff)
            throw ValidationError("write_codebooks: size/dim exceeds u16");
        write_u16(out, static_cast<std::uint16_t>(cb.size()));
        write_u16(out, static_cast<std::uint16_t>(cb.dim));
        for (double v : cb.vectors.data) write_f64(out, v);
    }
    if (!out.flush()) throw IoError("write_codebooks: flush failed: " + path);
}

CodebookSet read_codebooks(const std::string& path) {
    std::ifstream in = open_input(path);
    check_magic(in, "CBK1", "codebook");
    const int count = read_u8(in, "codebook count");
    if (count != 3)
        throw CorruptHeaderError("codebook file declares " + std::to_string(count) +
                                 " books, expected 3");
    CodebookSet set;
    for (int i = 0; i < 3; ++i) {
        const int size = read_u16(in, "codebook size");
        const int dim = read_u16(in, "codebook dim");
        if (size < 1 || dim < 1) throw CorruptHeaderError("codebook with zero size or dim");
        Codebook cb;
        cb.dim = dim;
        cb.vectors = Tensor2(size, dim);
        for (double& v : cb.vectors.data) v = read_f64(in, "codebook vector");
        set.books[i] = std::move(cb);
    }
    set.validate();
    return set;
}

}  // namespace stegsage
