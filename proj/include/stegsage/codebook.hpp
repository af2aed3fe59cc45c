#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "stegsage/tensor.hpp"

namespace stegsage {

/// One vector-quantization codebook: `size()` vectors of dimension `dim`.
struct Codebook {
    int dim = 0;
    Tensor2 vectors;  // [size x dim]

    int size() const { return vectors.rows; }
};

/// The three codebooks a codeword stream quantizes against (c1, c2, c3).
struct CodebookSet {
    std::array<Codebook, 3> books;

    std::array<int, 3> sizes() const {
        return {books[0].size(), books[1].size(), books[2].size()};
    }
    std::array<int, 3> dims() const { return {books[0].dim, books[1].dim, books[2].dim}; }
    void validate() const;
};

inline constexpr std::array<int, 3> kDefaultCodebookSizes{128, 32, 32};
inline constexpr std::array<int, 3> kDefaultCodebookDims{10, 5, 5};
// Some codebook geometries admit no balanced complementary-neighbor
// partition at all; this seed's books are known to split cleanly for
// both 1 and 2 bits per codeword.
inline constexpr std::uint64_t kDefaultCodebookSeed = 8;

// Vectors drawn uniformly in the unit hypercube, rejection-sampled to a
// minimum pairwise separation so no two codewords nearly coincide.
CodebookSet gen_codebooks(const std::array<int, 3>& sizes = kDefaultCodebookSizes,
                          const std::array<int, 3>& dims = kDefaultCodebookDims,
                          std::uint64_t seed = kDefaultCodebookSeed, double min_separation = 0.05);

void write_codebooks(const CodebookSet& set, const std::string& path);
CodebookSet read_codebooks(const std::string& path);

}  // namespace stegsage
