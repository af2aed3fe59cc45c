#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "stegsage/codebook.hpp"
#include "stegsage/stream.hpp"

namespace stegsage {

/// Disjoint, exhaustive split of every codebook into 2^n_bits parts of
/// near-equal size. For n_bits=1 each codeword's nearest neighbor sits
/// in the complementary part, so restricted quantization flips the part
/// a frame lands in without large distortion.
struct CodebookPartition {
    int n_bits = 1;
    std::array<std::vector<int>, 3> assignment;        // codeword index -> part id
    std::array<std::vector<std::vector<int>>, 3> parts;  // part id -> sorted codeword indices

    int part_count() const { return 1 << n_bits; }

    // Disjointness, exhaustiveness, balance (sizes within 1), and the
    // complementary-nearest-neighbor property for n_bits=1.
    void validate(const CodebookSet& codebooks) const;
};

// Builds the nearest-neighbor constraint graph per codebook, 2-colors
// each connected component (the coloring is forced up to a flip), then
// balances part sizes by flipping whole components; n_bits=2 splits each
// part again by the same rule. Unbalanceable inputs error out rather
// than silently violating the complementarity constraint.
CodebookPartition cnv_partition(const CodebookSet& codebooks, int n_bits, std::uint64_t seed);

/// Which frames carry bits and what those bits are.
struct EmbedPlan {
    double rate = 0.0;
    int bits_per_frame = 0;              // 3 * n_bits
    std::vector<std::uint8_t> selected;  // per frame, 0 or 1
    std::vector<std::uint8_t> payload;   // selected count * bits_per_frame bits
    std::uint64_t seed = 0;

    int selected_count() const;
    std::string mask_digest() const;  // hex sha256 of the selection mask
};

struct StegoStream {
    QisMatrix qis;
    EmbedPlan plan;
    int label = 1;  // 0 cover, 1 stego
};

// Frames chosen i.i.d. Bernoulli(rate); in a chosen frame each codeword
// quantizes within the part named by the next payload bits (first bit =
// high bit of the part id); other frames quantize over the full
// codebook, identical to quantize_cover.
StegoStream qim_embed(const LatentSequence& latents, const CodebookSet& codebooks,
                      const CodebookPartition& partition, double rate, std::uint64_t payload_seed);

// Part ids of the indices at selected frames, frame order then codeword
// order, expanded back to bits. Inverse of qim_embed on the payload.
std::vector<std::uint8_t> qim_extract(const StegoStream& s, const CodebookPartition& partition);

}  // namespace stegsage
