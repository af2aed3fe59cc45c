#pragma once

#include <array>
#include <cstdint>

#include "stegsage/codebook.hpp"
#include "stegsage/qis.hpp"
#include "stegsage/tensor.hpp"

namespace stegsage {

/// Knobs of the synthetic cover source: an AR(1) vector process per
/// codeword position, anchored near a random codebook vector.
struct CoverSourceConfig {
    std::array<double, 3> ar{0.9, 0.9, 0.9};             // temporal correlation, in [0, 1)
    std::array<double, 3> noise_scale{0.25, 0.25, 0.25}; // innovation std-dev, > 0
    double anchor_spread = 0.5;  // std-dev of the per-stream mean around its anchor codeword
    std::uint64_t seed = 0;

    void validate() const;
};

/// T frames of latent vectors, one per codeword position, pre-quantization.
struct LatentSequence {
    std::array<Tensor2, 3> coords;  // coords[i]: [T x dim_i]
    double frame_duration_ms = 10.0;

    int T() const { return coords[0].rows; }
};

// x_t = mu + a (x_{t-1} - mu) + noise, with x_{-1} = mu and mu drawn once
// per stream near a random codebook vector. Pure function of (config, T).
LatentSequence gen_latent_sequence(const CoverSourceConfig& config, const CodebookSet& codebooks,
                                   int T);

// Full-codebook nearest-vector quantization (squared Euclidean distance,
// ties to the lowest index).
QisMatrix quantize_cover(const LatentSequence& latents, const CodebookSet& codebooks);

// Index of the vector in `book` (restricted to `subset` if non-null)
// closest to `point`; ties to the lowest index. Shared by cover
// quantization and the sub-codebook path.
int nearest_index(const Codebook& book, const double* point,
                  const std::vector<int>* subset = nullptr);

}  // namespace stegsage
