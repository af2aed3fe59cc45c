#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "stegsage/common.hpp"

namespace stegsage {

/// Quantization-index sequence: one index per codeword position (3) per
/// frame (T). The interchange object everything downstream consumes.
struct QisMatrix {
    std::array<std::uint16_t, 3> sizes{};  // codebook sizes the indices live under
    int T = 0;
    double frame_duration_ms = 10.0;
    std::vector<std::uint16_t> indices;  // row-major [3 x T]

    QisMatrix() = default;
    QisMatrix(const std::array<std::uint16_t, 3>& sz, int frames, double frame_ms = 10.0)
        : sizes(sz), T(frames), frame_duration_ms(frame_ms),
          indices(static_cast<size_t>(3) * frames, 0) {
        if (frames < 1) throw ValidationError("QisMatrix: T must be >= 1");
    }

    std::uint16_t& at(int position, int t) { return indices[static_cast<size_t>(position) * T + t]; }
    std::uint16_t at(int position, int t) const {
        return indices[static_cast<size_t>(position) * T + t];
    }
    double sample_length_s() const { return T * frame_duration_ms / 1000.0; }

    // Every index strictly below its declared codebook size.
    void validate() const;

    bool operator==(const QisMatrix& o) const {
        return sizes == o.sizes && T == o.T && frame_duration_ms == o.frame_duration_ms &&
               indices == o.indices;
    }
};

void write_qis(const QisMatrix& q, const std::string& path);
QisMatrix read_qis(const std::string& path);

}  // namespace stegsage
