#include "stegsage/qis.hpp"

#include <cmath>

#include "stegsage/io_util.hpp"

namespace stegsage {

void QisMatrix::validate() const {
    if (T < 1) throw ValidationError("QisMatrix: T must be >= 1");
    if (indices.size() != static_cast<size_t>(3) * T)
        throw ValidationError("QisMatrix: index buffer does not match 3 x T");
    if (frame_duration_ms <= 0.0) throw ValidationError("QisMatrix: non-positive frame duration");
    for (int i = 0; i < 3; ++i) {
        if (sizes[i] == 0) throw ValidationError("QisMatrix: zero codebook size");
        for (int t = 0; t < T; ++t)
            if (at(i, t) >= sizes[i])
                throw ValidationError("QisMatrix: index " + std::to_string(at(i, t)) +
                                      " out of range for size " + std::to_string(sizes[i]));
    }
}

void write_qis(const QisMatrix& q, const std::string& path) {
    q.validate();
    const double tenths = q.frame_duration_ms * 10.0;
    const auto tenths_u = static_cast<std::uint16_t>(std::lround(tenths));
    if (std::abs(tenths - std::round(tenths)) > 1e-9 || tenths < 1 || tenths > 0xffff)
        throw ValidationError("write_qis: frame duration must be a multiple of 0.1 ms");

    std::ofstream out = open_output(path);
    write_bytes(out, "QIS1", 4);
    write_u8(out, 3);
    for (int i = 0; i < 3; ++i) write_u16(out, q.sizes[i]);
    write_u32(out, static_cast<std::uint32_t>(q.T));
    write_u16(out, tenths_u);
    for (std::uint16_t v : q.indices) write_u16(out, v);
    if (!out.flush()) throw IoError("write_qis: flush failed: " + path);
}

QisMatrix read_qis(const std::string& path) {
    std::ifstream in = open_input(path);
    check_magic(in, "QIS1", "QIS");
    const int count = read_u8(in, "codeword count");
    if (count != 3)
        throw CorruptHeaderError("QIS file declares " + std::to_string(count) +
                                 " codeword rows, expected 3");
    std::array<std::uint16_t, 3> sizes{};
    for (int i = 0; i < 3; ++i) {
        sizes[i] = read_u16(in, "codebook size");
        if (sizes[i] == 0) throw CorruptHeaderError("QIS header declares a zero codebook size");
    }
    const std::uint32_t T = read_u32(in, "frame count");
    if (T == 0) throw CorruptHeaderError("QIS header declares zero frames");
    const std::uint16_t tenths = read_u16(in, "frame duration");
    if (tenths == 0) throw CorruptHeaderError("QIS header declares zero frame duration");

    QisMatrix q(sizes, static_cast<int>(T), tenths / 10.0);
    for (int i = 0; i < 3; ++i)
        for (std::uint32_t t = 0; t < T; ++t) {
            const std::uint16_t v = read_u16(in, "index payload");
            if (v >= sizes[i])
                throw IndexRangeError("QIS index " + std::to_string(v) +
                                      " out of range for declared size " +
                                      std::to_string(sizes[i]));
            q.at(i, static_cast<int>(t)) = v;
        }
    return q;
}

}  // namespace stegsage
