#include <fstream>

#include "stegsage/io_util.hpp"
#include "stegsage/model.hpp"

namespace stegsage {

namespace {

constexpr char kMagic[4] = {'S', 'A', 'G', 'E'};
constexpr std::uint16_t kVersion = 1;

std::uint8_t enum_byte(Aggregator a) { return a == Aggregator::lstm ? 0 : 1; }
std::uint8_t enum_byte(LayerKind k) { return k == LayerKind::sage ? 0 : 1; }
std::uint8_t enum_byte(ReadoutMode r) {
    switch (r) {
        case ReadoutMode::hierarchical_mean: return 0;
        case ReadoutMode::hierarchical_max: return 1;
        default: return 2;
    }
}

Aggregator aggregator_from_byte(std::uint8_t b) {
    if (b > 1) throw CorruptHeaderError("checkpoint: bad aggregator code");
    return b == 0 ? Aggregator::lstm : Aggregator::mean;
}

LayerKind layer_kind_from_byte(std::uint8_t b) {
    if (b > 1) throw CorruptHeaderError("checkpoint: bad layer kind code");
    return b == 0 ? LayerKind::sage : LayerKind::gcn;
}

ReadoutMode readout_from_byte(std::uint8_t b) {
    switch (b) {
        case 0: return ReadoutMode::hierarchical_mean;
        case 1: return ReadoutMode::hierarchical_max;
        case 2: return ReadoutMode::last_mean;
        default: throw CorruptHeaderError("checkpoint: bad readout code");
    }
}

}  // namespace

void save_checkpoint(const ModelState& state, const std::string& path) {
    const ModelConfig& cfg = state.config;
    const std::vector<ParamShape> shapes = param_shapes(cfg);
    if (state.params.names.size() != shapes.size())
        throw ValidationError("checkpoint: parameter store does not match config");

    std::ofstream f = open_output(path);
    write_bytes(f, kMagic, 4);
    write_u16(f, kVersion);
    write_u32(f, static_cast<std::uint32_t>(cfg.K));
    write_u32(f, static_cast<std::uint32_t>(cfg.hidden));
    write_u32(f, static_cast<std::uint32_t>(cfg.input_dim));
    write_u8(f, enum_byte(cfg.aggregator));
    write_u8(f, enum_byte(cfg.layer_kind));
    write_u8(f, enum_byte(cfg.readout));
    write_f64(f, cfg.dropout_p);
    write_u32(f, static_cast<std::uint32_t>(cfg.classes));
    write_u64(f, cfg.seed);
    write_u32(f, static_cast<std::uint32_t>(shapes.size()));
    for (size_t i = 0; i < shapes.size(); ++i) {
        const Tensor2& t = state.params.params[i];
        if (state.params.names[i] != shapes[i].name || t.rows != shapes[i].rows ||
            t.cols != shapes[i].cols)
            throw ValidationError("checkpoint: tensor " + state.params.names[i] +
                                  " does not match the canonical layout");
        write_u16(f, static_cast<std::uint16_t>(shapes[i].name.size()));
        write_bytes(f, shapes[i].name.data(), shapes[i].name.size());
        write_u32(f, static_cast<std::uint32_t>(t.rows));
        write_u32(f, static_cast<std::uint32_t>(t.cols));
        write_bytes(f, t.data.data(), t.data.size() * 8);
    }
    f.flush();
    if (!f) throw IoError("checkpoint: write failed: " + path);
}

ModelState load_checkpoint(const std::string& path) {
    std::ifstream f = open_input(path);
    check_magic(f, kMagic, "checkpoint");
    const std::uint16_t version = read_u16(f, "version");
    if (version != kVersion)
        throw CorruptHeaderError("checkpoint: unsupported version " + std::to_string(version));

    ModelConfig cfg;
    cfg.K = static_cast<int>(read_u32(f, "K"));
    cfg.hidden = static_cast<int>(read_u32(f, "hidden"));
    cfg.input_dim = static_cast<int>(read_u32(f, "input_dim"));
    cfg.aggregator = aggregator_from_byte(read_u8(f, "aggregator"));
    cfg.layer_kind = layer_kind_from_byte(read_u8(f, "layer kind"));
    cfg.readout = readout_from_byte(read_u8(f, "readout"));
    cfg.dropout_p = read_f64(f, "dropout");
    cfg.classes = static_cast<int>(read_u32(f, "classes"));
    cfg.seed = read_u64(f, "seed");
    cfg.validate();

    const std::vector<ParamShape> shapes = param_shapes(cfg);
    const std::uint32_t count = read_u32(f, "tensor count");
    if (count != shapes.size())
        throw ValidationError("checkpoint: " + std::to_string(count) + " tensors, config needs " +
                              std::to_string(shapes.size()));

    ModelState st;
    st.config = cfg;
    for (const ParamShape& s : shapes) {
        const std::uint16_t len = read_u16(f, "tensor name length");
        std::string name(len, '\0');
        read_bytes(f, name.data(), len, "tensor name");
        const int rows = static_cast<int>(read_u32(f, "tensor rows"));
        const int cols = static_cast<int>(read_u32(f, "tensor cols"));
        if (name != s.name || rows != s.rows || cols != s.cols)
            throw ValidationError("checkpoint: tensor " + name + " [" + std::to_string(rows) +
                                  "x" + std::to_string(cols) + "] does not match expected " +
                                  s.name + " [" + std::to_string(s.rows) + "x" +
                                  std::to_string(s.cols) + "]");
        Tensor2 t(rows, cols);
        read_bytes(f, t.data.data(), t.data.size() * 8, name.c_str());
        if (!t.all_finite()) throw NumericError("checkpoint: non-finite values in " + name);
        st.params.add(s.name, std::move(t));
    }
    if (f.peek() != EOF) throw CorruptHeaderError("checkpoint: trailing bytes");
    return st;
}

ModelState load_checkpoint(const std::string& path, const ModelConfig& expected) {
    ModelState st = load_checkpoint(path);
    if (!(st.config == expected))
        throw ValidationError("checkpoint config mismatch: file has " +
                              config_summary(st.config) + ", requested " +
                              config_summary(expected));
    return st;
}

}  // namespace stegsage
