#include "akb/training.hpp"

#include <cstring>
#include <fstream>

#include "akb/runtime.hpp"

namespace akb {

namespace {
constexpr char kCheckpointMagic[4] = {'A', 'K', 'C', '1'};
}

void write_checkpoint(const Model<float>& model, const OptimizerState<float>& state,
                      const std::string& path) {
    std::vector<std::uint8_t> buf;
    buf.insert(buf.end(), kCheckpointMagic, kCheckpointMagic + 4);

    // Embed the ordinary weight bundle image so a checkpoint doubles as a
    // (prefix-shifted) deployable model.
    const std::string bundle_tmp = path + ".bundle.tmp";
    write_bundle(export_weights(model), bundle_tmp);
    {
        std::ifstream in(bundle_tmp, std::ios::binary);
        buf.insert(buf.end(), std::istreambuf_iterator<char>(in),
                   std::istreambuf_iterator<char>());
    }
    std::remove(bundle_tmp.c_str());

    const std::uint64_t step = static_cast<std::uint64_t>(state.step);
    const auto* step_bytes = reinterpret_cast<const std::uint8_t*>(&step);
    buf.insert(buf.end(), step_bytes, step_bytes + 8);

    auto append_tensors = [&buf](const Gradients<float>& tensors) {
        for_each_gradient(tensors, [&buf](const char*, const auto& tensor) {
            const auto* p = reinterpret_cast<const std::uint8_t*>(tensor.data());
            buf.insert(buf.end(), p, p + tensor.size() * sizeof(float));
        });
    };
    append_tensors(state.first_moment);
    append_tensors(state.second_moment);

    const std::uint32_t crc = crc32(buf.data(), buf.size());
    const auto* crc_bytes = reinterpret_cast<const std::uint8_t*>(&crc);
    buf.insert(buf.end(), crc_bytes, crc_bytes + 4);

    std::ofstream out(path, std::ios::binary);
    if (!out) throw BundleError(BundleErrorKind::Io, "cannot open " + path + " for writing");
    out.write(reinterpret_cast<const char*>(buf.data()), buf.size());
}

std::pair<Model<float>, OptimizerState<float>> read_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw BundleError(BundleErrorKind::Io, "cannot open " + path);
    std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
    if (buf.size() < 8 || std::memcmp(buf.data(), kCheckpointMagic, 4) != 0)
        throw BundleError(BundleErrorKind::Magic, path + ": not a checkpoint");

    std::uint32_t stored_crc;
    std::memcpy(&stored_crc, buf.data() + buf.size() - 4, 4);
    if (crc32(buf.data(), buf.size() - 4) != stored_crc)
        throw BundleError(BundleErrorKind::Checksum, path + ": checksum mismatch");

    // The embedded bundle starts right after the magic; recover it via a
    // temp file so the ordinary loader (and its validation) applies.
    const std::string bundle_tmp = path + ".bundle.tmp";
    std::size_t offset = 4;
    {
        // Bundle length is determined by its own config block.
        if (buf.size() < offset + 48)
            throw BundleError(BundleErrorKind::SizeMismatch, path + ": truncated checkpoint");
        ModelConfig probe;
        const std::uint8_t* p = buf.data() + offset + 4;
        auto take_u32 = [&p]() {
            std::uint32_t v;
            std::memcpy(&v, p, 4);
            p += 4;
            return v;
        };
        probe.input_length = static_cast<int>(take_u32());
        probe.in_channels = static_cast<int>(take_u32());
        probe.conv_channels = static_cast<int>(take_u32());
        probe.conv_kernel = static_cast<int>(take_u32());
        probe.conv_stride = static_cast<int>(take_u32());
        probe.hidden = static_cast<int>(take_u32());
        probe.classes = static_cast<int>(take_u32());
        std::memcpy(&probe.bn_epsilon, p, 8);
        std::memcpy(&probe.bn_momentum, p + 8, 8);
        probe.validate();
        const std::size_t bundle_size = bundle_file_size(probe);
        if (buf.size() < offset + bundle_size + 8 + 4)
            throw BundleError(BundleErrorKind::SizeMismatch, path + ": truncated checkpoint");
        std::ofstream out(bundle_tmp, std::ios::binary);
        out.write(reinterpret_cast<const char*>(buf.data() + offset), bundle_size);
        offset += bundle_size;
    }
    Model<float> model = import_weights(read_bundle(bundle_tmp));
    std::remove(bundle_tmp.c_str());

    std::uint64_t step;
    std::memcpy(&step, buf.data() + offset, 8);
    offset += 8;

    OptimizerState<float> state = OptimizerState<float>::zeros(model.config);
    state.step = static_cast<long>(step);
    auto read_tensors = [&](Gradients<float>& tensors) {
        for_each_gradient(tensors, [&](const char*, auto& tensor) {
            const std::size_t bytes = tensor.size() * sizeof(float);
            if (offset + bytes > buf.size() - 4)
                throw BundleError(BundleErrorKind::SizeMismatch,
                                  path + ": optimizer state truncated");
            std::memcpy(tensor.data(), buf.data() + offset, bytes);
            offset += bytes;
        });
    };
    read_tensors(state.first_moment);
    read_tensors(state.second_moment);
    if (offset != buf.size() - 4)
        throw BundleError(BundleErrorKind::SizeMismatch, path + ": trailing bytes in checkpoint");
    return {std::move(model), std::move(state)};
}

}  // namespace akb
