#include <limits>

#include "binary_io.hpp"
#include "osc/model.hpp"

namespace osc {

namespace {

constexpr std::uint32_t kCheckpointVersion = 1;

std::uint32_t narrow(std::size_t v) {
    if (v > std::numeric_limits<std::uint32_t>::max())
        throw ValidationError("value too large for checkpoint header");
    return static_cast<std::uint32_t>(v);
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ModelConfig& config,
                     const ModelParameters& params) {
    config.validate();
    detail::ByteWriter w;
    w.magic("OSCM");
    w.u32(kCheckpointVersion);
    w.u32(narrow(config.input_dim));
    w.u32(narrow(config.hidden_dim));
    w.u32(narrow(config.num_layers));
    w.u32(narrow(config.num_heads));
    w.u32(narrow(config.num_classes));
    w.u32(narrow(config.max_frames));

    std::uint32_t count = 0;
    params.for_each([&](const std::string&, const Matrix&) { ++count; });
    w.u32(count);
    params.for_each([&](const std::string& name, const Matrix& m) {
        w.u32(narrow(name.size()));
        w.bytes(name.data(), name.size());
        w.u32(narrow(static_cast<std::size_t>(m.rows())));
        w.u32(narrow(static_cast<std::size_t>(m.cols())));
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index j = 0; j < m.cols(); ++j) w.f64(m(i, j));
    });
    w.write_to(path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    detail::ByteReader r(path);
    r.expect_magic("OSCM");
    const auto version = r.u32();
    if (version != kCheckpointVersion)
        throw FormatError(FormatError::Code::BadVersion,
                          r.path() + ": unsupported checkpoint version " + std::to_string(version));

    Checkpoint ck;
    ck.config.input_dim = r.u32();
    ck.config.hidden_dim = r.u32();
    ck.config.num_layers = r.u32();
    ck.config.num_heads = r.u32();
    ck.config.num_classes = r.u32();
    ck.config.max_frames = r.u32();
    try {
        ck.config.validate();
    } catch (const ValidationError& e) {
        throw FormatError(FormatError::Code::Parse, r.path() + ": " + e.what());
    }

    // The expected layout comes from the config; the file must match it exactly.
    ck.params = init_parameters(ck.config, 0);
    const auto count = r.u32();
    std::uint32_t expected = 0;
    ck.params.for_each([&](const std::string&, const Matrix&) { ++expected; });
    if (count != expected)
        throw FormatError(FormatError::Code::SizeMismatch,
                          r.path() + ": " + std::to_string(count) + " tensors, expected " +
                              std::to_string(expected));

    ck.params.for_each([&](const std::string& name, Matrix& m) {
        const auto len = r.u32();
        if (len > r.remaining())
            throw FormatError(FormatError::Code::Truncated, r.path() + ": truncated tensor name");
        std::string got(len, '\0');
        r.bytes(got.data(), len);
        if (got != name)
            throw FormatError(FormatError::Code::Parse,
                              r.path() + ": tensor '" + got + "' where '" + name + "' was expected");
        const auto rows = r.u32();
        const auto cols = r.u32();
        if (rows != m.rows() || cols != m.cols())
            throw FormatError(FormatError::Code::SizeMismatch, r.path() + ": tensor '" + name +
                                                                   "' has unexpected shape");
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = r.f64();
    });
    if (r.remaining() != 0)
        throw FormatError(FormatError::Code::SizeMismatch, r.path() + ": trailing bytes");
    return ck;
}

}  // namespace osc
