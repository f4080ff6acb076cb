#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "stms/errors.hpp"
#include "stms/model.hpp"
#include "stms/train_config.hpp"

namespace stms {

// Checkpoint file layout (all integers little-endian):
//   magic "STMS" | u8 version | u64 step | u32 config_len | config text |
//   u32 param_count | records | payload
// Each record: u16 name_len | name | u8 dtype (byte width, 4 or 8) |
//   u32 rows | u32 cols | u64 payload offset.
// The payload concatenates every parameter in manifest order, row-major,
// native IEEE encoding. Offsets are contiguous by construction and verified
// on load.

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace detail {

inline constexpr char kCheckpointMagic[4] = {'S', 'T', 'M', 'S'};
inline constexpr std::uint8_t kCheckpointVersion = 1;

template <typename T>
void write_raw(std::ostream& out, const T& value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_raw(const std::vector<char>& buf, std::size_t& pos, const std::string& what) {
    if (pos + sizeof(T) > buf.size())
        throw IntegrityError("checkpoint truncated while reading " + what);
    T value;
    std::memcpy(&value, buf.data() + pos, sizeof(T));
    pos += sizeof(T);
    return value;
}

struct ManifestEntry {
    std::string name;
    std::uint8_t dtype = 0;
    std::uint32_t rows = 0;
    std::uint32_t cols = 0;
    std::uint64_t offset = 0;
};

}  // namespace detail

template <typename Scalar>
void save_checkpoint(const StmsModel<Scalar>& model, std::uint64_t step,
                     const std::string& config_snapshot, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open checkpoint for writing: " + path);

    out.write(detail::kCheckpointMagic, 4);
    detail::write_raw(out, detail::kCheckpointVersion);
    detail::write_raw(out, step);
    detail::write_raw(out, static_cast<std::uint32_t>(config_snapshot.size()));
    out.write(config_snapshot.data(), static_cast<std::streamsize>(config_snapshot.size()));

    std::uint32_t count = 0;
    model.for_each_parameter([&](const std::string&, const Matrix<Scalar>&) { ++count; });
    detail::write_raw(out, count);

    std::uint64_t offset = 0;
    model.for_each_parameter([&](const std::string& name, const Matrix<Scalar>& m) {
        detail::write_raw(out, static_cast<std::uint16_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        detail::write_raw(out, static_cast<std::uint8_t>(sizeof(Scalar)));
        detail::write_raw(out, static_cast<std::uint32_t>(m.rows()));
        detail::write_raw(out, static_cast<std::uint32_t>(m.cols()));
        detail::write_raw(out, offset);
        offset += static_cast<std::uint64_t>(m.size()) * sizeof(Scalar);
    });

    model.for_each_parameter([&](const std::string&, const Matrix<Scalar>& m) {
        for (Index i = 0; i < m.rows(); ++i)
            for (Index j = 0; j < m.cols(); ++j) detail::write_raw(out, m(i, j));
    });
    if (!out) throw IoError("checkpoint write failed: " + path);
}

template <typename Scalar>
struct LoadedCheckpoint {
    StmsModel<Scalar> model;
    std::uint64_t step = 0;
    TrainConfigData config;
    std::string config_snapshot;
};

template <typename Scalar>
LoadedCheckpoint<Scalar> load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path);
    std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::size_t pos = 0;

    if (buf.size() < 4 || std::memcmp(buf.data(), detail::kCheckpointMagic, 4) != 0)
        throw IntegrityError(path + ": bad magic, not a checkpoint file");
    pos = 4;
    const auto version = detail::read_raw<std::uint8_t>(buf, pos, "version");
    if (version != detail::kCheckpointVersion)
        throw IntegrityError(path + ": unsupported checkpoint version " +
                             std::to_string(version));
    const auto step = detail::read_raw<std::uint64_t>(buf, pos, "step counter");
    const auto config_len = detail::read_raw<std::uint32_t>(buf, pos, "config length");
    if (pos + config_len > buf.size())
        throw IntegrityError(path + ": checkpoint truncated inside config snapshot");
    const std::string snapshot(buf.data() + pos, config_len);
    pos += config_len;

    const auto count = detail::read_raw<std::uint32_t>(buf, pos, "parameter count");
    std::vector<detail::ManifestEntry> manifest;
    manifest.reserve(count);
    std::uint64_t expected_offset = 0;
    for (std::uint32_t i = 0; i < count; ++i) {
        detail::ManifestEntry e;
        const auto name_len = detail::read_raw<std::uint16_t>(buf, pos, "parameter name length");
        if (pos + name_len > buf.size())
            throw IntegrityError(path + ": checkpoint truncated inside parameter name");
        e.name.assign(buf.data() + pos, name_len);
        pos += name_len;
        e.dtype = detail::read_raw<std::uint8_t>(buf, pos, "dtype of " + e.name);
        e.rows = detail::read_raw<std::uint32_t>(buf, pos, "rows of " + e.name);
        e.cols = detail::read_raw<std::uint32_t>(buf, pos, "cols of " + e.name);
        e.offset = detail::read_raw<std::uint64_t>(buf, pos, "offset of " + e.name);
        if (e.offset != expected_offset)
            throw IntegrityError(path + ": parameter '" + e.name +
                                 "' breaks payload contiguity");
        expected_offset += static_cast<std::uint64_t>(e.rows) * e.cols * e.dtype;
        manifest.push_back(std::move(e));
    }
    const std::size_t payload_start = pos;
    if (buf.size() - payload_start != expected_offset)
        throw IntegrityError(path + ": payload holds " +
                             std::to_string(buf.size() - payload_start) + " bytes, manifest needs " +
                             std::to_string(expected_offset));

    const FlatConfig flat = FlatConfig::parse_string(snapshot, path + "#config");
    TrainConfigData config = parse_train_config(flat);

    LoadedCheckpoint<Scalar> loaded{StmsModel<Scalar>(config.model, /*seed=*/0), step,
                                    std::move(config), snapshot};

    std::size_t next = 0;
    loaded.model.for_each_parameter([&](const std::string& name, Matrix<Scalar>& m) {
        if (next >= manifest.size())
            throw ConfigError(path + ": checkpoint has no entry for parameter '" + name + "'");
        const detail::ManifestEntry& e = manifest[next++];
        if (e.name != name)
            throw ConfigError(path + ": manifest entry '" + e.name +
                              "' does not match model parameter '" + name + "'");
        if (e.dtype != sizeof(Scalar))
            throw ConfigError(path + ": parameter '" + name + "' stored with " +
                              std::to_string(int(e.dtype)) + "-byte scalars, expected " +
                              std::to_string(sizeof(Scalar)));
        if (e.rows != static_cast<std::uint32_t>(m.rows()) ||
            e.cols != static_cast<std::uint32_t>(m.cols()))
            throw ConfigError(path + ": parameter '" + name + "' has shape " +
                              std::to_string(e.rows) + "x" + std::to_string(e.cols) +
                              ", model expects " + std::to_string(m.rows()) + "x" +
                              std::to_string(m.cols()));
        std::size_t p = payload_start + e.offset;
        for (Index i = 0; i < m.rows(); ++i)
            for (Index j = 0; j < m.cols(); ++j)
                m(i, j) = detail::read_raw<Scalar>(buf, p, "payload of " + name);
    });
    if (next != manifest.size())
        throw ConfigError(path + ": checkpoint carries extra parameter '" +
                          manifest[next].name + "'");
    return loaded;
}

}  // namespace stms
