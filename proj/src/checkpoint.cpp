#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include <fmt/core.h>

#include "wsseg/errors.hpp"
#include "wsseg/model.hpp"

namespace wsseg {

namespace {

constexpr std::array<char, 8> kMagic = {'W', 'S', 'S', 'E', 'G', 'C', 'K', 'P'};

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <typename T>
void put(std::ofstream& out, T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out.write(buf, sizeof(T));
}

template <typename T>
T get(std::ifstream& in, const std::string& path) {
    char buf[sizeof(T)];
    if (!in.read(buf, sizeof(T))) throw MalformedFile(fmt::format("checkpoint '{}' is truncated", path));
    T v;
    std::memcpy(&v, buf, sizeof(T));
    return v;
}

}  // namespace

void save_checkpoint(const ModelParams& params, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(fmt::format("cannot open '{}' for writing", path));
    const ModelConfig& cfg = params.config();
    out.write(kMagic.data(), kMagic.size());
    put<std::uint32_t>(out, kCheckpointVersion);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(cfg.input_size.height));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(cfg.input_size.width));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(cfg.base_channels));
    put<std::uint64_t>(out, cfg.seed);
    put<std::uint64_t>(out, params.size());
    for (double v : params.values()) put<double>(out, v);
    if (!out) throw IoError(fmt::format("failed writing checkpoint '{}'", path));
}

ModelParams load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(fmt::format("cannot open checkpoint '{}'", path));
    std::array<char, 8> magic{};
    if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
        throw MalformedFile(fmt::format("'{}' is not a checkpoint (bad magic)", path));
    }
    const auto version = get<std::uint32_t>(in, path);
    if (version != kCheckpointVersion) {
        throw MalformedFile(fmt::format("checkpoint '{}' has version {}, expected {}", path, version, kCheckpointVersion));
    }
    ModelConfig cfg;
    cfg.input_size.height = static_cast<int>(get<std::uint32_t>(in, path));
    cfg.input_size.width = static_cast<int>(get<std::uint32_t>(in, path));
    cfg.base_channels = static_cast<int>(get<std::uint32_t>(in, path));
    cfg.seed = get<std::uint64_t>(in, path);
    const auto count = get<std::uint64_t>(in, path);

    ModelParams params = [&] {
        try {
            return ModelParams::zeros(cfg);
        } catch (const ConfigError& e) {
            throw MalformedFile(fmt::format("checkpoint '{}' has an invalid header: {}", path, e.what()));
        }
    }();
    if (count != params.size()) {
        throw MalformedFile(fmt::format("checkpoint '{}' stores {} values, architecture needs {}", path, count, params.size()));
    }
    std::vector<double> flat(count);
    for (double& v : flat) v = get<double>(in, path);
    params.restore(flat);
    return params;
}

}  // namespace wsseg
