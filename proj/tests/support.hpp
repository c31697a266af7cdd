#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>

#include "wsseg/grid.hpp"

namespace wsseg::fixtures {

inline Mask random_mask(std::mt19937_64& rng, GridShape shape, double density) {
    std::bernoulli_distribution on(density);
    Grid<std::uint8_t> g(shape, 0);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = on(rng) ? 1 : 0;
    return Mask(std::move(g));
}

inline Mask filled(GridShape shape, int top, int left, int h, int w) {
    Grid<std::uint8_t> g(shape, 0);
    for (int r = top; r < top + h; ++r)
        for (int c = left; c < left + w; ++c) g(r, c) = 1;
    return Mask(std::move(g));
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("wsseg_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

}  // namespace wsseg::fixtures
