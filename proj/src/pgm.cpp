#include "wsseg/pgm.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include <fmt/core.h>

#include "wsseg/errors.hpp"

namespace wsseg {

namespace {

class HeaderReader {
public:
    HeaderReader(const std::string& bytes, const std::filesystem::path& path) : bytes_(bytes), path_(path) {}

    void skip_space_and_comments() {
        while (pos_ < bytes_.size()) {
            const char ch = bytes_[pos_];
            if (ch == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
            } else if (std::isspace(static_cast<unsigned char>(ch))) {
                ++pos_;
            } else {
                break;
            }
        }
    }

    int next_int(const char* field) {
        skip_space_and_comments();
        const std::size_t start = pos_;
        long value = 0;
        while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
            value = value * 10 + (bytes_[pos_] - '0');
            if (value > 1'000'000'000L) fail(fmt::format("{} is too large", field));
            ++pos_;
        }
        if (pos_ == start) fail(fmt::format("missing {}", field));
        return static_cast<int>(value);
    }

    std::size_t pos() const { return pos_; }
    void advance(std::size_t n) { pos_ += n; }

    [[noreturn]] void fail(const std::string& what) const {
        throw MalformedFile(fmt::format("PGM '{}': {}", path_.string(), what));
    }

private:
    const std::string& bytes_;
    const std::filesystem::path& path_;
    std::size_t pos_ = 0;
};

PgmImage quantize(std::span<const double> values, const GridShape& shape) {
    PgmImage pgm{shape.width, shape.height, 255, {}};
    pgm.pixels.reserve(values.size());
    for (double v : values) pgm.pixels.push_back(static_cast<std::uint16_t>(std::lround(v * 255.0)));
    return pgm;
}

}  // namespace

PgmImage read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()));
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    HeaderReader h(bytes, path);
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') h.fail("not a binary P5 file");
    h.advance(2);
    PgmImage pgm;
    pgm.width = h.next_int("width");
    pgm.height = h.next_int("height");
    pgm.maxval = h.next_int("maxval");
    if (pgm.width < 1 || pgm.height < 1) h.fail("width and height must be positive");
    if (pgm.maxval < 1 || pgm.maxval > 65535) h.fail(fmt::format("maxval {} outside 1..65535", pgm.maxval));
    if (h.pos() >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[h.pos()]))) h.fail("missing whitespace after maxval");
    h.advance(1);

    const std::size_t n = std::size_t(pgm.width) * pgm.height;
    const std::size_t bpp = pgm.maxval > 255 ? 2 : 1;
    if (bytes.size() - h.pos() < n * bpp) h.fail(fmt::format("raster truncated: need {} bytes, have {}", n * bpp, bytes.size() - h.pos()));

    pgm.pixels.resize(n);
    const auto* raw = reinterpret_cast<const unsigned char*>(bytes.data() + h.pos());
    for (std::size_t i = 0; i < n; ++i) {
        const unsigned v = bpp == 1 ? raw[i] : (unsigned(raw[2 * i]) << 8) | raw[2 * i + 1];
        if (v > unsigned(pgm.maxval)) h.fail(fmt::format("pixel {} has value {} above maxval {}", i, v, pgm.maxval));
        pgm.pixels[i] = static_cast<std::uint16_t>(v);
    }
    return pgm;
}

void write_pgm(const std::filesystem::path& path, const PgmImage& pgm) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(fmt::format("cannot open '{}' for writing", path.string()));
    out << "P5\n" << pgm.width << ' ' << pgm.height << '\n' << pgm.maxval << '\n';
    std::string raster;
    const bool wide = pgm.maxval > 255;
    raster.reserve(pgm.pixels.size() * (wide ? 2 : 1));
    for (std::uint16_t v : pgm.pixels) {
        if (wide) raster.push_back(static_cast<char>(v >> 8));
        raster.push_back(static_cast<char>(v & 0xff));
    }
    out.write(raster.data(), static_cast<std::streamsize>(raster.size()));
    if (!out) throw IoError(fmt::format("failed writing '{}'", path.string()));
}

Image image_from_pgm(const PgmImage& pgm) {
    std::vector<double> v;
    v.reserve(pgm.pixels.size());
    for (std::uint16_t p : pgm.pixels) v.push_back(static_cast<double>(p) / pgm.maxval);
    return Image(GridShape::make(pgm.height, pgm.width), std::move(v));
}

Mask mask_from_pgm(const PgmImage& pgm) {
    Grid<std::uint8_t> g(GridShape::make(pgm.height, pgm.width), 0);
    for (std::size_t i = 0; i < pgm.pixels.size(); ++i) g[i] = 2 * int{pgm.pixels[i]} >= pgm.maxval ? 1 : 0;
    return Mask(std::move(g));
}

PgmImage to_pgm(const Image& image) { return quantize(image.values(), image.shape()); }

PgmImage to_pgm(const SoftMask& mask) { return quantize(mask.values(), mask.shape()); }

PgmImage to_pgm(const Mask& mask) {
    PgmImage pgm{mask.width(), mask.height(), 255, {}};
    pgm.pixels.reserve(mask.size());
    for (std::uint8_t v : mask.values()) pgm.pixels.push_back(v ? 255 : 0);
    return pgm;
}

}  // namespace wsseg
