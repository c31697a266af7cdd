#include "wsseg/data.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <regex>

#include <fmt/core.h>

#include "wsseg/errors.hpp"
#include "wsseg/pgm.hpp"

namespace wsseg {

namespace {

constexpr int kEllipseAttempts = 2000;

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

struct Ellipse {
    double cy, cx, ry, rx;
};

Mask rasterize(const Ellipse& e, const GridShape& shape) {
    Grid<std::uint8_t> g(shape, 0);
    for (int r = 0; r < shape.height; ++r) {
        const double dy = (r - e.cy) / e.ry;
        for (int c = 0; c < shape.width; ++c) {
            const double dx = (c - e.cx) / e.rx;
            g(r, c) = dy * dy + dx * dx <= 1.0 ? 1 : 0;
        }
    }
    return Mask(std::move(g));
}

// Draws a target area uniformly in the fraction range and an aspect ratio, places the ellipse fully
// inside the grid, and rejects rasterizations whose pixel fraction leaves the range.
Mask draw_ellipse(std::mt19937_64& rng, const SynthConfig& cfg) {
    const GridShape s = cfg.shape;
    const double pixels = static_cast<double>(s.size());
    std::uniform_real_distribution<double> frac(cfg.roi_fraction_lo, cfg.roi_fraction_hi);
    std::uniform_real_distribution<double> log_aspect(std::log(0.6), std::log(1.0 / 0.6));
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    for (int attempt = 0; attempt < kEllipseAttempts; ++attempt) {
        const double area = frac(rng) * pixels;
        const double aspect = std::exp(log_aspect(rng));
        const double ry = std::sqrt(area * aspect / std::numbers::pi);
        const double rx = std::sqrt(area / (aspect * std::numbers::pi));
        const double span_y = (s.height - 1) - 2.0 * ry;
        const double span_x = (s.width - 1) - 2.0 * rx;
        if (span_y < 0.0 || span_x < 0.0) continue;
        const Ellipse e{ry + unit(rng) * span_y, rx + unit(rng) * span_x, ry, rx};
        Mask m = rasterize(e, s);
        const double f = summary_stat(m);
        if (f >= cfg.roi_fraction_lo && f <= cfg.roi_fraction_hi) return m;
    }
    throw InfeasibleRoi(fmt::format("no ellipse in a {}x{} grid satisfies roi_fraction_range [{}, {}] after {} attempts",
                                    s.height, s.width, cfg.roi_fraction_lo, cfg.roi_fraction_hi, kEllipseAttempts));
}

}  // namespace

void SynthConfig::validate() const {
    GridShape::make(shape.height, shape.width);
    if (n_samples < 1) throw InvalidConfig(fmt::format("n_samples must be >= 1, got {}", n_samples));
    if (!(roi_fraction_lo > 0.0 && roi_fraction_lo < roi_fraction_hi && roi_fraction_hi < 0.5)) {
        throw InvalidConfig(fmt::format("roi_fraction_range [{}, {}] must satisfy 0 < lo < hi < 0.5", roi_fraction_lo, roi_fraction_hi));
    }
    if (!(contrast >= 0.0 && contrast <= 1.0)) throw InvalidConfig(fmt::format("contrast must lie in [0,1], got {}", contrast));
    if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) throw InvalidConfig(fmt::format("noise_std must be >= 0, got {}", noise_std));
    if (!(background_level > 0.0 && background_level < 1.0)) {
        throw InvalidConfig(fmt::format("background_level must lie in (0,1), got {}", background_level));
    }
    if (!(weak_coverage > 0.0 && weak_coverage <= 1.0)) {
        throw InvalidConfig(fmt::format("weak_coverage must lie in (0,1], got {}", weak_coverage));
    }
}

SynthConfig standard_benchmark(std::uint64_t seed) {
    SynthConfig c;
    c.seed = seed;
    return c;
}

SynthConfig zero_contrast_benchmark(std::uint64_t seed) {
    SynthConfig c = standard_benchmark(seed);
    c.contrast = 0.0;
    c.noise_std = 0.0;
    return c;
}

Sample::Sample(std::string name, Image image, Mask gt, Mask weak)
    : name_(std::move(name)), image_(std::move(image)), gt_(std::move(gt)), weak_(std::move(weak)) {
    require_same_shape(image_.shape(), gt_.shape(), "Sample image/gt");
    require_same_shape(weak_.shape(), gt_.shape(), "Sample weak/gt");
    if (foreground_count(gt_) == 0) throw EmptyMask(fmt::format("sample '{}' has an empty ground-truth mask", name_));
    if (foreground_count(weak_) == 0) throw EmptyMask(fmt::format("sample '{}' has an empty weak mask", name_));
    if (!is_subset(weak_, gt_)) throw InvalidValue(fmt::format("sample '{}': weak mask is not a subset of the ground truth", name_));
    stat_ = summary_stat(gt_);
}

Sample Sample::with_coverage(std::string name, Image image, Mask gt, double coverage, const StructuringElement& se) {
    if (foreground_count(gt) == 0) throw EmptyMask(fmt::format("sample '{}' has an empty ground-truth mask", name));
    Mask weak = weak_mask(gt, coverage, se);
    return Sample(std::move(name), std::move(image), std::move(gt), std::move(weak));
}

std::vector<Sample> generate_synthetic(const SynthConfig& config) {
    config.validate();
    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> noise(0.0, config.noise_std > 0.0 ? config.noise_std : 1.0);
    const StructuringElement se = StructuringElement::cross();

    std::vector<Sample> out;
    out.reserve(config.n_samples);
    for (int i = 0; i < config.n_samples; ++i) {
        Mask gt = draw_ellipse(rng, config);
        std::vector<double> px(config.shape.size());
        for (std::size_t p = 0; p < px.size(); ++p) {
            double v = config.background_level + (gt[p] ? config.contrast : 0.0);
            if (config.noise_std > 0.0) v += noise(rng);
            px[p] = std::clamp(v, 0.0, 1.0);
        }
        out.push_back(Sample::with_coverage(fmt::format("sample_{:04d}", i), Image(config.shape, std::move(px)), std::move(gt),
                                            config.weak_coverage, se));
    }
    return out;
}

MaskStack::MaskStack(std::vector<Mask> slices) : slices_(std::move(slices)) {
    if (slices_.empty()) throw EmptyStack("mask stack has no slices");
    for (std::size_t k = 1; k < slices_.size(); ++k) require_same_shape(slices_[k].shape(), slices_[0].shape(), "MaskStack");
}

std::size_t select_largest_roi_slice(const MaskStack& stack) {
    std::size_t best = 0;
    std::size_t best_count = 0;
    for (std::size_t k = 0; k < stack.size(); ++k) {
        const std::size_t n = foreground_count(stack.slices()[k]);
        if (n > best_count) {
            best_count = n;
            best = k;
        }
    }
    if (best_count == 0) throw AllSlicesEmpty(fmt::format("all {} slices have an empty mask", stack.size()));
    return best;
}

MaskStack load_mask_stack(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw IoError(fmt::format("'{}' is not a directory", dir.string()));
    static const std::regex pattern(R"((.+)\.slice(\d+)\.mask\.pgm)");
    std::map<long, std::filesystem::path> by_index;
    std::string stem;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        const std::string fname = entry.path().filename().string();
        std::smatch m;
        if (!entry.is_regular_file() || !std::regex_match(fname, m, pattern)) continue;
        if (stem.empty()) {
            stem = m[1];
        } else if (stem != m[1]) {
            throw MalformedFile(fmt::format("'{}' mixes slice stems '{}' and '{}'", dir.string(), stem, std::string(m[1])));
        }
        by_index[std::stol(m[2])] = entry.path();
    }
    if (by_index.empty()) throw EmptyStack(fmt::format("no <stem>.slice<k>.mask.pgm files in '{}'", dir.string()));
    std::vector<Mask> slices;
    long expected = 0;
    for (const auto& [k, path] : by_index) {
        if (k != expected) throw MalformedFile(fmt::format("slice indices in '{}' are not contiguous: slice {} missing", dir.string(), expected));
        slices.push_back(mask_from_pgm(read_pgm(path)));
        ++expected;
    }
    return MaskStack(std::move(slices));
}

void save_mask_stack(const std::filesystem::path& dir, const std::string& stem, const MaskStack& stack) {
    std::filesystem::create_directories(dir);
    for (std::size_t k = 0; k < stack.size(); ++k) {
        write_pgm(dir / fmt::format("{}.slice{}.mask.pgm", stem, k), to_pgm(stack.slices()[k]));
    }
}

std::vector<Sample> load_dataset(const std::filesystem::path& dir, double coverage, const StructuringElement& se) {
    if (!std::filesystem::is_directory(dir)) throw IoError(fmt::format("'{}' is not a directory", dir.string()));
    std::map<std::string, std::pair<bool, bool>> stems;  // stem -> (has image, has mask)
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string fname = entry.path().filename().string();
        if (ends_with(fname, ".img.pgm")) {
            stems[fname.substr(0, fname.size() - 8)].first = true;
        } else if (ends_with(fname, ".mask.pgm")) {
            stems[fname.substr(0, fname.size() - 9)].second = true;
        }
    }

    std::vector<Sample> out;
    for (const auto& [stem, has] : stems) {
        if (!has.first || !has.second) {
            throw MissingPair(fmt::format("'{}' has {} but no {}", stem, has.first ? "an image" : "a mask", has.first ? "mask" : "image"));
        }
        Image image = image_from_pgm(read_pgm(dir / (stem + ".img.pgm")));
        Mask gt = mask_from_pgm(read_pgm(dir / (stem + ".mask.pgm")));
        require_same_shape(image.shape(), gt.shape(), stem.c_str());
        out.push_back(Sample::with_coverage(stem, std::move(image), std::move(gt), coverage, se));
    }
    return out;
}

void save_sample(const std::filesystem::path& dir, const Sample& sample) {
    std::filesystem::create_directories(dir);
    write_pgm(dir / (sample.name() + ".img.pgm"), to_pgm(sample.image()));
    write_pgm(dir / (sample.name() + ".mask.pgm"), to_pgm(sample.gt()));
}

}  // namespace wsseg
