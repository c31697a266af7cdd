#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "wsseg/grid.hpp"
#include "wsseg/morphology.hpp"

namespace wsseg {

struct SynthConfig {
    GridShape shape{64, 64};
    int n_samples = 200;
    double roi_fraction_lo = 0.10;
    double roi_fraction_hi = 0.25;
    double contrast = 0.5;         // foreground minus background intensity
    double noise_std = 0.05;
    double background_level = 0.25;
    double weak_coverage = 0.08;   // fraction of the ROI kept in the weak mask
    std::uint64_t seed = 0;

    /// Throws InvalidConfig on out-of-range fields.
    void validate() const;
    bool operator==(const SynthConfig&) const = default;
};

/// 64x64, 200 samples, contrast 0.5, noise 0.05, weak coverage 0.08.
SynthConfig standard_benchmark(std::uint64_t seed);
/// Same geometry with contrast 0 and no noise: every image is constant.
SynthConfig zero_contrast_benchmark(std::uint64_t seed);

/// One training triple: the image, its ground truth (kept for evaluation only), the weak mask, and
/// the recorded summary statistic.
class Sample {
public:
    /// Checks shapes, weak subset of gt, weak non-empty; stat is computed from gt.
    Sample(std::string name, Image image, Mask gt, Mask weak);

    /// Builds the weak mask by erosion. Throws EmptyMask when gt has no foreground.
    static Sample with_coverage(std::string name, Image image, Mask gt, double coverage,
                                const StructuringElement& se = StructuringElement::cross());

    const std::string& name() const { return name_; }
    const Image& image() const { return image_; }
    const Mask& gt() const { return gt_; }
    const Mask& weak() const { return weak_; }
    double stat() const { return stat_; }

    bool operator==(const Sample&) const = default;

private:
    std::string name_;
    Image image_;
    Mask gt_;
    Mask weak_;
    double stat_ = 0.0;
};

/// One axis-aligned noisy ellipse per sample. Throws InfeasibleRoi if no ellipse fits the fraction range.
std::vector<Sample> generate_synthetic(const SynthConfig& config);

/// Per-slice masks of one volume; non-empty, equal shapes.
class MaskStack {
public:
    /// Throws EmptyStack or ShapeMismatch.
    explicit MaskStack(std::vector<Mask> slices);
    const std::vector<Mask>& slices() const { return slices_; }
    std::size_t size() const { return slices_.size(); }

private:
    std::vector<Mask> slices_;
};

/// Argmax of foreground count, lowest index on ties. Throws AllSlicesEmpty.
std::size_t select_largest_roi_slice(const MaskStack& stack);

/// Reads `<stem>.slice<k>.mask.pgm` with k contiguous from 0. Throws EmptyStack when none exist.
MaskStack load_mask_stack(const std::filesystem::path& dir);
void save_mask_stack(const std::filesystem::path& dir, const std::string& stem, const MaskStack& stack);

/// Reads every `<stem>.img.pgm` / `<stem>.mask.pgm` pair, sorted by stem, and erodes weak masks at `coverage`.
/// Throws MissingPair, MalformedFile, ShapeMismatch, EmptyMask (for an all-background mask).
std::vector<Sample> load_dataset(const std::filesystem::path& dir, double coverage = 0.08,
                                 const StructuringElement& se = StructuringElement::cross());

/// Writes `<name>.img.pgm` and `<name>.mask.pgm`; the image is quantized to 8 bits.
void save_sample(const std::filesystem::path& dir, const Sample& sample);

}  // namespace wsseg
