#pragma once

#include <cstddef>
#include <cstdint>
#include <new>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wsseg/grid.hpp"

namespace wsseg {

/// Fixed 64-byte alignment for every buffer handed to the GEMM kernels. Vectorized reductions
/// peel differently depending on the start address, so the alignment has to be the same on every
/// run and thread for results to be bit-reproducible.
template <typename T>
struct AlignedAllocator {
    using value_type = T;
    static constexpr std::align_val_t kAlign{64};

    AlignedAllocator() = default;
    template <typename U>
    AlignedAllocator(const AlignedAllocator<U>&) {}

    T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
    void deallocate(T* p, std::size_t) { ::operator delete(p, kAlign); }

    template <typename U>
    bool operator==(const AlignedAllocator<U>&) const { return true; }
};

using AlignedBuffer = std::vector<double, AlignedAllocator<double>>;

struct ModelConfig {
    GridShape input_size{64, 64};
    int base_channels = 8;
    std::uint64_t seed = 0;

    /// Throws InvalidConfig unless both extents are multiples of 4 and base_channels >= 1.
    void validate() const;
    bool operator==(const ModelConfig&) const = default;
};

enum class Activation { relu, sigmoid };

/// One convolution of the fixed encoder-decoder.
struct LayerSpec {
    std::string name;
    int in_channels = 0;
    int out_channels = 0;
    int kernel = 3;
    int stride = 1;
    bool upsample = false;  // nearest-neighbour x2 before the convolution
    Activation activation = Activation::relu;
    int input_layer = -1;   // index of the layer feeding this one, -1 for the image

    int fan_in() const { return in_channels * kernel * kernel; }
};

/// Layer table for base width C:
///   enc1 3x3 1->C, enc2 3x3/2 C->2C, enc3 3x3/2 2C->4C,
///   dec1 up+3x3 4C->2C, dec2 up+3x3 2C->C,
///   seg_head 1x1 C->1 (sigmoid), recon_head 1x1 C->1 (sigmoid), both reading dec2.
std::vector<LayerSpec> architecture(int base_channels);

inline constexpr std::size_t kSegHead = 5;
inline constexpr std::size_t kReconHead = 6;

struct TensorInfo {
    std::string name;
    std::vector<int> dims;
    std::size_t offset = 0;
    std::size_t count = 0;
};

/// Named kernels and biases of the architecture, backed by one contiguous vector.
/// Tensor order: for each layer, "<layer>.weight" (out, in, k, k) then "<layer>.bias" (out).
class ModelParams {
public:
    /// All-zero parameters for a validated config.
    static ModelParams zeros(const ModelConfig& config);

    const ModelConfig& config() const { return config_; }
    const std::vector<LayerSpec>& layers() const { return layers_; }
    const std::vector<TensorInfo>& layout() const { return layout_; }

    std::size_t size() const { return values_.size(); }
    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }

    std::span<double> weight(std::size_t layer);
    std::span<const double> weight(std::size_t layer) const;
    std::span<double> bias(std::size_t layer);
    std::span<const double> bias(std::size_t layer) const;
    /// Throws std::out_of_range for unknown names.
    std::span<const double> tensor(std::string_view name) const;

    std::vector<double> flatten() const { return {values_.begin(), values_.end()}; }
    /// Throws ShapeMismatch if the vector length differs from size().
    void restore(std::span<const double> flat);

    bool operator==(const ModelParams& other) const { return config_ == other.config_ && values_ == other.values_; }

private:
    ModelConfig config_;
    std::vector<LayerSpec> layers_;
    std::vector<TensorInfo> layout_;
    AlignedBuffer values_;
};

/// Gradients share the parameter layout.
using ParamGrads = ModelParams;

/// He-style init: kernels ~ N(0, 2 / fan_in), biases zero. Same config -> bit-identical params.
ModelParams init_params(const ModelConfig& config);

/// Channel-major (C, H, W) activation tensor.
struct FeatureMap {
    int channels = 0;
    int height = 0;
    int width = 0;
    AlignedBuffer data;

    FeatureMap() = default;
    FeatureMap(int c, int h, int w, double fill = 0.0) : channels(c), height(h), width(w), data(std::size_t(c) * h * w, fill) {}
    std::size_t plane() const { return std::size_t(height) * width; }
};

struct LayerTrace {
    FeatureMap input;             // what the convolution sees (after upsampling)
    AlignedBuffer columns;        // im2col of input, (in*k*k) x (out_h*out_w)
    FeatureMap pre;               // pre-activation
    FeatureMap out;               // post-activation
};

struct ForwardTrace {
    std::vector<LayerTrace> layers;
    SoftMask pred;
    Image recon;
};

/// Throws ShapeMismatch unless image.shape() == params.config().input_size.
ForwardTrace forward(const ModelParams& params, const Image& image);
/// Same, reusing the buffers of `trace`.
void forward(const ModelParams& params, const Image& image, ForwardTrace& trace);

/// Exact gradient of <d_pred, pred> + <d_recon, recon> with respect to every parameter.
/// Throws ShapeMismatch if the seed grids do not match the output shape.
ParamGrads backward(const ModelParams& params, const ForwardTrace& trace, const RealGrid& d_pred, const RealGrid& d_recon);
/// Same, overwriting `grads` (resized to the parameter layout if needed).
void backward(const ModelParams& params, const ForwardTrace& trace, const RealGrid& d_pred, const RealGrid& d_recon, ParamGrads& grads);

/// Binary checkpoint: magic "WSSEGCKP", u32 version, u32 height, u32 width, u32 base_channels,
/// u64 seed, u64 count, then `count` little-endian IEEE doubles.
inline constexpr std::uint32_t kCheckpointVersion = 1;
void save_checkpoint(const ModelParams& params, const std::string& path);
/// Throws MalformedFile on bad magic, version, or truncated payload; IoError if unreadable.
ModelParams load_checkpoint(const std::string& path);

}  // namespace wsseg
