#include "wsseg/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include <Eigen/Core>
#include <fmt/core.h>

#include "wsseg/errors.hpp"

namespace wsseg {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

int conv_out_extent(int in, int kernel, int stride) {
    const int pad = (kernel - 1) / 2;
    return (in + 2 * pad - kernel) / stride + 1;
}

// Resizes in place, keeping capacity so repeated passes do not reallocate.
void reshape(FeatureMap& f, int c, int h, int w) {
    f.channels = c;
    f.height = h;
    f.width = w;
    f.data.assign(std::size_t(c) * h * w, 0.0);
}

void upsample2(const FeatureMap& in, FeatureMap& out) {
    reshape(out, in.channels, in.height * 2, in.width * 2);
    for (int c = 0; c < in.channels; ++c) {
        const double* src = in.data.data() + c * in.plane();
        double* dst = out.data.data() + c * out.plane();
        for (int y = 0; y < out.height; ++y) {
            const double* row = src + (y / 2) * in.width;
            double* drow = dst + y * out.width;
            for (int x = 0; x < out.width; ++x) drow[x] = row[x / 2];
        }
    }
}

// Adjoint of upsample2: each input cell collects its 2x2 block.
void upsample2_backward(const FeatureMap& d_up, FeatureMap& d_in) {
    reshape(d_in, d_up.channels, d_up.height / 2, d_up.width / 2);
    for (int c = 0; c < d_up.channels; ++c) {
        const double* src = d_up.data.data() + c * d_up.plane();
        double* dst = d_in.data.data() + c * d_in.plane();
        for (int y = 0; y < d_up.height; ++y) {
            const double* row = src + y * d_up.width;
            double* drow = dst + (y / 2) * d_in.width;
            for (int x = 0; x < d_up.width; ++x) drow[x / 2] += row[x];
        }
    }
}

void im2col(const FeatureMap& in, int kernel, int stride, int out_h, int out_w, AlignedBuffer& cols) {
    const int pad = (kernel - 1) / 2;
    const std::size_t n = std::size_t(out_h) * out_w;
    cols.assign(std::size_t(in.channels) * kernel * kernel * n, 0.0);
    std::size_t row = 0;
    for (int c = 0; c < in.channels; ++c) {
        const double* src = in.data.data() + c * in.plane();
        for (int ky = 0; ky < kernel; ++ky) {
            for (int kx = 0; kx < kernel; ++kx, ++row) {
                double* dst = cols.data() + row * n;
                for (int oy = 0; oy < out_h; ++oy) {
                    const int iy = oy * stride + ky - pad;
                    if (iy < 0 || iy >= in.height) continue;
                    const double* srow = src + iy * in.width;
                    double* drow = dst + oy * out_w;
                    for (int ox = 0; ox < out_w; ++ox) {
                        const int ix = ox * stride + kx - pad;
                        if (ix >= 0 && ix < in.width) drow[ox] = srow[ix];
                    }
                }
            }
        }
    }
}

void col2im_add(const AlignedBuffer& cols, int kernel, int stride, int out_h, int out_w, FeatureMap& d_in) {
    const int pad = (kernel - 1) / 2;
    const std::size_t n = std::size_t(out_h) * out_w;
    std::size_t row = 0;
    for (int c = 0; c < d_in.channels; ++c) {
        double* dst = d_in.data.data() + c * d_in.plane();
        for (int ky = 0; ky < kernel; ++ky) {
            for (int kx = 0; kx < kernel; ++kx, ++row) {
                const double* src = cols.data() + row * n;
                for (int oy = 0; oy < out_h; ++oy) {
                    const int iy = oy * stride + ky - pad;
                    if (iy < 0 || iy >= d_in.height) continue;
                    double* drow = dst + iy * d_in.width;
                    const double* srow = src + oy * out_w;
                    for (int ox = 0; ox < out_w; ++ox) {
                        const int ix = ox * stride + kx - pad;
                        if (ix >= 0 && ix < d_in.width) drow[ix] += srow[ox];
                    }
                }
            }
        }
    }
}

struct BackwardScratch {
    std::vector<FeatureMap> d_out;
    AlignedBuffer dcols;
    FeatureMap d_input;
    FeatureMap d_down;
};

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

}  // namespace

void ModelConfig::validate() const {
    if (input_size.height < 4 || input_size.width < 4 || input_size.height % 4 != 0 || input_size.width % 4 != 0) {
        throw InvalidConfig(fmt::format("model input size {}x{} must have both extents divisible by 4", input_size.height,
                                        input_size.width));
    }
    if (base_channels < 1) throw InvalidConfig(fmt::format("base_channels must be >= 1, got {}", base_channels));
}

std::vector<LayerSpec> architecture(int c) {
    return {
        {"enc1", 1, c, 3, 1, false, Activation::relu, -1},
        {"enc2", c, 2 * c, 3, 2, false, Activation::relu, 0},
        {"enc3", 2 * c, 4 * c, 3, 2, false, Activation::relu, 1},
        {"dec1", 4 * c, 2 * c, 3, 1, true, Activation::relu, 2},
        {"dec2", 2 * c, c, 3, 1, true, Activation::relu, 3},
        {"seg_head", c, 1, 1, 1, false, Activation::sigmoid, 4},
        {"recon_head", c, 1, 1, 1, false, Activation::sigmoid, 4},
    };
}

ModelParams ModelParams::zeros(const ModelConfig& config) {
    config.validate();
    ModelParams p;
    p.config_ = config;
    p.layers_ = architecture(config.base_channels);
    std::size_t offset = 0;
    for (const LayerSpec& l : p.layers_) {
        const std::size_t wcount = std::size_t(l.out_channels) * l.fan_in();
        p.layout_.push_back({l.name + ".weight", {l.out_channels, l.in_channels, l.kernel, l.kernel}, offset, wcount});
        offset += wcount;
        p.layout_.push_back({l.name + ".bias", {l.out_channels}, offset, std::size_t(l.out_channels)});
        offset += l.out_channels;
    }
    p.values_.assign(offset, 0.0);
    return p;
}

std::span<double> ModelParams::weight(std::size_t layer) {
    const TensorInfo& t = layout_.at(2 * layer);
    return std::span<double>(values_).subspan(t.offset, t.count);
}

std::span<const double> ModelParams::weight(std::size_t layer) const {
    const TensorInfo& t = layout_.at(2 * layer);
    return std::span<const double>(values_).subspan(t.offset, t.count);
}

std::span<double> ModelParams::bias(std::size_t layer) {
    const TensorInfo& t = layout_.at(2 * layer + 1);
    return std::span<double>(values_).subspan(t.offset, t.count);
}

std::span<const double> ModelParams::bias(std::size_t layer) const {
    const TensorInfo& t = layout_.at(2 * layer + 1);
    return std::span<const double>(values_).subspan(t.offset, t.count);
}

std::span<const double> ModelParams::tensor(std::string_view name) const {
    for (const TensorInfo& t : layout_) {
        if (t.name == name) return std::span<const double>(values_).subspan(t.offset, t.count);
    }
    throw std::out_of_range(fmt::format("no parameter tensor named '{}'", name));
}

void ModelParams::restore(std::span<const double> flat) {
    if (flat.size() != values_.size()) {
        throw ShapeMismatch(fmt::format("parameter vector has {} values, model needs {}", flat.size(), values_.size()));
    }
    values_.assign(flat.begin(), flat.end());
}

ModelParams init_params(const ModelConfig& config) {
    ModelParams p = ModelParams::zeros(config);
    std::mt19937_64 rng(config.seed);
    for (std::size_t i = 0; i < p.layers().size(); ++i) {
        std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / p.layers()[i].fan_in()));
        for (double& w : p.weight(i)) w = dist(rng);
    }
    return p;
}

void forward(const ModelParams& params, const Image& image, ForwardTrace& trace) {
    const GridShape shape = params.config().input_size;
    require_same_shape(image.shape(), shape, "forward");

    const auto& layers = params.layers();
    trace.layers.resize(layers.size());

    for (std::size_t li = 0; li < layers.size(); ++li) {
        const LayerSpec& spec = layers[li];
        LayerTrace& lt = trace.layers[li];
        if (spec.input_layer < 0) {
            reshape(lt.input, 1, shape.height, shape.width);
            std::copy(image.values().begin(), image.values().end(), lt.input.data.begin());
        } else if (spec.upsample) {
            upsample2(trace.layers[spec.input_layer].out, lt.input);
        } else {
            lt.input = trace.layers[spec.input_layer].out;
        }

        const int oh = conv_out_extent(lt.input.height, spec.kernel, spec.stride);
        const int ow = conv_out_extent(lt.input.width, spec.kernel, spec.stride);
        const std::size_t n = std::size_t(oh) * ow;
        const int k = spec.fan_in();
        im2col(lt.input, spec.kernel, spec.stride, oh, ow, lt.columns);

        reshape(lt.pre, spec.out_channels, oh, ow);
        ConstMatrixMap w(params.weight(li).data(), spec.out_channels, k);
        ConstMatrixMap cols(lt.columns.data(), k, static_cast<Eigen::Index>(n));
        MatrixMap z(lt.pre.data.data(), spec.out_channels, static_cast<Eigen::Index>(n));
        z.noalias() = w * cols;
        const auto b = params.bias(li);
        for (int o = 0; o < spec.out_channels; ++o) z.row(o).array() += b[o];

        lt.out = lt.pre;
        for (double& v : lt.out.data) v = spec.activation == Activation::relu ? (v > 0.0 ? v : 0.0) : sigmoid(v);
    }

    const AlignedBuffer& seg = trace.layers[kSegHead].out.data;
    const AlignedBuffer& rec = trace.layers[kReconHead].out.data;
    const auto finite = [](const AlignedBuffer& b) { return std::all_of(b.begin(), b.end(), [](double v) { return std::isfinite(v); }); };
    if (!finite(seg) || !finite(rec)) throw NonFiniteOutput("model output is not finite");
    trace.pred = SoftMask(shape, std::vector<double>(seg.begin(), seg.end()));
    trace.recon = Image(shape, std::vector<double>(rec.begin(), rec.end()));
}

ForwardTrace forward(const ModelParams& params, const Image& image) {
    ForwardTrace trace;
    forward(params, image, trace);
    return trace;
}

void backward(const ModelParams& params, const ForwardTrace& trace, const RealGrid& d_pred, const RealGrid& d_recon, ParamGrads& grads) {
    const GridShape shape = params.config().input_size;
    require_same_shape(d_pred.shape(), shape, "backward d_pred");
    require_same_shape(d_recon.shape(), shape, "backward d_recon");

    const auto& layers = params.layers();
    if (trace.layers.size() != layers.size()) throw ShapeMismatch("backward: trace does not come from this architecture");
    if (!(grads.config() == params.config()) || grads.size() != params.size()) grads = ModelParams::zeros(params.config());

    // Per-thread scratch, reused across calls.
    thread_local BackwardScratch scratch;
    auto& d_out = scratch.d_out;  // d loss / d output of each layer, filled in reverse order
    d_out.resize(layers.size());
    for (std::size_t li = 0; li < layers.size(); ++li) {
        const FeatureMap& o = trace.layers[li].out;
        reshape(d_out[li], o.channels, o.height, o.width);
    }
    std::copy(d_pred.values().begin(), d_pred.values().end(), d_out[kSegHead].data.begin());
    std::copy(d_recon.values().begin(), d_recon.values().end(), d_out[kReconHead].data.begin());

    for (std::size_t li = layers.size(); li-- > 0;) {
        const LayerSpec& spec = layers[li];
        const LayerTrace& lt = trace.layers[li];
        const std::size_t n = lt.pre.plane();
        const int k = spec.fan_in();

        AlignedBuffer& dz = d_out[li].data;
        for (std::size_t i = 0; i < dz.size(); ++i) {
            if (spec.activation == Activation::relu) {
                if (!(lt.pre.data[i] > 0.0)) dz[i] = 0.0;
            } else {
                const double s = lt.out.data[i];
                dz[i] *= s * (1.0 - s);
            }
        }

        ConstMatrixMap dz_m(dz.data(), spec.out_channels, static_cast<Eigen::Index>(n));
        ConstMatrixMap cols(lt.columns.data(), k, static_cast<Eigen::Index>(n));
        MatrixMap dw(grads.weight(li).data(), spec.out_channels, k);
        dw.noalias() = dz_m * cols.transpose();
        auto db = grads.bias(li);
        for (int o = 0; o < spec.out_channels; ++o) db[o] = dz_m.row(o).sum();

        if (spec.input_layer < 0) continue;

        ConstMatrixMap w(params.weight(li).data(), spec.out_channels, k);
        scratch.dcols.resize(std::size_t(k) * n);
        MatrixMap dcols_m(scratch.dcols.data(), k, static_cast<Eigen::Index>(n));
        dcols_m.noalias() = w.transpose() * dz_m;

        reshape(scratch.d_input, lt.input.channels, lt.input.height, lt.input.width);
        col2im_add(scratch.dcols, spec.kernel, spec.stride, lt.pre.height, lt.pre.width, scratch.d_input);
        const FeatureMap* d_src = &scratch.d_input;
        if (spec.upsample) {
            upsample2_backward(scratch.d_input, scratch.d_down);
            d_src = &scratch.d_down;
        }

        AlignedBuffer& target = d_out[spec.input_layer].data;
        for (std::size_t i = 0; i < target.size(); ++i) target[i] += d_src->data[i];
    }
}

ParamGrads backward(const ModelParams& params, const ForwardTrace& trace, const RealGrid& d_pred, const RealGrid& d_recon) {
    ParamGrads grads = ModelParams::zeros(params.config());
    backward(params, trace, d_pred, d_recon, grads);
    return grads;
}

}  // namespace wsseg
