#include "zoo/kernels.hpp"

#include "zoo/error.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace zoo::kernels {
namespace {

using RowMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using MatrixMap = Eigen::Map<RowMatrix>;

std::string axis_label(std::int64_t axis) { return "axis " + std::to_string(axis); }

void require_rank(const Tensor& t, std::int64_t rank, std::string_view what) {
    if (t.empty()) throw DimensionError(std::string(what) + " is empty");
    if (t.rank() != rank)
        throw DimensionError(std::string(what) + " must have rank " + std::to_string(rank) + ", got shape " +
                             shape_to_string(t.shape()));
}

void require_vector(const Tensor& t, std::int64_t length, std::string_view what) {
    if (t.rank() != 1 || t.dim(0) != length)
        throw ParameterError(std::string(what) + " must have shape " + std::to_string(length) + ", got " +
                             shape_to_string(t.shape()));
}

// Unfolds one image [C,H,W] into a [C*kh*kw, OH*OW] matrix.
void im2col(const float* image, std::int64_t channels, std::int64_t height, std::int64_t width,
            std::int64_t kh, std::int64_t kw, const AxisWindow& wy, const AxisWindow& wx, const Stride& stride,
            float* col) {
    const std::int64_t plane = wy.out * wx.out;
    for (std::int64_t c = 0; c < channels; ++c) {
        const float* src = image + c * height * width;
        for (std::int64_t i = 0; i < kh; ++i) {
            for (std::int64_t j = 0; j < kw; ++j) {
                float* dst = col + ((c * kh + i) * kw + j) * plane;
                for (std::int64_t oy = 0; oy < wy.out; ++oy) {
                    const std::int64_t y = oy * stride.h - wy.pad_before + i;
                    float* row = dst + oy * wx.out;
                    if (y < 0 || y >= height) {
                        std::fill(row, row + wx.out, 0.0f);
                        continue;
                    }
                    const float* src_row = src + y * width;
                    for (std::int64_t ox = 0; ox < wx.out; ++ox) {
                        const std::int64_t x = ox * stride.w - wx.pad_before + j;
                        row[ox] = (x >= 0 && x < width) ? src_row[x] : 0.0f;
                    }
                }
            }
        }
    }
}

}  // namespace

std::string_view padding_name(Padding p) { return p == Padding::Same ? "SAME" : "VALID"; }
std::string_view pool_mode_name(PoolMode m) { return m == PoolMode::Max ? "MAX" : "AVG"; }

std::string_view activation_name(Activation a) {
    switch (a) {
        case Activation::None: return "NONE";
        case Activation::Relu: return "RELU";
        case Activation::Tanh: return "TANH";
        case Activation::Softmax: return "SOFTMAX";
    }
    return "NONE";
}

Padding parse_padding(std::string_view s) {
    if (s == "SAME") return Padding::Same;
    if (s == "VALID") return Padding::Valid;
    throw ParseError("", "unknown padding '" + std::string(s) + "'");
}

PoolMode parse_pool_mode(std::string_view s) {
    if (s == "MAX") return PoolMode::Max;
    if (s == "AVG") return PoolMode::Avg;
    throw ParseError("", "unknown pool mode '" + std::string(s) + "'");
}

Activation parse_activation(std::string_view s) {
    if (s == "NONE") return Activation::None;
    if (s == "RELU") return Activation::Relu;
    if (s == "TANH") return Activation::Tanh;
    if (s == "SOFTMAX") return Activation::Softmax;
    throw ParseError("", "unknown activation '" + std::string(s) + "'");
}

AxisWindow window_extent(std::int64_t in, std::int64_t k, std::int64_t stride, Padding padding,
                         std::string_view axis_name) {
    if (k < 1) throw DimensionError(std::string(axis_name) + ": window extent must be >= 1");
    if (stride < 1) throw DimensionError(std::string(axis_name) + ": stride must be >= 1");
    AxisWindow w;
    if (padding == Padding::Same) {
        w.out = (in + stride - 1) / stride;
        const std::int64_t total = std::max<std::int64_t>((w.out - 1) * stride + k - in, 0);
        w.pad_before = total / 2;
    } else {
        if (k > in)
            throw DimensionError(std::string(axis_name) + ": window " + std::to_string(k) +
                                 " exceeds input extent " + std::to_string(in) + " under VALID padding");
        w.out = (in - k) / stride + 1;
    }
    return w;
}

Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor* bias, const ConvSpec& spec) {
    require_rank(input, 4, "conv2d input");
    require_rank(kernel, 4, "conv2d kernel");
    const auto n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
    const auto o = kernel.dim(0), kh = kernel.dim(2), kw = kernel.dim(3);
    if (kernel.dim(1) != c)
        throw DimensionError("conv2d " + axis_label(1) + " (channels): kernel expects " +
                             std::to_string(kernel.dim(1)) + ", input has " + std::to_string(c));
    if (bias) require_vector(*bias, o, "conv2d bias");

    const auto wy = window_extent(h, kh, spec.stride.h, spec.padding, "conv2d axis 2 (height)");
    const auto wx = window_extent(w, kw, spec.stride.w, spec.padding, "conv2d axis 3 (width)");
    const std::int64_t plane = wy.out * wx.out;
    const std::int64_t depth = c * kh * kw;

    std::vector<float> out(static_cast<std::size_t>(n * o * plane));
    const bool direct = kh == 1 && kw == 1 && spec.stride.h == 1 && spec.stride.w == 1;
    std::vector<float> col(direct ? 0 : static_cast<std::size_t>(depth * plane));

    ConstMatrixMap weights(kernel.data().data(), o, depth);
    for (std::int64_t b = 0; b < n; ++b) {
        const float* image = input.data().data() + b * c * h * w;
        const float* columns = image;
        if (!direct) {
            im2col(image, c, h, w, kh, kw, wy, wx, spec.stride, col.data());
            columns = col.data();
        }
        MatrixMap result(out.data() + b * o * plane, o, plane);
        result.noalias() = weights * ConstMatrixMap(columns, depth, plane);
        if (bias) {
            for (std::int64_t oc = 0; oc < o; ++oc) result.row(oc).array() += (*bias)[oc];
        }
    }
    return Tensor({n, o, wy.out, wx.out}, std::move(out));
}

Tensor pool2d(const Tensor& input, const PoolSpec& spec) {
    require_rank(input, 4, "pool2d input");
    const auto n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
    const auto wy = window_extent(h, spec.kh, spec.stride.h, spec.padding, "pool2d axis 2 (height)");
    const auto wx = window_extent(w, spec.kw, spec.stride.w, spec.padding, "pool2d axis 3 (width)");

    std::vector<float> out(static_cast<std::size_t>(n * c * wy.out * wx.out));
    const float* src = input.data().data();
    float* dst = out.data();
    for (std::int64_t plane = 0; plane < n * c; ++plane) {
        const float* img = src + plane * h * w;
        for (std::int64_t oy = 0; oy < wy.out; ++oy) {
            const std::int64_t y0 = oy * spec.stride.h - wy.pad_before;
            const std::int64_t ys = std::max<std::int64_t>(y0, 0);
            const std::int64_t ye = std::min<std::int64_t>(y0 + spec.kh, h);
            for (std::int64_t ox = 0; ox < wx.out; ++ox) {
                const std::int64_t x0 = ox * spec.stride.w - wx.pad_before;
                const std::int64_t xs = std::max<std::int64_t>(x0, 0);
                const std::int64_t xe = std::min<std::int64_t>(x0 + spec.kw, w);
                float acc = spec.mode == PoolMode::Max ? -std::numeric_limits<float>::infinity() : 0.0f;
                for (std::int64_t y = ys; y < ye; ++y) {
                    for (std::int64_t x = xs; x < xe; ++x) {
                        const float v = img[y * w + x];
                        if (spec.mode == PoolMode::Max)
                            acc = std::max(acc, v);
                        else
                            acc += v;
                    }
                }
                if (spec.mode == PoolMode::Avg) acc /= static_cast<float>((ye - ys) * (xe - xs));
                *dst++ = acc;
            }
        }
    }
    return Tensor({n, c, wy.out, wx.out}, std::move(out));
}

Tensor global_pool(const Tensor& input, PoolMode mode) {
    require_rank(input, 4, "global pool input");
    PoolSpec spec;
    spec.kh = input.dim(2);
    spec.kw = input.dim(3);
    spec.stride = {1, 1};
    spec.padding = Padding::Valid;
    spec.mode = mode;
    return pool2d(input, spec);
}

Tensor dense(const Tensor& x, const Tensor& weights, const Tensor* bias) {
    if (x.empty()) throw DimensionError("dense input is empty");
    require_rank(weights, 2, "dense weights");
    const auto n = x.dim(0);
    const auto d = x.size() / n;
    const auto m = weights.dim(1);
    if (weights.dim(0) != d)
        throw DimensionError("dense " + axis_label(1) + " (features): weights expect " +
                             std::to_string(weights.dim(0)) + ", input has " + std::to_string(d));
    if (bias) require_vector(*bias, m, "dense bias");

    std::vector<float> out(static_cast<std::size_t>(n * m));
    MatrixMap result(out.data(), n, m);
    result.noalias() = ConstMatrixMap(x.data().data(), n, d) * ConstMatrixMap(weights.data().data(), d, m);
    if (bias) {
        for (std::int64_t r = 0; r < n; ++r)
            for (std::int64_t j = 0; j < m; ++j) result(r, j) += (*bias)[j];
    }
    return Tensor({n, m}, std::move(out));
}

Tensor activation(const Tensor& x, Activation kind) {
    std::vector<float> out(x.data().begin(), x.data().end());
    switch (kind) {
        case Activation::None:
            break;
        case Activation::Relu:
            for (auto& v : out) v = v > 0.0f ? v : 0.0f;
            break;
        case Activation::Tanh:
            for (auto& v : out) v = std::tanh(v);
            break;
        case Activation::Softmax: {
            const auto last = x.shape().back();
            for (std::size_t row = 0; row < out.size(); row += static_cast<std::size_t>(last)) {
                float* r = out.data() + row;
                const float peak = *std::max_element(r, r + last);
                double sum = 0.0;
                for (std::int64_t j = 0; j < last; ++j) sum += std::exp(static_cast<double>(r[j]) - peak);
                for (std::int64_t j = 0; j < last; ++j)
                    r[j] = static_cast<float>(std::exp(static_cast<double>(r[j]) - peak) / sum);
            }
            break;
        }
    }
    return Tensor(x.shape(), std::move(out));
}

Tensor batchnorm_infer(const Tensor& x, const Tensor* gamma, const Tensor& beta, const Tensor& mean,
                       const Tensor& var, float eps) {
    if (x.empty() || x.rank() < 2) throw DimensionError("batchnorm input must have rank >= 2");
    const auto channels = x.dim(1);
    if (gamma) require_vector(*gamma, channels, "batchnorm gamma");
    require_vector(beta, channels, "batchnorm beta");
    require_vector(mean, channels, "batchnorm mean");
    require_vector(var, channels, "batchnorm var");
    if (!(eps >= 0.0f)) throw ParameterError("batchnorm eps must be non-negative");

    std::vector<float> scale(static_cast<std::size_t>(channels));
    for (std::int64_t ch = 0; ch < channels; ++ch) {
        if (var[ch] < 0.0f)
            throw ParameterError("batchnorm var is negative at channel " + std::to_string(ch));
        const double denom = std::sqrt(static_cast<double>(var[ch]) + eps);
        if (denom == 0.0)
            throw ParameterError("batchnorm var + eps is zero at channel " + std::to_string(ch));
        scale[ch] = static_cast<float>((gamma ? (*gamma)[ch] : 1.0) / denom);
    }

    const auto inner = x.size() / (x.dim(0) * channels);
    std::vector<float> out(static_cast<std::size_t>(x.size()));
    const float* src = x.data().data();
    for (std::int64_t b = 0; b < x.dim(0); ++b) {
        for (std::int64_t ch = 0; ch < channels; ++ch) {
            const std::int64_t base = (b * channels + ch) * inner;
            const float mu = mean[ch], s = scale[ch], shift = beta[ch];
            for (std::int64_t i = 0; i < inner; ++i) out[base + i] = (src[base + i] - mu) * s + shift;
        }
    }
    return Tensor(x.shape(), std::move(out));
}

Tensor concat(std::span<const Tensor> tensors, std::int64_t axis) {
    if (tensors.empty()) throw DimensionError("concat needs at least one tensor");
    const Shape& first = tensors.front().shape();
    const auto rank = static_cast<std::int64_t>(first.size());
    if (axis < 0 || axis >= rank)
        throw DimensionError("concat " + axis_label(axis) + " out of range for rank " + std::to_string(rank));

    Shape out_shape = first;
    out_shape[axis] = 0;
    for (std::size_t t = 0; t < tensors.size(); ++t) {
        const Shape& s = tensors[t].shape();
        if (static_cast<std::int64_t>(s.size()) != rank)
            throw DimensionError("concat input " + std::to_string(t) + " has rank " + std::to_string(s.size()) +
                                 ", expected " + std::to_string(rank));
        for (std::int64_t a = 0; a < rank; ++a) {
            if (a != axis && s[a] != first[a])
                throw DimensionError("concat input " + std::to_string(t) + " mismatches on " + axis_label(a) +
                                     ": " + std::to_string(s[a]) + " vs " + std::to_string(first[a]));
        }
        out_shape[axis] += s[axis];
    }

    std::int64_t outer = 1, inner = 1;
    for (std::int64_t a = 0; a < axis; ++a) outer *= first[a];
    for (std::int64_t a = axis + 1; a < rank; ++a) inner *= first[a];

    std::vector<float> out(static_cast<std::size_t>(element_count(out_shape)));
    const std::int64_t out_block = out_shape[axis] * inner;
    std::int64_t offset = 0;
    for (const auto& t : tensors) {
        const std::int64_t block = t.dim(axis) * inner;
        const float* src = t.data().data();
        for (std::int64_t o = 0; o < outer; ++o)
            std::copy_n(src + o * block, block, out.data() + o * out_block + offset);
        offset += block;
    }
    return Tensor(std::move(out_shape), std::move(out));
}

std::vector<Tensor> split(const Tensor& x, std::int64_t axis, std::span<const std::int64_t> sizes) {
    if (axis < 0 || axis >= x.rank())
        throw DimensionError("split " + axis_label(axis) + " out of range for rank " + std::to_string(x.rank()));
    std::int64_t total = 0;
    for (auto s : sizes) total += s;
    if (total != x.dim(axis))
        throw DimensionError("split sizes sum to " + std::to_string(total) + " but " + axis_label(axis) +
                             " has extent " + std::to_string(x.dim(axis)));

    std::int64_t outer = 1, inner = 1;
    for (std::int64_t a = 0; a < axis; ++a) outer *= x.dim(a);
    for (std::int64_t a = axis + 1; a < x.rank(); ++a) inner *= x.dim(a);
    const std::int64_t in_block = x.dim(axis) * inner;

    std::vector<Tensor> pieces;
    std::int64_t offset = 0;
    for (auto s : sizes) {
        Shape shape = x.shape();
        shape[axis] = s;
        std::vector<float> buf(static_cast<std::size_t>(outer * s * inner));
        for (std::int64_t o = 0; o < outer; ++o)
            std::copy_n(x.data().data() + o * in_block + offset, s * inner, buf.data() + o * s * inner);
        pieces.emplace_back(std::move(shape), std::move(buf));
        offset += s * inner;
    }
    return pieces;
}

Tensor flatten(const Tensor& x) {
    if (x.empty()) throw DimensionError("flatten input is empty");
    return x.reshaped({x.dim(0), x.size() / x.dim(0)});
}

}  // namespace zoo::kernels
