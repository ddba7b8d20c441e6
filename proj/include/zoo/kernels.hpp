#pragma once

#include "zoo/tensor.hpp"

#include <optional>
#include <span>
#include <string_view>
#include <vector>

// Forward-only numeric kernels. All of them are pure and reentrant: inputs
// are never modified and identical inputs give bit-identical outputs.
namespace zoo::kernels {

enum class Padding { Same, Valid };
enum class PoolMode { Max, Avg };
enum class Activation { None, Relu, Tanh, Softmax };

std::string_view padding_name(Padding p);
std::string_view pool_mode_name(PoolMode m);
std::string_view activation_name(Activation a);
Padding parse_padding(std::string_view s);
PoolMode parse_pool_mode(std::string_view s);
Activation parse_activation(std::string_view s);

struct Stride {
    std::int64_t h = 1;
    std::int64_t w = 1;
};

struct ConvSpec {
    Stride stride;
    Padding padding = Padding::Valid;
};

/// Output extent and leading pad along one spatial axis.
///
/// SAME: out = ceil(in / stride); the total pad max((out-1)*stride + k - in, 0)
/// is split with the extra cell on the trailing (bottom/right) side.
/// VALID: out = floor((in - k) / stride) + 1, which must be >= 1.
struct AxisWindow {
    std::int64_t out = 0;
    std::int64_t pad_before = 0;
};
/// Throws DimensionError mentioning `axis_name` when the window does not fit.
AxisWindow window_extent(std::int64_t in, std::int64_t k, std::int64_t stride, Padding padding,
                         std::string_view axis_name);

/// NCHW cross-correlation. `kernel` is [O, C, kh, kw]; `bias`, when given, is [O].
Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor* bias, const ConvSpec& spec);

struct PoolSpec {
    std::int64_t kh = 2;
    std::int64_t kw = 2;
    Stride stride{2, 2};
    Padding padding = Padding::Valid;
    PoolMode mode = PoolMode::Max;
};

/// AVG divides by the number of window cells inside the unpadded input.
Tensor pool2d(const Tensor& input, const PoolSpec& spec);

/// Pools the whole spatial extent: [N,C,H,W] -> [N,C,1,1].
Tensor global_pool(const Tensor& input, PoolMode mode);

/// x [N, D] (or any rank, flattened to [N, rest]) times W [D, M] plus b [M].
Tensor dense(const Tensor& x, const Tensor& weights, const Tensor* bias);

/// RELU/TANH elementwise; SOFTMAX over the last axis with max subtraction.
Tensor activation(const Tensor& x, Activation kind);

/// Per-channel (axis 1) inference batchnorm. `gamma` may be absent, meaning 1.
Tensor batchnorm_infer(const Tensor& x, const Tensor* gamma, const Tensor& beta, const Tensor& mean,
                       const Tensor& var, float eps);

Tensor concat(std::span<const Tensor> tensors, std::int64_t axis);

/// Inverse of concat: slices `x` along `axis` into pieces of the given extents.
std::vector<Tensor> split(const Tensor& x, std::int64_t axis, std::span<const std::int64_t> sizes);

/// [N, d1, ..., dk] -> [N, d1*...*dk].
Tensor flatten(const Tensor& x);

}  // namespace zoo::kernels
