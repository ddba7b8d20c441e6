#pragma once

// Independent reference implementations used only by tests. Everything here
// is plain nested loops in double precision and shares no code with the
// kernels under test beyond the Tensor container.

#include "zoo/graph.hpp"
#include "zoo/signature.hpp"
#include "zoo/tensor.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace oracle {

struct Array {
    zoo::Shape shape;
    std::vector<double> v;

    static Array of(const zoo::Tensor& t);
    std::size_t size() const { return v.size(); }
};

/// max|a-b| / max|b| (absolute error when b is all zero).
double rel_err(const zoo::Tensor& got, const Array& want);
double rel_err(const zoo::Tensor& got, const zoo::Tensor& want);

Array conv2d(const Array& x, const Array& k, const Array* bias, std::int64_t sh, std::int64_t sw, bool same);
Array pool2d(const Array& x, std::int64_t kh, std::int64_t kw, std::int64_t sh, std::int64_t sw, bool same,
             bool max);
Array global_pool(const Array& x, bool max);
Array dense(const Array& x, const Array& w, const Array* bias);
Array batchnorm(const Array& x, const Array* gamma, const Array& beta, const Array& mean, const Array& var,
                double eps);
Array concat(const std::vector<Array>& xs, std::int64_t axis);
Array relu(const Array& x);
Array tanh(const Array& x);
Array softmax(const Array& x);

/// Evaluates a bound graph by recursive descent from its outputs.
std::vector<Array> interpret(const zoo::Graph& graph, const std::map<std::string, zoo::Tensor>& inputs);

/// Closed-form per-layer parameter tables for the three reference models.
struct LayerCount {
    std::string what;
    std::int64_t params;
};
std::vector<LayerCount> lenet5_layers();
std::vector<LayerCount> vgg16_layers();
std::vector<LayerCount> inceptionv3_layers();
std::int64_t total(const std::vector<LayerCount>& layers);

/// Brute-force compatibility: for every port pair, some concrete tensor type
/// (dtype, tag, dims drawn from a small universe containing every value the
/// two patterns mention) satisfies both patterns.
bool compatible(const zoo::TypeSignature& producer, const zoo::TypeSignature& consumer);

}  // namespace oracle
