#include "zoo/tensor.hpp"

#include "zoo/error.hpp"

#include <cstring>

namespace zoo {

std::string_view dtype_name(DType dt) {
    return dt == DType::F32 ? "f32" : "f64";
}

DType parse_dtype(std::string_view text) {
    if (text == "f32") return DType::F32;
    if (text == "f64") return DType::F64;
    throw ParseError("", "unknown dtype '" + std::string(text) + "'");
}

std::int64_t element_count(const Shape& shape) {
    std::int64_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

std::string shape_to_string(const Shape& shape) {
    std::string out;
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out += 'x';
        out += std::to_string(shape[i]);
    }
    return out;
}

void check_shape(const Shape& shape) {
    if (shape.empty() || shape.size() > 4)
        throw DimensionError("tensor rank must be in 1..4, got " + std::to_string(shape.size()));
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (shape[i] <= 0)
            throw DimensionError("axis " + std::to_string(i) + " has non-positive extent " +
                                 std::to_string(shape[i]));
    }
}

Tensor::Tensor(Shape shape, std::vector<float> values) : shape_(std::move(shape)) {
    check_shape(shape_);
    if (static_cast<std::int64_t>(values.size()) != element_count(shape_))
        throw DimensionError("buffer holds " + std::to_string(values.size()) + " elements but shape " +
                             shape_to_string(shape_) + " needs " + std::to_string(element_count(shape_)));
    data_ = std::make_shared<const std::vector<float>>(std::move(values));
}

Tensor Tensor::filled(Shape shape, float value) {
    check_shape(shape);
    auto n = static_cast<std::size_t>(element_count(shape));
    return Tensor(std::move(shape), std::vector<float>(n, value));
}

Tensor Tensor::reshaped(Shape shape) const {
    check_shape(shape);
    if (element_count(shape) != size())
        throw DimensionError("cannot reshape " + shape_to_string(shape_) + " to " + shape_to_string(shape));
    Tensor out;
    out.shape_ = std::move(shape);
    out.data_ = data_;
    return out;
}

bool Tensor::bit_equal(const Tensor& other) const {
    if (shape_ != other.shape_) return false;
    if (data_ == other.data_) return true;
    if (!data_ || !other.data_) return false;
    return std::memcmp(data_->data(), other.data_->data(), data_->size() * sizeof(float)) == 0;
}

}  // namespace zoo
