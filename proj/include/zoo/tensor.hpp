#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace zoo {

enum class DType : std::uint8_t { F32 = 0, F64 = 1 };

std::string_view dtype_name(DType dt);
/// Parses "f32" / "f64"; throws ParseError otherwise.
DType parse_dtype(std::string_view text);

/// Dimensions of a dense tensor. Every dim is positive and rank is 1..4.
using Shape = std::vector<std::int64_t>;

std::int64_t element_count(const Shape& shape);
/// Renders `d1xd2x...`, the format used in profile CSVs.
std::string shape_to_string(const Shape& shape);

/// Throws DimensionError unless `shape` is a legal tensor shape.
void check_shape(const Shape& shape);

/// Immutable dense f32 tensor, row-major. Copies share the buffer.
class Tensor {
public:
    Tensor() = default;
    Tensor(Shape shape, std::vector<float> values);

    static Tensor filled(Shape shape, float value);

    const Shape& shape() const noexcept { return shape_; }
    std::int64_t rank() const noexcept { return static_cast<std::int64_t>(shape_.size()); }
    std::int64_t dim(std::size_t axis) const { return shape_.at(axis); }
    std::int64_t size() const noexcept { return data_ ? static_cast<std::int64_t>(data_->size()) : 0; }
    DType dtype() const noexcept { return DType::F32; }
    bool empty() const noexcept { return !data_; }

    std::span<const float> data() const noexcept {
        return data_ ? std::span<const float>(*data_) : std::span<const float>();
    }
    float operator[](std::size_t i) const { return (*data_)[i]; }

    /// Same buffer viewed under a different shape of equal element count.
    Tensor reshaped(Shape shape) const;

    /// Bitwise equality of shape and payload.
    bool bit_equal(const Tensor& other) const;

private:
    Shape shape_;
    std::shared_ptr<const std::vector<float>> data_;
};

}  // namespace zoo
