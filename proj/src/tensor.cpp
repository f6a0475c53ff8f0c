#include "snnport/tensor.hpp"

#include <cmath>
#include <sstream>

namespace snnport {

std::size_t shape_size(const Shape& shape)
{
    if (shape.empty()) {
        return 0;
    }
    std::size_t n = 1;
    for (auto d : shape) {
        n *= d;
    }
    return n;
}

std::string shape_string(const Shape& shape)
{
    std::ostringstream out;
    out << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        out << (i ? "," : "") << shape[i];
    }
    out << ']';
    return out.str();
}

Tensor::Tensor(Shape shape) : shape_(std::move(shape)), data_(shape_size(shape_), 0.0f)
{
    for (auto d : shape_) {
        if (d == 0) {
            throw Error("tensor dimension must be positive, got " + shape_string(shape_));
        }
    }
}

Tensor::Tensor(Shape shape, std::vector<float> data) : shape_(std::move(shape)), data_(std::move(data))
{
    for (auto d : shape_) {
        if (d == 0) {
            throw Error("tensor dimension must be positive, got " + shape_string(shape_));
        }
    }
    if (shape_size(shape_) != data_.size()) {
        throw Error("tensor shape " + shape_string(shape_) + " does not match " +
                    std::to_string(data_.size()) + " values");
    }
    for (std::size_t i = 0; i < data_.size(); ++i) {
        if (!std::isfinite(data_[i])) {
            throw Error("non-finite tensor value at index " + std::to_string(i));
        }
    }
}

Tensor Tensor::reshaped(Shape shape) const
{
    if (shape_size(shape) != data_.size()) {
        throw Error("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
    }
    Tensor out;
    out.shape_ = std::move(shape);
    out.data_ = data_;
    return out;
}

}  // namespace snnport
