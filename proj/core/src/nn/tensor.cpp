#include "pgnn/nn/tensor.hpp"

#include <algorithm>

#include "pgnn/errors.hpp"

namespace pgnn::nn {

std::string Shape::str() const {
  return "(" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," +
         std::to_string(w) + ")";
}

void require_same_shape(const Shape& a, const Shape& b, const char* what) {
  if (a != b) throw DimensionError(std::string(what) + ": shape " + a.str() + " vs " + b.str());
}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> data) : shape_(shape), data_(std::move(data)) {
  if (data_.size() != shape_.count()) throw DimensionError("tensor data does not match shape " + shape_.str());
}

template <typename T>
void Tensor<T>::fill(T value) {
  std::fill(data_.begin(), data_.end(), value);
}

template <typename T>
Tensor<T> Tensor<T>::reshaped(Shape shape) const {
  if (shape.count() != shape_.count()) {
    throw DimensionError("cannot reshape " + shape_.str() + " to " + shape.str());
  }
  return Tensor(shape, data_);
}

template <typename T>
Tensor<T> Tensor<T>::gather(std::span<const int> samples) const {
  Shape s = shape_;
  s.n = static_cast<int>(samples.size());
  Tensor out(s);
  const std::size_t stride = shape_.sample();
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const int idx = samples[k];
    if (idx < 0 || idx >= shape_.n) throw DimensionError("gather index out of range");
    std::copy_n(sample_ptr(idx), stride, out.data() + k * stride);
  }
  return out;
}

template class Tensor<float>;
template class Tensor<double>;

}  // namespace pgnn::nn
