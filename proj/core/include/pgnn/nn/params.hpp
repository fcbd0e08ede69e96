#pragma once

#include <memory>
#include <string>
#include <vector>

#include "pgnn/nn/tensor.hpp"

namespace pgnn::nn {

template <typename T>
struct Param {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;
  bool trainable = true;   // false for running statistics
  bool has_grad = false;   // set by backward passes, cleared by zero_grad
};

/// Named tensors of one model. Trainable parameters carry a same-shaped
/// gradient slot; buffers (normalization running statistics) do not train
/// but are serialized alongside. Addresses of stored Params are stable.
template <typename T>
class ParamStore {
 public:
  ParamStore() = default;
  ParamStore(const ParamStore&) = delete;
  ParamStore& operator=(const ParamStore&) = delete;
  ParamStore(ParamStore&&) noexcept = default;
  ParamStore& operator=(ParamStore&&) noexcept = default;

  /// Throws ContractError on a duplicate name.
  Param<T>& add(const std::string& name, Shape shape, T fill = T(0));
  Param<T>& add_buffer(const std::string& name, Shape shape, T fill = T(0));

  Param<T>* find(const std::string& name);
  const Param<T>* find(const std::string& name) const;
  Param<T>& at(const std::string& name);

  std::size_t size() const noexcept { return params_.size(); }
  Param<T>& operator[](std::size_t i) { return *params_[i]; }
  const Param<T>& operator[](std::size_t i) const { return *params_[i]; }

  /// Number of scalar entries in trainable parameters.
  std::size_t trainable_count() const;
  std::size_t buffer_count() const;

  void zero_grad();

 private:
  Param<T>& insert(const std::string& name, Shape shape, T fill, bool trainable);

  std::vector<std::unique_ptr<Param<T>>> params_;
};

extern template class ParamStore<float>;
extern template class ParamStore<double>;

}  // namespace pgnn::nn
