#include "pgnn/nn/params.hpp"

#include "pgnn/errors.hpp"

namespace pgnn::nn {

template <typename T>
Param<T>& ParamStore<T>::insert(const std::string& name, Shape shape, T fill, bool trainable) {
  if (find(name)) throw ContractError("duplicate parameter name: " + name);
  auto p = std::make_unique<Param<T>>();
  p->name = name;
  p->value = Tensor<T>(shape, fill);
  if (trainable) p->grad = Tensor<T>(shape);
  p->trainable = trainable;
  params_.push_back(std::move(p));
  return *params_.back();
}

template <typename T>
Param<T>& ParamStore<T>::add(const std::string& name, Shape shape, T fill) {
  return insert(name, shape, fill, true);
}

template <typename T>
Param<T>& ParamStore<T>::add_buffer(const std::string& name, Shape shape, T fill) {
  return insert(name, shape, fill, false);
}

template <typename T>
Param<T>* ParamStore<T>::find(const std::string& name) {
  for (auto& p : params_) {
    if (p->name == name) return p.get();
  }
  return nullptr;
}

template <typename T>
const Param<T>* ParamStore<T>::find(const std::string& name) const {
  for (const auto& p : params_) {
    if (p->name == name) return p.get();
  }
  return nullptr;
}

template <typename T>
Param<T>& ParamStore<T>::at(const std::string& name) {
  if (auto* p = find(name)) return *p;
  throw ContractError("unknown parameter: " + name);
}

template <typename T>
std::size_t ParamStore<T>::trainable_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) {
    if (p->trainable) n += p->value.size();
  }
  return n;
}

template <typename T>
std::size_t ParamStore<T>::buffer_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) {
    if (!p->trainable) n += p->value.size();
  }
  return n;
}

template <typename T>
void ParamStore<T>::zero_grad() {
  for (auto& p : params_) {
    if (!p->trainable) continue;
    p->grad.fill(T(0));
    p->has_grad = false;
  }
}

template class ParamStore<float>;
template class ParamStore<double>;

}  // namespace pgnn::nn
