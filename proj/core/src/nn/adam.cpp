#include "pgnn/nn/adam.hpp"

#include <cmath>

#include "pgnn/errors.hpp"

namespace pgnn::nn {

template <typename T>
AdamState<T> make_adam_state(const ParamStore<T>& params, AdamHyper hyper) {
  AdamState<T> state;
  state.hyper = hyper;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Shape s = params[i].trainable ? params[i].value.shape() : Shape{};
    state.first_moment.emplace_back(s);
    state.second_moment.emplace_back(s);
  }
  return state;
}

template <typename T>
void adam_step(ParamStore<T>& params, AdamState<T>& state) {
  if (state.first_moment.size() != params.size()) {
    throw ContractError("Adam state was built for a different parameter store");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& p = params[i];
    if (p.trainable && !p.has_grad) throw ContractError("parameter " + p.name + " has no gradient");
  }
  ++state.step;
  const auto& h = state.hyper;
  const double c1 = 1.0 - std::pow(h.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(h.beta2, static_cast<double>(state.step));
  const double step_size = h.lr / c1;
  const double sqrt_c2 = std::sqrt(c2);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    if (!p.trainable) continue;
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    for (std::size_t k = 0; k < p.value.size(); ++k) {
      const double g = p.grad[k];
      const double mk = h.beta1 * m[k] + (1.0 - h.beta1) * g;
      const double vk = h.beta2 * v[k] + (1.0 - h.beta2) * g * g;
      m[k] = T(mk);
      v[k] = T(vk);
      p.value[k] = T(p.value[k] - step_size * mk / (std::sqrt(vk) / sqrt_c2 + h.eps));
    }
  }
}

template AdamState<float> make_adam_state(const ParamStore<float>&, AdamHyper);
template AdamState<double> make_adam_state(const ParamStore<double>&, AdamHyper);
template void adam_step(ParamStore<float>&, AdamState<float>&);
template void adam_step(ParamStore<double>&, AdamState<double>&);

}  // namespace pgnn::nn
