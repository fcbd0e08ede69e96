#pragma once

#include <cstdint>
#include <vector>

#include "pgnn/nn/params.hpp"

namespace pgnn::nn {

struct AdamHyper {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename T>
struct AdamState {
  AdamHyper hyper;
  std::int64_t step = 0;
  std::vector<Tensor<T>> first_moment;   // aligned with the store's parameters
  std::vector<Tensor<T>> second_moment;
};

template <typename T>
AdamState<T> make_adam_state(const ParamStore<T>& params, AdamHyper hyper);

/// Bias-corrected Adam update of every trainable parameter. Throws
/// ContractError if a trainable parameter has no gradient from the last
/// backward pass.
template <typename T>
void adam_step(ParamStore<T>& params, AdamState<T>& state);

extern template AdamState<float> make_adam_state(const ParamStore<float>&, AdamHyper);
extern template AdamState<double> make_adam_state(const ParamStore<double>&, AdamHyper);
extern template void adam_step(ParamStore<float>&, AdamState<float>&);
extern template void adam_step(ParamStore<double>&, AdamState<double>&);

}  // namespace pgnn::nn
