#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "grec/tensor.hpp"

namespace grec {

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias-corrected moments. Accumulators are created on the first
/// step and mirror the parameter shapes from then on.
template <typename T>
class Adam {
 public:
  explicit Adam(AdamOptions options = {}) : options_(options) {}

  // Every parameter must carry a populated gradient.
  void step(std::span<Tensor<T>> params);

  std::int64_t steps() const { return step_; }
  const AdamOptions& options() const { return options_; }
  void set_learning_rate(double lr) { options_.learning_rate = lr; }

 private:
  AdamOptions options_;
  std::int64_t step_ = 0;
  std::vector<std::vector<T>> first_moment_;
  std::vector<std::vector<T>> second_moment_;
};

extern template class Adam<float>;
extern template class Adam<double>;

}  // namespace grec
