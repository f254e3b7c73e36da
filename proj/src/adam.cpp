#include "grec/adam.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace grec {

template <typename T>
void Adam<T>::step(std::span<Tensor<T>> params) {
  if (first_moment_.empty()) {
    for (const auto& p : params) {
      first_moment_.emplace_back(p.size(), T(0));
      second_moment_.emplace_back(p.size(), T(0));
    }
  }
  if (first_moment_.size() != params.size()) {
    throw std::invalid_argument("Adam: parameter list changed between steps");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].has_grad()) {
      throw std::logic_error("Adam: parameter " + std::to_string(i) +
                             " has no gradient");
    }
    if (first_moment_[i].size() != params[i].size()) {
      throw std::invalid_argument("Adam: parameter " + std::to_string(i) +
                                  " changed shape");
    }
  }

  ++step_;
  const T b1 = static_cast<T>(options_.beta1);
  const T b2 = static_cast<T>(options_.beta2);
  const T lr = static_cast<T>(options_.learning_rate);
  const T eps = static_cast<T>(options_.epsilon);
  const T correction1 = T(1) - static_cast<T>(std::pow(options_.beta1, step_));
  const T correction2 = T(1) - static_cast<T>(std::pow(options_.beta2, step_));

  for (std::size_t i = 0; i < params.size(); ++i) {
    auto value = params[i].mutable_data();
    auto grad = params[i].grad();
    auto& m = first_moment_[i];
    auto& v = second_moment_[i];
    for (std::size_t j = 0; j < value.size(); ++j) {
      const T g = grad[j];
      m[j] = b1 * m[j] + (T(1) - b1) * g;
      v[j] = b2 * v[j] + (T(1) - b2) * g * g;
      const T m_hat = m[j] / correction1;
      const T v_hat = v[j] / correction2;
      value[j] -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
  }
}

template class Adam<float>;
template class Adam<double>;

}  // namespace grec
