#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ggcn/tensor.hpp"

namespace ggcn {

// Adam with bias correction over a fixed list of named parameters.
class Adam {
 public:
  explicit Adam(std::vector<std::pair<std::string, Tensor>> params, double beta1 = 0.9,
                double beta2 = 0.999, double eps = 1e-8)
      : params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps) {
    slots_.reserve(params_.size());
    for (const auto& [name, t] : params_) {
      (void)name;
      slots_.push_back(Slot{std::vector<double>(t.numel(), 0.0),
                            std::vector<double>(t.numel(), 0.0)});
    }
  }

  // Applies one update from the accumulated gradients. `grad_scale`
  // rescales them first (used to turn a summed batch gradient into a mean).
  void step(double lr, double grad_scale = 1.0) {
    ++step_;
    double correction1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
    double correction2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));
    for (std::size_t pi = 0; pi < params_.size(); ++pi) {
      const auto& name = params_[pi].first;
      Tensor& t = params_[pi].second;
      auto& values = t.values();
      const auto& grad = t.grad();
      Slot& slot = slots_[pi];
      for (std::size_t i = 0; i < values.size(); ++i) {
        double g = grad[i] * grad_scale;
        if (!std::isfinite(g)) {
          throw std::runtime_error("adam: non-finite gradient in " + name);
        }
        slot.m[i] = beta1_ * slot.m[i] + (1.0 - beta1_) * g;
        slot.v[i] = beta2_ * slot.v[i] + (1.0 - beta2_) * g * g;
        double m_hat = slot.m[i] / correction1;
        double v_hat = slot.v[i] / correction2;
        values[i] -= lr * m_hat / (std::sqrt(v_hat) + eps_);
      }
    }
  }

  void zero_grad() {
    for (auto& [name, t] : params_) {
      (void)name;
      t.zero_grad();
    }
  }

  std::uint64_t steps() const { return step_; }

 private:
  struct Slot {
    std::vector<double> m, v;
  };

  std::vector<std::pair<std::string, Tensor>> params_;
  std::vector<Slot> slots_;
  std::uint64_t step_ = 0;
  double beta1_, beta2_, eps_;
};

}  // namespace ggcn
